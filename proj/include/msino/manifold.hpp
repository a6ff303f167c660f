#pragma once

// Geometry kernels on Euclidean charts, the unit sphere S^2 and SO(3).
//
// Representation conventions:
//  * EuclideanChart(d): points and tangents are plain d-vectors.
//  * Sphere2: points are unit 3-vectors, tangents are ambient 3-vectors
//    orthogonal to the base point.
//  * SO3: points are rotation matrices stored row-major in 9 coordinates;
//    a tangent at R is R * hat(w) and is stored through its body coordinates
//    w (3 numbers). The metric is the Frobenius one, so |v|_g = sqrt(2)|w|
//    and d(R1, R2) = |log(R1^T R2)|_F = sqrt(2) * angle(R1^T R2).

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace msino {

using Rng = std::mt19937_64;

class ManifoldKind {
 public:
  enum class Tag { EuclideanChart, Sphere2, SO3 };

  static ManifoldKind euclidean(int dim);
  static ManifoldKind sphere2() { return ManifoldKind(Tag::Sphere2, 2); }
  static ManifoldKind so3() { return ManifoldKind(Tag::SO3, 3); }

  Tag tag() const noexcept { return tag_; }
  bool is_euclidean() const noexcept { return tag_ == Tag::EuclideanChart; }
  bool is_sphere() const noexcept { return tag_ == Tag::Sphere2; }
  bool is_so3() const noexcept { return tag_ == Tag::SO3; }

  /// Manifold dimension.
  int intrinsic_dim() const noexcept { return dim_; }
  /// Length of ManifoldPoint::coords.
  int ambient_dim() const noexcept;
  /// Length of TangentVector::components.
  int tangent_dim() const noexcept;
  /// Factor turning stored tangent components into an orthonormal-equivalent
  /// vector: |v|_g = metric_scale() * |components|.
  double metric_scale() const noexcept;
  /// Injectivity radius in geodesic distance units.
  double injectivity_radius() const noexcept;

  std::string name() const;

  friend bool operator==(const ManifoldKind& a, const ManifoldKind& b) {
    return a.tag_ == b.tag_ && a.dim_ == b.dim_;
  }

 private:
  ManifoldKind(Tag tag, int dim) : tag_(tag), dim_(dim) {}
  Tag tag_;
  int dim_;
};

struct ManifoldPoint {
  ManifoldKind kind;
  Eigen::VectorXd coords;
};

struct TangentVector {
  ManifoldPoint base;
  Eigen::VectorXd components;
};

/// Geometry constants: C(M,g), the Poincare constant P of the working
/// domain, its diameter and the spectral gap kappa.
struct GeometryPackage {
  double C = 1.0;
  double P = 1.0;
  double diamU = 0.0;
  double kappa_poincare = 1.0;

  /// Pinned conventions per manifold kind (see README).
  static GeometryPackage defaults(const ManifoldKind& kind);
  /// Throws DomainError when a field violates its invariant.
  void validate(const ManifoldKind& kind) const;
};

// Point construction. All of these validate membership and throw DomainError.
ManifoldPoint make_point(const ManifoldKind& kind, const Eigen::VectorXd& coords);
ManifoldPoint sphere_point(const Eigen::Vector3d& x);  // normalizes x
ManifoldPoint so3_point(const Eigen::Matrix3d& R);
Eigen::Matrix3d as_rotation(const ManifoldPoint& p);
bool satisfies_membership(const ManifoldPoint& p);

TangentVector make_tangent(const ManifoldPoint& base, const Eigen::VectorXd& components);

// SO(3) group helpers.
Eigen::Matrix3d hat(const Eigen::Vector3d& w);
Eigen::Vector3d vee(const Eigen::Matrix3d& S);
/// Rodrigues formula with a 4th-order series below |w| = 1e-4.
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w);
/// Principal logarithm (angle in [0, pi]); stable near 0 and near pi.
Eigen::Vector3d so3_log(const Eigen::Matrix3d& R);
double rotation_angle(const Eigen::Matrix3d& R);
/// Closest rotation in Frobenius norm (polar factor).
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& R);
double orthogonality_defect(const Eigen::Matrix3d& R);

// Riemannian structure.
double inner(const TangentVector& u, const TangentVector& v);
double norm(const TangentVector& v);

ManifoldPoint exp_map(const ManifoldPoint& p, const TangentVector& v);
TangentVector log_map(const ManifoldPoint& p, const ManifoldPoint& q);
double geodesic_distance(const ManifoldPoint& p, const ManifoldPoint& q);
TangentVector parallel_transport(const ManifoldPoint& p, const ManifoldPoint& q,
                                 const TangentVector& v);

/// Converts an ambient (chart) derivative into the intrinsic gradient.
/// Ambient length is ambient_dim(): 3 for Sphere2, 9 (row-major matrix) for SO3.
TangentVector project_to_tangent(const ManifoldPoint& p, const Eigen::VectorXd& ambient);
/// Matrix form of project_to_tangent: tangent_dim() x ambient_dim().
Eigen::MatrixXd tangent_projector(const ManifoldPoint& p);

std::vector<ManifoldPoint> sample_uniform(const ManifoldKind& kind, Rng& rng, std::size_t n);

/// Karcher mean by fixed-point iteration on the log map. Points sitting on
/// the cut locus of the current iterate are skipped.
ManifoldPoint frechet_mean(std::span<const ManifoldPoint> points, int max_iter = 100,
                           double tol = 1e-12);

}  // namespace msino
