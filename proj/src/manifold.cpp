#include "msino/manifold.hpp"

#include "msino/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>

namespace msino {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kCutMargin = 1e-8;
constexpr double kSmallAngle = 1e-4;
constexpr double kSphereTol = 1e-12;
constexpr double kSO3Tol = 1e-10;
constexpr double kReorthoThreshold = 1e-10;

using RowMat3 = Eigen::Matrix<double, 3, 3, Eigen::RowMajor>;

Eigen::VectorXd flatten(const Eigen::Matrix3d& R) {
  Eigen::VectorXd c(9);
  Eigen::Map<RowMat3>(c.data()) = R;
  return c;
}

void require_same_kind(const ManifoldPoint& p, const ManifoldPoint& q) {
  if (!(p.kind == q.kind)) {
    throw DomainError("points live on different manifolds: " + p.kind.name() + " vs " +
                      q.kind.name());
  }
}

void require_based_at(const TangentVector& v, const ManifoldPoint& p) {
  require_same_kind(v.base, p);
  if ((v.base.coords - p.coords).cwiseAbs().maxCoeff() > 1e-12) {
    throw DomainError("tangent vector is not based at the given point");
  }
}

// sin(t)/t and (1-cos t)/t^2 with series below kSmallAngle.
double sinc(double t) {
  if (t < kSmallAngle) {
    const double t2 = t * t;
    return 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
  }
  return std::sin(t) / t;
}

double one_minus_cos_over_sq(double t) {
  if (t < kSmallAngle) {
    const double t2 = t * t;
    return 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  }
  return (1.0 - std::cos(t)) / (t * t);
}

// t / sin(t)
double inv_sinc(double t) {
  if (t < kSmallAngle) {
    const double t2 = t * t;
    return 1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0;
  }
  return t / std::sin(t);
}

double sphere_angle(const Eigen::Vector3d& p, const Eigen::Vector3d& q) {
  return std::atan2(p.cross(q).norm(), p.dot(q));
}

Eigen::Matrix3d maybe_reorthonormalize(const Eigen::Matrix3d& R) {
  return orthogonality_defect(R) > kReorthoThreshold ? orthonormalize(R) : R;
}

}  // namespace

// ---------------------------------------------------------------------------
// ManifoldKind

ManifoldKind ManifoldKind::euclidean(int dim) {
  if (dim < 1) throw DomainError("Euclidean chart dimension must be >= 1");
  return ManifoldKind(Tag::EuclideanChart, dim);
}

int ManifoldKind::ambient_dim() const noexcept {
  switch (tag_) {
    case Tag::EuclideanChart: return dim_;
    case Tag::Sphere2: return 3;
    case Tag::SO3: return 9;
  }
  return 0;
}

int ManifoldKind::tangent_dim() const noexcept {
  switch (tag_) {
    case Tag::EuclideanChart: return dim_;
    case Tag::Sphere2: return 3;
    case Tag::SO3: return 3;
  }
  return 0;
}

double ManifoldKind::metric_scale() const noexcept {
  return tag_ == Tag::SO3 ? std::numbers::sqrt2 : 1.0;
}

double ManifoldKind::injectivity_radius() const noexcept {
  switch (tag_) {
    case Tag::EuclideanChart: return std::numeric_limits<double>::infinity();
    case Tag::Sphere2: return kPi;
    case Tag::SO3: return std::numbers::sqrt2 * kPi;
  }
  return 0.0;
}

std::string ManifoldKind::name() const {
  switch (tag_) {
    case Tag::EuclideanChart: return "euclidean(" + std::to_string(dim_) + ")";
    case Tag::Sphere2: return "sphere2";
    case Tag::SO3: return "so3";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// GeometryPackage

GeometryPackage GeometryPackage::defaults(const ManifoldKind& kind) {
  GeometryPackage g;
  switch (kind.tag()) {
    case ManifoldKind::Tag::EuclideanChart:
      // Unit cube: Neumann spectral gap pi^2.
      g.C = 1.0;
      g.diamU = std::sqrt(static_cast<double>(kind.intrinsic_dim()));
      g.kappa_poincare = kPi * kPi;
      g.P = 1.0 / kPi;
      break;
    case ManifoldKind::Tag::Sphere2:
      // Curvature bound K = 1, Jacobi estimate C = 1 + diam.
      g.diamU = kPi;
      g.C = 1.0 + g.diamU;
      g.kappa_poincare = 2.0;
      g.P = 1.0 / std::sqrt(2.0);
      break;
    case ManifoldKind::Tag::SO3:
      // Bi-invariant Frobenius metric: first nonzero Laplace eigenvalue is 1.
      g.C = 1.0;
      g.diamU = std::numbers::sqrt2 * kPi;
      g.kappa_poincare = 1.0;
      g.P = 1.0;
      break;
  }
  return g;
}

void GeometryPackage::validate(const ManifoldKind& kind) const {
  if (!(C > 0.0) || !(P > 0.0) || !(kappa_poincare > 0.0) || !(diamU >= 0.0)) {
    throw DomainError("geometry package constants must be positive");
  }
  if (kind.is_so3() && C != 1.0) {
    throw DomainError("SO(3) geometry package requires C = 1");
  }
}

// ---------------------------------------------------------------------------
// Points and tangents

bool satisfies_membership(const ManifoldPoint& p) {
  if (p.coords.size() != p.kind.ambient_dim()) return false;
  if (!p.coords.allFinite()) return false;
  switch (p.kind.tag()) {
    case ManifoldKind::Tag::EuclideanChart: return true;
    case ManifoldKind::Tag::Sphere2: return std::abs(p.coords.norm() - 1.0) <= kSphereTol;
    case ManifoldKind::Tag::SO3: {
      const Eigen::Matrix3d R = as_rotation(p);
      return orthogonality_defect(R) <= kSO3Tol && R.determinant() > 0.0;
    }
  }
  return false;
}

ManifoldPoint make_point(const ManifoldKind& kind, const Eigen::VectorXd& coords) {
  ManifoldPoint p{kind, coords};
  if (coords.size() != kind.ambient_dim()) {
    throw DomainError("point has " + std::to_string(coords.size()) + " coordinates, " +
                      kind.name() + " needs " + std::to_string(kind.ambient_dim()));
  }
  if (!satisfies_membership(p)) throw DomainError("point is not on " + kind.name());
  return p;
}

ManifoldPoint sphere_point(const Eigen::Vector3d& x) {
  const double n = x.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("cannot normalize a zero vector");
  return ManifoldPoint{ManifoldKind::sphere2(), x / n};
}

ManifoldPoint so3_point(const Eigen::Matrix3d& R) {
  return make_point(ManifoldKind::so3(), flatten(R));
}

Eigen::Matrix3d as_rotation(const ManifoldPoint& p) {
  if (!p.kind.is_so3() || p.coords.size() != 9) throw DomainError("not an SO(3) point");
  return Eigen::Map<const RowMat3>(p.coords.data());
}

TangentVector make_tangent(const ManifoldPoint& base, const Eigen::VectorXd& components) {
  if (components.size() != base.kind.tangent_dim()) {
    throw DomainError("tangent has wrong number of components for " + base.kind.name());
  }
  if (base.kind.is_sphere()) {
    const double radial = components.dot(base.coords);
    if (std::abs(radial) > 1e-10 * std::max(1.0, components.norm())) {
      throw DomainError("sphere tangent is not orthogonal to its base point");
    }
  }
  return TangentVector{base, components};
}

// ---------------------------------------------------------------------------
// SO(3)

Eigen::Matrix3d hat(const Eigen::Vector3d& w) {
  Eigen::Matrix3d S;
  // clang-format off
  S <<  0.0,  -w.z(),  w.y(),
        w.z(),  0.0,  -w.x(),
       -w.y(),  w.x(),  0.0;
  // clang-format on
  return S;
}

Eigen::Vector3d vee(const Eigen::Matrix3d& S) { return {S(2, 1), S(0, 2), S(1, 0)}; }

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w) {
  const double t = w.norm();
  const Eigen::Matrix3d W = hat(w);
  return Eigen::Matrix3d::Identity() + sinc(t) * W + one_minus_cos_over_sq(t) * (W * W);
}

double rotation_angle(const Eigen::Matrix3d& R) {
  const double s = 0.5 * vee(R - R.transpose()).norm();
  const double c = 0.5 * (R.trace() - 1.0);
  return std::atan2(s, c);
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& R) {
  const Eigen::Vector3d skew_part = vee(R - R.transpose());  // 2 sin(t) a
  const double s = 0.5 * skew_part.norm();
  const double c = 0.5 * (R.trace() - 1.0);
  const double t = std::atan2(s, c);
  if (t < 3.0) return 0.5 * inv_sinc(t) * skew_part;

  // Near pi the antisymmetric part vanishes; recover the axis from the
  // symmetric part (R + R^T)/2 - c I = (1 - c) a a^T.
  const Eigen::Matrix3d B = 0.5 * (R + R.transpose()) - c * Eigen::Matrix3d::Identity();
  Eigen::Index i = 0;
  B.diagonal().maxCoeff(&i);
  Eigen::Vector3d axis = B.col(i) / std::sqrt(B(i, i) * (1.0 - c));
  axis.normalize();
  if (axis.dot(skew_part) < 0.0) axis = -axis;
  return t * axis;
}

double orthogonality_defect(const Eigen::Matrix3d& R) {
  return (R.transpose() * R - Eigen::Matrix3d::Identity()).norm();
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& R) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU();
  const Eigen::Matrix3d V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) U.col(2) *= -1.0;
  return U * V.transpose();
}

// ---------------------------------------------------------------------------
// Riemannian operations

double inner(const TangentVector& u, const TangentVector& v) {
  require_same_kind(u.base, v.base);
  const double s = u.base.kind.metric_scale();
  return s * s * u.components.dot(v.components);
}

double norm(const TangentVector& v) { return v.base.kind.metric_scale() * v.components.norm(); }

ManifoldPoint exp_map(const ManifoldPoint& p, const TangentVector& v) {
  require_based_at(v, p);
  const double len = norm(v);
  if (len >= p.kind.injectivity_radius() - kCutMargin) {
    throw DomainError("tangent length exceeds the injectivity radius");
  }
  switch (p.kind.tag()) {
    case ManifoldKind::Tag::EuclideanChart:
      return ManifoldPoint{p.kind, p.coords + v.components};
    case ManifoldKind::Tag::Sphere2: {
      const double t = v.components.norm();
      Eigen::Vector3d q = std::cos(t) * p.coords + sinc(t) * v.components;
      q.normalize();
      return ManifoldPoint{p.kind, q};
    }
    case ManifoldKind::Tag::SO3: {
      const Eigen::Matrix3d R =
          maybe_reorthonormalize(as_rotation(p) * so3_exp(v.components.head<3>()));
      return ManifoldPoint{p.kind, flatten(R)};
    }
  }
  throw DomainError("unknown manifold");
}

TangentVector log_map(const ManifoldPoint& p, const ManifoldPoint& q) {
  require_same_kind(p, q);
  switch (p.kind.tag()) {
    case ManifoldKind::Tag::EuclideanChart:
      return TangentVector{p, q.coords - p.coords};
    case ManifoldKind::Tag::Sphere2: {
      const Eigen::Vector3d x = p.coords;
      const double c = x.dot(q.coords);
      const Eigen::Vector3d w = q.coords - c * x;
      const double t = std::atan2(w.norm(), c);
      if (t >= kPi - kCutMargin) throw DomainError("log map requested at the cut locus");
      Eigen::Vector3d v = inv_sinc(t) * w;
      v -= v.dot(x) * x;
      return TangentVector{p, v};
    }
    case ManifoldKind::Tag::SO3: {
      const Eigen::Matrix3d rel = as_rotation(p).transpose() * as_rotation(q);
      if (rotation_angle(rel) >= kPi - kCutMargin) {
        throw DomainError("log map requested at the cut locus");
      }
      return TangentVector{p, so3_log(rel)};
    }
  }
  throw DomainError("unknown manifold");
}

double geodesic_distance(const ManifoldPoint& p, const ManifoldPoint& q) {
  require_same_kind(p, q);
  switch (p.kind.tag()) {
    case ManifoldKind::Tag::EuclideanChart: return (q.coords - p.coords).norm();
    case ManifoldKind::Tag::Sphere2: return sphere_angle(p.coords, q.coords);
    case ManifoldKind::Tag::SO3:
      return std::numbers::sqrt2 * rotation_angle(as_rotation(p).transpose() * as_rotation(q));
  }
  throw DomainError("unknown manifold");
}

TangentVector parallel_transport(const ManifoldPoint& p, const ManifoldPoint& q,
                                 const TangentVector& v) {
  require_based_at(v, p);
  require_same_kind(p, q);
  if (p.coords == q.coords) return TangentVector{q, v.components};
  switch (p.kind.tag()) {
    case ManifoldKind::Tag::EuclideanChart:
      return TangentVector{q, v.components};
    case ManifoldKind::Tag::Sphere2: {
      const TangentVector dir = log_map(p, q);
      const double t = dir.components.norm();
      if (t == 0.0) return TangentVector{q, v.components};
      const Eigen::Vector3d e = dir.components / t;
      const Eigen::Vector3d x = p.coords;
      const Eigen::Vector3d u = v.components;
      const Eigen::Vector3d out = u + e.dot(u) * ((std::cos(t) - 1.0) * e - std::sin(t) * x);
      return TangentVector{q, out};
    }
    case ManifoldKind::Tag::SO3: {
      // Left translation R_q R_p^{-1} (R_p hat w) = R_q hat w.
      const Eigen::Matrix3d rel = as_rotation(p).transpose() * as_rotation(q);
      if (rotation_angle(rel) >= kPi - kCutMargin) {
        throw DomainError("transport requested at the cut locus");
      }
      return TangentVector{q, v.components};
    }
  }
  throw DomainError("unknown manifold");
}

TangentVector project_to_tangent(const ManifoldPoint& p, const Eigen::VectorXd& ambient) {
  if (ambient.size() != p.kind.ambient_dim()) {
    throw DomainError("ambient vector has wrong length for " + p.kind.name());
  }
  switch (p.kind.tag()) {
    case ManifoldKind::Tag::EuclideanChart:
      return TangentVector{p, ambient};
    case ManifoldKind::Tag::Sphere2: {
      const Eigen::Vector3d x = p.coords;
      const Eigen::Vector3d a = ambient;
      return TangentVector{p, a - a.dot(x) * x};
    }
    case ManifoldKind::Tag::SO3: {
      const Eigen::Matrix3d A = Eigen::Map<const RowMat3>(ambient.data());
      const Eigen::Matrix3d M = as_rotation(p).transpose() * A;
      return TangentVector{p, vee(0.5 * (M - M.transpose()))};
    }
  }
  throw DomainError("unknown manifold");
}

Eigen::MatrixXd tangent_projector(const ManifoldPoint& p) {
  const int n = p.kind.ambient_dim();
  Eigen::MatrixXd P(p.kind.tangent_dim(), n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < n; ++k) {
    e[k] = 1.0;
    P.col(k) = project_to_tangent(p, e).components;
    e[k] = 0.0;
  }
  return P;
}

std::vector<ManifoldPoint> sample_uniform(const ManifoldKind& kind, Rng& rng, std::size_t n) {
  if (n < 1) throw DomainError("sample_uniform needs n >= 1");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ManifoldPoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    switch (kind.tag()) {
      case ManifoldKind::Tag::EuclideanChart: {
        Eigen::VectorXd x(kind.intrinsic_dim());
        for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = unit(rng);
        out.push_back(ManifoldPoint{kind, x});
        break;
      }
      case ManifoldKind::Tag::Sphere2: {
        Eigen::Vector3d x;
        do {
          x = {gauss(rng), gauss(rng), gauss(rng)};
        } while (x.norm() < 1e-12);
        out.push_back(sphere_point(x));
        break;
      }
      case ManifoldKind::Tag::SO3: {
        Eigen::Vector3d w(gauss(rng), gauss(rng), gauss(rng));
        const double limit = kPi - 0.1;
        if (w.norm() > limit) w *= limit / w.norm();
        out.push_back(ManifoldPoint{kind, flatten(so3_exp(w))});
        break;
      }
    }
  }
  return out;
}

ManifoldPoint frechet_mean(std::span<const ManifoldPoint> points, int max_iter, double tol) {
  if (points.empty()) throw DomainError("Frechet mean of an empty set");
  const ManifoldKind kind = points.front().kind;
  if (kind.is_euclidean()) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(kind.ambient_dim());
    for (const auto& p : points) m += p.coords;
    return ManifoldPoint{kind, m / static_cast<double>(points.size())};
  }

  ManifoldPoint x = points.front();
  if (kind.is_sphere()) {
    Eigen::Vector3d m = Eigen::Vector3d::Zero();
    for (const auto& p : points) m += p.coords;
    if (m.norm() > 1e-8) x = sphere_point(m);
  }
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd step = Eigen::VectorXd::Zero(kind.tangent_dim());
    int used = 0;
    for (const auto& p : points) {
      try {
        step += log_map(x, p).components;
        ++used;
      } catch (const DomainError&) {
        // on the cut locus of the current iterate
      }
    }
    if (used == 0) break;
    step /= static_cast<double>(used);
    const TangentVector v{x, step};
    if (norm(v) < tol) break;
    x = exp_map(x, v);
  }
  return x;
}

}  // namespace msino
