#pragma once

// The Sobolev-informed loss on a manifold: squared value residuals, squared
// intrinsic gradient residuals (compared at the sample's own point) and a
// squared discrete Laplacian penalty, all as batch means.

#include "msino/manifold.hpp"
#include "msino/mesh.hpp"
#include "msino/net.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <memory>
#include <span>
#include <vector>

namespace msino {

/// Mesh carrying the Laplacian penalty. Samples are vertices; their network
/// input is the vertex position and their tangent plane is given by the
/// area-weighted vertex normal.
struct MeshContext {
  TriMesh mesh;
  LaplaceOperator op;
  Eigen::MatrixX3d normals;
  Eigen::SparseMatrix<double, Eigen::RowMajor> M;  // A^{-1} W

  static std::shared_ptr<const MeshContext> build(TriMesh mesh);
};

struct LabeledBatch {
  ManifoldKind kind = ManifoldKind::euclidean(1);
  std::vector<ManifoldPoint> points;
  Eigen::MatrixXd values;  // B x m
  /// Empty when the batch has no gradient labels; otherwise one m x t matrix
  /// per point whose rows are tangent vectors (t = kind.tangent_dim(), or 3
  /// for mesh vertices).
  std::vector<Eigen::MatrixXd> grad_labels;
  std::shared_ptr<const MeshContext> mesh;
  std::vector<int> vertex_ids;  // parallel to points when mesh is set

  int size() const noexcept { return static_cast<int>(points.size()); }
  bool has_gradient_labels() const noexcept { return !grad_labels.empty(); }
  LabeledBatch subset(std::span<const int> indices) const;
  /// Throws ShapeError on inconsistent lengths.
  void validate() const;
};

struct LossWeights {
  double lambda = 0.0;
  double beta = 0.0;
  void validate() const;  // ValidationError on negative weights
};

struct LossOptions {
  bool need_gradient = true;
  /// Keep each sample's parameter-gradient contribution (p x B).
  bool per_sample_gradients = false;
  /// Evaluate the Laplacian penalty over every mesh vertex instead of the
  /// batch vertices.
  bool beta_full_mesh = false;
};

struct LossBreakdown {
  double total = 0.0;
  double value_term = 0.0;
  double sobolev_term = 0.0;  // unweighted
  double laplace_term = 0.0;  // unweighted
  Eigen::VectorXd grad_theta;
  // Unweighted gradients of the three terms.
  Eigen::VectorXd grad_value;
  Eigen::VectorXd grad_sobolev;
  Eigen::VectorXd grad_laplace;
  Eigen::MatrixXd r_value;  // B x m
  Eigen::MatrixXd r_grad;   // B x (m * t), metric-scaled
  Eigen::VectorXd value_sq;  // per-sample |r_value_i|^2
  Eigen::VectorXd grad_sq;   // per-sample |r_grad_i|^2
  /// Column i holds the gradient of sample i's value and weighted Sobolev
  /// terms; their mean plus beta times the penalty gradient is grad_theta.
  Eigen::MatrixXd per_sample_grad;
  Eigen::MatrixXd per_sample_value_grad;
  Eigen::MatrixXd per_sample_sobolev_grad;
};

/// Recomputes total, grad_theta and per_sample_grad for new weights.
void reweight(LossBreakdown& bd, const LossWeights& weights);

/// Throws MissingLabelError when lambda > 0 without gradient labels or
/// beta > 0 without a mesh, NonFiniteError on non-finite results.
LossBreakdown evaluate_loss(const NetParams& params, const LabeledBatch& batch,
                            const LossWeights& weights, const LossOptions& options = {});

/// Tangent-space projector and metric scale used for a sample.
Eigen::MatrixXd sample_projector(const LabeledBatch& batch, int i, double* metric_scale);

/// Predicted intrinsic gradient (m x t) of the network at sample i.
Eigen::MatrixXd intrinsic_gradient(const NetParams& params, const LabeledBatch& batch, int i);

/// Stacked residual system of the value and Sobolev terms:
/// value + lambda * sobolev = |r|^2 with Jacobian A = dr/dtheta.
struct ResidualSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd r;
};
ResidualSystem stacked_residuals(const NetParams& params, const LabeledBatch& batch,
                                 double lambda);

/// Penalty gradient assembled from per-vertex parameter Jacobians and the
/// field-level closed form (2/B) M_rows^T (M U)_rows.
Eigen::VectorXd laplace_gradient_closed_form(const NetParams& params, const LabeledBatch& batch);

/// C (1 + lambda) S(theta) with the layer-norm product S.
double l_sob(const NetParams& params, const GeometryPackage& geo, double lambda);
/// (1 + lambda) * mean |J_theta u|_F^2 over a probe batch.
double l_sob_so3(const NetParams& params, double lambda,
                 const std::vector<Eigen::VectorXd>& probes);

/// kappa / (C^2 (1 + lambda_max) P^2).
double pl_lower_bound(const GeometryPackage& geo, double lambda_max);

}  // namespace msino
