// Variance split between sampling noise and transport discrepancy.

#include "msino/errors.hpp"
#include "msino/optim.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace msino {

namespace {

double spectral_norm(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  return svd.singularValues()[0];
}

// Rotation taking unit vector a to unit vector b about their common normal.
Eigen::Matrix3d minimal_rotation(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return Eigen::Quaterniond::FromTwoVectors(a, b).toRotationMatrix();
}

int mesh_medoid(const LabeledBatch& batch) {
  const int B = batch.size();
  int best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int i = 0; i < B; ++i) {
    double cost = 0.0;
    for (int j = 0; j < B; ++j) cost += (batch.points[i].coords - batch.points[j].coords).squaredNorm();
    if (cost < best_cost) {
      best_cost = cost;
      best = i;
    }
  }
  return best;
}

double batch_diameter(const LabeledBatch& batch) {
  double diam = 0.0;
  for (int i = 0; i < batch.size(); ++i) {
    for (int j = i + 1; j < batch.size(); ++j) {
      const double d = batch.mesh
                           ? (batch.points[i].coords - batch.points[j].coords).norm()
                           : geodesic_distance(batch.points[i], batch.points[j]);
      diam = std::max(diam, d);
    }
  }
  return diam;
}

}  // namespace

NoiseSplit noise_split(const NetParams& params, const LabeledBatch& batch,
                       const LossWeights& weights, const GeometryPackage& geo, double S) {
  const int B = batch.size();
  if (B < 2) throw ShapeError("noise_split needs at least two samples");
  NoiseSplit out;

  LossOptions opts;
  opts.per_sample_gradients = true;
  LossWeights w = weights;
  if (!batch.has_gradient_labels()) w.lambda = 0.0;
  const LossBreakdown bd = evaluate_loss(params, batch, w, opts);
  const Eigen::VectorXd mean = bd.per_sample_grad.rowwise().mean();
  out.sigma_sample = (bd.per_sample_grad.colwise() - mean).squaredNorm() / (B - 1);

  out.diameter = batch_diameter(batch);
  out.bound = geo.C * S * out.diameter;

  const int m = params.output_dim();
  if (batch.kind.is_euclidean() && !batch.mesh) return out;  // flat transport is the identity

  std::vector<Eigen::MatrixXd> grads(B);
  for (int i = 0; i < B; ++i) grads[i] = intrinsic_gradient(params, batch, i);
  const int t = static_cast<int>(grads[0].cols());
  Eigen::MatrixXd plain = Eigen::MatrixXd::Zero(m, t);
  Eigen::MatrixXd moved = Eigen::MatrixXd::Zero(m, t);
  int used = 0;

  if (batch.mesh) {
    const int ref = mesh_medoid(batch);
    const Eigen::Vector3d n_ref = batch.mesh->normals.row(batch.vertex_ids[ref]).transpose();
    for (int i = 0; i < B; ++i) {
      const Eigen::Vector3d n_i = batch.mesh->normals.row(batch.vertex_ids[i]).transpose();
      const Eigen::Matrix3d R = minimal_rotation(n_i, n_ref);
      plain += grads[i];
      moved += grads[i] * R.transpose();
      ++used;
    }
  } else {
    const ManifoldPoint ref = frechet_mean(batch.points);
    const double margin = batch.kind.injectivity_radius() - 1e-8;
    for (int i = 0; i < B; ++i) {
      if (geodesic_distance(batch.points[i], ref) >= margin) continue;
      plain += grads[i];
      for (int k = 0; k < m; ++k) {
        const TangentVector v = make_tangent(batch.points[i], grads[i].row(k).transpose());
        moved.row(k) += parallel_transport(batch.points[i], ref, v).components.transpose();
      }
      ++used;
    }
  }
  if (used == 0) return out;
  const double scale = batch.mesh ? 1.0 : batch.kind.metric_scale();
  out.sigma_transport = scale * spectral_norm((moved - plain) / used);
  return out;
}

}  // namespace msino
