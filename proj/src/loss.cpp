#include "msino/loss.hpp"

#include "msino/errors.hpp"
#include "msino/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace msino {

std::shared_ptr<const MeshContext> MeshContext::build(TriMesh mesh) {
  auto ctx = std::make_shared<MeshContext>();
  validate(mesh);
  ctx->op = build_laplacian(mesh);
  ctx->normals = vertex_normals(mesh);
  ctx->M = area_normalized_matrix(ctx->op);
  ctx->mesh = std::move(mesh);
  return ctx;
}

LabeledBatch LabeledBatch::subset(std::span<const int> indices) const {
  LabeledBatch out;
  out.kind = kind;
  out.mesh = mesh;
  out.values.resize(static_cast<Eigen::Index>(indices.size()), values.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const int i = indices[r];
    out.points.push_back(points[i]);
    out.values.row(static_cast<Eigen::Index>(r)) = values.row(i);
    if (has_gradient_labels()) out.grad_labels.push_back(grad_labels[i]);
    if (mesh) out.vertex_ids.push_back(vertex_ids[i]);
  }
  return out;
}

void LabeledBatch::validate() const {
  const int B = size();
  if (B < 1) throw ShapeError("empty batch");
  if (values.rows() != B) throw ShapeError("value labels do not match the point count");
  if (has_gradient_labels() && static_cast<int>(grad_labels.size()) != B) {
    throw ShapeError("gradient labels do not match the point count");
  }
  if (mesh && static_cast<int>(vertex_ids.size()) != B) {
    throw ShapeError("vertex ids do not match the point count");
  }
  for (const auto& p : points) {
    if (!(p.kind == kind)) throw ShapeError("batch mixes manifold kinds");
  }
}

void LossWeights::validate() const {
  if (!(lambda >= 0.0) || !(beta >= 0.0)) throw ValidationError("loss weights must be >= 0");
}

Eigen::MatrixXd sample_projector(const LabeledBatch& batch, int i, double* metric_scale) {
  if (batch.mesh) {
    const Eigen::Vector3d n = batch.mesh->normals.row(batch.vertex_ids[i]).transpose();
    if (metric_scale) *metric_scale = 1.0;
    return Eigen::Matrix3d::Identity() - n * n.transpose();
  }
  if (metric_scale) *metric_scale = batch.kind.metric_scale();
  return tangent_projector(batch.points[i]);
}

Eigen::MatrixXd intrinsic_gradient(const NetParams& params, const LabeledBatch& batch, int i) {
  const ForwardCache c = forward(params, batch.points[i].coords, true);
  const Eigen::MatrixXd P = sample_projector(batch, i, nullptr);
  return c.input_jacobian() * P.transpose();
}

namespace {

struct SampleResult {
  Eigen::VectorXd r_value;
  Eigen::VectorXd r_grad;
  Eigen::VectorXd grad_value;
  Eigen::VectorXd grad_sobolev;
};

// Rows of A^{-1} W touched by the penalty and the vertices they reach.
struct PenaltyStencil {
  std::vector<int> rows;
  std::vector<int> support;
};

PenaltyStencil penalty_stencil(const LabeledBatch& batch, bool full_mesh) {
  const auto& M = batch.mesh->M;
  PenaltyStencil s;
  if (full_mesh) {
    s.rows.resize(M.rows());
    for (int i = 0; i < M.rows(); ++i) s.rows[i] = i;
    s.support = s.rows;
    return s;
  }
  s.rows = batch.vertex_ids;
  std::set<int> support;
  for (int r : s.rows) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(M, r); it; ++it) {
      support.insert(static_cast<int>(it.col()));
    }
  }
  s.support.assign(support.begin(), support.end());
  return s;
}

void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw NonFiniteError(std::string(what) + " is not finite");
}

}  // namespace

LossBreakdown evaluate_loss(const NetParams& params, const LabeledBatch& batch,
                            const LossWeights& weights, const LossOptions& options) {
  weights.validate();
  batch.validate();
  if (weights.lambda > 0.0 && !batch.has_gradient_labels()) {
    throw MissingLabelError("lambda > 0 requires gradient labels");
  }
  if (weights.beta > 0.0 && !batch.mesh) {
    throw MissingLabelError("beta > 0 requires a mesh context");
  }
  const int B = batch.size();
  const int m = params.output_dim();
  const int p = params.num_params();
  if (batch.values.cols() != m) throw ShapeError("value labels have the wrong output dimension");
  const bool sobolev = batch.has_gradient_labels();
  const bool grad = options.need_gradient;

  std::vector<SampleResult> samples(B);
  parallel_for(B, [&](int i) {
    SampleResult& s = samples[i];
    const ForwardCache c = forward(params, batch.points[i].coords, sobolev);
    if (!c.value().allFinite()) throw NonFiniteError("network output is not finite");
    s.r_value = c.value() - batch.values.row(i).transpose();
    Eigen::MatrixXd J_bar;
    if (sobolev) {
      double scale = 1.0;
      const Eigen::MatrixXd P = sample_projector(batch, i, &scale);
      const Eigen::MatrixXd& g = batch.grad_labels[i];
      if (g.rows() != m || g.cols() != P.rows()) throw ShapeError("gradient label has wrong shape");
      // Row k: metric-scaled residual of the k-th output's intrinsic gradient.
      const Eigen::MatrixXd R = scale * (c.input_jacobian() * P.transpose() - g);
      s.r_grad.resize(R.size());
      for (int k = 0; k < R.rows(); ++k) s.r_grad.segment(k * R.cols(), R.cols()) = R.row(k);
      if (grad) J_bar = (2.0 * scale) * R * P;
    }
    if (grad) {
      s.grad_value = Eigen::VectorXd::Zero(p);
      vjp(params, c, 2.0 * s.r_value, Eigen::MatrixXd(), s.grad_value);
      if (sobolev) {
        s.grad_sobolev = Eigen::VectorXd::Zero(p);
        vjp(params, c, Eigen::VectorXd::Zero(m), J_bar, s.grad_sobolev);
      }
    }
  });

  LossBreakdown out;
  out.r_value.resize(B, m);
  out.value_sq.resize(B);
  out.grad_sq = Eigen::VectorXd::Zero(B);
  if (sobolev) out.r_grad.resize(B, samples[0].r_grad.size());
  if (grad) {
    out.grad_value = Eigen::VectorXd::Zero(p);
    out.grad_sobolev = Eigen::VectorXd::Zero(p);
    out.grad_laplace = Eigen::VectorXd::Zero(p);
  }
  if (grad && options.per_sample_gradients) {
    out.per_sample_value_grad.resize(p, B);
    out.per_sample_sobolev_grad = Eigen::MatrixXd::Zero(p, B);
  }
  for (int i = 0; i < B; ++i) {
    const SampleResult& s = samples[i];
    out.r_value.row(i) = s.r_value.transpose();
    out.value_sq[i] = s.r_value.squaredNorm();
    out.value_term += out.value_sq[i];
    if (sobolev) {
      out.r_grad.row(i) = s.r_grad.transpose();
      out.grad_sq[i] = s.r_grad.squaredNorm();
      out.sobolev_term += out.grad_sq[i];
    }
    if (grad) {
      out.grad_value += s.grad_value;
      if (sobolev) out.grad_sobolev += s.grad_sobolev;
      if (options.per_sample_gradients) {
        out.per_sample_value_grad.col(i) = s.grad_value;
        if (sobolev) out.per_sample_sobolev_grad.col(i) = s.grad_sobolev;
      }
    }
  }
  out.value_term /= B;
  out.sobolev_term /= B;
  if (grad) {
    out.grad_value /= B;
    out.grad_sobolev /= B;
  }

  if (batch.mesh) {
    const PenaltyStencil st = penalty_stencil(batch, options.beta_full_mesh);
    const auto& M = batch.mesh->M;
    const int n = static_cast<int>(M.rows());
    std::vector<ForwardCache> caches(st.support.size());
    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(n, m);
    parallel_for(static_cast<int>(st.support.size()), [&](int j) {
      const int v = st.support[j];
      caches[j] = forward(params, batch.mesh->mesh.vertices.row(v).transpose(), false);
    });
    for (std::size_t j = 0; j < st.support.size(); ++j) {
      U.row(st.support[j]) = caches[j].value().transpose();
    }
    const double rows = static_cast<double>(st.rows.size());
    Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(n, m);
    for (int r : st.rows) {
      Eigen::RowVectorXd lap = Eigen::RowVectorXd::Zero(m);
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(M, r); it; ++it) {
        lap += it.value() * U.row(it.col());
      }
      out.laplace_term += lap.squaredNorm();
      if (grad) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(M, r); it; ++it) {
          seed.row(it.col()) += (2.0 / rows) * it.value() * lap;
        }
      }
    }
    out.laplace_term /= rows;
    if (grad) {
      std::vector<Eigen::VectorXd> parts(st.support.size());
      parallel_for(static_cast<int>(st.support.size()), [&](int j) {
        parts[j] = Eigen::VectorXd::Zero(p);
        vjp(params, caches[j], seed.row(st.support[j]).transpose(), Eigen::MatrixXd(), parts[j]);
      });
      for (const auto& part : parts) out.grad_laplace += part;
    }
  }

  reweight(out, weights);
  check_finite(out.total, "loss");
  if (grad && !out.grad_theta.allFinite()) throw NonFiniteError("loss gradient is not finite");
  return out;
}

void reweight(LossBreakdown& bd, const LossWeights& weights) {
  bd.total = bd.value_term + weights.lambda * bd.sobolev_term + weights.beta * bd.laplace_term;
  if (bd.grad_value.size() > 0) {
    bd.grad_theta = bd.grad_value + weights.lambda * bd.grad_sobolev +
                    weights.beta * bd.grad_laplace;
  }
  if (bd.per_sample_value_grad.size() > 0) {
    bd.per_sample_grad = bd.per_sample_value_grad + weights.lambda * bd.per_sample_sobolev_grad;
  }
}

ResidualSystem stacked_residuals(const NetParams& params, const LabeledBatch& batch,
                                 double lambda) {
  batch.validate();
  const int B = batch.size(), m = params.output_dim(), p = params.num_params();
  const bool sobolev = lambda > 0.0;
  if (sobolev && !batch.has_gradient_labels()) {
    throw MissingLabelError("lambda > 0 requires gradient labels");
  }
  double probe_scale = 1.0;
  const int t = sobolev ? static_cast<int>(sample_projector(batch, 0, &probe_scale).rows()) : 0;
  const int per = m + (sobolev ? m * t : 0);
  ResidualSystem sys;
  sys.A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(B) * per, p);
  sys.r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(B) * per);
  const double w = 1.0 / std::sqrt(static_cast<double>(B));
  parallel_for(B, [&](int i) {
    const ForwardCache c = forward(params, batch.points[i].coords, sobolev);
    const Eigen::Index base = static_cast<Eigen::Index>(i) * per;
    Eigen::VectorXd g(p);
    for (int k = 0; k < m; ++k) {
      g.setZero();
      vjp(params, c, Eigen::VectorXd::Unit(m, k), Eigen::MatrixXd(), g);
      sys.A.row(base + k) = w * g.transpose();
      sys.r[base + k] = w * (c.value()[k] - batch.values(i, k));
    }
    if (!sobolev) return;
    double scale = 1.0;
    const Eigen::MatrixXd P = sample_projector(batch, i, &scale);
    const Eigen::MatrixXd R = scale * (c.input_jacobian() * P.transpose() - batch.grad_labels[i]);
    const double ws = w * std::sqrt(lambda);
    for (int k = 0; k < m; ++k) {
      for (int a = 0; a < t; ++a) {
        Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(m, params.input_dim());
        seed.row(k) = scale * P.row(a);
        g.setZero();
        vjp(params, c, Eigen::VectorXd::Zero(m), seed, g);
        const Eigen::Index row = base + m + k * t + a;
        sys.A.row(row) = ws * g.transpose();
        sys.r[row] = ws * R(k, a);
      }
    }
  });
  return sys;
}

Eigen::VectorXd laplace_gradient_closed_form(const NetParams& params, const LabeledBatch& batch) {
  if (!batch.mesh) throw MissingLabelError("penalty gradient needs a mesh context");
  const auto& ctx = *batch.mesh;
  const int n = ctx.mesh.num_vertices(), m = params.output_dim(), p = params.num_params();
  Eigen::MatrixXd U(n, m);
  std::vector<Eigen::MatrixXd> jac(n);
  for (int v = 0; v < n; ++v) {
    const EvalBundle e = evaluate(params, Eigen::VectorXd(ctx.mesh.vertices.row(v).transpose()),
                                  EvalNeeds{false, true, false});
    U.row(v) = e.value.transpose();
    jac[v] = e.param_jacobian_value;
  }
  const Eigen::SparseMatrix<double> M = ctx.M;
  const Eigen::MatrixXd G = squared_laplacian_gradient(M, U, batch.vertex_ids);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p);
  for (int v = 0; v < n; ++v) out += jac[v].transpose() * G.row(v).transpose();
  return out;
}

double l_sob(const NetParams& params, const GeometryPackage& geo, double lambda) {
  return geo.C * (1.0 + lambda) * spectral_bound(params);
}

double l_sob_so3(const NetParams& params, double lambda,
                 const std::vector<Eigen::VectorXd>& probes) {
  return (1.0 + lambda) * frobenius_jacobian(params, probes).mean_sq;
}

double pl_lower_bound(const GeometryPackage& geo, double lambda_max) {
  return geo.kappa_poincare / (geo.C * geo.C * (1.0 + lambda_max) * geo.P * geo.P);
}

}  // namespace msino
