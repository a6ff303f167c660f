#include "msino/errors.hpp"
#include "msino/optim.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace msino {

GaussNewtonResult gauss_newton_step(const NetParams& params, const LabeledBatch& batch,
                                    const LossWeights& weights, const NewtonConfig& cfg) {
  const double lambda = batch.has_gradient_labels() ? weights.lambda : 0.0;
  const ResidualSystem sys = stacked_residuals(params, batch, lambda);
  const int p = params.num_params();
  const Eigen::MatrixXd AtA = sys.A.transpose() * sys.A;
  const Eigen::MatrixXd N = AtA + cfg.gn_damping * Eigen::MatrixXd::Identity(p, p);
  const Eigen::VectorXd rhs = -(sys.A.transpose() * sys.r);

  GaussNewtonResult out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(AtA, Eigen::EigenvaluesOnly);
  out.sigma_min = std::sqrt(std::max(0.0, es.eigenvalues()[0]));
  if (rhs.norm() == 0.0) {
    out.delta = Eigen::VectorXd::Zero(p);
    out.rcond = 1.0;
    return out;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(N);
  out.rcond = ldlt.rcond();
  if (ldlt.info() != Eigen::Success || !(out.rcond >= 1e-14)) {
    throw SingularSystemError("Gauss-Newton normal matrix is singular (rcond " +
                              std::to_string(out.rcond) + ")");
  }
  out.delta = ldlt.solve(rhs);
  out.delta += ldlt.solve(rhs - N * out.delta);
  out.solve_residual = (N * out.delta - rhs).norm() / rhs.norm();
  return out;
}

HessianResult finite_difference_hessian(const NetParams& params, const LabeledBatch& batch,
                                        const LossWeights& weights, double step,
                                        const LossOptions& options) {
  const int p = params.num_params();
  HessianResult out;
  out.H.resize(p, p);
  NetParams probe = params;
  for (int j = 0; j < p; ++j) {
    probe.theta[j] = params.theta[j] + step;
    const Eigen::VectorXd gp = evaluate_loss(probe, batch, weights, options).grad_theta;
    probe.theta[j] = params.theta[j] - step;
    const Eigen::VectorXd gm = evaluate_loss(probe, batch, weights, options).grad_theta;
    probe.theta[j] = params.theta[j];
    out.H.col(j) = (gp - gm) / (2.0 * step);
  }
  const double scale = out.H.norm();
  out.asymmetry = scale > 0.0 ? (out.H - out.H.transpose()).norm() / scale : 0.0;
  out.H = 0.5 * (out.H + out.H.transpose());
  return out;
}

NewtonResult newton_refine(const NetParams& params_tilde, const LabeledBatch& batch,
                           const LossWeights& weights, const NewtonConfig& cfg) {
  const HessianResult hr = finite_difference_hessian(params_tilde, batch, weights,
                                                     cfg.hessian_fd_step);
  const Eigen::VectorXd g = evaluate_loss(params_tilde, batch, weights).grad_theta;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hr.H);
  if (es.info() != Eigen::Success) throw ConvergenceError("Hessian eigensolver failed");
  NewtonResult out;
  out.asymmetry = hr.asymmetry;
  out.lambda_min = es.eigenvalues()[0];
  if (out.lambda_min < 1e-10) {
    out.shift = 1e-10 - out.lambda_min;
    if (out.shift > 1e-2) {
      throw IndefiniteHessianError(out.lambda_min,
                                   "Hessian smallest eigenvalue " +
                                       std::to_string(out.lambda_min) +
                                       " needs a shift beyond 1e-2");
    }
  }
  const Eigen::VectorXd inv = (es.eigenvalues().array() + out.shift).inverse();
  out.delta = es.eigenvectors() * inv.asDiagonal() * (es.eigenvectors().transpose() * g);
  return out;
}

NewtonIterate two_step_newton(TrainState& state, const LabeledBatch& batch,
                              const LossWeights& weights, const GeometryPackage& geo,
                              const NewtonConfig& cfg, const SgdOptions& opts,
                              const Eigen::VectorXd* theta_star) {
  NewtonIterate it;
  const NetParams start = state.params;
  const LossBreakdown bd0 = evaluate_loss(start, batch, weights, opts.loss);
  it.loss_before = bd0.total;
  if (theta_star) it.error_before = (start.theta - *theta_star).norm();
  const double L = smoothness_constant(start, geo, weights.lambda, opts);

  // (S1) damped Gauss-Newton with backtracking.
  const GaussNewtonResult gn = gauss_newton_step(start, batch, weights, cfg);
  it.sigma_min = gn.sigma_min;
  const double slope = bd0.grad_theta.dot(gn.delta);
  NetParams tilde = start;
  LossOptions lo = opts.loss;
  lo.need_gradient = false;
  double alpha = 1.0;
  bool accepted = false;
  for (int b = 0; b <= cfg.max_backtracks; ++b) {
    tilde.theta = start.theta + alpha * gn.delta;
    double trial;
    try {
      trial = evaluate_loss(tilde, batch, weights, lo).total;
    } catch (const NonFiniteError&) {
      trial = std::numeric_limits<double>::infinity();
    }
    const bool descent = descent_check(start.theta, tilde.theta, bd0.grad_theta, L,
                                       bd0.total, trial);
    const bool armijo = trial <= bd0.total + cfg.armijo_c * alpha * slope +
                                     1e-12 * std::max(1.0, std::abs(bd0.total));
    if (descent && armijo) {
      accepted = true;
      break;
    }
    if (alpha * cfg.backtrack_shrink < cfg.alpha_min) break;
    alpha *= cfg.backtrack_shrink;
    ++it.backtracks;
  }
  if (!accepted) {
    it.backtrack_exhausted = true;
    tilde.theta = start.theta;
    alpha = 0.0;
  }
  it.alpha = alpha;

  // (S2) Newton correction at the intermediate point.
  const NewtonResult nr = newton_refine(tilde, batch, weights, cfg);
  it.lambda_min = nr.lambda_min;
  state.params.theta = tilde.theta - nr.delta;
  it.loss_after = evaluate_loss(state.params, batch, weights, lo).total;
  if (theta_star) {
    it.error_after = (state.params.theta - *theta_star).norm();
    it.rho = it.error_before > 0.0 ? it.error_after / (it.error_before * it.error_before) : 0.0;
  } else {
    it.rho = it.loss_before > 0.0 ? it.loss_after / it.loss_before : 0.0;
  }
  state.L_sob = L;
  ++state.step;
  return it;
}

ConvexityRadius estimate_convexity_radius(const NetParams& theta_star, const LabeledBatch& batch,
                                          const LossWeights& weights, double fd_step,
                                          int directions, double r_max, int samples, Rng& rng) {
  ConvexityRadius out;
  out.radius = r_max;
  std::vector<std::pair<double, double>> seen;  // (distance, lambda_min)
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int p = theta_star.num_params();
  NetParams probe = theta_star;
  for (int d = 0; d < directions; ++d) {
    Eigen::VectorXd u(p);
    for (int i = 0; i < p; ++i) u[i] = gauss(rng);
    u.normalize();
    for (int s = 0; s <= samples; ++s) {
      const double t = r_max * s / samples;
      if (t >= out.radius) break;
      probe.theta = theta_star.theta + t * u;
      const HessianResult hr = finite_difference_hessian(probe, batch, weights, fd_step);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hr.H, Eigen::EigenvaluesOnly);
      const double lmin = es.eigenvalues()[0];
      if (lmin <= 0.0) {
        out.radius = t;
        break;
      }
      seen.emplace_back(t, lmin);
    }
  }
  out.kappa = std::numeric_limits<double>::infinity();
  for (const auto& [t, lmin] : seen) {
    if (t < out.radius) out.kappa = std::min(out.kappa, lmin);
  }
  return out;
}

}  // namespace msino
