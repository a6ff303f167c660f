#include "msino/optim.hpp"

#include "msino/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace msino {

void ScheduleConfig::validate() const {
  if (!(c_lambda > 0.0)) throw ValidationError("c_lambda must be > 0");
  if (!(lambda_max > 0.0)) throw ValidationError("lambda_max must be > 0");
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
  if (!(eta_max > 0.0)) throw ValidationError("eta_max must be > 0");
  if (!(ema_decay > 0.0 && ema_decay < 1.0)) throw ValidationError("ema_decay must lie in (0,1)");
}

void NewtonConfig::validate() const {
  if (!(gn_damping >= 0.0)) throw ValidationError("gn_damping must be >= 0");
  if (!(backtrack_shrink > 0.0 && backtrack_shrink < 1.0)) {
    throw ValidationError("backtrack_shrink must lie in (0,1)");
  }
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw ValidationError("armijo_c must lie in (0,1)");
  if (!(alpha_min > 0.0 && alpha_min <= 1.0)) throw ValidationError("alpha_min must lie in (0,1]");
  if (max_backtracks < 0) throw ValidationError("max_backtracks must be >= 0");
  if (!(hessian_fd_step > 0.0)) throw ValidationError("hessian_fd_step must be > 0");
}

double lambda_schedule(const TrainState& state, const ScheduleConfig& cfg) {
  const double ratio = state.var_x / (state.var_grad + cfg.epsilon);
  return std::min(cfg.lambda_max, cfg.c_lambda * std::sqrt(ratio));
}

namespace {

double batch_variance(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

}  // namespace

void update_variances(TrainState& state, const LossBreakdown& bd, const ScheduleConfig& cfg) {
  const double vx = batch_variance(bd.value_sq);
  const double vg = batch_variance(bd.grad_sq);
  if (!state.variances_seeded) {
    state.var_x = vx;
    state.var_grad = vg;
    state.variances_seeded = true;
    return;
  }
  state.var_x = cfg.ema_decay * state.var_x + (1.0 - cfg.ema_decay) * vx;
  state.var_grad = cfg.ema_decay * state.var_grad + (1.0 - cfg.ema_decay) * vg;
}

double smoothness_constant(const NetParams& params, const GeometryPackage& geo, double lambda,
                           const SgdOptions& opts) {
  if (opts.mode == SmoothnessMode::FrobeniusSO3) return l_sob_so3(params, lambda, opts.probes);
  return l_sob(params, geo, lambda);
}

bool descent_check(const Eigen::VectorXd& prev_params, const Eigen::VectorXd& next_params,
                   const Eigen::VectorXd& grad_prev, double L, double loss_prev,
                   double loss_next) {
  const Eigen::VectorXd step = next_params - prev_params;
  const double bound = loss_prev + grad_prev.dot(step) + 0.5 * L * step.squaredNorm();
  return loss_next <= bound + 1e-9 * std::max(1.0, std::abs(loss_prev));
}

StepReport sgd_step(TrainState& state, const LabeledBatch& batch, const LossWeights& weights,
                    const GeometryPackage& geo, const ScheduleConfig& cfg,
                    const SgdOptions& opts) {
  if (batch.size() < 1) throw ShapeError("sgd_step needs a nonempty batch");
  const bool labels = batch.has_gradient_labels();
  StepReport rep;
  LossWeights w = weights;
  w.lambda = labels ? state.lambda_k : 0.0;
  try {
    rep.before = evaluate_loss(state.params, batch, w, opts.loss);
  } catch (const NonFiniteError&) {
    throw DivergenceError(std::numeric_limits<double>::infinity(),
                          "loss is not finite at step " + std::to_string(state.step));
  }

  update_variances(state, rep.before, cfg);
  if (!labels) {
    w.lambda = 0.0;
  } else if (opts.schedule_enabled) {
    w.lambda = lambda_schedule(state, cfg);
  } else {
    w.lambda = weights.lambda;
  }
  reweight(rep.before, w);
  const double loss = rep.before.total;
  if (!std::isfinite(loss) || loss > opts.divergence_threshold) {
    throw DivergenceError(loss, "loss " + std::to_string(loss) + " exceeded the divergence "
                                "threshold at step " + std::to_string(state.step));
  }

  rep.lambda = w.lambda;
  rep.L = smoothness_constant(state.params, geo, w.lambda, opts);
  rep.eta = lr_cap(rep.L, cfg.eta_max);
  const Eigen::VectorXd& g = rep.before.grad_theta;
  const Eigen::VectorXd next = state.params.theta - rep.eta * g;

  if (opts.check_descent) {
    NetParams trial = state.params;
    trial.theta = next;
    LossOptions lo = opts.loss;
    lo.need_gradient = false;
    lo.per_sample_gradients = false;
    try {
      rep.loss_after = evaluate_loss(trial, batch, w, lo).total;
    } catch (const NonFiniteError&) {
      rep.loss_after = std::numeric_limits<double>::infinity();
    }
    rep.descent_ok = descent_check(state.params.theta, next, g, rep.L, loss, rep.loss_after);
  }

  state.params.theta = next;
  state.lambda_k = w.lambda;
  state.L_sob = rep.L;
  state.eta_k = rep.eta;
  state.steps.push_back(StepRecord{loss, g.squaredNorm(), rep.eta, rep.L, w.lambda,
                                   rep.descent_ok});
  ++state.step;
  return rep;
}

double pl_estimate(std::span<const StepRecord> history, double floor) {
  if (history.size() < 10) {
    throw InsufficientHistory("PL estimate needs at least 10 records, got " +
                              std::to_string(history.size()));
  }
  double mu = std::numeric_limits<double>::infinity();
  for (const auto& rec : history) {
    const double gap = rec.loss - floor;
    if (gap <= 1e-12) continue;
    mu = std::min(mu, 0.5 * rec.grad_norm2 / gap);
  }
  if (!std::isfinite(mu)) throw InsufficientHistory("every record sits at the loss floor");
  return mu;
}

double contraction_rho(double C, double S_max, double alpha_min, double kappa) {
  return C * S_max * alpha_min / (2.0 * kappa);
}

double noise_floor_ratio(double lambda_k, double lambda_max) {
  return (1.0 + lambda_k) / (1.0 + lambda_max);
}

double stability_floor(double lambda, double S, double eta, double mu) {
  return (1.0 + lambda) * S * S * eta / mu;
}

double lr_cap(double L, double eta_max) {
  if (!(L > 0.0)) return eta_max;
  return std::min(eta_max, 1.0 / L);
}

}  // namespace msino
