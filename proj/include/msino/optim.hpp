#pragma once

// Riemannian Sobolev-SGD with the variance-aware lambda schedule and 1/L_sob
// step caps, the two-step Gauss-Newton / Newton refinement, and the
// diagnostics that check the convergence inequalities at runtime.

#include "msino/loss.hpp"
#include "msino/manifold.hpp"
#include "msino/net.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace msino {

struct ScheduleConfig {
  double c_lambda = 1.0;
  double lambda_max = 10.0;
  double epsilon = 1e-8;
  double eta_max = 0.1;
  double ema_decay = 0.9;
  void validate() const;  // ValidationError
};

struct NewtonConfig {
  double gn_damping = 1e-8;
  double backtrack_shrink = 0.5;
  double armijo_c = 1e-4;
  double alpha_min = 1e-3;
  int max_backtracks = 30;
  double hessian_fd_step = 1e-4;
  void validate() const;  // ValidationError
};

/// How S(theta) and L_sob are computed.
enum class SmoothnessMode {
  LayerNorm,     // L = C (1 + lambda) prod |W_l|_2
  FrobeniusSO3,  // L = (1 + lambda) mean |J_theta u|_F^2 over probes
};

struct StepRecord {
  double loss = 0.0;        // batch total before the step
  double grad_norm2 = 0.0;  // |grad|^2 before the step
  double eta = 0.0;
  double L = 0.0;
  double lambda = 0.0;
  bool descent_ok = true;
};

struct MetricsRow {
  int epoch = 0;
  double total = 0.0;
  double val = 0.0;
  double sob = 0.0;
  double lap = 0.0;
  double lambda_k = 0.0;
  double rho_k = 1.0;
  double L_sob = 0.0;
  double lr_cap = 0.0;
  double sigma_sample = 0.0;
  double sigma_transport = 0.0;
  bool descent_ok = true;
  double mu_hat = 0.0;
};

struct TrainState {
  NetParams params;
  long step = 0;
  double lambda_k = 0.0;
  double eta_k = 0.0;
  double L_sob = 0.0;
  double var_x = 0.0;
  double var_grad = 0.0;
  bool variances_seeded = false;
  std::vector<StepRecord> steps;
  std::vector<MetricsRow> history;
};

struct SgdOptions {
  bool schedule_enabled = true;
  SmoothnessMode mode = SmoothnessMode::LayerNorm;
  /// Network inputs used for the Frobenius form of S on SO(3).
  std::vector<Eigen::VectorXd> probes;
  LossOptions loss;
  bool check_descent = true;
  double divergence_threshold = 1e12;
};

struct StepReport {
  LossBreakdown before;  // at theta_k with the lambda actually used
  double loss_after = 0.0;
  double lambda = 0.0;
  double L = 0.0;
  double eta = 0.0;
  bool descent_ok = true;
};

/// min(lambda_max, c_lambda sqrt(var_x / (var_grad + epsilon))).
double lambda_schedule(const TrainState& state, const ScheduleConfig& cfg);

/// Blends the batch variances of the per-sample squared residual norms into
/// the running estimates; the first call seeds them.
void update_variances(TrainState& state, const LossBreakdown& bd, const ScheduleConfig& cfg);

/// Smoothness constant for the current parameters.
double smoothness_constant(const NetParams& params, const GeometryPackage& geo, double lambda,
                           const SgdOptions& opts);

/// One capped step: evaluates the batch, updates the variance estimates and
/// lambda_k, sets eta_k = min(eta_max, 1/L_sob), steps against the gradient
/// and checks the descent inequality on the same batch. weights.lambda is
/// used when the schedule is disabled. Throws DivergenceError when the loss
/// is non-finite or above the divergence threshold.
StepReport sgd_step(TrainState& state, const LabeledBatch& batch, const LossWeights& weights,
                    const GeometryPackage& geo, const ScheduleConfig& cfg,
                    const SgdOptions& opts);

/// L(theta') <= L(theta) + <g, theta' - theta> + (L/2)|theta' - theta|^2
/// with slack 1e-9 max(1, |loss_prev|).
bool descent_check(const Eigen::VectorXd& prev_params, const Eigen::VectorXd& next_params,
                   const Eigen::VectorXd& grad_prev, double L, double loss_prev,
                   double loss_next);

/// min over the records of |g|^2 / 2 / (loss - floor), skipping records with
/// loss - floor <= 1e-12. Throws InsufficientHistory below 10 records or when
/// every record is skipped.
double pl_estimate(std::span<const StepRecord> history, double floor);

// Newton-Sobolev refinement.

struct GaussNewtonResult {
  Eigen::VectorXd delta;
  double rcond = 0.0;
  double solve_residual = 0.0;  // relative residual of the normal equations
  double sigma_min = 0.0;       // smallest singular value of the residual Jacobian
};

/// Minimizer of |A delta + r|^2 + gn_damping |delta|^2 for the stacked value
/// and Sobolev residuals. The returned step already points downhill.
/// Throws SingularSystemError when the reciprocal condition number of the
/// normal matrix falls below 1e-14.
GaussNewtonResult gauss_newton_step(const NetParams& params, const LabeledBatch& batch,
                                    const LossWeights& weights, const NewtonConfig& cfg);

struct HessianResult {
  Eigen::MatrixXd H;       // symmetrized
  double asymmetry = 0.0;  // |H - H^T|_F / |H|_F before symmetrization
};
/// Central differences of the exact loss gradient.
HessianResult finite_difference_hessian(const NetParams& params, const LabeledBatch& batch,
                                        const LossWeights& weights, double step,
                                        const LossOptions& options = {});

struct NewtonResult {
  Eigen::VectorXd delta;  // H^{-1} grad; the update subtracts it
  double lambda_min = 0.0;
  double shift = 0.0;
  double asymmetry = 0.0;
};
/// Throws IndefiniteHessianError when the Levenberg shift exceeds 1e-2.
NewtonResult newton_refine(const NetParams& params_tilde, const LabeledBatch& batch,
                           const LossWeights& weights, const NewtonConfig& cfg);

struct NewtonIterate {
  double alpha = 0.0;
  int backtracks = 0;
  bool backtrack_exhausted = false;
  double loss_before = 0.0;
  double loss_after = 0.0;
  double rho = 0.0;
  double error_before = -1.0;  // |theta - theta*| when a reference is known
  double error_after = -1.0;
  double lambda_min = 0.0;
  double sigma_min = 0.0;
};

/// Backtracked Gauss-Newton step (descent inequality and Armijo, alpha never
/// below alpha_min) followed by a Newton correction. rho is d_{k+1}/d_k^2
/// when theta_star is given and the loss ratio otherwise.
NewtonIterate two_step_newton(TrainState& state, const LabeledBatch& batch,
                              const LossWeights& weights, const GeometryPackage& geo,
                              const NewtonConfig& cfg, const SgdOptions& opts,
                              const Eigen::VectorXd* theta_star = nullptr);

/// Teacher-student toy with a known zero-residual minimizer theta*: a 1-2-1
/// tanh network fitted to values and input gradients of a fixed teacher on
/// 32 points of [-2, 2].
struct NewtonDemo {
  LabeledBatch batch;
  NetParams theta_star;
  LossWeights weights;
  GeometryPackage geo;
};
inline constexpr std::uint64_t kNewtonDemoSeed = 12;
NewtonDemo make_newton_demo(std::uint64_t seed = kNewtonDemoSeed);

struct NewtonDemoRun {
  std::vector<double> errors;  // |theta_k - theta*|, k = 0..iterations
  std::vector<NewtonIterate> iterates;
  bool reached_tolerance = false;
};
/// Starts at distance start_error from theta* along a seeded direction and
/// iterates two_step_newton until the error is at most tol or max_iter
/// iterations have run.
NewtonDemoRun run_newton_demo(const NewtonDemo& demo, std::uint64_t seed, double start_error,
                              int max_iter, double tol, const NewtonConfig& cfg = {});

/// Least-squares slope of log e_{k+1} against log e_k over the consecutive
/// pairs among the last `last` errors whose successor exceeds `floor`.
/// NaN when fewer than two pairs qualify.
double loglog_slope(std::span<const double> errors, int last, double floor);

// Formula evaluators.

/// C S_max alpha_min / (2 kappa).
double contraction_rho(double C, double S_max, double alpha_min, double kappa);
/// (1 + lambda_k) / (1 + lambda_max).
double noise_floor_ratio(double lambda_k, double lambda_max);
/// (1 + lambda) S^2 eta / mu.
double stability_floor(double lambda, double S, double eta, double mu);
/// min(eta_max, 1 / L).
double lr_cap(double L, double eta_max);

struct ConvexityRadius {
  double radius = 0.0;
  double kappa = 0.0;  // smallest Hessian eigenvalue seen inside the radius
};
/// Marches along `directions` random unit directions from theta_star and
/// returns the first distance where the finite-difference Hessian loses
/// positive definiteness (capped at r_max), minimized over directions.
ConvexityRadius estimate_convexity_radius(const NetParams& theta_star, const LabeledBatch& batch,
                                          const LossWeights& weights, double fd_step,
                                          int directions, double r_max, int samples, Rng& rng);

struct NoiseSplit {
  double sigma_sample = 0.0;     // unbiased variance of per-sample gradients
  double sigma_transport = 0.0;  // transported vs untransported mean gradient
  double bound = 0.0;            // C S max_{i,j} d(x_i, x_j)
  double diameter = 0.0;
};

/// Per-sample parameter-gradient variance and the discrepancy caused by
/// transporting per-sample intrinsic gradients to the batch Frechet mean
/// (medoid and minimal normal rotation on meshes).
NoiseSplit noise_split(const NetParams& params, const LabeledBatch& batch,
                       const LossWeights& weights, const GeometryPackage& geo, double S);

}  // namespace msino
