#include "msino/errors.hpp"
#include "msino/optim.hpp"

#include <cmath>
#include <limits>

namespace msino {

NewtonDemo make_newton_demo(std::uint64_t seed) {
  constexpr int kDim = 1, kHidden = 2, kSamples = 32;
  constexpr double kRange = 2.0;
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-kRange, kRange);

  NewtonDemo demo;
  demo.theta_star = init({kDim, kHidden, 1}, seed);
  for (int i = 0; i < demo.theta_star.num_params(); ++i) {
    demo.theta_star.theta[i] = gauss(rng);
  }
  demo.weights = LossWeights{0.5, 0.0};
  demo.geo = GeometryPackage::defaults(ManifoldKind::euclidean(kDim));

  LabeledBatch& b = demo.batch;
  b.kind = ManifoldKind::euclidean(kDim);
  b.values.resize(kSamples, 1);
  for (int i = 0; i < kSamples; ++i) {
    Eigen::VectorXd x(kDim);
    for (int k = 0; k < kDim; ++k) x[k] = unit(rng);
    const EvalBundle e = evaluate(demo.theta_star, x, EvalNeeds{});
    b.points.push_back(ManifoldPoint{b.kind, x});
    b.values(i, 0) = e.value[0];
    b.grad_labels.push_back(e.input_jacobian);
  }
  return demo;
}

NewtonDemoRun run_newton_demo(const NewtonDemo& demo, std::uint64_t seed, double start_error,
                              int max_iter, double tol, const NewtonConfig& cfg) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int p = demo.theta_star.num_params();
  Eigen::VectorXd dir(p);
  for (int i = 0; i < p; ++i) dir[i] = gauss(rng);
  dir.normalize();

  TrainState state;
  state.params = demo.theta_star;
  state.params.theta += start_error * dir;
  SgdOptions opts;
  opts.schedule_enabled = false;

  NewtonDemoRun out;
  out.errors.push_back((state.params.theta - demo.theta_star.theta).norm());
  for (int k = 0; k < max_iter && out.errors.back() > tol; ++k) {
    out.iterates.push_back(two_step_newton(state, demo.batch, demo.weights, demo.geo, cfg, opts,
                                           &demo.theta_star.theta));
    out.errors.push_back(out.iterates.back().error_after);
  }
  out.reached_tolerance = out.errors.back() <= tol;
  return out;
}

double loglog_slope(std::span<const double> errors, int last, double floor) {
  const std::size_t n = errors.size();
  const std::size_t first = n > static_cast<std::size_t>(last) ? n - last : 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t k = first; k + 1 < n; ++k) {
    if (!(errors[k + 1] > floor) || !(errors[k] > 0.0)) continue;
    const double x = std::log(errors[k]), y = std::log(errors[k + 1]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++m;
  }
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  const double den = m * sxx - sx * sx;
  if (den <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (m * sxy - sx * sy) / den;
}

}  // namespace msino
