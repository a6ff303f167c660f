#include "msino/gradcheck.hpp"

#include "msino/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace msino {

Eigen::VectorXd finite_difference_gradient(const NetParams& params, const LabeledBatch& batch,
                                           const LossWeights& weights, double h) {
  LossOptions lo;
  lo.need_gradient = false;
  NetParams probe = params;
  const auto f = [&](int i, double t) {
    probe.theta[i] = params.theta[i] + t;
    return evaluate_loss(probe, batch, weights, lo).total;
  };
  Eigen::VectorXd g(params.num_params());
  for (int i = 0; i < params.num_params(); ++i) {
    g[i] = (8.0 * (f(i, h) - f(i, -h)) - (f(i, 2 * h) - f(i, -2 * h))) / (12.0 * h);
    probe.theta[i] = params.theta[i];
  }
  return g;
}

double fd_relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& fd) {
  const double scale = fd.size() ? fd.cwiseAbs().maxCoeff() : 0.0;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < fd.size(); ++i) {
    const double den = std::max({std::abs(fd[i]), 1e-3 * scale, 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - fd[i]) / den);
  }
  return worst;
}

GradientCheckReport run_gradient_checks(std::uint64_t seed, int cases) {
  struct Pool {
    std::string task;
    LabeledBatch data;
  };
  std::vector<Pool> pools;
  pools.push_back({"sphere_field", gen_sphere_dataset(seed, 256)});
  pools.push_back({"so3_geodesic", gen_so3_dataset(seed, 200)});
  pools.push_back({"mesh_thickness", gen_mesh_dataset(seed, make_icosphere(1))});
  pools.push_back({"toy_convex", gen_toy_dataset(seed, 64, 2, 0.1).data});

  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double lambdas[] = {0.0, 0.5, 10.0};
  GradientCheckReport report;
  for (int c = 0; c < cases; ++c) {
    const Pool& pool = pools[c % pools.size()];
    GradientCheckCase out;
    out.task = pool.task;
    out.lambda = lambdas[std::uniform_int_distribution<int>(0, 2)(rng)];
    out.beta = pool.data.mesh && std::uniform_int_distribution<int>(0, 1)(rng) ? 1e-3 : 0.0;

    const int in = pool.data.points.front().coords.size();
    const int hidden = std::uniform_int_distribution<int>(3, 8)(rng);
    NetParams params = init({in, hidden, hidden, 1}, rng());
    for (int i = 0; i < params.num_params(); ++i) params.theta[i] += 0.1 * gauss(rng);

    std::vector<int> idx(pool.data.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::uniform_int_distribution<int>(2, 8)(rng));
    const LabeledBatch batch = pool.data.subset(idx);

    const LossWeights w{out.lambda, out.beta};
    const LossBreakdown bd = evaluate_loss(params, batch, w);
    const Eigen::VectorXd fd = finite_difference_gradient(params, batch, w);
    out.num_params = params.num_params();
    out.batch_size = batch.size();
    out.rel_error = fd_relative_error(bd.grad_theta, fd);
    report.max_rel_error = std::max(report.max_rel_error, out.rel_error);
    report.cases.push_back(out);
  }
  return report;
}

}  // namespace msino
