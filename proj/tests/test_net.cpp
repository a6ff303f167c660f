#include "msino/errors.hpp"
#include "msino/net.hpp"

#include <doctest.h>

#include <Eigen/SVD>

#include <cstdio>
#include <filesystem>

using namespace msino;

namespace {

Eigen::VectorXd random_vec(Rng& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

NetParams perturbed(const std::vector<int>& dims, std::uint64_t seed) {
  NetParams p = init(dims, seed);
  Rng rng(seed + 1);
  p.theta += 0.2 * random_vec(rng, p.num_params());
  return p;
}

}  // namespace

TEST_CASE("initialization layout") {
  const auto p = init({3, 5, 4, 2}, 1);
  CHECK(p.num_params() == parameter_count({3, 5, 4, 2}));
  CHECK(p.num_params() == 3 * 5 + 5 + 5 * 4 + 4 + 4 * 2 + 2);
  CHECK(p.weight(0).rows() == 5);
  CHECK(p.weight(0).cols() == 3);
  CHECK(p.bias(1).isZero());
  CHECK(p.activations.front() == Activation::Tanh);
  CHECK(p.activations.back() == Activation::Identity);
  CHECK(init({3, 5, 1}, 9).theta == init({3, 5, 1}, 9).theta);
  CHECK_THROWS_AS(init({3, 1}, 0), ShapeError);
  CHECK(init_linear(2, 1, 0).num_params() == 3);
}

TEST_CASE("forward pass matches a hand evaluation") {
  const auto p = perturbed({2, 3, 1}, 4);
  const Eigen::Vector2d x(0.3, -0.8);
  const Eigen::VectorXd h = (p.weight(0) * x + p.bias(0)).array().tanh().matrix();
  const double u = (p.weight(1) * h + p.bias(1))[0];
  const auto e = evaluate(p, x, {});
  CHECK(e.value[0] == doctest::Approx(u).epsilon(1e-14));
  CHECK_THROWS_AS(evaluate(p, Eigen::Vector3d(1, 2, 3), {}), ShapeError);
}

TEST_CASE("input Jacobian matches finite differences") {
  const auto p = perturbed({3, 6, 5, 2}, 2);
  const Eigen::Vector3d x(0.1, -0.4, 0.9);
  const auto e = evaluate(p, x, {});
  const double h = 1e-6;
  for (int j = 0; j < 3; ++j) {
    Eigen::Vector3d a = x, b = x;
    a[j] += h;
    b[j] -= h;
    const Eigen::VectorXd fd = (evaluate(p, a, {}).value - evaluate(p, b, {}).value) / (2 * h);
    CHECK((e.input_jacobian.col(j) - fd).norm() < 1e-8);
  }
}

TEST_CASE("parameter Jacobians and vjp match finite differences") {
  const auto p = perturbed({3, 4, 4, 2}, 6);
  const Eigen::Vector3d x(-0.5, 0.2, 0.7);
  EvalNeeds need;
  need.param_jacobian_value = true;
  need.param_jacobian_gradient = true;
  const auto e = evaluate(p, x, need);
  Rng rng(3);
  const Eigen::VectorXd ub = random_vec(rng, 2);
  Eigen::MatrixXd Jb(2, 3);
  Jb.reshaped() = random_vec(rng, 6);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(p.num_params());
  vjp(p, forward(p, x, true), ub, Jb, grad);

  const double h = 1e-6;
  NetParams q = p;
  for (int i = 0; i < p.num_params(); ++i) {
    q.theta[i] = p.theta[i] + h;
    const auto a = evaluate(q, x, {});
    q.theta[i] = p.theta[i] - h;
    const auto b = evaluate(q, x, {});
    q.theta[i] = p.theta[i];
    const Eigen::VectorXd dv = (a.value - b.value) / (2 * h);
    const Eigen::MatrixXd dJ = (a.input_jacobian - b.input_jacobian) / (2 * h);
    CHECK((e.param_jacobian_value.col(i) - dv).norm() < 1e-8);
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 3; ++j)
        CHECK(std::abs(e.param_jacobian_gradient(k * 3 + j, i) - dJ(k, j)) < 1e-8);
    const double fd = ub.dot(dv) + (Jb.array() * dJ.array()).sum();
    CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-7).scale(1.0));
  }
}

TEST_CASE("operator norm agrees with the SVD") {
  Rng rng(12);
  for (int t = 0; t < 5; ++t) {
    Eigen::MatrixXd W(7, 4);
    W.reshaped() = random_vec(rng, 28);
    const double svd = Eigen::JacobiSVD<Eigen::MatrixXd>(W).singularValues()[0];
    CHECK(operator_norm(W, 1e-12, 5000) == doctest::Approx(svd).epsilon(1e-8));
  }
  const auto p = perturbed({3, 8, 1}, 1);
  const double prod = Eigen::JacobiSVD<Eigen::MatrixXd>(p.weight(0)).singularValues()[0] *
                      Eigen::JacobiSVD<Eigen::MatrixXd>(p.weight(1)).singularValues()[0];
  CHECK(spectral_bound(p) == doctest::Approx(std::max(1.0, prod)).epsilon(1e-5));
}

TEST_CASE("Frobenius Jacobian statistic") {
  const auto p = perturbed({9, 5, 1}, 3);
  Rng rng(8);
  std::vector<Eigen::VectorXd> probes;
  for (int i = 0; i < 6; ++i) probes.push_back(random_vec(rng, 9));
  double acc = 0;
  EvalNeeds need;
  need.param_jacobian_value = true;
  for (const auto& x : probes) acc += evaluate(p, x, need).param_jacobian_value.squaredNorm();
  const auto st = frobenius_jacobian(p, probes);
  CHECK(st.mean_sq == doctest::Approx(acc / 6).epsilon(1e-12));
  CHECK(st.S == doctest::Approx(std::max(1.0, std::sqrt(acc / 6))));
}

TEST_CASE("parameter snapshots roundtrip bit-exactly") {
  const auto p = perturbed({3, 4, 1}, 10);
  const auto dir = std::filesystem::temp_directory_path() / "msino_net_snapshot";
  std::filesystem::create_directories(dir);
  const std::string bin = (dir / "p.bin").string(), js = (dir / "p.json").string();
  save_params(p, bin, js);
  const auto q = load_params(bin, js);
  CHECK(q.dims == p.dims);
  CHECK(q.activations == p.activations);
  CHECK(q.theta == p.theta);
  CHECK(std::filesystem::file_size(bin) == 8u * p.num_params());
  CHECK_THROWS_AS(load_params((dir / "missing.bin").string(), js), Error);
}
