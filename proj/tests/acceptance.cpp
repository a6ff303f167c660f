// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include "msino/datasets.hpp"
#include "msino/errors.hpp"
#include "msino/mesh.hpp"
#include "msino/optim.hpp"
#include "msino/run.hpp"
#include "oracles.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace msino;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// 1 -------------------------------------------------------------------------

Outcome gradient_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  struct Pool {
    LabeledBatch data;
    int in;
  };
  const std::vector<Pool> pools{{gen_sphere_dataset(101, 256), 3},
                                {gen_so3_dataset(102, 200), 9},
                                {gen_mesh_dataset(103, make_icosphere(2)), 3},
                                {gen_toy_dataset(104, 64, 2, 0.2, 0.2).data, 2}};
  Rng rng(2024);
  std::normal_distribution<double> g(0.0, 1.0);
  const double lambdas[] = {0.0, 0.5, 10.0};
  double worst = 0.0;
  for (int c = 0; c < 50; ++c) {
    const Pool& pool = pools[c % pools.size()];
    const double lambda = lambdas[std::uniform_int_distribution<int>(0, 2)(rng)];
    const double beta = pool.data.mesh && std::uniform_int_distribution<int>(0, 1)(rng) ? 1e-3 : 0.0;
    const int hidden = std::uniform_int_distribution<int>(3, 10)(rng);
    NetParams net = init({pool.in, hidden, hidden, 1}, rng());
    for (int i = 0; i < net.num_params(); ++i) net.theta[i] += 0.1 * g(rng);
    std::vector<int> idx(pool.data.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::uniform_int_distribution<int>(2, 10)(rng));
    const LabeledBatch batch = pool.data.subset(idx);
    const LossWeights w{lambda, beta};
    const auto bd = evaluate_loss(net, batch, w);
    worst = std::max(worst, oracle::rel_error(bd.grad_theta, oracle::loss_gradient_fd(net, batch, w)));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-5 && secs <= 60.0,
          "50 cases, max rel err " + fmt("%.3e", worst) + " (<= 1e-5), " + fmt("%.2f", secs) +
              " s (<= 60 s)"};
}

// 2 -------------------------------------------------------------------------

TriMesh jittered(TriMesh m, Rng& rng, double amount) {
  std::normal_distribution<double> g(0.0, amount);
  for (int i = 0; i < m.num_vertices(); ++i)
    for (int k = 0; k < 3; ++k) m.vertices(i, k) += g(rng);
  return m;
}

Outcome beta_free_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(77);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const TriMesh base = t % 2 ? make_icosphere(t % 3) : make_grid(4 + t % 5, 3 + t % 4);
    const TriMesh mesh = jittered(base, rng, 0.01);
    const LaplaceOperator op = build_laplacian(mesh);
    const int n = mesh.num_vertices();
    const int m = 1 + t % 3;
    Eigen::MatrixXd U(n, m);
    for (int i = 0; i < U.size(); ++i) U.data()[i] = g(rng);
    std::vector<int> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    const double B = n;
    const Eigen::MatrixXd Wd(op.W);
    const Eigen::MatrixXd closed = (2.0 / B) * Wd.transpose() * Wd * U;
    const Eigen::MatrixXd lib = squared_laplacian_gradient(op.W, U, rows);
    // The objective is quadratic, so unit central differences are exact.
    const auto f = [&](const Eigen::MatrixXd& V) { return (Wd * V).squaredNorm() / B; };
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < m; ++c) {
        Eigen::MatrixXd P = U, Q = U;
        P(i, c) += 1.0;
        Q(i, c) -= 1.0;
        const double fd = (f(P) - f(Q)) / 2.0;
        worst = std::max({worst, std::abs(lib(i, c) - closed(i, c)), std::abs(fd - closed(i, c))});
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && secs <= 5.0, "20 meshes, max entrywise gap " + fmt("%.3e", worst) +
                                             " (<= 1e-10), " + fmt("%.2f", secs) + " s (<= 5 s)"};
}

// 3 -------------------------------------------------------------------------

Outcome sphere_spectrum() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto e3 = laplacian_spectrum(build_laplacian(make_icosphere(3)), 4);
  const auto e4 = laplacian_spectrum(build_laplacian(make_icosphere(4)), 4);
  double d3 = 0, d4 = 0;
  for (int i = 1; i < 4; ++i) {
    d3 = std::max(d3, std::abs(e3[i] - 2.0) / 2.0);
    d4 = std::max(d4, std::abs(e4[i] - 2.0) / 2.0);
  }
  const double secs = seconds_since(t0);
  return {d3 <= 0.05 && d4 <= 0.025 && secs <= 30.0,
          "subdiv 3 rel dev " + fmt("%.3e", d3) + " (<= 5%), subdiv 4 rel dev " +
              fmt("%.3e", d4) + " (<= 2.5%), " + fmt("%.2f", secs) + " s (<= 30 s)"};
}

// 4 -------------------------------------------------------------------------

Outcome geometry_roundtrips() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(404);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double rt = 0, iso = 0, dist = 0;
  for (auto kind : {ManifoldKind::euclidean(3), ManifoldKind::sphere2(), ManifoldKind::so3()}) {
    const auto pts = sample_uniform(kind, rng, 1001);
    const double rmax = kind.is_euclidean() ? 5.0 : kind.injectivity_radius() - 1e-2;
    const auto tangent = [&](const ManifoldPoint& p, double len) {
      Eigen::VectorXd c(kind.tangent_dim());
      for (int i = 0; i < c.size(); ++i) c[i] = g(rng);
      if (kind.is_sphere()) c -= c.dot(p.coords) * p.coords;
      c *= len / (kind.metric_scale() * c.norm());
      return make_tangent(p, c);
    };
    for (int i = 0; i < 1000; ++i) {
      const auto& p = pts[i];
      const auto v = tangent(p, rmax * u(rng));
      const auto q = exp_map(p, v);
      rt = std::max(rt, kind.metric_scale() * (log_map(p, q).components - v.components).norm());
      const auto& r = pts[i + 1];
      if (!kind.is_euclidean() && geodesic_distance(p, r) > kind.injectivity_radius() - 1e-2) continue;
      const auto a = tangent(p, 1.0), b = tangent(p, 1.0);
      const auto ta = parallel_transport(p, r, a), tb = parallel_transport(p, r, b);
      iso = std::max({iso, std::abs(inner(ta, tb) - inner(a, b)), std::abs(norm(ta) - 1.0)});
      if (kind.is_so3()) {
        const Eigen::Matrix3d rel = as_rotation(p).transpose() * as_rotation(r);
        if (rotation_angle(rel) < kPi - 1e-3) {
          dist = std::max(dist, std::abs(geodesic_distance(p, r) - oracle::logm(rel).norm()));
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {rt <= 1e-9 && iso <= 1e-10 && dist <= 1e-8 && secs <= 10.0,
          "roundtrip " + fmt("%.2e", rt) + " (<= 1e-9), isometry " + fmt("%.2e", iso) +
              " (<= 1e-10), SO3 logm distance " + fmt("%.2e", dist) + " (<= 1e-8), " +
              fmt("%.2f", secs) + " s (<= 10 s)"};
}

// Training runs shared by 5, 11 and 12 ---------------------------------------

using Table = std::vector<std::map<std::string, double>>;

Table read_metrics(const std::string& path, std::string* header) {
  std::ifstream in(path);
  Table t;
  std::string line;
  if (!std::getline(in, line)) return t;
  if (header) *header = line;
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::map<std::string, double> row;
    for (const auto& c : cols) {
      std::getline(ss, cell, ',');
      row[c] = std::strtod(cell.c_str(), nullptr);
    }
    t.push_back(row);
  }
  return t;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliRun {
  int exit_code = -1;
  double seconds = 0.0;
  std::string dir;
  Table rows;
  std::string header;
};

CliRun run_cli(const std::string& config, const std::string& tag) {
  CliRun r;
  r.dir = std::string(MSINO_RUN_DIR) + "/" + tag;
  std::filesystem::remove_all(r.dir);
  const std::string cmd = std::string("\"") + MSINO_CLI_PATH + "\" train --config \"" +
                          MSINO_SOURCE_DIR + "/configs/" + config + "\" --output-dir \"" + r.dir +
                          "\" > \"" + r.dir + ".log\" 2>&1";
  std::filesystem::create_directories(MSINO_RUN_DIR);
  const auto t0 = std::chrono::steady_clock::now();
  const int status = std::system(cmd.c_str());
  r.seconds = seconds_since(t0);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.rows = read_metrics(r.dir + "/metrics.csv", &r.header);
  return r;
}

std::map<std::string, std::pair<CliRun, CliRun>>& runs() {
  static std::map<std::string, std::pair<CliRun, CliRun>> all;
  if (all.empty()) {
    for (const char* name : {"sphere", "mesh", "so3", "toy"}) {
      const std::string cfg = std::string(name) + ".json";
      all[name] = {run_cli(cfg, std::string(name) + "_a"), run_cli(cfg, std::string(name) + "_b")};
    }
  }
  return all;
}

// 5 -------------------------------------------------------------------------

Outcome step_cap() {
  // Full-precision rows from in-process runs, then the 6-digit CSV rows.
  double exact = 0.0;
  int rows = 0;
  for (const char* name : {"sphere", "mesh", "so3", "toy"}) {
    ExperimentConfig cfg =
        load_config(std::string(MSINO_SOURCE_DIR) + "/configs/" + name + ".json");
    cfg.output_dir = std::string(MSINO_RUN_DIR) + "/" + name + "_exact";
    for (const auto& r : run(cfg).rows) {
      exact = std::max(exact, r.lr_cap * r.L_sob);
      ++rows;
    }
  }
  double logged = 0.0;
  for (auto& [name, pair] : runs()) {
    for (const auto& r : pair.first.rows) logged = std::max(logged, r.at("lr_cap") * r.at("L_sob"));
  }
  const std::string cap = fmt("%.4g", lr_cap(45.085, 1.0));
  return {rows > 0 && exact <= 1.0 + 1e-9 && logged <= 1.0 + 1e-5 && cap == "0.02218",
          std::to_string(rows) + " rows, max lr_cap*L_sob " + fmt("%.12g", exact) +
              " (<= 1+1e-9); from 6-digit CSV " + fmt("%.8g", logged) +
              " (<= 1+1e-5 rounding); lr_cap(45.085) = " + cap + " (expected 0.02218)"};
}

// 6 -------------------------------------------------------------------------

struct ToyOracle {
  LabeledBatch data;
  NetParams start;
  Eigen::VectorXd theta_star;
  double f_star = 0.0;
  double L = 0.0;
  double mu = 0.0;
};

ToyOracle toy_oracle(std::uint64_t seed, int n, double value_noise, double label_noise,
                     double lambda) {
  ToyOracle t;
  t.data = gen_toy_dataset(seed, n, 2, value_noise, label_noise).data;
  t.start = init_linear(2, 1, seed);
  const auto sys = stacked_residuals(t.start, t.data, lambda);
  const Eigen::VectorXd step = sys.A.colPivHouseholderQr().solve(-sys.r);
  t.theta_star = t.start.theta + step;
  t.f_star = (sys.r + sys.A * step).squaredNorm();
  const Eigen::MatrixXd H = 2.0 * sys.A.transpose() * sys.A;
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues();
  t.L = ev.maxCoeff();
  t.mu = ev.minCoeff();
  return t;
}

Outcome linear_rate() {
  const auto t0 = std::chrono::steady_clock::now();
  const double lambda = 0.05;
  const ToyOracle toy = toy_oracle(606, 256, 0.2, 0.0, lambda);
  const double eta = 1.0 / toy.L;
  NetParams p = toy.start;
  std::vector<StepRecord> hist;
  std::vector<double> gaps;
  for (int k = 0; k < 100000; ++k) {
    const auto bd = evaluate_loss(p, toy.data, {lambda, 0.0});
    gaps.push_back(bd.total - toy.f_star);
    hist.push_back({bd.total, bd.grad_theta.squaredNorm(), eta, toy.L, lambda, true});
    if (gaps.back() <= 1e-10) break;
    p.theta -= eta * bd.grad_theta;
  }
  const double mu_hat = pl_estimate(hist, toy.f_star);
  int violations = 0;
  for (std::size_t k = 0; k + 1 < gaps.size(); ++k) {
    if (gaps[k + 1] / gaps[k] > 1.0 - eta * mu_hat + 1e-6) ++violations;
  }
  const int steps = static_cast<int>(gaps.size()) - 1;
  const double budget = std::log(1e10) * 1.1 / (mu_hat * eta);
  const double secs = seconds_since(t0);
  return {violations == 0 && gaps.back() <= 1e-10 && steps <= budget && secs <= 10.0,
          "mu_hat " + fmt("%.4f", mu_hat) + ", eta " + fmt("%.4f", eta) + ", ratio violations " +
              std::to_string(violations) + "/" + std::to_string(steps) + ", reached 1e-10 in " +
              std::to_string(steps) + " steps (budget " + fmt("%.1f", budget) + "), " +
              fmt("%.2f", secs) + " s (<= 10 s)"};
}

// 7 -------------------------------------------------------------------------

Outcome rsgd_noise() {
  const auto t0 = std::chrono::steady_clock::now();
  const double lambda = 0.5;
  const ToyOracle toy = toy_oracle(707, 512, 0.3, 0.3, lambda);
  const double eta0 = 1.0 / toy.L;
  Rng rng(707);
  std::uniform_int_distribution<int> pick(0, toy.data.size() - 1);
  NetParams p = toy.start;
  std::vector<double> gnorm;
  std::vector<StepRecord> hist;
  for (int k = 0; k < 5000; ++k) {
    const auto full = evaluate_loss(p, toy.data, {lambda, 0.0});
    gnorm.push_back(full.grad_theta.squaredNorm());
    hist.push_back({full.total, gnorm.back(), eta0, toy.L, lambda, true});
    std::vector<int> idx(8);
    for (int& i : idx) i = pick(rng);
    const auto mb = evaluate_loss(p, toy.data.subset(idx), {lambda, 0.0});
    p.theta -= eta0 / (1.0 + k) * mb.grad_theta;
  }
  const double early = std::accumulate(gnorm.begin(), gnorm.begin() + 2500, 0.0) / 2500;
  const double late = std::accumulate(gnorm.begin() + 2500, gnorm.end(), 0.0) / 2500;
  const double gap = evaluate_loss(p, toy.data, {lambda, 0.0}, {false}).total - toy.f_star;
  const double mu_hat = pl_estimate(hist, toy.f_star);
  const double S = spectral_bound(p);
  const double floor = stability_floor(lambda, S, eta0, mu_hat);
  const double secs = seconds_since(t0);
  return {late <= 0.1 * early && gap <= 10.0 * floor && secs <= 60.0,
          "late/early mean |grad|^2 " + fmt("%.4f", late / early) + " (<= 0.1), final gap " +
              fmt("%.3e", gap) + " (<= 10 x floor " + fmt("%.3e", floor) + "), " +
              fmt("%.2f", secs) + " s (<= 60 s)"};
}

// 8 -------------------------------------------------------------------------

Outcome newton_contraction() {
  const auto t0 = std::chrono::steady_clock::now();
  const NewtonDemo demo = make_newton_demo();
  const NewtonDemoRun r = run_newton_demo(demo, kNewtonDemoSeed, 1e-2, 8, 1e-12);
  const double slope = loglog_slope(r.errors, 4, 0.0);
  const double secs = seconds_since(t0);
  std::string table;
  for (double e : r.errors) table += fmt(" %.3e", e);
  const int iters = static_cast<int>(r.iterates.size());
  return {r.reached_tolerance && iters <= 8 && slope >= 1.8 && secs <= 10.0,
          "errors" + table + "; " + std::to_string(iters) + " iterations (<= 8), slope " +
              fmt("%.3f", slope) + " (>= 1.8), " + fmt("%.2f", secs) + " s (<= 10 s)"};
}

// 9 -------------------------------------------------------------------------

Outcome lambda_shrinkage() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto data = gen_toy_dataset(909, 512, 2, 0.05, 3.0).data;
  TrainState s;
  s.params = init_linear(2, 1, 909);
  ScheduleConfig cfg;
  cfg.lambda_max = 10.0;
  SgdOptions opts;
  const auto geo = GeometryPackage::defaults(ManifoldKind::euclidean(2));
  Rng rng(909);
  std::uniform_int_distribution<int> pick(0, data.size() - 1);
  const int warmup = 50, steps = 2000;
  double worst = 0.0, min_var_ratio = std::numeric_limits<double>::infinity();
  for (int k = 0; k < steps; ++k) {
    std::vector<int> idx(32);
    for (int& i : idx) i = pick(rng);
    const auto rep = sgd_step(s, data.subset(idx), {0.5, 0.0}, geo, cfg, opts);
    if (k >= warmup) {
      worst = std::max(worst, noise_floor_ratio(rep.lambda, cfg.lambda_max));
      min_var_ratio = std::min(min_var_ratio, s.var_grad / s.var_x);
    }
  }
  const double secs = seconds_since(t0);
  return {min_var_ratio >= 100.0 && worst <= 1.0 / 3.7 && secs <= 20.0,
          "min var_grad/var_x after warm-up " + fmt("%.1f", min_var_ratio) +
              " (>= 100), max (1+lambda_k)/(1+lambda_max) " + fmt("%.4f", worst) + " (<= " +
              fmt("%.4f", 1.0 / 3.7) + "), " + fmt("%.2f", secs) + " s (<= 20 s)"};
}

// 10 ------------------------------------------------------------------------

Outcome transport_split() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto pool = gen_sphere_dataset(1010, 4096);
  const auto geo = GeometryPackage::defaults(ManifoldKind::sphere2());
  Rng rng(1010);
  int violations = 0;
  double worst_ratio = 0.0;
  for (int b = 0; b < 100; ++b) {
    std::vector<int> idx(pool.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(32);
    const NetParams net = init({3, 16, 16, 1}, rng());
    const auto ns = noise_split(net, pool.subset(idx), {0.5, 0.0}, geo, spectral_bound(net));
    if (!(ns.sigma_transport <= ns.bound)) ++violations;
    worst_ratio = std::max(worst_ratio, ns.sigma_transport / ns.bound);
  }
  const auto toy = gen_toy_dataset(1010, 64, 2, 0.3, 0.3).data;
  const auto flat = noise_split(init_linear(2, 1, 3), toy, {0.5, 0.0},
                                GeometryPackage::defaults(ManifoldKind::euclidean(2)), 1.0);
  const double secs = seconds_since(t0);
  return {violations == 0 && flat.sigma_transport == 0.0 && secs <= 30.0,
          "100 batches, violations " + std::to_string(violations) + ", max discrepancy/bound " +
              fmt("%.3e", worst_ratio) + ", Euclidean discrepancy " +
              fmt("%.1e", flat.sigma_transport) + " (== 0), " + fmt("%.2f", secs) + " s (<= 30 s)"};
}

// 11 ------------------------------------------------------------------------

bool all_finite(const Table& t) {
  for (const auto& r : t)
    for (const auto& [k, v] : r)
      if (!std::isfinite(v)) return false;
  return true;
}

Outcome synthetic_experiments() {
  std::string detail;
  bool ok = true;
  for (const char* name : {"sphere", "mesh"}) {
    const CliRun& r = runs()[name].first;
    const int n = static_cast<int>(r.rows.size());
    int good_rho = 0;
    for (const auto& row : r.rows) good_rho += row.at("rho_k") <= 1.05;
    const double ratio = n ? r.rows.back().at("total") / r.rows.front().at("total") : 1e300;
    const bool pass = r.exit_code == 0 && n == 30 && ratio <= 0.5 && good_rho >= 0.9 * n &&
                      all_finite(r.rows) && r.seconds <= 600.0;
    ok = ok && pass;
    detail += std::string(name) + ": " + std::to_string(n) + " epochs in " +
              fmt("%.1f", r.seconds) + " s, final/first " + fmt("%.3f", ratio) +
              " (<= 0.5), rho<=1.05 in " + std::to_string(good_rho) + "/" + std::to_string(n) +
              ", finite " + (all_finite(r.rows) ? "yes" : "no") + "; ";
  }
  const CliRun& so3 = runs()["so3"].first;
  const bool converged = so3.exit_code == 0 && so3.rows.size() == 30 && all_finite(so3.rows);
  const bool clean_divergence = so3.exit_code == 1 && !so3.rows.empty() &&
                                std::filesystem::exists(so3.dir + "/metrics.csv");
  ok = ok && (converged || clean_divergence);
  detail += std::string("so3: ") + (converged ? "converged" : clean_divergence ? "diverged cleanly" : "FAILED") +
            " (exit " + std::to_string(so3.exit_code) + ")";
  return {ok, detail};
}

// 12 ------------------------------------------------------------------------

Outcome determinism() {
  std::string detail;
  bool ok = true;
  for (auto& [name, pair] : runs()) {
    const std::string a = slurp(pair.first.dir + "/metrics.csv");
    const std::string b = slurp(pair.second.dir + "/metrics.csv");
    const bool same = !a.empty() && a == b;
    ok = ok && same;
    detail += name + (same ? " identical" : " DIFFERENT") + "; ";
  }
  return {ok, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 gradient oracle", gradient_oracle},
      {"2 beta-free identity", beta_free_identity},
      {"3 sphere spectrum", sphere_spectrum},
      {"4 geometry roundtrips", geometry_roundtrips},
      {"5 step cap", step_cap},
      {"6 linear rate under PL", linear_rate},
      {"7 RSGD noise behaviour", rsgd_noise},
      {"8 Newton-Sobolev contraction", newton_contraction},
      {"9 lambda-schedule shrinkage", lambda_shrinkage},
      {"10 transport noise split", transport_split},
      {"11 synthetic experiments", synthetic_experiments},
      {"12 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
