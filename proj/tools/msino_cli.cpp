// Command-line front end: training runs, gradient audit, mesh spectra and
// the Newton contraction demo.

#include "msino/config.hpp"
#include "msino/errors.hpp"
#include "msino/gradcheck.hpp"
#include "msino/mesh.hpp"
#include "msino/metrics_io.hpp"
#include "msino/optim.hpp"
#include "msino/run.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace msino;

int cmd_train(const std::string& config_path, const std::string& output_dir) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  const RunArtifacts art = run(cfg, &std::cout);
  std::cout << "metrics: " << art.metrics_csv << '\n'
            << "config:  " << art.config_json << '\n'
            << "params:  " << art.params_bin << '\n';
  for (const auto& p : art.plots) std::cout << "plot:    " << p << '\n';
  if (art.diverged) {
    std::cerr << "run diverged: " << art.divergence_message << '\n';
    return 1;
  }
  return 0;
}

int cmd_check_gradients(std::uint64_t seed, int cases) {
  const GradientCheckReport rep = run_gradient_checks(seed, cases);
  for (std::size_t i = 0; i < rep.cases.size(); ++i) {
    const auto& c = rep.cases[i];
    std::printf("%3zu %-15s lambda=%-4g beta=%-6g p=%-4d B=%d rel_err=%.3e\n", i, c.task.c_str(),
                c.lambda, c.beta, c.num_params, c.batch_size, c.rel_error);
  }
  std::printf("max relative error: %.3e\n", rep.max_rel_error);
  return rep.max_rel_error <= 1e-5 ? 0 : 1;
}

int cmd_laplacian_eig(const std::string& mesh_path, int subdiv, int k) {
  const TriMesh mesh = mesh_path.empty() ? make_icosphere(subdiv) : load_off_file(mesh_path);
  const LaplaceOperator op = build_laplacian(mesh);
  const Eigen::VectorXd ev = laplacian_spectrum(op, k);
  std::printf("vertices %d faces %d\n", mesh.num_vertices(), mesh.num_faces());
  for (int i = 0; i < ev.size(); ++i) std::printf("lambda_%d = %.8f\n", i + 1, ev[i]);
  return 0;
}

int cmd_newton_demo(double start_error, int max_iter) {
  const NewtonDemo demo = make_newton_demo();
  const NewtonDemoRun r = run_newton_demo(demo, kNewtonDemoSeed, start_error, max_iter, 1e-12);
  std::printf("%-4s %-12s %-8s %-10s %-12s\n", "k", "e_k", "alpha", "e_k/e_{k-1}^2", "loss");
  std::printf("%-4d %-12.4e\n", 0, r.errors[0]);
  for (std::size_t k = 0; k < r.iterates.size(); ++k) {
    const auto& it = r.iterates[k];
    std::printf("%-4zu %-12.4e %-8g %-13.4e %-12.4e\n", k + 1, r.errors[k + 1], it.alpha, it.rho,
                it.loss_after);
  }
  std::printf("log-log slope over the last 4 iterates: %.4f\n", loglog_slope(r.errors, 4, 0.0));
  return r.reached_tolerance ? 0 : 1;
}

int cmd_gen_mesh(int subdiv, const std::string& out) {
  const TriMesh mesh = make_icosphere(subdiv);
  write_off_file(out, mesh);
  std::printf("wrote %s (%d vertices, %d faces)\n", out.c_str(), mesh.num_vertices(),
              mesh.num_faces());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sobolev training of small neural maps on manifolds"};
  app.require_subcommand(1);

  std::string config_path, output_dir;
  auto* train = app.add_subcommand("train", "Run the training harness for a JSON config");
  train->add_option("--config", config_path, "Path to the experiment JSON")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--output-dir", output_dir, "Override output_dir from the config");

  std::uint64_t grad_seed = 0;
  int grad_cases = 50;
  auto* grads = app.add_subcommand("check-gradients",
                                   "Compare analytic loss gradients with finite differences");
  grads->add_option("--seed", grad_seed, "Seed of the random cases")->capture_default_str();
  grads->add_option("--cases", grad_cases, "Number of random cases")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::string mesh_path;
  int eig_subdiv = 4, eig_k = 4;
  auto* eig = app.add_subcommand("laplacian-eig",
                                 "Smallest generalized eigenvalues of the cotangent Laplacian");
  auto* mesh_opt = eig->add_option("--mesh", mesh_path, "OFF mesh file")->check(CLI::ExistingFile);
  eig->add_option("--icosphere", eig_subdiv, "Use the built-in icosphere with this subdivision")
      ->check(CLI::Range(0, 7))
      ->excludes(mesh_opt)
      ->capture_default_str();
  eig->add_option("--k", eig_k, "Number of eigenvalues")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  double demo_start = 1e-2;
  int demo_iters = 8;
  auto* demo = app.add_subcommand("newton-demo",
                                  "Two-step Newton iterations on a toy with known minimizer");
  demo->add_option("--start-error", demo_start, "Initial distance to the minimizer")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  demo->add_option("--max-iter", demo_iters, "Iteration limit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  int gen_subdiv = 4;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-mesh", "Write an icosphere as an OFF file");
  gen->add_option("--subdiv", gen_subdiv, "Subdivision level")
      ->check(CLI::Range(0, 7))
      ->capture_default_str();
  gen->add_option("--out", gen_out, "Output OFF path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) return cmd_train(config_path, output_dir);
    if (*grads) return cmd_check_gradients(grad_seed, grad_cases);
    if (*eig) return cmd_laplacian_eig(mesh_path, eig_subdiv, eig_k);
    if (*demo) return cmd_newton_demo(demo_start, demo_iters);
    if (*gen) return cmd_gen_mesh(gen_subdiv, gen_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
