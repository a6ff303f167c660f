#include "msino/run.hpp"

#include "msino/errors.hpp"
#include "msino/metrics_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

namespace msino {

namespace fs = std::filesystem;

TaskData prepare_task(const ExperimentConfig& cfg) {
  cfg.validate();
  TaskData td;
  const double noise = cfg.gradient_label_noise;
  switch (cfg.task) {
    case Task::SphereField:
      td.pool = gen_sphere_dataset(cfg.seed, cfg.dataset_size.value_or(4096), noise);
      td.geo = GeometryPackage::defaults(ManifoldKind::sphere2());
      break;
    case Task::MeshThickness: {
      TriMesh mesh = cfg.mesh_path ? load_off_file(*cfg.mesh_path)
                                   : make_icosphere(cfg.icosphere_subdiv);
      td.pool = gen_mesh_dataset(cfg.seed, mesh, noise);
      td.geo = geometry_package_for_mesh(td.pool.mesh->mesh, td.pool.mesh->op);
      break;
    }
    case Task::So3Geodesic:
      td.pool = gen_so3_dataset(cfg.seed, cfg.dataset_size.value_or(1000), noise);
      td.geo = GeometryPackage::defaults(ManifoldKind::so3());
      td.mode = SmoothnessMode::FrobeniusSO3;
      break;
    case Task::ToyConvex:
      td.pool = gen_toy_dataset(cfg.seed, cfg.dataset_size.value_or(512), cfg.input_dim(), 0.0,
                                noise)
                    .data;
      td.geo = GeometryPackage::defaults(ManifoldKind::euclidean(cfg.input_dim()));
      break;
  }
  td.split = split_80_20(td.pool.size(), cfg.seed);
  if (td.mode == SmoothnessMode::FrobeniusSO3) {
    const std::size_t n = std::min<std::size_t>(32, td.split.train.size());
    for (std::size_t i = 0; i < n; ++i) td.probes.push_back(td.pool.points[td.split.train[i]].coords);
  }
  return td;
}

namespace {

double frobenius_or_spectral_S(const NetParams& params, const TaskData& td) {
  if (td.mode == SmoothnessMode::FrobeniusSO3) return frobenius_jacobian(params, td.probes).S;
  return spectral_bound(params);
}

std::vector<int> head(const std::vector<int>& v, int n) {
  return {v.begin(), v.begin() + std::min<std::size_t>(v.size(), static_cast<std::size_t>(n))};
}

}  // namespace

RunArtifacts run(const ExperimentConfig& cfg, std::ostream* log) {
  const TaskData td = prepare_task(cfg);
  if (td.split.train.empty() || td.split.val.empty()) {
    throw ValidationError("dataset too small for an 80/20 split");
  }
  const auto dims = cfg.resolved_net_dims();

  TrainState state;
  state.params = dims.size() == 2 ? init_linear(dims[0], dims[1], cfg.seed)
                                  : init(dims, cfg.seed);
  state.lambda_k = cfg.loss_weights.lambda;

  SgdOptions opts;
  opts.schedule_enabled = cfg.schedule_enabled;
  opts.mode = td.mode;
  opts.probes = td.probes;
  opts.divergence_threshold = cfg.divergence_threshold;

  const LabeledBatch val = td.pool.subset(td.split.val);
  const LabeledBatch fixed = td.pool.subset(head(td.split.train, std::max(2, cfg.batch_size)));
  Rng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  RunArtifacts art;
  std::vector<std::vector<double>> diag_rows;
  std::vector<int> order = td.split.train;
  double prev_total = std::numeric_limits<double>::quiet_NaN();
  const auto t0 = std::chrono::steady_clock::now();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    MetricsRow row;
    row.epoch = epoch;
    const std::size_t steps_before = state.steps.size();
    const bool newton_phase = cfg.newton_after_epoch && epoch > *cfg.newton_after_epoch;
    std::string phase = "sgd";
    try {
      double sum_total = 0.0, sum_sob = 0.0, sum_lap = 0.0;
      int batches = 0;
      bool descent = true;
      bool did_newton = false;
      if (newton_phase) {
        try {
          const LossWeights w{state.lambda_k, cfg.loss_weights.beta};
          const NewtonIterate it =
              two_step_newton(state, fixed, w, td.geo, cfg.newton_config, opts);
          const LossBreakdown after = evaluate_loss(state.params, fixed, w, {false});
          if (!std::isfinite(it.loss_after) || it.loss_after > opts.divergence_threshold) {
            throw DivergenceError(it.loss_after, "Newton step produced a divergent loss");
          }
          sum_total = it.loss_after;
          sum_sob = after.sobolev_term;
          sum_lap = after.laplace_term;
          batches = 1;
          did_newton = true;
          phase = "newton";
        } catch (const IndefiniteHessianError& e) {
          if (log) *log << "epoch " << epoch << ": " << e.what() << "; using SGD\n";
        } catch (const SingularSystemError& e) {
          if (log) *log << "epoch " << epoch << ": " << e.what() << "; using SGD\n";
        }
      }
      if (!did_newton) {
        for (std::size_t i = order.size(); i > 1; --i) {
          std::uniform_int_distribution<std::size_t> pick(0, i - 1);
          std::swap(order[i - 1], order[pick(shuffle_rng)]);
        }
        for (std::size_t s = 0; s < order.size(); s += cfg.batch_size) {
          const std::size_t e = std::min(order.size(), s + cfg.batch_size);
          const LabeledBatch batch =
              td.pool.subset(std::span<const int>(order.data() + s, e - s));
          const StepReport rep = sgd_step(state, batch, cfg.loss_weights, td.geo,
                                          cfg.schedule_config, opts);
          sum_total += rep.before.total;
          sum_sob += rep.before.sobolev_term;
          sum_lap += rep.before.laplace_term;
          descent = descent && rep.descent_ok;
          ++batches;
        }
      }
      row.total = sum_total / batches;
      row.sob = sum_sob / batches;
      row.lap = sum_lap / batches;
      row.descent_ok = descent;
    } catch (const DivergenceError& e) {
      art.diverged = true;
      art.divergence_message = e.what();
      row.total = e.loss();
      row.val = std::numeric_limits<double>::quiet_NaN();
      row.rho_k = std::isfinite(prev_total) && prev_total > 0.0 ? e.loss() / prev_total
                                                                  : row.rho_k;
      row.lambda_k = state.lambda_k;
      row.L_sob = state.L_sob;
      row.lr_cap = state.eta_k;
      row.descent_ok = false;
      art.rows.push_back(row);
      diag_rows.push_back({static_cast<double>(epoch), row.total,
                           std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0, 0.0, 0.0,
                           state.var_x, state.var_grad, 0.0,
                           static_cast<double>(state.steps.size() - steps_before)});
      if (log) *log << "epoch " << epoch << ": diverged (" << e.what() << ")\n";
      break;
    }

    const LossWeights w_now{state.lambda_k, cfg.loss_weights.beta};
    LossOptions no_grad;
    no_grad.need_gradient = false;
    const LossBreakdown vb = evaluate_loss(state.params, val, w_now, no_grad);
    row.val = vb.value_term;
    row.rho_k = std::isfinite(prev_total) && prev_total > 0.0 ? row.total / prev_total : 1.0;
    prev_total = row.total;
    row.lambda_k = state.lambda_k;
    row.L_sob = state.L_sob;
    row.lr_cap = state.eta_k;

    const double S = frobenius_or_spectral_S(state.params, td);
    const NoiseSplit ns = noise_split(state.params, fixed, w_now, td.geo, S);
    row.sigma_sample = ns.sigma_sample;
    row.sigma_transport = ns.sigma_transport;
    try {
      row.mu_hat = pl_estimate(state.steps, 0.0);
    } catch (const InsufficientHistory&) {
      row.mu_hat = 0.0;
    }
    art.rows.push_back(row);
    state.history.push_back(row);
    diag_rows.push_back({static_cast<double>(epoch), vb.total, vb.sobolev_term, ns.bound,
                         ns.diameter, S,
                         noise_floor_ratio(state.lambda_k, cfg.schedule_config.lambda_max),
                         state.var_x, state.var_grad, phase == "newton" ? 1.0 : 0.0,
                         static_cast<double>(state.steps.size() - steps_before)});
    if (log) {
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      *log << "epoch " << epoch << " [" << phase << "] total " << format_number(row.total)
           << " val " << format_number(row.val) << " lambda " << format_number(row.lambda_k)
           << " rho " << format_number(row.rho_k) << " L " << format_number(row.L_sob) << " ("
           << format_number(secs) << " s)\n";
    }
  }

  fs::create_directories(cfg.output_dir);
  const fs::path dir(cfg.output_dir);
  art.metrics_csv = (dir / "metrics.csv").string();
  art.diagnostics_csv = (dir / "diagnostics.csv").string();
  art.config_json = (dir / "config.json").string();
  art.params_bin = (dir / "params.bin").string();
  art.params_json = (dir / "params.json").string();

  write_metrics_csv(art.metrics_csv, art.rows);
  write_table_csv(art.diagnostics_csv,
                  {"epoch", "val_total", "val_sob", "transport_bound", "batch_diameter", "S",
                   "noise_floor_ratio", "var_x", "var_grad", "newton", "sgd_steps"},
                  diag_rows);

  nlohmann::json echo = to_json(cfg);
  echo["data_note"] =
      "synthetic stand-in data generated from the seed; no external datasets are used";
  echo["geometry"] = {{"C", td.geo.C},
                      {"P", td.geo.P},
                      {"diamU", td.geo.diamU},
                      {"kappa_poincare", td.geo.kappa_poincare}};
  echo["pl_lower_bound"] = pl_lower_bound(td.geo, cfg.schedule_config.lambda_max);
  echo["num_params"] = state.params.theta.size();
  echo["train_size"] = td.split.train.size();
  echo["val_size"] = td.split.val.size();
  echo["diverged"] = art.diverged;
  {
    std::ofstream out(art.config_json);
    if (!out) throw Error("cannot write " + art.config_json);
    out << echo.dump(2) << '\n';
  }
  save_params(state.params, art.params_bin, art.params_json);

  std::vector<double> x, total, lambda, rho, lsob;
  for (const auto& r : art.rows) {
    x.push_back(r.epoch);
    total.push_back(r.total);
    lambda.push_back(r.lambda_k);
    rho.push_back(r.rho_k);
    lsob.push_back(r.L_sob);
  }
  const auto plot = [&](const char* name, const char* title, const char* ylabel,
                        const std::vector<double>& y, bool log_y) {
    const std::string path = (dir / name).string();
    write_line_plot(path, title, ylabel, x, y, log_y);
    art.plots.push_back(path);
  };
  plot("loss.svg", "Training loss", "total", total, true);
  plot("lambda.svg", "Sobolev weight", "lambda_k", lambda, false);
  plot("rho.svg", "Epoch loss ratio", "rho_k", rho, false);
  plot("lsob.svg", "Smoothness constant", "L_sob", lsob, true);
  return art;
}

}  // namespace msino
