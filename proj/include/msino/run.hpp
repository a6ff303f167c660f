#pragma once

// End-to-end training runs driven by an ExperimentConfig.

#include "msino/config.hpp"
#include "msino/datasets.hpp"
#include "msino/optim.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace msino {

struct TaskData {
  LabeledBatch pool;
  DatasetSplit split;
  GeometryPackage geo;
  SmoothnessMode mode = SmoothnessMode::LayerNorm;
  std::vector<Eigen::VectorXd> probes;  // SO(3) Frobenius probes
};

TaskData prepare_task(const ExperimentConfig& cfg);

struct RunArtifacts {
  std::string metrics_csv;
  std::string diagnostics_csv;
  std::string config_json;
  std::string params_bin;
  std::string params_json;
  std::vector<std::string> plots;
  std::vector<MetricsRow> rows;
  bool diverged = false;
  std::string divergence_message;
};

/// Trains per the config and writes every artifact under cfg.output_dir.
/// A DivergenceError ends the run with a final diagnostic row and
/// diverged = true instead of propagating.
RunArtifacts run(const ExperimentConfig& cfg, std::ostream* log = nullptr);

}  // namespace msino
