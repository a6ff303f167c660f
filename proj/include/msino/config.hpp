#pragma once

// Experiment configuration (JSON, snake_case keys, unknown keys rejected).

#include "msino/loss.hpp"
#include "msino/optim.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace msino {

enum class Task { MeshThickness, SphereField, So3Geodesic, ToyConvex };

std::string task_name(Task t);
Task parse_task(const std::string& name);  // ConfigError

struct ExperimentConfig {
  Task task = Task::SphereField;
  std::uint64_t seed = 0;
  int epochs = 30;
  int batch_size = 64;
  std::vector<int> net_dims;  // empty: task default
  LossWeights loss_weights;
  ScheduleConfig schedule_config;
  NewtonConfig newton_config;
  bool schedule_enabled = true;
  std::optional<int> newton_after_epoch;
  std::optional<std::string> mesh_path;
  std::string output_dir = "run";
  // Dataset knobs.
  int icosphere_subdiv = 4;
  std::optional<int> dataset_size;
  double gradient_label_noise = 0.0;
  /// Training stops with a diagnostic row once a batch loss exceeds this.
  double divergence_threshold = 1e12;

  /// Throws ConfigError when a field is out of range or the task lacks a
  /// required input.
  void validate() const;
  /// Input width implied by the task (3 for sphere and mesh, 9 for SO(3)).
  int input_dim() const;
  std::vector<int> resolved_net_dims() const;
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

}  // namespace msino
