#include "msino/config.hpp"

#include "msino/errors.hpp"

#include <fstream>
#include <set>

namespace msino {

using nlohmann::json;

std::string task_name(Task t) {
  switch (t) {
    case Task::MeshThickness: return "mesh_thickness";
    case Task::SphereField: return "sphere_field";
    case Task::So3Geodesic: return "so3_geodesic";
    case Task::ToyConvex: return "toy_convex";
  }
  return "unknown";
}

Task parse_task(const std::string& name) {
  for (Task t : {Task::MeshThickness, Task::SphereField, Task::So3Geodesic, Task::ToyConvex}) {
    if (task_name(t) == name) return t;
  }
  throw ConfigError("unknown task '" + name + "'");
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

double read_number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

int read_int(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) {
    throw ConfigError(std::string("'") + key + "' must be an integer");
  }
  return j.at(key).get<int>();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (icosphere_subdiv < 0 || icosphere_subdiv > 7) {
    throw ConfigError("icosphere_subdiv must lie in [0, 7]");
  }
  if (dataset_size && *dataset_size < 10) throw ConfigError("dataset_size must be >= 10");
  if (!(gradient_label_noise >= 0.0)) throw ConfigError("gradient_label_noise must be >= 0");
  if (newton_after_epoch && *newton_after_epoch < 0) {
    throw ConfigError("newton_after_epoch must be >= 0");
  }
  if (!(divergence_threshold > 0.0)) throw ConfigError("divergence_threshold must be > 0");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  try {
    loss_weights.validate();
    schedule_config.validate();
    newton_config.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  if (loss_weights.beta > 0.0 && task != Task::MeshThickness) {
    throw ConfigError("beta > 0 needs the mesh_thickness task");
  }
  const auto dims = resolved_net_dims();
  if (dims.size() < 2) throw ConfigError("net_dims needs at least input and output sizes");
  if (dims.front() != input_dim()) {
    throw ConfigError("net_dims[0] must be " + std::to_string(input_dim()) + " for task " +
                      task_name(task));
  }
  if (dims.back() != 1) throw ConfigError("all tasks have scalar outputs; net_dims must end in 1");
  for (int d : dims)
    if (d < 1) throw ConfigError("net_dims entries must be positive");
}

int ExperimentConfig::input_dim() const {
  switch (task) {
    case Task::So3Geodesic: return 9;
    case Task::ToyConvex: return 2;
    default: return 3;
  }
}

std::vector<int> ExperimentConfig::resolved_net_dims() const {
  if (!net_dims.empty()) return net_dims;
  if (task == Task::ToyConvex) return {2, 1};
  return {input_dim(), 32, 32, 1};
}

ExperimentConfig parse_config(const json& j) {
  reject_unknown(j,
                 {"task", "seed", "epochs", "batch_size", "net_dims", "loss_weights",
                  "schedule_config", "newton_config", "schedule_enabled", "newton_after_epoch",
                  "mesh_path", "output_dir", "icosphere_subdiv", "dataset_size",
                  "gradient_label_noise", "divergence_threshold"},
                 "config");
  ExperimentConfig c;
  if (!j.contains("task") || !j.at("task").is_string()) throw ConfigError("'task' is required");
  c.task = parse_task(j.at("task").get<std::string>());
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ConfigError("'seed' must be a nonnegative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  c.epochs = read_int(j, "epochs", c.epochs);
  c.batch_size = read_int(j, "batch_size", c.batch_size);
  read(j, "net_dims", c.net_dims);
  if (j.contains("loss_weights")) {
    const json& w = j.at("loss_weights");
    reject_unknown(w, {"lambda", "beta"}, "loss_weights");
    c.loss_weights.lambda = read_number(w, "lambda", c.loss_weights.lambda);
    c.loss_weights.beta = read_number(w, "beta", c.loss_weights.beta);
  }
  if (j.contains("schedule_config")) {
    const json& s = j.at("schedule_config");
    reject_unknown(s, {"c_lambda", "lambda_max", "epsilon", "eta_max", "ema_decay"},
                   "schedule_config");
    auto& sc = c.schedule_config;
    sc.c_lambda = read_number(s, "c_lambda", sc.c_lambda);
    sc.lambda_max = read_number(s, "lambda_max", sc.lambda_max);
    sc.epsilon = read_number(s, "epsilon", sc.epsilon);
    sc.eta_max = read_number(s, "eta_max", sc.eta_max);
    sc.ema_decay = read_number(s, "ema_decay", sc.ema_decay);
  }
  if (j.contains("newton_config")) {
    const json& s = j.at("newton_config");
    reject_unknown(s,
                   {"gn_damping", "backtrack_shrink", "armijo_c", "alpha_min", "max_backtracks",
                    "hessian_fd_step"},
                   "newton_config");
    auto& nc = c.newton_config;
    nc.gn_damping = read_number(s, "gn_damping", nc.gn_damping);
    nc.backtrack_shrink = read_number(s, "backtrack_shrink", nc.backtrack_shrink);
    nc.armijo_c = read_number(s, "armijo_c", nc.armijo_c);
    nc.alpha_min = read_number(s, "alpha_min", nc.alpha_min);
    nc.max_backtracks = read_int(s, "max_backtracks", nc.max_backtracks);
    nc.hessian_fd_step = read_number(s, "hessian_fd_step", nc.hessian_fd_step);
  }
  if (j.contains("schedule_enabled")) {
    if (!j.at("schedule_enabled").is_boolean()) throw ConfigError("'schedule_enabled' must be boolean");
    c.schedule_enabled = j.at("schedule_enabled").get<bool>();
  }
  if (j.contains("newton_after_epoch") && !j.at("newton_after_epoch").is_null()) {
    c.newton_after_epoch = read_int(j, "newton_after_epoch", 0);
  }
  if (j.contains("mesh_path") && !j.at("mesh_path").is_null()) {
    std::string path;
    read(j, "mesh_path", path);
    c.mesh_path = path;
  }
  read(j, "output_dir", c.output_dir);
  c.icosphere_subdiv = read_int(j, "icosphere_subdiv", c.icosphere_subdiv);
  if (j.contains("dataset_size") && !j.at("dataset_size").is_null()) {
    c.dataset_size = read_int(j, "dataset_size", 0);
  }
  c.gradient_label_noise = read_number(j, "gradient_label_noise", c.gradient_label_noise);
  c.divergence_threshold = read_number(j, "divergence_threshold", c.divergence_threshold);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON in ") + path + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["task"] = task_name(c.task);
  j["seed"] = c.seed;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["net_dims"] = c.resolved_net_dims();
  j["loss_weights"] = {{"lambda", c.loss_weights.lambda}, {"beta", c.loss_weights.beta}};
  const auto& s = c.schedule_config;
  j["schedule_config"] = {{"c_lambda", s.c_lambda},
                          {"lambda_max", s.lambda_max},
                          {"epsilon", s.epsilon},
                          {"eta_max", s.eta_max},
                          {"ema_decay", s.ema_decay}};
  const auto& n = c.newton_config;
  j["newton_config"] = {{"gn_damping", n.gn_damping},
                        {"backtrack_shrink", n.backtrack_shrink},
                        {"armijo_c", n.armijo_c},
                        {"alpha_min", n.alpha_min},
                        {"max_backtracks", n.max_backtracks},
                        {"hessian_fd_step", n.hessian_fd_step}};
  j["schedule_enabled"] = c.schedule_enabled;
  j["newton_after_epoch"] = c.newton_after_epoch ? json(*c.newton_after_epoch) : json(nullptr);
  j["mesh_path"] = c.mesh_path ? json(*c.mesh_path) : json(nullptr);
  j["output_dir"] = c.output_dir;
  j["icosphere_subdiv"] = c.icosphere_subdiv;
  j["dataset_size"] = c.dataset_size ? json(*c.dataset_size) : json(nullptr);
  j["gradient_label_noise"] = c.gradient_label_noise;
  j["divergence_threshold"] = c.divergence_threshold;
  return j;
}

}  // namespace msino
