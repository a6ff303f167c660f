#pragma once

// Finite-difference audit of the analytic loss gradient.

#include "msino/loss.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace msino {

/// Five-point central differences of the batch loss in every parameter.
Eigen::VectorXd finite_difference_gradient(const NetParams& params, const LabeledBatch& batch,
                                           const LossWeights& weights, double h = 1e-3);

/// max_i |a_i - f_i| / max(|f_i|, 1e-3 |f|_inf, 1e-8).
double fd_relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& fd);

struct GradientCheckCase {
  std::string task;
  double lambda = 0.0;
  double beta = 0.0;
  int num_params = 0;
  int batch_size = 0;
  double rel_error = 0.0;
};

struct GradientCheckReport {
  std::vector<GradientCheckCase> cases;
  double max_rel_error = 0.0;
};

/// Seeded random cases cycling over the sphere, SO(3), mesh and toy tasks
/// with lambda in {0, 0.5, 10} and, on the mesh, beta in {0, 1e-3}.
GradientCheckReport run_gradient_checks(std::uint64_t seed, int cases = 50);

}  // namespace msino
