#pragma once

// Dense feed-forward networks u_theta with exact first derivatives and exact
// parameter derivatives of the input Jacobian.
//
// Parameters are one flat vector; layer l stores its weight matrix row-major
// (out x in) followed by its bias. The forward pass can carry the input
// tangent J_l = d a_l / dx alongside the activations, and vjp() runs a reverse
// sweep through both, so any scalar built from u and du/dx has an exact
// parameter gradient.

#include "msino/manifold.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace msino {

enum class Activation { Tanh, Identity };

std::string activation_name(Activation a);
Activation parse_activation(const std::string& name);

struct NetParams {
  std::vector<int> dims;                // dims[0] = input, dims.back() = output
  std::vector<Activation> activations;  // one per layer
  Eigen::VectorXd theta;
  std::uint64_t seed = 0;

  int num_layers() const noexcept { return static_cast<int>(dims.size()) - 1; }
  int input_dim() const noexcept { return dims.front(); }
  int output_dim() const noexcept { return dims.back(); }
  int num_params() const noexcept { return static_cast<int>(theta.size()); }

  /// Offset of layer l's weights inside theta; its bias follows directly.
  int weight_offset(int l) const;
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> weight(int l) const;
  Eigen::Map<const Eigen::VectorXd> bias(int l) const;
};

/// Parameter count for a layer-size list.
int parameter_count(const std::vector<int>& dims);

/// tanh hidden layers and a linear output layer. Weights are Gaussian with
/// standard deviation 1/sqrt(fan_in), biases zero. Requires a hidden layer.
NetParams init(const std::vector<int>& dims, std::uint64_t seed);
/// Single affine layer u = A x + b with A Gaussian / sqrt(in).
NetParams init_linear(int in, int out, std::uint64_t seed);
/// Throws ShapeError / NonFiniteError.
void validate(const NetParams& params);

struct ForwardCache {
  std::vector<Eigen::VectorXd> a;  // activations, a[0] = input
  std::vector<Eigen::VectorXd> z;  // pre-activations, z[l] feeds a[l+1]
  std::vector<Eigen::MatrixXd> J;  // d a / dx, filled when tangents requested
  bool has_tangent = false;

  const Eigen::VectorXd& value() const { return a.back(); }
  /// m x d_in input Jacobian (requires tangents).
  const Eigen::MatrixXd& input_jacobian() const { return J.back(); }
};

ForwardCache forward(const NetParams& params, const Eigen::VectorXd& x, bool with_tangent);

/// Accumulates into grad (length p) the parameter gradient of
/// <u_bar, u> + <J_bar, du/dx>. J_bar may be empty when only values matter,
/// otherwise the cache must carry tangents.
void vjp(const NetParams& params, const ForwardCache& cache, const Eigen::VectorXd& u_bar,
         const Eigen::MatrixXd& J_bar, Eigen::Ref<Eigen::VectorXd> grad);

struct EvalNeeds {
  bool input_jacobian = true;
  bool param_jacobian_value = false;
  bool param_jacobian_gradient = false;
};

struct EvalBundle {
  Eigen::VectorXd value;                   // m
  Eigen::MatrixXd input_jacobian;          // m x d_in
  Eigen::MatrixXd param_jacobian_value;    // m x p
  Eigen::MatrixXd param_jacobian_gradient; // (m * d_in) x p, row k * d_in + j
};

/// Throws ShapeError on an input of the wrong size and NonFiniteError when
/// an output is not finite.
EvalBundle evaluate(const NetParams& params, const Eigen::VectorXd& x, const EvalNeeds& need);
EvalBundle evaluate(const NetParams& params, const ManifoldPoint& x, const EvalNeeds& need);

/// Largest singular value by power iteration on W^T W (tolerance 1e-6,
/// at most 500 iterations). Throws ConvergenceError.
double operator_norm(const Eigen::MatrixXd& W, double tol = 1e-6, int max_iter = 500);

/// max(1, product over layers of |W_l|_2 * slope bound of the activation).
double spectral_bound(const NetParams& params);

struct FrobeniusJacobianStats {
  double mean_sq = 0.0;  // mean over the probe batch of |J_theta u(x)|_F^2
  double S = 1.0;        // max(1, sqrt(mean_sq))
};
/// Closed form used on SO(3): RMS of the parameter Jacobian over a probe batch.
FrobeniusJacobianStats frobenius_jacobian(const NetParams& params,
                                          const std::vector<Eigen::VectorXd>& probes);

/// Little-endian float64 dump of theta plus a JSON sidecar with dims,
/// activations and seed.
void save_params(const NetParams& params, const std::string& bin_path,
                 const std::string& json_path);
NetParams load_params(const std::string& bin_path, const std::string& json_path);

}  // namespace msino
