#include "msino/net.hpp"

#include "msino/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace msino {

namespace {

void activate(Activation act, const Eigen::VectorXd& z, Eigen::VectorXd& a) {
  a = act == Activation::Tanh ? Eigen::VectorXd(z.array().tanh()) : z;
}

// First and second derivative of the activation, given its output t.
void slopes(Activation act, const Eigen::VectorXd& t, Eigen::VectorXd& d1, Eigen::VectorXd& d2) {
  if (act == Activation::Tanh) {
    d1 = 1.0 - t.array().square();
    d2 = -2.0 * t.array() * d1.array();
  } else {
    d1 = Eigen::VectorXd::Ones(t.size());
    d2 = Eigen::VectorXd::Zero(t.size());
  }
}

}  // namespace

std::string activation_name(Activation a) { return a == Activation::Tanh ? "tanh" : "identity"; }

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw ShapeError("unknown activation '" + name + "'");
}

int parameter_count(const std::vector<int>& dims) {
  int p = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) p += dims[l + 1] * (dims[l] + 1);
  return p;
}

int NetParams::weight_offset(int l) const {
  int off = 0;
  for (int i = 0; i < l; ++i) off += dims[i + 1] * (dims[i] + 1);
  return off;
}

Eigen::Map<const NetParams::RowMajor> NetParams::weight(int l) const {
  return Eigen::Map<const RowMajor>(theta.data() + weight_offset(l), dims[l + 1], dims[l]);
}

Eigen::Map<const Eigen::VectorXd> NetParams::bias(int l) const {
  return Eigen::Map<const Eigen::VectorXd>(theta.data() + weight_offset(l) + dims[l + 1] * dims[l],
                                           dims[l + 1]);
}

namespace {

NetParams gaussian_params(const std::vector<int>& dims, std::vector<Activation> acts,
                          std::uint64_t seed) {
  NetParams params;
  params.dims = dims;
  params.activations = std::move(acts);
  params.seed = seed;
  params.theta = Eigen::VectorXd::Zero(parameter_count(dims));
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int l = 0; l < params.num_layers(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    double* w = params.theta.data() + params.weight_offset(l);
    for (int i = 0; i < dims[l + 1] * dims[l]; ++i) w[i] = scale * gauss(rng);
  }
  return params;
}

}  // namespace

NetParams init(const std::vector<int>& dims, std::uint64_t seed) {
  if (dims.size() < 3) throw ShapeError("init: need at least one hidden layer");
  for (int d : dims)
    if (d < 1) throw ShapeError("init: layer sizes must be positive");
  std::vector<Activation> acts(dims.size() - 1, Activation::Tanh);
  acts.back() = Activation::Identity;
  return gaussian_params(dims, std::move(acts), seed);
}

NetParams init_linear(int in, int out, std::uint64_t seed) {
  if (in < 1 || out < 1) throw ShapeError("init_linear: sizes must be positive");
  return gaussian_params({in, out}, {Activation::Identity}, seed);
}

void validate(const NetParams& params) {
  if (params.dims.size() < 2) throw ShapeError("network needs at least one layer");
  if (static_cast<int>(params.activations.size()) != params.num_layers()) {
    throw ShapeError("one activation per layer required");
  }
  if (params.theta.size() != parameter_count(params.dims)) {
    throw ShapeError("theta length does not match layer sizes");
  }
  if (!params.theta.allFinite()) throw NonFiniteError("non-finite network parameter");
}

ForwardCache forward(const NetParams& params, const Eigen::VectorXd& x, bool with_tangent) {
  if (x.size() != params.input_dim()) {
    throw ShapeError("input has " + std::to_string(x.size()) + " entries, network expects " +
                     std::to_string(params.input_dim()));
  }
  const int L = params.num_layers();
  ForwardCache c;
  c.has_tangent = with_tangent;
  c.a.resize(L + 1);
  c.z.resize(L);
  c.a[0] = x;
  if (with_tangent) {
    c.J.resize(L + 1);
    c.J[0] = Eigen::MatrixXd::Identity(x.size(), x.size());
  }
  for (int l = 0; l < L; ++l) {
    const auto W = params.weight(l);
    c.z[l] = W * c.a[l] + params.bias(l);
    activate(params.activations[l], c.z[l], c.a[l + 1]);
    if (with_tangent) {
      Eigen::VectorXd d1, d2;
      slopes(params.activations[l], c.a[l + 1], d1, d2);
      c.J[l + 1] = d1.asDiagonal() * (W * c.J[l]);
    }
  }
  return c;
}

void vjp(const NetParams& params, const ForwardCache& c, const Eigen::VectorXd& u_bar,
         const Eigen::MatrixXd& J_bar, Eigen::Ref<Eigen::VectorXd> grad) {
  const bool tangent = J_bar.size() > 0;
  if (tangent && !c.has_tangent) throw ShapeError("vjp: cache lacks input tangents");
  Eigen::VectorXd a_bar = u_bar;
  Eigen::MatrixXd Jb = J_bar;
  for (int l = params.num_layers() - 1; l >= 0; --l) {
    const auto W = params.weight(l);
    const int off = params.weight_offset(l);
    Eigen::Map<NetParams::RowMajor> gW(grad.data() + off, params.dims[l + 1], params.dims[l]);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + off + W.size(), params.dims[l + 1]);

    Eigen::VectorXd d1, d2;
    slopes(params.activations[l], c.a[l + 1], d1, d2);
    Eigen::VectorXd z_bar = d1.cwiseProduct(a_bar);
    Eigen::MatrixXd Zt_bar;
    if (tangent) {
      // J[l+1] = diag(d1) * (W J[l]); the pre-activation tangent is W J[l].
      const Eigen::MatrixXd Zt = W * c.J[l];
      Zt_bar = d1.asDiagonal() * Jb;
      z_bar += d2.cwiseProduct(Jb.cwiseProduct(Zt).rowwise().sum());
      gW.noalias() += Zt_bar * c.J[l].transpose();
    }
    gW.noalias() += z_bar * c.a[l].transpose();
    gb += z_bar;
    if (l > 0) {
      a_bar = W.transpose() * z_bar;
      if (tangent) Jb = W.transpose() * Zt_bar;
    }
  }
}

EvalBundle evaluate(const NetParams& params, const Eigen::VectorXd& x, const EvalNeeds& need) {
  const bool tangent = need.input_jacobian || need.param_jacobian_gradient;
  const ForwardCache c = forward(params, x, tangent);
  EvalBundle out;
  out.value = c.value();
  if (!out.value.allFinite()) throw NonFiniteError("network output is not finite");
  const int m = params.output_dim(), d = params.input_dim(), p = params.num_params();
  if (need.input_jacobian) out.input_jacobian = c.input_jacobian();
  if (need.param_jacobian_value) {
    out.param_jacobian_value = Eigen::MatrixXd::Zero(m, p);
    Eigen::VectorXd g(p);
    for (int k = 0; k < m; ++k) {
      g.setZero();
      vjp(params, c, Eigen::VectorXd::Unit(m, k), Eigen::MatrixXd(), g);
      out.param_jacobian_value.row(k) = g.transpose();
    }
  }
  if (need.param_jacobian_gradient) {
    out.param_jacobian_gradient = Eigen::MatrixXd::Zero(m * d, p);
    Eigen::VectorXd g(p);
    for (int k = 0; k < m; ++k) {
      for (int j = 0; j < d; ++j) {
        Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(m, d);
        seed(k, j) = 1.0;
        g.setZero();
        vjp(params, c, Eigen::VectorXd::Zero(m), seed, g);
        out.param_jacobian_gradient.row(k * d + j) = g.transpose();
      }
    }
  }
  return out;
}

EvalBundle evaluate(const NetParams& params, const ManifoldPoint& x, const EvalNeeds& need) {
  return evaluate(params, x.coords, need);
}

double operator_norm(const Eigen::MatrixXd& W, double tol, int max_iter) {
  if (W.size() == 0 || W.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const Eigen::MatrixXd G = W.transpose() * W;
  const int n = static_cast<int>(G.rows());
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = 1.0 + 0.37 * i / n;
  v.normalize();
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd w = G * v;
    const double theta = v.dot(w);
    if ((w - theta * v).norm() <= tol * theta) return std::sqrt(theta);
    v = w.normalized();
  }
  throw ConvergenceError("power iteration did not converge in " + std::to_string(max_iter) +
                         " iterations");
}

double spectral_bound(const NetParams& params) {
  double prod = 1.0;
  for (int l = 0; l < params.num_layers(); ++l) {
    // Both supported activations have slope bound 1.
    prod *= operator_norm(params.weight(l));
  }
  return std::max(1.0, prod);
}

FrobeniusJacobianStats frobenius_jacobian(const NetParams& params,
                                          const std::vector<Eigen::VectorXd>& probes) {
  FrobeniusJacobianStats s;
  if (probes.empty()) return s;
  const int m = params.output_dim(), p = params.num_params();
  Eigen::VectorXd g(p);
  double acc = 0.0;
  for (const auto& x : probes) {
    const ForwardCache c = forward(params, x, false);
    for (int k = 0; k < m; ++k) {
      g.setZero();
      vjp(params, c, Eigen::VectorXd::Unit(m, k), Eigen::MatrixXd(), g);
      acc += g.squaredNorm();
    }
  }
  s.mean_sq = acc / static_cast<double>(probes.size());
  s.S = std::max(1.0, std::sqrt(s.mean_sq));
  return s;
}

void save_params(const NetParams& params, const std::string& bin_path,
                 const std::string& json_path) {
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw Error("cannot write " + bin_path);
  for (int i = 0; i < params.num_params(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &params.theta[i], sizeof bits);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
    bin.write(reinterpret_cast<const char*>(bytes), 8);
  }
  nlohmann::json meta;
  meta["dims"] = params.dims;
  std::vector<std::string> acts;
  for (auto a : params.activations) acts.push_back(activation_name(a));
  meta["activations"] = acts;
  meta["seed"] = params.seed;
  meta["num_params"] = params.num_params();
  meta["layout"] = "per layer: weight row-major (out x in), then bias";
  meta["encoding"] = "float64 little-endian";
  std::ofstream js(json_path);
  if (!js) throw Error("cannot write " + json_path);
  js << meta.dump(2) << '\n';
}

NetParams load_params(const std::string& bin_path, const std::string& json_path) {
  std::ifstream js(json_path);
  if (!js) throw Error("cannot read " + json_path);
  const auto meta = nlohmann::json::parse(js);
  NetParams params;
  params.dims = meta.at("dims").get<std::vector<int>>();
  for (const auto& a : meta.at("activations")) params.activations.push_back(parse_activation(a));
  params.seed = meta.at("seed").get<std::uint64_t>();
  params.theta.resize(parameter_count(params.dims));
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw Error("cannot read " + bin_path);
  for (int i = 0; i < params.num_params(); ++i) {
    unsigned char bytes[8];
    if (!bin.read(reinterpret_cast<char*>(bytes), 8)) throw ShapeError("parameter file too short");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    std::memcpy(&params.theta[i], &bits, sizeof bits);
  }
  validate(params);
  return params;
}

}  // namespace msino
