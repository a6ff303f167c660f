#pragma once

// Independent reference computations used by the tests.

#include "msino/loss.hpp"

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <complex>

namespace oracle {

/// Matrix exponential by scaling and squaring with a 20-term Taylor series.
inline Eigen::Matrix3d expm(const Eigen::Matrix3d& A) {
  const double n = A.lpNorm<Eigen::Infinity>();
  int s = 0;
  if (n > 0.5) s = static_cast<int>(std::ceil(std::log2(n / 0.5)));
  const Eigen::Matrix3d B = A / std::pow(2.0, s);
  Eigen::Matrix3d term = Eigen::Matrix3d::Identity(), sum = term;
  for (int k = 1; k <= 20; ++k) {
    term = term * B / k;
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

/// Principal matrix logarithm through a complex eigendecomposition.
/// Valid for rotations with angle strictly below pi.
inline Eigen::Matrix3d logm(const Eigen::Matrix3d& R) {
  Eigen::EigenSolver<Eigen::Matrix3d> es(R);
  const Eigen::Matrix3cd V = es.eigenvectors();
  Eigen::Vector3cd lv = es.eigenvalues();
  for (int i = 0; i < 3; ++i) lv[i] = std::log(lv[i]);
  const Eigen::Matrix3cd L = V * lv.asDiagonal() * V.inverse();
  return L.real();
}

/// Parallel transport on the unit sphere by Schild's ladder along the
/// geodesic from p to q, using only normalized chords.
inline Eigen::Vector3d schild_transport(const Eigen::Vector3d& p, const Eigen::Vector3d& q,
                                        const Eigen::Vector3d& v, int rungs) {
  const auto slerp = [](const Eigen::Vector3d& a, const Eigen::Vector3d& b, double t) {
    const double om = std::acos(std::clamp(a.dot(b), -1.0, 1.0));
    if (om < 1e-15) return a;
    return ((std::sin((1 - t) * om) * a + std::sin(t * om) * b) / std::sin(om)).eval();
  };
  const auto expp = [](const Eigen::Vector3d& x, const Eigen::Vector3d& w) {
    const double n = w.norm();
    if (n < 1e-300) return x;
    return (std::cos(n) * x + std::sin(n) * w / n).eval();
  };
  const auto logp = [](const Eigen::Vector3d& x, const Eigen::Vector3d& y) {
    const Eigen::Vector3d u = y - x.dot(y) * x;
    const double n = u.norm();
    const double th = std::atan2(n, x.dot(y));
    return n < 1e-300 ? Eigen::Vector3d::Zero().eval() : (th * u / n).eval();
  };
  const double eps = 1e-6;
  Eigen::Vector3d x = p, w = v * eps;
  for (int k = 1; k <= rungs; ++k) {
    const Eigen::Vector3d x_next = slerp(p, q, static_cast<double>(k) / rungs);
    const Eigen::Vector3d tip = expp(x, w);
    const Eigen::Vector3d mid = slerp(tip, x_next, 0.5);
    const Eigen::Vector3d far = expp(x, 2.0 * logp(x, mid));
    w = logp(x_next, far);
    x = x_next;
  }
  return w / eps;
}

/// Five-point finite-difference gradient of the batch loss.
inline Eigen::VectorXd loss_gradient_fd(const msino::NetParams& params,
                                        const msino::LabeledBatch& batch,
                                        const msino::LossWeights& w, double h = 1e-3) {
  msino::LossOptions lo;
  lo.need_gradient = false;
  Eigen::VectorXd g(params.num_params());
  msino::NetParams q = params;
  for (int i = 0; i < params.num_params(); ++i) {
    double f[4];
    const double steps[4] = {2 * h, h, -h, -2 * h};
    for (int s = 0; s < 4; ++s) {
      q.theta[i] = params.theta[i] + steps[s];
      f[s] = msino::evaluate_loss(q, batch, w, lo).total;
    }
    q.theta[i] = params.theta[i];
    g[i] = (-f[0] + 8 * f[1] - 8 * f[2] + f[3]) / (12 * h);
  }
  return g;
}

/// max |a - f| / max(|f|, 1e-3 |f|_inf, 1e-8).
inline double rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& f) {
  const double scale = f.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - f[i]) / std::max({std::abs(f[i]), 1e-3 * scale, 1e-8}));
  }
  return worst;
}

}  // namespace oracle
