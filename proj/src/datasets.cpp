#include "msino/datasets.hpp"

#include "msino/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace msino {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Shifts and scales values to zero mean and unit (population) variance and
// returns the scale so gradients can follow.
double standardize(Eigen::VectorXd& z) {
  const double mean = z.mean();
  z.array() -= mean;
  const double sd = std::sqrt(z.squaredNorm() / static_cast<double>(z.size()));
  if (!(sd > 0.0)) throw DegenerateError("cannot standardize a constant field");
  z /= sd;
  return sd;
}

Eigen::Vector3d tangent_noise(const Eigen::Vector3d& normal, double sigma, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, sigma);
  Eigen::Vector3d e(gauss(rng), gauss(rng), gauss(rng));
  return e - e.dot(normal) * normal;
}

}  // namespace

DatasetSplit split_80_20(int n, std::uint64_t seed) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(idx[i], idx[pick(rng)]);
  }
  DatasetSplit s;
  const int nval = n / 5;
  s.val.assign(idx.begin(), idx.begin() + nval);
  s.train.assign(idx.begin() + nval, idx.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

LabeledBatch gen_sphere_dataset(std::uint64_t seed, int n, double label_noise) {
  if (n < 10) throw ValidationError("sphere dataset needs n >= 10");
  const int rows = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
  const int cols = (n + rows - 1) / rows;
  LabeledBatch b;
  b.kind = ManifoldKind::sphere2();
  Eigen::VectorXd z(n);
  std::vector<Eigen::Vector3d> grads(n);
  for (int k = 0; k < n; ++k) {
    const int i = k / cols, j = k % cols;
    const double lat = -kPi / 2 + (i + 0.5) * kPi / rows;
    const double lon = 2.0 * kPi * j / cols;
    const Eigen::Vector3d x(std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon),
                            std::sin(lat));
    b.points.push_back(sphere_point(x));
    z[k] = 20.0 * std::cos(lat) + 5.0 * std::sin(3.0 * lon) * std::cos(lat);
    // Ambient extension f = 20 rho + 5 (3x^2 y - y^3) / rho^2 with rho^2 = x^2 + y^2.
    const double X = x[0], Y = x[1], r2 = X * X + Y * Y, rho = std::sqrt(r2);
    const double h = 3.0 * X * X * Y - Y * Y * Y;
    Eigen::Vector3d g(20.0 * X / rho, 20.0 * Y / rho, 0.0);
    g[0] += 5.0 * (6.0 * X * Y / r2 - 2.0 * X * h / (r2 * r2));
    g[1] += 5.0 * ((3.0 * X * X - 3.0 * Y * Y) / r2 - 2.0 * Y * h / (r2 * r2));
    grads[k] = g - g.dot(b.points[k].coords) * Eigen::Vector3d(b.points[k].coords);
  }
  const double sd = standardize(z);
  Rng rng(seed);
  b.values = z;
  for (int k = 0; k < n; ++k) {
    Eigen::Vector3d g = grads[k] / sd;
    if (label_noise > 0.0) g += tangent_noise(b.points[k].coords, label_noise, rng);
    b.grad_labels.push_back(g.transpose());
  }
  return b;
}

LabeledBatch gen_mesh_dataset(std::uint64_t seed, const TriMesh& mesh, double label_noise) {
  auto ctx = MeshContext::build(mesh);
  const int n = mesh.num_vertices();
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd noise(n);
  for (int i = 0; i < n; ++i) noise[i] = gauss(rng);
  const double t = 0.05 * mesh.total_area() / (4.0 * kPi);
  Eigen::VectorXd z = heat_diffuse(ctx->op, noise, t, 3);
  standardize(z);
  const Eigen::MatrixX3d grads = vertex_gradient(mesh, z);

  LabeledBatch b;
  b.kind = ManifoldKind::euclidean(3);
  b.mesh = ctx;
  b.values = z;
  for (int i = 0; i < n; ++i) {
    b.points.push_back(ManifoldPoint{b.kind, mesh.vertices.row(i).transpose()});
    b.vertex_ids.push_back(i);
    Eigen::Vector3d g = grads.row(i).transpose();
    if (label_noise > 0.0) g += tangent_noise(ctx->normals.row(i).transpose(), label_noise, rng);
    b.grad_labels.push_back(g.transpose());
  }
  return b;
}

LabeledBatch gen_so3_dataset(std::uint64_t seed, int T, double label_noise) {
  if (T < 2) throw ValidationError("SO(3) dataset needs T >= 2");
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  constexpr int kHarmonics = 3;
  double amp[3][kHarmonics], ph[3][kHarmonics];
  for (int c = 0; c < 3; ++c) {
    for (int h = 0; h < kHarmonics; ++h) {
      amp[c][h] = gauss(rng) / (h + 1);
      ph[c][h] = phase(rng);
    }
  }
  std::vector<Eigen::Vector3d> omega(T);
  double peak = 0.0;
  for (int s = 0; s < T; ++s) {
    for (int c = 0; c < 3; ++c) {
      double v = 0.0;
      for (int h = 0; h < kHarmonics; ++h) {
        v += amp[c][h] * std::sin(2.0 * kPi * (h + 1) * s / T + ph[c][h]);
      }
      omega[s][c] = v;
    }
    peak = std::max(peak, omega[s].norm());
  }
  const double scale = peak > 0.0 ? (kPi - 0.2) / peak : 1.0;

  LabeledBatch b;
  b.kind = ManifoldKind::so3();
  b.values.resize(T, 1);
  const ManifoldPoint ref = so3_point(Eigen::Matrix3d::Identity());
  std::normal_distribution<double> noise(0.0, label_noise > 0.0 ? label_noise : 1.0);
  for (int s = 0; s < T; ++s) {
    const ManifoldPoint R = so3_point(so3_exp(scale * omega[s]));
    const double d = geodesic_distance(R, ref);
    b.points.push_back(R);
    b.values(s, 0) = d;
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    if (d > 1e-6) g = -log_map(R, ref).components / d;
    if (label_noise > 0.0) g += Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
    b.grad_labels.push_back(g.transpose());
  }
  return b;
}

ToyProblem gen_toy_dataset(std::uint64_t seed, int n, int dim, double value_noise,
                           double label_noise) {
  if (n < 1 || dim < 1) throw ValidationError("toy dataset needs n >= 1 and dim >= 1");
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  ToyProblem toy;
  toy.a.resize(dim);
  for (int k = 0; k < dim; ++k) toy.a[k] = gauss(rng);
  toy.b = gauss(rng);
  LabeledBatch& b = toy.data;
  b.kind = ManifoldKind::euclidean(dim);
  b.values.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x(dim);
    for (int k = 0; k < dim; ++k) x[k] = unit(rng);
    b.points.push_back(ManifoldPoint{b.kind, x});
    b.values(i, 0) = toy.a.dot(x) + toy.b + value_noise * gauss(rng);
    Eigen::RowVectorXd g = toy.a.transpose();
    for (int k = 0; k < dim; ++k) g[k] += label_noise * gauss(rng);
    b.grad_labels.push_back(g);
  }
  return toy;
}

}  // namespace msino
