#include "msino/mesh.hpp"

#include "msino/errors.hpp"

#include <Eigen/Geometry>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

namespace msino {

namespace {

constexpr double kMaxCotangent = 1e8;

double cotangent(const Eigen::Vector3d& apex, const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const Eigen::Vector3d e1 = a - apex;
  const Eigen::Vector3d e2 = b - apex;
  return e1.dot(e2) / e1.cross(e2).norm();
}

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

// ---------------------------------------------------------------------------
// TriMesh

int TriMesh::num_edges() const {
  std::vector<std::pair<int, int>> edges;
  edges.reserve(faces.size() * 3);
  for (const auto& f : faces) {
    for (int c = 0; c < 3; ++c) {
      const int a = f[c], b = f[(c + 1) % 3];
      edges.emplace_back(std::min(a, b), std::max(a, b));
    }
  }
  std::sort(edges.begin(), edges.end());
  return static_cast<int>(std::unique(edges.begin(), edges.end()) - edges.begin());
}

double TriMesh::face_area(int f) const {
  const auto& t = faces[f];
  const Eigen::Vector3d a = vertices.row(t[0]), b = vertices.row(t[1]), c = vertices.row(t[2]);
  return 0.5 * (b - a).cross(c - a).norm();
}

Eigen::Vector3d TriMesh::face_normal(int f) const {
  const auto& t = faces[f];
  const Eigen::Vector3d a = vertices.row(t[0]), b = vertices.row(t[1]), c = vertices.row(t[2]);
  return (b - a).cross(c - a).normalized();
}

double TriMesh::total_area() const {
  double s = 0.0;
  for (int f = 0; f < num_faces(); ++f) s += face_area(f);
  return s;
}

void validate(const TriMesh& mesh) {
  const int n = mesh.num_vertices();
  if (!mesh.vertices.allFinite()) throw ValidationError("non-finite vertex coordinates");
  std::map<std::pair<int, int>, int> edge_faces;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& t = mesh.faces[f];
    for (int idx : t) {
      if (idx < 0 || idx >= n) {
        throw ValidationError("face " + std::to_string(f) + " references vertex " +
                              std::to_string(idx) + " of " + std::to_string(n));
      }
    }
    if (mesh.face_area(f) <= 1e-12) {
      throw ValidationError("face " + std::to_string(f) + " is degenerate");
    }
    for (int c = 0; c < 3; ++c) {
      const int a = t[c], b = t[(c + 1) % 3];
      if (++edge_faces[{std::min(a, b), std::max(a, b)}] > 2) {
        throw ValidationError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                              ") borders more than two faces");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Laplacian

double LaplaceOperator::cotangent_weight(int i, int j) const { return 2.0 * W.coeff(i, j); }

LaplaceOperator build_laplacian(const TriMesh& mesh) {
  const int n = mesh.num_vertices();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.faces.size() * 6);
  Eigen::VectorXd areas = Eigen::VectorXd::Zero(n);

  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& t = mesh.faces[f];
    const std::array<Eigen::Vector3d, 3> p = {mesh.vertices.row(t[0]).transpose(),
                                              mesh.vertices.row(t[1]).transpose(),
                                              mesh.vertices.row(t[2]).transpose()};
    std::array<double, 3> cot{};
    for (int c = 0; c < 3; ++c) {
      cot[c] = cotangent(p[c], p[(c + 1) % 3], p[(c + 2) % 3]);
      if (!std::isfinite(cot[c]) || std::abs(cot[c]) > kMaxCotangent) {
        throw NumericalError("near-degenerate triangle " + std::to_string(f) +
                             ": cotangent magnitude exceeds 1e8");
      }
    }
    for (int c = 0; c < 3; ++c) {
      const int a = t[(c + 1) % 3], b = t[(c + 2) % 3];
      triplets.emplace_back(a, b, 0.5 * cot[c]);
      triplets.emplace_back(b, a, 0.5 * cot[c]);
    }

    // Mixed Voronoi areas.
    const double area = mesh.face_area(f);
    const bool obtuse = cot[0] < 0.0 || cot[1] < 0.0 || cot[2] < 0.0;
    for (int c = 0; c < 3; ++c) {
      if (obtuse) {
        areas[t[c]] += cot[c] < 0.0 ? 0.5 * area : 0.25 * area;
      } else {
        const int next = (c + 1) % 3, prev = (c + 2) % 3;
        // edge c->next is opposite prev, edge c->prev is opposite next
        areas[t[c]] += ((p[next] - p[c]).squaredNorm() * cot[prev] +
                        (p[prev] - p[c]).squaredNorm() * cot[next]) /
                       8.0;
      }
    }
  }

  Eigen::SparseMatrix<double> W(n, n);
  W.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < W.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(W, k); it; ++it) {
      row_sums[it.row()] += it.value();
    }
  }
  std::vector<Eigen::Triplet<double>> diag;
  diag.reserve(n);
  for (int i = 0; i < n; ++i) diag.emplace_back(i, i, -row_sums[i]);
  Eigen::SparseMatrix<double> D(n, n);
  D.setFromTriplets(diag.begin(), diag.end());
  W += D;
  W.makeCompressed();

  for (int i = 0; i < n; ++i) {
    if (!(areas[i] > 0.0)) {
      throw ValidationError("vertex " + std::to_string(i) + " has no incident area");
    }
  }
  return LaplaceOperator{std::move(W), std::move(areas)};
}

Eigen::MatrixXd apply_laplacian(const LaplaceOperator& op, const Eigen::MatrixXd& field,
                                bool area_normalized) {
  if (field.rows() != op.size()) {
    throw ShapeError("field has " + std::to_string(field.rows()) + " rows, operator needs " +
                     std::to_string(op.size()));
  }
  Eigen::MatrixXd out = op.W * field;
  if (area_normalized) out = op.areas.cwiseInverse().asDiagonal() * out;
  return out;
}

Eigen::SparseMatrix<double> area_normalized_matrix(const LaplaceOperator& op) {
  Eigen::SparseMatrix<double> L = op.areas.cwiseInverse().asDiagonal() * op.W;
  L.makeCompressed();
  return L;
}

PoincareEstimate poincare_constant(const LaplaceOperator& op, EigenMethod method) {
  const Eigen::VectorXd ev = laplacian_spectrum(op, std::min(2, op.size()), method);
  if (ev.size() < 2 || ev[1] <= 1e-8) {
    throw DegenerateError("spectral gap is zero; mesh is disconnected");
  }
  return PoincareEstimate{1.0 / std::sqrt(ev[1]), ev[1]};
}

// ---------------------------------------------------------------------------
// Per-vertex quantities

Eigen::MatrixX3d vertex_normals(const TriMesh& mesh) {
  Eigen::MatrixX3d N = Eigen::MatrixX3d::Zero(mesh.num_vertices(), 3);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& t = mesh.faces[f];
    const Eigen::Vector3d a = mesh.vertices.row(t[0]), b = mesh.vertices.row(t[1]),
                          c = mesh.vertices.row(t[2]);
    const Eigen::RowVector3d weighted = 0.5 * (b - a).cross(c - a).transpose();
    for (int v : t) N.row(v) += weighted;
  }
  N.rowwise().normalize();
  return N;
}

Eigen::MatrixX3d vertex_gradient(const TriMesh& mesh, const Eigen::VectorXd& field) {
  const int n = mesh.num_vertices();
  if (field.size() != n) throw ShapeError("vertex_gradient: field length mismatch");
  Eigen::MatrixX3d grad = Eigen::MatrixX3d::Zero(n, 3);
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(n);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto& t = mesh.faces[f];
    const std::array<Eigen::Vector3d, 3> p = {mesh.vertices.row(t[0]).transpose(),
                                              mesh.vertices.row(t[1]).transpose(),
                                              mesh.vertices.row(t[2]).transpose()};
    const Eigen::Vector3d cross = (p[1] - p[0]).cross(p[2] - p[0]);
    const double twice_area = cross.norm();
    const Eigen::Vector3d normal = cross / twice_area;
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    for (int c = 0; c < 3; ++c) {
      const Eigen::Vector3d opposite = p[(c + 2) % 3] - p[(c + 1) % 3];
      g += field[t[c]] * normal.cross(opposite);
    }
    g /= twice_area;
    const double area = 0.5 * twice_area;
    for (int v : t) {
      grad.row(v) += area * g.transpose();
      weight[v] += area;
    }
  }
  const Eigen::MatrixX3d N = vertex_normals(mesh);
  for (int v = 0; v < n; ++v) {
    if (weight[v] > 0.0) grad.row(v) /= weight[v];
    const Eigen::RowVector3d nv = N.row(v);
    grad.row(v) -= grad.row(v).dot(nv) * nv;
  }
  return grad;
}

double dirichlet_energy(const LaplaceOperator& op, const Eigen::VectorXd& field) {
  return -field.dot(op.W * field);
}

Eigen::VectorXd heat_diffuse(const LaplaceOperator& op, const Eigen::VectorXd& field, double t,
                             int steps) {
  Eigen::SparseMatrix<double> A(op.size(), op.size());
  A = -t * op.W;
  for (int i = 0; i < op.size(); ++i) A.coeffRef(i, i) += op.areas[i];
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  if (solver.info() != Eigen::Success) throw NumericalError("heat operator factorization failed");
  Eigen::VectorXd u = field;
  for (int s = 0; s < steps; ++s) u = solver.solve(op.areas.asDiagonal() * u);
  return u;
}

Eigen::MatrixXd squared_laplacian_gradient(const Eigen::SparseMatrix<double>& M,
                                           const Eigen::MatrixXd& U, std::span<const int> rows) {
  if (rows.empty()) throw ShapeError("squared_laplacian_gradient needs at least one row");
  const Eigen::MatrixXd MU = M * U;
  Eigen::MatrixXd selected = Eigen::MatrixXd::Zero(MU.rows(), MU.cols());
  for (int r : rows) selected.row(r) += MU.row(r);
  return (2.0 / static_cast<double>(rows.size())) * (M.transpose() * selected);
}

int connected_components(const TriMesh& mesh) {
  std::vector<int> parent(mesh.num_vertices());
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& t : mesh.faces) {
    for (int c = 0; c < 3; ++c) {
      const int a = find_root(parent, t[c]), b = find_root(parent, t[(c + 1) % 3]);
      if (a != b) parent[a] = b;
    }
  }
  int count = 0;
  for (int i = 0; i < mesh.num_vertices(); ++i) count += find_root(parent, i) == i;
  return count;
}

GeometryPackage geometry_package_for_mesh(const TriMesh& mesh, const LaplaceOperator& op) {
  auto farthest = [&](int from) {
    Eigen::Index idx = 0;
    const double d =
        (mesh.vertices.rowwise() - mesh.vertices.row(from)).rowwise().norm().maxCoeff(&idx);
    return std::pair<int, double>(static_cast<int>(idx), d);
  };
  const auto [a, d0] = farthest(0);
  const auto [b, diam] = farthest(a);
  (void)d0;
  (void)b;
  const PoincareEstimate pe = poincare_constant(op);
  GeometryPackage g;
  g.diamU = diam;
  g.C = 1.0 + diam;
  g.kappa_poincare = pe.spectral_gap;
  g.P = pe.P;
  return g;
}

}  // namespace msino
