#pragma once

// Triangle meshes and the cotangent Laplace-Beltrami discretization.
//
// Sign convention: W has nonnegative off-diagonal entries and a negative
// diagonal (zero row sums), so -W is positive semidefinite and the
// area-normalized operator (Delta u)_i = (1/A_i) (W u)_i approximates the
// Laplace-Beltrami operator. Off-diagonals are W_ij = (cot a_ij + cot b_ij)/2;
// the raw cotangent sum w_ij = cot a_ij + cot b_ij is available through
// cotangent_weight().

#include "msino/manifold.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace msino {

struct TriMesh {
  Eigen::MatrixX3d vertices;                // n x 3
  std::vector<std::array<int, 3>> faces;    // counter-clockwise

  int num_vertices() const noexcept { return static_cast<int>(vertices.rows()); }
  int num_faces() const noexcept { return static_cast<int>(faces.size()); }
  int num_edges() const;
  double face_area(int f) const;
  Eigen::Vector3d face_normal(int f) const;  // unit, right-hand rule
  double total_area() const;
};

/// Throws ValidationError on out-of-range indices, degenerate faces
/// (area <= 1e-12) or edges shared by more than two faces.
void validate(const TriMesh& mesh);

/// ASCII OFF: "OFF", "n f 0", n vertex lines, f lines "3 i j k".
/// Blank lines and '#' comments are skipped.
TriMesh load_off(std::istream& in);
TriMesh load_off_file(const std::string& path);
void write_off(std::ostream& out, const TriMesh& mesh);
void write_off_file(const std::string& path, const TriMesh& mesh);

/// Icosahedron refined `subdivisions` times, vertices on the unit sphere.
/// 10 * 4^s + 2 vertices, 20 * 4^s faces.
TriMesh make_icosphere(int subdivisions);
/// Regular (nx+1) x (ny+1) vertex grid over [0, sx] x [0, sy] in the z = 0
/// plane, each cell split along the same diagonal.
TriMesh make_grid(int nx, int ny, double sx = 1.0, double sy = 1.0);

struct LaplaceOperator {
  Eigen::SparseMatrix<double> W;  // symmetric, zero row sums
  Eigen::VectorXd areas;          // mixed Voronoi areas

  int size() const noexcept { return static_cast<int>(areas.size()); }
  /// Raw cotangent sum w_ij = 2 W_ij (0 for non-adjacent vertices).
  double cotangent_weight(int i, int j) const;
};

/// Throws NumericalError if any cotangent exceeds 1e8 in magnitude.
LaplaceOperator build_laplacian(const TriMesh& mesh);

/// W * field, optionally scaled row-wise by 1/A_i. Throws ShapeError.
Eigen::MatrixXd apply_laplacian(const LaplaceOperator& op, const Eigen::MatrixXd& field,
                                bool area_normalized);

enum class EigenMethod { Auto, Dense, ShiftInvert };

/// k smallest generalized eigenvalues of (-W, diag(areas)), ascending.
/// Auto uses the dense solver for n <= 2000 and shift-invert subspace
/// iteration otherwise. Throws ConvergenceError.
Eigen::VectorXd laplacian_spectrum(const LaplaceOperator& op, int k,
                                   EigenMethod method = EigenMethod::Auto);

struct PoincareEstimate {
  double P = 0.0;               // 1 / sqrt(lambda_2)
  double spectral_gap = 0.0;    // lambda_2
};

/// Throws DegenerateError when lambda_2 <= 1e-8 (disconnected mesh).
PoincareEstimate poincare_constant(const LaplaceOperator& op,
                                   EigenMethod method = EigenMethod::Auto);

/// Area-weighted vertex normals.
Eigen::MatrixX3d vertex_normals(const TriMesh& mesh);

/// Per-face gradients of the piecewise-linear interpolant, area-averaged onto
/// vertices and projected onto each vertex tangent plane.
Eigen::MatrixX3d vertex_gradient(const TriMesh& mesh, const Eigen::VectorXd& field);

/// u^T (-W) u.
double dirichlet_energy(const LaplaceOperator& op, const Eigen::VectorXd& field);

/// Backward-Euler heat steps (A - t W) u_{k+1} = A u_k.
Eigen::VectorXd heat_diffuse(const LaplaceOperator& op, const Eigen::VectorXd& field, double t,
                             int steps);

/// Closed form of the gradient of (1/B) * sum_{i in rows} |(M U)_i|^2 with
/// respect to the full field U: (2/B) M_rows^T (M U)_rows.
Eigen::MatrixXd squared_laplacian_gradient(const Eigen::SparseMatrix<double>& M,
                                           const Eigen::MatrixXd& U, std::span<const int> rows);

/// Area-normalized operator A^{-1} W as a sparse matrix.
Eigen::SparseMatrix<double> area_normalized_matrix(const LaplaceOperator& op);

/// Number of connected components of the vertex graph.
int connected_components(const TriMesh& mesh);

/// Geometry constants for a mesh domain: diameter from a double sweep over
/// Euclidean distances, C = 1 + diamU, kappa and P from the spectral gap.
GeometryPackage geometry_package_for_mesh(const TriMesh& mesh, const LaplaceOperator& op);

}  // namespace msino
