#include "msino/errors.hpp"
#include "msino/mesh.hpp"

#include <doctest.h>

#include <sstream>

using namespace msino;

TEST_CASE("icosphere sizes") {
  const auto m0 = make_icosphere(0);
  CHECK(m0.num_vertices() == 12);
  CHECK(m0.num_faces() == 20);
  const auto m4 = make_icosphere(4);
  CHECK(m4.num_vertices() == 2562);
  CHECK(m4.num_faces() == 5120);
  CHECK(m4.num_edges() == 7680);
  for (int i = 0; i < m4.num_vertices(); ++i) {
    CHECK(std::abs(m4.vertices.row(i).norm() - 1.0) < 1e-12);
  }
  CHECK(connected_components(m4) == 1);
}

TEST_CASE("OFF roundtrip") {
  const auto mesh = make_icosphere(1);
  std::stringstream ss;
  write_off(ss, mesh);
  const auto back = load_off(ss);
  CHECK(back.num_vertices() == mesh.num_vertices());
  CHECK(back.faces == mesh.faces);
  CHECK((back.vertices - mesh.vertices).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("OFF parse errors carry the line number") {
  std::istringstream bad_header("OFX\n3 1 0\n");
  CHECK_THROWS_AS(load_off(bad_header), ParseError);

  std::istringstream bad_face("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n4 0 1 2 0\n");
  try {
    load_off(bad_face);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 6);
  }

  std::istringstream comments("OFF\n# comment\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
  CHECK(load_off(comments).num_faces() == 1);
}

TEST_CASE("mesh validation") {
  TriMesh m;
  m.vertices.resize(4, 3);
  m.vertices << 0, 0, 0, 1, 0, 0, 0, 1, 0, 2, 0, 0;
  m.faces = {{0, 1, 3}};
  CHECK_THROWS_AS(validate(m), ValidationError);  // collinear
  m.faces = {{0, 1, 4}};
  CHECK_THROWS_AS(validate(m), ValidationError);  // index out of range

  TriMesh fan;
  fan.vertices.resize(5, 3);
  fan.vertices << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1;
  fan.faces = {{0, 1, 2}, {1, 0, 3}, {0, 1, 4}};
  CHECK_THROWS_AS(validate(fan), ValidationError);  // edge in three faces
}

TEST_CASE("laplacian structure") {
  const auto mesh = make_icosphere(2);
  const auto op = build_laplacian(mesh);
  const Eigen::MatrixXd W(op.W);
  CHECK((W - W.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(W.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  CHECK(op.areas.sum() == doctest::Approx(mesh.total_area()).epsilon(1e-12));
  const auto& f = mesh.faces[0];
  CHECK(op.cotangent_weight(f[0], f[1]) == doctest::Approx(2.0 * W(f[0], f[1])));
  int far = 1;
  while (W(0, far) != 0.0) ++far;
  CHECK(op.cotangent_weight(0, far) == 0.0);
}

TEST_CASE("cotangent Laplacian on a regular grid equals the five-point stencil") {
  const int n = 8;
  const double hx = 1.0 / n;
  const auto mesh = make_grid(n, n);
  const auto op = build_laplacian(mesh);
  Rng rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd u(mesh.num_vertices());
  for (int i = 0; i < u.size(); ++i) u[i] = g(rng);
  const Eigen::MatrixXd lu = apply_laplacian(op, u, true);
  const auto id = [](int i, int j) { return j * (n + 1) + i; };
  for (int j = 1; j < n; ++j) {
    for (int i = 1; i < n; ++i) {
      const double fd = (u[id(i + 1, j)] + u[id(i - 1, j)] + u[id(i, j + 1)] + u[id(i, j - 1)] -
                         4 * u[id(i, j)]) / (hx * hx);
      CHECK(lu(id(i, j), 0) == doctest::Approx(fd).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(apply_laplacian(op, Eigen::VectorXd::Zero(3), true), ShapeError);
}

TEST_CASE("dense and shift-invert spectra agree") {
  const auto op = build_laplacian(make_icosphere(2));
  const auto dense = laplacian_spectrum(op, 8, EigenMethod::Dense);
  const auto sparse = laplacian_spectrum(op, 8, EigenMethod::ShiftInvert);
  CHECK((dense - sparse).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(std::abs(dense[0]) < 1e-10);
  CHECK_THROWS_AS(laplacian_spectrum(op, 0), ShapeError);
}

TEST_CASE("poincare constant and disconnected meshes") {
  const auto op = build_laplacian(make_icosphere(3));
  const auto pc = poincare_constant(op);
  CHECK(pc.P == doctest::Approx(1.0 / std::sqrt(pc.spectral_gap)));
  CHECK(pc.spectral_gap == doctest::Approx(2.0).epsilon(0.05));

  TriMesh two = make_icosphere(0);
  const int n = two.num_vertices();
  two.vertices.conservativeResize(2 * n, 3);
  two.vertices.bottomRows(n) = two.vertices.topRows(n).rowwise() + Eigen::RowVector3d(5, 0, 0);
  const auto faces = two.faces;
  for (auto f : faces) two.faces.push_back({f[0] + n, f[1] + n, f[2] + n});
  CHECK(connected_components(two) == 2);
  CHECK_THROWS_AS(poincare_constant(build_laplacian(two)), DegenerateError);
}

TEST_CASE("vertex gradient of a linear field on a plane") {
  const auto mesh = make_grid(5, 4, 2.0, 1.0);
  const Eigen::Vector3d a(0.7, -1.3, 0.0);
  const Eigen::VectorXd f = mesh.vertices * a;
  const auto g = vertex_gradient(mesh, f);
  for (int i = 0; i < g.rows(); ++i) CHECK((g.row(i).transpose() - a).norm() < 1e-12);
}

TEST_CASE("heat diffusion lowers the Dirichlet energy") {
  const auto op = build_laplacian(make_icosphere(2));
  Rng rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd u(op.size());
  for (int i = 0; i < u.size(); ++i) u[i] = g(rng);
  const auto s = heat_diffuse(op, u, 0.01, 3);
  CHECK(dirichlet_energy(op, s) < dirichlet_energy(op, u));
  CHECK(dirichlet_energy(op, u) > 0.0);
}

TEST_CASE("squared Laplacian gradient matches finite differences") {
  const auto op = build_laplacian(make_icosphere(1));
  const auto M = area_normalized_matrix(op);
  Rng rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd U(op.size(), 2);
  for (int i = 0; i < U.size(); ++i) U.data()[i] = g(rng);
  const std::vector<int> rows{0, 3, 7, 20};
  const auto f = [&](const Eigen::MatrixXd& V) {
    const Eigen::MatrixXd MV = M * V;
    double s = 0;
    for (int r : rows) s += MV.row(r).squaredNorm();
    return s / rows.size();
  };
  const auto G = squared_laplacian_gradient(M, U, rows);
  const double h = 1e-6;
  for (int i = 0; i < U.rows(); ++i) {
    for (int c = 0; c < 2; ++c) {
      Eigen::MatrixXd P = U, Q = U;
      P(i, c) += h;
      Q(i, c) -= h;
      CHECK(G(i, c) == doctest::Approx((f(P) - f(Q)) / (2 * h)).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("mesh geometry package") {
  const auto mesh = make_icosphere(2);
  const auto op = build_laplacian(mesh);
  const auto geo = geometry_package_for_mesh(mesh, op);
  CHECK(geo.diamU == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(geo.C == doctest::Approx(1.0 + geo.diamU));
  CHECK(geo.P == doctest::Approx(1.0 / std::sqrt(geo.kappa_poincare)));
}
