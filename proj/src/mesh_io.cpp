#include "msino/errors.hpp"
#include "msino/mesh.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace msino {

namespace {

// Reads the next non-blank, non-comment line; returns false at EOF.
bool next_content_line(std::istream& in, std::string& line, std::size_t& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

template <typename T>
bool read_exact(std::istringstream& ss, T* out, int count) {
  for (int i = 0; i < count; ++i) {
    if (!(ss >> out[i])) return false;
  }
  std::string rest;
  return !(ss >> rest);
}

}  // namespace

TriMesh load_off(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!next_content_line(in, line, lineno)) throw ParseError(lineno, "empty OFF stream");
  {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag != "OFF") throw ParseError(lineno, "expected header 'OFF', got '" + tag + "'");
    std::string rest;
    if (ss >> rest) throw ParseError(lineno, "unexpected content after 'OFF'");
  }

  if (!next_content_line(in, line, lineno)) throw ParseError(lineno, "missing counts line");
  long counts[3];
  {
    std::istringstream ss(line);
    if (!read_exact(ss, counts, 3) || counts[0] < 0 || counts[1] < 0) {
      throw ParseError(lineno, "counts line must be 'n f e'");
    }
  }
  const long n = counts[0], f = counts[1];

  TriMesh mesh;
  mesh.vertices.resize(n, 3);
  for (long i = 0; i < n; ++i) {
    if (!next_content_line(in, line, lineno)) {
      throw ParseError(lineno, "expected " + std::to_string(n) + " vertices, found " +
                                   std::to_string(i));
    }
    std::istringstream ss(line);
    double xyz[3];
    if (!read_exact(ss, xyz, 3)) throw ParseError(lineno, "vertex line must have 3 coordinates");
    mesh.vertices.row(i) << xyz[0], xyz[1], xyz[2];
  }

  mesh.faces.reserve(f);
  for (long i = 0; i < f; ++i) {
    if (!next_content_line(in, line, lineno)) {
      throw ParseError(lineno, "expected " + std::to_string(f) + " faces, found " +
                                   std::to_string(i));
    }
    std::istringstream ss(line);
    long v[4];
    if (!read_exact(ss, v, 4)) throw ParseError(lineno, "face line must be '3 i j k'");
    if (v[0] != 3) throw ParseError(lineno, "only triangular faces are supported");
    mesh.faces.push_back({static_cast<int>(v[1]), static_cast<int>(v[2]), static_cast<int>(v[3])});
  }

  if (next_content_line(in, line, lineno)) {
    throw ParseError(lineno, "content beyond the declared vertex/face counts");
  }
  validate(mesh);
  return mesh;
}

TriMesh load_off_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path);
  return load_off(in);
}

void write_off(std::ostream& out, const TriMesh& mesh) {
  out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_faces() << " 0\n";
  out << std::setprecision(17);
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    out << mesh.vertices(i, 0) << ' ' << mesh.vertices(i, 1) << ' ' << mesh.vertices(i, 2) << '\n';
  }
  for (const auto& t : mesh.faces) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

void write_off_file(const std::string& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_off(out, mesh);
}

TriMesh make_icosphere(int subdivisions) {
  if (subdivisions < 0) throw ValidationError("subdivision level must be >= 0");
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::make_pair(std::min(a, b), std::max(a, b));
      const auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      verts.push_back((verts[a] + verts[b]).normalized());
      const int idx = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> refined;
    refined.reserve(faces.size() * 4);
    for (const auto& t : faces) {
      const int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
      refined.push_back({t[0], ab, ca});
      refined.push_back({t[1], bc, ab});
      refined.push_back({t[2], ca, bc});
      refined.push_back({ab, bc, ca});
    }
    faces = std::move(refined);
  }

  TriMesh mesh;
  mesh.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) mesh.vertices.row(i) = verts[i].transpose();
  mesh.faces = std::move(faces);
  return mesh;
}

TriMesh make_grid(int nx, int ny, double sx, double sy) {
  if (nx < 1 || ny < 1) throw ValidationError("grid needs at least one cell per direction");
  TriMesh mesh;
  mesh.vertices.resize((nx + 1) * (ny + 1), 3);
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      mesh.vertices.row(id(i, j)) << sx * i / nx, sy * j / ny, 0.0;
    }
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      mesh.faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      mesh.faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return mesh;
}

}  // namespace msino
