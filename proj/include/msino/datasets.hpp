#pragma once

// Synthetic stand-ins for the sphere, mesh and SO(3) experiments plus a
// convex Euclidean toy. Values are scalar (m = 1).

#include "msino/loss.hpp"

#include <cstdint>
#include <vector>

namespace msino {

struct DatasetSplit {
  std::vector<int> train;
  std::vector<int> val;
};

/// Seeded shuffle; the first floor(n/5) indices form the validation set.
DatasetSplit split_80_20(int n, std::uint64_t seed);

/// Points of a near-square latitude/longitude grid (64 x 64 for n = 4096)
/// with the field 20 cos(lat) + 5 sin(3 lon) cos(lat), standardized, and its
/// exact intrinsic gradient. label_noise adds seeded tangent Gaussian noise.
LabeledBatch gen_sphere_dataset(std::uint64_t seed, int n = 4096, double label_noise = 0.0);

/// Seeded noise smoothed by three backward-Euler heat steps, standardized,
/// with gradient labels from vertex_gradient.
LabeledBatch gen_mesh_dataset(std::uint64_t seed, const TriMesh& mesh, double label_noise = 0.0);

/// Band-limited rotation path R_t = exp(hat(w(t))), |w| <= pi - 0.2, with
/// target d(R_t, I) and label -log_{R_t}(I) / d.
LabeledBatch gen_so3_dataset(std::uint64_t seed, int T = 1000, double label_noise = 0.0);

/// Linear target z = a.x + b on [-1, 1]^d with gradient labels a; optional
/// value noise keeps the problem convex but non-interpolating.
struct ToyProblem {
  LabeledBatch data;
  Eigen::VectorXd a;
  double b = 0.0;
};
ToyProblem gen_toy_dataset(std::uint64_t seed, int n, int dim, double value_noise = 0.0,
                           double label_noise = 0.0);

}  // namespace msino
