#pragma once

#include <cstdint>
#include <vector>

#include "tr2c/objective.hpp"

namespace tr2c {

// K-means++ seeding, Lloyd iterations to a fixpoint or the cap, best inertia
// over restarts (ties keep the earliest restart). Nearest-centroid ties break
// to the lowest centroid index; an emptied cluster is re-seeded from the point
// farthest from its assigned centroid.
std::vector<int> kmeans(const Matrix& points, int k, std::uint64_t seed,
                        int restarts = 10, int max_iters = 100);

// Normalized-cuts pipeline: A = (Gamma + Gamma^T)/2, L_sym = I - D^-1/2 A D^-1/2,
// embedding from the K lowest eigenvectors, row-normalized, then kmeans.
std::vector<int> spectral_cluster(const Matrix& gamma, int k, std::uint64_t seed);

}  // namespace tr2c
