#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "lcn/matrix.hpp"

namespace lcn {

struct KmeansResult {
    DenseMatrix centroids;          // k x d
    std::vector<std::uint32_t> assign;  // per point, in [0, k)
};

// k-means++ D^2 sampling without replacement over the rows of `points`.
// Returns k distinct row indices.
std::vector<std::uint32_t> kmeans_pp_indices(const double* points, std::size_t n, std::size_t d,
                                             std::size_t k, std::mt19937_64& rng);

// Nearest-centroid assignment (ties to the lowest index). Parallel over points.
void assign_nearest(const double* points, std::size_t n, std::size_t d,
                    const DenseMatrix& centroids, std::uint32_t* out);

// Lloyd's algorithm with k-means++ initialization. Clusters that empty out
// during an update are re-seeded to the point farthest from its assigned
// centroid, keeping the cluster count exact.
KmeansResult lloyd(const double* points, std::size_t n, std::size_t d, std::size_t k,
                   int iters, std::uint64_t seed);

}  // namespace lcn
