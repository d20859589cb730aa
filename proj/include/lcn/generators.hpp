#pragma once

#include <cstdint>

#include "lcn/geometry.hpp"
#include "lcn/matrix.hpp"

namespace lcn {

// Uniform sample in the unit d-ball: normalized Gaussian direction times
// radius u^{1/d}.
PointSet sample_uniform_ball(std::size_t n, std::size_t d, std::uint64_t seed,
                             const std::string& id = "ball");

struct ClusteredProblem {
    PointSet p;
    PointSet q;
    DenseMatrix centers;                  // c x d, pairwise distance >= min_center_dist
    std::vector<std::uint32_t> label_p;   // ground-truth cluster per point
    std::vector<std::uint32_t> label_q;
    double min_center_dist = 0.0;         // realized minimum
};

// Places c centers at least D apart (rejection sampling in a box, up to 1000
// attempts per center) and samples n points per side uniformly within radius
// r of a random center.
ClusteredProblem sample_clustered(std::size_t n_per_side, std::size_t d, std::size_t c, double D,
                                  double r, std::uint64_t seed);

}  // namespace lcn
