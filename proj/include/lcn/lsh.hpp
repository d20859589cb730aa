#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "lcn/geometry.hpp"
#include "lcn/matrix.hpp"

namespace lcn {

enum class LshScheme {
    CrossPolytope,
    KMeans,
    HierarchicalKMeans,
};

const char* lsh_scheme_name(LshScheme scheme);
LshScheme lsh_scheme_from_name(const std::string& name);

struct LshConfig {
    LshScheme scheme = LshScheme::KMeans;
    int bands = 1;           // B hash bands, OR-combined
    int rows_per_band = 1;   // r hash functions per band, AND-combined
    int buckets_per_fn = 2;  // b buckets per hash function (even for cross-polytope)
    int kmeans_iters = 10;
    int branching = 2;       // hierarchical k-means only
    std::uint64_t seed = 0;
};

// Composite bucket id per band per point. Bucket ids are mixed-radix integers
// over the r per-function buckets, so band comparison is a single compare.
struct BandBuckets {
    std::vector<std::vector<std::uint64_t>> bucket;  // [band][point]
    std::uint64_t composite_range = 0;               // b^r (0 if unbounded)
};

// Cross-polytope hash of a single point: argmax of [x^T R || -x^T R], where
// proj is d x (b/2). Exposed for direct testing against hand oracles.
std::uint32_t cross_polytope_bucket(const double* x, std::size_t dim, const DenseMatrix& proj);

// Per-band, per-function projections drawn i.i.d. standard normal from the
// seed. Identical seeds hash both point sets against the same projections.
BandBuckets hash_cross_polytope(const PointSet& points, const LshConfig& cfg);

// k-means (or hierarchical k-means) bucket assignment over one set, usually
// the union X_p ∪ X_q. Bucket = (leaf) cluster index.
std::vector<std::uint32_t> hash_kmeans(const PointSet& points, const LshConfig& cfg);

struct NeighborPairs {
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;  // sorted row-major, unique
    std::vector<std::uint32_t> row_counts;

    static NeighborPairs from_pairs(std::size_t n, std::size_t m,
                                    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs);
    static NeighborPairs full(std::size_t n, std::size_t m);
};

// (i, j) is a neighbor pair iff some band's composite buckets agree.
NeighborPairs neighbor_pairs(const BandBuckets& buckets_p, const BandBuckets& buckets_q,
                             const LshConfig& cfg);

// End-to-end: hash both sets per the configured scheme (clustering the union
// for the k-means schemes) and extract the pair set.
NeighborPairs lsh_neighbor_pairs(const PointSet& p, const PointSet& q, const LshConfig& cfg);

// Debug export, `i,j` rows.
void write_pairs_csv(std::ostream& out, const NeighborPairs& pairs);

}  // namespace lcn
