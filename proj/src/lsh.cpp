#include "lcn/lsh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <ostream>
#include <random>

#include "lcn/error.hpp"
#include "lcn/kmeans.hpp"

namespace lcn {

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t fn_seed(std::uint64_t seed, int band, int fn) {
    return mix64(seed ^ mix64(static_cast<std::uint64_t>(band) * 0x100000001b3ull +
                              static_cast<std::uint64_t>(fn)));
}

void check_config(const LshConfig& cfg) {
    if (cfg.bands < 1 || cfg.rows_per_band < 1)
        throw InvalidArgument("lsh: bands and rows_per_band must be >= 1");
    if (cfg.buckets_per_fn < 2)
        throw InvalidArgument("lsh: buckets_per_fn must be >= 2");
}

}  // namespace

const char* lsh_scheme_name(LshScheme scheme) {
    switch (scheme) {
        case LshScheme::CrossPolytope: return "cross-polytope";
        case LshScheme::KMeans: return "kmeans";
        case LshScheme::HierarchicalKMeans: return "hierarchical-kmeans";
    }
    return "?";
}

LshScheme lsh_scheme_from_name(const std::string& name) {
    if (name == "cross-polytope") return LshScheme::CrossPolytope;
    if (name == "kmeans") return LshScheme::KMeans;
    if (name == "hierarchical-kmeans") return LshScheme::HierarchicalKMeans;
    throw InvalidArgument("unknown LSH scheme '" + name + "'");
}

std::uint32_t cross_polytope_bucket(const double* x, std::size_t dim, const DenseMatrix& proj) {
    const std::size_t half = proj.cols;
    double best = -std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::size_t c = 0; c < 2 * half; ++c) {
        const std::size_t col = c < half ? c : c - half;
        double v = 0.0;
        for (std::size_t k = 0; k < dim; ++k) v += x[k] * proj(k, col);
        if (c >= half) v = -v;
        if (v > best) {
            best = v;
            arg = static_cast<std::uint32_t>(c);
        }
    }
    return arg;
}

BandBuckets hash_cross_polytope(const PointSet& points, const LshConfig& cfg) {
    check_config(cfg);
    points.validate();
    if (cfg.scheme != LshScheme::CrossPolytope)
        throw InvalidArgument("hash_cross_polytope: wrong scheme in config");
    if (cfg.buckets_per_fn % 2 != 0)
        throw InvalidArgument("cross-polytope needs an even bucket count");

    const std::size_t half = static_cast<std::size_t>(cfg.buckets_per_fn) / 2;
    const std::size_t n = points.n;
    BandBuckets out;
    out.bucket.assign(static_cast<std::size_t>(cfg.bands), std::vector<std::uint64_t>(n, 0));
    double range = std::pow(static_cast<double>(cfg.buckets_per_fn), cfg.rows_per_band);
    out.composite_range = range < 9e18 ? static_cast<std::uint64_t>(range) : 0;

    for (int band = 0; band < cfg.bands; ++band) {
        for (int fn = 0; fn < cfg.rows_per_band; ++fn) {
            DenseMatrix proj(points.dim, half);
            std::mt19937_64 rng(fn_seed(cfg.seed, band, fn));
            std::normal_distribution<double> gauss(0.0, 1.0);
            for (double& v : proj.data) v = gauss(rng);

            auto& ids = out.bucket[static_cast<std::size_t>(band)];
            const std::uint64_t radix = static_cast<std::uint64_t>(cfg.buckets_per_fn);
#pragma omp parallel for schedule(static) if (n > 128)
            for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
                const std::size_t i = static_cast<std::size_t>(ii);
                std::uint32_t b = cross_polytope_bucket(points.point(i), points.dim, proj);
                ids[i] = ids[i] * radix + b;
            }
        }
    }
    return out;
}

namespace {

std::vector<std::uint32_t> hierarchical_assign(const PointSet& points, const LshConfig& cfg,
                                               std::uint64_t seed) {
    const std::size_t target = static_cast<std::size_t>(cfg.buckets_per_fn);
    std::deque<std::vector<std::uint32_t>> queue;
    std::vector<std::vector<std::uint32_t>> leaves;
    {
        std::vector<std::uint32_t> all(points.n);
        for (std::size_t i = 0; i < points.n; ++i) all[i] = static_cast<std::uint32_t>(i);
        queue.push_back(std::move(all));
    }
    std::uint64_t split_counter = 0;
    while (!queue.empty()) {
        std::vector<std::uint32_t> cl = std::move(queue.front());
        queue.pop_front();
        const std::size_t live = queue.size() + leaves.size() + 1;
        if (live >= target || cl.size() < 2) {
            leaves.push_back(std::move(cl));
            continue;
        }
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg.branching), cl.size());
        std::vector<double> sub(cl.size() * points.dim);
        for (std::size_t i = 0; i < cl.size(); ++i)
            std::copy(points.point(cl[i]), points.point(cl[i]) + points.dim,
                      sub.data() + i * points.dim);
        KmeansResult km = lloyd(sub.data(), cl.size(), points.dim, k, cfg.kmeans_iters,
                                mix64(seed ^ ++split_counter));
        std::vector<std::vector<std::uint32_t>> children(k);
        for (std::size_t i = 0; i < cl.size(); ++i)
            children[km.assign[i]].push_back(cl[i]);
        for (auto& ch : children)
            if (!ch.empty()) queue.push_back(std::move(ch));
    }
    std::vector<std::uint32_t> assign(points.n, 0);
    for (std::size_t leaf = 0; leaf < leaves.size(); ++leaf)
        for (std::uint32_t idx : leaves[leaf]) assign[idx] = static_cast<std::uint32_t>(leaf);
    return assign;
}

}  // namespace

std::vector<std::uint32_t> hash_kmeans(const PointSet& points, const LshConfig& cfg) {
    check_config(cfg);
    points.validate();
    if (cfg.scheme == LshScheme::CrossPolytope)
        throw InvalidArgument("hash_kmeans: wrong scheme in config");
    if (static_cast<std::size_t>(cfg.buckets_per_fn) > points.n)
        throw InvalidArgument("hash_kmeans: more buckets than points");
    if (cfg.scheme == LshScheme::HierarchicalKMeans)
        return hierarchical_assign(points, cfg, cfg.seed);
    KmeansResult km = lloyd(points.coords.data(), points.n, points.dim,
                            static_cast<std::size_t>(cfg.buckets_per_fn), cfg.kmeans_iters,
                            cfg.seed);
    return km.assign;
}

NeighborPairs NeighborPairs::from_pairs(std::size_t n, std::size_t m,
                                        std::vector<std::pair<std::uint32_t, std::uint32_t>> raw) {
    for (auto [i, j] : raw)
        if (i >= n || j >= m)
            throw InvalidArgument("neighbor pair index out of range");
    std::sort(raw.begin(), raw.end());
    raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
    NeighborPairs out;
    out.n = n;
    out.m = m;
    out.pairs = std::move(raw);
    out.row_counts.assign(n, 0);
    for (auto [i, j] : out.pairs) ++out.row_counts[i];
    return out;
}

NeighborPairs NeighborPairs::full(std::size_t n, std::size_t m) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> raw;
    raw.reserve(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            raw.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    return from_pairs(n, m, std::move(raw));
}

namespace {

// Groups point indices by bucket id. Counting sort over the composite range
// when it is small, comparison sort otherwise; either keeps pair extraction
// log-linear.
std::vector<std::pair<std::uint64_t, std::uint32_t>> sorted_by_bucket(
    const std::vector<std::uint64_t>& ids, std::uint64_t range) {
    const std::size_t n = ids.size();
    std::vector<std::pair<std::uint64_t, std::uint32_t>> out(n);
    if (range != 0 && range <= 8 * n + 1024) {
        std::vector<std::uint32_t> counts(range + 1, 0);
        for (auto id : ids) ++counts[id + 1];
        for (std::size_t b = 1; b <= range; ++b) counts[b] += counts[b - 1];
        for (std::size_t i = 0; i < n; ++i)
            out[counts[ids[i]]++] = {ids[i], static_cast<std::uint32_t>(i)};
    } else {
        for (std::size_t i = 0; i < n; ++i) out[i] = {ids[i], static_cast<std::uint32_t>(i)};
        std::sort(out.begin(), out.end());
    }
    return out;
}

}  // namespace

NeighborPairs neighbor_pairs(const BandBuckets& buckets_p, const BandBuckets& buckets_q,
                             const LshConfig& cfg) {
    if (buckets_p.bucket.size() != buckets_q.bucket.size())
        throw InvalidArgument("neighbor_pairs: band count mismatch");
    const std::size_t n = buckets_p.bucket.empty() ? 0 : buckets_p.bucket[0].size();
    const std::size_t m = buckets_q.bucket.empty() ? 0 : buckets_q.bucket[0].size();
    std::vector<std::pair<std::uint32_t, std::uint32_t>> raw;
    for (std::size_t band = 0; band < buckets_p.bucket.size(); ++band) {
        auto sp = sorted_by_bucket(buckets_p.bucket[band], buckets_p.composite_range);
        auto sq = sorted_by_bucket(buckets_q.bucket[band], buckets_q.composite_range);
        std::size_t a = 0, b = 0;
        while (a < sp.size() && b < sq.size()) {
            if (sp[a].first < sq[b].first) {
                ++a;
            } else if (sq[b].first < sp[a].first) {
                ++b;
            } else {
                std::uint64_t id = sp[a].first;
                std::size_t a_end = a, b_end = b;
                while (a_end < sp.size() && sp[a_end].first == id) ++a_end;
                while (b_end < sq.size() && sq[b_end].first == id) ++b_end;
                for (std::size_t x = a; x < a_end; ++x)
                    for (std::size_t y = b; y < b_end; ++y)
                        raw.emplace_back(sp[x].second, sq[y].second);
                a = a_end;
                b = b_end;
            }
        }
    }
    (void)cfg;
    return NeighborPairs::from_pairs(n, m, std::move(raw));
}

NeighborPairs lsh_neighbor_pairs(const PointSet& p, const PointSet& q, const LshConfig& cfg) {
    check_config(cfg);
    if (p.dim != q.dim)
        throw DimensionError("lsh_neighbor_pairs: dimension mismatch");
    if (cfg.scheme == LshScheme::CrossPolytope) {
        BandBuckets bp = hash_cross_polytope(p, cfg);
        BandBuckets bq = hash_cross_polytope(q, cfg);
        return neighbor_pairs(bp, bq, cfg);
    }
    // k-means LSH clusters the union X_p ∪ X_q and does not mix well with the
    // AND-OR construction; a multi-band override still works but is flagged.
    if (cfg.bands != 1 || cfg.rows_per_band != 1)
        std::fprintf(stderr,
                     "lcn: warning: k-means LSH with bands=%d rows_per_band=%d; "
                     "correlated samples make AND-OR ineffective\n",
                     cfg.bands, cfg.rows_per_band);
    PointSet all = union_points(p, q);
    BandBuckets bp, bq;
    bp.bucket.assign(static_cast<std::size_t>(cfg.bands), {});
    bq.bucket.assign(static_cast<std::size_t>(cfg.bands), {});
    double range = std::pow(static_cast<double>(cfg.buckets_per_fn), cfg.rows_per_band);
    bp.composite_range = bq.composite_range = range < 9e18 ? static_cast<std::uint64_t>(range) : 0;
    for (int band = 0; band < cfg.bands; ++band) {
        std::vector<std::uint64_t> composite(all.n, 0);
        for (int fn = 0; fn < cfg.rows_per_band; ++fn) {
            LshConfig sub = cfg;
            sub.seed = fn_seed(cfg.seed, band, fn);
            auto assign = hash_kmeans(all, sub);
            const std::uint64_t radix = static_cast<std::uint64_t>(cfg.buckets_per_fn);
            for (std::size_t i = 0; i < all.n; ++i)
                composite[i] = composite[i] * radix + assign[i];
        }
        auto& vp = bp.bucket[static_cast<std::size_t>(band)];
        auto& vq = bq.bucket[static_cast<std::size_t>(band)];
        vp.assign(composite.begin(), composite.begin() + static_cast<std::ptrdiff_t>(p.n));
        vq.assign(composite.begin() + static_cast<std::ptrdiff_t>(p.n), composite.end());
    }
    return neighbor_pairs(bp, bq, cfg);
}

void write_pairs_csv(std::ostream& out, const NeighborPairs& pairs) {
    out << "i,j\n";
    for (auto [i, j] : pairs.pairs) out << i << ',' << j << '\n';
}

}  // namespace lcn
