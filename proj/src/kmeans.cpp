#include "lcn/kmeans.hpp"

#include <cmath>
#include <limits>

#include "lcn/error.hpp"

namespace lcn {

namespace {

double sqdist(const double* x, const double* y, std::size_t d) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        double diff = x[k] - y[k];
        s += diff * diff;
    }
    return s;
}

}  // namespace

std::vector<std::uint32_t> kmeans_pp_indices(const double* points, std::size_t n, std::size_t d,
                                             std::size_t k, std::mt19937_64& rng) {
    if (k == 0 || k > n)
        throw InvalidArgument("kmeans++: k must be in [1, n]");
    std::vector<std::uint32_t> chosen;
    chosen.reserve(k);
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    chosen.push_back(static_cast<std::uint32_t>(first(rng)));

    std::vector<double> dist2(n, std::numeric_limits<double>::infinity());
    for (std::size_t t = 1; t < k; ++t) {
        const double* last = points + chosen.back() * d;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d2 = sqdist(points + i * d, last, d);
            if (d2 < dist2[i]) dist2[i] = d2;
            total += dist2[i];
        }
        std::size_t pick;
        if (total <= 0.0) {
            // All remaining points coincide with a centroid; take the first unused.
            pick = 0;
            std::vector<char> used(n, 0);
            for (auto c : chosen) used[c] = 1;
            while (pick < n && used[pick]) ++pick;
        } else {
            std::uniform_real_distribution<double> unif(0.0, total);
            double target = unif(rng);
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += dist2[i];
                if (acc >= target && dist2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        chosen.push_back(static_cast<std::uint32_t>(pick));
        dist2[pick] = 0.0;
    }
    return chosen;
}

void assign_nearest(const double* points, std::size_t n, std::size_t d,
                    const DenseMatrix& centroids, std::uint32_t* out) {
    const std::size_t k = centroids.rows;
#pragma omp parallel for schedule(static) if (n > 64)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const double* x = points + i * d;
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t arg = 0;
        for (std::size_t c = 0; c < k; ++c) {
            double d2 = sqdist(x, centroids.row(c), d);
            if (d2 < best) {
                best = d2;
                arg = static_cast<std::uint32_t>(c);
            }
        }
        out[i] = arg;
    }
}

KmeansResult lloyd(const double* points, std::size_t n, std::size_t d, std::size_t k,
                   int iters, std::uint64_t seed) {
    if (n == 0)
        throw InvalidArgument("k-means on empty input");
    if (k == 0 || k > n)
        throw InvalidArgument("k-means: more buckets than points");
    std::mt19937_64 rng(seed);
    auto init = kmeans_pp_indices(points, n, d, k, rng);

    KmeansResult res;
    res.centroids = DenseMatrix(k, d);
    res.assign.assign(n, 0);
    for (std::size_t c = 0; c < k; ++c)
        std::copy(points + init[c] * d, points + init[c] * d + d, res.centroids.row(c));

    std::vector<std::size_t> counts(k, 0);
    for (int it = 0; it < iters; ++it) {
        assign_nearest(points, n, d, res.centroids, res.assign.data());

        DenseMatrix sums(k, d);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t c = res.assign[i];
            ++counts[c];
            const double* x = points + i * d;
            double* s = sums.row(c);
            for (std::size_t kk = 0; kk < d; ++kk) s[kk] += x[kk];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            double inv = 1.0 / static_cast<double>(counts[c]);
            double* ctr = res.centroids.row(c);
            const double* s = sums.row(c);
            for (std::size_t kk = 0; kk < d; ++kk) ctr[kk] = s[kk] * inv;
        }
        // Re-seed empty clusters to the point farthest from its centroid.
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            double far = -1.0;
            std::size_t arg = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[res.assign[i]] <= 1) continue;
                double d2 = sqdist(points + i * d, res.centroids.row(res.assign[i]), d);
                if (d2 > far) {
                    far = d2;
                    arg = i;
                }
            }
            std::copy(points + arg * d, points + arg * d + d, res.centroids.row(c));
            --counts[res.assign[arg]];
            res.assign[arg] = static_cast<std::uint32_t>(c);
            counts[c] = 1;
        }
    }
    assign_nearest(points, n, d, res.centroids, res.assign.data());
    return res;
}

}  // namespace lcn
