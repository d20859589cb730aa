#include "lcn/generators.hpp"

#include <cmath>
#include <random>

#include "lcn/error.hpp"

namespace lcn {

namespace {

void gaussian_direction(std::mt19937_64& rng, double* out, std::size_t d) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            out[k] = gauss(rng);
            norm2 += out[k] * out[k];
        }
    } while (norm2 == 0.0);
    double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t k = 0; k < d; ++k) out[k] *= inv;
}

}  // namespace

PointSet sample_uniform_ball(std::size_t n, std::size_t d, std::uint64_t seed,
                             const std::string& id) {
    if (n == 0 || d == 0)
        throw InvalidArgument("sample_uniform_ball: n and d must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    PointSet points(n, d, id);
    for (std::size_t i = 0; i < n; ++i) {
        double* x = points.point(i);
        gaussian_direction(rng, x, d);
        double radius = std::pow(unif(rng), 1.0 / static_cast<double>(d));
        for (std::size_t k = 0; k < d; ++k) x[k] *= radius;
    }
    return points;
}

ClusteredProblem sample_clustered(std::size_t n_per_side, std::size_t d, std::size_t c, double D,
                                  double r, std::uint64_t seed) {
    if (n_per_side == 0 || d == 0 || c == 0)
        throw InvalidArgument("sample_clustered: sizes must be positive");
    if (!(D > 0.0) || !(r >= 0.0))
        throw InvalidArgument("sample_clustered: D must be positive and r nonnegative");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // Box side grows with c^{1/d} so that c spheres of radius D/2 fit loosely.
    const double side = 2.0 * D * std::ceil(std::pow(static_cast<double>(c), 1.0 / static_cast<double>(d)));
    ClusteredProblem prob;
    prob.centers = DenseMatrix(c, d);
    for (std::size_t ci = 0; ci < c; ++ci) {
        int attempts = 0;
        while (true) {
            if (++attempts > 1000)
                throw InvalidArgument("sample_clustered: cannot place centers >= D apart (D too large for box)");
            for (std::size_t k = 0; k < d; ++k) prob.centers(ci, k) = unif(rng) * side;
            bool ok = true;
            for (std::size_t cj = 0; cj < ci && ok; ++cj) {
                double dist2 = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    double diff = prob.centers(ci, k) - prob.centers(cj, k);
                    dist2 += diff * diff;
                }
                ok = dist2 >= D * D;
            }
            if (ok) break;
        }
    }
    prob.min_center_dist = std::numeric_limits<double>::infinity();
    for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t cj = ci + 1; cj < c; ++cj) {
            double dist2 = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                double diff = prob.centers(ci, k) - prob.centers(cj, k);
                dist2 += diff * diff;
            }
            prob.min_center_dist = std::min(prob.min_center_dist, std::sqrt(dist2));
        }
    if (c == 1) prob.min_center_dist = 0.0;

    auto fill = [&](PointSet& points, std::vector<std::uint32_t>& labels, const char* id) {
        points = PointSet(n_per_side, d, id);
        labels.assign(n_per_side, 0);
        std::uniform_int_distribution<std::size_t> pick(0, c - 1);
        std::vector<double> dir(d);
        for (std::size_t i = 0; i < n_per_side; ++i) {
            std::size_t ci = pick(rng);
            labels[i] = static_cast<std::uint32_t>(ci);
            gaussian_direction(rng, dir.data(), d);
            double radius = r * std::pow(unif(rng), 1.0 / static_cast<double>(d));
            double* x = points.point(i);
            for (std::size_t k = 0; k < d; ++k) x[k] = prob.centers(ci, k) + radius * dir[k];
        }
    };
    fill(prob.p, prob.label_p, "clustered-p");
    fill(prob.q, prob.label_q, "clustered-q");
    return prob;
}

}  // namespace lcn
