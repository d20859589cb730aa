#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "lcn/generators.hpp"
#include "lcn/nystrom.hpp"
#include "lcn/sparse_kernel.hpp"

using namespace lcn;

namespace {

NeighborPairs random_pattern(std::size_t n, std::size_t m, double density, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> raw;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (unif(rng) < density)
                raw.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    return NeighborPairs::from_pairs(n, m, std::move(raw));
}

// Permanent-positivity by permutation enumeration; also reports whether a
// given entry lies on some positive generalized diagonal.
bool brute_support(const DenseMatrix& mask) {
    const std::size_t n = mask.rows;
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    do {
        bool positive = true;
        for (std::size_t i = 0; i < n && positive; ++i) positive = mask(i, perm[i]) > 0.0;
        if (positive) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

bool brute_total_support(const DenseMatrix& mask) {
    const std::size_t n = mask.rows;
    DenseMatrix covered(n, n, 0.0);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    bool any = false;
    do {
        bool positive = true;
        for (std::size_t i = 0; i < n && positive; ++i) positive = mask(i, perm[i]) > 0.0;
        if (positive) {
            any = true;
            for (std::size_t i = 0; i < n; ++i) covered(i, perm[i]) = 1.0;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (!any) return false;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (mask(i, j) > 0.0 && covered(i, j) == 0.0) return false;
    return true;
}

}  // namespace

TEST_CASE("build_sparse stores exact kernel values") {
    PointSet p = sample_uniform_ball(6, 3, 1, "p");
    PointSet q = sample_uniform_ball(5, 3, 2, "q");

    SUBCASE("full pattern reproduces the dense kernel") {
        SparseKernel s = build_sparse(p, q, NeighborPairs::full(6, 5), CostKind::Euclidean, 0.4);
        CHECK(s.nnz() == 30);
        DenseKernel dense = build_kernel(build_cost(p, q, CostKind::Euclidean, 0.4));
        for (std::size_t i = 0; i < 6; ++i)
            for (std::uint32_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e)
                CHECK(s.logvals[e] == doctest::Approx(dense.logk(i, s.col[e])).epsilon(1e-15));
    }
    SUBCASE("empty pattern is the all-zero operator") {
        SparseKernel s = build_sparse(p, q, NeighborPairs::from_pairs(6, 5, {}),
                                      CostKind::Euclidean, 0.4);
        CHECK(s.nnz() == 0);
        std::vector<double> log_t(5, 0.0);
        for (double v : sparse_log_matvec(s, log_t))
            CHECK(v == -std::numeric_limits<double>::infinity());
    }
    SUBCASE("diagonal of zero costs stores ones") {
        PointSet same = sample_uniform_ball(3, 2, 3, "same");
        NeighborPairs diag = NeighborPairs::from_pairs(3, 3, {{0, 0}, {1, 1}, {2, 2}});
        SparseKernel s = build_sparse(same, same, diag, CostKind::Euclidean, 1.0);
        REQUIRE(s.nnz() == 3);
        for (double v : s.logvals) CHECK(std::exp(v) == 1.0);
    }
}

TEST_CASE("correction vanishes with all-point landmarks and equals K^sp without landmarks") {
    PointSet p = sample_uniform_ball(8, 2, 11, "p");
    PointSet q = sample_uniform_ball(8, 2, 12, "q");
    std::mt19937_64 rng(13);
    NeighborPairs pattern = random_pattern(8, 8, 0.4, rng);
    SparseKernel sparse = build_sparse(p, q, pattern, CostKind::Euclidean, 0.5);

    SUBCASE("all points as landmarks: delta = 0 everywhere") {
        LandmarkSet lm = select_landmarks(p, q, 16, LandmarkMethod::KMeansPPSampling, 14);
        NystromFactors f = build_factors(p, q, lm, CostKind::Euclidean, 0.5);
        LcnCorrection corr = build_correction(sparse, f);
        for (double v : corr.delta) CHECK(v == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(corr.max_abs_delta <= 1e-9);
    }
    SUBCASE("far-away landmark: delta approaches the sparse values") {
        // A landmark far from the data drives K_Nys to ~0, the pure sparse limit.
        LandmarkSet lm;
        lm.points = PointSet(1, 2, "far");
        lm.points.point(0)[0] = 1e4;
        NystromFactors f = build_factors(p, q, lm, CostKind::Euclidean, 0.5);
        LcnCorrection corr = build_correction(sparse, f);
        for (std::size_t e = 0; e < corr.delta.size(); ++e)
            CHECK(corr.delta[e] == doctest::Approx(std::exp(sparse.logvals[e])).epsilon(1e-12));
    }
    SUBCASE("K_Nys + delta is exact at every stored pair") {
        LandmarkSet lm = select_landmarks(p, q, 3, LandmarkMethod::KMeans, 15);
        NystromFactors f = build_factors(p, q, lm, CostKind::Euclidean, 0.5);
        LcnCorrection corr = build_correction(sparse, f);
        for (std::size_t i = 0; i < 8; ++i)
            for (std::uint32_t e = corr.row_ptr[i]; e < corr.row_ptr[i + 1]; ++e) {
                double reconstructed = f.entry(i, corr.col[e]) + corr.delta[e];
                CHECK(reconstructed ==
                      doctest::Approx(std::exp(sparse.logvals[e])).epsilon(1e-12));
            }
    }
}

TEST_CASE("sparse matvec basics and oracle") {
    SUBCASE("identity pattern with unit values acts as identity") {
        PointSet same = sample_uniform_ball(2, 2, 21, "same");
        NeighborPairs diag = NeighborPairs::from_pairs(2, 2, {{0, 0}, {1, 1}});
        SparseKernel s = build_sparse(same, same, diag, CostKind::Euclidean, 1.0);
        std::vector<double> log_t{std::log(2.0), std::log(3.0)};
        std::vector<double> out = sparse_log_matvec(s, log_t);
        CHECK(std::exp(out[0]) == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(std::exp(out[1]) == doctest::Approx(3.0).epsilon(1e-15));
    }
    SUBCASE("random sparse 8x8 against the densified oracle") {
        PointSet p = sample_uniform_ball(8, 3, 22, "p");
        PointSet q = sample_uniform_ball(8, 3, 23, "q");
        std::mt19937_64 rng(24);
        NeighborPairs pattern = random_pattern(8, 8, 0.5, rng);
        SparseKernel s = build_sparse(p, q, pattern, CostKind::Euclidean, 0.6);
        std::uniform_real_distribution<double> unif(0.2, 2.0);
        std::vector<double> t(8), log_t(8), su(8), log_su(8);
        for (std::size_t j = 0; j < 8; ++j) {
            t[j] = unif(rng);
            log_t[j] = std::log(t[j]);
            su[j] = unif(rng);
            log_su[j] = std::log(su[j]);
        }
        DenseMatrix dense(8, 8, 0.0);
        for (std::size_t i = 0; i < 8; ++i)
            for (std::uint32_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e)
                dense(i, s.col[e]) = std::exp(s.logvals[e]);
        std::vector<double> got = sparse_log_matvec(s, log_t);
        std::vector<double> got_t = sparse_log_matvec_t(s, log_su);
        for (std::size_t i = 0; i < 8; ++i) {
            double want = 0.0;
            for (std::size_t j = 0; j < 8; ++j) want += dense(i, j) * t[j];
            if (want == 0.0)
                CHECK(got[i] == -std::numeric_limits<double>::infinity());
            else
                CHECK(std::exp(got[i]) == doctest::Approx(want).epsilon(1e-12));
        }
        for (std::size_t j = 0; j < 8; ++j) {
            double want = 0.0;
            for (std::size_t i = 0; i < 8; ++i) want += dense(i, j) * su[i];
            if (want == 0.0)
                CHECK(got_t[j] == -std::numeric_limits<double>::infinity());
            else
                CHECK(std::exp(got_t[j]) == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("correction matvec is linear") {
    PointSet p = sample_uniform_ball(10, 2, 31, "p");
    PointSet q = sample_uniform_ball(10, 2, 32, "q");
    std::mt19937_64 rng(33);
    NeighborPairs pattern = random_pattern(10, 10, 0.3, rng);
    SparseKernel sparse = build_sparse(p, q, pattern, CostKind::Euclidean, 0.5);
    LandmarkSet lm = select_landmarks(p, q, 4, LandmarkMethod::KMeans, 34);
    NystromFactors f = build_factors(p, q, lm, CostKind::Euclidean, 0.5);
    LcnCorrection corr = build_correction(sparse, f);

    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<double> t1(10), t2(10), combo(10);
    for (std::size_t j = 0; j < 10; ++j) {
        t1[j] = unif(rng);
        t2[j] = unif(rng);
        combo[j] = 2.5 * t1[j] - 0.75 * t2[j];
    }
    std::vector<double> a = correction_matvec(corr, t1);
    std::vector<double> b = correction_matvec(corr, t2);
    std::vector<double> c = correction_matvec(corr, combo);
    for (std::size_t i = 0; i < 10; ++i)
        CHECK(c[i] == doctest::Approx(2.5 * a[i] - 0.75 * b[i]).epsilon(1e-12));
}

TEST_CASE("support levels on named patterns") {
    SUBCASE("identity pattern has total support") {
        CHECK(has_support(NeighborPairs::from_pairs(3, 3, {{0, 0}, {1, 1}, {2, 2}})) ==
              SupportLevel::TotalSupport);
    }
    SUBCASE("an empty row kills support") {
        CHECK(has_support(NeighborPairs::from_pairs(2, 2, {{0, 0}, {0, 1}})) ==
              SupportLevel::None);
    }
    SUBCASE("support without total support") {
        // (0,1) lies on no positive diagonal: row 1 then needs col 1 too.
        NeighborPairs pattern =
            NeighborPairs::from_pairs(3, 3, {{0, 0}, {0, 1}, {1, 1}, {2, 2}});
        CHECK(has_support(pattern) == SupportLevel::Support);
    }
    SUBCASE("rectangular patterns cap at support") {
        CHECK(has_support(NeighborPairs::from_pairs(2, 3, {{0, 0}, {1, 1}})) ==
              SupportLevel::Support);
        CHECK(has_support(NeighborPairs::from_pairs(2, 3, {{0, 0}, {1, 0}})) ==
              SupportLevel::None);
    }
}

TEST_CASE("support agrees with permutation enumeration up to n = 7") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int rep = 0; rep < 300; ++rep) {
        std::size_t n = 1 + static_cast<std::size_t>(rng() % 7);
        double density = unif(rng);
        NeighborPairs pattern = random_pattern(n, n, density, rng);
        DenseMatrix mask(n, n, 0.0);
        for (auto [i, j] : pattern.pairs) mask(i, j) = 1.0;
        SupportLevel got = has_support(pattern);
        bool support = brute_support(mask);
        bool total = support && brute_total_support(mask);
        SupportLevel want = total      ? SupportLevel::TotalSupport
                            : support ? SupportLevel::Support
                                      : SupportLevel::None;
        CHECK(got == want);
    }
}

TEST_CASE("sparse kernel exports i,j,logK rows") {
    PointSet same = sample_uniform_ball(2, 2, 51, "same");
    NeighborPairs diag = NeighborPairs::from_pairs(2, 2, {{0, 0}, {1, 1}});
    SparseKernel s = build_sparse(same, same, diag, CostKind::Euclidean, 1.0);
    std::ostringstream out;
    write_sparse_csv(out, s);
    CHECK(out.str() == "i,j,logK\n0,0,0\n1,1,0\n");
}
