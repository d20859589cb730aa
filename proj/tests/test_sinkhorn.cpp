#include <doctest.h>

#include <cmath>
#include <random>

#include "lcn/error.hpp"
#include "lcn/generators.hpp"
#include "lcn/reference.hpp"
#include "lcn/sinkhorn.hpp"

using namespace lcn;

namespace {

KernelOperator dense_op(const PointSet& p, const PointSet& q, double lambda,
                        CostKind kind = CostKind::Euclidean) {
    return KernelOperator::dense(build_kernel(build_cost(p, q, kind, lambda)), lambda);
}

Marginals random_marginals(std::size_t n, std::size_t m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.2, 1.0);
    Marginals marg;
    marg.p.resize(n);
    marg.q.resize(m);
    double sp = 0.0, sq = 0.0;
    for (double& v : marg.p) sp += v = unif(rng);
    for (double& v : marg.q) sq += v = unif(rng);
    for (double& v : marg.p) v /= sp;
    for (double& v : marg.q) v /= sq;
    return marg;
}

struct LcnSetup {
    KernelOperator op;
    SparseKernel sparse;
    NystromFactors factors;
    LcnCorrection correction;
};

LcnSetup make_lcn(const PointSet& p, const PointSet& q, double lambda, std::size_t landmarks,
                  std::size_t knn, std::uint64_t seed) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> raw;
    for (std::size_t i = 0; i < p.n; ++i) {
        std::vector<std::pair<double, std::uint32_t>> dist(q.n);
        for (std::size_t j = 0; j < q.n; ++j)
            dist[j] = {cost_value(CostKind::Euclidean, p.point(i), q.point(j), p.dim),
                       static_cast<std::uint32_t>(j)};
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(knn),
                          dist.end());
        for (std::size_t k = 0; k < knn; ++k)
            raw.emplace_back(static_cast<std::uint32_t>(i), dist[k].second);
    }
    NeighborPairs pattern = NeighborPairs::from_pairs(p.n, q.n, std::move(raw));
    SparseKernel sparse = build_sparse(p, q, pattern, CostKind::Euclidean, lambda);
    LandmarkSet lm = select_landmarks(p, q, landmarks, LandmarkMethod::KMeans, seed);
    NystromFactors factors = build_factors(p, q, lm, CostKind::Euclidean, lambda);
    LcnCorrection corr = build_correction(sparse, factors);
    KernelOperator op = KernelOperator::lcn(factors, corr);
    return {std::move(op), std::move(sparse), std::move(factors), std::move(corr)};
}

}  // namespace

TEST_CASE("1x1 problem is forced in one sweep") {
    PointSet p(1, 1, "p"), q(1, 1, "q");
    p.point(0)[0] = 0.0;
    q.point(0)[0] = 2.5;  // cost 2.5
    Marginals marg = Marginals::uniform(1, 1);
    SinkhornResult res = sinkhorn(dense_op(p, q, 0.8), marg);
    CHECK(res.iters == 1);
    CHECK(res.converged);
    CHECK((*res.plan.dense)(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(res.distance == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("2x2 zero-cost problem gives the uniform plan and -ln 4") {
    PointSet p(2, 1, "p"), q(2, 1, "q");
    p.coords = {0.3, 0.3};
    q.coords = {0.3, 0.3};  // all costs zero
    Marginals marg = Marginals::uniform(2, 2);
    SinkhornResult res = sinkhorn(dense_op(p, q, 1.0), marg);
    for (double v : res.plan.dense->data) CHECK(v == doctest::Approx(0.25).epsilon(1e-13));
    CHECK(res.distance == doctest::Approx(-std::log(4.0)).epsilon(1e-12));

    DenseCost cost = build_cost(p, q, CostKind::Euclidean, 1.0);
    CHECK(distance_dense(res.plan, cost.c, 1.0) ==
          doctest::Approx(-std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("dense solves match the serial linear-space reference") {
    std::mt19937_64 rng(101);
    for (int rep = 0; rep < 5; ++rep) {
        PointSet p = sample_uniform_ball(6, 3, 500 + rep, "p");
        PointSet q = sample_uniform_ball(6, 3, 600 + rep, "q");
        Marginals marg = random_marginals(6, 6, rng);
        double lambda = rep % 2 == 0 ? 0.5 : 0.1;

        SinkhornOptions opts;
        opts.tol = 1e-10;
        opts.max_iters = 100000;
        SinkhornResult res = sinkhorn(dense_op(p, q, lambda), marg, opts);

        ref::Solution want = ref::solve(
            ref::cost_matrix(p.coords, 6, q.coords, 6, 3, ref::Cost::Euclidean), 6, 6, marg.p,
            marg.q, lambda, 1e-10, 100000);
        REQUIRE(want.converged);
        REQUIRE(res.converged);
        CHECK(res.distance == doctest::Approx(want.distance).epsilon(1e-8));
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j)
                CHECK((*res.plan.dense)(i, j) ==
                      doctest::Approx(want.plan[i * 6 + j]).epsilon(1e-8));
    }
}

TEST_CASE("distance identity matches the direct objective") {
    std::mt19937_64 rng(111);
    PointSet p = sample_uniform_ball(5, 2, 700, "p");
    PointSet q = sample_uniform_ball(5, 2, 701, "q");
    Marginals marg = random_marginals(5, 5, rng);
    DenseCost cost = build_cost(p, q, CostKind::Euclidean, 0.3);
    SinkhornOptions opts;
    opts.tol = 1e-11;
    opts.max_iters = 50000;
    SinkhornResult res = sinkhorn(dense_op(p, q, 0.3), marg, opts);
    REQUIRE(res.converged);
    CHECK(res.distance == doctest::Approx(distance_dense(res.plan, cost.c, 0.3)).epsilon(1e-9));
}

TEST_CASE("gauge freedom leaves the plan unchanged") {
    std::mt19937_64 rng(121);
    PointSet p = sample_uniform_ball(6, 2, 800, "p");
    PointSet q = sample_uniform_ball(7, 2, 801, "q");
    Marginals marg = random_marginals(6, 7, rng);
    KernelOperator op = dense_op(p, q, 0.4);
    SinkhornResult res = sinkhorn(op, marg);

    SinkhornState shifted = res.state;
    const double alpha = 1.7;  // s *= e^a, t /= e^a
    for (double& v : shifted.log_s) v += alpha;
    for (double& v : shifted.log_t) v -= alpha;
    DenseMatrix original = densify_plan(res.plan);
    DenseMatrix moved = densify_plan(extract_plan(op, shifted));
    for (std::size_t idx = 0; idx < original.data.size(); ++idx)
        CHECK(moved.data[idx] == doctest::Approx(original.data[idx]).epsilon(1e-12));
}

TEST_CASE("marginal feasibility at convergence for every variant") {
    PointSet p = sample_uniform_ball(20, 3, 900, "p");
    PointSet q = sample_uniform_ball(20, 3, 901, "q");
    Marginals marg = Marginals::uniform(20, 20);
    const double lambda = 0.5;
    const double tol = 1e-8;
    SinkhornOptions opts;
    opts.tol = tol;
    opts.max_iters = 20000;

    auto check_feasible = [&](const KernelOperator& op) {
        SinkhornResult res = sinkhorn(op, marg, opts);
        REQUIRE(res.converged);
        double err = 0.0;
        for (std::size_t i = 0; i < 20; ++i) err += std::abs(res.row_marginal[i] - marg.p[i]);
        CHECK(err <= tol);
    };
    check_feasible(dense_op(p, q, lambda));
    LcnSetup lcn = make_lcn(p, q, lambda, 4, 3, 11);
    check_feasible(lcn.op);
    check_feasible(KernelOperator::sparse(
        build_sparse(p, q, NeighborPairs::full(20, 20), CostKind::Euclidean, lambda), lambda));
    LandmarkSet lm = select_landmarks(p, q, 6, LandmarkMethod::KMeans, 12);
    check_feasible(
        KernelOperator::nystrom(build_factors(p, q, lm, CostKind::Euclidean, lambda)));
}

TEST_CASE("lcn with all landmarks or full pattern collapses to dense") {
    PointSet p = sample_uniform_ball(12, 2, 1000, "p");
    PointSet q = sample_uniform_ball(12, 2, 1001, "q");
    Marginals marg = Marginals::uniform(12, 12);
    const double lambda = 0.4;
    SinkhornOptions opts;
    opts.tol = 1e-10;
    opts.max_iters = 50000;
    SinkhornResult dense = sinkhorn(dense_op(p, q, lambda), marg, opts);

    SUBCASE("landmarks = all points, empty correction") {
        LandmarkSet lm = select_landmarks(p, q, 24, LandmarkMethod::KMeansPPSampling, 5);
        NystromFactors f = build_factors(p, q, lm, CostKind::Euclidean, lambda);
        SparseKernel empty = build_sparse(p, q, NeighborPairs::from_pairs(12, 12, {}),
                                          CostKind::Euclidean, lambda);
        LcnCorrection corr = build_correction(empty, f);
        SinkhornResult res = sinkhorn(KernelOperator::lcn(f, corr), marg, opts);
        CHECK(res.distance == doctest::Approx(dense.distance).epsilon(1e-8));
        CHECK(distance_lcn(res.state, f, corr) ==
              doctest::Approx(dense.distance).epsilon(1e-8));
    }
    SUBCASE("full pattern corrects any landmark choice") {
        LandmarkSet lm = select_landmarks(p, q, 3, LandmarkMethod::KMeans, 6);
        NystromFactors f = build_factors(p, q, lm, CostKind::Euclidean, lambda);
        SparseKernel full =
            build_sparse(p, q, NeighborPairs::full(12, 12), CostKind::Euclidean, lambda);
        LcnCorrection corr = build_correction(full, f);
        SinkhornResult res = sinkhorn(KernelOperator::lcn(f, corr), marg, opts);
        CHECK(res.distance == doctest::Approx(dense.distance).epsilon(1e-8));
        CHECK(distance_lcn(res.state, f, corr) ==
              doctest::Approx(dense.distance).epsilon(1e-8));
    }
}

TEST_CASE("lcn on a clustered instance tracks the full distance within 5%") {
    ClusteredProblem prob = sample_clustered(50, 2, 5, 4.0, 0.35, 42);
    Marginals marg = Marginals::uniform(50, 50);
    const double lambda = 0.05;
    SinkhornOptions opts;
    opts.tol = 1e-9;
    opts.max_iters = 100000;
    SinkhornResult dense = sinkhorn(dense_op(prob.p, prob.q, lambda), marg, opts);
    LcnSetup lcn = make_lcn(prob.p, prob.q, lambda, 5, 10, 7);
    SinkhornResult res = sinkhorn(lcn.op, marg, opts);
    CHECK(std::abs(res.distance - dense.distance) <= 0.05 * std::abs(dense.distance));
    CHECK(distance_lcn(res.state, lcn.factors, lcn.correction) ==
          doctest::Approx(res.distance).epsilon(1e-9));
}

TEST_CASE("sparse operator without support only warns; empty row is fatal") {
    PointSet p = sample_uniform_ball(3, 2, 1100, "p");
    PointSet q = sample_uniform_ball(3, 2, 1101, "q");
    Marginals marg = Marginals::uniform(3, 3);

    SUBCASE("no support but no empty rows: warn and iterate") {
        // Rows {0,1} only reach column 0; no perfect matching exists.
        NeighborPairs pattern =
            NeighborPairs::from_pairs(3, 3, {{0, 0}, {1, 0}, {2, 1}, {2, 2}});
        SparseKernel s = build_sparse(p, q, pattern, CostKind::Euclidean, 0.5);
        SinkhornOptions opts;
        opts.max_iters = 50;
        SinkhornResult res = sinkhorn(KernelOperator::sparse(s, 0.5), marg, opts);
        CHECK_FALSE(res.warnings.empty());
        CHECK_FALSE(res.converged);
        CHECK(std::isfinite(res.distance));
    }
    SUBCASE("empty row underflows into a stabilization error naming the variant") {
        NeighborPairs pattern = NeighborPairs::from_pairs(3, 3, {{0, 0}, {2, 1}, {2, 2}});
        SparseKernel s = build_sparse(p, q, pattern, CostKind::Euclidean, 0.5);
        SinkhornOptions opts;
        opts.check_support = false;
        CHECK_THROWS_WITH_AS(sinkhorn(KernelOperator::sparse(s, 0.5), marg, opts),
                             doctest::Contains("sparse"), StabilizationError);
    }
}

TEST_CASE("negative lcn matvec surfaces as the negative-kernel error") {
    NystromFactors f;
    f.n = 2;
    f.m = 2;
    f.l = 1;
    f.lambda = 1.0;
    f.u = DenseMatrix(2, 1, 1.0);
    f.w = DenseMatrix(1, 2);
    f.w(0, 0) = -2.0;
    f.w(0, 1) = 1.0;
    LcnCorrection corr;
    corr.n = 2;
    corr.m = 2;
    corr.row_ptr = {0, 0, 0};
    corr.build_csc();
    Marginals marg = Marginals::uniform(2, 2);
    CHECK_THROWS_AS(sinkhorn(KernelOperator::lcn(f, corr), marg), NegativeKernelError);
}

TEST_CASE("bp block matvec follows the block formula") {
    // n = m = 1: K = [[k]], del_p = [a], del_q = [b].
    PointSet p(1, 1, "p"), q(1, 1, "q");
    p.point(0)[0] = 0.0;
    q.point(0)[0] = 1.0;
    const double lambda = 1.0;
    const double k = std::exp(-1.0);
    BpExtension bp;
    bp.del_p = {0.7};
    bp.del_q = {0.2};
    KernelOperator op = dense_op(p, q, lambda).with_bp(bp);
    std::vector<double> log_t{std::log(2.0), std::log(3.0)};  // t = (t̂, ť)
    std::vector<double> out = op.log_matvec(log_t);
    REQUIRE(out.size() == 2);
    CHECK(std::exp(out[0]) == doctest::Approx(k * 2.0 + 0.7 * 3.0).epsilon(1e-12));
    CHECK(std::exp(out[1]) == doctest::Approx(0.2 * 2.0 + 3.0).epsilon(1e-12));

    std::vector<double> log_s{std::log(0.5), std::log(4.0)};
    std::vector<double> out_t = op.log_matvec_t(log_s);
    CHECK(std::exp(out_t[0]) == doctest::Approx(k * 0.5 + 0.2 * 4.0).epsilon(1e-12));
    CHECK(std::exp(out_t[1]) == doctest::Approx(0.7 * 0.5 + 4.0).epsilon(1e-12));
}

TEST_CASE("bp with zero deletion kernels reduces to balanced OT") {
    std::mt19937_64 rng(131);
    for (int rep = 0; rep < 3; ++rep) {
        PointSet p = sample_uniform_ball(10, 2, 1200 + rep, "p");
        PointSet q = sample_uniform_ball(10, 2, 1300 + rep, "q");
        Marginals marg = random_marginals(10, 10, rng);
        const double lambda = 0.5;
        SinkhornOptions opts;
        opts.tol = 1e-12;
        opts.max_iters = 100000;

        SinkhornResult balanced = sinkhorn(dense_op(p, q, lambda), marg, opts);
        BpExtension bp;
        bp.del_p.assign(10, 0.0);
        bp.del_q.assign(10, 0.0);
        SinkhornResult ext = sinkhorn(dense_op(p, q, lambda).with_bp(bp), marg, opts);
        REQUIRE(ext.converged);
        DenseMatrix base = densify_plan(ext.plan);
        for (std::size_t i = 0; i < 10; ++i)
            for (std::size_t j = 0; j < 10; ++j)
                CHECK(base(i, j) ==
                      doctest::Approx((*balanced.plan.dense)(i, j)).epsilon(1e-8));
        for (double v : ext.plan.del_p_mass) CHECK(v == 0.0);
    }
}

TEST_CASE("a dominant deletion affinity routes the point's mass to epsilon") {
    // Source 0 sits far from every sink and has a huge deletion kernel.
    PointSet p(3, 1, "p"), q(3, 1, "q");
    p.coords = {8.0, 0.1, 0.2};
    q.coords = {0.0, 0.15, 0.25};
    Marginals marg = Marginals::uniform(3, 3);
    const double lambda = 0.5;
    BpExtension bp;
    bp.del_p = {std::exp(3.0), std::exp(-4.0), std::exp(-4.0)};
    bp.del_q = {std::exp(-4.0), std::exp(-4.0), std::exp(-4.0)};
    SinkhornOptions opts;
    opts.tol = 1e-11;
    opts.max_iters = 200000;
    SinkhornResult res = sinkhorn(dense_op(p, q, lambda).with_bp(bp), marg, opts);
    REQUIRE(res.converged);
    CHECK(res.plan.del_p_mass[0] >= 0.99 * marg.p[0]);

    // Dense BP-matrix oracle on the (n+m) x (m+n) densified matrix.
    const std::size_t n = 3, m = 3;
    std::vector<double> cbp((n + m) * (m + n), std::numeric_limits<double>::infinity());
    auto at = [&](std::size_t i, std::size_t j) -> double& { return cbp[i * (m + n) + j]; };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) at(i, j) = std::abs(p.coords[i] - q.coords[j]);
    for (std::size_t i = 0; i < n; ++i) at(i, m + i) = -lambda * std::log(bp.del_p[i]);
    for (std::size_t j = 0; j < m; ++j) at(n + j, j) = -lambda * std::log(bp.del_q[j]);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < n; ++i) at(n + j, m + i) = 0.0;
    std::vector<double> p_ext(marg.p), q_ext(marg.q);
    p_ext.insert(p_ext.end(), marg.q.begin(), marg.q.end());
    q_ext.insert(q_ext.end(), marg.p.begin(), marg.p.end());
    // exp(-inf/lambda) underflows to exactly 0 inside the reference solver.
    ref::Solution oracle = ref::solve(cbp, n + m, m + n, p_ext, q_ext, lambda, 1e-11, 200000);
    REQUIRE(oracle.converged);
    DenseMatrix got = densify_plan_extended(res.plan);
    for (std::size_t i = 0; i < n + m; ++i)
        for (std::size_t j = 0; j < m + n; ++j)
            CHECK(got(i, j) == doctest::Approx(oracle.plan[i * (m + n) + j]).epsilon(1e-8));
}

TEST_CASE("multihead lambda schedule") {
    CHECK(multihead_lambdas({8, 0.05})[3] == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(multihead_lambdas({1, 0.1})[0] == doctest::Approx(std::sqrt(2.0) * 0.1).epsilon(1e-15));

    PointSet p = sample_uniform_ball(5, 2, 1400, "p");
    PointSet q = sample_uniform_ball(5, 2, 1401, "q");
    Marginals marg = Marginals::uniform(5, 5);
    DenseCost cost = build_cost(p, q, CostKind::Euclidean, 0.2);
    auto heads = multihead(cost, marg, {4, 0.2}, {});
    REQUIRE(heads.size() == 4);
    for (const auto& head : heads) CHECK(head.error.empty());
    // Determinism: a rerun reproduces the distances bit for bit.
    auto again = multihead(cost, marg, {4, 0.2}, {});
    for (std::size_t k = 0; k < 4; ++k) CHECK(heads[k].distance == again[k].distance);
    // Heads are independent solves at their own λ_k.
    for (std::size_t k = 0; k < 4; ++k) {
        DenseCost one = cost;
        one.lambda = multihead_lambdas({4, 0.2})[k];
        SinkhornResult solo = sinkhorn(KernelOperator::dense(build_kernel(one), one.lambda), marg);
        CHECK(solo.distance == heads[k].distance);
    }
}

TEST_CASE("iteration bound evaluates the closed form and dominates practice") {
    // min K = e^{-1}, min marginal 0.1, ε = 0.1: 2 + 40(1 + ln 10) ≈ 134.10.
    DenseKernel kernel;
    kernel.logk = DenseMatrix(2, 2, 0.0);
    kernel.logk(0, 1) = -1.0;
    kernel.logk(1, 0) = -1.0;
    Marginals marg;
    marg.p = {0.1, 0.9};
    marg.q = {0.9, 0.1};
    double bound = iteration_bound(KernelOperator::dense(kernel, 1.0), marg, 0.1);
    CHECK(bound == doctest::Approx(2.0 + 40.0 * (1.0 + std::log(10.0))).epsilon(1e-12));
    CHECK(bound == doctest::Approx(134.10).epsilon(1e-3));

    DenseKernel ones;
    ones.logk = DenseMatrix(4, 4, 0.0);
    double plain = iteration_bound(KernelOperator::dense(ones, 1.0), Marginals::uniform(4, 4), 1.0);
    CHECK(plain == doctest::Approx(2.0 + 4.0 * std::log(4.0)).epsilon(1e-12));

    std::mt19937_64 rng(141);
    for (int rep = 0; rep < 5; ++rep) {
        PointSet p = sample_uniform_ball(15, 2, 1500 + rep, "p");
        PointSet q = sample_uniform_ball(15, 2, 1600 + rep, "q");
        Marginals m2 = random_marginals(15, 15, rng);
        KernelOperator op = dense_op(p, q, 0.5);
        SinkhornOptions opts;
        opts.tol = 1e-2;
        opts.max_iters = 100000;
        SinkhornResult res = sinkhorn(op, m2, opts);
        REQUIRE(res.converged);
        CHECK(static_cast<double>(res.iters) <= iteration_bound(op, m2, 1e-2));
    }
}

TEST_CASE("gradient of the dense distance is the plan (finite differences)") {
    std::mt19937_64 rng(151);
    PointSet p = sample_uniform_ball(3, 2, 1700, "p");
    PointSet q = sample_uniform_ball(3, 2, 1701, "q");
    Marginals marg = random_marginals(3, 3, rng);
    const double lambda = 0.6;
    SinkhornOptions opts;
    opts.tol = 1e-13;
    opts.max_iters = 100000;
    DenseCost cost = build_cost(p, q, CostKind::Euclidean, lambda);
    KernelOperator op = KernelOperator::dense(build_kernel(cost), lambda);
    SinkhornResult res = sinkhorn(op, marg, opts);
    REQUIRE(res.converged);
    Gradients grads = grad_cost(res, op);
    REQUIRE(grads.cost.has_value());
    CHECK_FALSE(grads.stale);

    const double h = 1e-6;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            auto objective = [&](double delta) {
                DenseCost perturbed = cost;
                perturbed.c(i, j) += delta;
                KernelOperator pop = KernelOperator::dense(build_kernel(perturbed), lambda);
                SinkhornResult pres = sinkhorn(pop, marg, opts);
                return distance_dense(pres.plan, perturbed.c, lambda);
            };
            double fd = (objective(h) - objective(-h)) / (2.0 * h);
            CHECK(std::abs(fd - (*grads.cost)(i, j)) <= 1e-5);
        }
    }
}

TEST_CASE("stale gradients are flagged before convergence") {
    PointSet p = sample_uniform_ball(5, 2, 1800, "p");
    PointSet q = sample_uniform_ball(5, 2, 1801, "q");
    Marginals marg = Marginals::uniform(5, 5);
    KernelOperator op = dense_op(p, q, 0.05);
    SinkhornOptions opts;
    opts.max_iters = 1;
    SinkhornResult res = sinkhorn(op, marg, opts);
    REQUIRE_FALSE(res.converged);
    CHECK(grad_cost(res, op).stale);
}

TEST_CASE("kernel-error ladder tightens distance and KL (Theorem C direction)") {
    std::mt19937_64 rng(161);
    PointSet p = sample_uniform_ball(12, 2, 1900, "p");
    PointSet q = sample_uniform_ball(12, 2, 1901, "q");
    Marginals marg = Marginals::uniform(12, 12);
    const double lambda = 0.5;
    SinkhornOptions opts;
    opts.tol = 1e-12;
    opts.max_iters = 200000;
    DenseKernel exact = build_kernel(build_cost(p, q, CostKind::Euclidean, lambda));
    SinkhornResult truth = sinkhorn(KernelOperator::dense(exact, lambda), marg, opts);

    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    DenseMatrix noise(12, 12);
    for (double& v : noise.data) v = unif(rng);

    double prev_gap = std::numeric_limits<double>::infinity();
    double prev_kl = std::numeric_limits<double>::infinity();
    for (double scale : {3e-2, 3e-3, 3e-4, 3e-5}) {
        DenseKernel perturbed = exact;
        for (std::size_t idx = 0; idx < perturbed.logk.data.size(); ++idx)
            perturbed.logk.data[idx] += scale * noise.data[idx];
        SinkhornResult approx = sinkhorn(KernelOperator::dense(perturbed, lambda), marg, opts);
        double gap = std::abs(approx.distance - truth.distance);
        double kl = 0.0;
        for (std::size_t idx = 0; idx < truth.plan.dense->data.size(); ++idx) {
            double a = truth.plan.dense->data[idx];
            double b = approx.plan.dense->data[idx];
            if (a > 0.0) kl += a * std::log(a / b);
        }
        CHECK(gap <= prev_gap);
        CHECK(kl <= prev_kl + 1e-15);
        prev_gap = gap;
        prev_kl = kl;
    }

    // Larger landmark budgets tighten LCN toward the dense distance.
    LcnSetup coarse = make_lcn(p, q, lambda, 2, 2, 3);
    LcnSetup fine = make_lcn(p, q, lambda, 12, 6, 3);
    double coarse_gap =
        std::abs(sinkhorn(coarse.op, marg, opts).distance - truth.distance);
    double fine_gap = std::abs(sinkhorn(fine.op, marg, opts).distance - truth.distance);
    CHECK(fine_gap <= coarse_gap);
}
