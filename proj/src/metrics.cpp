#include "lcn/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "lcn/error.hpp"
#include "lcn/generators.hpp"
#include "lcn/geometry.hpp"
#include "lcn/lsh.hpp"
#include "lcn/nystrom.hpp"
#include "lcn/operator.hpp"
#include "lcn/sinkhorn.hpp"
#include "lcn/sparse_kernel.hpp"

namespace lcn {

PlanComparison compare_plans(const DenseMatrix& p_ref, const DenseMatrix& p_approx, double d_ref,
                             double d_approx) {
    if (p_ref.rows != p_approx.rows || p_ref.cols != p_approx.cols)
        throw DimensionError("compare_plans: shape mismatch");
    const std::size_t total = p_ref.data.size();
    if (total == 0)
        throw InvalidArgument("compare_plans: empty plans");

    PlanComparison cmp;
    cmp.rel_err_d = std::abs(d_approx - d_ref) / std::abs(d_ref);

    double mean_r = 0.0, mean_a = 0.0;
    for (std::size_t idx = 0; idx < total; ++idx) {
        mean_r += p_ref.data[idx];
        mean_a += p_approx.data[idx];
    }
    mean_r /= static_cast<double>(total);
    mean_a /= static_cast<double>(total);
    double cov = 0.0, var_r = 0.0, var_a = 0.0;
    for (std::size_t idx = 0; idx < total; ++idx) {
        double xr = p_ref.data[idx] - mean_r;
        double xa = p_approx.data[idx] - mean_a;
        cov += xr * xa;
        var_r += xr * xr;
        var_a += xa * xa;
    }
    if (var_r == 0.0 || var_a == 0.0)
        throw PccUndefinedError("compare_plans: constant plan, PCC undefined");
    cmp.pcc = cov / std::sqrt(var_r * var_a);

    // Top-0.1% sets with ties broken by (value desc, row asc, col asc); the
    // linear index already orders (row, col).
    const std::size_t k = static_cast<std::size_t>(
        std::ceil(0.001 * static_cast<double>(total)));
    auto top_set = [&](const DenseMatrix& plan) {
        std::vector<std::uint32_t> idx(total);
        std::iota(idx.begin(), idx.end(), 0u);
        auto cmp_entry = [&](std::uint32_t a, std::uint32_t b) {
            if (plan.data[a] != plan.data[b]) return plan.data[a] > plan.data[b];
            return a < b;
        };
        std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k - 1), idx.end(),
                         cmp_entry);
        idx.resize(k);
        std::sort(idx.begin(), idx.end());
        return idx;
    };
    auto top_r = top_set(p_ref);
    auto top_a = top_set(p_approx);
    std::vector<std::uint32_t> inter;
    std::set_intersection(top_r.begin(), top_r.end(), top_a.begin(), top_a.end(),
                          std::back_inserter(inter));
    cmp.iou = static_cast<double>(inter.size()) /
              static_cast<double>(2 * k - inter.size());
    return cmp;
}

namespace {

// First c points of the integer lattice scaled by D: adjacent centers sit at
// exactly distance D, matching the theorem's minimum separation.
DenseMatrix lattice_centers(std::size_t c, std::size_t d, double D) {
    const std::size_t side = static_cast<std::size_t>(
        std::ceil(std::pow(static_cast<double>(c), 1.0 / static_cast<double>(d))));
    DenseMatrix centers(c, d);
    for (std::size_t ci = 0; ci < c; ++ci) {
        std::size_t rest = ci;
        for (std::size_t k = 0; k < d; ++k) {
            centers(ci, k) = static_cast<double>(rest % side) * D;
            rest /= side;
        }
    }
    return centers;
}

}  // namespace

ClusteredStudyReport kernel_error_study_clustered(const ClusteredStudyParams& params) {
    if (params.r / params.D > 0.1)
        throw InvalidArgument("clustered study requires r/D <= 0.1");
    if (params.c < 2 || params.d < 1)
        throw InvalidArgument("clustered study needs >= 2 clusters");

    const std::size_t d = params.d, c = params.c;
    DenseMatrix centers = lattice_centers(c, d, params.D);

    std::mt19937_64 rng(params.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_in_cluster = [&](std::size_t ci, double* out) {
        double norm2 = 0.0;
        std::vector<double> dir(d);
        do {
            norm2 = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                dir[k] = gauss(rng);
                norm2 += dir[k] * dir[k];
            }
        } while (norm2 == 0.0);
        double radius = params.r * std::pow(unif(rng), 1.0 / static_cast<double>(d));
        double inv = radius / std::sqrt(norm2);
        for (std::size_t k = 0; k < d; ++k) out[k] = centers(ci, k) + dir[k] * inv;
    };

    std::vector<double> coords_p, coords_q;
    std::vector<std::uint32_t> label_p, label_q;
    auto push = [&](std::vector<double>& coords, std::vector<std::uint32_t>& labels,
                    const double* x, std::size_t ci) {
        coords.insert(coords.end(), x, x + d);
        labels.push_back(static_cast<std::uint32_t>(ci));
    };

    // Extremal facing pair across the closest center pair (0 and 1 on the
    // lattice): realizes the cross-cluster distance D - 2r.
    std::vector<double> buf(d);
    {
        std::vector<double> dir(d, 0.0);
        double norm = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            dir[k] = centers(1, k) - centers(0, k);
            norm += dir[k] * dir[k];
        }
        norm = std::sqrt(norm);
        for (std::size_t k = 0; k < d; ++k) dir[k] /= norm;
        for (std::size_t k = 0; k < d; ++k) buf[k] = centers(0, k) + params.r * dir[k];
        push(coords_p, label_p, buf.data(), 0);
        for (std::size_t k = 0; k < d; ++k) buf[k] = centers(1, k) - params.r * dir[k];
        push(coords_q, label_q, buf.data(), 1);
    }
    // Worst intra-cluster pair: two overlapping points on the boundary of
    // cluster 0 (K = 1 at distance r from the landmark).
    std::size_t overlap_i, overlap_j;
    {
        for (std::size_t k = 0; k < d; ++k) buf[k] = centers(0, k);
        buf[0] += params.r;
        overlap_i = label_p.size();
        push(coords_p, label_p, buf.data(), 0);
        overlap_j = label_q.size();
        push(coords_q, label_q, buf.data(), 0);
    }
    for (std::size_t ci = 0; ci < c; ++ci) {
        push(coords_p, label_p, centers.row(ci), ci);
        push(coords_q, label_q, centers.row(ci), ci);
        for (std::size_t e = 0; e < params.extra_per_cluster; ++e) {
            random_in_cluster(ci, buf.data());
            push(coords_p, label_p, buf.data(), ci);
            random_in_cluster(ci, buf.data());
            push(coords_q, label_q, buf.data(), ci);
        }
    }

    PointSet p(label_p.size(), d, "clustered-p");
    p.coords = coords_p;
    PointSet q(label_q.size(), d, "clustered-q");
    q.coords = coords_q;

    // Idealized LSH: each bucket covers exactly one cluster.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> raw;
    for (std::size_t i = 0; i < p.n; ++i)
        for (std::size_t j = 0; j < q.n; ++j)
            if (label_p[i] == label_q[j])
                raw.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    NeighborPairs pattern = NeighborPairs::from_pairs(p.n, q.n, std::move(raw));

    LandmarkSet landmarks;
    landmarks.method = LandmarkMethod::KMeans;
    landmarks.points = PointSet(c, d, "centers");
    landmarks.points.coords = centers.data;

    DenseKernel kernel = build_kernel(build_cost(p, q, CostKind::Euclidean, params.lambda));
    SparseKernel sparse = build_sparse(p, q, pattern, CostKind::Euclidean, params.lambda);
    NystromFactors factors = build_factors(p, q, landmarks, CostKind::Euclidean, params.lambda);
    LcnCorrection corr = build_correction(sparse, factors);

    DenseMatrix sp_dense(p.n, q.n);
    for (std::size_t i = 0; i < p.n; ++i)
        for (std::uint32_t e = sparse.row_ptr[i]; e < sparse.row_ptr[i + 1]; ++e)
            sp_dense(i, sparse.col[e]) = std::exp(sparse.logvals[e]);

    ClusteredStudyReport report;
    for (std::size_t i = 0; i < p.n; ++i) {
        for (std::size_t j = 0; j < q.n; ++j) {
            double exact = std::exp(kernel.logk(i, j));
            double nys = factors.entry(i, j);
            double lcn = nys;
            report.max_err_sparse = std::max(report.max_err_sparse, exact - sp_dense(i, j));
            report.max_err_nystrom = std::max(report.max_err_nystrom, exact - nys);
            if (i == overlap_i && j == overlap_j)
                report.nys_err_at_overlap = exact - nys;
            if (label_p[i] == label_q[j]) lcn = exact;  // corrected entries are exact
            report.max_err_lcn = std::max(report.max_err_lcn, exact - lcn);
        }
    }
    (void)corr;

    report.predicted_sparse = std::exp(-(params.D - 2.0 * params.r) / params.lambda);
    report.predicted_nys_overlap = 1.0 - std::exp(-2.0 * params.r / params.lambda);
    double e2r = std::exp(-2.0 * params.r / params.lambda);
    report.predicted_lcn = report.predicted_sparse * (1.0 - e2r * (2.0 - e2r));
    report.sparse_within_10pct =
        std::abs(report.max_err_sparse - report.predicted_sparse) <= 0.1 * report.predicted_sparse;
    report.nys_within_10pct = std::abs(report.nys_err_at_overlap - report.predicted_nys_overlap) <=
                              0.1 * report.predicted_nys_overlap;
    report.lcn_below_nys = report.max_err_lcn < report.max_err_nystrom;
    report.lcn_below_2x_sparse = report.max_err_lcn < 2.0 * report.predicted_sparse;
    return report;
}

UniformStudyReport kernel_error_study_uniform(const UniformStudyParams& params) {
    std::mt19937_64 rng(params.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t n = params.n;
    PointSet p(n, 2, "uniform-p"), q(n, 2, "uniform-q");
    for (double& v : p.coords) v = unif(rng);
    for (double& v : q.coords) v = unif(rng);

    // Landmarks arranged a priori on a grid; spacing 1/grid keeps them at
    // least 2R apart with R = 1/(2 grid).
    LandmarkSet landmarks;
    landmarks.method = LandmarkMethod::KMeans;
    landmarks.points = PointSet(params.grid * params.grid, 2, "grid");
    for (std::size_t a = 0; a < params.grid; ++a)
        for (std::size_t b = 0; b < params.grid; ++b) {
            double* x = landmarks.points.point(a * params.grid + b);
            x[0] = (static_cast<double>(a) + 0.5) / static_cast<double>(params.grid);
            x[1] = (static_cast<double>(b) + 0.5) / static_cast<double>(params.grid);
        }

    DenseKernel kernel = build_kernel(build_cost(p, q, CostKind::Euclidean, params.lambda));
    NystromFactors factors = build_factors(p, q, landmarks, CostKind::Euclidean, params.lambda);

    // k-th nearest neighbors of each source point among the sinks.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> nn_pairs;
    UniformStudyReport report;
    double sum1 = 0.0, sum5 = 0.0;
    std::vector<std::pair<double, std::uint32_t>> dists(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            dists[j] = {cost_value(CostKind::Euclidean, p.point(i), q.point(j), 2),
                        static_cast<std::uint32_t>(j)};
        std::partial_sort(dists.begin(), dists.begin() + 5, dists.end());
        auto err_at = [&](std::size_t rank) {
            std::uint32_t j = dists[rank].second;
            return std::exp(kernel.logk(i, j)) - factors.entry(i, j);
        };
        sum1 += err_at(0);
        sum5 += err_at(4);
        nn_pairs.emplace_back(static_cast<std::uint32_t>(i), dists[0].second);
    }
    report.mean_err_nn1 = sum1 / static_cast<double>(n);
    report.mean_err_nn5 = sum5 / static_cast<double>(n);

    NeighborPairs pattern = NeighborPairs::from_pairs(n, n, std::move(nn_pairs));
    SparseKernel sparse = build_sparse(p, q, pattern, CostKind::Euclidean, params.lambda);
    LcnCorrection corr = build_correction(sparse, factors);
    DenseMatrix delta(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::uint32_t e = corr.row_ptr[i]; e < corr.row_ptr[i + 1]; ++e)
            delta(i, corr.col[e]) = corr.delta[e];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double exact = std::exp(kernel.logk(i, j));
            double nys = factors.entry(i, j);
            report.max_err_nystrom = std::max(report.max_err_nystrom, exact - nys);
            report.max_err_lcn = std::max(report.max_err_lcn, exact - (nys + delta(i, j)));
        }
    }
    return report;
}

TheoremCheckReport run_theorem_checks(std::uint64_t seed) {
    TheoremCheckReport report;
    ClusteredStudyParams clustered;
    clustered.seed = seed;
    report.clustered = kernel_error_study_clustered(clustered);
    UniformStudyParams uniform;
    uniform.seed = seed;
    report.uniform = kernel_error_study_uniform(uniform);

    const std::size_t n = 30;
    const double lambda = 0.5, eps = 1e-2;
    PointSet p = sample_uniform_ball(n, 3, seed * 31 + 5, "p");
    PointSet q = sample_uniform_ball(n, 3, seed * 37 + 11, "q");
    Marginals marg = Marginals::uniform(n, n);
    KernelOperator op =
        KernelOperator::dense(build_kernel(build_cost(p, q, CostKind::Euclidean, lambda)), lambda);
    report.iteration_bound = iteration_bound(op, marg, eps);
    SinkhornOptions opts;
    opts.tol = eps;
    opts.max_iters = 1000000;
    SinkhornResult res = sinkhorn(op, marg, opts);
    report.observed_iters = res.iters;
    report.bound_respected = res.converged && res.iters <= report.iteration_bound;

    PointSet all = union_points(p, q);
    for (std::size_t i = 0; i < all.n; ++i)
        for (std::size_t j = i + 1; j < all.n; ++j)
            report.rho = std::max(
                report.rho, cost_value(CostKind::Euclidean, all.point(i), all.point(j), all.dim));
    report.eps_prime = std::min(
        1.0, eps / (50.0 * (report.rho +
                            lambda * std::log(lambda * static_cast<double>(n) / eps))));
    report.kernel_error_threshold = 0.5 * report.eps_prime * std::exp(-report.rho / lambda);
    return report;
}

std::string sweep_csv_header() {
    return "variant,n,m,lambda,budget,rel_err_d,pcc,iou,iters,ms_kernel,ms_ot";
}

namespace {

std::string opt_to_csv(const std::optional<double>& v) {
    if (!v) return "";
    std::ostringstream os;
    os.precision(10);
    os << *v;
    return os.str();
}

}  // namespace

std::string sweep_csv_row(const SweepRow& row) {
    std::ostringstream os;
    os.precision(10);
    os << row.variant << ',' << row.n << ',' << row.m << ',' << row.lambda << ',' << row.budget
       << ',' << opt_to_csv(row.rel_err_d) << ',' << opt_to_csv(row.pcc) << ','
       << opt_to_csv(row.iou) << ',' << row.iters << ',' << opt_to_csv(row.ms_kernel) << ','
       << opt_to_csv(row.ms_ot);
    return os.str();
}

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

}  // namespace

std::vector<SweepRow> runtime_sweep(const RuntimeSweepParams& params) {
    std::vector<SweepRow> rows;
    const std::size_t dense_cap = 5000;
    for (std::size_t n : params.sizes) {
        PointSet p = sample_uniform_ball(n, params.dim, params.seed * 7919 + n, "sweep-p");
        PointSet q = sample_uniform_ball(n, params.dim, params.seed * 104729 + n + 1, "sweep-q");
        Marginals marg = Marginals::uniform(n, n);
        for (const std::string& variant : params.variants) {
            if (variant == "dense" && n > dense_cap) continue;
            SweepRow row;
            row.variant = variant;
            row.n = row.m = n;
            row.lambda = params.lambda;
            row.budget = params.row_degree;

            auto t0 = std::chrono::steady_clock::now();
            std::optional<KernelOperator> op;
            int sweeps = params.ot_sweeps_dense;
            if (variant == "dense") {
                op = KernelOperator::dense(
                    build_kernel(build_cost(p, q, CostKind::Euclidean, params.lambda)),
                    params.lambda);
            } else if (variant == "sparse") {
                LshConfig lsh;
                lsh.scheme = LshScheme::KMeans;
                lsh.buckets_per_fn =
                    static_cast<int>(std::max<std::size_t>(2, n / params.row_degree));
                lsh.seed = params.seed + n;
                NeighborPairs pairs = lsh_neighbor_pairs(p, q, lsh);
                op = KernelOperator::sparse(
                    build_sparse(p, q, pairs, CostKind::Euclidean, params.lambda), params.lambda);
                sweeps = params.ot_sweeps_sparse;
            } else if (variant == "nystrom" || variant == "lcn") {
                std::size_t budget = params.row_degree;
                std::size_t landmarks_n = variant == "lcn" ? budget / 2 : budget;
                LandmarkSet lm = select_landmarks(p, q, std::max<std::size_t>(1, landmarks_n),
                                                  LandmarkMethod::KMeans, params.seed + n);
                NystromFactors factors =
                    build_factors(p, q, lm, CostKind::Euclidean, params.lambda);
                if (variant == "nystrom") {
                    op = KernelOperator::nystrom(std::move(factors));
                } else {
                    LshConfig lsh;
                    lsh.scheme = LshScheme::KMeans;
                    lsh.buckets_per_fn = static_cast<int>(
                        std::max<std::size_t>(2, n / std::max<std::size_t>(1, budget / 2)));
                    lsh.seed = params.seed + n;
                    NeighborPairs pairs = lsh_neighbor_pairs(p, q, lsh);
                    SparseKernel sparse =
                        build_sparse(p, q, pairs, CostKind::Euclidean, params.lambda);
                    LcnCorrection corr = build_correction(sparse, factors);
                    op = KernelOperator::lcn(std::move(factors), std::move(corr));
                }
            } else {
                throw InvalidArgument("runtime_sweep: unknown variant '" + variant + "'");
            }
            row.ms_kernel = elapsed_ms(t0);

            SinkhornOptions opts;
            opts.tol = 0.0;  // run exactly `sweeps` iterations
            opts.max_iters = sweeps;
            opts.check_support = false;
            opts.want_plan = false;
            std::vector<double> times;
            for (int rep = 0; rep < params.repetitions; ++rep) {
                auto t1 = std::chrono::steady_clock::now();
                SinkhornResult res = sinkhorn(*op, marg, opts);
                times.push_back(elapsed_ms(t1));
                row.iters = res.iters;
            }
            std::sort(times.begin(), times.end());
            row.ms_ot = times[times.size() / 2];
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace lcn
