#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lcn/matrix.hpp"

namespace lcn {

struct PlanComparison {
    double rel_err_d = 0.0;  // |d̃ - d| / |d|
    double pcc = 0.0;        // Pearson correlation over all n·m entries
    double iou = 0.0;        // Jaccard similarity of the top-0.1% entry sets
};

// Top-k set uses k = ceil(0.001 * n * m); ties broken by (value desc, row
// asc, col asc) so the IoU is deterministic across runs. Throws
// PccUndefinedError when either plan has zero variance.
PlanComparison compare_plans(const DenseMatrix& p_ref, const DenseMatrix& p_approx, double d_ref,
                             double d_approx);

// Theorem-check scenario: points inside c shared clusters with max in-cluster
// radius r and center separation >= D, r/D <= 0.1 enforced. Landmarks sit at
// the exact centers and each LSH bucket covers one cluster; the extremal
// cross-cluster facing pair and an overlapping boundary pair are always
// included so the max errors are realized.
struct ClusteredStudyParams {
    std::size_t d = 2;
    std::size_t c = 4;
    double D = 10.0;
    double r = 0.5;
    double lambda = 1.0;
    std::size_t extra_per_cluster = 6;  // random filler points per cluster per side
    std::uint64_t seed = 0;
};

struct ClusteredStudyReport {
    double max_err_sparse = 0.0;      // max K - K^sp
    double max_err_nystrom = 0.0;     // max K - K_Nys
    double max_err_lcn = 0.0;         // max K - K_LCN
    double nys_err_at_overlap = 0.0;  // error at the worst intra-cluster pair
    double predicted_sparse = 0.0;    // e^{-(D-2r)/λ}
    double predicted_nys_overlap = 0.0;  // 1 - e^{-2r/λ}
    double predicted_lcn = 0.0;       // e^{-(D-2r)/λ}(1 - e^{-2r/λ}(2 - e^{-2r/λ}))
    bool sparse_within_10pct = false;
    bool nys_within_10pct = false;
    bool lcn_below_nys = false;
    bool lcn_below_2x_sparse = false;
};

ClusteredStudyReport kernel_error_study_clustered(const ClusteredStudyParams& params);

// Uniform data on the unit square with a priori grid landmarks: mean Nyström
// error at the 1st vs 5th nearest neighbor, and max kernel error of LCN
// (1-NN pattern) vs plain Nyström.
struct UniformStudyParams {
    std::size_t n = 200;
    double lambda = 0.1;
    std::size_t grid = 3;  // grid x grid landmarks
    std::uint64_t seed = 0;
};

struct UniformStudyReport {
    double mean_err_nn1 = 0.0;
    double mean_err_nn5 = 0.0;
    double max_err_lcn = 0.0;
    double max_err_nystrom = 0.0;
};

UniformStudyReport kernel_error_study_uniform(const UniformStudyParams& params);

// Aggregate report for the theorem-check driver.
struct TheoremCheckReport {
    ClusteredStudyReport clustered;
    UniformStudyReport uniform;
    double iteration_bound = 0.0;  // Theorem-D style bound on a dense instance
    int observed_iters = 0;
    bool bound_respected = false;
    double rho = 0.0;             // max pairwise sample distance of the instance
    double eps_prime = 0.0;       // ε' = min(1, ε / (50(ρ + λ log(λn/ε))))
    double kernel_error_threshold = 0.0;  // (ε'/2) e^{-ρ/λ}
};

// Clustered + uniform studies plus a convergence-bound check on a dense
// uniform-ball instance (n = 30, λ = 0.5, ε = 1e-2).
TheoremCheckReport run_theorem_checks(std::uint64_t seed);

// Fixed output schema shared by the CLI and the sweep:
// variant,n,m,lambda,budget,rel_err_d,pcc,iou,iters,ms_kernel,ms_ot
struct SweepRow {
    std::string variant;
    std::size_t n = 0, m = 0;
    double lambda = 0.0;
    std::size_t budget = 0;
    std::optional<double> rel_err_d, pcc, iou;
    int iters = 0;
    std::optional<double> ms_kernel, ms_ot;
};

std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& row);

// App-J style scaling sweep: per size and variant, timed kernel-construction
// and OT phases on uniform-ball data at fixed expected row degree. The OT
// phase runs a fixed number of sweeps so ratios compare like with like.
struct RuntimeSweepParams {
    std::vector<std::size_t> sizes;
    std::vector<std::string> variants{"sparse", "dense"};
    std::size_t dim = 16;
    double lambda = 0.05;
    std::size_t row_degree = 16;  // sparse budget; dense ignores it
    int ot_sweeps_dense = 10;
    int ot_sweeps_sparse = 200;
    int repetitions = 3;  // median wall time
    std::uint64_t seed = 1;
};

std::vector<SweepRow> runtime_sweep(const RuntimeSweepParams& params);

}  // namespace lcn
