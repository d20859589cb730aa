#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lcn/operator.hpp"

namespace lcn {

struct SinkhornOptions {
    // Marginal-error threshold ‖P1-p‖₁ + ‖Pᵀ1-q‖₁; negative means the
    // default 1e-6 * (Σp + Σq) of the solved (possibly BP-extended) problem.
    double tol = -1.0;
    int max_iters = 500;
    // Warn when a sparse operator without BP lacks support.
    bool check_support = true;
    // Skip plan extraction (distance/scalings only), e.g. for timing runs.
    bool want_plan = true;
};

// Log-domain scaling vectors and the marginal-error trace. The error is
// recorded, never assumed nonincreasing.
struct SinkhornState {
    std::vector<double> log_s;
    std::vector<double> log_t;
    int iters = 0;
    std::vector<double> marginal_err;
};

// Decomposed transport plan. Dense and sparse variants store entries
// directly; the low-rank variants store P_U = diag(s̄) U and P_W = W diag(t̄)
// so that P = P_U P_W (+ P^sp - P^sp_Nys for LCN) is never densified.
struct Plan {
    KernelOperator::Kind kind = KernelOperator::Kind::Dense;
    bool bp = false;
    std::size_t n = 0, m = 0;

    std::optional<DenseMatrix> dense;
    std::shared_ptr<const SparseKernel> pattern;   // sparse variant
    std::vector<double> sparse_vals;               // P̄^sp entries, CSR order
    std::optional<DenseMatrix> p_u, p_w;           // nystrom / lcn
    std::shared_ptr<const LcnCorrection> correction;
    std::vector<double> sp_vals;      // lcn: diag(s̄) K^sp diag(t̄) at pattern
    std::vector<double> sp_nys_vals;  // lcn: diag(s̄) K^sp_Nys diag(t̄) at pattern

    // BP quadrants: per-point deletion masses, the ε-ε block as its scalar
    // total mass, and the lower scaling slices for densification.
    std::vector<double> del_p_mass, del_q_mass;
    double eps_mass = 0.0;
    std::vector<double> bp_row_scale, bp_col_scale;
};

struct SinkhornResult {
    double distance = 0.0;
    Plan plan;
    SinkhornState state;
    int iters = 0;
    bool converged = false;
    double marginal_err_final = 0.0;
    std::vector<double> row_marginal;  // P1 at termination, extended under BP
    std::vector<std::string> warnings;
};

// Log-stabilized Sinkhorn over any kernel operator. Under BP the marginals
// are extended to [p;q] and [q;p], which already carry equal total mass and
// reduce exactly to balanced OT when the deletion kernels vanish.
SinkhornResult sinkhorn(const KernelOperator& op, const Marginals& marg,
                        const SinkhornOptions& opts = {});

// ⟨P,C⟩ - λ H(P) with 0·log 0 = 0; entries below 1e-300 are dropped from the
// entropy. Accepts dense and sparse plans (C given densely).
double distance_dense(const Plan& plan, const DenseMatrix& c, double lambda);

// Decomposed evaluation of the LCN distance in O((n+m)l + nnz):
// λ(log s̄ᵀ P_U P_W 1 + 1ᵀ P_U P_W log t̄-weighted + log s̄ᵀ P^sp_Δ 1 + 1ᵀ P^sp_Δ log t̄).
double distance_lcn(const SinkhornState& state, const NystromFactors& factors,
                    const LcnCorrection& correction);

struct Gradients {
    bool stale = false;  // result was not converged
    std::optional<DenseMatrix> cost;       // dense: ∂d/∂C = P̄
    std::vector<double> cost_sparse;       // sparse: P̄ at the pattern
    std::optional<DenseMatrix> u, w;       // lcn/nystrom: ∂d/∂U, ∂d/∂W
    std::vector<double> log_sparse;        // lcn: ∂d/∂log K^sp = -λ P̄^sp
    std::vector<double> log_sparse_nys;    // lcn: ∂d/∂log K^sp_Nys = +λ P̄^sp_Nys
};

Gradients grad_cost(const SinkhornResult& result, const KernelOperator& op);

struct MultiHeadConfig {
    int heads = 1;
    double lambda = 0.05;
};

// λ_k = 2^{k - K/2} λ for k = 1..K.
std::vector<double> multihead_lambdas(const MultiHeadConfig& cfg);

struct HeadOutcome {
    double lambda = 0.0;
    double distance = 0.0;
    int iters = 0;
    bool converged = false;
    std::string error;  // empty on success
};

// Independent dense Sinkhorn solves over the λ schedule; no warm starts, a
// failing head is reported per-head.
std::vector<HeadOutcome> multihead(const DenseCost& cost, const Marginals& marg,
                                   const MultiHeadConfig& cfg, const SinkhornOptions& opts = {});

// k <= 2 - 4 ln(min⁺ K̃_ij · min(p_i, q_j)) / ε, the convergence bound for
// matrices with support.
double iteration_bound(const KernelOperator& op, const Marginals& marg, double eps);

DenseMatrix densify_plan(const Plan& plan);           // base block
DenseMatrix densify_plan_extended(const Plan& plan);  // BP plans, (n+m) x (m+n)

// Decomposed plan for given scalings; scaling s by α and t by 1/α leaves the
// extracted plan unchanged (gauge freedom).
Plan extract_plan(const KernelOperator& op, const SinkhornState& state);

}  // namespace lcn
