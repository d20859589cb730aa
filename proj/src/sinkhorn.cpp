#include "lcn/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "lcn/error.hpp"

namespace lcn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_finite(const std::vector<double>& v, const KernelOperator& op, const char* which) {
    for (double x : v)
        if (!std::isfinite(x))
            throw StabilizationError(std::string("sinkhorn: non-finite scaling (") + which +
                                     ") under the " + op.name() + " operator");
}

Plan extract_plan_impl(const KernelOperator& op, const std::vector<double>& log_s,
                       const std::vector<double>& log_t) {
    const std::size_t n = op.base_rows(), m = op.base_cols();
    Plan plan;
    plan.kind = op.kind();
    plan.bp = op.has_bp();
    plan.n = n;
    plan.m = m;

    switch (op.kind()) {
        case KernelOperator::Kind::Dense: {
            const DenseMatrix& lk = op.dense_kernel()->logk;
            DenseMatrix p(n, m);
#pragma omp parallel for schedule(static) if (n > 64)
            for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
                const std::size_t i = static_cast<std::size_t>(ii);
                for (std::size_t j = 0; j < m; ++j)
                    p(i, j) = std::exp(log_s[i] + lk(i, j) + log_t[j]);
            }
            plan.dense = std::move(p);
            break;
        }
        case KernelOperator::Kind::Sparse: {
            plan.pattern = op.sparse_kernel_ptr();
            const SparseKernel& s = *plan.pattern;
            plan.sparse_vals.assign(s.nnz(), 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::uint32_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e)
                    plan.sparse_vals[e] = std::exp(log_s[i] + s.logvals[e] + log_t[s.col[e]]);
            break;
        }
        case KernelOperator::Kind::Nystrom:
        case KernelOperator::Kind::Lcn: {
            const NystromFactors& f = *op.factors();
            DenseMatrix pu(n, f.l), pw(f.l, m);
            for (std::size_t i = 0; i < n; ++i) {
                double si = std::exp(log_s[i]);
                for (std::size_t a = 0; a < f.l; ++a) pu(i, a) = si * f.u(i, a);
            }
            for (std::size_t a = 0; a < f.l; ++a)
                for (std::size_t j = 0; j < m; ++j) pw(a, j) = f.w(a, j) * std::exp(log_t[j]);
            plan.p_u = std::move(pu);
            plan.p_w = std::move(pw);
            if (op.kind() == KernelOperator::Kind::Lcn) {
                plan.correction = op.correction_ptr();
                const LcnCorrection& c = *op.correction();
                plan.sp_vals.assign(c.delta.size(), 0.0);
                plan.sp_nys_vals.assign(c.delta.size(), 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    double si = std::exp(log_s[i]);
                    for (std::uint32_t e = c.row_ptr[i]; e < c.row_ptr[i + 1]; ++e) {
                        double tj = std::exp(log_t[c.col[e]]);
                        plan.sp_vals[e] = std::exp(log_s[i] + c.log_sp[e] + log_t[c.col[e]]);
                        plan.sp_nys_vals[e] = si * c.nys_vals[e] * tj;
                    }
                }
            }
            break;
        }
    }

    if (op.has_bp()) {
        const BpExtension& bp = *op.bp();
        plan.del_p_mass.assign(n, 0.0);
        plan.del_q_mass.assign(m, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            plan.del_p_mass[i] = bp.del_p[i] * std::exp(log_s[i] + log_t[m + i]);
        for (std::size_t j = 0; j < m; ++j)
            plan.del_q_mass[j] = bp.del_q[j] * std::exp(log_s[n + j] + log_t[j]);
        plan.bp_row_scale.assign(m, 0.0);
        plan.bp_col_scale.assign(n, 0.0);
        double sum_s = 0.0, sum_t = 0.0;
        for (std::size_t j = 0; j < m; ++j) sum_s += plan.bp_row_scale[j] = std::exp(log_s[n + j]);
        for (std::size_t i = 0; i < n; ++i) sum_t += plan.bp_col_scale[i] = std::exp(log_t[m + i]);
        plan.eps_mass = sum_s * sum_t;
    }
    return plan;
}

}  // namespace

SinkhornResult sinkhorn(const KernelOperator& op, const Marginals& marg,
                        const SinkhornOptions& opts) {
    marg.validate(/*balanced=*/!op.has_bp());
    if (marg.p.size() != op.base_rows() || marg.q.size() != op.base_cols())
        throw DimensionError("sinkhorn: marginal length does not match operator shape");
    if (opts.max_iters < 1)
        throw InvalidArgument("sinkhorn: max_iters must be >= 1");

    SinkhornResult result;

    // Extended marginals [p;q] / [q;p] under BP; totals already agree.
    std::vector<double> p(marg.p), q(marg.q);
    if (op.has_bp()) {
        p.insert(p.end(), marg.q.begin(), marg.q.end());
        q.insert(q.end(), marg.p.begin(), marg.p.end());
    }
    const std::size_t rows = p.size(), cols = q.size();

    if (op.kind() == KernelOperator::Kind::Sparse && !op.has_bp() && opts.check_support) {
        if (has_support(*op.sparse_kernel()) == SupportLevel::None) {
            result.warnings.push_back(
                "sparse kernel pattern has no support; Sinkhorn may not converge");
            std::fprintf(stderr, "lcn: warning: %s\n", result.warnings.back().c_str());
        }
    }

    double mass = 0.0;
    for (double v : p) mass += v;
    for (double v : q) mass += v;
    const double tol = opts.tol >= 0.0 ? opts.tol : 1e-6 * mass;

    std::vector<double> log_p(rows), log_q(cols);
    for (std::size_t i = 0; i < rows; ++i) log_p[i] = std::log(p[i]);
    for (std::size_t j = 0; j < cols; ++j) log_q[j] = std::log(q[j]);

    std::vector<double> log_s(rows, 0.0), log_t(cols, 0.0);
    std::vector<double> row_marg(rows, 0.0);

    // One sweep = s-update then t-update. After the t-update Pᵀ1 = q exactly,
    // so the marginal error reduces to ‖P1 - p‖₁, measured off the matvec
    // that the next s-update reuses.
    std::vector<double> kt = op.log_matvec(log_t);
    bool converged = false;
    double err = std::numeric_limits<double>::infinity();
    int iter = 0;
    while (iter < opts.max_iters) {
        ++iter;
        for (std::size_t i = 0; i < rows; ++i) log_s[i] = log_p[i] - kt[i];
        check_finite(log_s, op, "log s");
        std::vector<double> kts = op.log_matvec_t(log_s);
        for (std::size_t j = 0; j < cols; ++j) log_t[j] = log_q[j] - kts[j];
        check_finite(log_t, op, "log t");

        kt = op.log_matvec(log_t);
        err = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
            row_marg[i] = std::exp(log_s[i] + kt[i]);
            err += std::abs(row_marg[i] - p[i]);
        }
        result.state.marginal_err.push_back(err);
        if (err <= tol) {
            converged = true;
            break;
        }
    }

    result.iters = iter;
    result.converged = converged;
    result.marginal_err_final = err;
    result.row_marginal = row_marg;
    result.state.log_s = std::move(log_s);
    result.state.log_t = std::move(log_t);
    result.state.iters = iter;

    // d = λ(⟨log s̄, P1⟩ + ⟨log t̄, Pᵀ1⟩); the kernel term cancels ⟨P,C⟩
    // exactly, entropy included. Pᵀ1 = q after the t-update.
    double acc = 0.0;
    for (std::size_t i = 0; i < rows; ++i) acc += result.state.log_s[i] * row_marg[i];
    for (std::size_t j = 0; j < cols; ++j) acc += result.state.log_t[j] * q[j];
    result.distance = op.lambda() * acc;

    if (opts.want_plan)
        result.plan = extract_plan_impl(op, result.state.log_s, result.state.log_t);
    return result;
}

double distance_dense(const Plan& plan, const DenseMatrix& c, double lambda) {
    if (!(lambda > 0.0))
        throw InvalidArgument("distance_dense: lambda must be positive");
    double transport = 0.0, entropy = 0.0;
    if (plan.dense) {
        const DenseMatrix& p = *plan.dense;
        if (p.rows != c.rows || p.cols != c.cols)
            throw DimensionError("distance_dense: plan/cost shape mismatch");
        for (std::size_t idx = 0; idx < p.data.size(); ++idx) {
            double v = p.data[idx];
            if (v < 1e-300) continue;  // 0·log 0 = 0, and 0·∞ for masked costs
            transport += v * c.data[idx];
            entropy -= v * std::log(v);
        }
    } else if (plan.pattern) {
        const SparseKernel& s = *plan.pattern;
        if (s.n != c.rows || s.m != c.cols)
            throw DimensionError("distance_dense: plan/cost shape mismatch");
        for (std::size_t i = 0; i < s.n; ++i) {
            for (std::uint32_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e) {
                double v = plan.sparse_vals[e];
                if (v < 1e-300) continue;
                transport += v * c(i, s.col[e]);
                entropy -= v * std::log(v);
            }
        }
    } else {
        throw InvalidArgument("distance_dense: needs a dense or sparse plan");
    }
    return transport - lambda * entropy;
}

double distance_lcn(const SinkhornState& state, const NystromFactors& factors,
                    const LcnCorrection& correction) {
    const std::size_t n = factors.n, m = factors.m, l = factors.l;
    if (state.log_s.size() < n || state.log_t.size() < m)
        throw DimensionError("distance_lcn: state shape mismatch");
    std::vector<double> s_lin(n), t_lin(m);
    for (std::size_t i = 0; i < n; ++i) s_lin[i] = std::exp(state.log_s[i]);
    for (std::size_t j = 0; j < m; ++j) t_lin[j] = std::exp(state.log_t[j]);

    // P_Nys 1 = diag(s̄) U (W t̄) and 1ᵀ P_Nys = (s̄ᵀU) W diag(t̄).
    std::vector<double> wt(l, 0.0), su(l, 0.0);
    for (std::size_t a = 0; a < l; ++a) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += factors.w(a, j) * t_lin[j];
        wt[a] = acc;
    }
    for (std::size_t a = 0; a < l; ++a) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += factors.u(i, a) * s_lin[i];
        su[a] = acc;
    }
    double term = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t a = 0; a < l; ++a) row += factors.u(i, a) * wt[a];
        term += state.log_s[i] * (s_lin[i] * row);
    }
    for (std::size_t j = 0; j < m; ++j) {
        double col = 0.0;
        for (std::size_t a = 0; a < l; ++a) col += su[a] * factors.w(a, j);
        term += state.log_t[j] * (col * t_lin[j]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::uint32_t e = correction.row_ptr[i]; e < correction.row_ptr[i + 1]; ++e) {
            double mass = s_lin[i] * correction.delta[e] * t_lin[correction.col[e]];
            term += mass * (state.log_s[i] + state.log_t[correction.col[e]]);
        }
    }
    return factors.lambda * term;
}

Gradients grad_cost(const SinkhornResult& result, const KernelOperator& op) {
    Gradients grads;
    if (!result.converged) {
        grads.stale = true;
        std::fprintf(stderr, "lcn: warning: gradient requested before convergence (stale)\n");
    }
    if (op.has_bp())
        throw InvalidArgument("grad_cost: gradients are defined for the unextended operators");
    const Plan& plan = result.plan;
    const double lambda = op.lambda();
    switch (op.kind()) {
        case KernelOperator::Kind::Dense:
            grads.cost = *plan.dense;  // ∂d/∂C = P̄
            break;
        case KernelOperator::Kind::Sparse:
            grads.cost_sparse = plan.sparse_vals;
            break;
        case KernelOperator::Kind::Nystrom:
        case KernelOperator::Kind::Lcn: {
            const NystromFactors& f = *op.factors();
            const std::size_t n = f.n, m = f.m, l = f.l;
            std::vector<double> s_lin(n), t_lin(m);
            for (std::size_t i = 0; i < n; ++i) s_lin[i] = std::exp(result.state.log_s[i]);
            for (std::size_t j = 0; j < m; ++j) t_lin[j] = std::exp(result.state.log_t[j]);
            std::vector<double> wt(l, 0.0), su(l, 0.0);
            for (std::size_t a = 0; a < l; ++a) {
                double acc = 0.0;
                for (std::size_t j = 0; j < m; ++j) acc += f.w(a, j) * t_lin[j];
                wt[a] = acc;
            }
            for (std::size_t a = 0; a < l; ++a) {
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) acc += f.u(i, a) * s_lin[i];
                su[a] = acc;
            }
            DenseMatrix du(n, l), dw(l, m);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t a = 0; a < l; ++a) du(i, a) = -lambda * s_lin[i] * wt[a];
            for (std::size_t a = 0; a < l; ++a)
                for (std::size_t j = 0; j < m; ++j) dw(a, j) = -lambda * su[a] * t_lin[j];
            grads.u = std::move(du);
            grads.w = std::move(dw);
            if (op.kind() == KernelOperator::Kind::Lcn) {
                grads.log_sparse.assign(plan.sp_vals.size(), 0.0);
                grads.log_sparse_nys.assign(plan.sp_nys_vals.size(), 0.0);
                for (std::size_t e = 0; e < plan.sp_vals.size(); ++e) {
                    grads.log_sparse[e] = -lambda * plan.sp_vals[e];
                    // K^sp_Nys enters K_LCN with a minus sign, so the
                    // derivative of d w.r.t. its log-entries is positive;
                    // central finite differences confirm the sign.
                    grads.log_sparse_nys[e] = lambda * plan.sp_nys_vals[e];
                }
            }
            break;
        }
    }
    return grads;
}

std::vector<double> multihead_lambdas(const MultiHeadConfig& cfg) {
    if (cfg.heads < 1)
        throw InvalidArgument("multihead: heads must be >= 1");
    if (!(cfg.lambda > 0.0))
        throw InvalidArgument("multihead: lambda must be positive");
    std::vector<double> lambdas(static_cast<std::size_t>(cfg.heads));
    for (int k = 1; k <= cfg.heads; ++k)
        lambdas[static_cast<std::size_t>(k - 1)] =
            std::exp2(static_cast<double>(k) - static_cast<double>(cfg.heads) / 2.0) * cfg.lambda;
    return lambdas;
}

std::vector<HeadOutcome> multihead(const DenseCost& cost, const Marginals& marg,
                                   const MultiHeadConfig& cfg, const SinkhornOptions& opts) {
    std::vector<double> lambdas = multihead_lambdas(cfg);
    std::vector<HeadOutcome> out(lambdas.size());
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        out[k].lambda = lambdas[k];
        try {
            DenseCost head = cost;
            head.lambda = lambdas[k];
            KernelOperator op = KernelOperator::dense(build_kernel(head), lambdas[k]);
            SinkhornResult res = sinkhorn(op, marg, opts);
            out[k].distance = res.distance;
            out[k].iters = res.iters;
            out[k].converged = res.converged;
        } catch (const std::exception& e) {
            out[k].error = e.what();
        }
    }
    return out;
}

double iteration_bound(const KernelOperator& op, const Marginals& marg, double eps) {
    if (!(eps > 0.0))
        throw InvalidArgument("iteration_bound: eps must be positive");
    double min_log_k = op.min_positive_log_entry();
    double min_marg = std::numeric_limits<double>::infinity();
    for (double v : marg.p) min_marg = std::min(min_marg, v);
    for (double v : marg.q) min_marg = std::min(min_marg, v);
    return 2.0 + (-4.0 * (min_log_k + std::log(min_marg))) / eps;
}

Plan extract_plan(const KernelOperator& op, const SinkhornState& state) {
    if (state.log_s.size() != op.rows() || state.log_t.size() != op.cols())
        throw DimensionError("extract_plan: state shape mismatch");
    return extract_plan_impl(op, state.log_s, state.log_t);
}

DenseMatrix densify_plan(const Plan& plan) {
    DenseMatrix out(plan.n, plan.m);
    switch (plan.kind) {
        case KernelOperator::Kind::Dense:
            out = *plan.dense;
            break;
        case KernelOperator::Kind::Sparse: {
            const SparseKernel& s = *plan.pattern;
            for (std::size_t i = 0; i < s.n; ++i)
                for (std::uint32_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e)
                    out(i, s.col[e]) = plan.sparse_vals[e];
            break;
        }
        case KernelOperator::Kind::Nystrom:
        case KernelOperator::Kind::Lcn: {
            const DenseMatrix& pu = *plan.p_u;
            const DenseMatrix& pw = *plan.p_w;
#pragma omp parallel for schedule(static) if (plan.n > 64)
            for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(plan.n); ++ii) {
                const std::size_t i = static_cast<std::size_t>(ii);
                for (std::size_t j = 0; j < plan.m; ++j) {
                    double acc = 0.0;
                    for (std::size_t a = 0; a < pu.cols; ++a) acc += pu(i, a) * pw(a, j);
                    out(i, j) = acc;
                }
            }
            if (plan.kind == KernelOperator::Kind::Lcn) {
                const LcnCorrection& c = *plan.correction;
                for (std::size_t i = 0; i < c.n; ++i)
                    for (std::uint32_t e = c.row_ptr[i]; e < c.row_ptr[i + 1]; ++e)
                        out(i, c.col[e]) += plan.sp_vals[e] - plan.sp_nys_vals[e];
            }
            break;
        }
    }
    return out;
}

DenseMatrix densify_plan_extended(const Plan& plan) {
    if (!plan.bp)
        throw InvalidArgument("densify_plan_extended: plan has no BP extension");
    const std::size_t n = plan.n, m = plan.m;
    DenseMatrix out(n + m, m + n);
    DenseMatrix base = densify_plan(plan);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) out(i, j) = base(i, j);
    for (std::size_t i = 0; i < n; ++i) out(i, m + i) = plan.del_p_mass[i];
    for (std::size_t j = 0; j < m; ++j) out(n + j, j) = plan.del_q_mass[j];
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < n; ++i)
            out(n + j, m + i) = plan.bp_row_scale[j] * plan.bp_col_scale[i];
    return out;
}

}  // namespace lcn
