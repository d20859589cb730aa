#include "lcn/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lcn/error.hpp"

namespace lcn {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lse2(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double hi = std::max(a, b);
    return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}

// log(Σ_k e^{x_k}), serial.
double lse(std::span<const double> x) {
    double hi = kNegInf;
    for (double v : x) hi = std::max(hi, v);
    if (hi == kNegInf) return kNegInf;
    double acc = 0.0;
    for (double v : x) acc += std::exp(v - hi);
    return hi + std::log(acc);
}

}  // namespace

BpExtension BpExtension::from_costs(std::span<const double> cost_p, std::span<const double> cost_q,
                                    double lambda) {
    if (!(lambda > 0.0))
        throw InvalidArgument("BpExtension: lambda must be positive");
    BpExtension bp;
    bp.del_p.reserve(cost_p.size());
    bp.del_q.reserve(cost_q.size());
    for (double c : cost_p) bp.del_p.push_back(std::exp(-c / lambda));
    for (double c : cost_q) bp.del_q.push_back(std::exp(-c / lambda));
    return bp;
}

const char* kind_name(KernelOperator::Kind kind) {
    switch (kind) {
        case KernelOperator::Kind::Dense: return "dense";
        case KernelOperator::Kind::Sparse: return "sparse";
        case KernelOperator::Kind::Nystrom: return "nystrom";
        case KernelOperator::Kind::Lcn: return "lcn";
    }
    return "?";
}

KernelOperator KernelOperator::dense(DenseKernel kernel, double lambda) {
    if (!(lambda > 0.0))
        throw InvalidArgument("dense operator: lambda must be positive");
    KernelOperator op;
    op.kind_ = Kind::Dense;
    op.n_ = kernel.logk.rows;
    op.m_ = kernel.logk.cols;
    op.lambda_ = lambda;
    op.dense_ = std::make_shared<const DenseKernel>(std::move(kernel));
    return op;
}

KernelOperator KernelOperator::sparse(SparseKernel kernel, double lambda) {
    if (!(lambda > 0.0))
        throw InvalidArgument("sparse operator: lambda must be positive");
    KernelOperator op;
    op.kind_ = Kind::Sparse;
    op.n_ = kernel.n;
    op.m_ = kernel.m;
    op.lambda_ = lambda;
    if (kernel.col_ptr.size() != kernel.m + 1) kernel.build_csc();
    op.sparse_ = std::make_shared<const SparseKernel>(std::move(kernel));
    return op;
}

KernelOperator KernelOperator::nystrom(NystromFactors factors) {
    KernelOperator op;
    op.kind_ = Kind::Nystrom;
    op.n_ = factors.n;
    op.m_ = factors.m;
    op.lambda_ = factors.lambda;
    op.factors_ = std::make_shared<const NystromFactors>(std::move(factors));
    return op;
}

KernelOperator KernelOperator::lcn(NystromFactors factors, LcnCorrection correction) {
    if (factors.n != correction.n || factors.m != correction.m)
        throw DimensionError("lcn operator: factor/correction shape mismatch");
    KernelOperator op;
    op.kind_ = Kind::Lcn;
    op.n_ = factors.n;
    op.m_ = factors.m;
    op.lambda_ = factors.lambda;
    op.factors_ = std::make_shared<const NystromFactors>(std::move(factors));
    op.correction_ = std::make_shared<const LcnCorrection>(std::move(correction));
    return op;
}

KernelOperator KernelOperator::with_bp(BpExtension bp) const {
    if (bp.del_p.size() != n_ || bp.del_q.size() != m_)
        throw DimensionError("with_bp: deletion vector length mismatch");
    for (double v : bp.del_p)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw InvalidArgument("with_bp: deletion kernels must be finite and nonnegative");
    for (double v : bp.del_q)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw InvalidArgument("with_bp: deletion kernels must be finite and nonnegative");
    KernelOperator op = *this;
    op.bp_ = std::make_shared<const BpExtension>(std::move(bp));
    return op;
}

std::string KernelOperator::name() const {
    std::string s = kind_name(kind_);
    if (has_bp()) s += "+bp";
    return s;
}

std::vector<double> KernelOperator::base_log_matvec(std::span<const double> log_t) const {
    switch (kind_) {
        case Kind::Dense: {
            const DenseMatrix& lk = dense_->logk;
            std::vector<double> out(n_, kNegInf);
#pragma omp parallel for schedule(static) if (n_ > 64)
            for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n_); ++ii) {
                const std::size_t i = static_cast<std::size_t>(ii);
                const double* row = lk.row(i);
                double hi = kNegInf;
                for (std::size_t j = 0; j < m_; ++j) hi = std::max(hi, row[j] + log_t[j]);
                if (hi == kNegInf) continue;
                double acc = 0.0;
                for (std::size_t j = 0; j < m_; ++j) acc += std::exp(row[j] + log_t[j] - hi);
                out[i] = hi + std::log(acc);
            }
            return out;
        }
        case Kind::Sparse:
            return sparse_log_matvec(*sparse_, log_t);
        case Kind::Nystrom:
        case Kind::Lcn: {
            // The low-rank middle cannot run in log-space; shift by the max,
            // combine linearly, and return to logs.
            double hi = kNegInf;
            for (double v : log_t) hi = std::max(hi, v);
            if (hi == kNegInf) return std::vector<double>(n_, kNegInf);
            std::vector<double> tt(m_);
            for (std::size_t j = 0; j < m_; ++j) tt[j] = std::exp(log_t[j] - hi);
            std::vector<double> y;
            try {
                y = nys_matvec(*factors_, tt);
            } catch (const NegativeKernelError&) {
                throw NegativeKernelError(std::string(kind_name(kind_)) +
                                          " matvec produced a nonpositive entry");
            }
            if (kind_ == Kind::Lcn) {
                std::vector<double> corr = correction_matvec(*correction_, tt);
                for (std::size_t i = 0; i < n_; ++i) y[i] += corr[i];
            }
            std::vector<double> out(n_);
            for (std::size_t i = 0; i < n_; ++i) {
                if (!(y[i] > 0.0))
                    throw NegativeKernelError(std::string(kind_name(kind_)) +
                                              " matvec produced a nonpositive entry");
                out[i] = hi + std::log(y[i]);
            }
            return out;
        }
    }
    throw Error("unreachable");
}

std::vector<double> KernelOperator::base_log_matvec_t(std::span<const double> log_s) const {
    switch (kind_) {
        case Kind::Dense: {
            const DenseMatrix& lk = dense_->logk;
            std::vector<double> out(m_, kNegInf);
#pragma omp parallel for schedule(static) if (m_ > 64)
            for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(m_); ++jj) {
                const std::size_t j = static_cast<std::size_t>(jj);
                double hi = kNegInf;
                for (std::size_t i = 0; i < n_; ++i) hi = std::max(hi, lk(i, j) + log_s[i]);
                if (hi == kNegInf) continue;
                double acc = 0.0;
                for (std::size_t i = 0; i < n_; ++i) acc += std::exp(lk(i, j) + log_s[i] - hi);
                out[j] = hi + std::log(acc);
            }
            return out;
        }
        case Kind::Sparse:
            return sparse_log_matvec_t(*sparse_, log_s);
        case Kind::Nystrom:
        case Kind::Lcn: {
            double hi = kNegInf;
            for (double v : log_s) hi = std::max(hi, v);
            if (hi == kNegInf) return std::vector<double>(m_, kNegInf);
            std::vector<double> ss(n_);
            for (std::size_t i = 0; i < n_; ++i) ss[i] = std::exp(log_s[i] - hi);
            std::vector<double> y;
            try {
                y = nys_matvec_t(*factors_, ss);
            } catch (const NegativeKernelError&) {
                throw NegativeKernelError(std::string(kind_name(kind_)) +
                                          " transposed matvec produced a nonpositive entry");
            }
            if (kind_ == Kind::Lcn) {
                std::vector<double> corr = correction_matvec_t(*correction_, ss);
                for (std::size_t j = 0; j < m_; ++j) y[j] += corr[j];
            }
            std::vector<double> out(m_);
            for (std::size_t j = 0; j < m_; ++j) {
                if (!(y[j] > 0.0))
                    throw NegativeKernelError(std::string(kind_name(kind_)) +
                                              " transposed matvec produced a nonpositive entry");
                out[j] = hi + std::log(y[j]);
            }
            return out;
        }
    }
    throw Error("unreachable");
}

std::vector<double> KernelOperator::log_matvec(std::span<const double> log_t) const {
    if (!has_bp()) {
        if (log_t.size() != m_)
            throw DimensionError("log_matvec: vector length mismatch");
        return base_log_matvec(log_t);
    }
    // K_BP t = [K t̂ + c_{p,ε} ⊙ ť ; c_{ε,q} ⊙ t̂ + (1^T ť) 1]
    if (log_t.size() != m_ + n_)
        throw DimensionError("log_matvec: extended vector length mismatch");
    std::span<const double> upper = log_t.subspan(0, m_);
    std::span<const double> lower = log_t.subspan(m_, n_);
    std::vector<double> out(n_ + m_, kNegInf);
    std::vector<double> kt = base_log_matvec(upper);
    for (std::size_t i = 0; i < n_; ++i)
        out[i] = lse2(kt[i], std::log(bp_->del_p[i]) + lower[i]);
    double lower_total = lse(lower);
    for (std::size_t j = 0; j < m_; ++j)
        out[n_ + j] = lse2(std::log(bp_->del_q[j]) + upper[j], lower_total);
    return out;
}

std::vector<double> KernelOperator::log_matvec_t(std::span<const double> log_s) const {
    if (!has_bp()) {
        if (log_s.size() != n_)
            throw DimensionError("log_matvec_t: vector length mismatch");
        return base_log_matvec_t(log_s);
    }
    // K_BP^T s = [K^T ŝ + c_{ε,q} ⊙ š ; c_{p,ε} ⊙ ŝ + (1^T š) 1]
    if (log_s.size() != n_ + m_)
        throw DimensionError("log_matvec_t: extended vector length mismatch");
    std::span<const double> upper = log_s.subspan(0, n_);
    std::span<const double> lower = log_s.subspan(n_, m_);
    std::vector<double> out(m_ + n_, kNegInf);
    std::vector<double> kts = base_log_matvec_t(upper);
    for (std::size_t j = 0; j < m_; ++j)
        out[j] = lse2(kts[j], std::log(bp_->del_q[j]) + lower[j]);
    double lower_total = lse(lower);
    for (std::size_t i = 0; i < n_; ++i)
        out[m_ + i] = lse2(std::log(bp_->del_p[i]) + upper[i], lower_total);
    return out;
}

double KernelOperator::entry(std::size_t i, std::size_t j) const {
    switch (kind_) {
        case Kind::Dense:
            return std::exp(dense_->logk(i, j));
        case Kind::Sparse: {
            const SparseKernel& s = *sparse_;
            for (std::uint32_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e)
                if (s.col[e] == j) return std::exp(s.logvals[e]);
            return 0.0;
        }
        case Kind::Nystrom:
            return factors_->entry(i, j);
        case Kind::Lcn: {
            double v = factors_->entry(i, j);
            const LcnCorrection& c = *correction_;
            for (std::uint32_t e = c.row_ptr[i]; e < c.row_ptr[i + 1]; ++e)
                if (c.col[e] == j) return v + c.delta[e];
            return v;
        }
    }
    throw Error("unreachable");
}

DenseMatrix KernelOperator::densify() const {
    DenseMatrix out(n_, m_);
#pragma omp parallel for schedule(static) if (n_ > 32)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n_); ++ii)
        for (std::size_t j = 0; j < m_; ++j)
            out(static_cast<std::size_t>(ii), j) = entry(static_cast<std::size_t>(ii), j);
    return out;
}

double KernelOperator::min_positive_log_entry() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < m_; ++j) {
            double v = entry(i, j);
            if (v > 0.0) best = std::min(best, std::log(v));
        }
    }
    if (has_bp()) {
        for (double v : bp_->del_p)
            if (v > 0.0) best = std::min(best, std::log(v));
        for (double v : bp_->del_q)
            if (v > 0.0) best = std::min(best, std::log(v));
        best = std::min(best, 0.0);  // the all-ones block of the BP matrix
    }
    if (!std::isfinite(best))
        throw InvalidArgument("operator has no positive entry");
    return best;
}

}  // namespace lcn
