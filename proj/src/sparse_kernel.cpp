#include "lcn/sparse_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "lcn/error.hpp"
#include "lcn/matching.hpp"
#include "lcn/nystrom.hpp"

namespace lcn {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void build_csc_arrays(std::size_t m, const std::vector<std::uint32_t>& row_ptr,
                      const std::vector<std::uint32_t>& col, std::vector<std::uint32_t>& col_ptr,
                      std::vector<std::uint32_t>& row_idx, std::vector<std::uint32_t>& perm) {
    const std::size_t nnz = col.size();
    col_ptr.assign(m + 1, 0);
    for (std::uint32_t j : col) ++col_ptr[j + 1];
    for (std::size_t j = 0; j < m; ++j) col_ptr[j + 1] += col_ptr[j];
    row_idx.assign(nnz, 0);
    perm.assign(nnz, 0);
    std::vector<std::uint32_t> cursor(col_ptr.begin(), col_ptr.end() - 1);
    const std::size_t n = row_ptr.size() - 1;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::uint32_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
            std::uint32_t pos = cursor[col[e]]++;
            row_idx[pos] = static_cast<std::uint32_t>(i);
            perm[pos] = e;
        }
    }
}

}  // namespace

void SparseKernel::build_csc() { build_csc_arrays(m, row_ptr, col, col_ptr, row_idx, csc_perm); }
void LcnCorrection::build_csc() { build_csc_arrays(m, row_ptr, col, col_ptr, row_idx, csc_perm); }

NeighborPairs SparseKernel::pattern() const {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> raw;
    raw.reserve(nnz());
    for (std::size_t i = 0; i < n; ++i)
        for (std::uint32_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e)
            raw.emplace_back(static_cast<std::uint32_t>(i), col[e]);
    return NeighborPairs::from_pairs(n, m, std::move(raw));
}

SparseKernel build_sparse(const PointSet& p, const PointSet& q, const NeighborPairs& pairs,
                          CostKind kind, double lambda) {
    if (!(lambda > 0.0))
        throw InvalidArgument("build_sparse: lambda must be positive");
    if (pairs.n != p.n || pairs.m != q.n)
        throw DimensionError("build_sparse: pattern shape mismatch");
    SparseKernel s;
    s.n = p.n;
    s.m = q.n;
    s.row_ptr.assign(s.n + 1, 0);
    for (auto [i, j] : pairs.pairs) {
        (void)j;
        ++s.row_ptr[i + 1];
    }
    for (std::size_t i = 0; i < s.n; ++i) s.row_ptr[i + 1] += s.row_ptr[i];
    const std::size_t nnz = pairs.pairs.size();
    s.col.assign(nnz, 0);
    s.logvals.assign(nnz, 0.0);
    for (std::size_t e = 0; e < nnz; ++e) s.col[e] = pairs.pairs[e].second;

    const double inv = 1.0 / lambda;
#pragma omp parallel for schedule(static) if (s.n > 64)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(s.n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        for (std::uint32_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e)
            s.logvals[e] = 0.0 - cost_value(kind, p.point(i), q.point(s.col[e]), p.dim) * inv;
    }
    s.build_csc();
    return s;
}

LcnCorrection build_correction(const SparseKernel& sparse, const NystromFactors& factors) {
    if (sparse.n != factors.n || sparse.m != factors.m)
        throw DimensionError("build_correction: shape mismatch");
    LcnCorrection c;
    c.n = sparse.n;
    c.m = sparse.m;
    c.row_ptr = sparse.row_ptr;
    c.col = sparse.col;
    c.log_sp = sparse.logvals;
    c.delta.assign(sparse.nnz(), 0.0);
    c.nys_vals.assign(sparse.nnz(), 0.0);

    double max_abs = 0.0;
    bool overflow = false;
#pragma omp parallel for schedule(static) reduction(max : max_abs) reduction(|| : overflow) \
    if (c.n > 64)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(c.n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        for (std::uint32_t e = c.row_ptr[i]; e < c.row_ptr[i + 1]; ++e) {
            double exact = std::exp(c.log_sp[e]);
            if (std::isinf(exact)) {
                overflow = true;
                continue;
            }
            double nys = factors.entry(i, c.col[e]);
            c.nys_vals[e] = nys;
            c.delta[e] = exact - nys;
            max_abs = std::max(max_abs, std::abs(c.delta[e]));
        }
    }
    if (overflow)
        throw StabilizationError("build_correction: kernel value overflows linear space");
    c.max_abs_delta = max_abs;
    c.build_csc();
    return c;
}

std::vector<double> sparse_log_matvec(const SparseKernel& s, std::span<const double> log_t) {
    if (log_t.size() != s.m)
        throw DimensionError("sparse_log_matvec: vector length mismatch");
    std::vector<double> out(s.n, kNegInf);
#pragma omp parallel for schedule(static) if (s.n > 64)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(s.n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        double hi = kNegInf;
        for (std::uint32_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e)
            hi = std::max(hi, s.logvals[e] + log_t[s.col[e]]);
        if (hi == kNegInf) continue;  // empty row: kernel-0 row sum
        double acc = 0.0;
        for (std::uint32_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e)
            acc += std::exp(s.logvals[e] + log_t[s.col[e]] - hi);
        out[i] = hi + std::log(acc);
    }
    return out;
}

std::vector<double> sparse_log_matvec_t(const SparseKernel& s, std::span<const double> log_s) {
    if (log_s.size() != s.n)
        throw DimensionError("sparse_log_matvec_t: vector length mismatch");
    std::vector<double> out(s.m, kNegInf);
#pragma omp parallel for schedule(static) if (s.m > 64)
    for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(s.m); ++jj) {
        const std::size_t j = static_cast<std::size_t>(jj);
        double hi = kNegInf;
        for (std::uint32_t e = s.col_ptr[j]; e < s.col_ptr[j + 1]; ++e)
            hi = std::max(hi, s.logvals[s.csc_perm[e]] + log_s[s.row_idx[e]]);
        if (hi == kNegInf) continue;
        double acc = 0.0;
        for (std::uint32_t e = s.col_ptr[j]; e < s.col_ptr[j + 1]; ++e)
            acc += std::exp(s.logvals[s.csc_perm[e]] + log_s[s.row_idx[e]] - hi);
        out[j] = hi + std::log(acc);
    }
    return out;
}

std::vector<double> correction_matvec(const LcnCorrection& c, std::span<const double> t) {
    if (t.size() != c.m)
        throw DimensionError("correction_matvec: vector length mismatch");
    std::vector<double> out(c.n, 0.0);
#pragma omp parallel for schedule(static) if (c.n > 64)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(c.n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        double acc = 0.0;
        for (std::uint32_t e = c.row_ptr[i]; e < c.row_ptr[i + 1]; ++e)
            acc += c.delta[e] * t[c.col[e]];
        out[i] = acc;
    }
    return out;
}

std::vector<double> correction_matvec_t(const LcnCorrection& c, std::span<const double> s) {
    if (s.size() != c.n)
        throw DimensionError("correction_matvec_t: vector length mismatch");
    std::vector<double> out(c.m, 0.0);
#pragma omp parallel for schedule(static) if (c.m > 64)
    for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(c.m); ++jj) {
        const std::size_t j = static_cast<std::size_t>(jj);
        double acc = 0.0;
        for (std::uint32_t e = c.col_ptr[j]; e < c.col_ptr[j + 1]; ++e)
            acc += c.delta[c.csc_perm[e]] * s[c.row_idx[e]];
        out[j] = acc;
    }
    return out;
}

namespace {

SupportLevel support_of_csr(std::size_t n, std::size_t m, const std::vector<std::uint32_t>& row_ptr,
                            const std::vector<std::uint32_t>& col) {
    const std::size_t small = std::min(n, m);
    if (small == 0 || col.empty()) return SupportLevel::None;

    std::vector<std::uint32_t> ml, mr;
    std::size_t matched = max_bipartite_matching(n, m, row_ptr, col, ml, mr);
    if (matched < small) return SupportLevel::None;
    if (n != m) return SupportLevel::Support;  // total support is a square notion
    if (small > 64) return SupportLevel::Support;

    // Total support: every stored entry lies on some positive generalized
    // diagonal, i.e. forcing the edge still leaves a perfect matching on the
    // remaining (n-1)-sized subproblem.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::uint32_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
            const std::uint32_t j = col[e];
            std::vector<std::uint32_t> sub_ptr(n, 0);  // n-1 rows + 1
            std::vector<std::uint32_t> sub_col;
            std::size_t r = 0;
            for (std::size_t ii = 0; ii < n; ++ii) {
                if (ii == i) continue;
                sub_ptr[r] = static_cast<std::uint32_t>(sub_col.size());
                for (std::uint32_t ee = row_ptr[ii]; ee < row_ptr[ii + 1]; ++ee) {
                    std::uint32_t jj = col[ee];
                    if (jj == j) continue;
                    sub_col.push_back(jj < j ? jj : jj - 1);
                }
                ++r;
            }
            sub_ptr[n - 1] = static_cast<std::uint32_t>(sub_col.size());
            std::vector<std::uint32_t> sl, sr;
            if (max_bipartite_matching(n - 1, m - 1, sub_ptr, sub_col, sl, sr) < n - 1)
                return SupportLevel::Support;
        }
    }
    return SupportLevel::TotalSupport;
}

}  // namespace

SupportLevel has_support(const NeighborPairs& pattern) {
    std::vector<std::uint32_t> row_ptr(pattern.n + 1, 0);
    for (auto [i, j] : pattern.pairs) {
        (void)j;
        ++row_ptr[i + 1];
    }
    for (std::size_t i = 0; i < pattern.n; ++i) row_ptr[i + 1] += row_ptr[i];
    std::vector<std::uint32_t> col(pattern.pairs.size());
    for (std::size_t e = 0; e < pattern.pairs.size(); ++e) col[e] = pattern.pairs[e].second;
    return support_of_csr(pattern.n, pattern.m, row_ptr, col);
}

SupportLevel has_support(const SparseKernel& s) {
    return support_of_csr(s.n, s.m, s.row_ptr, s.col);
}

void write_sparse_csv(std::ostream& out, const SparseKernel& s) {
    out << "i,j,logK\n";
    out.precision(17);
    for (std::size_t i = 0; i < s.n; ++i)
        for (std::uint32_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e)
            out << i << ',' << s.col[e] << ',' << s.logvals[e] << '\n';
}

}  // namespace lcn
