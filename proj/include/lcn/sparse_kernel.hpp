#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "lcn/geometry.hpp"
#include "lcn/lsh.hpp"

namespace lcn {

struct NystromFactors;

// Kernel values at the neighbor-pair pattern, log-space, CSR plus a CSC view
// for transposed products. Entries not stored are kernel-0 (cost +inf).
struct SparseKernel {
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<std::uint32_t> row_ptr;  // n+1
    std::vector<std::uint32_t> col;      // nnz, sorted within each row
    std::vector<double> logvals;         // nnz

    std::vector<std::uint32_t> col_ptr;   // m+1
    std::vector<std::uint32_t> row_idx;   // nnz in CSC order
    std::vector<std::uint32_t> csc_perm;  // CSC position -> CSR position

    std::size_t nnz() const { return col.size(); }
    void build_csc();
    NeighborPairs pattern() const;
};

SparseKernel build_sparse(const PointSet& p, const PointSet& q, const NeighborPairs& pairs,
                          CostKind kind, double lambda);

// K^sp_Δ = K^sp - K^sp_Nys at the sparse pattern, stored in linear space:
// the difference can be negative and catastrophically small, which is
// surfaced through max_abs_delta relative to the kernel scale.
struct LcnCorrection {
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<std::uint32_t> row_ptr;
    std::vector<std::uint32_t> col;
    std::vector<double> delta;         // exp(logvals) - K_Nys at each stored pair
    std::vector<double> log_sp;        // log K^sp at each stored pair
    std::vector<double> nys_vals;      // K^sp_Nys at each stored pair (linear)
    double max_abs_delta = 0.0;

    std::vector<std::uint32_t> col_ptr;
    std::vector<std::uint32_t> row_idx;
    std::vector<std::uint32_t> csc_perm;
    void build_csc();
};

LcnCorrection build_correction(const SparseKernel& sparse, const NystromFactors& factors);

// Row-wise log-sum-exp over stored entries; an empty row yields -inf, the
// kernel-0 row sum (reported by the caller, not fatal here).
std::vector<double> sparse_log_matvec(const SparseKernel& s, std::span<const double> log_t);
std::vector<double> sparse_log_matvec_t(const SparseKernel& s, std::span<const double> log_s);

// Linear-space correction products.
std::vector<double> correction_matvec(const LcnCorrection& c, std::span<const double> t);
std::vector<double> correction_matvec_t(const LcnCorrection& c, std::span<const double> s);

enum class SupportLevel {
    None,
    Support,       // a strictly positive generalized diagonal exists
    TotalSupport,  // additionally every stored entry lies on one
};

// Checks the pattern for (total) support. Square patterns follow the strict
// definition; rectangular ones are checked for a perfect matching on the
// smaller side and report at most Support. The total-support probe removes
// one edge at a time and is offered only for min(n, m) <= 64.
SupportLevel has_support(const NeighborPairs& pattern);
SupportLevel has_support(const SparseKernel& s);

// Debug export, `i,j,logK` rows.
void write_sparse_csv(std::ostream& out, const SparseKernel& s);

}  // namespace lcn
