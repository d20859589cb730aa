#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcn/geometry.hpp"
#include "lcn/nystrom.hpp"
#include "lcn/sparse_kernel.hpp"

namespace lcn {

// Per-point deletion kernels for the bipartite-matching extension of the cost
// matrix: del_p[i] = e^{-c_{i,ε}/λ}, del_q[j] = e^{-c_{ε,j}/λ}. Entries may be
// zero (deletion forbidden). The extended operator has shape (n+m) x (m+n).
struct BpExtension {
    std::vector<double> del_p;
    std::vector<double> del_q;

    static BpExtension from_costs(std::span<const double> cost_p, std::span<const double> cost_q,
                                  double lambda);
};

// Similarity-matrix operator with four realizations. All variants expose the
// log-domain products log(K e^{log_t}) and log(K^T e^{log_s}); only the
// log-sum-exp reductions and the low-rank middle run in linear space.
class KernelOperator {
  public:
    enum class Kind { Dense, Sparse, Nystrom, Lcn };

    static KernelOperator dense(DenseKernel kernel, double lambda);
    static KernelOperator sparse(SparseKernel kernel, double lambda);
    static KernelOperator nystrom(NystromFactors factors);
    static KernelOperator lcn(NystromFactors factors, LcnCorrection correction);

    KernelOperator with_bp(BpExtension bp) const;

    Kind kind() const { return kind_; }
    bool has_bp() const { return bp_ != nullptr; }
    double lambda() const { return lambda_; }
    std::string name() const;

    std::size_t base_rows() const { return n_; }
    std::size_t base_cols() const { return m_; }
    std::size_t rows() const { return has_bp() ? n_ + m_ : n_; }
    std::size_t cols() const { return has_bp() ? m_ + n_ : m_; }

    std::vector<double> log_matvec(std::span<const double> log_t) const;
    std::vector<double> log_matvec_t(std::span<const double> log_s) const;

    // Smallest log K over positive entries of the (extended) matrix; used by
    // the iteration bound. Densifies the low-rank variants, desk scale only.
    double min_positive_log_entry() const;

    // Base-block kernel value at (i, j), linear space. Desk scale only.
    double entry(std::size_t i, std::size_t j) const;
    DenseMatrix densify() const;

    const DenseKernel* dense_kernel() const { return dense_.get(); }
    const SparseKernel* sparse_kernel() const { return sparse_.get(); }
    const NystromFactors* factors() const { return factors_.get(); }
    const LcnCorrection* correction() const { return correction_.get(); }
    const BpExtension* bp() const { return bp_.get(); }
    std::shared_ptr<const SparseKernel> sparse_kernel_ptr() const { return sparse_; }
    std::shared_ptr<const LcnCorrection> correction_ptr() const { return correction_; }

  private:
    KernelOperator() = default;
    std::vector<double> base_log_matvec(std::span<const double> log_t) const;
    std::vector<double> base_log_matvec_t(std::span<const double> log_s) const;

    Kind kind_ = Kind::Dense;
    std::size_t n_ = 0, m_ = 0;
    double lambda_ = 1.0;
    std::shared_ptr<const DenseKernel> dense_;
    std::shared_ptr<const SparseKernel> sparse_;
    std::shared_ptr<const NystromFactors> factors_;
    std::shared_ptr<const LcnCorrection> correction_;
    std::shared_ptr<const BpExtension> bp_;
};

const char* kind_name(KernelOperator::Kind kind);

}  // namespace lcn
