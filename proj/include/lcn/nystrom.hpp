#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lcn/geometry.hpp"
#include "lcn/matrix.hpp"

namespace lcn {

enum class LandmarkMethod {
    KMeans,            // Lloyd centroids of X_p ∪ X_q (need not be data points)
    KMeansPPSampling,  // data points sampled by the k-means++ D² rule
};

const char* landmark_method_name(LandmarkMethod method);
LandmarkMethod landmark_method_from_name(const std::string& name);

struct LandmarkSet {
    PointSet points;  // l x d
    LandmarkMethod method = LandmarkMethod::KMeans;
    std::uint64_t seed = 0;
};

LandmarkSet select_landmarks(const PointSet& p, const PointSet& q, std::size_t l,
                             LandmarkMethod method, std::uint64_t seed);

// K_Nys = U A^{-1} V with U_ij = k(x_pi, x_lj), A_ij = k(x_li, x_lj),
// V_ij = k(x_li, x_qj). W = A^{-1} V is precomputed; the inverse is taken at
// extended precision with escalating ridge jitter on failure.
struct NystromFactors {
    std::size_t n = 0, m = 0, l = 0;
    DenseMatrix u;  // n x l, kernel values in (0, 1] for metric costs
    DenseMatrix w;  // l x m
    double cond_estimate = 0.0;
    double lambda = 1.0;
    CostKind kind = CostKind::Euclidean;

    double entry(std::size_t i, std::size_t j) const;  // (U W)_ij
};

NystromFactors build_factors(const PointSet& p, const PointSet& q, const LandmarkSet& landmarks,
                             CostKind kind, double lambda);

// U (W t); cost O((n+m) l). Raises the negative-kernel diagnostic when a
// strictly positive t produces a nonpositive entry.
std::vector<double> nys_matvec(const NystromFactors& f, std::span<const double> t);
// W^T (U^T s), same diagnostic.
std::vector<double> nys_matvec_t(const NystromFactors& f, std::span<const double> s);

}  // namespace lcn
