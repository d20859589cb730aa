#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lcn/matrix.hpp"

namespace lcn {

// Ordered collection of d-dimensional points, row-major.
struct PointSet {
    std::vector<double> coords;  // n * dim
    std::size_t n = 0;
    std::size_t dim = 0;
    std::string id;

    PointSet() = default;
    PointSet(std::size_t n_, std::size_t dim_, std::string id_ = {})
        : coords(n_ * dim_, 0.0), n(n_), dim(dim_), id(std::move(id_)) {}

    double* point(std::size_t i) { return coords.data() + i * dim; }
    const double* point(std::size_t i) const { return coords.data() + i * dim; }

    // Throws InvalidArgument on non-finite coordinates or empty set.
    void validate() const;
};

// Concatenates two point sets of equal dimension (used for LSH and landmark
// selection on X_p ∪ X_q).
PointSet union_points(const PointSet& p, const PointSet& q);

enum class CostKind {
    Euclidean,      // ||x - y||_2
    NegativeDot,    // -<x, y>; the kernel becomes e^{<x,y>/lambda}
    CosineDerived,  // sqrt(1 - <x,y>/(||x|| ||y||)), nonzero vectors only
};

const char* cost_kind_name(CostKind kind);
CostKind cost_kind_from_name(const std::string& name);

double cost_value(CostKind kind, const double* x, const double* y, std::size_t dim);

// Source/sink distribution pair. All entries strictly positive; zero-mass
// points must be removed upstream.
struct Marginals {
    std::vector<double> p;
    std::vector<double> q;

    static Marginals uniform(std::size_t n, std::size_t m);
    double total_p() const;
    double total_q() const;
    // `balanced` additionally requires |Σp - Σq| <= 1e-12 relative.
    void validate(bool balanced) const;
};

struct DenseCost {
    DenseMatrix c;  // n x m
    double lambda = 1.0;
};

// Stores log K with K_ij = e^{-C_ij/lambda}. +inf cost maps to log K = -inf.
struct DenseKernel {
    DenseMatrix logk;
};

DenseCost build_cost(const PointSet& p, const PointSet& q, CostKind kind, double lambda = 1.0);
DenseKernel build_kernel(const DenseCost& cost);

}  // namespace lcn
