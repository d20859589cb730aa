#include "lcn/geometry.hpp"

#include <cmath>
#include <limits>

#include "lcn/error.hpp"

namespace lcn {

void PointSet::validate() const {
    if (n == 0 || dim == 0)
        throw InvalidArgument("point set '" + id + "' is empty");
    if (coords.size() != n * dim)
        throw DimensionError("point set '" + id + "' has inconsistent storage");
    for (double v : coords)
        if (!std::isfinite(v))
            throw InvalidArgument("point set '" + id + "' has non-finite coordinates");
}

PointSet union_points(const PointSet& p, const PointSet& q) {
    if (p.dim != q.dim)
        throw DimensionError("union of point sets with different dimensions");
    PointSet u(p.n + q.n, p.dim, p.id + "+" + q.id);
    std::copy(p.coords.begin(), p.coords.end(), u.coords.begin());
    std::copy(q.coords.begin(), q.coords.end(), u.coords.begin() + static_cast<std::ptrdiff_t>(p.coords.size()));
    return u;
}

const char* cost_kind_name(CostKind kind) {
    switch (kind) {
        case CostKind::Euclidean: return "euclidean";
        case CostKind::NegativeDot: return "negative-dot";
        case CostKind::CosineDerived: return "cosine-derived";
    }
    return "?";
}

CostKind cost_kind_from_name(const std::string& name) {
    if (name == "euclidean") return CostKind::Euclidean;
    if (name == "negative-dot") return CostKind::NegativeDot;
    if (name == "cosine-derived") return CostKind::CosineDerived;
    throw InvalidArgument("unknown cost function '" + name + "'");
}

double cost_value(CostKind kind, const double* x, const double* y, std::size_t dim) {
    switch (kind) {
        case CostKind::Euclidean: {
            double s = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                double d = x[k] - y[k];
                s += d * d;
            }
            return std::sqrt(s);
        }
        case CostKind::NegativeDot: {
            double s = 0.0;
            for (std::size_t k = 0; k < dim; ++k) s += x[k] * y[k];
            return -s;
        }
        case CostKind::CosineDerived: {
            double dot = 0.0, nx = 0.0, ny = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                dot += x[k] * y[k];
                nx += x[k] * x[k];
                ny += y[k] * y[k];
            }
            if (nx == 0.0 || ny == 0.0)
                throw InvalidArgument("cosine-derived cost undefined for zero vectors");
            double c = dot / std::sqrt(nx * ny);
            if (c > 1.0) c = 1.0;
            if (c < -1.0) c = -1.0;
            return std::sqrt(1.0 - c);
        }
    }
    throw InvalidArgument("unknown cost kind");
}

Marginals Marginals::uniform(std::size_t n, std::size_t m) {
    Marginals marg;
    marg.p.assign(n, 1.0 / static_cast<double>(n));
    marg.q.assign(m, 1.0 / static_cast<double>(m));
    return marg;
}

double Marginals::total_p() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
}

double Marginals::total_q() const {
    double s = 0.0;
    for (double v : q) s += v;
    return s;
}

void Marginals::validate(bool balanced) const {
    if (p.empty() || q.empty())
        throw InvalidArgument("marginals must be non-empty");
    for (double v : p)
        if (!(v > 0.0) || !std::isfinite(v))
            throw InvalidArgument("marginal p has a non-positive or non-finite entry");
    for (double v : q)
        if (!(v > 0.0) || !std::isfinite(v))
            throw InvalidArgument("marginal q has a non-positive or non-finite entry");
    if (balanced) {
        double sp = total_p(), sq = total_q();
        if (std::abs(sp - sq) > 1e-12 * std::max(sp, sq))
            throw InvalidArgument("marginals are unbalanced; balanced OT requires equal mass");
    }
}

DenseCost build_cost(const PointSet& p, const PointSet& q, CostKind kind, double lambda) {
    p.validate();
    q.validate();
    if (p.dim != q.dim)
        throw DimensionError("build_cost: dimension mismatch");
    if (!(lambda > 0.0))
        throw InvalidArgument("build_cost: lambda must be positive");
    DenseCost cost;
    cost.lambda = lambda;
    cost.c = DenseMatrix(p.n, q.n);
    for (std::size_t i = 0; i < p.n; ++i) {
        double* out = cost.c.row(i);
        const double* xi = p.point(i);
        for (std::size_t j = 0; j < q.n; ++j)
            out[j] = cost_value(kind, xi, q.point(j), p.dim);
    }
    return cost;
}

DenseKernel build_kernel(const DenseCost& cost) {
    if (!(cost.lambda > 0.0))
        throw InvalidArgument("build_kernel: lambda must be positive");
    DenseKernel kernel;
    kernel.logk = DenseMatrix(cost.c.rows, cost.c.cols);
    const double inv = 1.0 / cost.lambda;
    for (std::size_t idx = 0; idx < cost.c.data.size(); ++idx) {
        double c = cost.c.data[idx];
        kernel.logk.data[idx] =
            std::isinf(c) ? -std::numeric_limits<double>::infinity() : 0.0 - c * inv;
    }
    return kernel;
}

}  // namespace lcn
