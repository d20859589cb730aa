#include "lcn/nystrom.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <random>

#include "lcn/error.hpp"
#include "lcn/kmeans.hpp"

namespace lcn {

const char* landmark_method_name(LandmarkMethod method) {
    switch (method) {
        case LandmarkMethod::KMeans: return "kmeans";
        case LandmarkMethod::KMeansPPSampling: return "kmeans++-sampling";
    }
    return "?";
}

LandmarkMethod landmark_method_from_name(const std::string& name) {
    if (name == "kmeans") return LandmarkMethod::KMeans;
    if (name == "kmeans++-sampling" || name == "kmeanspp") return LandmarkMethod::KMeansPPSampling;
    throw InvalidArgument("unknown landmark method '" + name + "'");
}

LandmarkSet select_landmarks(const PointSet& p, const PointSet& q, std::size_t l,
                             LandmarkMethod method, std::uint64_t seed) {
    PointSet all = union_points(p, q);
    if (l < 1 || l > all.n)
        throw InvalidArgument("select_landmarks: l out of range");
    LandmarkSet out;
    out.method = method;
    out.seed = seed;
    if (method == LandmarkMethod::KMeans) {
        KmeansResult km = lloyd(all.coords.data(), all.n, all.dim, l, 10, seed);
        out.points = PointSet(l, all.dim, "landmarks");
        out.points.coords = std::move(km.centroids.data);
    } else {
        std::mt19937_64 rng(seed);
        auto idx = kmeans_pp_indices(all.coords.data(), all.n, all.dim, l, rng);
        out.points = PointSet(l, all.dim, "landmarks");
        for (std::size_t c = 0; c < l; ++c)
            std::copy(all.point(idx[c]), all.point(idx[c]) + all.dim, out.points.point(c));
    }
    return out;
}

namespace {

// Kernel block k(X, Z) in linear space.
DenseMatrix kernel_block(const PointSet& x, const PointSet& z, CostKind kind, double lambda) {
    DenseMatrix out(x.n, z.n);
    const double inv = 1.0 / lambda;
#pragma omp parallel for schedule(static) if (x.n > 32)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(x.n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        double* row = out.row(i);
        for (std::size_t j = 0; j < z.n; ++j)
            row[j] = std::exp(-cost_value(kind, x.point(i), z.point(j), x.dim) * inv);
    }
    return out;
}

}  // namespace

NystromFactors build_factors(const PointSet& p, const PointSet& q, const LandmarkSet& landmarks,
                             CostKind kind, double lambda) {
    if (!(lambda > 0.0))
        throw InvalidArgument("build_factors: lambda must be positive");
    const PointSet& lm = landmarks.points;
    if (p.dim != q.dim || p.dim != lm.dim)
        throw DimensionError("build_factors: dimension mismatch");

    NystromFactors f;
    f.n = p.n;
    f.m = q.n;
    f.l = lm.n;
    f.lambda = lambda;
    f.kind = kind;
    f.u = kernel_block(p, lm, kind, lambda);
    DenseMatrix v = kernel_block(lm, q, kind, lambda);

    using MatX = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    const std::size_t l = f.l;
    MatX a(l, l);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < l; ++j)
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = static_cast<long double>(
                std::exp(-cost_value(kind, lm.point(i), lm.point(j), lm.dim) / lambda));
    MatX vx(l, f.m);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < f.m; ++j)
            vx(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v(i, j);

    long double trace = 0.0L;
    for (std::size_t i = 0; i < l; ++i) trace += a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    const long double jitter_unit = trace / static_cast<long double>(l);
    const long double v_scale = std::max<long double>(vx.cwiseAbs().maxCoeff(), 1e-300L);

    // The inverse cannot be computed in log-space; double (and extended)
    // precision with escalating diagonal jitter is what keeps it stable.
    for (double rel = 0.0; rel <= 1.1e-4; rel = (rel == 0.0 ? 1e-10 : rel * 10.0)) {
        MatX aj = a;
        for (std::size_t i = 0; i < l; ++i)
            aj(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += rel * jitter_unit;
        Eigen::LDLT<MatX> ldlt(aj);
        if (ldlt.info() != Eigen::Success) continue;
        MatX wx = ldlt.solve(vx);
        if (!wx.allFinite()) continue;
        long double resid = (aj * wx - vx).cwiseAbs().maxCoeff();
        if (resid > 1e-6L * v_scale) continue;

        f.w = DenseMatrix(l, f.m);
        for (std::size_t i = 0; i < l; ++i)
            for (std::size_t j = 0; j < f.m; ++j)
                f.w(i, j) = static_cast<double>(wx(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        long double rcond = ldlt.rcond();
        f.cond_estimate = rcond > 0.0L ? static_cast<double>(1.0L / rcond)
                                       : std::numeric_limits<double>::infinity();
        return f;
    }
    throw FactorizationError("build_factors: landmark kernel matrix numerically singular beyond jitter budget");
}

double NystromFactors::entry(std::size_t i, std::size_t j) const {
    const double* ui = u.row(i);
    double s = 0.0;
    for (std::size_t a = 0; a < l; ++a) s += ui[a] * w(a, j);
    return s;
}

std::vector<double> nys_matvec(const NystromFactors& f, std::span<const double> t) {
    if (t.size() != f.m)
        throw DimensionError("nys_matvec: vector length mismatch");
    bool positive_input = true;
    for (double v : t)
        if (!(v > 0.0)) positive_input = false;

    std::vector<double> mid(f.l, 0.0);
#pragma omp parallel for schedule(static) if (f.l > 16)
    for (std::ptrdiff_t aa = 0; aa < static_cast<std::ptrdiff_t>(f.l); ++aa) {
        const std::size_t a = static_cast<std::size_t>(aa);
        const double* row = f.w.row(a);
        double s = 0.0;
        for (std::size_t j = 0; j < f.m; ++j) s += row[j] * t[j];
        mid[a] = s;
    }
    std::vector<double> out(f.n, 0.0);
#pragma omp parallel for schedule(static) if (f.n > 64)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(f.n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const double* row = f.u.row(i);
        double s = 0.0;
        for (std::size_t a = 0; a < f.l; ++a) s += row[a] * mid[a];
        out[i] = s;
    }
    if (positive_input)
        for (double v : out)
            if (!(v > 0.0))
                throw NegativeKernelError("nystrom matvec produced a nonpositive entry");
    return out;
}

std::vector<double> nys_matvec_t(const NystromFactors& f, std::span<const double> s) {
    if (s.size() != f.n)
        throw DimensionError("nys_matvec_t: vector length mismatch");
    bool positive_input = true;
    for (double v : s)
        if (!(v > 0.0)) positive_input = false;

    std::vector<double> mid(f.l, 0.0);
#pragma omp parallel for schedule(static) if (f.l > 16)
    for (std::ptrdiff_t aa = 0; aa < static_cast<std::ptrdiff_t>(f.l); ++aa) {
        const std::size_t a = static_cast<std::size_t>(aa);
        double acc = 0.0;
        for (std::size_t i = 0; i < f.n; ++i) acc += f.u(i, a) * s[i];
        mid[a] = acc;
    }
    std::vector<double> out(f.m, 0.0);
#pragma omp parallel for schedule(static) if (f.m > 64)
    for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(f.m); ++jj) {
        const std::size_t j = static_cast<std::size_t>(jj);
        double acc = 0.0;
        for (std::size_t a = 0; a < f.l; ++a) acc += f.w(a, j) * mid[a];
        out[j] = acc;
    }
    if (positive_input)
        for (double v : out)
            if (!(v > 0.0))
                throw NegativeKernelError("nystrom transposed matvec produced a nonpositive entry");
    return out;
}

}  // namespace lcn
