#include "lcn/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace lcn::ref {

std::vector<double> cost_matrix(const std::vector<double>& coords_p, std::size_t n,
                                const std::vector<double>& coords_q, std::size_t m, std::size_t d,
                                Cost kind) {
    std::vector<double> c(n * m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double* x = coords_p.data() + i * d;
            const double* y = coords_q.data() + j * d;
            double v = 0.0;
            if (kind == Cost::Euclidean) {
                for (std::size_t k = 0; k < d; ++k) v += (x[k] - y[k]) * (x[k] - y[k]);
                v = std::sqrt(v);
            } else if (kind == Cost::NegativeDot) {
                for (std::size_t k = 0; k < d; ++k) v += x[k] * y[k];
                v = -v;
            } else {
                double dot = 0.0, nx = 0.0, ny = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    dot += x[k] * y[k];
                    nx += x[k] * x[k];
                    ny += y[k] * y[k];
                }
                double cosv = dot / std::sqrt(nx * ny);
                if (cosv > 1.0) cosv = 1.0;
                if (cosv < -1.0) cosv = -1.0;
                v = std::sqrt(1.0 - cosv);
            }
            c[i * m + j] = v;
        }
    }
    return c;
}

Solution solve(const std::vector<double>& cost, std::size_t n, std::size_t m,
               const std::vector<double>& p, const std::vector<double>& q, double lambda,
               double tol, int max_iters) {
    if (cost.size() != n * m || p.size() != n || q.size() != m)
        throw std::invalid_argument("reference solve: shape mismatch");
    if (!(lambda > 0.0))
        throw std::invalid_argument("reference solve: lambda must be positive");

    std::vector<double> kernel(n * m);
    for (std::size_t idx = 0; idx < kernel.size(); ++idx)
        kernel[idx] = std::exp(-cost[idx] / lambda);

    std::vector<double> s(n, 1.0), t(m, 1.0);
    Solution sol;
    sol.n = n;
    sol.m = m;

    auto marginal_error = [&]() {
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < m; ++j) row += s[i] * kernel[i * m + j] * t[j];
            err += std::abs(row - p[i]);
        }
        for (std::size_t j = 0; j < m; ++j) {
            double col = 0.0;
            for (std::size_t i = 0; i < n; ++i) col += s[i] * kernel[i * m + j] * t[j];
            err += std::abs(col - q[j]);
        }
        return err;
    };

    for (int it = 1; it <= max_iters; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double kt = 0.0;
            for (std::size_t j = 0; j < m; ++j) kt += kernel[i * m + j] * t[j];
            s[i] = p[i] / kt;
        }
        for (std::size_t j = 0; j < m; ++j) {
            double ks = 0.0;
            for (std::size_t i = 0; i < n; ++i) ks += kernel[i * m + j] * s[i];
            t[j] = q[j] / ks;
        }
        sol.iters = it;
        sol.marginal_err = marginal_error();
        if (sol.marginal_err <= tol) {
            sol.converged = true;
            break;
        }
    }

    sol.plan.assign(n * m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) sol.plan[i * m + j] = s[i] * kernel[i * m + j] * t[j];

    double transport = 0.0, entropy = 0.0;
    for (std::size_t idx = 0; idx < sol.plan.size(); ++idx) {
        double v = sol.plan[idx];
        if (v <= 0.0) continue;
        transport += v * cost[idx];
        entropy -= v * std::log(v);
    }
    sol.distance = transport - lambda * entropy;
    return sol;
}

}  // namespace lcn::ref
