#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace lcn::ref {

// Serial, linear-space textbook Sinkhorn. Written independently of the
// log-domain engine so it can serve as its oracle; also the baseline for the
// parallel-vs-serial benchmark. Do not "optimize" it into sharing code with
// the main library.

enum class Cost { Euclidean, NegativeDot, CosineDerived };

// Row-major n x m cost matrix from raw coordinates.
std::vector<double> cost_matrix(const std::vector<double>& coords_p, std::size_t n,
                                const std::vector<double>& coords_q, std::size_t m, std::size_t d,
                                Cost kind);

struct Solution {
    std::vector<double> plan;  // row-major n x m
    std::size_t n = 0, m = 0;
    double distance = 0.0;  // <P,C> - lambda * H(P)
    int iters = 0;
    bool converged = false;
    double marginal_err = 0.0;  // ||P1-p||_1 + ||P^T1-q||_1
};

Solution solve(const std::vector<double>& cost, std::size_t n, std::size_t m,
               const std::vector<double>& p, const std::vector<double>& q, double lambda,
               double tol, int max_iters);

}  // namespace lcn::ref
