// Compares the OpenMP log-domain engine against itself at one thread and
// against the serial linear-space reference on dense problems. The reference
// multiplies pre-exponentiated kernels, so it is cheap per iteration but
// underflows outside moderate C/lambda; the log-domain engine pays exp calls
// per sweep for unconditional stability.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lcn/generators.hpp"
#include "lcn/reference.hpp"
#include "lcn/sinkhorn.hpp"

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::size_t> sizes{256, 512, 1024};
    if (argc > 1) {
        sizes.clear();
        for (int a = 1; a < argc; ++a) sizes.push_back(static_cast<std::size_t>(std::atol(argv[a])));
    }
    const double lambda = 0.5;
    const double tol = 1e-8;
    const int max_iters = 10000;

    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::printf("dense Sinkhorn, lambda=%.2f, tol=%.0e, %d threads\n", lambda, tol, threads);
    std::printf("%8s %12s %12s %9s %12s %8s %12s\n", "n", "OT 1T (ms)", "OT NT (ms)", "speedup",
                "ref OT (ms)", "iters", "plan |diff|");

    for (std::size_t n : sizes) {
        lcn::PointSet p = lcn::sample_uniform_ball(n, 8, 2 * n + 1, "p");
        lcn::PointSet q = lcn::sample_uniform_ball(n, 8, 2 * n + 2, "q");
        lcn::Marginals marg = lcn::Marginals::uniform(n, n);
        lcn::KernelOperator op = lcn::KernelOperator::dense(
            lcn::build_kernel(lcn::build_cost(p, q, lcn::CostKind::Euclidean, lambda)), lambda);

        lcn::SinkhornOptions opts;
        opts.tol = tol;
        opts.max_iters = max_iters;

#ifdef _OPENMP
        omp_set_num_threads(1);
#endif
        auto t0 = std::chrono::steady_clock::now();
        lcn::SinkhornResult serial_run = lcn::sinkhorn(op, marg, opts);
        double engine_1t = ms_since(t0);
#ifdef _OPENMP
        omp_set_num_threads(threads);
#endif
        auto t1 = std::chrono::steady_clock::now();
        lcn::SinkhornResult res = lcn::sinkhorn(op, marg, opts);
        double engine_nt = ms_since(t1);

        std::vector<double> cost =
            lcn::ref::cost_matrix(p.coords, n, q.coords, n, 8, lcn::ref::Cost::Euclidean);
        auto t2 = std::chrono::steady_clock::now();
        lcn::ref::Solution sol = lcn::ref::solve(cost, n, n, marg.p, marg.q, lambda, tol, max_iters);
        double serial_ot = ms_since(t2);

        double max_diff = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                max_diff = std::max(
                    max_diff, std::abs((*res.plan.dense)(i, j) - sol.plan[i * n + j]));
        (void)serial_run;

        std::printf("%8zu %12.2f %12.2f %8.2fx %12.2f %8d %12.3e\n", n, engine_1t, engine_nt,
                    engine_1t / engine_nt, serial_ot, res.iters, max_diff);
    }
    return 0;
}
