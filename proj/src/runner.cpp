#include "lcn/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lcn/error.hpp"
#include "lcn/generators.hpp"
#include "lcn/io.hpp"
#include "lcn/operator.hpp"
#include "lcn/sinkhorn.hpp"

namespace lcn {

namespace {

using nlohmann::json;

const char* problem_kind_name(ProblemSpec::Kind kind) {
    switch (kind) {
        case ProblemSpec::Kind::UniformBall: return "uniform-ball";
        case ProblemSpec::Kind::Clustered: return "clustered";
        case ProblemSpec::Kind::Files: return "file";
    }
    return "?";
}

ProblemSpec::Kind problem_kind_from_name(const std::string& name) {
    if (name == "uniform-ball") return ProblemSpec::Kind::UniformBall;
    if (name == "clustered") return ProblemSpec::Kind::Clustered;
    if (name == "file") return ProblemSpec::Kind::Files;
    throw InvalidArgument("unknown problem generator '" + name + "'");
}

}  // namespace

json config_to_json(const RunConfig& config) {
    json problem;
    problem["generator"] = problem_kind_name(config.problem.kind);
    switch (config.problem.kind) {
        case ProblemSpec::Kind::UniformBall:
            problem["n"] = config.problem.n;
            problem["m"] = config.problem.m;
            problem["d"] = config.problem.d;
            break;
        case ProblemSpec::Kind::Clustered:
            problem["n"] = config.problem.n;
            problem["d"] = config.problem.d;
            problem["c"] = config.problem.c;
            problem["D"] = config.problem.D;
            problem["r"] = config.problem.r;
            break;
        case ProblemSpec::Kind::Files:
            problem["p"] = config.problem.path_p;
            problem["q"] = config.problem.path_q;
            break;
    }
    json j;
    j["problem"] = problem;
    j["variants"] = config.variants;
    j["cost"] = cost_kind_name(config.cost);
    j["lambda"] = config.lambda;
    j["budget"] = {{"neighbors", config.neighbors}, {"landmarks", config.landmarks}};
    j["lsh"] = {{"scheme", lsh_scheme_name(config.lsh.scheme)},
                {"bands", config.lsh.bands},
                {"rows-per-band", config.lsh.rows_per_band},
                {"buckets-per-fn", config.lsh.buckets_per_fn},
                {"kmeans-iters", config.lsh.kmeans_iters},
                {"branching", config.lsh.branching}};
    j["bp"] = {{"enabled", config.bp}, {"deletion-cost", config.deletion_cost}};
    j["landmark-method"] = landmark_method_name(config.landmark_method);
    j["heads"] = config.heads;
    j["tol"] = config.tol;
    j["max-iters"] = config.max_iters;
    j["seeds"] = config.seeds;
    j["output"] = config.output;
    j["strict-deterministic"] = config.strict_deterministic;
    return j;
}

RunConfig config_from_json(const json& j) {
    RunConfig config;
    const json& problem = j.at("problem");
    config.problem.kind = problem_kind_from_name(problem.at("generator").get<std::string>());
    switch (config.problem.kind) {
        case ProblemSpec::Kind::UniformBall:
            config.problem.n = problem.at("n").get<std::size_t>();
            config.problem.m = problem.value("m", std::size_t{0});
            config.problem.d = problem.at("d").get<std::size_t>();
            break;
        case ProblemSpec::Kind::Clustered:
            config.problem.n = problem.at("n").get<std::size_t>();
            config.problem.d = problem.at("d").get<std::size_t>();
            config.problem.c = problem.at("c").get<std::size_t>();
            config.problem.D = problem.at("D").get<double>();
            config.problem.r = problem.at("r").get<double>();
            break;
        case ProblemSpec::Kind::Files:
            config.problem.path_p = problem.at("p").get<std::string>();
            config.problem.path_q = problem.at("q").get<std::string>();
            break;
    }
    if (j.contains("variants"))
        config.variants = j.at("variants").get<std::vector<std::string>>();
    if (j.contains("cost")) config.cost = cost_kind_from_name(j.at("cost").get<std::string>());
    config.lambda = j.value("lambda", 0.05);
    if (j.contains("budget")) {
        config.neighbors = j.at("budget").value("neighbors", std::size_t{20});
        config.landmarks = j.at("budget").value("landmarks", std::size_t{20});
    }
    if (j.contains("lsh")) {
        const json& lsh = j.at("lsh");
        if (lsh.contains("scheme"))
            config.lsh.scheme = lsh_scheme_from_name(lsh.at("scheme").get<std::string>());
        config.lsh.bands = lsh.value("bands", 1);
        config.lsh.rows_per_band = lsh.value("rows-per-band", 1);
        config.lsh.buckets_per_fn = lsh.value("buckets-per-fn", 0);
        config.lsh.kmeans_iters = lsh.value("kmeans-iters", 10);
        config.lsh.branching = lsh.value("branching", 2);
    }
    if (j.contains("bp")) {
        config.bp = j.at("bp").value("enabled", false);
        config.deletion_cost = j.at("bp").value("deletion-cost", 0.0);
    }
    if (j.contains("landmark-method"))
        config.landmark_method =
            landmark_method_from_name(j.at("landmark-method").get<std::string>());
    config.heads = j.value("heads", 1);
    config.tol = j.value("tol", -1.0);
    config.max_iters = j.value("max-iters", 500);
    if (j.contains("seeds")) config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    config.output = j.value("output", std::string{});
    config.strict_deterministic = j.value("strict-deterministic", false);
    return config;
}

json record_to_json(const RunRecord& record) {
    json j;
    j["variant"] = record.variant;
    j["seed"] = record.seed;
    j["n"] = record.row.n;
    j["m"] = record.row.m;
    j["lambda"] = record.row.lambda;
    j["budget"] = record.row.budget;
    j["distance"] = record.distance;
    j["converged"] = record.converged;
    j["iters"] = record.row.iters;
    j["marginal-err"] = record.marginal_err;
    if (record.row.rel_err_d) j["rel-err-d"] = *record.row.rel_err_d;
    if (record.row.pcc) j["pcc"] = *record.row.pcc;
    if (record.row.iou) j["iou"] = *record.row.iou;
    if (record.row.ms_kernel) j["ms-kernel"] = *record.row.ms_kernel;
    if (record.row.ms_ot) j["ms-ot"] = *record.row.ms_ot;
    if (!record.error.empty()) j["error"] = record.error;
    if (!record.head_distances.empty()) j["head-distances"] = record.head_distances;
    return j;
}

namespace {

struct Problem {
    PointSet p, q;
    Marginals marg;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed ^ (salt * 0x9e3779b97f4a7c15ull);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

Problem make_problem(const RunConfig& config, std::uint64_t seed) {
    Problem prob;
    const ProblemSpec& spec = config.problem;
    switch (spec.kind) {
        case ProblemSpec::Kind::UniformBall: {
            std::size_t m = spec.m == 0 ? spec.n : spec.m;
            prob.p = sample_uniform_ball(spec.n, spec.d, mix_seed(seed, 1), "p");
            prob.q = sample_uniform_ball(m, spec.d, mix_seed(seed, 2), "q");
            break;
        }
        case ProblemSpec::Kind::Clustered: {
            ClusteredProblem cp = sample_clustered(spec.n, spec.d, spec.c, spec.D, spec.r, seed);
            prob.p = std::move(cp.p);
            prob.q = std::move(cp.q);
            break;
        }
        case ProblemSpec::Kind::Files:
            prob.p = read_points_file(spec.path_p);
            prob.q = read_points_file(spec.path_q);
            break;
    }
    prob.marg = Marginals::uniform(prob.p.n, prob.q.n);
    return prob;
}

int lsh_bucket_count(const RunConfig& config, std::size_t n, std::size_t m,
                     std::size_t neighbors) {
    if (config.lsh.buckets_per_fn > 0) return config.lsh.buckets_per_fn;
    // b^r = min(n, m) / β picks the expected row degree β.
    double target = static_cast<double>(std::min(n, m)) /
                    static_cast<double>(std::max<std::size_t>(1, neighbors));
    double per_fn = std::pow(std::max(target, 2.0), 1.0 / config.lsh.rows_per_band);
    int b = static_cast<int>(std::llround(per_fn));
    if (config.lsh.scheme == LshScheme::CrossPolytope && b % 2 != 0) ++b;
    return std::max(b, 2);
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

struct SeedContext {
    Problem problem;
    std::optional<SinkhornResult> reference;
    std::optional<DenseMatrix> reference_plan;
};

RunRecord run_one(const RunConfig& config, const std::string& variant, std::uint64_t seed,
                  const SeedContext& ctx) {
    RunRecord record;
    record.variant = variant;
    record.seed = seed;
    const Problem& prob = ctx.problem;
    record.row.variant = variant;
    record.row.n = prob.p.n;
    record.row.m = prob.q.n;
    record.row.lambda = config.lambda;
    if (variant == "sparse")
        record.row.budget = config.neighbors;
    else if (variant == "nystrom")
        record.row.budget = config.landmarks;
    else if (variant == "lcn")
        record.row.budget = config.neighbors + config.landmarks;

    try {
        auto t0 = std::chrono::steady_clock::now();
        std::optional<KernelOperator> op;
        if (variant == "full") {
            op = KernelOperator::dense(
                build_kernel(build_cost(prob.p, prob.q, config.cost, config.lambda)),
                config.lambda);
        } else if (variant == "sparse" || variant == "lcn") {
            LshConfig lsh = config.lsh;
            lsh.seed = mix_seed(seed, 3);
            lsh.buckets_per_fn = lsh_bucket_count(config, prob.p.n, prob.q.n, config.neighbors);
            NeighborPairs pairs = lsh_neighbor_pairs(prob.p, prob.q, lsh);
            SparseKernel sparse = build_sparse(prob.p, prob.q, pairs, config.cost, config.lambda);
            if (variant == "sparse") {
                op = KernelOperator::sparse(std::move(sparse), config.lambda);
            } else {
                LandmarkSet lm = select_landmarks(prob.p, prob.q,
                                                  std::max<std::size_t>(1, config.landmarks),
                                                  config.landmark_method, mix_seed(seed, 4));
                NystromFactors factors =
                    build_factors(prob.p, prob.q, lm, config.cost, config.lambda);
                LcnCorrection corr = build_correction(sparse, factors);
                op = KernelOperator::lcn(std::move(factors), std::move(corr));
            }
        } else if (variant == "nystrom") {
            LandmarkSet lm =
                select_landmarks(prob.p, prob.q, std::max<std::size_t>(1, config.landmarks),
                                 config.landmark_method, mix_seed(seed, 4));
            op = KernelOperator::nystrom(
                build_factors(prob.p, prob.q, lm, config.cost, config.lambda));
        } else {
            throw InvalidArgument("unknown variant '" + variant + "'");
        }
        if (config.bp) {
            std::vector<double> cp(prob.p.n, config.deletion_cost);
            std::vector<double> cq(prob.q.n, config.deletion_cost);
            op = op->with_bp(BpExtension::from_costs(cp, cq, config.lambda));
        }
        double ms_kernel = elapsed_ms(t0);

        SinkhornOptions opts;
        opts.tol = config.tol;
        opts.max_iters = config.max_iters;
        auto t1 = std::chrono::steady_clock::now();
        SinkhornResult res;
        if (config.heads > 1 && variant == "full") {
            MultiHeadConfig mh{config.heads, config.lambda};
            DenseCost cost = build_cost(prob.p, prob.q, config.cost, config.lambda);
            for (const HeadOutcome& head : multihead(cost, prob.marg, mh, opts)) {
                if (!head.error.empty())
                    throw Error("head λ=" + std::to_string(head.lambda) + ": " + head.error);
                record.head_distances.push_back(head.distance);
            }
        }
        res = sinkhorn(*op, prob.marg, opts);
        double ms_ot = elapsed_ms(t1);

        record.distance = res.distance;
        record.converged = res.converged;
        record.marginal_err = res.marginal_err_final;
        record.row.iters = res.iters;
        if (!config.strict_deterministic) {
            record.row.ms_kernel = ms_kernel;
            record.row.ms_ot = ms_ot;
        }
        if (ctx.reference && !config.bp) {
            record.row.rel_err_d = std::abs(res.distance - ctx.reference->distance) /
                                   std::abs(ctx.reference->distance);
            try {
                DenseMatrix approx = densify_plan(res.plan);
                PlanComparison cmp = compare_plans(*ctx.reference_plan, approx,
                                                   ctx.reference->distance, res.distance);
                record.row.pcc = cmp.pcc;
                record.row.iou = cmp.iou;
            } catch (const PccUndefinedError&) {
                // Degenerate (constant) plans: distance metrics only.
            }
        }
    } catch (const std::exception& e) {
        record.error = std::string(e.what()) + " [variant=" + variant +
                       " seed=" + std::to_string(seed) + "]";
    }
    return record;
}

std::size_t pool_size(const RunConfig& config, std::size_t items) {
    if (config.strict_deterministic) return 1;
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("LCN_OT_THREADS")) {
        long parsed = std::strtol(env, nullptr, 10);
        if (parsed >= 1) workers = std::min<std::size_t>(workers, static_cast<std::size_t>(parsed));
    }
    return std::max<std::size_t>(1, std::min(workers, items));
}

}  // namespace

std::vector<RunRecord> run_all(const RunConfig& config) {
    if (config.variants.empty())
        throw InvalidArgument("run: no variants requested");
#ifdef _OPENMP
    if (config.strict_deterministic) omp_set_num_threads(1);
#endif

    // Per-seed stage: problem generation plus the full-Sinkhorn reference
    // when the problem is densifiable at desk scale.
    std::vector<SeedContext> contexts(config.seeds.size());
    {
        std::atomic<std::size_t> next{0};
        auto work = [&]() {
            while (true) {
                std::size_t idx = next.fetch_add(1);
                if (idx >= contexts.size()) break;
                SeedContext& ctx = contexts[idx];
                ctx.problem = make_problem(config, config.seeds[idx]);
                std::size_t cells = ctx.problem.p.n * ctx.problem.q.n;
                if (cells <= 1000000 && !config.bp) {
                    KernelOperator op = KernelOperator::dense(
                        build_kernel(
                            build_cost(ctx.problem.p, ctx.problem.q, config.cost, config.lambda)),
                        config.lambda);
                    SinkhornOptions opts;
                    opts.tol = config.tol;
                    opts.max_iters = config.max_iters;
                    ctx.reference = sinkhorn(op, ctx.problem.marg, opts);
                    ctx.reference_plan = densify_plan(ctx.reference->plan);
                }
            }
        };
        std::size_t workers = pool_size(config, contexts.size());
        std::vector<std::thread> threads;
        for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(work);
        work();
        for (auto& t : threads) t.join();
    }

    struct Item {
        std::size_t variant_idx;
        std::size_t seed_idx;
    };
    std::vector<Item> items;
    for (std::size_t v = 0; v < config.variants.size(); ++v)
        for (std::size_t s = 0; s < config.seeds.size(); ++s) items.push_back({v, s});

    std::vector<RunRecord> records(items.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        while (true) {
            std::size_t idx = next.fetch_add(1);
            if (idx >= items.size()) break;
            const Item& item = items[idx];
            records[idx] = run_one(config, config.variants[item.variant_idx],
                                   config.seeds[item.seed_idx], contexts[item.seed_idx]);
        }
    };
    std::size_t workers = pool_size(config, items.size());
    std::vector<std::thread> threads;
    for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(work);
    work();
    for (auto& t : threads) t.join();
    return records;
}

int write_outputs(const RunConfig& config, const std::vector<RunRecord>& records,
                  const std::string& json_path) {
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!config.output.empty()) {
        file.open(config.output);
        if (!file)
            throw InvalidArgument("cannot open output '" + config.output + "'");
        out = &file;
    }
    *out << sweep_csv_header() << '\n';
    for (const RunRecord& record : records)
        if (record.error.empty()) *out << sweep_csv_row(record.row) << '\n';

    if (!json_path.empty()) {
        nlohmann::json j;
        j["config"] = config_to_json(config);
        j["records"] = nlohmann::json::array();
        for (const RunRecord& record : records) j["records"].push_back(record_to_json(record));
        std::ofstream jf(json_path);
        if (!jf)
            throw InvalidArgument("cannot open output '" + json_path + "'");
        jf << j.dump(2) << '\n';
    }

    int code = 0;
    for (const RunRecord& record : records) {
        if (!record.error.empty()) {
            std::cerr << "lcn: variant failed: " << record.error << '\n';
            code = 2;
        }
    }
    return code;
}

}  // namespace lcn
