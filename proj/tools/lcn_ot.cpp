// Benchmark CLI for entropy-regularized optimal transport with sparse,
// Nyström, and locally corrected Nyström kernel approximations.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "lcn/error.hpp"
#include "lcn/generators.hpp"
#include "lcn/io.hpp"
#include "lcn/metrics.hpp"
#include "lcn/runner.hpp"

namespace {

using nlohmann::json;

int cmd_generate(const std::string& kind, std::size_t n, std::size_t d, std::size_t c, double D,
                 double r, std::uint64_t seed, const std::string& out_p, const std::string& out_q,
                 bool binary) {
    lcn::PointSet p, q;
    if (kind == "uniform-ball") {
        p = lcn::sample_uniform_ball(n, d, seed * 2 + 1, "p");
        q = lcn::sample_uniform_ball(n, d, seed * 2 + 2, "q");
    } else if (kind == "clustered") {
        lcn::ClusteredProblem prob = lcn::sample_clustered(n, d, c, D, r, seed);
        p = std::move(prob.p);
        q = std::move(prob.q);
    } else {
        throw lcn::InvalidArgument("unknown generator '" + kind + "'");
    }
    lcn::write_points_file(out_p, p, binary);
    lcn::write_points_file(out_q, q, binary);
    std::cerr << "wrote " << p.n << "x" << p.dim << " points to " << out_p << " and " << out_q
              << '\n';
    return 0;
}

int cmd_run(lcn::RunConfig config, const std::string& config_path, const std::string& json_out) {
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in)
            throw lcn::InvalidArgument("cannot open config '" + config_path + "'");
        json j = json::parse(in);
        config = lcn::config_from_json(j);
    }
    auto records = lcn::run_all(config);
    return lcn::write_outputs(config, records, json_out);
}

int cmd_sweep(const lcn::RuntimeSweepParams& params, const std::string& output) {
    std::vector<lcn::SweepRow> rows = lcn::runtime_sweep(params);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!output.empty()) {
        file.open(output);
        if (!file)
            throw lcn::InvalidArgument("cannot open output '" + output + "'");
        out = &file;
    }
    *out << lcn::sweep_csv_header() << '\n';
    for (const lcn::SweepRow& row : rows) *out << lcn::sweep_csv_row(row) << '\n';
    return 0;
}

int cmd_theorem_check(std::uint64_t seed, const std::string& output) {
    lcn::TheoremCheckReport report = lcn::run_theorem_checks(seed);
    json j;
    j["clustered"] = {{"max-err-sparse", report.clustered.max_err_sparse},
                      {"max-err-nystrom", report.clustered.max_err_nystrom},
                      {"max-err-lcn", report.clustered.max_err_lcn},
                      {"nys-err-at-overlap", report.clustered.nys_err_at_overlap},
                      {"predicted-sparse", report.clustered.predicted_sparse},
                      {"predicted-nys-overlap", report.clustered.predicted_nys_overlap},
                      {"sparse-within-10pct", report.clustered.sparse_within_10pct},
                      {"nys-within-10pct", report.clustered.nys_within_10pct},
                      {"lcn-below-nys", report.clustered.lcn_below_nys},
                      {"lcn-below-2x-sparse", report.clustered.lcn_below_2x_sparse}};
    j["uniform"] = {{"mean-err-nn1", report.uniform.mean_err_nn1},
                    {"mean-err-nn5", report.uniform.mean_err_nn5},
                    {"max-err-lcn", report.uniform.max_err_lcn},
                    {"max-err-nystrom", report.uniform.max_err_nystrom}};
    j["convergence"] = {{"iteration-bound", report.iteration_bound},
                        {"observed-iters", report.observed_iters},
                        {"bound-respected", report.bound_respected},
                        {"rho", report.rho},
                        {"eps-prime", report.eps_prime},
                        {"kernel-error-threshold", report.kernel_error_threshold}};
    if (!output.empty()) {
        std::ofstream file(output);
        if (!file)
            throw lcn::InvalidArgument("cannot open output '" + output + "'");
        file << j.dump(2) << '\n';
    }

    auto line = [](const char* name, bool ok, double got, double want) {
        std::cout << (ok ? "[ok]   " : "[FAIL] ") << name << ": measured " << got
                  << " vs reference " << want << '\n';
        return ok;
    };
    bool all = true;
    all &= line("sparse max error ~ e^{-(D-2r)/lambda}", report.clustered.sparse_within_10pct,
                report.clustered.max_err_sparse, report.clustered.predicted_sparse);
    all &= line("nystrom overlap error ~ 1-e^{-2r/lambda}", report.clustered.nys_within_10pct,
                report.clustered.nys_err_at_overlap, report.clustered.predicted_nys_overlap);
    all &= line("lcn max error < nystrom max error", report.clustered.lcn_below_nys,
                report.clustered.max_err_lcn, report.clustered.max_err_nystrom);
    all &= line("lcn max error < 2x sparse bound", report.clustered.lcn_below_2x_sparse,
                report.clustered.max_err_lcn, 2.0 * report.clustered.predicted_sparse);
    all &= line("uniform: nn1 mean error >= nn5",
                report.uniform.mean_err_nn1 >= report.uniform.mean_err_nn5 - 1e-6,
                report.uniform.mean_err_nn1, report.uniform.mean_err_nn5);
    all &= line("uniform: lcn max error < nystrom",
                report.uniform.max_err_lcn < report.uniform.max_err_nystrom,
                report.uniform.max_err_lcn, report.uniform.max_err_nystrom);
    all &= line("observed iterations <= bound", report.bound_respected,
                static_cast<double>(report.observed_iters), report.iteration_bound);
    std::cout << "rho=" << report.rho << " eps'=" << report.eps_prime
              << " kernel-error-threshold=" << report.kernel_error_threshold << '\n';
    return all ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"entropy-regularized OT with log-linear kernel approximations"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "sample a point-set pair to files");
    std::string gen_kind = "uniform-ball";
    std::size_t gen_n = 100, gen_d = 16, gen_c = 4;
    double gen_D = 10.0, gen_r = 0.5;
    std::uint64_t gen_seed = 1;
    std::string gen_out_p = "points_p.txt", gen_out_q = "points_q.txt";
    bool gen_binary = false;
    gen->add_option("--kind", gen_kind, "uniform-ball | clustered");
    gen->add_option("--n", gen_n, "points per side");
    gen->add_option("--d", gen_d, "dimension");
    gen->add_option("--c", gen_c, "clusters (clustered)");
    gen->add_option("--center-dist", gen_D, "minimum center distance D (clustered)");
    gen->add_option("--radius", gen_r, "cluster radius r (clustered)");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--out-p", gen_out_p, "source point file");
    gen->add_option("--out-q", gen_out_q, "sink point file");
    gen->add_flag("--binary", gen_binary, "write the binary format");

    // run
    auto* run = app.add_subcommand("run", "solve and score configured variants");
    lcn::RunConfig config;
    std::string config_path, json_out, run_generator = "uniform-ball", run_cost = "euclidean";
    std::string lsh_scheme = "kmeans", landmark_method = "kmeans";
    std::size_t budget = 0;
    run->add_option("--config", config_path, "JSON config (overrides other flags)");
    run->add_option("--generator", run_generator, "uniform-ball | clustered | file");
    run->add_option("--n", config.problem.n, "points per side");
    run->add_option("--m", config.problem.m, "sink points (0: same as --n)");
    run->add_option("--d", config.problem.d, "dimension");
    run->add_option("--c", config.problem.c, "clusters");
    run->add_option("--center-dist", config.problem.D, "cluster center distance");
    run->add_option("--radius", config.problem.r, "cluster radius");
    run->add_option("--p", config.problem.path_p, "source point file");
    run->add_option("--q", config.problem.path_q, "sink point file");
    run->add_option("--variant", config.variants,
                    "full | sparse | nystrom | lcn (repeatable, or 'all')");
    run->add_option("--cost", run_cost, "euclidean | negative-dot | cosine-derived");
    run->add_option("--lambda", config.lambda, "entropy regularization");
    run->add_option("--neighbors", config.neighbors, "expected LSH row degree");
    run->add_option("--landmarks", config.landmarks, "landmark count");
    run->add_option("--budget", budget,
                    "total budget: sparse=neighbors, nystrom=landmarks, lcn=half each");
    run->add_option("--lsh-scheme", lsh_scheme, "cross-polytope | kmeans | hierarchical-kmeans");
    run->add_option("--bands", config.lsh.bands, "LSH bands (OR)");
    run->add_option("--rows-per-band", config.lsh.rows_per_band, "hash functions per band (AND)");
    run->add_option("--buckets-per-fn", config.lsh.buckets_per_fn,
                    "buckets per hash function (0: derive from --neighbors)");
    run->add_option("--kmeans-iters", config.lsh.kmeans_iters, "Lloyd iterations");
    run->add_option("--branching", config.lsh.branching, "hierarchical branching factor");
    run->add_flag("--bp", config.bp, "bipartite-matching extension (unbalanced OT)");
    run->add_option("--deletion-cost", config.deletion_cost, "scalar deletion cost c_eps");
    run->add_option("--landmark-method", landmark_method, "kmeans | kmeans++-sampling");
    run->add_option("--heads", config.heads, "multi-head count (full variant)");
    run->add_option("--tol", config.tol, "marginal-error tolerance (<0: 1e-6 * mass)");
    run->add_option("--max-iters", config.max_iters, "Sinkhorn iteration cap");
    run->add_option("--seeds", config.seeds, "seeds (repeatable)");
    run->add_option("--output", config.output, "CSV output path (default: stdout)");
    run->add_option("--json-out", json_out, "JSON records output path");
    run->add_flag("--strict-deterministic", config.strict_deterministic,
                  "single-threaded, timing fields suppressed");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "runtime scaling sweep (kernel vs OT phase)");
    lcn::RuntimeSweepParams sweep_params;
    sweep_params.sizes = {2000, 4000, 8000};
    std::string sweep_output;
    sweep->add_option("--sizes", sweep_params.sizes, "problem sizes");
    sweep->add_option("--variants", sweep_params.variants, "variants to time");
    sweep->add_option("--d", sweep_params.dim, "dimension");
    sweep->add_option("--lambda", sweep_params.lambda, "entropy regularization");
    sweep->add_option("--row-degree", sweep_params.row_degree, "sparse row degree / budget");
    sweep->add_option("--sweeps-dense", sweep_params.ot_sweeps_dense, "timed dense iterations");
    sweep->add_option("--sweeps-sparse", sweep_params.ot_sweeps_sparse, "timed sparse iterations");
    sweep->add_option("--reps", sweep_params.repetitions, "repetitions (median)");
    sweep->add_option("--seed", sweep_params.seed, "RNG seed");
    sweep->add_option("--output", sweep_output, "CSV output path (default: stdout)");

    // theorem-check
    auto* theorem = app.add_subcommand("theorem-check", "kernel error and convergence checks");
    std::uint64_t theorem_seed = 1;
    std::string theorem_output;
    theorem->add_option("--seed", theorem_seed, "RNG seed");
    theorem->add_option("--output", theorem_output, "JSON report path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_generate(gen_kind, gen_n, gen_d, gen_c, gen_D, gen_r, gen_seed, gen_out_p,
                                gen_out_q, gen_binary);
        if (run->parsed()) {
            config.cost = lcn::cost_kind_from_name(run_cost);
            config.lsh.scheme = lcn::lsh_scheme_from_name(lsh_scheme);
            config.landmark_method = lcn::landmark_method_from_name(landmark_method);
            if (run_generator == "file" || !config.problem.path_p.empty())
                config.problem.kind = lcn::ProblemSpec::Kind::Files;
            else if (run_generator == "clustered")
                config.problem.kind = lcn::ProblemSpec::Kind::Clustered;
            if (config.variants.size() == 1 && config.variants[0] == "all")
                config.variants = {"full", "sparse", "nystrom", "lcn"};
            if (budget > 0) {
                config.neighbors = budget;
                config.landmarks = budget;
                for (const std::string& variant : config.variants)
                    if (variant == "lcn") {
                        config.neighbors = budget / 2;
                        config.landmarks = budget - budget / 2;
                    }
            }
            return cmd_run(std::move(config), config_path, json_out);
        }
        if (sweep->parsed()) return cmd_sweep(sweep_params, sweep_output);
        if (theorem->parsed()) return cmd_theorem_check(theorem_seed, theorem_output);
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "lcn: config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "lcn: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
