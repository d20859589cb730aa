#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcn/lsh.hpp"
#include "lcn/metrics.hpp"
#include "lcn/nystrom.hpp"

namespace lcn {

struct ProblemSpec {
    enum class Kind { UniformBall, Clustered, Files };
    Kind kind = Kind::UniformBall;
    std::size_t n = 100;
    std::size_t m = 0;  // 0: same as n (generators)
    std::size_t d = 16;
    std::size_t c = 4;   // clustered
    double D = 10.0;     // clustered center separation
    double r = 0.5;      // clustered radius
    std::string path_p;  // files
    std::string path_q;
};

struct RunConfig {
    ProblemSpec problem;
    std::vector<std::string> variants{"full"};  // full | sparse | nystrom | lcn
    CostKind cost = CostKind::Euclidean;
    double lambda = 0.05;
    std::size_t neighbors = 20;  // expected LSH row degree
    std::size_t landmarks = 20;
    LshConfig lsh;  // buckets_per_fn <= 0 requests the degree-based choice
    bool bp = false;
    double deletion_cost = 0.0;  // scalar c_ε on both sides when bp is on
    LandmarkMethod landmark_method = LandmarkMethod::KMeans;
    int heads = 1;
    double tol = -1.0;
    int max_iters = 500;
    std::vector<std::uint64_t> seeds{1};
    std::string output;  // CSV path; empty writes to stdout
    bool strict_deterministic = false;
};

nlohmann::json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);

struct RunRecord {
    std::string variant;
    std::uint64_t seed = 0;
    SweepRow row;          // fixed CSV schema
    double distance = 0.0;
    bool converged = false;
    double marginal_err = 0.0;
    std::string error;  // non-empty when the variant failed
    std::vector<double> head_distances;
};

nlohmann::json record_to_json(const RunRecord& record);

// Executes variants x seeds in a worker pool bounded by LCN_OT_THREADS;
// records come back ordered by (variant order, seed order). Failures are
// captured per record, never aborting sibling runs.
std::vector<RunRecord> run_all(const RunConfig& config);

// Exit-code semantics: 0 ok, 2 when any record carries an error.
int write_outputs(const RunConfig& config, const std::vector<RunRecord>& records,
                  const std::string& json_path);

}  // namespace lcn
