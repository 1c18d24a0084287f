#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace toaloha::validation {

struct Criterion {
    int id = 0;
    std::string group; ///< "analysis" or "simulation"
    std::string title;
};

struct CriterionResult {
    int id = 0;
    std::string group;
    std::string title;
    bool passed = false;
    std::string detail; ///< measured values and deltas
    double seconds = 0.0;
};

struct Options {
    /// Empty or "all" runs everything. Otherwise a group name or a
    /// comma-separated list of criterion ids.
    std::string filter;
    std::uint64_t seed = 20240601;
    unsigned threads = 0; ///< 0 = hardware concurrency
};

const std::vector<Criterion>& criteria();

/// Throws ConfigError for a filter that selects nothing.
std::vector<Criterion> select(const std::string& filter);

std::vector<CriterionResult> run(const Options& options);

/// One line: "[PASS] 3 analysis  table-ii ... (0.01 s) detail".
std::string format(const CriterionResult& r);

// Independent oracles ---------------------------------------------------------

/// Renewal quantities by enumerating every joint (silent | TO 1..K) choice
/// of n users.
struct EnumeratedRenewal {
    double pr_idle = 0.0;
    double pr_success = 0.0;
    double pr_type1 = 0.0;
    double pr_type2 = 0.0;
    double expected_reward = 0.0;
    double expected_length = 0.0;
};

EnumeratedRenewal enumerate_renewal(int n, double p, int K);

/// gamma * E[reward] / E[length] from enumerate_renewal.
double enumerated_throughput(int n, double p, int K, double gamma);

/// E[n | collision] under a Poisson(nu) prior by direct summation.
double posterior_mean_by_summation(double nu, double p);

} // namespace toaloha::validation
