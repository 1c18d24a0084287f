#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "toaloha/engine.hpp"

namespace toaloha::harness {

/// One expanded grid point.
struct ScenarioSpec {
    std::int64_t index = 0; ///< position in the expanded grid
    std::string label;      ///< `id` key of the source section
    int line = 0;           ///< line of the [scenario] header
    Scenario scenario;
    bool fcfs = false; ///< policy = fcfs
    std::optional<double> load; ///< lambda given as a fraction of the optimal throughput
};

struct ExperimentSpec {
    std::vector<ScenarioSpec> scenarios;
    int replications = 1;
    std::uint64_t base_seed = 1;
    std::string output; ///< empty = stdout
    unsigned threads = 0;
};

/**
 * Parses `key = value` lines grouped under `[scenario]` headers. Keys before
 * the first header are global (seed, replications, output, threads). Any
 * numeric scenario key, and `policy`, may hold a comma list; numeric keys
 * also accept `start:step:stop`. Lists expand to their Cartesian product.
 * Throws ConfigError with the line number or key name.
 */
ExperimentSpec parse_spec(std::string_view text);
ExperimentSpec load_spec(const std::string& path);

/// base_seed XOR the grid index, with the replication in the high word.
std::uint64_t point_seed(std::uint64_t base_seed, std::int64_t index, int replication);

struct ResultRow {
    std::int64_t scenario_id = 0;
    int replication = 0;
    std::uint64_t seed = 0;
    std::string label;
    std::string policy;
    std::string traffic;
    int K = 1;
    double alpha = 0.0;
    double q = 0.0;
    double lambda = 0.0; ///< NaN for saturated traffic
    double n = 0.0;      ///< NaN unless saturated
    double p = 0.0;      ///< FixedP probability, NaN otherwise
    double kappa = 0.0;  ///< Bayesian kappa, NaN otherwise
    std::int64_t slots = 0;
    double throughput = 0.0;
    double avg_delay = 0.0;
    double avg_backlog = 0.0;
    double mean_monitoring = 0.0;
    std::optional<std::int64_t> service_completion_slot;
    double predicted_throughput = 0.0;
    double predicted_delay = 0.0;
    std::string error;
};

/// Runs one scenario; failures become an error row.
ResultRow run_point(const ScenarioSpec& point, std::uint64_t seed, int replication);

/// All (scenario, replication) pairs in parallel, ordered by scenario then
/// replication.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);

std::string csv_header();
std::string csv_row(const ResultRow& row);
void write_csv(std::ostream& os, const std::vector<ResultRow>& rows);

/// "%.10g", NaN as an empty field.
std::string csv_number(double x);

} // namespace toaloha::harness
