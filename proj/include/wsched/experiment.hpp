#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wsched/conflict_graph.hpp"
#include "wsched/scenario.hpp"
#include "wsched/sim_engine.hpp"
#include "wsched/whittle_index.hpp"

namespace wsched {

/// Everything random about a scenario that is fixed per seed and shared by
/// all policies: topology, arrival means, restricted transmission caps.
struct ExperimentInstance {
    ConflictGraph graph;
    std::vector<UserParams> restricted;    // Psi^i ~ U{1..M/5}
    std::vector<UserParams> unrestricted;  // same, Psi = infinity
    std::vector<QueueState> initial_queue;

    /// Parameter set a policy runs under in the given regime.
    const std::vector<UserParams>& params_for(const PolicyConfig& policy, const Regime& regime) const;
};

ExperimentInstance build_instance(const Scenario& scenario, std::uint64_t seed);

/// Content key of a stationary index table.
std::string index_table_key(const ConflictGraph& graph, std::span<const UserParams> params,
                            IndexVariant variant, double gamma, std::int32_t n_iter);

/// Memoises stationary index tables in memory and, optionally, as JSON files
/// named <key>.json under a cache directory. Thread-safe.
class IndexTableStore {
public:
    explicit IndexTableStore(std::optional<std::filesystem::path> dir = std::nullopt);

    StationaryIndexResult get(IndexVariant variant, const ConflictGraph& graph, double gamma,
                              std::int32_t n_iter, ThresholdSolutionCache& cache);

    std::int64_t computed() const;
    std::int64_t disk_hits() const;

private:
    std::optional<std::filesystem::path> dir_;
    mutable std::mutex mutex_;
    std::map<std::string, StationaryIndexResult> memory_;
    std::int64_t computed_ = 0;
    std::int64_t disk_hits_ = 0;
};

struct RunResult {
    PolicyConfig policy;
    Metrics metrics;  // averages are NaN when the run failed
    nlohmann::json diagnostics;
    double wall_time_s = 0.0;
    std::optional<std::string> error;
};

struct CompareOptions {
    bool record_trace = false;
    IndexTableStore* store = nullptr;  // nullptr: compute tables locally
    /// true: a failing policy yields a RunResult with `error` set and the
    /// other policies still run; false: the exception propagates.
    bool isolate_failures = false;
};

std::unique_ptr<SchedulingPolicy> make_policy(const PolicyConfig& policy, const Scenario& scenario,
                                              const ExperimentInstance& instance, std::uint64_t seed,
                                              const std::shared_ptr<ThresholdSolutionCache>& cache,
                                              IndexTableStore* store);

/// Runs every policy on the same instance and arrival streams (common
/// random numbers). Non-policy fields come from `base`.
std::vector<RunResult> compare_policies(const Scenario& base, std::span<const PolicyConfig> policies,
                                        std::uint64_t seed, const CompareOptions& options = {});

/// compare_policies with a single policy (the scenario's own).
RunResult run_scenario(const Scenario& scenario, std::uint64_t seed, const CompareOptions& options = {});

}  // namespace wsched
