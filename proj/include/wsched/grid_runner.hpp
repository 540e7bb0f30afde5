#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wsched/experiment.hpp"
#include "wsched/scenario.hpp"

namespace wsched {

/// Column order of results.csv.
inline constexpr const char* kResultColumns[] = {
    "scenario_id", "policy",       "seed",           "regime",      "n_slots",
    "avg_cost",    "avg_energy",   "avg_holding",    "avg_drops",   "avg_throughput",
    "wall_time_s", "config_hash"};

struct ResultRow {
    std::string scenario_id;
    std::string policy;
    std::uint64_t seed = 0;
    std::string regime;
    std::int64_t n_slots = 0;
    Metrics metrics;  // trace moved out before storing
    double wall_time_s = 0.0;
    std::string config_hash;
    nlohmann::json diagnostics;
    std::optional<std::string> error;
};

struct GridOptions {
    std::optional<std::filesystem::path> out_dir;  // nullopt: nothing written
    bool trace = false;
    std::optional<std::filesystem::path> cache_dir;
    std::int32_t jobs = 1;
};

struct GridReport {
    std::vector<ResultRow> rows;  // sorted by (scenario_id, policy, seed)
    std::int32_t failures = 0;
};

/// Runs every (scenario, seed). Scenarios that differ only in policy run
/// together on one instance with common random numbers. Work is spread
/// over `jobs` threads; results do not depend on the thread count.
GridReport run_grid(const std::vector<Scenario>& scenarios, const GridOptions& options);

std::string csv_header();
std::string csv_row(const ResultRow& row);
/// CSV text for all rows, header first.
std::string to_csv(const std::vector<ResultRow>& rows);
nlohmann::json sidecar_json(const std::vector<Scenario>& scenarios, const GridReport& report);

/// Per-slot trace: slot, user, queue, transmitting, served, arrived, dropped.
void write_trace_csv(const std::filesystem::path& path, const Metrics& metrics);

std::string software_version();

}  // namespace wsched
