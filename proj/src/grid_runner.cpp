#include "wsched/grid_runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "wsched/hashing.hpp"

#ifndef WSCHED_VERSION
#define WSCHED_VERSION "unknown"
#endif

namespace wsched {
namespace {

struct WorkUnit {
    std::vector<const Scenario*> scenarios;  // same family, different policies
    std::uint64_t seed = 0;
};

std::vector<WorkUnit> plan(const std::vector<Scenario>& scenarios) {
    std::vector<std::string> family_order;
    std::map<std::string, std::vector<const Scenario*>> families;
    for (const auto& s : scenarios) {
        const auto key = s.family_hash();
        if (!families.count(key)) family_order.push_back(key);
        families[key].push_back(&s);
    }
    std::vector<WorkUnit> units;
    for (const auto& key : family_order) {
        const auto& members = families[key];
        std::vector<std::uint64_t> seeds;
        for (const Scenario* s : members) seeds.insert(seeds.end(), s->seeds.begin(), s->seeds.end());
        std::sort(seeds.begin(), seeds.end());
        seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
        for (std::uint64_t seed : seeds) {
            WorkUnit u;
            u.seed = seed;
            for (const Scenario* s : members)
                if (std::find(s->seeds.begin(), s->seeds.end(), seed) != s->seeds.end())
                    u.scenarios.push_back(s);
            units.push_back(std::move(u));
        }
    }
    return units;
}

std::string trace_name(const ResultRow& row) {
    return "trace_" + row.scenario_id + "_" + row.policy + "_" + std::to_string(row.seed) + ".csv";
}

ResultRow base_row(const Scenario& s, std::uint64_t seed) {
    ResultRow row;
    row.scenario_id = s.id();
    row.policy = s.policy.name();
    row.seed = seed;
    row.regime = s.regime.name();
    row.n_slots = s.n_slots;
    row.config_hash = s.config_hash();
    return row;
}

std::vector<ResultRow> run_unit(const WorkUnit& unit, const GridOptions& options, IndexTableStore& store,
                                std::mutex& io_mutex) {
    std::vector<ResultRow> rows;
    const Scenario& base = *unit.scenarios.front();
    std::vector<PolicyConfig> policies;
    for (const Scenario* s : unit.scenarios) policies.push_back(s->policy);
    try {
        CompareOptions copt;
        copt.record_trace = options.trace && options.out_dir.has_value();
        copt.store = &store;
        copt.isolate_failures = true;
        std::vector<RunResult> results = compare_policies(base, policies, unit.seed, copt);
        for (std::size_t k = 0; k < results.size(); ++k) {
            ResultRow row = base_row(*unit.scenarios[k], unit.seed);
            row.wall_time_s = results[k].wall_time_s;
            row.diagnostics = std::move(results[k].diagnostics);
            row.error = std::move(results[k].error);
            if (copt.record_trace && !row.error) {
                std::lock_guard lock(io_mutex);
                write_trace_csv(*options.out_dir / trace_name(row), results[k].metrics);
            }
            results[k].metrics.trace.clear();
            row.metrics = std::move(results[k].metrics);
            rows.push_back(std::move(row));
        }
    } catch (const std::exception& e) {
        rows.clear();
        for (const Scenario* s : unit.scenarios) {
            ResultRow row = base_row(*s, unit.seed);
            const double nan = std::numeric_limits<double>::quiet_NaN();
            row.metrics.avg_cost = row.metrics.avg_energy = row.metrics.avg_holding = nan;
            row.metrics.avg_drops = row.metrics.avg_throughput = nan;
            row.error = e.what();
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace

std::string software_version() { return WSCHED_VERSION; }

GridReport run_grid(const std::vector<Scenario>& scenarios, const GridOptions& options) {
    if (options.out_dir) std::filesystem::create_directories(*options.out_dir);
    IndexTableStore store(options.cache_dir);
    const std::vector<WorkUnit> units = plan(scenarios);
    std::vector<std::vector<ResultRow>> results(units.size());
    std::atomic<std::size_t> next{0};
    std::mutex io_mutex;

    auto worker = [&] {
        for (std::size_t k = next++; k < units.size(); k = next++)
            results[k] = run_unit(units[k], options, store, io_mutex);
    };
    const auto jobs = static_cast<std::size_t>(std::max<std::int32_t>(1, options.jobs));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(jobs, units.size()); ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    GridReport report;
    for (auto& unit_rows : results)
        for (auto& row : unit_rows) {
            if (row.error) ++report.failures;
            report.rows.push_back(std::move(row));
        }
    std::stable_sort(report.rows.begin(), report.rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.scenario_id, a.policy, a.seed) < std::tie(b.scenario_id, b.policy, b.seed);
    });

    if (options.out_dir) {
        std::ofstream csv(*options.out_dir / "results.csv");
        csv << to_csv(report.rows);
        std::ofstream side(*options.out_dir / "results.json");
        side << sidecar_json(scenarios, report).dump(2) << '\n';
    }
    return report;
}

std::string csv_header() {
    std::string out;
    for (const char* c : kResultColumns) {
        if (!out.empty()) out += ',';
        out += c;
    }
    return out;
}

std::string csv_row(const ResultRow& r) {
    std::ostringstream os;
    const Metrics& m = r.metrics;
    os << r.scenario_id << ',' << r.policy << ',' << r.seed << ',' << r.regime << ',' << r.n_slots << ','
       << format_double(m.avg_cost) << ',' << format_double(m.avg_energy) << ','
       << format_double(m.avg_holding) << ',' << format_double(m.avg_drops) << ','
       << format_double(m.avg_throughput) << ',' << format_double(r.wall_time_s) << ',' << r.config_hash;
    return os.str();
}

std::string to_csv(const std::vector<ResultRow>& rows) {
    std::string out = csv_header() + "\n";
    for (const auto& r : rows) out += csv_row(r) + "\n";
    return out;
}

nlohmann::json sidecar_json(const std::vector<Scenario>& scenarios, const GridReport& report) {
    nlohmann::json j;
    j["software_version"] = software_version();
    nlohmann::json configs = nlohmann::json::array();
    for (const auto& s : scenarios)
        configs.push_back({{"scenario_id", s.id()}, {"config_hash", s.config_hash()}, {"config", s.to_json()}});
    j["scenarios"] = std::move(configs);
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : report.rows) {
        nlohmann::json run{{"scenario_id", r.scenario_id}, {"policy", r.policy},
                           {"seed", r.seed},           {"config_hash", r.config_hash},
                           {"n_slots", r.n_slots},     {"diagnostics", r.diagnostics}};
        if (r.error) run["error"] = *r.error;
        runs.push_back(std::move(run));
    }
    j["runs"] = std::move(runs);
    j["failures"] = report.failures;
    return j;
}

void write_trace_csv(const std::filesystem::path& path, const Metrics& metrics) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace " + path.string());
    out << "slot,user,queue,transmitting,served,arrived,dropped\n";
    for (const SlotRecord& rec : metrics.trace) {
        for (std::size_t i = 0; i < rec.queue.size(); ++i) {
            const auto id = static_cast<UserId>(i);
            const bool tx = std::binary_search(rec.transmitting.begin(), rec.transmitting.end(), id);
            out << rec.slot << ',' << i << ',' << rec.queue[i] << ',' << (tx ? 1 : 0) << ','
                << rec.served[i] << ',' << rec.arrived[i] << ',' << rec.dropped[i] << '\n';
        }
    }
}

}  // namespace wsched
