#include "wsched/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <limits>

#include "wsched/hashing.hpp"
#include "wsched/rng.hpp"

namespace wsched {

const std::vector<UserParams>& ExperimentInstance::params_for(const PolicyConfig& policy,
                                                              const Regime& regime) const {
    if (regime.tx == TxRegime::unrestricted && policy.index_based()) return unrestricted;
    return restricted;
}

ExperimentInstance build_instance(const Scenario& s, std::uint64_t seed) {
    ExperimentInstance inst{
        s.graph_file ? ConflictGraph::load(*s.graph_file)
                     : ConflictGraph::generate_geometric(s.num_users, s.threshold_d, seed),
        {}, {}, {}};
    if (inst.graph.num_users() != s.num_users)
        throw std::invalid_argument("graph file user count does not match the scenario");

    const auto n = static_cast<std::size_t>(s.num_users);
    std::vector<const UserOverride*> override_of(n, nullptr);
    for (const auto& o : s.user_overrides) override_of.at(static_cast<std::size_t>(o.user)) = &o;

    inst.restricted.resize(n);
    inst.initial_queue.assign(n, s.initial_queue);
    for (std::size_t i = 0; i < n; ++i) {
        const UserOverride* o = override_of[i];
        UserParams& p = inst.restricted[i];
        p.buffer_cap = o && o->buffer_cap ? *o->buffer_cap : s.buffer_cap;
        p.holding_coeff = o && o->holding_coeff ? *o->holding_coeff : s.holding_coeff;
        p.energy = s.energy;
        if (o && o->energy_coeff) p.energy.coeff = *o->energy_coeff;

        // Same uniform draws for every regime so regimes differ only in range.
        Rng rng = make_stream(seed, StreamTag::user_params, i);
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const std::int32_t psi_max = std::max(1, p.buffer_cap / 5);
        const std::int32_t psi = std::uniform_int_distribution<std::int32_t>(1, psi_max)(rng);

        const double hi = s.regime.arrival_upper_bound(p.buffer_cap);
        const double lo = std::min(1.0, hi);
        p.arrival_mean = lo + u * (std::max(1.0, hi) - lo);
        p.tx_cap = psi;

        if (o) {
            if (o->arrival_mean) p.arrival_mean = *o->arrival_mean;
            if (!o->arrival_pmf.empty()) p.arrival_pmf = o->arrival_pmf;
            if (o->tx_cap) p.tx_cap = *o->tx_cap;
            if (o->initial_queue) inst.initial_queue[i] = *o->initial_queue;
        }
        p.validate();
        if (inst.initial_queue[i] > p.buffer_cap)
            throw std::invalid_argument("initial queue exceeds buffer cap for user " + std::to_string(i));
    }
    inst.unrestricted = inst.restricted;
    for (auto& p : inst.unrestricted) p.tx_cap = std::nullopt;
    return inst;
}

std::string index_table_key(const ConflictGraph& graph, std::span<const UserParams> params,
                            IndexVariant variant, double gamma, std::int32_t n_iter) {
    Fnv1a h;
    h.update(graph.content_hash());
    for (const auto& p : params) {
        h.update_u64(static_cast<std::uint64_t>(p.buffer_cap));
        h.update_u64(p.tx_cap ? static_cast<std::uint64_t>(*p.tx_cap) : ~std::uint64_t{0});
        h.update_double(p.arrival_mean);
        h.update_double(p.holding_coeff);
        h.update_u64(static_cast<std::uint64_t>(p.energy.kind));
        h.update_double(p.energy.coeff);
        h.update_u64(p.arrival_pmf.size());
        for (double m : p.arrival_pmf) h.update_double(m);
    }
    h.update(to_string(variant));
    h.update_double(gamma);
    h.update_u64(static_cast<std::uint64_t>(n_iter));
    return h.hex();
}

IndexTableStore::IndexTableStore(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {
    if (dir_) std::filesystem::create_directories(*dir_);
}

StationaryIndexResult IndexTableStore::get(IndexVariant variant, const ConflictGraph& graph,
                                           double gamma, std::int32_t n_iter,
                                           ThresholdSolutionCache& cache) {
    std::vector<UserParams> params;
    for (UserId i = 0; i < cache.num_users(); ++i) params.push_back(cache.params(i));
    const std::string key = index_table_key(graph, params, variant, gamma, n_iter);
    {
        std::lock_guard lock(mutex_);
        if (auto it = memory_.find(key); it != memory_.end()) return it->second;
    }

    const auto file = dir_ ? std::optional(*dir_ / (key + ".json")) : std::nullopt;
    if (file && std::filesystem::exists(*file)) {
        std::ifstream in(*file);
        const auto j = nlohmann::json::parse(in, nullptr, false);
        if (!j.is_discarded() && j.value("key", "") == key) {
            StationaryIndexResult r;
            r.table = IndexTable::from_json(j.at("table"));
            r.sweep_max_delta = j.at("diagnostics").at("sweep_max_delta").get<std::vector<double>>();
            r.non_monotone_users = j.at("diagnostics").at("non_monotone_users").get<std::int32_t>();
            std::lock_guard lock(mutex_);
            ++disk_hits_;
            memory_.emplace(key, r);
            return r;
        }
    }

    StationaryIndexResult r = stationary_table(variant, graph, gamma, n_iter, cache);
    if (file) {
        const auto tmp = file->string() + ".tmp";
        {
            std::ofstream out(tmp);
            out << nlohmann::json{{"key", key},
                                  {"variant", to_string(variant)},
                                  {"gamma", gamma},
                                  {"n_iter", n_iter},
                                  {"table", r.table.to_json()},
                                  {"diagnostics", r.diagnostics()}}
                       .dump();
        }
        std::filesystem::rename(tmp, *file);
    }
    std::lock_guard lock(mutex_);
    ++computed_;
    memory_.emplace(key, r);
    return r;
}

std::int64_t IndexTableStore::computed() const {
    std::lock_guard lock(mutex_);
    return computed_;
}

std::int64_t IndexTableStore::disk_hits() const {
    std::lock_guard lock(mutex_);
    return disk_hits_;
}

std::unique_ptr<SchedulingPolicy> make_policy(const PolicyConfig& policy, const Scenario& scenario,
                                              const ExperimentInstance& instance, std::uint64_t seed,
                                              const std::shared_ptr<ThresholdSolutionCache>& cache,
                                              IndexTableStore* store) {
    auto stationary = [&](IndexVariant v) -> std::unique_ptr<SchedulingPolicy> {
        StationaryIndexResult r = store ? store->get(v, instance.graph, scenario.gamma, scenario.n_iter, *cache)
                                        : stationary_table(v, instance.graph, scenario.gamma, scenario.n_iter, *cache);
        return std::make_unique<StationaryWhittlePolicy>(v, std::move(r.table), r.diagnostics());
    };
    switch (policy.kind) {
        case PolicyKind::ns_type1:
            return std::make_unique<NonStationaryWhittlePolicy>(IndexVariant::type1, scenario.gamma, cache);
        case PolicyKind::ns_type2:
            return std::make_unique<NonStationaryWhittlePolicy>(IndexVariant::type2, scenario.gamma, cache);
        case PolicyKind::stationary_type1: return stationary(IndexVariant::type1);
        case PolicyKind::stationary_type2: return stationary(IndexVariant::type2);
        case PolicyKind::aloha: {
            std::vector<double> p = policy.aloha_p
                                        ? std::vector<double>(static_cast<std::size_t>(instance.graph.num_users()), *policy.aloha_p)
                                        : aloha_auto_probabilities(instance.graph);
            return std::make_unique<AlohaPolicy>(std::move(p), make_stream(seed, StreamTag::aloha));
        }
        case PolicyKind::mws:
            return std::make_unique<MwsPolicy>(policy.mws_mode, policy.mws_weight, policy.exact_cap);
        case PolicyKind::lyapunov:
            return std::make_unique<LyapunovPolicy>(policy.theta, policy.mws_mode, policy.exact_cap);
        case PolicyKind::external:
            return std::make_unique<ExternalPolicy>(policy.external_name,
                                                    ExternalPolicyRegistry::instance().make(policy.external_name));
    }
    throw std::invalid_argument("unhandled policy kind");
}

std::vector<RunResult> compare_policies(const Scenario& base, std::span<const PolicyConfig> policies,
                                        std::uint64_t seed, const CompareOptions& options) {
    if (policies.empty()) throw std::invalid_argument("compare_policies: empty policy list");
    const ExperimentInstance inst = build_instance(base, seed);
    std::shared_ptr<ThresholdSolutionCache> restricted_cache;
    std::shared_ptr<ThresholdSolutionCache> unrestricted_cache;

    std::vector<RunResult> out;
    for (const PolicyConfig& policy : policies) {
        const auto start = std::chrono::steady_clock::now();
        const std::vector<UserParams>& params = inst.params_for(policy, base.regime);
        auto& cache = &params == &inst.restricted ? restricted_cache : unrestricted_cache;
        const bool whittle = policy.kind == PolicyKind::ns_type1 || policy.kind == PolicyKind::ns_type2 ||
                             policy.kind == PolicyKind::stationary_type1 ||
                             policy.kind == PolicyKind::stationary_type2;
        if (!cache && whittle) cache = std::make_shared<ThresholdSolutionCache>(params);

        RunResult r;
        r.policy = policy;
        try {
            auto sched = make_policy(policy, base, inst, seed, cache, options.store);
            SimulationInput input{inst.graph, params, inst.initial_queue, base.n_slots, base.burn_in, seed,
                                  options.record_trace};
            Simulation sim(std::move(input), std::move(sched));
            r.metrics = sim.run();
            r.diagnostics = sim.policy().diagnostics();
            r.diagnostics["arrivals_hash"] = r.metrics.arrivals_hash;
            r.diagnostics["conservation_violations"] = r.metrics.conservation_violations;
            r.diagnostics["decision_violations"] = r.metrics.decision_violations;
        } catch (const std::exception& e) {
            if (!options.isolate_failures) throw;
            const double nan = std::numeric_limits<double>::quiet_NaN();
            r.metrics = Metrics{};
            r.metrics.avg_cost = r.metrics.avg_energy = r.metrics.avg_holding = nan;
            r.metrics.avg_drops = r.metrics.avg_throughput = nan;
            r.diagnostics = nlohmann::json::object();
            r.error = e.what();
        }
        r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.push_back(std::move(r));
    }
    return out;
}

RunResult run_scenario(const Scenario& scenario, std::uint64_t seed, const CompareOptions& options) {
    const PolicyConfig p[] = {scenario.policy};
    return std::move(compare_policies(scenario, p, seed, options).front());
}

}  // namespace wsched
