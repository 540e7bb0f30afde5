#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wsched/scheduling_policies.hpp"
#include "wsched/traffic_model.hpp"

namespace wsched {

/// Schema violation in a scenario config; the message starts with the
/// offending field path, e.g. "config.policies[1]: unknown policy 'x'".
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Arrival-rate range: l^i ~ U[1, M/10] (standard), U[1, M/8] (large),
/// U[1, M/15] (small).
enum class ArrivalRegime { standard, large, small };
enum class TxRegime { restricted, unrestricted };

struct Regime {
    ArrivalRegime arrivals = ArrivalRegime::standard;
    TxRegime tx = TxRegime::restricted;

    /// "default_restricted", "large_unrestricted", ...
    std::string name() const;
    static Regime parse(const std::string& s);
    double arrival_upper_bound(std::int32_t buffer_cap) const;
    bool operator==(const Regime&) const = default;
};

enum class PolicyKind { ns_type1, ns_type2, stationary_type1, stationary_type2, aloha, mws, lyapunov, external };

struct PolicyConfig {
    PolicyKind kind = PolicyKind::stationary_type1;
    std::string external_name;     // kind == external
    std::optional<double> aloha_p; // nullopt: 1 / (deg + 1)
    double theta = 200.0;
    SetSelection mws_mode = SetSelection::greedy;
    MwsWeight mws_weight = MwsWeight::queue_length;
    std::int32_t exact_cap = kDefaultExactCap;

    std::string name() const;
    /// Built-in names, or any name in the external registry.
    static PolicyConfig from_name(const std::string& name);
    /// Whittle-index policies see Psi = infinity in unrestricted regimes;
    /// baselines always keep the restricted Psi.
    bool index_based() const;
    bool operator==(const PolicyConfig&) const = default;
};

struct UserOverride {
    UserId user = 0;
    std::optional<double> arrival_mean;
    std::vector<double> arrival_pmf;
    std::optional<TxCap> tx_cap;  // contains nullopt for "unbounded"
    std::optional<double> holding_coeff;
    std::optional<double> energy_coeff;
    std::optional<std::int32_t> buffer_cap;
    std::optional<QueueState> initial_queue;
    bool operator==(const UserOverride&) const = default;
};

/// One fully resolved experiment: topology recipe, user parameters, one
/// policy, and the seeds to repeat it with.
struct Scenario {
    std::string name;
    std::int32_t num_users = 20;
    double threshold_d = 0.6;
    std::optional<std::string> graph_file;
    std::int32_t buffer_cap = 100;
    double holding_coeff = 1.0;
    EnergyFunction energy;
    std::vector<UserOverride> user_overrides;
    Regime regime;
    PolicyConfig policy;
    std::int64_t n_slots = 10000;
    std::int64_t burn_in = 0;
    std::vector<std::uint64_t> seeds{1};
    double gamma = 0.05;
    std::int32_t n_iter = 200;
    QueueState initial_queue = 0;

    bool operator==(const Scenario&) const = default;

    std::string id() const;
    /// Single-scenario config in the input schema; parsing it returns this
    /// scenario unchanged.
    nlohmann::json to_json() const;
    /// Hash of the resolved config without seeds.
    std::string config_hash() const;
    /// Hash of everything but policy and seeds. Scenarios sharing it run
    /// with common random numbers.
    std::string family_hash() const;
};

/// Command-line overrides applied on top of a config before validation.
struct ConfigOverrides {
    std::vector<std::uint64_t> seeds;
    std::optional<std::int64_t> slots;
    std::vector<std::string> policies;
    std::optional<double> d;
    std::optional<std::int32_t> users;
    std::optional<double> gamma;
    std::optional<std::int32_t> n_iter;
    std::optional<double> theta;
};

/// Expands a config into scenarios: regimes x policies, in that order.
/// Relative graph_file paths resolve against base_dir.
std::vector<Scenario> parse_config_json(const nlohmann::json& config,
                                        const ConfigOverrides& overrides = {},
                                        const std::filesystem::path& base_dir = {});
std::vector<Scenario> parse_config(const std::filesystem::path& file,
                                   const ConfigOverrides& overrides = {});

}  // namespace wsched
