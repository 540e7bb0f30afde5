#include "wsched/scenario.hpp"

#include <fstream>
#include <limits>
#include <set>

#include "wsched/hashing.hpp"

namespace wsched {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(path + ": " + msg);
}

/// Reads fields of one JSON object and rejects keys nobody asked for.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) fail(path_, "expected an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return obj_.contains(key);
    }
    const json& raw(const std::string& key) {
        seen_.insert(key);
        return obj_.at(key);
    }
    std::string at(const std::string& key) const { return path_ + "." + key; }

    std::optional<std::int64_t> integer(const std::string& key, std::int64_t lo, std::int64_t hi) {
        if (!has(key)) return std::nullopt;
        return integer_value(obj_.at(key), at(key), lo, hi);
    }

    std::optional<double> number(const std::string& key, double lo, double hi, bool lo_open = false) {
        if (!has(key)) return std::nullopt;
        return number_value(obj_.at(key), at(key), lo, hi, lo_open);
    }

    std::optional<std::string> string(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const json& v = obj_.at(key);
        if (!v.is_string()) fail(at(key), "expected a string");
        return v.get<std::string>();
    }

    void finish() const {
        for (const auto& [key, _] : obj_.items())
            if (!seen_.count(key)) fail(path_ + "." + key, "unknown key");
    }

    static std::int64_t integer_value(const json& v, const std::string& path, std::int64_t lo,
                                      std::int64_t hi) {
        if (!v.is_number_integer()) fail(path, "expected an integer");
        if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(hi))
            fail(path, "must be <= " + std::to_string(hi));
        const auto x = v.get<std::int64_t>();
        if (x < lo || x > hi)
            fail(path, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return x;
    }

    static double number_value(const json& v, const std::string& path, double lo, double hi,
                               bool lo_open) {
        if (!v.is_number()) fail(path, "expected a number");
        const auto x = v.get<double>();
        if (!std::isfinite(x) || (lo_open ? !(x > lo) : !(x >= lo)) || !(x <= hi))
            fail(path, std::string("must be ") + (lo_open ? "> " : ">= ") + format_double(lo) +
                           " and <= " + format_double(hi));
        return x;
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

constexpr double kInf = std::numeric_limits<double>::max();
constexpr std::int64_t kMaxInt32 = std::numeric_limits<std::int32_t>::max();

json tx_cap_to_json(const TxCap& cap) {
    return cap ? json(*cap) : json("unbounded");
}

UserOverride parse_override(const json& j, const std::string& path, std::int32_t num_users) {
    ObjectReader r(j, path);
    UserOverride o;
    const auto user = r.integer("user", 0, num_users - 1);
    if (!user) fail(path + ".user", "required");
    o.user = static_cast<UserId>(*user);
    o.arrival_mean = r.number("arrival_mean", 0.0, kInf, true);
    if (r.has("arrival_pmf")) {
        const json& pmf = r.raw("arrival_pmf");
        if (!pmf.is_array() || pmf.empty()) fail(r.at("arrival_pmf"), "expected a nonempty array");
        double total = 0.0;
        for (std::size_t k = 0; k < pmf.size(); ++k) {
            const double m = ObjectReader::number_value(
                pmf[k], r.at("arrival_pmf") + "[" + std::to_string(k) + "]", 0.0, kInf, false);
            o.arrival_pmf.push_back(m);
            total += m;
        }
        if (!(total > 0.0)) fail(r.at("arrival_pmf"), "zero total mass");
    }
    if (r.has("tx_cap")) {
        const json& v = r.raw("tx_cap");
        if (v.is_string()) {
            if (v.get<std::string>() != "unbounded") fail(r.at("tx_cap"), "expected an integer or \"unbounded\"");
            o.tx_cap = TxCap{};
        } else {
            o.tx_cap = TxCap{static_cast<std::int32_t>(ObjectReader::integer_value(v, r.at("tx_cap"), 1, kMaxInt32))};
        }
    }
    o.holding_coeff = r.number("holding_coeff", 0.0, kInf);
    o.energy_coeff = r.number("energy_coeff", 0.0, kInf);
    if (auto m = r.integer("buffer_cap", 1, kMaxInt32)) o.buffer_cap = static_cast<std::int32_t>(*m);
    if (auto q = r.integer("initial_queue", 0, kMaxInt32)) o.initial_queue = static_cast<QueueState>(*q);
    r.finish();
    return o;
}

json override_to_json(const UserOverride& o) {
    json j;
    j["user"] = o.user;
    if (o.arrival_mean) j["arrival_mean"] = *o.arrival_mean;
    if (!o.arrival_pmf.empty()) j["arrival_pmf"] = o.arrival_pmf;
    if (o.tx_cap) j["tx_cap"] = tx_cap_to_json(*o.tx_cap);
    if (o.holding_coeff) j["holding_coeff"] = *o.holding_coeff;
    if (o.energy_coeff) j["energy_coeff"] = *o.energy_coeff;
    if (o.buffer_cap) j["buffer_cap"] = *o.buffer_cap;
    if (o.initial_queue) j["initial_queue"] = *o.initial_queue;
    return j;
}

std::vector<std::string> string_list(ObjectReader& r, const std::string& key) {
    const json& v = r.raw(key);
    if (!v.is_array() || v.empty()) fail(r.at(key), "expected a nonempty array of strings");
    std::vector<std::string> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!v[k].is_string()) fail(r.at(key) + "[" + std::to_string(k) + "]", "expected a string");
        out.push_back(v[k].get<std::string>());
    }
    return out;
}

}  // namespace

std::string Regime::name() const {
    const char* a = arrivals == ArrivalRegime::standard ? "default"
                    : arrivals == ArrivalRegime::large  ? "large"
                                                        : "small";
    return std::string(a) + (tx == TxRegime::restricted ? "_restricted" : "_unrestricted");
}

Regime Regime::parse(const std::string& s) {
    for (auto a : {ArrivalRegime::standard, ArrivalRegime::large, ArrivalRegime::small})
        for (auto t : {TxRegime::restricted, TxRegime::unrestricted}) {
            Regime r{a, t};
            if (r.name() == s) return r;
        }
    throw std::invalid_argument("unknown regime '" + s + "'");
}

double Regime::arrival_upper_bound(std::int32_t buffer_cap) const {
    const double m = static_cast<double>(buffer_cap);
    switch (arrivals) {
        case ArrivalRegime::large: return m / 8.0;
        case ArrivalRegime::small: return m / 15.0;
        case ArrivalRegime::standard: break;
    }
    return m / 10.0;
}

std::string PolicyConfig::name() const {
    switch (kind) {
        case PolicyKind::ns_type1: return "ns_type1";
        case PolicyKind::ns_type2: return "ns_type2";
        case PolicyKind::stationary_type1: return "stationary_type1";
        case PolicyKind::stationary_type2: return "stationary_type2";
        case PolicyKind::aloha: return "aloha";
        case PolicyKind::mws: return "mws";
        case PolicyKind::lyapunov: return "lyapunov";
        case PolicyKind::external: return external_name;
    }
    return "unknown";
}

PolicyConfig PolicyConfig::from_name(const std::string& name) {
    PolicyConfig p;
    for (auto k : {PolicyKind::ns_type1, PolicyKind::ns_type2, PolicyKind::stationary_type1,
                   PolicyKind::stationary_type2, PolicyKind::aloha, PolicyKind::mws,
                   PolicyKind::lyapunov}) {
        p.kind = k;
        if (p.name() == name) return p;
    }
    if (ExternalPolicyRegistry::instance().contains(name)) {
        p.kind = PolicyKind::external;
        p.external_name = name;
        return p;
    }
    throw std::invalid_argument("unknown policy '" + name + "'");
}

bool PolicyConfig::index_based() const {
    return kind != PolicyKind::aloha && kind != PolicyKind::mws && kind != PolicyKind::lyapunov;
}

std::string Scenario::id() const { return name.empty() ? regime.name() : name + "_" + regime.name(); }

json Scenario::to_json() const {
    json j;
    if (!name.empty()) j["name"] = name;
    j["users"] = num_users;
    j["d"] = threshold_d;
    if (graph_file) j["graph_file"] = *graph_file;
    j["buffer_cap"] = buffer_cap;
    j["holding_coeff"] = holding_coeff;
    j["energy"] = {{"kind", to_string(energy.kind)}, {"coeff", energy.coeff}};
    if (!user_overrides.empty()) {
        json arr = json::array();
        for (const auto& o : user_overrides) arr.push_back(override_to_json(o));
        j["user_overrides"] = std::move(arr);
    }
    j["regime"] = regime.name();
    j["policies"] = json::array({policy.name()});
    j["seeds"] = seeds;
    j["slots"] = n_slots;
    j["burn_in"] = burn_in;
    j["gamma"] = gamma;
    j["n_iter"] = n_iter;
    j["theta"] = policy.theta;
    j["aloha_p"] = policy.aloha_p ? json(*policy.aloha_p) : json("auto");
    j["mws_mode"] = to_string(policy.mws_mode);
    j["mws_weight"] = to_string(policy.mws_weight);
    j["exact_cap"] = policy.exact_cap;
    j["initial_queue"] = initial_queue;
    return j;
}

std::string Scenario::config_hash() const {
    json j = to_json();
    j.erase("seeds");
    return hash_hex(j.dump());
}

std::string Scenario::family_hash() const {
    json j = to_json();
    j.erase("seeds");
    j.erase("policies");
    return hash_hex(j.dump());
}

std::vector<Scenario> parse_config_json(const json& input, const ConfigOverrides& ov,
                                        const std::filesystem::path& base_dir) {
    json config = input;
    if (!config.is_object()) fail("config", "expected an object");
    if (!ov.seeds.empty()) {
        config.erase("seed");
        config["seeds"] = ov.seeds;
    }
    if (ov.slots) config["slots"] = *ov.slots;
    if (!ov.policies.empty()) config["policies"] = ov.policies;
    if (ov.d) config["d"] = *ov.d;
    if (ov.users) config["users"] = *ov.users;
    if (ov.gamma) config["gamma"] = *ov.gamma;
    if (ov.n_iter) config["n_iter"] = *ov.n_iter;
    if (ov.theta) config["theta"] = *ov.theta;

    ObjectReader r(config, "config");
    Scenario base;
    if (auto s = r.string("name")) base.name = *s;
    if (auto v = r.number("d", 0.0, kInf, true)) base.threshold_d = *v;
    if (auto s = r.string("graph_file")) {
        std::filesystem::path p(*s);
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        base.graph_file = std::filesystem::absolute(p).lexically_normal().string();
    }
    std::optional<std::int32_t> graph_users;
    if (base.graph_file) {
        try {
            graph_users = ConflictGraph::load(*base.graph_file).num_users();
        } catch (const std::exception& e) {
            fail(r.at("graph_file"), e.what());
        }
    }
    if (auto v = r.integer("users", 1, kMaxInt32)) {
        base.num_users = static_cast<std::int32_t>(*v);
        if (graph_users && *graph_users != base.num_users)
            fail(r.at("users"), "does not match the graph file (" + std::to_string(*graph_users) + " users)");
    } else if (graph_users) {
        base.num_users = *graph_users;
    }
    if (auto v = r.integer("buffer_cap", 1, kMaxInt32)) base.buffer_cap = static_cast<std::int32_t>(*v);
    if (auto v = r.number("holding_coeff", 0.0, kInf)) base.holding_coeff = *v;
    if (r.has("energy")) {
        ObjectReader e(r.raw("energy"), r.at("energy"));
        if (auto k = e.string("kind")) {
            try {
                base.energy.kind = energy_kind_from_string(*k);
            } catch (const std::invalid_argument& ex) {
                fail(e.at("kind"), ex.what());
            }
        }
        if (auto c = e.number("coeff", 0.0, kInf)) base.energy.coeff = *c;
        e.finish();
    }
    if (r.has("user_overrides")) {
        const json& arr = r.raw("user_overrides");
        if (!arr.is_array()) fail(r.at("user_overrides"), "expected an array");
        for (std::size_t k = 0; k < arr.size(); ++k)
            base.user_overrides.push_back(
                parse_override(arr[k], r.at("user_overrides") + "[" + std::to_string(k) + "]", base.num_users));
    }
    if (auto v = r.integer("slots", 1, std::numeric_limits<std::int64_t>::max())) base.n_slots = *v;
    if (auto v = r.integer("burn_in", 0, base.n_slots - 1)) base.burn_in = *v;
    if (r.has("seed") && r.has("seeds")) fail("config", "give either seed or seeds, not both");
    if (r.has("seed")) {
        base.seeds = {static_cast<std::uint64_t>(ObjectReader::integer_value(
            r.raw("seed"), r.at("seed"), 0, std::numeric_limits<std::int64_t>::max()))};
    } else if (r.has("seeds")) {
        const json& arr = r.raw("seeds");
        if (!arr.is_array() || arr.empty()) fail(r.at("seeds"), "expected a nonempty array");
        base.seeds.clear();
        for (std::size_t k = 0; k < arr.size(); ++k)
            base.seeds.push_back(static_cast<std::uint64_t>(ObjectReader::integer_value(
                arr[k], r.at("seeds") + "[" + std::to_string(k) + "]", 0,
                std::numeric_limits<std::int64_t>::max())));
    }
    if (auto v = r.number("gamma", 0.0, kInf, true)) base.gamma = *v;
    if (auto v = r.integer("n_iter", 1, kMaxInt32)) base.n_iter = static_cast<std::int32_t>(*v);
    if (auto v = r.number("theta", 0.0, kInf)) base.policy.theta = *v;
    if (r.has("aloha_p")) {
        const json& v = r.raw("aloha_p");
        if (v.is_string()) {
            if (v.get<std::string>() != "auto") fail(r.at("aloha_p"), "expected a probability or \"auto\"");
        } else {
            base.policy.aloha_p = ObjectReader::number_value(v, r.at("aloha_p"), 0.0, 1.0, false);
        }
    }
    if (auto s = r.string("mws_mode")) {
        try {
            base.policy.mws_mode = set_selection_from_string(*s);
        } catch (const std::invalid_argument& e) {
            fail(r.at("mws_mode"), e.what());
        }
    }
    if (auto s = r.string("mws_weight")) {
        try {
            base.policy.mws_weight = mws_weight_from_string(*s);
        } catch (const std::invalid_argument& e) {
            fail(r.at("mws_weight"), e.what());
        }
    }
    if (auto v = r.integer("exact_cap", 1, 64)) base.policy.exact_cap = static_cast<std::int32_t>(*v);
    if (auto v = r.integer("initial_queue", 0, base.buffer_cap)) base.initial_queue = static_cast<QueueState>(*v);
    for (std::size_t k = 0; k < base.user_overrides.size(); ++k) {
        const auto& o = base.user_overrides[k];
        const std::int32_t cap = o.buffer_cap.value_or(base.buffer_cap);
        const QueueState q0 = o.initial_queue.value_or(base.initial_queue);
        if (q0 > cap)
            fail("config.user_overrides[" + std::to_string(k) + "].initial_queue", "exceeds the buffer cap");
    }
    if (base.initial_queue > base.buffer_cap) fail(r.at("initial_queue"), "exceeds buffer_cap");

    std::vector<Regime> regimes;
    if (r.has("regime") && r.has("regimes")) fail("config", "give either regime or regimes, not both");
    auto parse_regime = [&](const std::string& s, const std::string& path) {
        try {
            return Regime::parse(s);
        } catch (const std::invalid_argument& e) {
            fail(path, e.what());
        }
    };
    if (auto s = r.string("regime")) {
        regimes.push_back(parse_regime(*s, r.at("regime")));
    } else if (r.has("regimes")) {
        const auto names = string_list(r, "regimes");
        for (std::size_t k = 0; k < names.size(); ++k)
            regimes.push_back(parse_regime(names[k], r.at("regimes") + "[" + std::to_string(k) + "]"));
    } else {
        regimes.push_back(Regime{});
    }

    if (!r.has("policies")) fail(r.at("policies"), "required");
    const auto policy_names = string_list(r, "policies");
    std::vector<PolicyConfig> policies;
    for (std::size_t k = 0; k < policy_names.size(); ++k) {
        PolicyConfig p = base.policy;
        try {
            const PolicyConfig named = PolicyConfig::from_name(policy_names[k]);
            p.kind = named.kind;
            p.external_name = named.external_name;
        } catch (const std::invalid_argument& e) {
            fail(r.at("policies") + "[" + std::to_string(k) + "]", e.what());
        }
        policies.push_back(p);
    }
    r.finish();

    std::vector<Scenario> out;
    for (const Regime& regime : regimes) {
        for (const PolicyConfig& p : policies) {
            Scenario s = base;
            s.regime = regime;
            s.policy = p;
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::vector<Scenario> parse_config(const std::filesystem::path& file, const ConfigOverrides& overrides) {
    std::ifstream in(file);
    if (!in) throw ConfigError(file.string() + ": cannot open config file");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(file.string() + ": invalid JSON: " + e.what());
    }
    return parse_config_json(j, overrides, file.parent_path());
}

}  // namespace wsched
