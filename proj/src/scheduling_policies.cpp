#include "wsched/scheduling_policies.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace wsched {
namespace {

enum class Status : std::uint8_t { undecided, active, passive };

void require_size(std::size_t n, const ConflictGraph& graph, const char* what) {
    if (static_cast<std::int32_t>(n) != graph.num_users())
        throw std::invalid_argument(std::string(what) + ": size does not match number of users");
}

ActiveSet greedy_mwis(std::span<const double> weights, const ConflictGraph& graph) {
    const auto n = static_cast<std::size_t>(graph.num_users());
    std::vector<UserId> order;
    for (std::size_t i = 0; i < n; ++i)
        if (weights[i] > 0.0) order.push_back(static_cast<UserId>(i));
    std::stable_sort(order.begin(), order.end(), [&](UserId a, UserId b) {
        return weights[static_cast<std::size_t>(a)] > weights[static_cast<std::size_t>(b)];
    });
    std::vector<std::uint8_t> blocked(n, 0);
    ActiveSet out;
    for (UserId u : order) {
        if (blocked[static_cast<std::size_t>(u)]) continue;
        out.push_back(u);
        for (UserId v : graph.neighbors(u)) blocked[static_cast<std::size_t>(v)] = 1;
    }
    std::sort(out.begin(), out.end());
    return out;
}

class ExactMwis {
public:
    ExactMwis(std::span<const double> weights, const ConflictGraph& graph) {
        for (UserId i = 0; i < graph.num_users(); ++i)
            if (weights[static_cast<std::size_t>(i)] > 0.0) order_.push_back(i);
        std::stable_sort(order_.begin(), order_.end(), [&](UserId a, UserId b) {
            return weights[static_cast<std::size_t>(a)] > weights[static_cast<std::size_t>(b)];
        });
        const std::size_t k = order_.size();
        w_.resize(k);
        closed_.assign(k, 0);
        for (std::size_t a = 0; a < k; ++a) {
            w_[a] = weights[static_cast<std::size_t>(order_[a])];
            closed_[a] |= std::uint64_t{1} << a;
            for (std::size_t b = 0; b < k; ++b)
                if (graph.adjacent(order_[a], order_[b])) closed_[a] |= std::uint64_t{1} << b;
        }
    }

    ActiveSet run() {
        const std::uint64_t all = order_.empty() ? 0 : (~std::uint64_t{0} >> (64 - order_.size()));
        search(all, 0, 0.0);
        ActiveSet out;
        for (std::size_t a = 0; a < order_.size(); ++a)
            if (best_set_ >> a & 1U) out.push_back(order_[a]);
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    double bound(std::uint64_t cand) const {
        double s = 0.0;
        while (cand) {
            s += w_[static_cast<std::size_t>(std::countr_zero(cand))];
            cand &= cand - 1;
        }
        return s;
    }

    void search(std::uint64_t cand, std::uint64_t chosen, double weight) {
        if (cand == 0) {
            if (weight > best_) {
                best_ = weight;
                best_set_ = chosen;
            }
            return;
        }
        if (weight + bound(cand) <= best_) return;
        const auto v = static_cast<std::size_t>(std::countr_zero(cand));
        const std::uint64_t bit = std::uint64_t{1} << v;
        search(cand & ~closed_[v], chosen | bit, weight + w_[v]);
        search(cand & ~bit, chosen, weight);
    }

    std::vector<UserId> order_;
    std::vector<double> w_;
    std::vector<std::uint64_t> closed_;
    double best_ = 0.0;
    std::uint64_t best_set_ = 0;
};

}  // namespace

PolicyDecision whittle_activation(std::span<const double> indices,
                                  std::span<const QueueState> states, const ConflictGraph& graph) {
    require_size(indices.size(), graph, "whittle_activation indices");
    require_size(states.size(), graph, "whittle_activation states");
    const auto n = static_cast<std::size_t>(graph.num_users());
    std::vector<Status> status(n, Status::undecided);
    std::size_t undecided = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (states[i] <= 0) {
            status[i] = Status::passive;
        } else {
            if (std::isnan(indices[i])) throw std::invalid_argument("whittle_activation: NaN index");
            ++undecided;
        }
    }

    auto precedes = [&](UserId a, UserId b) {
        const double ia = indices[static_cast<std::size_t>(a)];
        const double ib = indices[static_cast<std::size_t>(b)];
        return ia < ib || (ia == ib && a < b);
    };

    PolicyDecision out;
    std::vector<UserId> winners;
    while (undecided > 0) {
        winners.clear();
        for (UserId i = 0; i < static_cast<UserId>(n); ++i) {
            if (status[static_cast<std::size_t>(i)] != Status::undecided) continue;
            const auto& nbrs = graph.neighbors(i);
            const bool local_min = std::all_of(nbrs.begin(), nbrs.end(), [&](UserId j) {
                return status[static_cast<std::size_t>(j)] != Status::undecided || precedes(i, j);
            });
            if (local_min) winners.push_back(i);
        }
        for (UserId i : winners) {
            status[static_cast<std::size_t>(i)] = Status::active;
            --undecided;
            out.active_set.push_back(i);
            for (UserId j : graph.neighbors(i)) {
                if (status[static_cast<std::size_t>(j)] == Status::undecided) {
                    status[static_cast<std::size_t>(j)] = Status::passive;
                    --undecided;
                }
            }
        }
        ++out.rounds;
    }
    std::sort(out.active_set.begin(), out.active_set.end());
    return out;
}

AlohaOutcome aloha_select(std::span<const QueueState> states, const ConflictGraph& graph,
                          std::span<const double> p, Rng& rng) {
    require_size(states.size(), graph, "aloha_select states");
    require_size(p.size(), graph, "aloha_select probabilities");
    const auto n = static_cast<std::size_t>(graph.num_users());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::uint8_t> attempt(n, 0);
    AlohaOutcome out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(p[i] >= 0.0 && p[i] <= 1.0)) throw std::invalid_argument("aloha probability outside [0,1]");
        const double u = unit(rng);
        if (states[i] > 0 && u < p[i]) {
            attempt[i] = 1;
            out.attempts.push_back(static_cast<UserId>(i));
        }
    }
    for (UserId i : out.attempts) {
        const auto& nbrs = graph.neighbors(i);
        const bool collided = std::any_of(nbrs.begin(), nbrs.end(),
                                          [&](UserId j) { return attempt[static_cast<std::size_t>(j)] != 0; });
        if (!collided) out.successes.push_back(i);
    }
    return out;
}

std::vector<double> aloha_auto_probabilities(const ConflictGraph& graph) {
    std::vector<double> p(static_cast<std::size_t>(graph.num_users()));
    for (UserId i = 0; i < graph.num_users(); ++i)
        p[static_cast<std::size_t>(i)] = 1.0 / static_cast<double>(graph.degree(i) + 1);
    return p;
}

std::string to_string(SetSelection s) { return s == SetSelection::greedy ? "greedy" : "exact"; }

SetSelection set_selection_from_string(const std::string& s) {
    if (s == "greedy") return SetSelection::greedy;
    if (s == "exact") return SetSelection::exact;
    throw std::invalid_argument("unknown set selection mode '" + s + "'");
}

std::string to_string(MwsWeight w) {
    return w == MwsWeight::queue_length ? "queue_length" : "queue_times_service";
}

MwsWeight mws_weight_from_string(const std::string& s) {
    if (s == "queue_length") return MwsWeight::queue_length;
    if (s == "queue_times_service") return MwsWeight::queue_times_service;
    throw std::invalid_argument("unknown MWS weight '" + s + "'");
}

ActiveSet max_weight_independent_set(std::span<const double> weights, const ConflictGraph& graph,
                                     SetSelection mode, std::int32_t exact_cap) {
    require_size(weights.size(), graph, "max_weight_independent_set weights");
    if (mode == SetSelection::greedy) return greedy_mwis(weights, graph);
    if (exact_cap > 64) throw std::invalid_argument("exact selection supports at most 64 users");
    if (graph.num_users() > exact_cap)
        throw std::invalid_argument("exact selection rejects graphs with more than " +
                                    std::to_string(exact_cap) + " users");
    return ExactMwis(weights, graph).run();
}

PolicyDecision mws_select(std::span<const QueueState> states, std::span<const UserParams> params,
                          const ConflictGraph& graph, SetSelection mode, MwsWeight weight,
                          std::int32_t exact_cap) {
    require_size(states.size(), graph, "mws_select states");
    require_size(params.size(), graph, "mws_select params");
    std::vector<double> w(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        const double x = static_cast<double>(states[i]);
        w[i] = weight == MwsWeight::queue_length
                   ? x
                   : x * static_cast<double>(service_amount(states[i], params[i]));
    }
    return {max_weight_independent_set(w, graph, mode, exact_cap), 0};
}

double lyapunov_score(QueueState x, const UserParams& params, double theta) {
    const std::int32_t z = service_amount(x, params);
    return static_cast<double>(x) * static_cast<double>(z) - theta * params.energy(z);
}

PolicyDecision lyapunov_select(std::span<const QueueState> states,
                               std::span<const UserParams> params, const ConflictGraph& graph,
                               double theta, SetSelection mode, std::int32_t exact_cap) {
    require_size(states.size(), graph, "lyapunov_select states");
    require_size(params.size(), graph, "lyapunov_select params");
    if (!(theta >= 0.0)) throw std::invalid_argument("lyapunov theta must be >= 0");
    std::vector<double> s(states.size());
    for (std::size_t i = 0; i < states.size(); ++i)
        s[i] = states[i] > 0 ? lyapunov_score(states[i], params[i], theta) : 0.0;
    return {max_weight_independent_set(s, graph, mode, exact_cap), 0};
}

// ---------------------------------------------------------------------------

NonStationaryWhittlePolicy::NonStationaryWhittlePolicy(IndexVariant variant, double gamma,
                                                       std::shared_ptr<ThresholdSolutionCache> cache)
    : variant_(variant), gamma_(gamma), cache_(std::move(cache)) {
    if (!(gamma_ >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
    if (!cache_) throw std::invalid_argument("non-stationary policy needs a solution cache");
    lambdas_.assign(static_cast<std::size_t>(cache_->num_users()), 0.0);
}

std::string NonStationaryWhittlePolicy::name() const { return "ns_" + to_string(variant_); }

SlotDecision NonStationaryWhittlePolicy::decide(const SlotContext& ctx) {
    snapshot_ = lambdas_;
    for (UserId i = 0; i < ctx.graph.num_users(); ++i) {
        const QueueState x = ctx.states[static_cast<std::size_t>(i)];
        if (x < 1) continue;
        try {
            lambdas_[static_cast<std::size_t>(i)] =
                ns_update(i, x, snapshot_, variant_, ctx.graph, gamma_, *cache_);
        } catch (const SolverError& e) {
            throw SolverError("slot " + std::to_string(ctx.slot) + ", user " + std::to_string(i) +
                              ": " + e.what());
        }
        const double l = lambdas_[static_cast<std::size_t>(i)];
        if (!std::isfinite(l))
            throw IndexDivergenceError("non-stationary index of user " + std::to_string(i) +
                                       " is no longer finite at slot " + std::to_string(ctx.slot));
        max_abs_lambda_ = std::max(max_abs_lambda_, std::abs(l));
    }
    PolicyDecision d = whittle_activation(lambdas_, ctx.states, ctx.graph);
    return {d.active_set, d.active_set, d.rounds};
}

StationaryWhittlePolicy::StationaryWhittlePolicy(IndexVariant variant, IndexTable table,
                                                 nlohmann::json diagnostics)
    : variant_(variant), table_(std::move(table)), diagnostics_(std::move(diagnostics)) {}

std::string StationaryWhittlePolicy::name() const { return "stationary_" + to_string(variant_); }

SlotDecision StationaryWhittlePolicy::decide(const SlotContext& ctx) {
    indices_.assign(ctx.states.size(), 0.0);
    for (std::size_t i = 0; i < ctx.states.size(); ++i)
        if (ctx.states[i] > 0) indices_[i] = table_.at(static_cast<UserId>(i), ctx.states[i]);
    PolicyDecision d = whittle_activation(indices_, ctx.states, ctx.graph);
    return {d.active_set, d.active_set, d.rounds};
}

AlohaPolicy::AlohaPolicy(std::vector<double> probabilities, Rng rng)
    : p_(std::move(probabilities)), rng_(std::move(rng)) {}

SlotDecision AlohaPolicy::decide(const SlotContext& ctx) {
    AlohaOutcome o = aloha_select(ctx.states, ctx.graph, p_, rng_);
    return {std::move(o.attempts), std::move(o.successes), 0};
}

MwsPolicy::MwsPolicy(SetSelection mode, MwsWeight weight, std::int32_t exact_cap)
    : mode_(mode), weight_(weight), exact_cap_(exact_cap) {}

SlotDecision MwsPolicy::decide(const SlotContext& ctx) {
    PolicyDecision d = mws_select(ctx.states, ctx.params, ctx.graph, mode_, weight_, exact_cap_);
    return {d.active_set, d.active_set, 0};
}

LyapunovPolicy::LyapunovPolicy(double theta, SetSelection mode, std::int32_t exact_cap)
    : theta_(theta), mode_(mode), exact_cap_(exact_cap) {}

SlotDecision LyapunovPolicy::decide(const SlotContext& ctx) {
    PolicyDecision d = lyapunov_select(ctx.states, ctx.params, ctx.graph, theta_, mode_, exact_cap_);
    return {d.active_set, d.active_set, 0};
}

ExternalPolicy::ExternalPolicy(std::string name, DecisionProvider provider)
    : name_(std::move(name)), provider_(std::move(provider)) {
    if (!provider_) throw std::invalid_argument("external policy needs a provider");
}

SlotDecision ExternalPolicy::decide(const SlotContext& ctx) {
    ActiveSet set = provider_(ctx.slot, ctx.states, ctx.graph);
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    for (UserId i : set) {
        if (i < 0 || i >= ctx.graph.num_users() || ctx.states[static_cast<std::size_t>(i)] <= 0)
            throw std::invalid_argument("external policy '" + name_ +
                                        "' activated an invalid or empty user");
    }
    if (!ctx.graph.is_independent_set(set))
        throw std::invalid_argument("external policy '" + name_ + "' activated conflicting users");
    return {set, set, 0};
}

ExternalPolicyRegistry::ExternalPolicyRegistry() {
    add("all_passive", [] {
        return DecisionProvider([](std::int64_t, std::span<const QueueState>, const ConflictGraph&) {
            return ActiveSet{};
        });
    });
}

ExternalPolicyRegistry& ExternalPolicyRegistry::instance() {
    static ExternalPolicyRegistry registry;
    return registry;
}

void ExternalPolicyRegistry::add(const std::string& name, std::function<DecisionProvider()> factory) {
    for (auto& [key, f] : entries_) {
        if (key == name) {
            f = std::move(factory);
            return;
        }
    }
    entries_.emplace_back(name, std::move(factory));
}

bool ExternalPolicyRegistry::contains(const std::string& name) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

DecisionProvider ExternalPolicyRegistry::make(const std::string& name) const {
    for (const auto& [key, f] : entries_)
        if (key == name) return f();
    throw std::invalid_argument("unknown external policy '" + name + "'");
}

std::vector<std::string> ExternalPolicyRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) out.push_back(e.first);
    return out;
}

}  // namespace wsched
