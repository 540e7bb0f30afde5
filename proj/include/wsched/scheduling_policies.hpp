#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wsched/conflict_graph.hpp"
#include "wsched/rng.hpp"
#include "wsched/traffic_model.hpp"
#include "wsched/whittle_index.hpp"

namespace wsched {

/// Sorted, duplicate-free set of users.
using ActiveSet = std::vector<UserId>;

struct PolicyDecision {
    ActiveSet active_set;
    /// Rounds used by the distributed activation procedure (0 elsewhere).
    std::int32_t rounds = 0;
};

/// Distributed index-driven activation. Empty-queue users are passive.
/// Each round, every undecided user whose (index, id) is smallest among its
/// undecided neighbours becomes active and its undecided neighbours become
/// passive. Lower index transmits first; ties go to the smaller id.
PolicyDecision whittle_activation(std::span<const double> indices,
                                  std::span<const QueueState> states, const ConflictGraph& graph);

struct AlohaOutcome {
    ActiveSet attempts;   // charged energy
    ActiveSet successes;  // actually served
};

/// Each nonempty user attempts with probability p[i]; an attempt succeeds iff
/// no neighbour attempts in the same slot. Draws one uniform per user per
/// call so the stream advances identically regardless of queue contents.
AlohaOutcome aloha_select(std::span<const QueueState> states, const ConflictGraph& graph,
                          std::span<const double> p, Rng& rng);

/// p_i = 1 / (|N(i)| + 1).
std::vector<double> aloha_auto_probabilities(const ConflictGraph& graph);

enum class SetSelection { greedy, exact };
enum class MwsWeight { queue_length, queue_times_service };

std::string to_string(SetSelection s);
SetSelection set_selection_from_string(const std::string& s);
std::string to_string(MwsWeight w);
MwsWeight mws_weight_from_string(const std::string& s);

constexpr std::int32_t kDefaultExactCap = 40;

/// Independent set over users with positive weight. Greedy takes the heaviest
/// remaining user (ties to smaller id) and removes its neighbours; exact is a
/// branch-and-bound maximum-weight search limited to `exact_cap` users.
ActiveSet max_weight_independent_set(std::span<const double> weights, const ConflictGraph& graph,
                                     SetSelection mode, std::int32_t exact_cap = kDefaultExactCap);

PolicyDecision mws_select(std::span<const QueueState> states, std::span<const UserParams> params,
                          const ConflictGraph& graph, SetSelection mode,
                          MwsWeight weight = MwsWeight::queue_length,
                          std::int32_t exact_cap = kDefaultExactCap);

/// Drift-minus-penalty score s_i = X_i Z_i - theta f_i(Z_i); users with
/// s_i <= 0 stay idle.
double lyapunov_score(QueueState x, const UserParams& params, double theta);

PolicyDecision lyapunov_select(std::span<const QueueState> states,
                               std::span<const UserParams> params, const ConflictGraph& graph,
                               double theta, SetSelection mode,
                               std::int32_t exact_cap = kDefaultExactCap);

// ---------------------------------------------------------------------------
// Policy abstraction used by the simulation engine.

struct SlotContext {
    std::int64_t slot = 0;
    std::span<const QueueState> states;
    const ConflictGraph& graph;
    std::span<const UserParams> params;
};

struct SlotDecision {
    ActiveSet transmitting;  // pays energy
    ActiveSet served;        // queue is drained
    std::int32_t rounds = 0;
};

class SchedulingPolicy {
public:
    virtual ~SchedulingPolicy() = default;
    virtual std::string name() const = 0;
    virtual SlotDecision decide(const SlotContext& ctx) = 0;
    /// True when every decision must be an independent set.
    virtual bool independent() const { return true; }
    /// True when every decision must be maximal among nonempty queues.
    virtual bool maximal() const { return false; }
    virtual nlohmann::json diagnostics() const { return nlohmann::json::object(); }
};

/// Persistent per-user lambda updated every slot from the previous slot's
/// snapshot (users with empty queues keep their lambda). Throws
/// IndexDivergenceError once a lambda is no longer finite.
class NonStationaryWhittlePolicy final : public SchedulingPolicy {
public:
    NonStationaryWhittlePolicy(IndexVariant variant, double gamma,
                               std::shared_ptr<ThresholdSolutionCache> cache);
    std::string name() const override;
    SlotDecision decide(const SlotContext& ctx) override;
    bool maximal() const override { return true; }
    /// Largest |lambda| seen so far.
    nlohmann::json diagnostics() const override { return {{"max_abs_lambda", max_abs_lambda_}}; }
    const std::vector<double>& lambdas() const { return lambdas_; }

private:
    IndexVariant variant_;
    double gamma_;
    std::shared_ptr<ThresholdSolutionCache> cache_;
    std::vector<double> lambdas_;
    std::vector<double> snapshot_;
    double max_abs_lambda_ = 0.0;
};

class StationaryWhittlePolicy final : public SchedulingPolicy {
public:
    StationaryWhittlePolicy(IndexVariant variant, IndexTable table,
                            nlohmann::json diagnostics = nlohmann::json::object());
    std::string name() const override;
    SlotDecision decide(const SlotContext& ctx) override;
    bool maximal() const override { return true; }
    nlohmann::json diagnostics() const override { return diagnostics_; }

private:
    IndexVariant variant_;
    IndexTable table_;
    nlohmann::json diagnostics_;
    std::vector<double> indices_;
};

class AlohaPolicy final : public SchedulingPolicy {
public:
    AlohaPolicy(std::vector<double> probabilities, Rng rng);
    std::string name() const override { return "aloha"; }
    SlotDecision decide(const SlotContext& ctx) override;
    bool independent() const override { return false; }

private:
    std::vector<double> p_;
    Rng rng_;
};

class MwsPolicy final : public SchedulingPolicy {
public:
    MwsPolicy(SetSelection mode, MwsWeight weight, std::int32_t exact_cap);
    std::string name() const override { return "mws"; }
    SlotDecision decide(const SlotContext& ctx) override;

private:
    SetSelection mode_;
    MwsWeight weight_;
    std::int32_t exact_cap_;
};

class LyapunovPolicy final : public SchedulingPolicy {
public:
    LyapunovPolicy(double theta, SetSelection mode, std::int32_t exact_cap);
    std::string name() const override { return "lyapunov"; }
    SlotDecision decide(const SlotContext& ctx) override;

private:
    double theta_;
    SetSelection mode_;
    std::int32_t exact_cap_;
};

/// Plug-in point for schedulers defined elsewhere: receives (slot, states,
/// graph) and returns the users to activate. The result must be an
/// independent set of nonempty queues.
using DecisionProvider = std::function<ActiveSet(std::int64_t, std::span<const QueueState>,
                                                 const ConflictGraph&)>;

class ExternalPolicy final : public SchedulingPolicy {
public:
    ExternalPolicy(std::string name, DecisionProvider provider);
    std::string name() const override { return name_; }
    SlotDecision decide(const SlotContext& ctx) override;

private:
    std::string name_;
    DecisionProvider provider_;
};

/// Named external providers. "all_passive" is registered by default.
class ExternalPolicyRegistry {
public:
    static ExternalPolicyRegistry& instance();
    void add(const std::string& name, std::function<DecisionProvider()> factory);
    bool contains(const std::string& name) const;
    DecisionProvider make(const std::string& name) const;
    std::vector<std::string> names() const;

private:
    ExternalPolicyRegistry();
    std::vector<std::pair<std::string, std::function<DecisionProvider()>>> entries_;
};

}  // namespace wsched
