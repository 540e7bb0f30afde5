#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "wsched/conflict_graph.hpp"
#include "wsched/cost_model.hpp"
#include "wsched/hashing.hpp"
#include "wsched/scheduling_policies.hpp"
#include "wsched/traffic_model.hpp"

namespace wsched {

struct SlotRecord {
    std::int64_t slot = 0;
    ActiveSet transmitting;
    ActiveSet served_set;
    std::vector<QueueState> queue;  // pre-transition X_n
    std::vector<std::int32_t> arrived;
    std::vector<std::int32_t> served;
    std::vector<std::int32_t> dropped;
    SlotCost cost;
};

struct Metrics {
    double avg_cost = 0.0;
    double avg_energy = 0.0;
    double avg_holding = 0.0;
    double avg_drops = 0.0;
    double avg_throughput = 0.0;
    std::int64_t n_slots = 0;     // slots simulated
    std::int64_t n_averaged = 0;  // slots after burn-in
    /// Slots where X' != X - served + arrived - dropped for some user.
    std::int64_t conservation_violations = 0;
    /// Slots where the policy's decision broke its independence or
    /// maximality contract, or included an empty queue.
    std::int64_t decision_violations = 0;
    /// Hash of every user's arrival sequence; equal across policies under
    /// common random numbers.
    std::string arrivals_hash;
    std::vector<SlotRecord> trace;
};

struct SimulationInput {
    ConflictGraph graph;
    /// Parameters governing queue dynamics and costs for this run.
    std::vector<UserParams> params;
    std::vector<QueueState> initial_queue;  // empty means all zero
    std::int64_t n_slots = 10000;
    std::int64_t burn_in = 0;
    std::uint64_t seed = 1;
    bool record_trace = false;
};

/// One simulation run. Each user draws arrivals from its own stream derived
/// from (seed, user), independent of the policy.
class Simulation {
public:
    Simulation(SimulationInput input, std::unique_ptr<SchedulingPolicy> policy);

    /// Index updates and decision (inside the policy), then arrivals, queue
    /// step and cost accounting on the pre-transition state.
    SlotRecord run_slot();

    const std::vector<QueueState>& queue() const { return queue_; }
    std::int64_t slot() const { return slot_; }
    const SchedulingPolicy& policy() const { return *policy_; }

    /// Runs the remaining slots and returns the averages.
    Metrics run();

private:
    void check_decision(const SlotDecision& d);

    SimulationInput input_;
    std::unique_ptr<SchedulingPolicy> policy_;
    std::vector<ArrivalSampler> samplers_;
    std::vector<QueueState> queue_;
    std::int64_t slot_ = 0;

    double sum_energy_ = 0.0;
    double sum_holding_ = 0.0;
    double sum_total_ = 0.0;
    double sum_drops_ = 0.0;
    double sum_served_ = 0.0;
    std::int64_t conservation_violations_ = 0;
    std::int64_t decision_violations_ = 0;
    std::vector<Fnv1a> arrival_hashes_;
    std::vector<SlotRecord> trace_;
};

Metrics run_simulation(SimulationInput input, std::unique_ptr<SchedulingPolicy> policy);

}  // namespace wsched
