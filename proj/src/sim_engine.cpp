#include "wsched/sim_engine.hpp"

#include <algorithm>
#include <stdexcept>

#include "wsched/rng.hpp"

namespace wsched {

Simulation::Simulation(SimulationInput input, std::unique_ptr<SchedulingPolicy> policy)
    : input_(std::move(input)), policy_(std::move(policy)) {
    if (!policy_) throw std::invalid_argument("simulation needs a policy");
    const auto n = static_cast<std::size_t>(input_.graph.num_users());
    if (input_.params.size() != n) throw std::invalid_argument("params do not cover all users");
    if (input_.n_slots < 1) throw std::invalid_argument("n_slots must be >= 1");
    if (input_.burn_in < 0 || input_.burn_in >= input_.n_slots)
        throw std::invalid_argument("burn_in must be in [0, n_slots)");
    for (const auto& p : input_.params) p.validate();

    queue_ = input_.initial_queue.empty() ? std::vector<QueueState>(n, 0) : input_.initial_queue;
    if (queue_.size() != n) throw std::invalid_argument("initial queue does not cover all users");
    for (std::size_t i = 0; i < n; ++i)
        if (queue_[i] < 0 || queue_[i] > input_.params[i].buffer_cap)
            throw std::invalid_argument("initial queue outside 0..M");

    samplers_.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        samplers_.emplace_back(input_.params[i], make_stream(input_.seed, StreamTag::arrivals, i));
    arrival_hashes_.resize(n);
}

void Simulation::check_decision(const SlotDecision& d) {
    const auto& g = input_.graph;
    bool ok = std::all_of(d.transmitting.begin(), d.transmitting.end(),
                          [&](UserId i) { return queue_[static_cast<std::size_t>(i)] > 0; });
    ok = ok && std::includes(d.transmitting.begin(), d.transmitting.end(), d.served.begin(),
                             d.served.end());
    ok = ok && g.is_independent_set(d.served);
    if (policy_->independent()) ok = ok && g.is_independent_set(d.transmitting);
    if (policy_->maximal()) {
        std::vector<UserId> eligible;
        for (UserId i = 0; i < g.num_users(); ++i)
            if (queue_[static_cast<std::size_t>(i)] > 0) eligible.push_back(i);
        ok = ok && g.is_maximal_independent_set(d.transmitting, eligible);
    }
    if (!ok) ++decision_violations_;
}

SlotRecord Simulation::run_slot() {
    const auto n = queue_.size();
    const SlotContext ctx{slot_, queue_, input_.graph, input_.params};
    SlotDecision d = policy_->decide(ctx);
    check_decision(d);

    std::vector<std::uint8_t> transmitting(n, 0);
    std::vector<std::uint8_t> served_flag(n, 0);
    for (UserId i : d.transmitting) transmitting[static_cast<std::size_t>(i)] = 1;
    for (UserId i : d.served) served_flag[static_cast<std::size_t>(i)] = 1;

    SlotRecord rec;
    rec.slot = slot_;
    rec.queue = queue_;
    rec.cost = slot_cost(queue_, transmitting, input_.params);
    rec.arrived.resize(n);
    rec.served.resize(n);
    rec.dropped.resize(n);

    bool conserved = true;
    for (std::size_t i = 0; i < n; ++i) {
        const std::int32_t arrivals = samplers_[i]();
        arrival_hashes_[i].update_u64(static_cast<std::uint64_t>(arrivals));
        const QueueTransition t = queue_step(queue_[i], served_flag[i] != 0, arrivals, input_.params[i]);
        if (t.next != queue_[i] - t.served + arrivals - t.dropped || t.next < 0 ||
            t.next > input_.params[i].buffer_cap)
            conserved = false;
        rec.arrived[i] = arrivals;
        rec.served[i] = t.served;
        rec.dropped[i] = t.dropped;
        queue_[i] = t.next;
    }
    if (!conserved) ++conservation_violations_;

    if (slot_ >= input_.burn_in) {
        sum_energy_ += rec.cost.energy;
        sum_holding_ += rec.cost.holding;
        sum_total_ += rec.cost.total;
        for (std::size_t i = 0; i < n; ++i) {
            sum_drops_ += rec.dropped[i];
            sum_served_ += rec.served[i];
        }
    }
    rec.transmitting = std::move(d.transmitting);
    rec.served_set = std::move(d.served);
    ++slot_;
    if (input_.record_trace) trace_.push_back(rec);
    return rec;
}

Metrics Simulation::run() {
    while (slot_ < input_.n_slots) run_slot();
    Metrics m;
    m.n_slots = slot_;
    m.n_averaged = slot_ - input_.burn_in;
    m.avg_cost = running_average(sum_total_, m.n_averaged);
    m.avg_energy = running_average(sum_energy_, m.n_averaged);
    m.avg_holding = running_average(sum_holding_, m.n_averaged);
    m.avg_drops = running_average(sum_drops_, m.n_averaged);
    m.avg_throughput = running_average(sum_served_, m.n_averaged);
    m.conservation_violations = conservation_violations_;
    m.decision_violations = decision_violations_;
    Fnv1a all;
    for (const auto& h : arrival_hashes_) all.update_u64(h.digest());
    m.arrivals_hash = all.hex();
    m.trace = std::move(trace_);
    return m;
}

Metrics run_simulation(SimulationInput input, std::unique_ptr<SchedulingPolicy> policy) {
    Simulation sim(std::move(input), std::move(policy));
    return sim.run();
}

}  // namespace wsched
