#include "wsched/cost_model.hpp"

#include <stdexcept>

namespace wsched {

SlotCost slot_cost(std::span<const QueueState> states, std::span<const std::uint8_t> actives,
                   std::span<const UserParams> params) {
    if (states.size() != actives.size() || states.size() != params.size())
        throw std::invalid_argument("slot_cost: inconsistent vector lengths");
    SlotCost c;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (actives[i]) c.energy += params[i].energy(service_amount(states[i], params[i]));
        c.holding += params[i].holding_coeff * static_cast<double>(states[i]);
    }
    c.total = c.energy + c.holding;
    return c;
}

double running_average(double accumulated, std::int64_t n_slots) {
    if (n_slots < 1) throw std::invalid_argument("running_average: n_slots must be >= 1");
    return accumulated / static_cast<double>(n_slots);
}

}  // namespace wsched
