#pragma once

#include <cstdint>
#include <span>

#include "wsched/traffic_model.hpp"

namespace wsched {

struct SlotCost {
    double energy = 0.0;
    double holding = 0.0;
    double total = 0.0;
};

/// Cost of one slot, charged on the pre-transition queue lengths
/// (actives[i] != 0 means user i transmitted):
/// energy = sum_i nu_i f_i(X_i ∧ Psi_i), holding = sum_i C_i X_i.
SlotCost slot_cost(std::span<const QueueState> states, std::span<const std::uint8_t> actives,
                   std::span<const UserParams> params);

/// accumulated / n_slots; rejects n_slots == 0.
double running_average(double accumulated, std::int64_t n_slots);

}  // namespace wsched
