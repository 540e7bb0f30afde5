#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wsched/rng.hpp"

namespace wsched {

/// Queue length in packets, 0 <= x <= buffer cap.
using QueueState = std::int32_t;

/// Energy cost f(z) of transmitting z packets. Nondecreasing with f(0) = 0.
struct EnergyFunction {
    enum class Kind { linear, quadratic };
    Kind kind = Kind::linear;
    double coeff = 1.0;

    double operator()(std::int32_t z) const {
        const double dz = static_cast<double>(z);
        return kind == Kind::linear ? coeff * dz : coeff * dz * dz;
    }
    bool operator==(const EnergyFunction&) const = default;
};

std::string to_string(EnergyFunction::Kind k);
EnergyFunction::Kind energy_kind_from_string(const std::string& s);

/// Per-slot transmission cap. std::nullopt means unbounded: an active user
/// empties its whole queue.
using TxCap = std::optional<std::int32_t>;

struct UserParams {
    std::int32_t buffer_cap = 100;  // M
    TxCap tx_cap;                   // Psi
    double arrival_mean = 1.0;      // l
    double holding_coeff = 1.0;     // C
    EnergyFunction energy;
    /// Explicit arrival pmf over 0..K; empty means Poisson(arrival_mean).
    std::vector<double> arrival_pmf;

    bool operator==(const UserParams&) const = default;

    /// Throws std::invalid_argument when an invariant is broken.
    void validate() const;
};

/// Arrival count distribution truncated at K, where entry K carries the
/// folded tail mass P(xi >= K).
class ArrivalPmf {
public:
    /// Poisson(mean) folded at max_count.
    static ArrivalPmf poisson(double mean, std::int32_t max_count);
    /// Explicit masses; normalised to sum 1. Entries past max_count are
    /// folded into max_count.
    static ArrivalPmf from_masses(std::vector<double> masses, std::int32_t max_count);
    /// The folded pmf a user's next-state computations use (K = buffer cap).
    static ArrivalPmf for_user(const UserParams& params);

    std::int32_t max_count() const { return static_cast<std::int32_t>(mass_.size()) - 1; }
    double at(std::int32_t k) const;
    /// P(xi >= k).
    double tail_from(std::int32_t k) const;
    const std::vector<double>& masses() const { return mass_; }

private:
    explicit ArrivalPmf(std::vector<double> mass);
    std::vector<double> mass_;
    std::vector<double> tail_;  // tail_[k] = sum_{m >= k} mass_[m]
};

/// Z = min(x, Psi).
inline std::int32_t service_amount(QueueState x, const UserParams& params) {
    return params.tx_cap && *params.tx_cap < x ? *params.tx_cap : x;
}

struct QueueTransition {
    QueueState next = 0;
    std::int32_t dropped = 0;
    std::int32_t served = 0;
};

/// One slot of X' = [X - nu (X ∧ Psi) + xi] ∧ M with drop accounting.
QueueTransition queue_step(QueueState x, bool active, std::int32_t arrivals,
                           const UserParams& params);

/// Sparse next-state distribution: states[k] has probability probs[k].
struct StatePmf {
    std::vector<QueueState> states;
    std::vector<double> probs;
};

/// Exact distribution of [x - nu (x ∧ Psi) + xi] ∧ M.
StatePmf next_state_pmf(QueueState x, bool active, const UserParams& params,
                        const ArrivalPmf& arrivals);
StatePmf next_state_pmf(QueueState x, bool active, const UserParams& params);

/// Expectation of `values[next]` over next_state_pmf without materialising it.
template <typename Values>
double expected_next(QueueState x, bool active, const UserParams& params,
                     const ArrivalPmf& arrivals, const Values& values) {
    const std::int32_t base = x - (active ? service_amount(x, params) : 0);
    const std::int32_t cap = params.buffer_cap;
    double acc = 0.0;
    for (std::int32_t k = 0; base + k < cap; ++k) acc += arrivals.at(k) * values[base + k];
    acc += arrivals.tail_from(cap - base) * values[cap];
    return acc;
}

/// Per-user arrival stream. Poisson users draw exact Poisson variates;
/// explicit-pmf users draw from the pmf.
class ArrivalSampler {
public:
    ArrivalSampler(const UserParams& params, Rng rng);
    std::int32_t operator()();

private:
    Rng rng_;
    std::optional<std::poisson_distribution<std::int32_t>> poisson_;
    std::optional<std::discrete_distribution<std::int32_t>> discrete_;
};

/// Single Poisson variate with mean l from the given stream.
std::int32_t sample_arrivals(double mean, Rng& rng);

}  // namespace wsched
