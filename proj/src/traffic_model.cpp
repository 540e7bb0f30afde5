#include "wsched/traffic_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace wsched {

std::string to_string(EnergyFunction::Kind k) {
    return k == EnergyFunction::Kind::linear ? "linear" : "quadratic";
}

EnergyFunction::Kind energy_kind_from_string(const std::string& s) {
    if (s == "linear") return EnergyFunction::Kind::linear;
    if (s == "quadratic") return EnergyFunction::Kind::quadratic;
    throw std::invalid_argument("unknown energy function kind '" + s + "'");
}

void UserParams::validate() const {
    if (buffer_cap < 1) throw std::invalid_argument("buffer_cap must be >= 1");
    if (tx_cap && *tx_cap < 1) throw std::invalid_argument("tx_cap must be >= 1 or unbounded");
    if (!(holding_coeff >= 0.0)) throw std::invalid_argument("holding_coeff must be >= 0");
    if (!(energy.coeff >= 0.0)) throw std::invalid_argument("energy coeff must be >= 0");
    if (arrival_pmf.empty()) {
        if (!(arrival_mean > 0.0) || !std::isfinite(arrival_mean))
            throw std::invalid_argument("arrival_mean must be > 0");
    } else {
        double total = 0.0;
        for (double m : arrival_pmf) {
            if (!(m >= 0.0)) throw std::invalid_argument("arrival pmf entries must be >= 0");
            total += m;
        }
        if (!(total > 0.0)) throw std::invalid_argument("arrival pmf has zero total mass");
    }
}

ArrivalPmf::ArrivalPmf(std::vector<double> mass) : mass_(std::move(mass)) {
    tail_.assign(mass_.size() + 1, 0.0);
    for (std::size_t k = mass_.size(); k-- > 0;) tail_[k] = tail_[k + 1] + mass_[k];
}

ArrivalPmf ArrivalPmf::poisson(double mean, std::int32_t max_count) {
    if (!(mean > 0.0)) throw std::invalid_argument("poisson mean must be > 0");
    if (max_count < 0) throw std::invalid_argument("max_count must be >= 0");
    std::vector<double> mass(static_cast<std::size_t>(max_count) + 1, 0.0);
    double head = 0.0;
    const double log_mean = std::log(mean);
    for (std::int32_t k = 0; k < max_count; ++k) {
        const double kk = static_cast<double>(k);
        mass[static_cast<std::size_t>(k)] = std::exp(kk * log_mean - mean - std::lgamma(kk + 1.0));
        head += mass[static_cast<std::size_t>(k)];
    }
    mass[static_cast<std::size_t>(max_count)] = std::max(0.0, 1.0 - head);
    return ArrivalPmf(std::move(mass));
}

ArrivalPmf ArrivalPmf::from_masses(std::vector<double> masses, std::int32_t max_count) {
    if (masses.empty()) throw std::invalid_argument("empty arrival pmf");
    if (max_count < 0) throw std::invalid_argument("max_count must be >= 0");
    const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
    if (!(total > 0.0)) throw std::invalid_argument("arrival pmf has zero total mass");
    std::vector<double> mass(static_cast<std::size_t>(max_count) + 1, 0.0);
    for (std::size_t k = 0; k < masses.size(); ++k) {
        if (masses[k] < 0.0) throw std::invalid_argument("negative arrival mass");
        const auto slot = std::min(k, static_cast<std::size_t>(max_count));
        mass[slot] += masses[k] / total;
    }
    return ArrivalPmf(std::move(mass));
}

ArrivalPmf ArrivalPmf::for_user(const UserParams& params) {
    if (params.arrival_pmf.empty()) return poisson(params.arrival_mean, params.buffer_cap);
    return from_masses(params.arrival_pmf, params.buffer_cap);
}

double ArrivalPmf::at(std::int32_t k) const {
    if (k < 0 || k > max_count()) return 0.0;
    return mass_[static_cast<std::size_t>(k)];
}

double ArrivalPmf::tail_from(std::int32_t k) const {
    if (k <= 0) return 1.0;
    if (k > max_count()) return 0.0;
    return tail_[static_cast<std::size_t>(k)];
}

QueueTransition queue_step(QueueState x, bool active, std::int32_t arrivals,
                           const UserParams& params) {
    QueueTransition t;
    t.served = active ? service_amount(x, params) : 0;
    const std::int32_t unclipped = x - t.served + arrivals;
    t.next = std::min(unclipped, params.buffer_cap);
    t.dropped = std::max(0, unclipped - params.buffer_cap);
    return t;
}

StatePmf next_state_pmf(QueueState x, bool active, const UserParams& params,
                        const ArrivalPmf& arrivals) {
    const std::int32_t base = x - (active ? service_amount(x, params) : 0);
    const std::int32_t cap = params.buffer_cap;
    StatePmf out;
    for (std::int32_t k = 0; base + k < cap; ++k) {
        out.states.push_back(base + k);
        out.probs.push_back(arrivals.at(k));
    }
    out.states.push_back(cap);
    out.probs.push_back(arrivals.tail_from(cap - base));
    return out;
}

StatePmf next_state_pmf(QueueState x, bool active, const UserParams& params) {
    return next_state_pmf(x, active, params, ArrivalPmf::for_user(params));
}

ArrivalSampler::ArrivalSampler(const UserParams& params, Rng rng) : rng_(std::move(rng)) {
    if (params.arrival_pmf.empty())
        poisson_.emplace(params.arrival_mean);
    else
        discrete_.emplace(params.arrival_pmf.begin(), params.arrival_pmf.end());
}

std::int32_t ArrivalSampler::operator()() {
    return poisson_ ? (*poisson_)(rng_) : (*discrete_)(rng_);
}

std::int32_t sample_arrivals(double mean, Rng& rng) {
    if (!(mean > 0.0)) throw std::invalid_argument("arrival mean must be > 0");
    std::poisson_distribution<std::int32_t> dist(mean);
    return dist(rng);
}

}  // namespace wsched
