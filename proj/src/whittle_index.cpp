#include "wsched/whittle_index.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wsched {
namespace {

struct TaxedValues {
    const TaxParametricSolution& solution;
    double tax;
    double operator[](QueueState s) const { return solution.value(s, tax); }
};

template <typename Values>
double residual_impl(QueueState x, const Values& V, double boxed, const UserParams& params,
                     const ArrivalPmf& arrivals) {
    if (x < 1 || x > params.buffer_cap)
        throw std::invalid_argument("indifference_residual: state must be in 1..M");
    const double active_next = expected_next(x, true, params, arrivals, V);
    const double passive_next = expected_next(x, false, params, arrivals, V);
    return params.energy(service_amount(x, params)) - boxed + (active_next - passive_next);
}

double boxed_term(IndexVariant variant, UserId user, std::span<const double> lambdas,
                  double tax) {
    return variant == IndexVariant::type1 ? lambdas[static_cast<std::size_t>(user)] : tax;
}

}  // namespace

std::string to_string(IndexVariant v) { return v == IndexVariant::type1 ? "type1" : "type2"; }

double indifference_residual(QueueState x, std::span<const double> V, double boxed,
                             const UserParams& params, const ArrivalPmf& arrivals) {
    if (static_cast<QueueState>(V.size()) != params.buffer_cap + 1)
        throw std::invalid_argument("indifference_residual: V must cover states 0..M");
    return residual_impl(x, V, boxed, params, arrivals);
}

double indifference_residual(QueueState x, const PoissonSolution& sol, double boxed,
                             const UserParams& params) {
    return indifference_residual(x, sol.V, boxed, params, ArrivalPmf::for_user(params));
}

double aggregate_tax(UserId user, std::span<const double> lambdas, const ConflictGraph& graph) {
    if (static_cast<std::int32_t>(lambdas.size()) != graph.num_users())
        throw std::invalid_argument("aggregate_tax: lambda snapshot does not cover all users");
    double tax = lambdas[static_cast<std::size_t>(user)];
    for (UserId j : graph.neighbors(user)) tax += lambdas[static_cast<std::size_t>(j)];
    return tax;
}

ThresholdSolutionCache::ThresholdSolutionCache(std::vector<UserParams> params)
    : params_(std::move(params)) {
    pmfs_.reserve(params_.size());
    solutions_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        params_[i].validate();
        pmfs_.push_back(ArrivalPmf::for_user(params_[i]));
        solutions_[i].resize(static_cast<std::size_t>(params_[i].buffer_cap) + 1);
    }
}

const TaxParametricSolution& ThresholdSolutionCache::get(UserId user, QueueState threshold) {
    auto& slots = solutions_.at(static_cast<std::size_t>(user));
    auto& slot = slots.at(static_cast<std::size_t>(threshold));
    if (!slot) {
        slot = std::make_unique<TaxParametricSolution>(threshold, params(user), arrivals(user));
    }
    return *slot;
}

double ns_update(UserId user, QueueState x, std::span<const double> lambdas_prev,
                 IndexVariant variant, const ConflictGraph& graph, double gamma,
                 ThresholdSolutionCache& cache) {
    const double tax = aggregate_tax(user, lambdas_prev, graph);
    const TaxParametricSolution& sol = cache.get(user, x);
    const double r = residual_impl(x, TaxedValues{sol, tax}, boxed_term(variant, user, lambdas_prev, tax),
                                   cache.params(user), cache.arrivals(user));
    return lambdas_prev[static_cast<std::size_t>(user)] + gamma * r;
}

double ns_update(UserId user, QueueState x, std::span<const double> lambdas_prev,
                 IndexVariant variant, const ConflictGraph& graph, const UserParams& params,
                 double gamma) {
    const double tax = aggregate_tax(user, lambdas_prev, graph);
    const ArrivalPmf pmf = ArrivalPmf::for_user(params);
    const PoissonSolution sol = solve(assemble_system(x, tax, params, pmf));
    const double r = indifference_residual(x, sol.V, boxed_term(variant, user, lambdas_prev, tax),
                                           params, pmf);
    return lambdas_prev[static_cast<std::size_t>(user)] + gamma * r;
}

double IndexTable::at(UserId user, QueueState x) const {
    const auto& row = rows_.at(static_cast<std::size_t>(user));
    if (x < 1 || x > static_cast<QueueState>(row.size()))
        throw std::out_of_range("index table: state " + std::to_string(x) + " has no index");
    return row[static_cast<std::size_t>(x - 1)];
}

double& IndexTable::at(UserId user, QueueState x) {
    auto& row = rows_.at(static_cast<std::size_t>(user));
    if (x < 1 || x > static_cast<QueueState>(row.size()))
        throw std::out_of_range("index table: state " + std::to_string(x) + " has no index");
    return row[static_cast<std::size_t>(x - 1)];
}

nlohmann::json IndexTable::to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < rows_.size(); ++i)
        for (std::size_t s = 0; s < rows_[i].size(); ++s)
            out.push_back({{"user", i}, {"state", s + 1}, {"lambda", rows_[i][s]}});
    return out;
}

IndexTable IndexTable::from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw std::invalid_argument("index table: expected an array");
    std::vector<std::vector<double>> rows;
    for (const auto& e : j) {
        const auto user = e.at("user").get<std::size_t>();
        const auto state = e.at("state").get<std::size_t>();
        if (state < 1) throw std::invalid_argument("index table: state 0 has no index");
        if (rows.size() <= user) rows.resize(user + 1);
        if (rows[user].size() < state) rows[user].resize(state, std::nan(""));
        rows[user][state - 1] = e.at("lambda").get<double>();
    }
    for (const auto& row : rows)
        for (double v : row)
            if (std::isnan(v)) throw std::invalid_argument("index table: missing entry");
    return IndexTable(std::move(rows));
}

nlohmann::json StationaryIndexResult::diagnostics() const {
    return {{"sweep_max_delta", sweep_max_delta}, {"non_monotone_users", non_monotone_users}};
}

StationaryIndexResult stationary_table(IndexVariant variant, const ConflictGraph& graph,
                                       double gamma, std::int32_t n_iter,
                                       ThresholdSolutionCache& cache) {
    if (n_iter < 1) throw std::invalid_argument("stationary_table: n_iter must be >= 1");
    if (!(gamma > 0.0)) throw std::invalid_argument("stationary_table: gamma must be > 0");
    const std::int32_t users = graph.num_users();
    if (cache.num_users() != users)
        throw std::invalid_argument("stationary_table: params do not cover all users");

    std::vector<std::vector<double>> prev(static_cast<std::size_t>(users));
    for (UserId i = 0; i < users; ++i)
        prev[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(cache.params(i).buffer_cap), 0.0);
    auto next = prev;

    auto read = [&](UserId j, QueueState x) {
        const auto& row = prev[static_cast<std::size_t>(j)];
        return row[static_cast<std::size_t>(std::min<QueueState>(x, static_cast<QueueState>(row.size())) - 1)];
    };

    StationaryIndexResult result;
    result.sweep_max_delta.reserve(static_cast<std::size_t>(n_iter));
    for (std::int32_t sweep = 1; sweep <= n_iter; ++sweep) {
        double max_delta = 0.0;
        for (UserId i = 0; i < users; ++i) {
            const UserParams& p = cache.params(i);
            for (QueueState x = 1; x <= p.buffer_cap; ++x) {
                const double own = read(i, x);
                double tax = own;
                for (UserId j : graph.neighbors(i)) tax += read(j, x);
                const double boxed = variant == IndexVariant::type1 ? own : tax;
                double r = 0.0;
                try {
                    const TaxParametricSolution& sol = cache.get(i, x);
                    r = residual_impl(x, TaxedValues{sol, tax}, boxed, p, cache.arrivals(i));
                } catch (const SolverError& e) {
                    throw SolverError("stationary index (user " + std::to_string(i) + ", state " +
                                      std::to_string(x) + ", sweep " + std::to_string(sweep) +
                                      "): " + e.what());
                }
                const double updated = own + gamma * r;
                if (!std::isfinite(updated))
                    throw IndexDivergenceError("stationary index (user " + std::to_string(i) + ", state " +
                                               std::to_string(x) + ", sweep " + std::to_string(sweep) +
                                               ") is no longer finite");
                next[static_cast<std::size_t>(i)][static_cast<std::size_t>(x - 1)] = updated;
                max_delta = std::max(max_delta, std::abs(updated - own));
            }
        }
        std::swap(prev, next);
        result.sweep_max_delta.push_back(max_delta);
    }

    for (const auto& row : prev) {
        bool up = true;
        bool down = true;
        for (std::size_t s = 1; s < row.size(); ++s) {
            if (row[s] < row[s - 1]) up = false;
            if (row[s] > row[s - 1]) down = false;
        }
        if (!up && !down) ++result.non_monotone_users;
    }
    result.table = IndexTable(std::move(prev));
    return result;
}

StationaryIndexResult stationary_table(IndexVariant variant, const ConflictGraph& graph,
                                       std::span<const UserParams> params, double gamma,
                                       std::int32_t n_iter) {
    ThresholdSolutionCache cache(std::vector<UserParams>(params.begin(), params.end()));
    return stationary_table(variant, graph, gamma, n_iter, cache);
}

}  // namespace wsched
