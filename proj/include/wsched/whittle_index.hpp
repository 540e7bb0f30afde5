#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wsched/conflict_graph.hpp"
#include "wsched/poisson_solver.hpp"
#include "wsched/traffic_model.hpp"

namespace wsched {

/// A lambda iteration left the finite range. The update is not a
/// contraction in general, and on dense conflict graphs it can grow without
/// bound.
class IndexDivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Which quantity is subtracted inside the lambda update: the user's own
/// previous lambda (type1) or the sum over its closed neighbourhood (type2).
enum class IndexVariant { type1, type2 };

std::string to_string(IndexVariant v);

/// r = f(x ∧ Psi) - boxed + E[V(next | active)] - E[V(next | passive)].
/// Zero when transmitting and idling cost the same at queue length x.
double indifference_residual(QueueState x, std::span<const double> V, double boxed,
                             const UserParams& params, const ArrivalPmf& arrivals);
double indifference_residual(QueueState x, const PoissonSolution& sol, double boxed,
                             const UserParams& params);

/// Lambda^i = sum of lambda^j over j in N*(i).
double aggregate_tax(UserId user, std::span<const double> lambdas, const ConflictGraph& graph);

/// Lazily built threshold solutions for every (user, threshold) pair of one
/// parameter set. Not thread-safe; one per simulation run.
class ThresholdSolutionCache {
public:
    explicit ThresholdSolutionCache(std::vector<UserParams> params);

    const TaxParametricSolution& get(UserId user, QueueState threshold);
    const UserParams& params(UserId user) const { return params_[static_cast<std::size_t>(user)]; }
    const ArrivalPmf& arrivals(UserId user) const { return pmfs_[static_cast<std::size_t>(user)]; }
    std::int32_t num_users() const { return static_cast<std::int32_t>(params_.size()); }

private:
    std::vector<UserParams> params_;
    std::vector<ArrivalPmf> pmfs_;
    std::vector<std::vector<std::unique_ptr<TaxParametricSolution>>> solutions_;
};

/// One lambda step for `user` at queue length x >= 1: solve the threshold-x
/// system with tax sum_{N*(i)} lambdas_prev, then return
/// lambda_prev + gamma * r with the variant's boxed term.
double ns_update(UserId user, QueueState x, std::span<const double> lambdas_prev,
                 IndexVariant variant, const ConflictGraph& graph, const UserParams& params,
                 double gamma);
double ns_update(UserId user, QueueState x, std::span<const double> lambdas_prev,
                 IndexVariant variant, const ConflictGraph& graph, double gamma,
                 ThresholdSolutionCache& cache);

/// Per-user, per-state index lambda^i(x) for x in 1..M_i.
class IndexTable {
public:
    IndexTable() = default;
    explicit IndexTable(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {}

    double at(UserId user, QueueState x) const;
    double& at(UserId user, QueueState x);
    std::int32_t num_users() const { return static_cast<std::int32_t>(rows_.size()); }
    /// Largest state with an entry for this user (M_i).
    QueueState max_state(UserId user) const {
        return static_cast<QueueState>(rows_[static_cast<std::size_t>(user)].size());
    }
    bool operator==(const IndexTable&) const = default;

    /// [{user, state, lambda}, ...]
    nlohmann::json to_json() const;
    static IndexTable from_json(const nlohmann::json& j);

private:
    std::vector<std::vector<double>> rows_;  // rows_[i][x - 1]
};

struct StationaryIndexResult {
    IndexTable table;
    /// max |lambda_n - lambda_{n-1}| over all (user, state) for each sweep.
    std::vector<double> sweep_max_delta;
    /// Users whose final lambda(x) is neither nondecreasing nor nonincreasing.
    std::int32_t non_monotone_users = 0;

    nlohmann::json diagnostics() const;
};

/// Precomputes stationary index tables. All lambdas start at 0; each of the
/// n_iter Jacobi sweeps updates every (user, x) from the previous sweep,
/// reading neighbours at the same state index x (clamped to the
/// neighbour's buffer cap). Throws IndexDivergenceError when an entry stops
/// being finite.
StationaryIndexResult stationary_table(IndexVariant variant, const ConflictGraph& graph,
                                       std::span<const UserParams> params, double gamma,
                                       std::int32_t n_iter);
StationaryIndexResult stationary_table(IndexVariant variant, const ConflictGraph& graph,
                                       double gamma, std::int32_t n_iter,
                                       ThresholdSolutionCache& cache);

}  // namespace wsched
