#include "wsched/poisson_solver.hpp"

#include "wsched/hashing.hpp"

#include <cmath>

namespace wsched {
namespace {

constexpr double kResidualTolerance = 1e-9;
constexpr double kSingularRcond = 1e-13;

std::string describe(QueueState threshold, const UserParams& params) {
    return "threshold " + std::to_string(threshold) + ", M=" + std::to_string(params.buffer_cap) +
           ", cap=" + (params.tx_cap ? std::to_string(*params.tx_cap) : std::string("unbounded")) +
           ", arrival mean " + format_double(params.arrival_mean);
}

Eigen::PartialPivLU<Eigen::MatrixXd> factor(const ThresholdSystem& system) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system.matrix);
    const double rcond = lu.rcond();
    if (!(rcond > kSingularRcond))
        throw SolverError("singular Poisson system (" + describe(system.threshold, system.params) +
                          ", rcond " + std::to_string(rcond) + ")");
    return lu;
}

/// max_r |(A x - b)_r| / (1 + |b_r|); NaN propagates.
double max_relative_residual(const Eigen::MatrixXd& a, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& b) {
    const Eigen::VectorXd lhs = a * x;
    double worst = 0.0;
    for (Eigen::Index r = 0; r < b.size(); ++r) {
        const double rel = std::abs(lhs[r] - b[r]) / (1.0 + std::abs(b[r]));
        if (!(rel <= worst)) worst = rel;
    }
    return worst;
}

/// Singularity guard: componentwise backward error
/// max_r |(A x - b)_r| / ((|A| |x| + |b|)_r). Unlike the per-row relative
/// residual it stays at rounding level when V grows large at big buffers.
double backward_error(const Eigen::MatrixXd& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
    const Eigen::VectorXd err = (a * x - b).cwiseAbs();
    const Eigen::VectorXd scale = a.cwiseAbs() * x.cwiseAbs() + b.cwiseAbs();
    double worst = 0.0;
    for (Eigen::Index r = 0; r < b.size(); ++r) {
        const double e = scale[r] > 0.0 ? err[r] / scale[r] : err[r];
        if (!(e <= worst)) worst = e;
    }
    return worst;
}

/// LU solve followed by up to two steps of iterative refinement.
Eigen::VectorXd refined_solve(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu, const Eigen::MatrixXd& a,
                              const Eigen::VectorXd& b) {
    Eigen::VectorXd x = lu.solve(b);
    for (int step = 0; step < 2 && backward_error(a, x, b) >= 1e-14; ++step) x += lu.solve(b - a * x);
    return x;
}

PoissonSolution unpack(const Eigen::VectorXd& x) {
    const auto m = x.size() - 1;
    PoissonSolution sol;
    sol.V.assign(x.data(), x.data() + m);
    sol.V[0] = 0.0;
    sol.beta = x[m];
    return sol;
}

}  // namespace

ThresholdSystem assemble_system(QueueState threshold, double tax, const UserParams& params,
                                const ArrivalPmf& arrivals) {
    if (threshold < 0 || threshold > params.buffer_cap)
        throw std::invalid_argument("assemble_system: threshold outside 0..M");
    if (!std::isfinite(tax)) throw std::invalid_argument("assemble_system: tax must be finite");

    const QueueState cap = params.buffer_cap;
    const Eigen::Index n = cap + 2;
    const Eigen::Index beta_col = cap + 1;

    ThresholdSystem sys;
    sys.threshold = threshold;
    sys.tax = tax;
    sys.params = params;
    sys.matrix = Eigen::MatrixXd::Zero(n, n);
    sys.rhs_base = Eigen::VectorXd::Zero(n);
    sys.rhs_per_tax = Eigen::VectorXd::Zero(n);

    for (QueueState y = 0; y <= cap; ++y) {
        const bool active = sys.is_active(y);
        sys.matrix(y, y) += 1.0;
        const StatePmf next = next_state_pmf(y, active, params, arrivals);
        for (std::size_t k = 0; k < next.states.size(); ++k)
            sys.matrix(y, next.states[k]) -= next.probs[k];
        sys.matrix(y, beta_col) = 1.0;
        sys.rhs_base[y] = params.holding_coeff * static_cast<double>(y);
        if (active)
            sys.rhs_base[y] += params.energy(service_amount(y, params));
        else
            sys.rhs_per_tax[y] = 1.0;
    }
    sys.matrix(cap + 1, 0) = 1.0;  // V(0) = 0
    return sys;
}

ThresholdSystem assemble_system(QueueState threshold, double tax, const UserParams& params) {
    return assemble_system(threshold, tax, params, ArrivalPmf::for_user(params));
}

PoissonSolution solve(const ThresholdSystem& system) {
    const auto lu = factor(system);
    const Eigen::VectorXd b = system.rhs();
    Eigen::VectorXd x = refined_solve(lu, system.matrix, b);
    x[0] = 0.0;
    const double res = backward_error(system.matrix, x, b);
    if (!(res < kResidualTolerance))
        throw SolverError("Poisson solve residual " + format_double(res) + " above tolerance (" +
                          describe(system.threshold, system.params) + ")");
    return unpack(x);
}

double residual(const ThresholdSystem& system, const PoissonSolution& sol) {
    const auto n = system.dimension();
    if (static_cast<Eigen::Index>(sol.V.size()) + 1 != n)
        throw std::invalid_argument("residual: solution dimension mismatch");
    Eigen::VectorXd x(n);
    for (Eigen::Index s = 0; s + 1 < n; ++s) x[s] = sol.V[static_cast<std::size_t>(s)];
    x[n - 1] = sol.beta;
    return max_relative_residual(system.matrix, x, system.rhs());
}

TaxParametricSolution::TaxParametricSolution(QueueState threshold, const UserParams& params,
                                             const ArrivalPmf& arrivals)
    : threshold_(threshold) {
    const ThresholdSystem sys = assemble_system(threshold, 0.0, params, arrivals);
    const auto lu = factor(sys);
    base_ = refined_solve(lu, sys.matrix, sys.rhs_base);
    per_tax_ = refined_solve(lu, sys.matrix, sys.rhs_per_tax);
    base_[0] = 0.0;
    per_tax_[0] = 0.0;
    const double res = std::max(backward_error(sys.matrix, base_, sys.rhs_base),
                                backward_error(sys.matrix, per_tax_, sys.rhs_per_tax));
    if (!(res < kResidualTolerance))
        throw SolverError("Poisson solve residual " + format_double(res) + " above tolerance (" +
                          describe(threshold, params) + ")");
}

PoissonSolution TaxParametricSolution::at(double tax) const {
    return unpack(base_ + tax * per_tax_);
}

}  // namespace wsched
