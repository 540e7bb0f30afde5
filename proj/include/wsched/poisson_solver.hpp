#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wsched/traffic_model.hpp"

namespace wsched {

/// Raised when the Poisson system of a threshold policy cannot be solved
/// (singular matrix, typically a multi-chain arrival law such as xi == 0).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Poisson equation of the threshold policy "transmit iff y >= threshold"
/// for one user, in unknowns (V(0..M), beta).
///
/// Row y (0 <= y <= M):
///   active  (y >= threshold):  V(y) - E[V(next | active)]  + beta = C y + f(y ∧ Psi)
///   passive (y <  threshold):  V(y) - E[V(next | passive)] + beta = C y + tax
/// Row M+1 pins V(0) = 0. State 0 is passive whenever threshold >= 1, and
/// its row closes the system.
///
/// The tax only enters the right-hand side, so the matrix is kept apart from
/// the two right-hand side parts (tax-free and per-unit-tax).
struct ThresholdSystem {
    QueueState threshold = 0;
    double tax = 0.0;
    UserParams params;
    Eigen::MatrixXd matrix;
    Eigen::VectorXd rhs_base;
    Eigen::VectorXd rhs_per_tax;

    Eigen::Index dimension() const { return matrix.rows(); }
    Eigen::VectorXd rhs() const { return rhs_base + tax * rhs_per_tax; }
    bool is_active(QueueState y) const { return y >= threshold; }
};

struct PoissonSolution {
    std::vector<double> V;  // V[0] == 0
    double beta = 0.0;
};

ThresholdSystem assemble_system(QueueState threshold, double tax, const UserParams& params,
                                const ArrivalPmf& arrivals);
ThresholdSystem assemble_system(QueueState threshold, double tax, const UserParams& params);

/// Dense LU solve with partial pivoting. Throws SolverError on a singular
/// matrix or when the componentwise backward error exceeds 1e-9.
PoissonSolution solve(const ThresholdSystem& system);

/// max over rows of |lhs - rhs| / (1 + |rhs|).
double residual(const ThresholdSystem& system, const PoissonSolution& sol);

/// A threshold system factored once and solvable for any tax. Holds the
/// solutions for the tax-free and unit-tax right-hand sides; by linearity
/// the solution for tax L is base + L * per_tax.
class TaxParametricSolution {
public:
    TaxParametricSolution(QueueState threshold, const UserParams& params,
                          const ArrivalPmf& arrivals);

    PoissonSolution at(double tax) const;
    QueueState threshold() const { return threshold_; }

    /// V(s) at the given tax without materialising the whole vector.
    double value(QueueState s, double tax) const {
        return base_[s] + tax * per_tax_[s];
    }
    const Eigen::VectorXd& base() const { return base_; }
    const Eigen::VectorXd& per_tax() const { return per_tax_; }

private:
    QueueState threshold_;
    Eigen::VectorXd base_;     // (V, beta) at tax 0
    Eigen::VectorXd per_tax_;  // d(V, beta)/d tax
};

}  // namespace wsched
