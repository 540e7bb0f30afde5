#pragma once

// Independent reference computations for tests. Nothing here calls into the
// library's solver, pmf folding, or activation code.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

/// Small single-user queue model, parameterised directly.
struct Queue {
    int M = 1;
    std::optional<int> psi;                // nullopt: unbounded
    std::vector<double> arrivals;          // untruncated-enough pmf over 0..K
    double C = 1.0;
    std::function<double(int)> f = [](int z) { return static_cast<double>(z); };

    int serve(int x) const { return psi && *psi < x ? *psi : x; }
};

/// Poisson pmf by recurrence over 0..kmax (kmax well past the buffer).
inline std::vector<double> poisson_pmf(double mean, int kmax) {
    std::vector<double> p(static_cast<std::size_t>(kmax) + 1);
    p[0] = std::exp(-mean);
    for (int k = 1; k <= kmax; ++k) p[static_cast<std::size_t>(k)] = p[static_cast<std::size_t>(k - 1)] * mean / k;
    return p;
}

/// Row-stochastic transition matrix of the threshold policy, built by
/// enumerating every arrival count and clamping at M.
inline std::vector<std::vector<double>> threshold_chain(const Queue& q, int threshold) {
    const int n = q.M + 1;
    std::vector<std::vector<double>> P(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int s = 0; s < n; ++s) {
        const bool active = s >= threshold;
        const int base = s - (active ? q.serve(s) : 0);
        double covered = 0.0;
        for (std::size_t k = 0; k < q.arrivals.size(); ++k) {
            int next = base + static_cast<int>(k);
            if (next > q.M) next = q.M;
            P[static_cast<std::size_t>(s)][static_cast<std::size_t>(next)] += q.arrivals[k];
            covered += q.arrivals[k];
        }
        // remaining tail (beyond the listed counts) lands on M
        P[static_cast<std::size_t>(s)][static_cast<std::size_t>(q.M)] += 1.0 - covered;
    }
    return P;
}

inline double running_cost(const Queue& q, int threshold, double tax, int s) {
    const bool active = s >= threshold;
    return q.C * s + (active ? q.f(q.serve(s)) : tax);
}

/// Long-run average cost of the threshold policy: stationary distribution
/// by power iteration on the lazy chain (P + I) / 2.
inline double average_cost(const Queue& q, int threshold, double tax, int max_iter = 200000,
                           double tol = 1e-15) {
    const auto P = threshold_chain(q, threshold);
    const std::size_t n = P.size();
    std::vector<double> pi(n, 1.0 / static_cast<double>(n)), next(n);
    for (int it = 0; it < max_iter; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t s = 0; s < n; ++s) {
            next[s] += 0.5 * pi[s];
            for (std::size_t t = 0; t < n; ++t) next[t] += 0.5 * pi[s] * P[s][t];
        }
        double diff = 0.0;
        for (std::size_t s = 0; s < n; ++s) diff = std::max(diff, std::abs(next[s] - pi[s]));
        pi.swap(next);
        if (diff < tol) break;
    }
    double beta = 0.0;
    for (std::size_t s = 0; s < n; ++s) beta += pi[s] * running_cost(q, threshold, tax, static_cast<int>(s));
    return beta;
}

/// Gaussian elimination with partial pivoting.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        if (std::abs(A[piv][c]) < 1e-14) throw std::runtime_error("oracle: singular system");
        std::swap(A[c], A[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double m = A[r][c] / A[c][c];
            if (m == 0.0) continue;
            for (std::size_t k = c; k < n; ++k) A[r][k] -= m * A[c][k];
            b[r] -= m * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double acc = b[r];
        for (std::size_t k = r + 1; k < n; ++k) acc -= A[r][k] * x[k];
        x[r] = acc / A[r][r];
    }
    return x;
}

/// Relative value function and average cost of the threshold policy from
/// the Poisson equation with V(0) = 0. Returns (V(0..M), beta).
inline std::pair<std::vector<double>, double> relative_values(const Queue& q, int threshold, double tax) {
    const auto P = threshold_chain(q, threshold);
    const std::size_t n = P.size();
    std::vector<std::vector<double>> A(n + 1, std::vector<double>(n + 1, 0.0));
    std::vector<double> b(n + 1, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        A[s][s] += 1.0;
        for (std::size_t t = 0; t < n; ++t) A[s][t] -= P[s][t];
        A[s][n] = 1.0;
        b[s] = running_cost(q, threshold, tax, static_cast<int>(s));
    }
    A[n][0] = 1.0;
    const auto x = gauss_solve(A, b);
    return {std::vector<double>(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n)), x[n]};
}

/// Active-minus-passive one-step cost at state x for tax lambda (isolated
/// user, so the boxed term equals lambda).
inline double indifference(const Queue& q, int x, double lambda) {
    const auto [V, beta] = relative_values(q, x, lambda);
    (void)beta;
    auto expect = [&](int base) {
        double acc = 0.0, covered = 0.0;
        for (std::size_t k = 0; k < q.arrivals.size(); ++k) {
            const int next = std::min(q.M, base + static_cast<int>(k));
            acc += q.arrivals[k] * V[static_cast<std::size_t>(next)];
            covered += q.arrivals[k];
        }
        return acc + (1.0 - covered) * V[static_cast<std::size_t>(q.M)];
    };
    return q.f(q.serve(x)) - lambda + expect(x - q.serve(x)) - expect(x);
}

/// Root of indifference(lambda) by bracketing and bisection.
inline double bisect_index(const Queue& q, int x, double tol = 1e-10) {
    double lo = -1.0, hi = 1.0;
    auto r = [&](double l) { return indifference(q, x, l); };
    for (int k = 0; k < 60 && (r(lo) > 0) == (r(hi) > 0); ++k) {
        lo *= 2.0;
        hi *= 2.0;
    }
    if ((r(lo) > 0) == (r(hi) > 0)) throw std::runtime_error("oracle: no sign change");
    const bool lo_positive = r(lo) > 0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if ((r(mid) > 0) == lo_positive) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Brute-force checks over explicit adjacency matrices.
using Adj = std::vector<std::vector<bool>>;

inline bool independent(const Adj& adj, std::uint32_t mask) {
    const std::size_t n = adj.size();
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            if ((mask >> a & 1U) && (mask >> b & 1U) && adj[a][b]) return false;
    return true;
}

/// Maximal among `eligible`: independent, and adding any eligible user breaks it.
inline bool maximal(const Adj& adj, std::uint32_t mask, std::uint32_t eligible) {
    if (!independent(adj, mask)) return false;
    for (std::size_t v = 0; v < adj.size(); ++v) {
        if (!(eligible >> v & 1U) || (mask >> v & 1U)) continue;
        if (independent(adj, mask | (1U << v))) return false;
    }
    return true;
}

/// Best total weight of an independent set (enumeration).
inline double max_independent_weight(const Adj& adj, const std::vector<double>& w) {
    const std::size_t n = adj.size();
    double best = 0.0;
    for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
        if (!independent(adj, mask)) continue;
        double s = 0.0;
        for (std::size_t v = 0; v < n; ++v)
            if (mask >> v & 1U) s += std::max(0.0, w[v]);
        best = std::max(best, s);
    }
    return best;
}

}  // namespace oracle
