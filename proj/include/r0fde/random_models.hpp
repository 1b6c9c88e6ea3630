#pragma once

// Seeded generators for randomized checks.

#include "r0fde/delay_op.hpp"
#include "r0fde/linalg.hpp"
#include "r0fde/r0_engine.hpp"
#include "r0fde/tick_model.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace r0fde::random {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi)
{
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline bool coin(Rng& rng, double p) { return uniform(rng, 0.0, 1.0) < p; }

/// Gaussian entries.
inline DenseMatrix gaussian_matrix(Rng& rng, std::size_t m)
{
    std::normal_distribution<double> g(0.0, 1.0);
    DenseMatrix out(m);
    for (auto& v : out.data()) {
        v = g(rng);
    }
    return out;
}

/// Off-diagonals in [0, 1) (some zeroed), diagonal in [-3, 1). With
/// `irreducible` a positive cycle 0 -> 1 -> ... -> m-1 -> 0 is added.
inline DenseMatrix metzler_matrix(Rng& rng, std::size_t m, bool irreducible = false,
                                  double zero_prob = 0.3)
{
    DenseMatrix out(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) {
                out(i, j) = uniform(rng, -3.0, 1.0);
            } else if (!coin(rng, zero_prob)) {
                out(i, j) = uniform(rng, 0.0, 1.0);
            }
        }
    }
    if (irreducible && m > 1) {
        for (std::size_t i = 0; i < m; ++i) {
            out(i, (i + 1) % m) += 0.05;
        }
    }
    return out;
}

inline DenseMatrix nonnegative_matrix(Rng& rng, std::size_t m, double zero_prob, double hi = 1.0)
{
    DenseMatrix out(m);
    for (auto& v : out.data()) {
        if (!coin(rng, zero_prob)) {
            v = uniform(rng, 0.0, hi);
        }
    }
    return out;
}

/// Distinct delays in (0, max_tau].
inline std::vector<double> delays(Rng& rng, std::size_t count, double max_tau = 2.0)
{
    std::vector<double> out;
    while (out.size() < count) {
        const double t = uniform(rng, 0.05, max_tau);
        if (std::none_of(out.begin(), out.end(), [&](double d) { return std::abs(d - t) < 1e-3; })) {
            out.push_back(t);
        }
    }
    return out;
}

/// Metzler A0 and nonnegative delayed matrices; m <= max_m, at most
/// max_delays delays in (0, 2].
inline DelayLinearOperator cooperative_operator(Rng& rng, std::size_t max_m = 5,
                                                std::size_t max_delays = 3)
{
    const std::size_t m = uniform_index(rng, 1, max_m);
    DenseMatrix a0 = metzler_matrix(rng, m);
    std::vector<DelayTerm> terms;
    for (double tau : delays(rng, uniform_index(rng, 0, max_delays))) {
        terms.push_back({tau, nonnegative_matrix(rng, m, 0.5)});
    }
    return DelayLinearOperator(std::move(a0), std::move(terms));
}

/// A model satisfying the positivity, cooperativity and stability
/// assumptions, with F rescaled so that R0 is spread over [0.2, 3].
inline NextGenModel nextgen_model(Rng& rng, std::size_t max_m = 5, std::size_t max_delays = 3)
{
    for (;;) {
        const std::size_t m = uniform_index(rng, 1, max_m);
        const auto taus = delays(rng, uniform_index(rng, 1, max_delays));

        DenseMatrix v0(m);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) {
                    v0(i, j) = uniform(rng, 0.5, 3.0);
                } else if (coin(rng, 0.3)) {
                    v0(i, j) = -uniform(rng, 0.0, 0.5);
                }
            }
        }
        std::vector<DelayTerm> v_terms;
        std::vector<DelayTerm> f_terms;
        for (double tau : taus) {
            if (coin(rng, 0.4)) {
                v_terms.push_back({tau, -1.0 * nonnegative_matrix(rng, m, 0.7, 0.3)});
            }
            f_terms.push_back({tau, nonnegative_matrix(rng, m, 0.5)});
        }
        DenseMatrix f0 = coin(rng, 0.5) ? nonnegative_matrix(rng, m, 0.6) : DenseMatrix(m);
        DelayLinearOperator f(std::move(f0), std::move(f_terms));
        if (f.hat().norm_inf() == 0.0) {
            continue;
        }
        NextGenModel model = assess(NextGenModel(f, DelayLinearOperator(v0, v_terms)));
        if (!model.validated) {
            continue;
        }
        const double r0 = r0_direct(model);
        if (!(r0 > 0.0)) {
            continue;
        }
        const double target = uniform(rng, 0.2, 3.0);
        return assess(NextGenModel(f.scale(target / r0), model.V()));
    }
}

inline tick::TickParams tick_params(Rng& rng)
{
    tick::TickParams p;
    p.b = uniform(rng, 0.5, 20.0);
    for (std::size_t i = 0; i < 4; ++i) {
        p.r[i] = uniform(rng, 0.05, 1.0);
        p.d[i] = uniform(rng, 0.01, 0.5);
    }
    p.tau1 = uniform(rng, 0.2, 3.0);
    p.tau2 = uniform(rng, 0.2, 3.0);
    p.n_cap = uniform(rng, 1.0, 100.0);
    p.h = uniform(rng, 0.5, 20.0);
    return p;
}

} // namespace r0fde::random
