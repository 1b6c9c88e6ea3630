#pragma once

// Principal eigenvalue of cooperative linear delay systems via the
// characteristic matrix M(lambda) = A0 + sum_k A_k exp(-lambda tau_k).

#include "r0fde/delay_op.hpp"
#include "r0fde/errors.hpp"
#include "r0fde/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace r0fde {

/// Sign classification with a symmetric zero band: |x| <= band counts as 0.
inline int sign_with_band(double x, double band = 1e-8)
{
    if (x > band) {
        return 1;
    }
    if (x < -band) {
        return -1;
    }
    return 0;
}

inline constexpr double kSignZeroBand = 1e-8;

inline DenseMatrix char_matrix(const DelayLinearOperator& op, double lambda)
{
    DenseMatrix out = op.instantaneous();
    for (const auto& t : op.terms()) {
        const double weight = std::exp(-lambda * t.tau);
        if (!std::isfinite(weight)) {
            throw Error(ErrorCode::Overflow, "exp(-lambda*tau) overflows at lambda=" +
                                                 std::to_string(lambda) +
                                                 ", tau=" + std::to_string(t.tau));
        }
        out += t.matrix * weight;
    }
    if (!out.all_finite()) {
        throw Error(ErrorCode::Overflow, "characteristic matrix overflows at lambda=" + std::to_string(lambda));
    }
    return out;
}

/// g(lambda) = s(M(lambda)) - lambda; strictly decreasing for cooperative
/// operators, and its unique root is the principal eigenvalue.
inline double principal_gap(const DelayLinearOperator& op, double lambda)
{
    return stability_modulus(char_matrix(op, lambda)) - lambda;
}

struct PrincipalEigenvalueConfig {
    std::size_t max_bisections = 200;
    double lambda_tolerance = 1e-10;
    /// Lower bracket doubling stops once |lambda| passes this.
    double lower_bracket_cap = 1e6;
};

/// s(L) for a cooperative delay operator, by bisection on g.
inline double principal_eigenvalue(const DelayLinearOperator& op,
                                   const PrincipalEigenvalueConfig& cfg = {})
{
    if (!op.check_cooperative()) {
        throw Error(ErrorCode::NotCooperative,
                    "principal eigenvalue requires A0 Metzler and nonnegative delayed matrices");
    }
    if (op.terms().empty()) {
        return stability_modulus(op.instantaneous());
    }

    // For lambda >= 0, exp(-lambda tau) <= 1 and A_k >= 0 give s(M(lambda)) <= s(hat).
    const double s_hat = stability_modulus(op.hat());
    double hi = std::max(s_hat, 0.0) + 1.0;
    double g_hi = principal_gap(op, hi);
    if (!(g_hi < 0.0)) {
        throw Error(ErrorCode::BracketFailure, "upper bracket has g >= 0");
    }

    // For lambda < 0, M(lambda) >= hat gives g > 0 below s_hat - 1. Doubling from -1
    // reaches that floor without evaluating exp(-lambda tau) far past the root.
    const double floor = std::min(s_hat, 0.0) - 1.0;
    double lo = -1.0;
    double g_lo = 0.0;
    for (;;) {
        try {
            g_lo = principal_gap(op, lo);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Overflow) {
                throw Error(ErrorCode::BracketFailure,
                            "characteristic matrix overflowed before a lower bracket was found");
            }
            throw;
        }
        if (g_lo > 0.0) {
            break;
        }
        if (g_lo == 0.0) {
            return lo;
        }
        if (lo <= floor) {
            throw Error(ErrorCode::BracketFailure, "g <= 0 below s(hat) - 1");
        }
        hi = lo;
        lo = std::max(2.0 * lo, floor);
        if (std::abs(lo) > cfg.lower_bracket_cap) {
            throw Error(ErrorCode::BracketFailure,
                        "no sign change of g down to lambda=" + std::to_string(lo));
        }
    }

    for (std::size_t it = 0; it < cfg.max_bisections; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        const double g_mid = principal_gap(op, mid);
        if (g_mid == 0.0) {
            return mid;
        }
        if (g_mid > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        // Bracket width ends three decades below lambda_tolerance.
        if (hi - lo <= 1e-3 * cfg.lambda_tolerance * std::max(1.0, std::abs(lo))) {
            break;
        }
    }
    return 0.5 * (lo + hi);
}

struct SignEquivalenceReport {
    double s_L = 0.0;
    double s_hat = 0.0;
    bool consistent = false;
};

/// s(L) against s(L-hat); consistent when both land in the same sign class.
inline SignEquivalenceReport sign_equivalence_report(const DelayLinearOperator& op)
{
    SignEquivalenceReport out;
    out.s_L = principal_eigenvalue(op);
    out.s_hat = stability_modulus(op.hat());
    out.consistent = sign_with_band(out.s_L, kSignZeroBand) == sign_with_band(out.s_hat, kSignZeroBand);
    return out;
}

} // namespace r0fde
