#pragma once

// Basic reproduction number for u' = F(u_t) - V(u_t): the next-generation
// matrix formula, the sign test against the principal eigenvalue of F - V,
// and bisection in mu on the spectral radius of the solution map of
// u' = F(u_t)/mu - V(u_t).

#include "r0fde/delay_op.hpp"
#include "r0fde/errors.hpp"
#include "r0fde/linalg.hpp"
#include "r0fde/semigroup.hpp"
#include "r0fde/spectral.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace r0fde {

class NextGenModel {
public:
    NextGenModel(DelayLinearOperator f, DelayLinearOperator v) : f_(std::move(f)), v_(std::move(v))
    {
        if (f_.dim() != v_.dim()) {
            throw Error(ErrorCode::InvalidArgument, "F and V have different dimensions");
        }
    }

    const DelayLinearOperator& F() const noexcept { return f_; }
    const DelayLinearOperator& V() const noexcept { return v_; }
    std::size_t dim() const { return f_.dim(); }

    /// F - V, the full linear system.
    DelayLinearOperator combined() const { return f_ - v_; }

    /// The model with F replaced by F / mu.
    NextGenModel with_f_scaled(double mu) const { return {f_.scale(1.0 / mu), v_}; }

    bool a1_ok = false;
    bool a2_cooperative_ok = false;
    bool a2_stable_ok = false;
    bool validated = false;

private:
    DelayLinearOperator f_;
    DelayLinearOperator v_;
};

/// Fills the three assumption flags without rejecting anything.
inline NextGenModel assess(NextGenModel model, double eps_order = 0.0)
{
    model.a1_ok = model.F().check_positive(eps_order);
    model.a2_cooperative_ok = model.V().negate().check_cooperative(eps_order);
    model.a2_stable_ok = stability_modulus(-model.V().hat()) < 0.0;
    model.validated = model.a1_ok && model.a2_cooperative_ok && model.a2_stable_ok;
    return model;
}

/// Checks F positive, -V cooperative and s(-V-hat) < 0; throws
/// AssumptionViolated naming the first failure.
inline NextGenModel validate(NextGenModel model, double eps_order = 0.0)
{
    model = assess(std::move(model), eps_order);
    if (!model.a1_ok) {
        throw AssumptionViolated(Assumption::A1_Positive, "F has a negative coefficient");
    }
    if (!model.a2_cooperative_ok) {
        throw AssumptionViolated(Assumption::A2_Cooperative,
                                 "-V is not cooperative (negative off-diagonal in -V0 or negative "
                                 "delayed coefficient)");
    }
    if (!model.a2_stable_ok) {
        throw AssumptionViolated(Assumption::A2_Stable, "s(-V-hat) >= 0");
    }
    return model;
}

/// F-hat V-hat^{-1}.
inline DenseMatrix next_generation_matrix(const NextGenModel& model)
{
    return model.F().hat() * inverse(model.V().hat());
}

inline double r0_direct(const NextGenModel& model)
{
    const DenseMatrix k = next_generation_matrix(model);
    const double scale = std::max(k.norm_inf(), 1.0);
    if (model.validated && !is_nonnegative(k, 1e-12 * scale)) {
        throw Error(ErrorCode::InvalidArgument,
                    "next-generation matrix has a negative entry for a validated model");
    }
    return spectral_radius(k);
}

inline double lambda_star(const NextGenModel& model) { return principal_eigenvalue(model.combined()); }

struct BisectionProbe {
    double mu;
    double radius;
};

struct R0BisectionResult {
    double mu = 0.0;
    double t0 = 0.0;
    std::size_t n = 0;
    std::vector<BisectionProbe> probes;
};

struct R0BisectionConfig {
    double tol_mu = 1e-4; ///< relative width of the final bracket
    std::size_t max_bracket_steps = 60;
    std::size_t max_bisections = 200;
    PowerIterationConfig power;
};

/// r(Q_mu(t0)) for Q_mu the solution map of u' = F(u_t)/mu - V(u_t).
inline double monodromy_radius_at(const NextGenModel& model, double mu, double t0, std::size_t n,
                                  const PowerIterationConfig& power = {})
{
    const DelayLinearOperator op = model.with_f_scaled(mu).combined();
    return monodromy_radius(solution_operator(op, t0, n, default_history_length(model.combined())),
                            power);
}

/// The mu with r(Q_mu(t0)) = 1, bracketed by doubling/halving from mu = 1
/// and then bisected.
inline R0BisectionResult r0_bisection(const NextGenModel& model, double t0, std::size_t n,
                                      const R0BisectionConfig& cfg = {})
{
    const DenseMatrix fhat = model.F().hat();
    if (fhat.norm_inf() == 0.0) {
        throw Error(ErrorCode::ZeroR0, "F-hat is zero, no mu bracket exists");
    }
    R0BisectionResult out;
    out.t0 = t0;
    out.n = n;
    auto radius = [&](double mu) {
        const double r = monodromy_radius_at(model, mu, t0, n, cfg.power);
        out.probes.push_back({mu, r});
        return r;
    };

    double lo = 1.0;
    double hi = 1.0;
    double r = radius(1.0);
    if (r == 1.0) {
        out.mu = 1.0;
        return out;
    }
    if (r > 1.0) {
        // r decreases in mu; root lies above.
        std::size_t k = 0;
        for (; k < cfg.max_bracket_steps && r > 1.0; ++k) {
            lo = hi;
            hi *= 2.0;
            r = radius(hi);
        }
        if (r > 1.0) {
            throw Error(ErrorCode::NoConvergence, "could not bracket mu from above");
        }
    } else {
        std::size_t k = 0;
        for (; k < cfg.max_bracket_steps && r < 1.0; ++k) {
            hi = lo;
            lo *= 0.5;
            r = radius(lo);
        }
        if (r < 1.0) {
            throw Error(ErrorCode::NoConvergence, "could not bracket mu from below");
        }
    }

    for (std::size_t it = 0; it < cfg.max_bisections; ++it) {
        if (hi - lo <= cfg.tol_mu * lo) {
            break;
        }
        const double mid = 0.5 * (lo + hi);
        const double rm = radius(mid);
        if (rm == 1.0) {
            lo = hi = mid;
            break;
        }
        if (rm > 1.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    out.mu = 0.5 * (lo + hi);
    return out;
}

enum class Method { Direct, Bisect, Both };

struct R0Options {
    Method method = Method::Both;
    double t0 = 0.0; ///< 0 selects max(tau, 1)
    std::size_t n = 128;
    R0BisectionConfig bisection;
    double agreement_tolerance = 1e-3;
};

enum class Regime { Below, Critical, Above };

inline const char* to_string(Regime r)
{
    switch (r) {
    case Regime::Below: return "below";
    case Regime::Critical: return "critical";
    case Regime::Above: return "above";
    }
    return "?";
}

struct R0Report {
    double r0_direct = 0.0;
    std::optional<double> lambda_star;
    std::optional<double> r0_bisection;
    double t0 = 0.0;
    std::size_t n = 0;
    Regime regime = Regime::Critical;
    /// sign(R0 - 1) == sign(lambda*), zero band 1e-8.
    std::optional<bool> sign_consistent;
    /// |r0_bisection - r0_direct| <= agreement_tolerance.
    std::optional<bool> bisection_consistent;
    bool a1_ok = false;
    bool a2_cooperative_ok = false;
    bool a2_stable_ok = false;

    bool consistent() const
    {
        return sign_consistent.value_or(true) && bisection_consistent.value_or(true);
    }
};

/// Runs every requested R0 route on an already validated (or assessed) model.
inline R0Report consistency_report(const NextGenModel& model, const R0Options& opts = {})
{
    R0Report rep;
    rep.a1_ok = model.a1_ok;
    rep.a2_cooperative_ok = model.a2_cooperative_ok;
    rep.a2_stable_ok = model.a2_stable_ok;
    rep.r0_direct = r0_direct(model);
    const int r0_sign = sign_with_band(rep.r0_direct - 1.0, kSignZeroBand);
    rep.regime = r0_sign > 0 ? Regime::Above : (r0_sign < 0 ? Regime::Below : Regime::Critical);

    const DelayLinearOperator full = model.combined();
    rep.t0 = opts.t0 > 0.0 ? opts.t0 : default_t0(full);
    rep.n = opts.n;

    if (full.check_cooperative()) {
        rep.lambda_star = lambda_star(model);
        rep.sign_consistent = sign_with_band(*rep.lambda_star, kSignZeroBand) == r0_sign;
    }
    if (opts.method != Method::Direct && rep.r0_direct > 0.0) {
        const auto bis = r0_bisection(model, rep.t0, rep.n, opts.bisection);
        rep.r0_bisection = bis.mu;
        rep.bisection_consistent =
            std::abs(bis.mu - rep.r0_direct) <= opts.agreement_tolerance;
    }
    return rep;
}

} // namespace r0fde
