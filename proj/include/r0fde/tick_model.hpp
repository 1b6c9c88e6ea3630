#pragma once

// Stage-structured tick population model with two maturation delays:
//
//   L'   = b r4 e^{-d4 tau1} A_f(t - tau1) - (d1 + r1) L
//   N'   = r1 g(L) - (d2 + r2) N
//   A_q' = r2 N - (d3 + r3) A_q
//   A_f' = (r3 / 2) e^{-d3 tau2} A_q(t - tau2) - (d4 + r4) A_f
//
// with g(L) = N_cap L / (h + L).

#include "r0fde/delay_op.hpp"
#include "r0fde/errors.hpp"
#include "r0fde/linalg.hpp"
#include "r0fde/r0_engine.hpp"
#include "r0fde/semigroup.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace r0fde::tick {

inline constexpr std::size_t kStages = 4;
using TickState = std::array<double, kStages>;

enum Stage : std::size_t { Larvae = 0, Nymphs = 1, QuestingAdults = 2, FedFemales = 3 };

struct TickParams {
    double b = 0.0;
    std::array<double, 4> r{};
    std::array<double, 4> d{};
    double tau1 = 0.0;
    double tau2 = 0.0;
    double n_cap = 0.0;
    double h = 0.0;

    double max_delay() const { return std::max(tau1, tau2); }

    void require_valid() const
    {
        auto check = [](double v, const std::string& name) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw Error(ErrorCode::InvalidArgument,
                            "tick parameter " + name + " must be positive, got " + std::to_string(v));
            }
        };
        check(b, "b");
        for (std::size_t i = 0; i < 4; ++i) {
            check(r[i], "r" + std::to_string(i + 1));
            check(d[i], "d" + std::to_string(i + 1));
        }
        check(tau1, "tau1");
        check(tau2, "tau2");
        check(n_cap, "N_cap");
        check(h, "h");
    }

    friend bool operator==(const TickParams&, const TickParams&) = default;
};

inline double recruitment(const TickParams& p, double larvae) { return p.n_cap * larvae / (p.h + larvae); }

/// g'(0) = N_cap / h.
inline double recruitment_slope_at_zero(const TickParams& p) { return p.n_cap / p.h; }

/// Egg-to-larva coefficient b r4 e^{-d4 tau1}.
inline double birth_coefficient(const TickParams& p)
{
    return p.b * p.r[3] * std::exp(-p.d[3] * p.tau1);
}

/// Questing-to-fed-female coefficient (r3 / 2) e^{-d3 tau2}.
inline double feeding_coefficient(const TickParams& p)
{
    return 0.5 * p.r[2] * std::exp(-p.d[2] * p.tau2);
}

/// Time derivative given the current state, A_f(t - tau1) and A_q(t - tau2).
inline TickState rhs(const TickParams& p, const TickState& current, double fed_lagged,
                     double questing_lagged)
{
    TickState du{};
    du[Larvae] = birth_coefficient(p) * fed_lagged - (p.d[0] + p.r[0]) * current[Larvae];
    du[Nymphs] = p.r[0] * recruitment(p, current[Larvae]) - (p.d[1] + p.r[1]) * current[Nymphs];
    du[QuestingAdults] = p.r[1] * current[Nymphs] - (p.d[2] + p.r[2]) * current[QuestingAdults];
    du[FedFemales] = feeding_coefficient(p) * questing_lagged - (p.d[3] + p.r[3]) * current[FedFemales];
    return du;
}

/// The model as a DelayRhs for the integrator.
class TickRhs {
public:
    explicit TickRhs(TickParams p) : p_(p)
    {
        p_.require_valid();
        if (p_.tau1 == p_.tau2) {
            delays_ = {p_.tau1};
            fed_slot_ = questing_slot_ = 0;
        } else if (p_.tau1 < p_.tau2) {
            delays_ = {p_.tau1, p_.tau2};
            fed_slot_ = 0;
            questing_slot_ = 1;
        } else {
            delays_ = {p_.tau2, p_.tau1};
            fed_slot_ = 1;
            questing_slot_ = 0;
        }
    }

    std::size_t dim() const { return kStages; }
    const std::vector<double>& delays() const { return delays_; }
    const TickParams& params() const { return p_; }

    void operator()(std::span<const double> u, std::span<const Vector> lagged,
                    std::span<double> du) const
    {
        const TickState cur{u[0], u[1], u[2], u[3]};
        const TickState d = rhs(p_, cur, lagged[fed_slot_][FedFemales],
                                lagged[questing_slot_][QuestingAdults]);
        std::copy(d.begin(), d.end(), du.begin());
    }

private:
    TickParams p_;
    std::vector<double> delays_;
    std::size_t fed_slot_ = 0;
    std::size_t questing_slot_ = 0;
};

/// Linearization at the origin split into new recruitment F and transitions V.
inline NextGenModel linearize(const TickParams& p)
{
    p.require_valid();
    DenseMatrix f_delayed(kStages);
    f_delayed(Larvae, FedFemales) = birth_coefficient(p);
    DelayLinearOperator f(DenseMatrix(kStages), {{p.tau1, f_delayed}});

    DenseMatrix v0(kStages);
    v0(Larvae, Larvae) = p.d[0] + p.r[0];
    v0(Nymphs, Larvae) = -p.r[0] * recruitment_slope_at_zero(p);
    v0(Nymphs, Nymphs) = p.d[1] + p.r[1];
    v0(QuestingAdults, Nymphs) = -p.r[1];
    v0(QuestingAdults, QuestingAdults) = p.d[2] + p.r[2];
    v0(FedFemales, FedFemales) = p.d[3] + p.r[3];
    DenseMatrix v_delayed(kStages);
    v_delayed(FedFemales, QuestingAdults) = -feeding_coefficient(p);
    DelayLinearOperator v(v0, {{p.tau2, v_delayed}});
    return NextGenModel(std::move(f), std::move(v));
}

/// R0 = (1/2) b g'(0) e^{-(d4 tau1 + d3 tau2)} prod_i r_i / (d_i + r_i).
inline double r0_closed_form(const TickParams& p)
{
    double prod = 1.0;
    for (std::size_t i = 0; i < 4; ++i) {
        prod *= p.r[i] / (p.d[i] + p.r[i]);
    }
    return 0.5 * p.b * recruitment_slope_at_zero(p) * std::exp(-(p.d[3] * p.tau1 + p.d[2] * p.tau2)) *
           prod;
}

/// The parameters with b rescaled so that r0_closed_form equals `target`.
inline TickParams with_r0(TickParams p, double target)
{
    p.b *= target / r0_closed_form(p);
    return p;
}

inline double residual_norm(const TickParams& p, const TickState& u)
{
    const TickState d = rhs(p, u, u[FedFemales], u[QuestingAdults]);
    double worst = 0.0;
    for (double v : d) {
        worst = std::max(worst, std::abs(v));
    }
    return worst;
}

/// The positive equilibrium, present only when R0 > 1. Eliminating N, A_q
/// and A_f from the steady-state equations leaves L = (R0 h / N_cap) g(L),
/// whose positive root is L = h (R0 - 1).
inline std::optional<TickState> equilibrium(const TickParams& p)
{
    p.require_valid();
    const double r0 = r0_closed_form(p);
    if (!(r0 > 1.0)) {
        return std::nullopt;
    }
    TickState u{};
    u[Larvae] = p.h * (r0 - 1.0);
    u[Nymphs] = p.r[0] * recruitment(p, u[Larvae]) / (p.d[1] + p.r[1]);
    u[QuestingAdults] = p.r[1] * u[Nymphs] / (p.d[2] + p.r[2]);
    u[FedFemales] = feeding_coefficient(p) * u[QuestingAdults] / (p.d[3] + p.r[3]);
    const double scale = std::max(1.0, *std::max_element(u.begin(), u.end()));
    if (residual_norm(p, u) > 1e-10 * scale) {
        throw Error(ErrorCode::NonConvergence,
                    "equilibrium residual " + std::to_string(residual_norm(p, u)) + " exceeds 1e-10");
    }
    return u;
}

/// Default integration step: max delay / 128.
inline double default_step(const TickParams& p) { return p.max_delay() / 128.0; }

inline DdeTrajectory simulate(const TickParams& p, const HistorySegment& phi0, double t_end,
                              double step = 0.0)
{
    if (phi0.dim() != kStages) {
        throw Error(ErrorCode::InvalidArgument, "tick history must be 4-dimensional");
    }
    if (!phi0.is_nonnegative()) {
        throw Error(ErrorCode::InvalidArgument, "tick history must be nonnegative");
    }
    return integrate(TickRhs(p), phi0, t_end, step > 0.0 ? step : default_step(p));
}

/// A random nonnegative history on [-tau, 0]: each component is a positive
/// level plus a nonnegative bump, scaled by `scale`.
inline HistorySegment random_history(std::mt19937_64& rng, const TickParams& p, std::size_t n,
                                     double scale)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double tau = p.max_delay();
    std::array<double, kStages> level{}, bump{}, freq{}, phase{};
    for (std::size_t i = 0; i < kStages; ++i) {
        level[i] = scale * (0.05 + unit(rng));
        bump[i] = scale * 0.5 * unit(rng);
        freq[i] = 0.5 + 3.0 * unit(rng);
        phase[i] = 6.283185307179586 * unit(rng);
    }
    return HistorySegment::from_function(kStages, tau, n, [&](double theta) {
        Vector v(kStages);
        for (std::size_t i = 0; i < kStages; ++i) {
            v[i] = level[i] + bump[i] * (1.0 + std::sin(freq[i] * theta / tau * std::numbers::pi + phase[i]));
        }
        return v;
    });
}

enum class Verdict { Extinct, ConvergedToEquilibrium, StaysZero, Failed, Inconclusive };

inline const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::Extinct: return "extinct";
    case Verdict::ConvergedToEquilibrium: return "converged";
    case Verdict::StaysZero: return "stays-zero";
    case Verdict::Failed: return "failed";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct TrialOutcome {
    Verdict verdict = Verdict::Failed;
    double horizon = 0.0;   ///< final time reached
    double distance = 0.0;  ///< ||u|| (R0 <= 1) or ||u - u*|| / ||u*|| (R0 > 1)
};

struct ThresholdOptions {
    double t_end = 200.0;
    double tol = 1e-6;
    double step = 0.0;           ///< 0 selects default_step
    std::size_t max_doublings = 8;
    /// |R0 - 1| at or below this skips the verdict.
    double critical_band = 1e-6;
};

struct ThresholdReport {
    double r0 = 0.0;
    bool critical = false;
    std::optional<TickState> equilibrium;
    double equilibrium_residual = 0.0;
    std::vector<TrialOutcome> trials;
    bool pass = false;
};

namespace detail {

    inline bool is_zero_history(const HistorySegment& phi)
    {
        const auto v = phi.values();
        return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
    }

    inline double sup(std::span<const double> v) { return norm_inf(v); }

} // namespace detail

/// Simulates every trial and checks it against the threshold dichotomy:
/// extinction when R0 <= 1, convergence to u* when R0 > 1. A trial whose
/// target is not met is continued (horizon doubled) while it is still
/// moving; hitting the doubling cap while moving is reported inconclusive.
inline ThresholdReport threshold_verdict(const TickParams& p, const std::vector<HistorySegment>& trials,
                                         const ThresholdOptions& opts = {})
{
    ThresholdReport rep;
    rep.r0 = r0_closed_form(p);
    if (std::abs(rep.r0 - 1.0) <= opts.critical_band) {
        rep.critical = true;
        rep.pass = false;
        return rep;
    }
    const bool persists = rep.r0 > 1.0;
    if (persists) {
        rep.equilibrium = equilibrium(p);
        rep.equilibrium_residual = residual_norm(p, *rep.equilibrium);
    }
    const double step = opts.step > 0.0 ? opts.step : default_step(p);
    const double eq_scale =
        persists ? detail::sup(std::span<const double>(rep.equilibrium->data(), kStages)) : 1.0;

    auto distance = [&](std::span<const double> u) {
        if (!persists) {
            return detail::sup(u);
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < kStages; ++i) {
            worst = std::max(worst, std::abs(u[i] - (*rep.equilibrium)[i]));
        }
        return worst / eq_scale;
    };

    rep.pass = true;
    for (const auto& phi : trials) {
        TrialOutcome out;
        if (detail::is_zero_history(phi)) {
            const auto traj = simulate(p, phi, opts.t_end, step);
            out.horizon = traj.end_time();
            out.distance = detail::sup(traj.final_state());
            out.verdict = out.distance == 0.0 ? Verdict::StaysZero : Verdict::Failed;
            rep.pass = rep.pass && out.verdict == Verdict::StaysZero;
            rep.trials.push_back(out);
            continue;
        }

        HistorySegment start = phi;
        double elapsed = 0.0;
        double span = opts.t_end;
        for (std::size_t round = 0;; ++round) {
            const auto traj = simulate(p, start, span, step);
            elapsed += span;
            const auto last = traj.final_state();
            out.horizon = elapsed;
            out.distance = distance(last);
            if (out.distance < opts.tol) {
                out.verdict = persists ? Verdict::ConvergedToEquilibrium : Verdict::Extinct;
                break;
            }
            // Movement over the last 10% of this leg, relative to the state size.
            const Vector earlier = traj.at(0.9 * span);
            double change = 0.0;
            for (std::size_t i = 0; i < kStages; ++i) {
                change = std::max(change, std::abs(last[i] - earlier[i]));
            }
            const double size = persists ? eq_scale : std::max(detail::sup(last), 1e-300);
            const bool moving = change / size > opts.tol;
            if (!moving) {
                out.verdict = Verdict::Failed;
                break;
            }
            if (round >= opts.max_doublings) {
                out.verdict = Verdict::Inconclusive;
                break;
            }
            start = traj.segment_at(span);
            span *= 2.0;
        }
        rep.pass = rep.pass && (out.verdict == Verdict::Extinct ||
                                out.verdict == Verdict::ConvergedToEquilibrium);
        rep.trials.push_back(out);
    }
    return rep;
}

} // namespace r0fde::tick
