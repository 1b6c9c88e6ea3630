#pragma once

// Method-of-steps integration of autonomous delay equations (classical RK4,
// cubic Hermite dense output for delayed lookups), the time-t0 solution map
// on sampled history space, and power iteration for its spectral radius.

#include "r0fde/delay_op.hpp"
#include "r0fde/errors.hpp"
#include "r0fde/linalg.hpp"
#include "r0fde/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace r0fde {

/// Right-hand side of u'(t) = f(u(t), u(t - d_1), ..., u(t - d_k)).
/// `lagged[k]` holds u(t - delays()[k]).
template <class R>
concept DelayRhs = requires(const R& r, std::span<const double> u, std::span<const Vector> lagged,
                            std::span<double> du) {
    { r.dim() } -> std::convertible_to<std::size_t>;
    { r.delays() } -> std::convertible_to<std::vector<double>>;
    r(u, lagged, du);
};

/// u' = L(u_t) + forcing.
class LinearDelayRhs {
public:
    explicit LinearDelayRhs(DelayLinearOperator op, Vector forcing = {})
        : op_(std::move(op)), forcing_(std::move(forcing)), delays_(op_.delays())
    {
        if (!forcing_.empty() && forcing_.size() != op_.dim()) {
            throw Error(ErrorCode::InvalidArgument, "forcing vector has wrong length");
        }
    }

    std::size_t dim() const { return op_.dim(); }
    const std::vector<double>& delays() const { return delays_; }
    const DelayLinearOperator& op() const { return op_; }

    void operator()(std::span<const double> u, std::span<const Vector> lagged,
                    std::span<double> du) const
    {
        const std::size_t m = dim();
        const auto& a0 = op_.instantaneous();
        for (std::size_t i = 0; i < m; ++i) {
            double acc = forcing_.empty() ? 0.0 : forcing_[i];
            for (std::size_t j = 0; j < m; ++j) {
                acc += a0(i, j) * u[j];
            }
            du[i] = acc;
        }
        const auto& terms = op_.terms();
        for (std::size_t k = 0; k < terms.size(); ++k) {
            const auto& a = terms[k].matrix;
            const auto& v = lagged[k];
            for (std::size_t i = 0; i < m; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < m; ++j) {
                    acc += a(i, j) * v[j];
                }
                du[i] += acc;
            }
        }
    }

private:
    DelayLinearOperator op_;
    Vector forcing_;
    std::vector<double> delays_;
};

struct IntegratorConfig {
    /// ||u||_inf beyond this stops the run.
    double overflow_guard = 1e151;
    /// Throw BlowUp when the guard trips; otherwise stop and set the flag.
    bool throw_on_blowup = true;
};

/// Solution on [0, T_end] plus the initial segment; dense output is C^1.
class DdeTrajectory {
public:
    DdeTrajectory(HistorySegment initial, double step)
        : initial_(std::move(initial)), dim_(initial_.dim()), step_(step)
    {
    }

    std::size_t dim() const noexcept { return dim_; }
    const HistorySegment& initial() const noexcept { return initial_; }
    double step() const noexcept { return step_; }
    std::size_t size() const noexcept { return times_.size(); }
    double time(std::size_t j) const { return times_[j]; }
    const std::vector<double>& times() const noexcept { return times_; }
    double end_time() const { return times_.back(); }
    bool blew_up() const noexcept { return blew_up_; }

    std::span<const double> state(std::size_t j) const { return {states_.data() + j * dim_, dim_}; }
    std::span<const double> derivative(std::size_t j) const
    {
        return {derivs_.data() + j * dim_, dim_};
    }
    std::span<const double> final_state() const { return state(size() - 1); }

    /// u(t) for t in [-tau, end_time()].
    void at(double t, std::span<double> out) const
    {
        const double t_end = times_.back();
        const double slack = 1e-9 * step_;
        if (t <= 0.0 || times_.size() < 2) {
            initial_.at(std::clamp(t, -initial_.tau(), 0.0), out);
            return;
        }
        if (t > t_end + slack) {
            throw Error(ErrorCode::InvalidArgument, "dense output requested beyond the solution");
        }
        t = std::min(t, t_end);
        std::size_t j = static_cast<std::size_t>(t / step_);
        j = std::min(j, times_.size() - 2);
        while (j > 0 && times_[j] > t) {
            --j;
        }
        while (j + 2 < times_.size() && times_[j + 1] < t) {
            ++j;
        }
        const double t0 = times_[j];
        const double dt = times_[j + 1] - t0;
        const double s = (t - t0) / dt;
        const double s2 = s * s;
        const double s3 = s2 * s;
        const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        const double h10 = s3 - 2.0 * s2 + s;
        const double h01 = -2.0 * s3 + 3.0 * s2;
        const double h11 = s3 - s2;
        const double* u0 = states_.data() + j * dim_;
        const double* u1 = u0 + dim_;
        const double* f0 = derivs_.data() + j * dim_;
        const double* f1 = f0 + dim_;
        for (std::size_t i = 0; i < dim_; ++i) {
            out[i] = h00 * u0[i] + h10 * dt * f0[i] + h01 * u1[i] + h11 * dt * f1[i];
        }
    }

    Vector at(double t) const
    {
        Vector out(dim_);
        at(t, out);
        return out;
    }

    /// The history segment u_t on the grid of the initial segment.
    HistorySegment segment_at(double t) const
    {
        HistorySegment out(dim_, initial_.tau(), initial_.grid_intervals());
        for (std::size_t j = 0; j < out.sample_count(); ++j) {
            at(t + out.theta(j), out.sample(j));
        }
        return out;
    }

    /// CSV with header t,u1..um; every `stride`-th step plus the last.
    void write_csv(std::ostream& os, std::size_t stride = 1) const
    {
        os << "t";
        for (std::size_t i = 0; i < dim_; ++i) {
            os << ",u" << (i + 1);
        }
        os << '\n';
        stride = std::max<std::size_t>(stride, 1);
        char buf[64];
        for (std::size_t j = 0; j < size(); ++j) {
            if (j % stride != 0 && j + 1 != size()) {
                continue;
            }
            std::snprintf(buf, sizeof buf, "%.17g", times_[j]);
            os << buf;
            for (double v : state(j)) {
                std::snprintf(buf, sizeof buf, "%.17g", v);
                os << ',' << buf;
            }
            os << '\n';
        }
    }

    void reserve(std::size_t steps)
    {
        times_.reserve(steps);
        states_.reserve(steps * dim_);
        derivs_.reserve(steps * dim_);
    }

    /// Appends a node with its state and derivative.
    void push(double t, std::span<const double> u, std::span<const double> du)
    {
        times_.push_back(t);
        states_.insert(states_.end(), u.begin(), u.end());
        derivs_.insert(derivs_.end(), du.begin(), du.end());
    }

    /// Overwrites the derivative stored at node j.
    void set_derivative(std::size_t j, std::span<const double> du)
    {
        std::copy(du.begin(), du.end(), derivs_.begin() + static_cast<std::ptrdiff_t>(j * dim_));
    }

    void mark_blown_up() noexcept { blew_up_ = true; }

private:

    HistorySegment initial_;
    std::size_t dim_;
    double step_;
    bool blew_up_ = false;
    std::vector<double> times_;
    std::vector<double> states_;
    std::vector<double> derivs_;
};

/// Fixed-step step size actually used: `step` itself unless it exceeds the
/// smallest delay, in which case the smallest delay.
inline double effective_step(double step, const std::vector<double>& delays)
{
    if (!(step > 0.0) || !std::isfinite(step)) {
        throw Error(ErrorCode::InvalidArgument, "step must be positive");
    }
    for (double d : delays) {
        step = std::min(step, d);
    }
    return step;
}

/// Classical RK4 by the method of steps. Delayed arguments come from the
/// initial segment when t - d <= 0 and from the Hermite dense output of
/// already accepted steps otherwise; steps never exceed the smallest delay,
/// so every lookup is into known data.
template <DelayRhs R>
DdeTrajectory integrate(const R& rhs, const HistorySegment& phi0, double t_end, double step,
                        const IntegratorConfig& cfg = {})
{
    const std::size_t m = rhs.dim();
    const std::vector<double> delays = rhs.delays();
    if (phi0.dim() != m) {
        throw Error(ErrorCode::InvalidArgument, "initial history has wrong dimension");
    }
    for (double d : delays) {
        if (phi0.tau() < d * (1.0 - 1e-12)) {
            throw Error(ErrorCode::DelayExceedsHistory,
                        "initial history shorter than delay " + std::to_string(d));
        }
    }
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
        throw Error(ErrorCode::InvalidArgument, "T_end must be positive");
    }
    if (!phi0.all_finite()) {
        throw Error(ErrorCode::InvalidArgument, "initial history has non-finite samples");
    }
    const double h = effective_step(step, delays);
    const auto steps = static_cast<std::size_t>(std::ceil(t_end / h - 1e-9));

    DdeTrajectory traj(phi0, h);
    traj.reserve(steps + 1);

    std::vector<Vector> lagged(delays.size(), Vector(m));
    auto lookup = [&](double t) {
        for (std::size_t k = 0; k < delays.size(); ++k) {
            traj.at(t - delays[k], lagged[k]);
        }
    };

    Vector u(phi0.head().begin(), phi0.head().end());
    Vector k1(m), k2(m), k3(m), k4(m), w(m);

    // Lookups at t <= 0 read the initial segment, so node 0 can be stored
    // before its derivative is known.
    traj.push(0.0, u, k1);
    lookup(0.0);
    rhs(std::span<const double>(u), std::span<const Vector>(lagged), std::span<double>(k1));
    traj.set_derivative(0, k1);

    double t = 0.0;
    for (std::size_t n = 0; n < steps; ++n) {
        const double t_next = (n + 1 == steps) ? t_end : static_cast<double>(n + 1) * h;
        const double dt = t_next - t;
        // k1 is the stored derivative at t.
        for (std::size_t i = 0; i < m; ++i) {
            w[i] = u[i] + 0.5 * dt * k1[i];
        }
        lookup(t + 0.5 * dt);
        rhs(std::span<const double>(w), std::span<const Vector>(lagged), std::span<double>(k2));
        for (std::size_t i = 0; i < m; ++i) {
            w[i] = u[i] + 0.5 * dt * k2[i];
        }
        rhs(std::span<const double>(w), std::span<const Vector>(lagged), std::span<double>(k3));
        for (std::size_t i = 0; i < m; ++i) {
            w[i] = u[i] + dt * k3[i];
        }
        lookup(t_next);
        rhs(std::span<const double>(w), std::span<const Vector>(lagged), std::span<double>(k4));
        for (std::size_t i = 0; i < m; ++i) {
            u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t = t_next;

        // Derivative at the new node; becomes k1 of the next step. The
        // lagged values at t_next were fetched for k4 already.
        rhs(std::span<const double>(u), std::span<const Vector>(lagged), std::span<double>(k1));
        traj.push(t, u, k1);

        const double size = norm_inf(u);
        if (!(size <= cfg.overflow_guard)) {
            traj.mark_blown_up();
            if (cfg.throw_on_blowup) {
                throw Error(ErrorCode::BlowUp, "||u|| exceeded guard at t=" + std::to_string(t));
            }
            break;
        }
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Solution operator and its spectral radius

/// phi -> u_{t0}(phi) on a fixed history grid, for a linear delay system.
class DiscretizedOperator {
public:
    DiscretizedOperator(DelayLinearOperator op, double t0, std::size_t n, double history_length)
        : rhs_(std::move(op)), t0_(t0), n_(n), history_length_(history_length)
    {
        if (!(t0 > 0.0) || !std::isfinite(t0)) {
            throw Error(ErrorCode::InvalidArgument, "t0 must be positive");
        }
        if (n < 8) {
            throw Error(ErrorCode::InvalidArgument, "grid count must be >= 8");
        }
        if (!(history_length > 0.0) || history_length < rhs_.op().max_delay()) {
            throw Error(ErrorCode::DelayExceedsHistory, "history length shorter than max delay");
        }
        step_ = effective_step(history_length_ / static_cast<double>(n_), rhs_.delays());
    }

    const DelayLinearOperator& source() const { return rhs_.op(); }
    double t0() const noexcept { return t0_; }
    std::size_t grid_count() const noexcept { return n_; }
    double history_length() const noexcept { return history_length_; }
    double step() const noexcept { return step_; }
    std::size_t dim() const { return rhs_.dim(); }

    HistorySegment constant_segment(double value) const
    {
        return HistorySegment::constant(Vector(dim(), value), history_length_, n_);
    }

    HistorySegment apply(const HistorySegment& phi) const
    {
        if (phi.dim() != dim() || phi.grid_intervals() != n_ || phi.tau() != history_length_) {
            throw Error(ErrorCode::InvalidArgument, "segment is not on the operator's grid");
        }
        const auto traj = integrate(rhs_, phi, t0_, step_);
        return traj.segment_at(t0_);
    }

private:
    LinearDelayRhs rhs_;
    double t0_;
    std::size_t n_;
    double history_length_;
    double step_ = 0.0;
};

/// Default t0 = max(tau, 1).
inline double default_t0(const DelayLinearOperator& op) { return std::max(op.max_delay(), 1.0); }

/// History length used when an operator has no delays.
inline double default_history_length(const DelayLinearOperator& op)
{
    return op.max_delay() > 0.0 ? op.max_delay() : 1.0;
}

inline DiscretizedOperator solution_operator(const DelayLinearOperator& op, double t0,
                                             std::size_t n, double history_length = 0.0)
{
    if (history_length <= 0.0) {
        history_length = default_history_length(op);
    }
    return {op, t0, n, history_length};
}

struct PowerIterationConfig {
    double tolerance = 1e-8;
    std::size_t max_iterations = 2000;
    double zero_floor = 1e-300;
};

struct MonodromyEstimate {
    double radius = 0.0;
    std::size_t iterations = 0;
    bool zero = false;
};

/// Power iteration on the discretized solution map from the all-ones
/// segment; the estimate is the ratio of successive sup norms.
inline MonodromyEstimate monodromy_estimate(const DiscretizedOperator& op,
                                            const PowerIterationConfig& cfg = {})
{
    HistorySegment x = op.constant_segment(1.0);
    double previous = std::numeric_limits<double>::quiet_NaN();
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    MonodromyEstimate out;
    for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
        HistorySegment y = op.apply(x);
        const double norm_y = y.sup_norm();
        const double ratio = norm_y / x.sup_norm();
        out.iterations = it;
        out.radius = ratio;
        if (!(norm_y >= cfg.zero_floor)) {
            out.radius = 0.0;
            out.zero = true;
            return out;
        }
        if (std::abs(ratio - previous) < cfg.tolerance) {
            return out;
        }
        if (cfg.max_iterations - it < 10) {
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        previous = ratio;
        y *= 1.0 / norm_y;
        x = std::move(y);
    }
    throw Error(ErrorCode::NoConvergence, "power iteration did not settle; last ratios in [" +
                                              std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

inline double monodromy_radius(const DiscretizedOperator& op, const PowerIterationConfig& cfg = {})
{
    return monodromy_estimate(op, cfg).radius;
}

struct SpectralMappingCheck {
    double lhs = 0.0; ///< r(T(t0)) from power iteration
    double rhs = 0.0; ///< exp(s(L) t0) from the principal eigenvalue
    double gap = 0.0;
};

inline SpectralMappingCheck spectral_mapping_check(const DelayLinearOperator& op, double t0,
                                                   std::size_t n,
                                                   const PowerIterationConfig& cfg = {})
{
    SpectralMappingCheck out;
    out.lhs = monodromy_radius(solution_operator(op, t0, n), cfg);
    out.rhs = std::exp(principal_eigenvalue(op) * t0);
    out.gap = std::abs(out.lhs - out.rhs);
    return out;
}

struct VhatInverseCheck {
    Vector numeric;
    Vector exact;
    double gap = 0.0;
};

/// Integrates u' = -V(u_t) + x from zero history; the state at T_end should
/// approach V-hat^{-1} x.
inline VhatInverseCheck verify_vhat_inverse(const DelayLinearOperator& v, const Vector& x,
                                            double t_end, double step = 0.0)
{
    if (x.size() != v.dim()) {
        throw Error(ErrorCode::InvalidArgument, "x has wrong length");
    }
    const DelayLinearOperator minus_v = v.negate();
    if (!minus_v.check_cooperative()) {
        throw Error(ErrorCode::NotCooperative, "-V does not satisfy the cooperativity condition");
    }
    const DenseMatrix vhat = v.hat();
    const double s = stability_modulus(-vhat);
    if (!(s < 0.0)) {
        throw Error(ErrorCode::NotStable, "s(-V-hat) = " + std::to_string(s) + " is not negative");
    }
    if (step <= 0.0) {
        step = 0.05 / std::max(vhat.norm_inf(), 1e-12);
        if (v.min_delay() > 0.0) {
            step = std::min(step, v.min_delay() / 16.0);
        }
    }
    const double tau = v.max_delay();
    const HistorySegment zero(v.dim(), tau, tau > 0.0 ? 16 : 0);
    const auto traj = integrate(LinearDelayRhs(minus_v, x), zero, t_end, step);

    VhatInverseCheck out;
    out.numeric.assign(traj.final_state().begin(), traj.final_state().end());
    out.exact = lu_solve(vhat, x);
    Vector diff(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        diff[i] = out.numeric[i] - out.exact[i];
    }
    out.gap = norm_inf(diff);
    return out;
}

} // namespace r0fde
