#pragma once

// Linear delay operators L(phi) = A0 phi(0) + sum_k A_k phi(-tau_k) acting on
// sampled history segments.

#include "r0fde/errors.hpp"
#include "r0fde/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace r0fde {

/// A function on [-tau, 0] into R^m, sampled at theta_j = -tau + j*tau/n,
/// j = 0..n. With tau == 0 the segment is a single sample.
class HistorySegment {
public:
    HistorySegment() = default;

    HistorySegment(std::size_t m, double tau, std::size_t n)
        : dim_(m), tau_(tau), n_(tau > 0.0 ? n : 0), values_((n_ + 1) * m, 0.0)
    {
        if (!(tau >= 0.0) || !std::isfinite(tau)) {
            throw Error(ErrorCode::InvalidArgument, "history length must be finite and >= 0");
        }
        if (tau > 0.0 && n < 1) {
            throw Error(ErrorCode::InvalidArgument, "history grid needs n >= 1 when tau > 0");
        }
    }

    static HistorySegment constant(std::span<const double> x, double tau, std::size_t n)
    {
        HistorySegment out(x.size(), tau, n);
        for (std::size_t j = 0; j <= out.n_; ++j) {
            std::copy(x.begin(), x.end(), out.sample(j).begin());
        }
        return out;
    }

    static HistorySegment constant(const Vector& x, double tau, std::size_t n)
    {
        return constant(std::span<const double>(x), tau, n);
    }

    /// Samples f(theta) on the grid.
    static HistorySegment from_function(std::size_t m, double tau, std::size_t n,
                                        const std::function<Vector(double)>& f)
    {
        HistorySegment out(m, tau, n);
        for (std::size_t j = 0; j <= out.n_; ++j) {
            const Vector v = f(out.theta(j));
            if (v.size() != m) {
                throw Error(ErrorCode::InvalidArgument, "history function returned wrong length");
            }
            std::copy(v.begin(), v.end(), out.sample(j).begin());
        }
        return out;
    }

    std::size_t dim() const noexcept { return dim_; }
    double tau() const noexcept { return tau_; }
    /// Number of grid intervals; there are grid_intervals()+1 samples.
    std::size_t grid_intervals() const noexcept { return n_; }
    std::size_t sample_count() const noexcept { return n_ + 1; }
    double spacing() const noexcept { return n_ > 0 ? tau_ / static_cast<double>(n_) : 0.0; }

    double theta(std::size_t j) const
    {
        return n_ == 0 ? 0.0 : -tau_ + static_cast<double>(j) * spacing();
    }

    std::span<double> sample(std::size_t j) { return {values_.data() + j * dim_, dim_}; }
    std::span<const double> sample(std::size_t j) const
    {
        return {values_.data() + j * dim_, dim_};
    }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    /// phi(0).
    std::span<const double> head() const { return sample(n_); }

    bool all_finite() const
    {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    bool is_nonnegative() const
    {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0; });
    }

    /// Sup norm over samples and components.
    double sup_norm() const { return norm_inf(values_); }

    /// phi(theta) for theta in [-tau, 0]: exact on grid nodes, otherwise the
    /// cubic through the four nearest samples (stencil clamped at the ends).
    Vector at(double theta) const
    {
        Vector out(dim_, 0.0);
        at(theta, out);
        return out;
    }

    void at(double theta, std::span<double> out) const
    {
        const double slack = 1e-12 * std::max(1.0, tau_);
        if (theta > slack || theta < -tau_ - slack) {
            throw Error(ErrorCode::DelayExceedsHistory,
                        "theta=" + std::to_string(theta) + " outside [-" + std::to_string(tau_) +
                            ", 0]");
        }
        if (n_ == 0) {
            std::copy_n(values_.begin(), dim_, out.begin());
            return;
        }
        const double h = spacing();
        const double pos = std::clamp((theta + tau_) / h, 0.0, static_cast<double>(n_));
        const double nearest = std::round(pos);
        if (std::abs(pos - nearest) <= 1e-12 * std::max(1.0, pos)) {
            const auto s = sample(static_cast<std::size_t>(nearest));
            std::copy(s.begin(), s.end(), out.begin());
            return;
        }
        const std::size_t cell = std::min(static_cast<std::size_t>(pos), n_ - 1);
        if (n_ < 3) {
            // Too few samples for a cubic: linear between the bracketing nodes.
            const double w = pos - static_cast<double>(cell);
            const auto a = sample(cell);
            const auto b = sample(cell + 1);
            for (std::size_t i = 0; i < dim_; ++i) {
                out[i] = (1.0 - w) * a[i] + w * b[i];
            }
            return;
        }
        std::size_t first = cell >= 1 ? cell - 1 : 0;
        first = std::min(first, n_ - 3);
        std::array<double, 4> weight{};
        for (std::size_t a = 0; a < 4; ++a) {
            double w = 1.0;
            const double xa = static_cast<double>(first + a);
            for (std::size_t b = 0; b < 4; ++b) {
                if (b != a) {
                    const double xb = static_cast<double>(first + b);
                    w *= (pos - xb) / (xa - xb);
                }
            }
            weight[a] = w;
        }
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t a = 0; a < 4; ++a) {
            const auto s = sample(first + a);
            for (std::size_t i = 0; i < dim_; ++i) {
                out[i] += weight[a] * s[i];
            }
        }
    }

    HistorySegment& operator+=(const HistorySegment& o)
    {
        require_same_grid(o);
        for (std::size_t k = 0; k < values_.size(); ++k) {
            values_[k] += o.values_[k];
        }
        return *this;
    }

    HistorySegment& operator*=(double c)
    {
        for (double& v : values_) {
            v *= c;
        }
        return *this;
    }

    friend HistorySegment operator+(HistorySegment a, const HistorySegment& b) { return a += b; }
    friend HistorySegment operator*(double c, HistorySegment a) { return a *= c; }

    void require_same_grid(const HistorySegment& o) const
    {
        if (o.dim_ != dim_ || o.n_ != n_ || o.tau_ != tau_) {
            throw Error(ErrorCode::InvalidArgument, "history segments live on different grids");
        }
    }

private:
    std::size_t dim_ = 0;
    double tau_ = 0.0;
    std::size_t n_ = 0;
    std::vector<double> values_;
};

struct DelayTerm {
    double tau;
    DenseMatrix matrix;

    friend bool operator==(const DelayTerm&, const DelayTerm&) = default;
};

/// L(phi) = A0 phi(0) + sum_k A_k phi(-tau_k). Terms are kept sorted by
/// delay; duplicate delays are merged by summing their matrices.
class DelayLinearOperator {
public:
    DelayLinearOperator() = default;

    explicit DelayLinearOperator(DenseMatrix a0, std::vector<DelayTerm> terms = {})
        : a0_(std::move(a0))
    {
        if (a0_.dim() == 0) {
            throw Error(ErrorCode::InvalidArgument, "operator dimension must be >= 1");
        }
        a0_.require_finite();
        for (auto& t : terms) {
            add_term(t.tau, std::move(t.matrix));
        }
    }

    static DelayLinearOperator zero(std::size_t m) { return DelayLinearOperator(DenseMatrix(m)); }

    std::size_t dim() const noexcept { return a0_.dim(); }
    const DenseMatrix& instantaneous() const noexcept { return a0_; }
    const std::vector<DelayTerm>& terms() const noexcept { return terms_; }

    double max_delay() const noexcept { return terms_.empty() ? 0.0 : terms_.back().tau; }
    double min_delay() const noexcept { return terms_.empty() ? 0.0 : terms_.front().tau; }

    std::vector<double> delays() const
    {
        std::vector<double> out;
        out.reserve(terms_.size());
        for (const auto& t : terms_) {
            out.push_back(t.tau);
        }
        return out;
    }

    /// A0 phi(0) + sum_k A_k phi(-tau_k).
    Vector evaluate(const HistorySegment& phi) const
    {
        if (phi.dim() != dim()) {
            throw Error(ErrorCode::InvalidArgument, "history dimension does not match operator");
        }
        if (phi.tau() < max_delay()) {
            throw Error(ErrorCode::DelayExceedsHistory,
                        "history covers " + std::to_string(phi.tau()) + " but operator needs " +
                            std::to_string(max_delay()));
        }
        Vector out = a0_ * phi.head();
        Vector lagged(dim());
        for (const auto& t : terms_) {
            phi.at(-t.tau, lagged);
            const Vector contrib = t.matrix * lagged;
            for (std::size_t i = 0; i < dim(); ++i) {
                out[i] += contrib[i];
            }
        }
        return out;
    }

    /// Matrix of the operator on constant histories: A0 + sum_k A_k.
    DenseMatrix hat() const
    {
        DenseMatrix out = a0_;
        for (const auto& t : terms_) {
            out += t.matrix;
        }
        return out;
    }

    /// Condition (K) for the discrete-delay class: A0 Metzler and every
    /// delayed matrix entrywise nonnegative.
    bool check_cooperative(double eps_order = 0.0) const
    {
        if (!is_metzler(a0_, eps_order)) {
            return false;
        }
        return std::all_of(terms_.begin(), terms_.end(),
                           [&](const DelayTerm& t) { return is_nonnegative(t.matrix, eps_order); });
    }

    /// Maps nonnegative histories to nonnegative vectors.
    bool check_positive(double eps_order = 0.0) const
    {
        if (!is_nonnegative(a0_, eps_order)) {
            return false;
        }
        return std::all_of(terms_.begin(), terms_.end(),
                           [&](const DelayTerm& t) { return is_nonnegative(t.matrix, eps_order); });
    }

    DelayLinearOperator scale(double c) const
    {
        if (!(c > 0.0) || !std::isfinite(c)) {
            throw Error(ErrorCode::InvalidArgument, "scale factor must be positive and finite");
        }
        return scaled_by(c);
    }

    DelayLinearOperator negate() const { return scaled_by(-1.0); }

    DelayLinearOperator shifted(double c) const
    {
        DelayLinearOperator out = *this;
        out.a0_ = a0_.shifted(c);
        return out;
    }

    DelayLinearOperator& operator+=(const DelayLinearOperator& o)
    {
        if (o.dim() != dim()) {
            throw Error(ErrorCode::InvalidArgument, "operator dimensions differ");
        }
        a0_ += o.a0_;
        for (const auto& t : o.terms_) {
            add_term(t.tau, t.matrix);
        }
        return *this;
    }

    friend DelayLinearOperator operator+(DelayLinearOperator a, const DelayLinearOperator& b)
    {
        return a += b;
    }

    friend DelayLinearOperator operator-(DelayLinearOperator a, const DelayLinearOperator& b)
    {
        return a += b.negate();
    }

    friend bool operator==(const DelayLinearOperator&, const DelayLinearOperator&) = default;

private:
    DelayLinearOperator scaled_by(double c) const
    {
        DelayLinearOperator out = *this;
        out.a0_ *= c;
        for (auto& t : out.terms_) {
            t.matrix *= c;
        }
        return out;
    }

    void add_term(double tau, DenseMatrix matrix)
    {
        if (!(tau > 0.0) || !std::isfinite(tau)) {
            throw Error(ErrorCode::InvalidArgument, "delays must be positive and finite, got " +
                                                        std::to_string(tau));
        }
        if (matrix.dim() != dim()) {
            throw Error(ErrorCode::InvalidArgument, "delayed matrix has wrong dimension");
        }
        matrix.require_finite();
        auto it = std::lower_bound(terms_.begin(), terms_.end(), tau,
                                   [](const DelayTerm& t, double v) { return t.tau < v; });
        if (it != terms_.end() && it->tau == tau) {
            it->matrix += matrix;
        } else {
            terms_.insert(it, DelayTerm{tau, std::move(matrix)});
        }
    }

    DenseMatrix a0_;
    std::vector<DelayTerm> terms_;
};

} // namespace r0fde
