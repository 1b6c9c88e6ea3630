#pragma once

// Small dense real matrices: arithmetic, LU solves, the unsymmetric
// eigenvalue problem (Hessenberg + Francis double-shift QR), and the order
// predicates (nonnegative / Metzler) used by the cooperativity checks.

#include "r0fde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace r0fde {

using Vector = std::vector<double>;
using Complex = std::complex<double>;

/// Square m x m real matrix, row-major.
class DenseMatrix {
public:
    DenseMatrix() = default;

    explicit DenseMatrix(std::size_t m, double fill = 0.0) : dim_(m), data_(m * m, fill) {}

    DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
        : DenseMatrix(rows.size())
    {
        std::size_t i = 0;
        for (const auto& row : rows) {
            if (row.size() != dim_) {
                throw Error(ErrorCode::InvalidArgument, "matrix rows must all have length " +
                                                            std::to_string(dim_));
            }
            std::size_t j = 0;
            for (double v : row) {
                (*this)(i, j++) = v;
            }
            ++i;
        }
        require_finite();
    }

    static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows)
    {
        DenseMatrix out(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows.size()) {
                throw Error(ErrorCode::InvalidArgument, "matrix is not square");
            }
            for (std::size_t j = 0; j < rows.size(); ++j) {
                out(i, j) = rows[i][j];
            }
        }
        out.require_finite();
        return out;
    }

    static DenseMatrix identity(std::size_t m)
    {
        DenseMatrix out(m);
        for (std::size_t i = 0; i < m; ++i) {
            out(i, i) = 1.0;
        }
        return out;
    }

    std::size_t dim() const noexcept { return dim_; }
    bool empty() const noexcept { return dim_ == 0; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * dim_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    std::vector<std::vector<double>> rows() const
    {
        std::vector<std::vector<double>> out(dim_, std::vector<double>(dim_));
        for (std::size_t i = 0; i < dim_; ++i) {
            for (std::size_t j = 0; j < dim_; ++j) {
                out[i][j] = (*this)(i, j);
            }
        }
        return out;
    }

    bool all_finite() const
    {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    void require_finite() const
    {
        if (!all_finite()) {
            throw Error(ErrorCode::InvalidArgument, "matrix has non-finite entries");
        }
    }

    DenseMatrix transpose() const
    {
        DenseMatrix out(dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
            for (std::size_t j = 0; j < dim_; ++j) {
                out(j, i) = (*this)(i, j);
            }
        }
        return out;
    }

    /// Maximum absolute row sum.
    double norm_inf() const
    {
        double best = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) {
                row += std::abs((*this)(i, j));
            }
            best = std::max(best, row);
        }
        return best;
    }

    double norm_frobenius() const
    {
        double s = 0.0;
        for (double v : data_) {
            s += v * v;
        }
        return std::sqrt(s);
    }

    Vector operator*(std::span<const double> x) const
    {
        check_len(x.size());
        Vector y(dim_, 0.0);
        for (std::size_t i = 0; i < dim_; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) {
                acc += (*this)(i, j) * x[j];
            }
            y[i] = acc;
        }
        return y;
    }

    Vector operator*(const Vector& x) const { return (*this) * std::span<const double>(x); }

    DenseMatrix operator*(const DenseMatrix& rhs) const
    {
        check_len(rhs.dim_);
        DenseMatrix out(dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
            for (std::size_t k = 0; k < dim_; ++k) {
                const double a = (*this)(i, k);
                if (a == 0.0) {
                    continue;
                }
                for (std::size_t j = 0; j < dim_; ++j) {
                    out(i, j) += a * rhs(k, j);
                }
            }
        }
        return out;
    }

    DenseMatrix& operator+=(const DenseMatrix& rhs)
    {
        check_len(rhs.dim_);
        for (std::size_t k = 0; k < data_.size(); ++k) {
            data_[k] += rhs.data_[k];
        }
        return *this;
    }

    DenseMatrix& operator-=(const DenseMatrix& rhs)
    {
        check_len(rhs.dim_);
        for (std::size_t k = 0; k < data_.size(); ++k) {
            data_[k] -= rhs.data_[k];
        }
        return *this;
    }

    DenseMatrix& operator*=(double c)
    {
        for (double& v : data_) {
            v *= c;
        }
        return *this;
    }

    friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
    friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
    friend DenseMatrix operator*(DenseMatrix a, double c) { return a *= c; }
    friend DenseMatrix operator*(double c, DenseMatrix a) { return a *= c; }
    friend DenseMatrix operator-(DenseMatrix a) { return a *= -1.0; }

    /// Adds c to every diagonal entry.
    DenseMatrix shifted(double c) const
    {
        DenseMatrix out = *this;
        for (std::size_t i = 0; i < dim_; ++i) {
            out(i, i) += c;
        }
        return out;
    }

    friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) = default;

private:
    void check_len(std::size_t n) const
    {
        if (n != dim_) {
            throw Error(ErrorCode::InvalidArgument, "dimension mismatch: expected " +
                                                        std::to_string(dim_) + ", got " +
                                                        std::to_string(n));
        }
    }

    std::size_t dim_ = 0;
    std::vector<double> data_;
};

inline double norm_inf(std::span<const double> v)
{
    double best = 0.0;
    for (double x : v) {
        best = std::max(best, std::abs(x));
    }
    return best;
}

inline double norm2(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// LU with partial pivoting

/// LU factorization of a square matrix stored row-major, real or complex.
template <class T>
class LuFactorization {
public:
    /// Factors `a` (m x m, row-major). A pivot smaller than `pivot_floor` in
    /// magnitude raises Singular unless `regularize` is set, in which case the
    /// pivot is replaced by `pivot_floor` (used for inverse iteration).
    LuFactorization(std::vector<T> a, std::size_t m, double pivot_floor, bool regularize = false)
        : m_(m), lu_(std::move(a)), perm_(m)
    {
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        for (std::size_t k = 0; k < m_; ++k) {
            std::size_t p = k;
            double best = std::abs(at(k, k));
            for (std::size_t i = k + 1; i < m_; ++i) {
                if (std::abs(at(i, k)) > best) {
                    best = std::abs(at(i, k));
                    p = i;
                }
            }
            if (p != k) {
                for (std::size_t j = 0; j < m_; ++j) {
                    std::swap(at(k, j), at(p, j));
                }
                std::swap(perm_[k], perm_[p]);
            }
            if (!(best > pivot_floor)) {
                if (!regularize) {
                    throw Error(ErrorCode::Singular,
                                "pivot " + std::to_string(best) + " below floor " +
                                    std::to_string(pivot_floor) + " at column " + std::to_string(k));
                }
                at(k, k) = T(pivot_floor > 0.0 ? pivot_floor : std::numeric_limits<double>::min());
            }
            const T pivot = at(k, k);
            for (std::size_t i = k + 1; i < m_; ++i) {
                const T factor = at(i, k) / pivot;
                at(i, k) = factor;
                if (factor == T(0)) {
                    continue;
                }
                for (std::size_t j = k + 1; j < m_; ++j) {
                    at(i, j) -= factor * at(k, j);
                }
            }
        }
    }

    std::vector<T> solve(std::span<const T> b) const
    {
        if (b.size() != m_) {
            throw Error(ErrorCode::InvalidArgument, "right-hand side has wrong length");
        }
        std::vector<T> x(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            x[i] = b[perm_[i]];
        }
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                x[i] -= at(i, j) * x[j];
            }
        }
        for (std::size_t ii = m_; ii-- > 0;) {
            for (std::size_t j = ii + 1; j < m_; ++j) {
                x[ii] -= at(ii, j) * x[j];
            }
            x[ii] /= at(ii, ii);
        }
        return x;
    }

private:
    T& at(std::size_t i, std::size_t j) { return lu_[i * m_ + j]; }
    const T& at(std::size_t i, std::size_t j) const { return lu_[i * m_ + j]; }

    std::size_t m_;
    std::vector<T> lu_;
    std::vector<std::size_t> perm_;
};

/// Relative pivot floor used for Singular detection.
inline constexpr double kPivotFloorRelative = 1e-12;

inline LuFactorization<double> lu_factor(const DenseMatrix& m)
{
    m.require_finite();
    const auto d = m.data();
    return {std::vector<double>(d.begin(), d.end()), m.dim(),
            kPivotFloorRelative * m.norm_inf()};
}

/// Solves M x = b with partial pivoting.
inline Vector lu_solve(const DenseMatrix& m, std::span<const double> b)
{
    if (b.size() != m.dim()) {
        throw Error(ErrorCode::InvalidArgument, "lu_solve: b has wrong length");
    }
    if (m.dim() == 0) {
        return {};
    }
    return lu_factor(m).solve(b);
}

inline Vector lu_solve(const DenseMatrix& m, const Vector& b)
{
    return lu_solve(m, std::span<const double>(b));
}

/// M^{-1} assembled column by column.
inline DenseMatrix inverse(const DenseMatrix& m)
{
    const auto lu = lu_factor(m);
    DenseMatrix out(m.dim());
    Vector e(m.dim(), 0.0);
    for (std::size_t j = 0; j < m.dim(); ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1.0;
        const Vector col = lu.solve(e);
        for (std::size_t i = 0; i < m.dim(); ++i) {
            out(i, j) = col[i];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Eigenvalues

struct Spectrum {
    std::vector<Complex> eigenvalues;
    /// Largest ||Mv - lambda v|| over the reported eigenvalues, v a unit
    /// vector from inverse iteration.
    double residual_bound = 0.0;
};

struct EigenConfig {
    /// Total QR sweeps allowed are `iteration_factor * m * m`.
    std::size_t iteration_factor = 100;
    /// Compute `Spectrum::residual_bound` (costs one complex LU per eigenvalue).
    bool compute_residuals = true;
};

namespace detail {

    using RowMajor = std::vector<double>;

    // Diagonal similarity scaling by powers of two so that row and column
    // norms are comparable. Eigenvalues are unchanged.
    inline void balance(RowMajor& a, std::size_t n)
    {
        constexpr double radix = 2.0;
        constexpr double sqrdx = radix * radix;
        auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
        bool done = false;
        while (!done) {
            done = true;
            for (std::size_t i = 0; i < n; ++i) {
                double r = 0.0;
                double c = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j != i) {
                        c += std::abs(at(j, i));
                        r += std::abs(at(i, j));
                    }
                }
                if (c == 0.0 || r == 0.0) {
                    continue;
                }
                double g = r / radix;
                double f = 1.0;
                const double s = c + r;
                while (c < g) {
                    f *= radix;
                    c *= sqrdx;
                }
                g = r * radix;
                while (c > g) {
                    f /= radix;
                    c /= sqrdx;
                }
                if ((c + r) / f < 0.95 * s) {
                    done = false;
                    g = 1.0 / f;
                    for (std::size_t j = 0; j < n; ++j) {
                        at(i, j) *= g;
                    }
                    for (std::size_t j = 0; j < n; ++j) {
                        at(j, i) *= f;
                    }
                }
            }
        }
    }

    // Reduction to upper Hessenberg form by stabilized elementary similarity
    // transformations; entries below the subdiagonal are zeroed on exit.
    inline void to_hessenberg(RowMajor& a, std::size_t n)
    {
        auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
        for (std::size_t m = 1; m + 1 < n; ++m) {
            double x = 0.0;
            std::size_t piv = m;
            for (std::size_t j = m; j < n; ++j) {
                if (std::abs(at(j, m - 1)) > std::abs(x)) {
                    x = at(j, m - 1);
                    piv = j;
                }
            }
            if (piv != m) {
                for (std::size_t j = m - 1; j < n; ++j) {
                    std::swap(at(piv, j), at(m, j));
                }
                for (std::size_t j = 0; j < n; ++j) {
                    std::swap(at(j, piv), at(j, m));
                }
            }
            if (x == 0.0) {
                continue;
            }
            for (std::size_t i = m + 1; i < n; ++i) {
                double y = at(i, m - 1);
                if (y == 0.0) {
                    continue;
                }
                y /= x;
                at(i, m - 1) = y;
                for (std::size_t j = m; j < n; ++j) {
                    at(i, j) -= y * at(m, j);
                }
                for (std::size_t j = 0; j < n; ++j) {
                    at(j, m) += y * at(j, i);
                }
            }
        }
        for (std::size_t i = 2; i < n; ++i) {
            for (std::size_t j = 0; j + 1 < i; ++j) {
                at(i, j) = 0.0;
            }
        }
    }

    inline double sign_of(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

    // Francis double-shift QR on an upper Hessenberg matrix. The shifts are
    // the eigenvalues of the trailing 2x2 block, with ad-hoc exceptional
    // shifts after 10 and 20 stalled sweeps on the same eigenvalue.
    inline std::vector<Complex> hessenberg_qr(RowMajor& a, std::size_t n, std::size_t max_sweeps)
    {
        auto at = [&](std::ptrdiff_t i, std::ptrdiff_t j) -> double& {
            return a[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)];
        };
        constexpr double eps = std::numeric_limits<double>::epsilon();
        std::vector<double> wr(n, 0.0);
        std::vector<double> wi(n, 0.0);

        double anorm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = (i > 0 ? i - 1 : 0); j < n; ++j) {
                anorm += std::abs(a[i * n + j]);
            }
        }

        std::size_t sweeps = 0;
        std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n) - 1;
        double t = 0.0;
        double p = 0.0, q = 0.0, r = 0.0, s = 0.0, w = 0.0, x = 0.0, y = 0.0, z = 0.0;
        while (nn >= 0) {
            int its = 0;
            std::ptrdiff_t l = 0;
            do {
                for (l = nn; l >= 1; --l) {
                    s = std::abs(at(l - 1, l - 1)) + std::abs(at(l, l));
                    if (s == 0.0) {
                        s = anorm;
                    }
                    if (std::abs(at(l, l - 1)) <= eps * s) {
                        at(l, l - 1) = 0.0;
                        break;
                    }
                }
                x = at(nn, nn);
                if (l == nn) {
                    wr[nn] = x + t;
                    wi[nn] = 0.0;
                    --nn;
                } else {
                    y = at(nn - 1, nn - 1);
                    w = at(nn, nn - 1) * at(nn - 1, nn);
                    if (l == nn - 1) {
                        p = 0.5 * (y - x);
                        q = p * p + w;
                        z = std::sqrt(std::abs(q));
                        x += t;
                        if (q >= 0.0) {
                            z = p + sign_of(z, p);
                            wr[nn - 1] = wr[nn] = x + z;
                            if (z != 0.0) {
                                wr[nn] = x - w / z;
                            }
                            wi[nn - 1] = wi[nn] = 0.0;
                        } else {
                            wr[nn - 1] = wr[nn] = x + p;
                            wi[nn - 1] = z;
                            wi[nn] = -z;
                        }
                        nn -= 2;
                    } else {
                        if (++sweeps > max_sweeps) {
                            throw Error(ErrorCode::NonConvergence,
                                        "QR iteration exceeded " + std::to_string(max_sweeps) +
                                            " sweeps");
                        }
                        if (its == 10 || its == 20) {
                            t += x;
                            for (std::ptrdiff_t i = 0; i <= nn; ++i) {
                                at(i, i) -= x;
                            }
                            s = std::abs(at(nn, nn - 1)) + std::abs(at(nn - 1, nn - 2));
                            y = x = 0.75 * s;
                            w = -0.4375 * s * s;
                        }
                        ++its;
                        std::ptrdiff_t m = nn - 2;
                        for (; m >= l; --m) {
                            z = at(m, m);
                            r = x - z;
                            s = y - z;
                            p = (r * s - w) / at(m + 1, m) + at(m, m + 1);
                            q = at(m + 1, m + 1) - z - r - s;
                            r = at(m + 2, m + 1);
                            s = std::abs(p) + std::abs(q) + std::abs(r);
                            p /= s;
                            q /= s;
                            r /= s;
                            if (m == l) {
                                break;
                            }
                            const double u = std::abs(at(m, m - 1)) * (std::abs(q) + std::abs(r));
                            const double v = std::abs(p) * (std::abs(at(m - 1, m - 1)) + std::abs(z) +
                                                            std::abs(at(m + 1, m + 1)));
                            if (u <= eps * v) {
                                break;
                            }
                        }
                        for (std::ptrdiff_t i = m; i < nn - 1; ++i) {
                            at(i + 2, i) = 0.0;
                            if (i != m) {
                                at(i + 2, i - 1) = 0.0;
                            }
                        }
                        for (std::ptrdiff_t k = m; k < nn; ++k) {
                            if (k != m) {
                                p = at(k, k - 1);
                                q = at(k + 1, k - 1);
                                r = 0.0;
                                if (k + 1 != nn) {
                                    r = at(k + 2, k - 1);
                                }
                                x = std::abs(p) + std::abs(q) + std::abs(r);
                                if (x != 0.0) {
                                    p /= x;
                                    q /= x;
                                    r /= x;
                                }
                            }
                            s = sign_of(std::sqrt(p * p + q * q + r * r), p);
                            if (s == 0.0) {
                                continue;
                            }
                            if (k == m) {
                                if (l != m) {
                                    at(k, k - 1) = -at(k, k - 1);
                                }
                            } else {
                                at(k, k - 1) = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for (std::ptrdiff_t j = k; j <= nn; ++j) {
                                p = at(k, j) + q * at(k + 1, j);
                                if (k + 1 != nn) {
                                    p += r * at(k + 2, j);
                                    at(k + 2, j) -= p * z;
                                }
                                at(k + 1, j) -= p * y;
                                at(k, j) -= p * x;
                            }
                            const std::ptrdiff_t mmin = nn < k + 3 ? nn : k + 3;
                            for (std::ptrdiff_t i = l; i <= mmin; ++i) {
                                p = x * at(i, k) + y * at(i, k + 1);
                                if (k + 1 != nn) {
                                    p += z * at(i, k + 2);
                                    at(i, k + 2) -= p * r;
                                }
                                at(i, k + 1) -= p * q;
                                at(i, k) -= p;
                            }
                        }
                    }
                }
            } while (l + 1 < nn);
        }

        std::vector<Complex> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = Complex(wr[i], wi[i]);
        }
        return out;
    }

} // namespace detail

/// Smallest ||M v - lambda v||_2 found by inverse iteration over unit v.
inline double eigen_residual(const DenseMatrix& m, Complex lambda, int sweeps = 3)
{
    const std::size_t n = m.dim();
    if (n == 0) {
        return 0.0;
    }
    const double scale = std::max(m.norm_inf(), std::abs(lambda));
    const double floor = std::max(scale, 1.0) * std::numeric_limits<double>::epsilon();
    std::vector<Complex> shifted(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            shifted[i * n + j] = m(i, j) - (i == j ? lambda : Complex(0.0));
        }
    }
    const LuFactorization<Complex> lu(shifted, n, floor, /*regularize=*/true);

    std::vector<Complex> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Non-symmetric start so that no eigenvector is missed by construction.
        v[i] = Complex(1.0 + 0.1 * static_cast<double>(i), 0.05 * static_cast<double>(i % 3));
    }
    auto normalize = [&](std::vector<Complex>& u) {
        double s = 0.0;
        for (const auto& c : u) {
            s += std::norm(c);
        }
        s = std::sqrt(s);
        if (s == 0.0 || !std::isfinite(s)) {
            return false;
        }
        for (auto& c : u) {
            c /= s;
        }
        return true;
    };
    normalize(v);

    auto residual_of = [&](const std::vector<Complex>& u) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            Complex acc = -lambda * u[i];
            for (std::size_t j = 0; j < n; ++j) {
                acc += m(i, j) * u[j];
            }
            s += std::norm(acc);
        }
        return std::sqrt(s);
    };

    double best = residual_of(v);
    for (int k = 0; k < sweeps; ++k) {
        auto next = lu.solve(v);
        if (!normalize(next)) {
            break;
        }
        v = std::move(next);
        best = std::min(best, residual_of(v));
    }
    return best;
}

/// All m eigenvalues of M with multiplicity. Complex eigenvalues come in
/// exactly conjugate pairs.
inline Spectrum eigenvalues(const DenseMatrix& m, const EigenConfig& cfg = {})
{
    if (m.dim() == 0) {
        throw Error(ErrorCode::InvalidArgument, "eigenvalues of an empty matrix");
    }
    m.require_finite();
    const std::size_t n = m.dim();
    const auto d = m.data();
    detail::RowMajor work(d.begin(), d.end());
    detail::balance(work, n);
    detail::to_hessenberg(work, n);

    Spectrum out;
    out.eigenvalues = detail::hessenberg_qr(work, n, cfg.iteration_factor * n * n);
    if (cfg.compute_residuals) {
        for (const auto& lambda : out.eigenvalues) {
            out.residual_bound = std::max(out.residual_bound, eigen_residual(m, lambda));
        }
    }
    return out;
}

namespace detail {
    inline EigenConfig values_only()
    {
        EigenConfig cfg;
        cfg.compute_residuals = false;
        return cfg;
    }
} // namespace detail

/// max |lambda| over the spectrum.
inline double spectral_radius(const DenseMatrix& m)
{
    const auto spec = eigenvalues(m, detail::values_only());
    double r = 0.0;
    for (const auto& lambda : spec.eigenvalues) {
        r = std::max(r, std::abs(lambda));
    }
    return r;
}

/// s(M) = max Re(lambda).
inline double stability_modulus(const DenseMatrix& m)
{
    const auto spec = eigenvalues(m, detail::values_only());
    double s = -std::numeric_limits<double>::infinity();
    for (const auto& lambda : spec.eigenvalues) {
        s = std::max(s, lambda.real());
    }
    return s;
}

// ---------------------------------------------------------------------------
// Order structure

inline bool is_nonnegative(const DenseMatrix& m, double eps_order = 0.0)
{
    const auto d = m.data();
    return std::all_of(d.begin(), d.end(), [&](double v) { return v >= -eps_order; });
}

/// Off-diagonal entries all >= -eps_order.
inline bool is_metzler(const DenseMatrix& m, double eps_order = 0.0)
{
    for (std::size_t i = 0; i < m.dim(); ++i) {
        for (std::size_t j = 0; j < m.dim(); ++j) {
            if (i != j && m(i, j) < -eps_order) {
                return false;
            }
        }
    }
    return true;
}

struct PerronConfig {
    std::size_t max_iterations = 200000;
    double relative_tolerance = 1e-13;
};

/// Collatz-Wielandt bracket [lower, upper] for the Perron root of a
/// nonnegative matrix, narrowed by power iteration.
struct PerronBracket {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t iterations = 0;
    double value() const { return 0.5 * (lower + upper); }
};

/// Principal eigenvalue of a Metzler matrix computed independently of the QR
/// solver: power iteration on M + aI, a = max(0, -min diag) + 1, from the
/// all-ones vector; returns the bracket shifted back by -a.
inline PerronBracket perron_bracket_metzler(const DenseMatrix& m, const PerronConfig& cfg = {})
{
    if (!is_metzler(m)) {
        throw Error(ErrorCode::NotMetzler, "matrix has a negative off-diagonal entry");
    }
    m.require_finite();
    const std::size_t n = m.dim();
    double min_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        min_diag = std::min(min_diag, m(i, i));
    }
    const double shift = std::max(0.0, -min_diag) + 1.0;
    const DenseMatrix b = m.shifted(shift);

    Vector x(n, 1.0);
    PerronBracket out;
    out.lower = 0.0;
    out.upper = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
        Vector y = b * x;
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(x[i] > 0.0)) {
                continue;
            }
            const double ratio = y[i] / x[i];
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        out.lower = std::max(out.lower, lo);
        out.upper = std::min(out.upper, hi);
        out.iterations = it + 1;
        const double top = norm_inf(y);
        if (top == 0.0) {
            out.lower = out.upper = 0.0;
            break;
        }
        for (auto& v : y) {
            // Positive diagonal of b keeps every entry strictly positive.
            v /= top;
        }
        x = std::move(y);
        if (out.upper - out.lower <= cfg.relative_tolerance * std::max(1.0, out.upper)) {
            break;
        }
    }
    out.lower -= shift;
    out.upper -= shift;
    return out;
}

inline double perron_value_metzler(const DenseMatrix& m, const PerronConfig& cfg = {})
{
    return perron_bracket_metzler(m, cfg).value();
}

} // namespace r0fde
