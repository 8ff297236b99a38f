#ifndef CLSSVR_FRACTIONAL_HPP
#define CLSSVR_FRACTIONAL_HPP

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "legendre.hpp"

namespace clssvr
{

/// Non-integer order alpha > 0 of a Caputo derivative.
class FractionalOrder
{
public:
    explicit FractionalOrder(double alpha) : alpha_(alpha)
    {
        if (!(alpha > 0.0) || !std::isfinite(alpha))
            throw DomainError("fractional order must be positive, got " + std::to_string(alpha));
        if (alpha == std::floor(alpha))
            throw DomainError("fractional order must be non-integer, got " + std::to_string(alpha));
    }

    double value() const { return alpha_; }

    // number of classical derivatives inside the Caputo integral
    int ceiling() const { return static_cast<int>(std::ceil(alpha_)); }

    friend bool operator==(const FractionalOrder &, const FractionalOrder &) = default;

private:
    double alpha_;
};

/// Strictly increasing, equidistant abscissae x_0 < ... < x_m for the L1 scheme.
class L1Grid
{
public:
    explicit L1Grid(std::vector<double> points) : points_(std::move(points))
    {
        if (points_.size() < 2)
            throw GridError("L1 grid needs at least two points");
        spacing_ = (points_.back() - points_.front()) / static_cast<double>(points_.size() - 1);
        if (!(spacing_ > 0.0))
            throw GridError("L1 grid must be strictly increasing");
        for (std::size_t k = 0; k + 1 < points_.size(); ++k)
        {
            const double step = points_[k + 1] - points_[k];
            if (!(step > 0.0))
                throw GridError("L1 grid must be strictly increasing");
            if (std::abs(step - spacing_) > 1e-12 * spacing_ + 4e-16 * std::abs(points_[k + 1]))
                throw GridError("L1 grid must be equidistant");
        }
    }

    static L1Grid uniform(double lo, double hi, int intervals)
    {
        if (intervals < 1)
            throw GridError("L1 grid needs at least one interval");
        std::vector<double> pts(static_cast<std::size_t>(intervals + 1));
        for (int k = 0; k <= intervals; ++k)
            pts[static_cast<std::size_t>(k)] = lo + (hi - lo) * static_cast<double>(k) / intervals;
        pts.back() = hi;
        return L1Grid(std::move(pts));
    }

    const std::vector<double> &points() const { return points_; }
    double spacing() const { return spacing_; }
    int intervals() const { return static_cast<int>(points_.size()) - 1; }

private:
    std::vector<double> points_;
    double spacing_{0.0};
};

inline double gamma_fn(double z)
{
    if (!(z > 0.0))
        throw DomainError("gamma_fn is defined here for z > 0 only, got " + std::to_string(z));
    return std::tgamma(z);
}

/// Caputo derivative of x^k with base point 0: Gamma(k+1)/Gamma(k+1-alpha) x^(k-alpha), or 0 for k < ceil(alpha).
inline double caputo_monomial(int k, FractionalOrder alpha, double x)
{
    if (k < alpha.ceiling())
        return 0.0;
    if (x <= 0.0)
        return 0.0;
    const double a = alpha.value();
    return std::exp(std::lgamma(k + 1.0) - std::lgamma(k + 1.0 - a)) * std::pow(x, k - a);
}

/*
 * Re-expands p(xi) = sum c_k xi^k, xi = phi(t), as a polynomial in tau = t - a.
 * With xi = s tau - 1 (s = 2 / (b - a)), (s tau - 1)^k is expanded binomially.
 * Extended precision because the alternating sums cancel for high degree.
 */
inline std::vector<long double> shifted_power_coefficients(std::span<const double> canonical, const BasisSpec &spec)
{
    const std::size_t n = canonical.size();
    std::vector<long double> out(n, 0.0L);
    const long double s = 2.0L / (static_cast<long double>(spec.interval_hi) - spec.interval_lo);

    // row of binomials C(k, j), updated in place
    std::vector<long double> binom(n, 0.0L);
    for (std::size_t k = 0; k < n; ++k)
    {
        binom[k] = 1.0L;
        for (std::size_t j = k - 1; j >= 1 && j < k; --j)
            binom[j] += binom[j - 1];
        const long double ck = canonical[k];
        if (ck == 0.0L)
            continue;
        long double spow = 1.0L;
        for (std::size_t j = 0; j <= k; ++j)
        {
            const long double sign = ((k - j) % 2 == 0) ? 1.0L : -1.0L;
            out[j] += ck * binom[j] * spow * sign;
            spow *= s;
        }
    }
    return out;
}

/*
 * Coefficients of P_n(phi(t)) in powers of tau = t - a directly:
 * (-1)^(n+k) C(n,k) C(n+k,k) / L^k. The binomials are integers, exact in
 * long double for the degrees used here, so nothing cancels before the
 * Caputo rule is applied.
 */
inline std::vector<long double> shifted_legendre_power_coefficients(int n, const BasisSpec &spec)
{
    if (n < 0)
        throw DomainError("negative polynomial degree");
    std::vector<long double> out(static_cast<std::size_t>(n + 1));
    const long double inv_width = 1.0L / (static_cast<long double>(spec.interval_hi) - spec.interval_lo);
    long double binom_n_k = 1.0L;   // C(n, k)
    long double binom_nk_k = 1.0L;  // C(n + k, k)
    long double scale = 1.0L;
    for (int k = 0; k <= n; ++k)
    {
        if (k > 0)
        {
            binom_n_k = binom_n_k * (n - k + 1) / k;
            binom_nk_k = binom_nk_k * (n + k) / k;
            scale *= inv_width;
        }
        const long double sign = ((n + k) % 2 == 0) ? 1.0L : -1.0L;
        out[static_cast<std::size_t>(k)] = sign * binom_n_k * binom_nk_k * scale;
    }
    return out;
}

/// Caputo derivative (base point a) of sum_j c_j (t - a)^j at tau = t - a.
inline double caputo_power_series(std::span<const long double> tau_coeffs, FractionalOrder alpha, double tau)
{
    if (tau <= 0.0)
        return 0.0;
    // the monomial rule in extended precision; the coefficients alternate and cancel
    const long double a = alpha.value();
    const long double x = tau;
    long double acc = 0.0L;
    for (std::size_t k = static_cast<std::size_t>(alpha.ceiling()); k < tau_coeffs.size(); ++k)
    {
        if (tau_coeffs[k] == 0.0L)
            continue;
        const long double kk = static_cast<long double>(k);
        acc += tau_coeffs[k] * std::exp(std::lgamma(kk + 1.0L) - std::lgamma(kk + 1.0L - a)) * std::pow(x, kk - a);
    }
    return static_cast<double>(acc);
}

/*
 * Caputo derivative with base point spec.interval_lo of the polynomial whose
 * monomial coefficients in the canonical variable xi = phi(t) are `coeffs`,
 * evaluated at the physical point t.
 */
inline double caputo_poly(std::span<const double> coeffs, FractionalOrder alpha, const BasisSpec &spec, double t)
{
    shift_to_canonical(spec, t);
    const auto tau_coeffs = shifted_power_coefficients(coeffs, spec);
    return caputo_power_series(tau_coeffs, alpha, t - spec.interval_lo);
}

/*
 * L1 approximation of the Caputo derivative at x_m from samples h_k = h(x_k):
 *
 *   D^alpha h(x_m) ~ sum_{k=0}^{m} (g_{k-1} - g_k) h_k,
 *   g_k = ((x_m - x_k)^{1-alpha} - (x_m - x_{k+1})^{1-alpha}) / (Gamma(2-alpha) (x_{k+1} - x_k))
 *
 * for 0 <= k < m and g_{-1} = g_m = 0, which is the telescoped form of the
 * piecewise-linear scheme.
 */
inline double caputo_l1(std::span<const double> samples, const L1Grid &grid, FractionalOrder alpha)
{
    const double a = alpha.value();
    if (!(a < 1.0))
        throw DomainError("L1 discretization requires 0 < alpha < 1");
    const auto &x = grid.points();
    if (samples.size() != x.size())
        throw GridError("sample count " + std::to_string(samples.size()) + " does not match grid size " +
                        std::to_string(x.size()));

    const std::size_t m = x.size() - 1;
    const double xm = x[m];
    const double denom_gamma = gamma_fn(2.0 - a);
    auto g = [&](std::size_t k) {
        return (std::pow(xm - x[k], 1.0 - a) - std::pow(xm - x[k + 1], 1.0 - a)) / (denom_gamma * (x[k + 1] - x[k]));
    };

    double acc = 0.0;
    double g_prev = 0.0; // g_{-1}
    for (std::size_t k = 0; k <= m; ++k)
    {
        const double g_k = (k < m) ? g(k) : 0.0;
        acc += (g_prev - g_k) * samples[k];
        g_prev = g_k;
    }
    return acc;
}

} // namespace clssvr

#endif // CLSSVR_FRACTIONAL_HPP
