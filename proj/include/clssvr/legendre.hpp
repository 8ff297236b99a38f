#ifndef CLSSVR_LEGENDRE_HPP
#define CLSSVR_LEGENDRE_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"

namespace clssvr
{

/*
 * Shifted Legendre basis P_0..P_{d-1} on [lo, hi], composed with the affine map
 * phi(t) = (2t - lo - hi) / (hi - lo) onto the canonical interval [-1, 1].
 */
struct BasisSpec
{
    int degree_count{1};
    double interval_lo{-1.0};
    double interval_hi{1.0};

    BasisSpec() = default;

    BasisSpec(int count, double lo, double hi) : degree_count(count), interval_lo(lo), interval_hi(hi)
    {
        if (count < 1)
            throw DomainError("basis needs at least one function, got degree_count=" + std::to_string(count));
        if (!(lo < hi))
            throw DomainError("basis interval must satisfy lo < hi");
    }

    double width() const { return interval_hi - interval_lo; }

    // d(phi)/dt, the chain-rule factor of every t-derivative
    double scale() const { return 2.0 / width(); }
};

struct QuadratureRule
{
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// P_n(x) by the Bonnet recurrence (k+1)P_{k+1} = (2k+1) x P_k - k P_{k-1}.
inline double legendre_eval(int n, double x)
{
    if (n == 0)
        return 1.0;
    double prev = 1.0;
    double cur = x;
    for (int k = 1; k < n; ++k)
    {
        const double next = ((2.0 * k + 1.0) * x * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

/*
 * Values of d^order/dx^order P_n(x) for n = 0..count-1.
 *
 * Derivatives come from P^{(q)}_{n+1} = P^{(q)}_{n-1} + (2n+1) P^{(q-1)}_n,
 * which stays accurate at the endpoints where the Rodrigues-type closed forms
 * divide by (1 - x^2).
 */
inline std::vector<double> legendre_table(int count, double x, int order = 0)
{
    std::vector<double> row(static_cast<std::size_t>(std::max(count, 0)), 0.0);
    if (count <= 0)
        return row;

    // level q = 0
    row[0] = 1.0;
    if (count > 1)
        row[1] = x;
    for (int k = 1; k + 1 < count; ++k)
        row[k + 1] = ((2.0 * k + 1.0) * x * row[k] - k * row[k - 1]) / (k + 1.0);

    for (int q = 1; q <= order; ++q)
    {
        std::vector<double> next(row.size(), 0.0);
        if (count > 1)
            next[1] = (q == 1) ? 1.0 : 0.0;
        for (int k = 1; k + 1 < count; ++k)
            next[k + 1] = next[k - 1] + (2.0 * k + 1.0) * row[k];
        row.swap(next);
    }
    return row;
}

inline double legendre_deriv(int n, double x, int order)
{
    if (order == 0)
        return legendre_eval(n, x);
    return legendre_table(n + 1, x, order)[static_cast<std::size_t>(n)];
}

/*
 * Roots of P_m in increasing order. Newton iteration from the Chebyshev-like
 * guesses cos(pi (4k - 1) / (4m + 2)); throws NonConvergence after 100 steps.
 */
inline std::vector<double> legendre_roots(int m)
{
    if (m < 1)
        throw DomainError("legendre_roots needs m >= 1");

    std::vector<double> roots(static_cast<std::size_t>(m));
    for (int k = 1; k <= m; ++k)
    {
        double x = std::cos(std::numbers::pi * (4.0 * k - 1.0) / (4.0 * m + 2.0));
        bool converged = false;
        for (int it = 0; it < 100; ++it)
        {
            const double p = legendre_eval(m, x);
            const double dp = legendre_deriv(m, x, 1);
            const double step = p / dp;
            x -= step;
            if (std::abs(step) <= 1e-14)
            {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw NonConvergence("Newton iteration for root " + std::to_string(k) + " of P_" + std::to_string(m) +
                                 " did not converge");
        roots[static_cast<std::size_t>(k - 1)] = x;
    }
    std::sort(roots.begin(), roots.end());
    for (int k = 0; 2 * k + 1 < m; ++k)
    {
        // exact antisymmetry removes a last-ulp drift between mirrored roots
        const double r = 0.5 * (roots[static_cast<std::size_t>(m - 1 - k)] - roots[static_cast<std::size_t>(k)]);
        roots[static_cast<std::size_t>(k)] = -r;
        roots[static_cast<std::size_t>(m - 1 - k)] = r;
    }
    if (m % 2 == 1)
        roots[static_cast<std::size_t>(m / 2)] = 0.0;
    return roots;
}

inline double shift_to_canonical(const BasisSpec &spec, double t)
{
    const double tol = 1e-12 * std::max(1.0, spec.width());
    if (t < spec.interval_lo - tol || t > spec.interval_hi + tol)
        throw DomainError("point " + std::to_string(t) + " outside [" + std::to_string(spec.interval_lo) + ", " +
                          std::to_string(spec.interval_hi) + "]");
    return (2.0 * t - spec.interval_lo - spec.interval_hi) / spec.width();
}

inline double shift_to_physical(const BasisSpec &spec, double x)
{
    return 0.5 * (spec.width() * x + spec.interval_lo + spec.interval_hi);
}

/*
 * Monomial coefficients c_0..c_n of P_n, from the explicit sum over v with
 * (-1)^v (2n-2v)! / (2^n (n-v)! (n-2v)! v!). The factorials are never formed:
 * the leading coefficient is prod (2i-1)/i and each following one is a ratio
 * of the previous.
 */
inline std::vector<double> monomial_coefficients(int n)
{
    constexpr int max_degree = 30;
    if (n < 0)
        throw DomainError("negative polynomial degree");
    if (n > max_degree)
        throw DegreeTooLarge("monomial expansion limited to degree " + std::to_string(max_degree) + ", got " +
                             std::to_string(n));

    std::vector<double> coeffs(static_cast<std::size_t>(n + 1), 0.0);
    double c = 1.0;
    for (int i = 1; i <= n; ++i)
        c *= (2.0 * i - 1.0) / i;
    for (int v = 0; 2 * v <= n; ++v)
    {
        coeffs[static_cast<std::size_t>(n - 2 * v)] = c;
        const double num = static_cast<double>(n - 2 * v) * (n - 2 * v - 1);
        const double den = 2.0 * (v + 1) * (2.0 * n - 2.0 * v - 1.0);
        c *= -num / den;
    }
    return coeffs;
}

/// Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree <= 2m - 1.
inline QuadratureRule gauss_quadrature(int m)
{
    QuadratureRule rule;
    rule.nodes = legendre_roots(m);
    rule.weights.reserve(rule.nodes.size());
    for (double x : rule.nodes)
    {
        const double dp = legendre_deriv(m, x, 1);
        rule.weights.push_back(2.0 / ((1.0 - x * x) * dp * dp));
    }
    return rule;
}

} // namespace clssvr

#endif // CLSSVR_LEGENDRE_HPP
