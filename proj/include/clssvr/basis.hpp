#ifndef CLSSVR_BASIS_HPP
#define CLSSVR_BASIS_HPP

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dae_model.hpp"
#include "error.hpp"
#include "fractional.hpp"
#include "legendre.hpp"

namespace clssvr
{

enum class FractionalScheme
{
    analytic,
    l1
};

/// How non-local operators are discretized when applied to basis functions.
struct OperatorSettings
{
    FractionalScheme fractional_scheme{FractionalScheme::analytic};
    int l1_grid_size{1000};
    QuadratureRule volterra_rule{gauss_quadrature(32)};

    static OperatorSettings make(FractionalScheme scheme, int l1_grid_size, int quadrature_nodes)
    {
        OperatorSettings s;
        s.fractional_scheme = scheme;
        s.l1_grid_size = l1_grid_size;
        s.volterra_rule = gauss_quadrature(quadrature_nodes);
        return s;
    }
};

/*
 * Feature map of one unknown. 1D: phi_j(t) = P_j(phi(t)), j < d.
 * 2D: phi_p(x) phi_q(t) with flat index p*d + q.
 */
class Basis
{
public:
    Basis(const DaeProblem &problem, int degree_count)
    {
        if (const auto *r = std::get_if<Rectangle>(&problem.domain))
        {
            x_spec_ = BasisSpec(degree_count, r->x_lo, r->x_hi);
            t_spec_ = BasisSpec(degree_count, r->t_lo, r->t_hi);
        }
        else
        {
            const auto &i = std::get<Interval>(problem.domain);
            t_spec_ = BasisSpec(degree_count, i.lo, i.hi);
            expand_powers();
        }
    }

    explicit Basis(const BasisSpec &t_spec) : t_spec_(t_spec) { expand_powers(); }
    Basis(const BasisSpec &x_spec, const BasisSpec &t_spec) : x_spec_(x_spec), t_spec_(t_spec) {}

    bool is_2d() const { return x_spec_.has_value(); }
    int degree_count() const { return t_spec_.degree_count; }
    const BasisSpec &t_spec() const { return t_spec_; }
    const BasisSpec &x_spec() const { return *x_spec_; }

    Eigen::Index size() const
    {
        const Eigen::Index d = t_spec_.degree_count;
        return is_2d() ? d * d : d;
    }

    Eigen::VectorXd values(const Point &p) const { return tensor(0, Variable::t, p); }

    /// (L phi_j)(p) for every basis function j.
    Eigen::VectorXd apply(const LinearOp &op, const Point &p, const OperatorSettings &settings) const
    {
        Eigen::VectorXd out = std::visit(
            [&](const auto &o) -> Eigen::VectorXd {
                using T = std::decay_t<decltype(o)>;
                if constexpr (std::is_same_v<T, Identity>)
                    return tensor(0, Variable::t, p);
                else if constexpr (std::is_same_v<T, Derivative>)
                    return tensor(o.order, o.variable, p);
                else if constexpr (std::is_same_v<T, Caputo>)
                    return caputo(o.alpha, p, settings);
                else
                    return volterra(o.kernel, p, settings);
            },
            op);
        if (!out.allFinite())
            throw EvaluationError("non-finite basis operator value at t=" + std::to_string(p.t));
        return out;
    }

private:
    static Eigen::VectorXd row(const BasisSpec &spec, double coord, int order)
    {
        const double xi = shift_to_canonical(spec, coord);
        const auto vals = legendre_table(spec.degree_count, xi, order);
        Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
        if (order > 0)
            v *= std::pow(spec.scale(), order);
        return v;
    }

    Eigen::VectorXd tensor(int order, Variable var, const Point &p) const
    {
        if (!is_2d())
        {
            if (var == Variable::x)
                throw ValidationError("x-derivative requested from a 1D basis");
            return row(t_spec_, p.t, order);
        }
        const Eigen::VectorXd fx = row(*x_spec_, p.x, var == Variable::x ? order : 0);
        const Eigen::VectorXd ft = row(t_spec_, p.t, var == Variable::t ? order : 0);
        const Eigen::Index d = fx.size();
        Eigen::VectorXd out(d * d);
        for (Eigen::Index a = 0; a < d; ++a)
            out.segment(a * d, d) = fx(a) * ft;
        return out;
    }

    // Powers of (t - a) for the analytic Caputo rule; left empty past the monomial degree limit.
    void expand_powers()
    {
        if (t_spec_.degree_count > 31)
            return;
        for (int j = 0; j < t_spec_.degree_count; ++j)
            tau_coeffs_.push_back(shifted_legendre_power_coefficients(j, t_spec_));
    }

    Eigen::VectorXd caputo(FractionalOrder alpha, const Point &p, const OperatorSettings &settings) const
    {
        if (is_2d())
            throw ValidationError("Caputo terms are supported on 1D problems only");
        shift_to_canonical(t_spec_, p.t);
        const int d = t_spec_.degree_count;
        Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
        const double tau = p.t - t_spec_.interval_lo;
        if (tau <= 0.0)
            return out;

        if (settings.fractional_scheme == FractionalScheme::analytic)
        {
            if (tau_coeffs_.empty())
                monomial_coefficients(d - 1); // throws DegreeTooLarge
            const auto &coeffs = tau_coeffs_;
            for (int j = 0; j < d; ++j)
                out(j) = caputo_power_series(coeffs[static_cast<std::size_t>(j)], alpha, tau);
            return out;
        }

        const L1Grid grid = L1Grid::uniform(t_spec_.interval_lo, p.t, settings.l1_grid_size);
        const auto &pts = grid.points();
        std::vector<std::vector<double>> samples(static_cast<std::size_t>(d), std::vector<double>(pts.size()));
        for (std::size_t k = 0; k < pts.size(); ++k)
        {
            const auto vals = legendre_table(d, shift_to_canonical(t_spec_, pts[k]));
            for (int j = 0; j < d; ++j)
                samples[static_cast<std::size_t>(j)][k] = vals[static_cast<std::size_t>(j)];
        }
        for (int j = 0; j < d; ++j)
            out(j) = caputo_l1(samples[static_cast<std::size_t>(j)], grid, alpha);
        return out;
    }

    Eigen::VectorXd volterra(const KernelField &kernel, const Point &p, const OperatorSettings &settings) const
    {
        if (is_2d())
            throw ValidationError("Volterra terms are supported on 1D problems only");
        shift_to_canonical(t_spec_, p.t);
        const int d = t_spec_.degree_count;
        Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
        const double lo = t_spec_.interval_lo;
        const double half = 0.5 * (p.t - lo);
        if (half <= 0.0)
            return out;
        const auto &rule = settings.volterra_rule;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        {
            const double s = lo + half * (rule.nodes[i] + 1.0);
            const double weight = half * rule.weights[i] * kernel(p.t, s);
            const auto vals = legendre_table(d, shift_to_canonical(t_spec_, s));
            for (int j = 0; j < d; ++j)
                out(j) += weight * vals[static_cast<std::size_t>(j)];
        }
        return out;
    }

    std::optional<BasisSpec> x_spec_;
    BasisSpec t_spec_;
    std::vector<std::vector<long double>> tau_coeffs_;
};

/// (L phi_j)(point) for a single basis index.
inline double apply_operator_to_basis(const LinearOp &op, Eigen::Index j, const Basis &basis, const Point &point,
                                      const OperatorSettings &settings)
{
    if (j < 0 || j >= basis.size())
        throw DomainError("basis index out of range");
    return basis.apply(op, point, settings)(j);
}

} // namespace clssvr

#endif // CLSSVR_BASIS_HPP
