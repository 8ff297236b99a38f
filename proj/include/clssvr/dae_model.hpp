#ifndef CLSSVR_DAE_MODEL_HPP
#define CLSSVR_DAE_MODEL_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "error.hpp"
#include "expression.hpp"
#include "fractional.hpp"

namespace clssvr
{

/// A point of the problem domain. 1D problems only use `t`.
struct Point
{
    double t{0.0};
    double x{0.0};

    static Point at(double t) { return Point{t, 0.0}; }
    static Point at(double x, double t) { return Point{t, x}; }

    friend bool operator==(const Point &, const Point &) = default;
};

/*
 * Real-valued function of the independent variables (t, x). Fields parsed from
 * text keep their expression, which is what makes them serializable and
 * differentiable; fields built from a callable are neither.
 */
class ScalarField
{
public:
    static inline const std::vector<std::string> variable_names{"t", "x"};

    ScalarField() : ScalarField(Expression::constant(0.0)) {}

    explicit ScalarField(std::function<double(const Point &)> fn) : fn_(std::move(fn)) {}

    explicit ScalarField(Expression e) : expr_(std::move(e))
    {
        fn_ = [ex = *expr_](const Point &p) { return ex({p.t, p.x}); };
    }

    static ScalarField parse(std::string_view text) { return ScalarField(Expression::parse(text, variable_names)); }
    static ScalarField constant(double c) { return ScalarField(Expression::constant(c)); }

    double operator()(const Point &p) const { return fn_(p); }

    bool has_source() const { return expr_.has_value(); }
    const std::string &source() const
    {
        if (!expr_)
            throw ValidationError("scalar field built from a callable has no textual form");
        return expr_->source();
    }
    const std::optional<Expression> &expression() const { return expr_; }

private:
    std::function<double(const Point &)> fn_;
    std::optional<Expression> expr_;
};

/// Volterra kernel h(t, s), s being the integration variable.
class KernelField
{
public:
    static inline const std::vector<std::string> variable_names{"t", "s"};

    explicit KernelField(std::function<double(double, double)> fn) : fn_(std::move(fn)) {}

    explicit KernelField(Expression e) : expr_(std::move(e))
    {
        fn_ = [ex = *expr_](double t, double s) { return ex({t, s}); };
    }

    static KernelField parse(std::string_view text) { return KernelField(Expression::parse(text, variable_names)); }

    double operator()(double t, double s) const { return fn_(t, s); }

    bool has_source() const { return expr_.has_value(); }
    const std::string &source() const
    {
        if (!expr_)
            throw ValidationError("kernel built from a callable has no textual form");
        return expr_->source();
    }

private:
    std::function<double(double, double)> fn_;
    std::optional<Expression> expr_;
};

enum class Variable
{
    t,
    x
};

struct UnknownId
{
    std::size_t index{0};
    friend auto operator<=>(const UnknownId &, const UnknownId &) = default;
};

struct Identity
{
};

struct Derivative
{
    int order{1};
    Variable variable{Variable::t};
};

struct Caputo
{
    FractionalOrder alpha;
};

/// integral over [a, t] of kernel(t, s) u(s) ds
struct VolterraIntegral
{
    KernelField kernel;
};

using LinearOp = std::variant<Identity, Derivative, Caputo, VolterraIntegral>;

struct OperatorTerm
{
    ScalarField coefficient;
    LinearOp op;
    UnknownId target;
};

/// Value (or classical derivative) of one unknown fed into a nonlinear residual.
struct Probe
{
    LinearOp op;
    UnknownId target;
};

/*
 * Nonlinear part g(point, probes) of an equation. `inputs` lists which values
 * of the candidate solution are passed, in order, as the span argument.
 */
struct NonlinearResidual
{
    std::vector<Probe> inputs;
    std::function<double(const Point &, std::span<const double>)> fn;
    std::string source; // empty when built from a callable
};

struct Equation
{
    std::vector<OperatorTerm> linear_terms;
    std::optional<NonlinearResidual> nonlinear;
    ScalarField rhs;

    bool is_linear() const { return !nonlinear.has_value(); }
};

/*
 * `op` applied to `target`, equal to `value` at t = `t`. In 2D, a condition
 * without `x` holds along the whole line t = const; it is imposed at the
 * collocation abscissae.
 */
struct SideCondition
{
    LinearOp op;
    UnknownId target;
    double t{0.0};
    std::optional<double> x;
    ScalarField value;
};

struct Interval
{
    double lo{0.0};
    double hi{1.0};
};

struct Rectangle
{
    double x_lo{0.0};
    double x_hi{1.0};
    double t_lo{0.0};
    double t_hi{1.0};
};

using Domain = std::variant<Interval, Rectangle>;

/// N_i(u_1..u_k) = f_i, i = 1..k, with side conditions and optional exact solutions.
struct DaeProblem
{
    std::string name;
    std::string description;
    std::size_t unknown_count{0};
    std::vector<Equation> equations;
    Domain domain{Interval{}};
    std::vector<SideCondition> side_conditions;
    std::vector<ScalarField> exact_solutions;

    bool is_2d() const { return std::holds_alternative<Rectangle>(domain); }

    double t_lo() const
    {
        return is_2d() ? std::get<Rectangle>(domain).t_lo : std::get<Interval>(domain).lo;
    }
    double t_hi() const
    {
        return is_2d() ? std::get<Rectangle>(domain).t_hi : std::get<Interval>(domain).hi;
    }

    bool contains(const Point &p, double tol = 1e-12) const
    {
        if (const auto *r = std::get_if<Rectangle>(&domain))
            return p.x >= r->x_lo - tol && p.x <= r->x_hi + tol && p.t >= r->t_lo - tol && p.t <= r->t_hi + tol;
        const auto &i = std::get<Interval>(domain);
        return p.t >= i.lo - tol && p.t <= i.hi + tol;
    }

    bool has_exact() const { return exact_solutions.size() == unknown_count && unknown_count > 0; }
};

inline bool is_linear(const DaeProblem &problem)
{
    for (const auto &eq : problem.equations)
        if (!eq.is_linear())
            return false;
    return true;
}

namespace detail
{

inline void validate_op(const LinearOp &op, bool two_d, const std::string &where)
{
    if (const auto *d = std::get_if<Derivative>(&op))
    {
        if (d->order < 1 || d->order > 4)
            throw ValidationError(where + ": derivative order must be in [1, 4]");
        if (!two_d && d->variable == Variable::x)
            throw ValidationError(where + ": x-derivative in a 1D problem");
    }
    else if (const auto *c = std::get_if<Caputo>(&op))
    {
        if (c->alpha.value() >= 1.0)
            throw ValidationError(where + ": Caputo order must satisfy 0 < alpha < 1");
        if (two_d)
            throw ValidationError(where + ": Caputo terms are supported on 1D problems only");
    }
    else if (std::holds_alternative<VolterraIntegral>(op) && two_d)
    {
        throw ValidationError(where + ": Volterra terms are supported on 1D problems only");
    }
}

} // namespace detail

/// Throws ValidationError when the problem is not a well-formed square system.
inline void validate(const DaeProblem &problem)
{
    const std::size_t k = problem.unknown_count;
    if (problem.equations.size() != k)
        throw ValidationError("system is not square: " + std::to_string(problem.equations.size()) +
                              " equations for " + std::to_string(k) + " unknowns");
    if (const auto *r = std::get_if<Rectangle>(&problem.domain))
    {
        if (!(r->x_lo < r->x_hi) || !(r->t_lo < r->t_hi))
            throw ValidationError("domain rectangle must have lo < hi on both axes");
    }
    else
    {
        const auto &i = std::get<Interval>(problem.domain);
        if (!(i.lo < i.hi))
            throw ValidationError("domain interval must have lo < hi");
    }
    const bool two_d = problem.is_2d();
    for (std::size_t e = 0; e < problem.equations.size(); ++e)
    {
        const auto &eq = problem.equations[e];
        const std::string where = "equation " + std::to_string(e + 1);
        for (const auto &term : eq.linear_terms)
        {
            if (term.target.index >= k)
                throw ValidationError(where + ": term targets unknown " + std::to_string(term.target.index + 1) +
                                      " of " + std::to_string(k));
            detail::validate_op(term.op, two_d, where);
        }
        if (eq.nonlinear)
        {
            for (const auto &probe : eq.nonlinear->inputs)
            {
                if (probe.target.index >= k)
                    throw ValidationError(where + ": nonlinear input targets a missing unknown");
                if (!std::holds_alternative<Identity>(probe.op) && !std::holds_alternative<Derivative>(probe.op))
                    throw ValidationError(where + ": nonlinear inputs must be values or classical derivatives");
                detail::validate_op(probe.op, two_d, where);
            }
        }
    }
    for (std::size_t s = 0; s < problem.side_conditions.size(); ++s)
    {
        const auto &sc = problem.side_conditions[s];
        const std::string where = "side condition " + std::to_string(s + 1);
        if (sc.target.index >= k)
            throw ValidationError(where + ": targets a missing unknown");
        if (!std::holds_alternative<Identity>(sc.op) && !std::holds_alternative<Derivative>(sc.op))
            throw ValidationError(where + ": only value and derivative conditions are supported");
        detail::validate_op(sc.op, two_d, where);
        Point p = Point::at(sc.x.value_or(0.0), sc.t);
        if (two_d && !sc.x)
        {
            const auto &r = std::get<Rectangle>(problem.domain);
            p.x = 0.5 * (r.x_lo + r.x_hi);
        }
        if (!problem.contains(p))
            throw ValidationError(where + ": point lies outside the domain");
    }
    if (!problem.exact_solutions.empty() && problem.exact_solutions.size() != k)
        throw ValidationError("exact solutions given for " + std::to_string(problem.exact_solutions.size()) +
                              " of " + std::to_string(k) + " unknowns");
}

/// Something that can report (L u_i)(point) for the operators of a problem.
class Candidate
{
public:
    virtual ~Candidate() = default;
    virtual double apply(const LinearOp &op, UnknownId unknown, const Point &p) const = 0;
};

/*
 * Candidate built from the exact solutions of a problem. Classical derivatives
 * are symbolic; Caputo and Volterra integrals use tanh-sinh quadrature, which
 * tolerates the algebraic endpoint singularities of solutions like t^(3/2).
 */
class ExactCandidate final : public Candidate
{
public:
    explicit ExactCandidate(const DaeProblem &problem) : t_lo_(problem.t_lo())
    {
        if (!problem.has_exact())
            throw MissingExact("problem '" + problem.name + "' has no exact solutions");
        for (const auto &f : problem.exact_solutions)
        {
            if (!f.expression())
                throw MissingExact("exact solutions must be expressions to differentiate them");
            exact_.push_back(*f.expression());
        }
    }

    double apply(const LinearOp &op, UnknownId unknown, const Point &p) const override
    {
        const Expression &u = exact_.at(unknown.index);
        return std::visit(
            [&](const auto &o) -> double {
                using T = std::decay_t<decltype(o)>;
                if constexpr (std::is_same_v<T, Identity>)
                {
                    return u({p.t, p.x});
                }
                else if constexpr (std::is_same_v<T, Derivative>)
                {
                    return derivative(u, o.order, o.variable)({p.t, p.x});
                }
                else if constexpr (std::is_same_v<T, Caputo>)
                {
                    return caputo(u, o.alpha, p);
                }
                else
                {
                    return volterra(u, o.kernel, p);
                }
            },
            op);
    }

private:
    static Expression derivative(const Expression &u, int order, Variable v)
    {
        Expression d = u;
        const std::size_t slot = (v == Variable::t) ? 0 : 1;
        for (int i = 0; i < order; ++i)
            d = d.derivative(slot);
        return d;
    }

    double caputo(const Expression &u, FractionalOrder alpha, const Point &p) const
    {
        const double span = p.t - t_lo_;
        if (span <= 0.0)
            return 0.0;
        const int n = alpha.ceiling();
        const Expression dn = derivative(u, n, Variable::t);
        const double power = n - alpha.value() - 1.0;
        // substitute tau = t - s so the kernel singularity sits at tau = 0 exactly
        auto f = [&](double tau) { return dn({p.t - tau, p.x}) * std::pow(tau, power); };
        boost::math::quadrature::tanh_sinh<double> integrator;
        const double integral = integrator.integrate(f, 0.0, span, 1e-13);
        return integral / std::tgamma(n - alpha.value());
    }

    double volterra(const Expression &u, const KernelField &kernel, const Point &p) const
    {
        if (p.t <= t_lo_)
            return 0.0;
        auto f = [&](double s) { return kernel(p.t, s) * u({s, p.x}); };
        boost::math::quadrature::tanh_sinh<double> integrator;
        return integrator.integrate(f, t_lo_, p.t, 1e-13);
    }

    double t_lo_;
    std::vector<Expression> exact_;
};

/// N_i(u)(point) - f_i(point): the collocated residual of equation `eq_index`.
inline double residual_at(const DaeProblem &problem, std::size_t eq_index, const Candidate &candidate,
                          const Point &point)
{
    if (eq_index >= problem.equations.size())
        throw ValidationError("equation index out of range");
    if (!problem.contains(point))
        throw DomainError("residual requested outside the domain");
    const Equation &eq = problem.equations[eq_index];

    double acc = 0.0;
    for (const auto &term : eq.linear_terms)
    {
        const double c = term.coefficient(point);
        if (!std::isfinite(c))
            throw EvaluationError("non-finite coefficient in equation " + std::to_string(eq_index + 1));
        acc += c * candidate.apply(term.op, term.target, point);
    }
    if (eq.nonlinear)
    {
        std::vector<double> inputs;
        inputs.reserve(eq.nonlinear->inputs.size());
        for (const auto &probe : eq.nonlinear->inputs)
            inputs.push_back(candidate.apply(probe.op, probe.target, point));
        acc += eq.nonlinear->fn(point, inputs);
    }
    const double f = eq.rhs(point);
    if (!std::isfinite(f) || !std::isfinite(acc))
        throw EvaluationError("non-finite residual in equation " + std::to_string(eq_index + 1));
    return acc - f;
}

} // namespace clssvr

#endif // CLSSVR_DAE_MODEL_HPP
