#ifndef CLSSVR_SOLVER_HPP
#define CLSSVR_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "basis.hpp"
#include "dae_model.hpp"
#include "error.hpp"
#include "legendre.hpp"

namespace clssvr
{

enum class SolveMethod
{
    automatic, // dual for linear problems, Gauss-Newton otherwise
    dual,
    gauss_newton
};

struct NonlinearOptions
{
    int max_iters{50};
    double step_tol{1e-12}; // relative to max(1, |w|_inf)
    double residual_tol{1e-14};
    double damping{1e-3};
    double initial_guess{0.0}; // every primal weight starts here
};

struct SolverConfig
{
    int collocation_degree{10};
    std::optional<int> basis_degree; // d; defaults to collocation_degree
    double gamma{100.0};
    bool include_bias{false};
    bool hard_ic{false};
    FractionalScheme fractional_scheme{FractionalScheme::analytic};
    int l1_grid_size{1000};
    int quadrature_nodes{32};
    SolveMethod method{SolveMethod::automatic};
    NonlinearOptions nonlinear;

    static constexpr double hard_ic_scale = 1e3;

    int degree() const { return basis_degree.value_or(collocation_degree); }

    void validate() const
    {
        if (!(gamma > 0.0) || !std::isfinite(gamma))
            throw DomainError("gamma must be > 0 and finite, got " + std::to_string(gamma));
        if (collocation_degree < 1)
            throw DomainError("collocation degree m must be >= 1");
        if (degree() < 1)
            throw DomainError("basis degree d must be >= 1");
        if (quadrature_nodes < 1)
            throw DomainError("quadrature node count must be >= 1");
        if (l1_grid_size < 1)
            throw DomainError("L1 grid size must be >= 1");
        if (nonlinear.max_iters < 1)
            throw DomainError("max_iters must be >= 1");
        if (!(nonlinear.damping >= 0.0))
            throw DomainError("damping must be >= 0");
    }

    OperatorSettings operator_settings() const
    {
        return OperatorSettings::make(fractional_scheme, l1_grid_size, quadrature_nodes);
    }
};

/// Training points: mapped roots of P_m, tensorized in 2D (x outer, t inner).
struct CollocationGrid
{
    std::vector<Point> points;
    std::vector<double> t_nodes;
    std::vector<double> x_nodes; // empty in 1D

    bool is_2d() const { return !x_nodes.empty(); }
    std::size_t size() const { return points.size(); }
};

inline CollocationGrid build_grid(const DaeProblem &problem, const SolverConfig &config)
{
    config.validate();
    const auto roots = legendre_roots(config.collocation_degree);
    auto mapped = [&](double lo, double hi) {
        const BasisSpec spec(1, lo, hi);
        std::vector<double> out;
        out.reserve(roots.size());
        for (double r : roots)
            out.push_back(shift_to_physical(spec, r));
        return out;
    };

    CollocationGrid grid;
    grid.t_nodes = mapped(problem.t_lo(), problem.t_hi());
    if (const auto *r = std::get_if<Rectangle>(&problem.domain))
    {
        grid.x_nodes = mapped(r->x_lo, r->x_hi);
        for (double x : grid.x_nodes)
            for (double t : grid.t_nodes)
                grid.points.push_back(Point::at(x, t));
    }
    else
    {
        for (double t : grid.t_nodes)
            grid.points.push_back(Point::at(t));
    }
    return grid;
}

enum class ConstraintKind
{
    collocation,
    side_condition
};

/// One column of Z: an equation collocated at a point, or a side condition.
struct Constraint
{
    ConstraintKind kind{ConstraintKind::collocation};
    std::size_t source{0}; // equation or side-condition index
    Point point;
    double value{0.0};     // already scaled
    double scale{1.0};
};

/*
 * Columns ordered equation by equation over the grid, then side conditions.
 * A 2D side condition without an x coordinate is imposed at every x node.
 */
inline std::vector<Constraint> build_constraints(const DaeProblem &problem, const CollocationGrid &grid,
                                                 const SolverConfig &config)
{
    std::vector<Constraint> out;
    for (std::size_t e = 0; e < problem.equations.size(); ++e)
        for (const auto &p : grid.points)
            out.push_back(Constraint{ConstraintKind::collocation, e, p, problem.equations[e].rhs(p), 1.0});

    const double scale = config.hard_ic ? SolverConfig::hard_ic_scale : 1.0;
    for (std::size_t s = 0; s < problem.side_conditions.size(); ++s)
    {
        const auto &sc = problem.side_conditions[s];
        std::vector<Point> where;
        if (problem.is_2d() && !sc.x)
            for (double x : grid.x_nodes)
                where.push_back(Point::at(x, sc.t));
        else
            where.push_back(Point::at(sc.x.value_or(0.0), sc.t));
        for (const auto &p : where)
            out.push_back(Constraint{ConstraintKind::side_condition, s, p, scale * sc.value(p), scale});
    }
    for (const auto &c : out)
        if (!std::isfinite(c.value))
            throw EvaluationError("non-finite right-hand side at t=" + std::to_string(c.point.t));
    return out;
}

namespace detail
{

/// Linear part of one constraint as a function of the stacked weights [w_1; ...; w_k].
inline Eigen::VectorXd linear_feature(const DaeProblem &problem, const Basis &basis, const OperatorSettings &settings,
                                      const Constraint &c)
{
    const Eigen::Index block = basis.size();
    Eigen::VectorXd f = Eigen::VectorXd::Zero(block * static_cast<Eigen::Index>(problem.unknown_count));
    auto add = [&](double coeff, const LinearOp &op, UnknownId target) {
        if (coeff == 0.0)
            return;
        f.segment(static_cast<Eigen::Index>(target.index) * block, block) += coeff * basis.apply(op, c.point, settings);
    };
    if (c.kind == ConstraintKind::collocation)
    {
        for (const auto &term : problem.equations[c.source].linear_terms)
        {
            const double coeff = term.coefficient(c.point);
            if (!std::isfinite(coeff))
                throw EvaluationError("non-finite coefficient in equation " + std::to_string(c.source + 1));
            add(coeff, term.op, term.target);
        }
    }
    else
    {
        const auto &sc = problem.side_conditions[c.source];
        add(1.0, sc.op, sc.target);
    }
    return c.scale * f;
}

} // namespace detail

/*
 * Dual data of the collocation least-squares problem
 *
 *   min 1/2 |w|^2 + gamma/2 |e|^2   s.t.   Z^T w + V b - y = e.
 */
struct DualSystem
{
    Eigen::MatrixXd Z;     // k*d x constraints
    Eigen::MatrixXd Omega; // Z^T Z
    Eigen::MatrixXd V;     // constraints x k, zero columns without bias
    Eigen::VectorXd y;
    double gamma{1.0};

    bool has_bias() const { return V.cols() > 0; }
};

inline DualSystem assemble(const DaeProblem &problem, const CollocationGrid &grid, const SolverConfig &config)
{
    config.validate();
    if (problem.equations.empty() || problem.unknown_count == 0)
        throw ShapeError("problem has no equations");
    if (!is_linear(problem))
        throw ValidationError("assemble handles linear problems; nonlinear ones go through gauss_newton");

    const Basis basis(problem, config.degree());
    const OperatorSettings settings = config.operator_settings();
    const auto constraints = build_constraints(problem, grid, config);
    if (constraints.empty())
        throw ShapeError("no constraints to assemble");

    const Eigen::Index n = basis.size() * static_cast<Eigen::Index>(problem.unknown_count);
    const Eigen::Index cols = static_cast<Eigen::Index>(constraints.size());
    DualSystem dual;
    dual.gamma = config.gamma;
    dual.Z.resize(n, cols);
    dual.y.resize(cols);
    for (Eigen::Index c = 0; c < cols; ++c)
    {
        dual.Z.col(c) = detail::linear_feature(problem, basis, settings, constraints[static_cast<std::size_t>(c)]);
        dual.y(c) = constraints[static_cast<std::size_t>(c)].value;
    }
    dual.Omega = dual.Z.transpose() * dual.Z;

    if (config.include_bias)
    {
        // phi_0 == 1, so the operator applied to a constant is the j = 0 feature
        const auto k = static_cast<Eigen::Index>(problem.unknown_count);
        dual.V.resize(cols, k);
        for (Eigen::Index u = 0; u < k; ++u)
            dual.V.col(u) = dual.Z.row(u * basis.size()).transpose();
    }
    else
    {
        dual.V.resize(cols, 0);
    }
    return dual;
}

struct DualSolution
{
    Eigen::VectorXd alpha;
    Eigen::VectorXd bias; // empty without bias
    Eigen::VectorXd w;    // Z alpha
    Eigen::VectorXd e;    // -alpha / gamma, the constraint residuals
};

/*
 * Cholesky on H = Omega + I/gamma. With bias the saddle system
 * [0 V^T; V H][b; alpha] = [0; y] is reduced to the Schur complement V^T H^-1 V.
 */
inline DualSolution solve_linear(const DualSystem &dual)
{
    if (!(dual.gamma > 0.0))
        throw NotPositiveDefinite("gamma must be > 0 for Omega + I/gamma to be positive definite");
    const Eigen::Index c = dual.Omega.rows();
    Eigen::MatrixXd H = dual.Omega;
    H.diagonal().array() += 1.0 / dual.gamma;
    const Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("Cholesky factorization of Omega + I/gamma failed");

    DualSolution sol;
    if (dual.has_bias())
    {
        const Eigen::MatrixXd HinvV = llt.solve(dual.V);
        const Eigen::VectorXd Hinvy = llt.solve(dual.y);
        const Eigen::MatrixXd S = dual.V.transpose() * HinvV;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
        lu.setThreshold(1e-12);
        if (!lu.isInvertible())
            throw SingularSchur("bias Schur complement V^T (Omega + I/gamma)^-1 V is singular");
        sol.bias = lu.solve(dual.V.transpose() * Hinvy);
        sol.alpha = Hinvy - HinvV * sol.bias;
    }
    else
    {
        sol.alpha = llt.solve(dual.y);
    }
    if (sol.alpha.size() != c || !sol.alpha.allFinite())
        throw NotPositiveDefinite("dual solve produced non-finite coefficients");
    sol.w = dual.Z * sol.alpha;
    sol.e = -sol.alpha / dual.gamma;
    return sol;
}

/// Trained approximation. Owns copies of everything needed to evaluate it.
struct TrainedModel
{
    DaeProblem problem;
    SolverConfig config;
    CollocationGrid grid;
    Basis basis;
    std::vector<Constraint> constraints;
    Eigen::MatrixXd Z;         // features at the solution (J^T for Gauss-Newton)
    Eigen::VectorXd alpha;     // dual coefficients
    Eigen::VectorXd biases;    // empty without bias
    Eigen::VectorXd w;         // primal weights
    Eigen::VectorXd residuals; // constraint residuals at w
    SolveMethod method{SolveMethod::dual};
    int iterations{0};

    Eigen::Index block() const { return basis.size(); }
    std::size_t unknown_count() const { return problem.unknown_count; }
};

class GaussNewtonDiverged : public NonConvergence
{
public:
    GaussNewtonDiverged(const std::string &what, std::shared_ptr<const TrainedModel> best)
        : NonConvergence(what), best_(std::move(best))
    {
    }

    const TrainedModel &best() const { return *best_; }

private:
    std::shared_ptr<const TrainedModel> best_;
};

namespace detail
{

struct NonlinearInput
{
    std::size_t target;
    Eigen::VectorXd feature; // basis row of the probe, unscaled
};

struct NonlinearConstraint
{
    std::size_t column;
    const NonlinearResidual *residual;
    Point point;
    double scale;
    std::vector<NonlinearInput> inputs;
};

/// Residual vector r(w) and Jacobian J(w) of all constraints.
class ResidualMap
{
public:
    ResidualMap(const DaeProblem &problem, const Basis &basis, const OperatorSettings &settings,
                const std::vector<Constraint> &constraints)
        : block_(basis.size())
    {
        const auto cols = static_cast<Eigen::Index>(constraints.size());
        const Eigen::Index n = block_ * static_cast<Eigen::Index>(problem.unknown_count);
        A_.resize(cols, n);
        y_.resize(cols);
        for (Eigen::Index c = 0; c < cols; ++c)
        {
            const auto &con = constraints[static_cast<std::size_t>(c)];
            A_.row(c) = linear_feature(problem, basis, settings, con).transpose();
            y_(c) = con.value;
            if (con.kind != ConstraintKind::collocation)
                continue;
            const auto &eq = problem.equations[con.source];
            if (!eq.nonlinear)
                continue;
            NonlinearConstraint nc{static_cast<std::size_t>(c), &*eq.nonlinear, con.point, con.scale, {}};
            for (const auto &probe : eq.nonlinear->inputs)
                nc.inputs.push_back({probe.target.index, basis.apply(probe.op, con.point, settings)});
            nonlinear_.push_back(std::move(nc));
        }
    }

    Eigen::Index parameters() const { return A_.cols(); }

    Eigen::VectorXd residual(const Eigen::VectorXd &w) const
    {
        Eigen::VectorXd r = A_ * w - y_;
        for (const auto &nc : nonlinear_)
        {
            const auto v = probe_values(nc, w);
            r(static_cast<Eigen::Index>(nc.column)) += nc.scale * call(nc, v);
        }
        if (!r.allFinite())
            throw EvaluationError("non-finite residual during Gauss-Newton");
        return r;
    }

    // Forward differences on the closure inputs, exact features for everything linear.
    Eigen::MatrixXd jacobian(const Eigen::VectorXd &w) const
    {
        Eigen::MatrixXd J = A_;
        for (const auto &nc : nonlinear_)
        {
            auto v = probe_values(nc, w);
            const double g0 = call(nc, v);
            const auto row = static_cast<Eigen::Index>(nc.column);
            for (std::size_t q = 0; q < v.size(); ++q)
            {
                const double keep = v[q];
                const double h = 1e-7 * std::max(1.0, std::abs(keep));
                v[q] = keep + h;
                const double dg = (call(nc, v) - g0) / h;
                v[q] = keep;
                const auto &in = nc.inputs[q];
                J.row(row).segment(static_cast<Eigen::Index>(in.target) * block_, block_) +=
                    nc.scale * dg * in.feature.transpose();
            }
        }
        return J;
    }

private:
    std::vector<double> probe_values(const NonlinearConstraint &nc, const Eigen::VectorXd &w) const
    {
        std::vector<double> v;
        v.reserve(nc.inputs.size());
        for (const auto &in : nc.inputs)
            v.push_back(in.feature.dot(w.segment(static_cast<Eigen::Index>(in.target) * block_, block_)));
        return v;
    }

    static double call(const NonlinearConstraint &nc, const std::vector<double> &v)
    {
        return nc.residual->fn(nc.point, v);
    }

    Eigen::Index block_;
    Eigen::MatrixXd A_;
    Eigen::VectorXd y_;
    std::vector<NonlinearConstraint> nonlinear_;
};

} // namespace detail

/*
 * Damped Gauss-Newton on 1/2 |w|^2 + gamma/2 |r(w)|^2. Each step solves
 * (gamma J^T J + I + lambda I) delta = -(gamma J^T r + w) as the least-squares
 * problem [sqrt(gamma) J; I; sqrt(lambda) I] delta = [-sqrt(gamma) r; -w; 0].
 */
inline TrainedModel gauss_newton(const DaeProblem &problem, const CollocationGrid &grid, const SolverConfig &config)
{
    config.validate();
    if (problem.equations.empty() || problem.unknown_count == 0)
        throw ShapeError("problem has no equations");
    if (config.include_bias)
        throw ValidationError("bias terms are supported by the dual solver only");

    Basis basis(problem, config.degree());
    const OperatorSettings settings = config.operator_settings();
    auto constraints = build_constraints(problem, grid, config);
    if (constraints.empty())
        throw ShapeError("no constraints to assemble");

    const detail::ResidualMap map(problem, basis, settings, constraints);
    const Eigen::Index n = map.parameters();
    const Eigen::Index c = static_cast<Eigen::Index>(constraints.size());
    const double gamma = config.gamma;
    const double sg = std::sqrt(gamma);
    const auto &opt = config.nonlinear;

    auto objective = [&](const Eigen::VectorXd &w, const Eigen::VectorXd &r) {
        return w.squaredNorm() + gamma * r.squaredNorm();
    };

    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, opt.initial_guess);
    Eigen::VectorXd r = map.residual(w);
    double f = objective(w, r);
    double lambda = opt.damping;
    bool converged = false;
    int iters = 0;

    Eigen::MatrixXd M(c + 2 * n, n);
    Eigen::VectorXd rhs(c + 2 * n);
    while (iters < opt.max_iters)
    {
        if (r.lpNorm<Eigen::Infinity>() <= opt.residual_tol)
        {
            converged = true;
            break;
        }
        ++iters;
        const Eigen::MatrixXd J = map.jacobian(w);
        M.topRows(c) = sg * J;
        M.middleRows(c, n).setIdentity();
        M.bottomRows(n) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(n, n);
        rhs.head(c) = -sg * r;
        rhs.segment(c, n) = -w;
        rhs.tail(n).setZero();
        const Eigen::VectorXd delta = M.householderQr().solve(rhs);

        if (delta.lpNorm<Eigen::Infinity>() <= opt.step_tol * std::max(1.0, w.lpNorm<Eigen::Infinity>()))
        {
            converged = true;
            break;
        }
        const Eigen::VectorXd w_new = w + delta;
        const Eigen::VectorXd r_new = map.residual(w_new);
        const double f_new = objective(w_new, r_new);
        if (f_new <= f)
        {
            w = w_new;
            r = r_new;
            f = f_new;
            lambda *= 0.5;
        }
        else
        {
            lambda *= 4.0;
        }
    }

    auto model = std::make_shared<TrainedModel>(TrainedModel{problem, config, grid, std::move(basis),
                                                             std::move(constraints), map.jacobian(w).transpose(),
                                                             -gamma * r, Eigen::VectorXd(), w, r,
                                                             SolveMethod::gauss_newton, iters});
    if (!converged)
        throw GaussNewtonDiverged("Gauss-Newton did not converge in " + std::to_string(opt.max_iters) +
                                      " iterations (objective " + std::to_string(f) + ")",
                                  model);
    return std::move(*model);
}

inline TrainedModel solve_dual(const DaeProblem &problem, const CollocationGrid &grid, const SolverConfig &config)
{
    DualSystem dual = assemble(problem, grid, config);
    DualSolution sol = solve_linear(dual);
    Basis basis(problem, config.degree());
    auto constraints = build_constraints(problem, grid, config);
    return TrainedModel{problem,  config,        grid,  std::move(basis), std::move(constraints), std::move(dual.Z),
                        sol.alpha, sol.bias,      sol.w, sol.e,            SolveMethod::dual,      0};
}

/// Validates, builds the grid and dispatches on SolverConfig::method.
inline TrainedModel solve(const DaeProblem &problem, const SolverConfig &config)
{
    config.validate();
    validate(problem);
    const CollocationGrid grid = build_grid(problem, config);
    SolveMethod method = config.method;
    if (method == SolveMethod::automatic)
        method = is_linear(problem) ? SolveMethod::dual : SolveMethod::gauss_newton;
    if (method == SolveMethod::dual)
        return solve_dual(problem, grid, config);
    return gauss_newton(problem, grid, config);
}

/// Primal form: w_u^T phi(point) + b_u.
inline double evaluate(const TrainedModel &model, UnknownId unknown, const Point &point)
{
    if (unknown.index >= model.unknown_count())
        throw ValidationError("unknown index out of range");
    const Eigen::Index d = model.block();
    double v = model.basis.values(point).dot(model.w.segment(static_cast<Eigen::Index>(unknown.index) * d, d));
    if (model.biases.size() > 0)
        v += model.biases(static_cast<Eigen::Index>(unknown.index));
    return v;
}

/*
 * Dual form: sum_i alpha_i Kt(point, x_i) + b_u, where Kt is the finite
 * Legendre kernel K(s, t) = sum_j phi_j(s) phi_j(t) with the constraint
 * functional of column i applied to its second argument. For linear models
 * the kernel columns are rebuilt from the problem; Gauss-Newton models use
 * the linearization stored in Z.
 */
inline double evaluate_kernel_form(const TrainedModel &model, UnknownId unknown, const Point &point)
{
    if (unknown.index >= model.unknown_count())
        throw ValidationError("unknown index out of range");
    const Eigen::Index d = model.block();
    const Eigen::Index offset = static_cast<Eigen::Index>(unknown.index) * d;
    const Eigen::VectorXd phi = model.basis.values(point);

    const bool rebuild = is_linear(model.problem) && model.method == SolveMethod::dual;
    const OperatorSettings settings = rebuild ? model.config.operator_settings() : OperatorSettings{};
    double acc = 0.0;
    for (std::size_t i = 0; i < model.constraints.size(); ++i)
    {
        const auto col = static_cast<Eigen::Index>(i);
        double kernel = 0.0;
        if (rebuild)
        {
            const Eigen::VectorXd feat =
                detail::linear_feature(model.problem, model.basis, settings, model.constraints[i]);
            kernel = phi.dot(feat.segment(offset, d));
        }
        else
        {
            kernel = phi.dot(model.Z.col(col).segment(offset, d));
        }
        acc += model.alpha(col) * kernel;
    }
    if (model.biases.size() > 0)
        acc += model.biases(static_cast<Eigen::Index>(unknown.index));
    return acc;
}

/// Candidate view of a trained model, used to evaluate residuals of the approximation.
class ModelCandidate final : public Candidate
{
public:
    explicit ModelCandidate(const TrainedModel &model) : model_(model), settings_(model.config.operator_settings()) {}

    double apply(const LinearOp &op, UnknownId unknown, const Point &p) const override
    {
        const Eigen::Index d = model_.block();
        const Eigen::VectorXd feat = model_.basis.apply(op, p, settings_);
        double v = feat.dot(model_.w.segment(static_cast<Eigen::Index>(unknown.index) * d, d));
        // a constant bias survives the identity and the Volterra integral (feature 0 is the constant)
        if (model_.biases.size() > 0)
        {
            const double b = model_.biases(static_cast<Eigen::Index>(unknown.index));
            if (std::holds_alternative<Identity>(op) || std::holds_alternative<VolterraIntegral>(op))
                v += b * feat(0);
        }
        return v;
    }

private:
    const TrainedModel &model_;
    OperatorSettings settings_;
};

} // namespace clssvr

#endif // CLSSVR_SOLVER_HPP
