#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include <clssvr/problem_io.hpp>
#include <clssvr/report.hpp>
#include <clssvr/solver.hpp>

using namespace clssvr;

namespace
{

// u(t) = f(t) on [0,1], no side conditions
DaeProblem identity_problem(const std::string &f)
{
    DaeProblem p;
    p.name = "identity";
    p.unknown_count = 1;
    p.domain = Interval{0.0, 1.0};
    Equation eq;
    eq.linear_terms.push_back(OperatorTerm{ScalarField::constant(1.0), Identity{}, UnknownId{0}});
    eq.rhs = ScalarField::parse(f);
    p.equations.push_back(std::move(eq));
    p.exact_solutions.push_back(ScalarField::parse(f));
    return p;
}

// u^2 = 4, purely algebraic
DaeProblem square_root_problem()
{
    return load_problem(R"({"unknowns": 1, "domain": {"lo": 0, "hi": 1},
        "equations": [{"nonlinear": "u1^2", "rhs": 4}]})");
}

SolverConfig config_with(int m, double gamma)
{
    SolverConfig c;
    c.collocation_degree = m;
    c.gamma = gamma;
    return c;
}

std::vector<Point> sample_points(const DaeProblem &p, int count, unsigned seed)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Point> out;
    for (int i = 0; i < count; ++i)
    {
        const double t = p.t_lo() + unit(rng) * (p.t_hi() - p.t_lo());
        if (const auto *r = std::get_if<Rectangle>(&p.domain))
            out.push_back(Point::at(r->x_lo + unit(rng) * (r->x_hi - r->x_lo), t));
        else
            out.push_back(Point::at(t));
    }
    return out;
}

double max_rel_error(const TrainedModel &model)
{
    double worst = 0.0;
    for (double t : {0.2, 0.4, 0.6, 0.8, 1.0})
        for (std::size_t u = 0; u < model.problem.unknown_count; ++u)
        {
            const double exact = model.problem.exact_solutions[u](Point::at(t));
            worst = std::max(worst, std::abs(evaluate(model, UnknownId{u}, Point::at(t)) - exact) / std::abs(exact));
        }
    return worst;
}

} // namespace

TEST(BuildGrid, OneDimensional)
{
    const auto p = identity_problem("t");
    auto g = build_grid(p, config_with(1, 100));
    ASSERT_EQ(g.size(), 1u);
    EXPECT_DOUBLE_EQ(g.points[0].t, 0.5);

    g = build_grid(p, config_with(2, 100));
    ASSERT_EQ(g.size(), 2u);
    EXPECT_NEAR(g.points[0].t, 0.2113248654, 1e-10);
    EXPECT_NEAR(g.points[1].t, 0.7886751346, 1e-10);
    EXPECT_FALSE(g.is_2d());
}

TEST(BuildGrid, TensorProduct)
{
    const auto p = load_builtin("example5");
    const auto g = build_grid(p, config_with(2, 100));
    ASSERT_EQ(g.size(), 4u);
    const double r = 0.5 / std::sqrt(3.0);
    EXPECT_NEAR(g.points[0].x, -r, 1e-15);
    EXPECT_NEAR(g.points[0].t, 0.5 - r, 1e-15);
    EXPECT_NEAR(g.points[1].x, -r, 1e-15);
    EXPECT_NEAR(g.points[1].t, 0.5 + r, 1e-15);
    EXPECT_NEAR(g.points[3].x, r, 1e-15);
}

TEST(BuildGrid, RejectsBadGamma)
{
    EXPECT_THROW(build_grid(identity_problem("t"), config_with(4, -5.0)), DomainError);
    EXPECT_THROW(build_grid(identity_problem("t"), config_with(4, std::nan(""))), DomainError);
    EXPECT_THROW(build_grid(identity_problem("t"), config_with(0, 1.0)), DomainError);
}

TEST(ApplyOperator, Examples)
{
    const Basis basis(BasisSpec(4, 0.0, 1.0));
    const OperatorSettings s;
    EXPECT_DOUBLE_EQ(apply_operator_to_basis(Identity{}, 0, basis, Point::at(0.37), s), 1.0);
    EXPECT_DOUBLE_EQ(apply_operator_to_basis(Derivative{1, Variable::t}, 1, basis, Point::at(0.37), s), 2.0);

    // t = (phi_0 + phi_1) / 2 on [0,1]
    const Caputo half{FractionalOrder(0.5)};
    const double c = 0.5 * (apply_operator_to_basis(half, 0, basis, Point::at(1.0), s) +
                            apply_operator_to_basis(half, 1, basis, Point::at(1.0), s));
    EXPECT_NEAR(c, 2.0 / std::sqrt(std::numbers::pi), 1e-13);

    const VolterraIntegral one{KernelField::parse("1")};
    EXPECT_NEAR(apply_operator_to_basis(one, 0, basis, Point::at(0.8), s), 0.8, 1e-14);
    EXPECT_THROW(apply_operator_to_basis(Identity{}, 4, basis, Point::at(0.5), s), DomainError);
}

TEST(ApplyOperator, VolterraAgainstClosedForm)
{
    // P_2(2s-1) = 6s^2 - 6s + 1, so (1 + s) P_2(2s-1) = 6s^3 - 5s + 1
    const Basis basis(BasisSpec(3, 0.0, 1.0));
    const VolterraIntegral v{KernelField::parse("1 + s")};
    const double t = 0.7;
    const double direct = 1.5 * std::pow(t, 4) - 2.5 * t * t + t;
    EXPECT_NEAR(apply_operator_to_basis(v, 2, basis, Point::at(t), OperatorSettings{}), direct, 1e-14);
}

TEST(Assemble, IdentityIsLegendreCollocationMatrix)
{
    const auto p = identity_problem("exp(t)");
    const auto cfg = config_with(6, 100);
    const auto grid = build_grid(p, cfg);
    const auto dual = assemble(p, grid, cfg);
    ASSERT_EQ(dual.Z.rows(), 6);
    ASSERT_EQ(dual.Z.cols(), 6);
    for (int j = 0; j < 6; ++j)
        for (int i = 0; i < 6; ++i)
            EXPECT_NEAR(dual.Z(j, i), legendre_eval(j, 2.0 * grid.points[static_cast<std::size_t>(i)].t - 1.0), 1e-15);
    EXPECT_NEAR(dual.y(2), std::exp(grid.points[2].t), 1e-15);
    EXPECT_TRUE(dual.Omega.isApprox(dual.Omega.transpose()));
    EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(dual.Omega).info(), Eigen::Success);
}

TEST(Assemble, Example3Shape)
{
    const auto p = load_builtin("example3");
    const auto cfg = config_with(10, 100);
    const auto dual = assemble(p, build_grid(p, cfg), cfg);
    ASSERT_EQ(dual.Omega.rows(), 33);
    ASSERT_EQ(dual.Omega.cols(), 33);
    EXPECT_LE((dual.Omega - dual.Omega.transpose()).lpNorm<Eigen::Infinity>(),
              1e-12 * dual.Omega.lpNorm<Eigen::Infinity>());
    Eigen::MatrixXd H = dual.Omega;
    H.diagonal().array() += 1.0 / dual.gamma;
    EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(H).info(), Eigen::Success);
}

TEST(Assemble, CholeskyOnEveryLinearExample)
{
    for (auto name : {"example2", "example3", "example5"})
    {
        const auto p = load_builtin(name);
        for (double gamma : {1e1, 1e2, 1e3})
        {
            const auto cfg = config_with(name == std::string("example2") ? 14 : 6, gamma);
            const auto dual = assemble(p, build_grid(p, cfg), cfg);
            Eigen::MatrixXd H = dual.Omega;
            H.diagonal().array() += 1.0 / gamma;
            EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(H).info(), Eigen::Success) << name << " gamma " << gamma;
        }
    }
}

TEST(Assemble, EmptyProblem)
{
    DaeProblem p;
    p.domain = Interval{0.0, 1.0};
    const auto cfg = config_with(4, 100);
    EXPECT_THROW(assemble(p, build_grid(p, cfg), cfg), ShapeError);
}

TEST(Assemble, RejectsNonlinear)
{
    const auto p = load_builtin("example1");
    const auto cfg = config_with(4, 100);
    EXPECT_THROW(assemble(p, build_grid(p, cfg), cfg), ValidationError);
}

TEST(SolveLinear, IdentitySystems)
{
    DualSystem d;
    d.Z = Eigen::MatrixXd::Identity(3, 3);
    d.Omega = Eigen::MatrixXd::Identity(3, 3);
    d.V.resize(3, 0);
    d.y = Eigen::VectorXd::Unit(3, 0);

    d.gamma = 1e16;
    auto s = solve_linear(d);
    EXPECT_NEAR(s.alpha(0), 1.0, 1e-14);
    EXPECT_NEAR(s.alpha(1), 0.0, 1e-14);

    d.gamma = 1.0;
    s = solve_linear(d);
    EXPECT_NEAR(s.alpha(0), 0.5, 1e-15);
    EXPECT_NEAR(s.e(0), -0.5, 1e-15);
    EXPECT_NEAR(s.w(0), 0.5, 1e-15);
}

TEST(SolveLinear, NotPositiveDefinite)
{
    DualSystem d;
    d.Z = Eigen::MatrixXd::Identity(2, 2);
    d.Omega = -4.0 * Eigen::MatrixXd::Identity(2, 2);
    d.V.resize(2, 0);
    d.y = Eigen::VectorXd::Ones(2);
    d.gamma = 1.0;
    EXPECT_THROW(solve_linear(d), NotPositiveDefinite);
    d.Omega = Eigen::MatrixXd::Identity(2, 2);
    d.gamma = 0.0;
    EXPECT_THROW(solve_linear(d), NotPositiveDefinite);
}

TEST(SolveLinear, SingularSchurComplement)
{
    DualSystem d;
    d.Z = Eigen::MatrixXd::Identity(2, 2);
    d.Omega = Eigen::MatrixXd::Identity(2, 2);
    d.V = Eigen::MatrixXd::Zero(2, 1);
    d.y = Eigen::VectorXd::Ones(2);
    d.gamma = 10.0;
    EXPECT_THROW(solve_linear(d), SingularSchur);
}

TEST(SolveLinear, BiasMatchesSaddleSystem)
{
    auto cfg = config_with(8, 100);
    cfg.include_bias = true;
    const auto p = load_builtin("example3");
    const auto dual = assemble(p, build_grid(p, cfg), cfg);
    const auto sol = solve_linear(dual);

    const Eigen::Index c = dual.Omega.rows();
    const Eigen::Index k = dual.V.cols();
    ASSERT_EQ(k, 3);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(k + c, k + c);
    K.block(0, k, k, c) = dual.V.transpose();
    K.block(k, 0, c, k) = dual.V;
    K.block(k, k, c, c) = dual.Omega;
    K.block(k, k, c, c).diagonal().array() += 1.0 / dual.gamma;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + c);
    rhs.tail(c) = dual.y;
    const Eigen::VectorXd ref = K.fullPivLu().solve(rhs);

    EXPECT_LE((sol.bias - ref.head(k)).lpNorm<Eigen::Infinity>(), 1e-8 * std::max(1.0, ref.head(k).norm()));
    EXPECT_LE((sol.alpha - ref.tail(c)).lpNorm<Eigen::Infinity>(), 1e-8 * std::max(1.0, ref.tail(c).norm()));
    // stationarity in b: V^T alpha = 0
    EXPECT_LE((dual.V.transpose() * sol.alpha).lpNorm<Eigen::Infinity>(), 1e-9 * sol.alpha.norm());
}

TEST(Model, UnitWeightEvaluatesToOne)
{
    const auto p = identity_problem("t");
    const auto cfg = config_with(3, 100);
    Eigen::VectorXd w = Eigen::VectorXd::Unit(3, 0);
    const TrainedModel model{p, cfg, build_grid(p, cfg), Basis(p, 3), {}, Eigen::MatrixXd(3, 0),
                             Eigen::VectorXd(), Eigen::VectorXd(), w, Eigen::VectorXd(), SolveMethod::dual, 0};
    EXPECT_DOUBLE_EQ(evaluate(model, UnknownId{0}, Point::at(0.3)), 1.0);
    EXPECT_THROW(evaluate(model, UnknownId{1}, Point::at(0.3)), ValidationError);
}

TEST(Model, PrimalDualConsistency)
{
    struct Case
    {
        const char *name;
        int m;
        bool bias;
    };
    for (const Case c : {Case{"example2", 14, false}, Case{"example3", 10, false}, Case{"example5", 6, false},
                         Case{"example3", 10, true}})
    {
        const auto p = load_builtin(c.name);
        auto cfg = config_with(c.m, 100);
        cfg.include_bias = c.bias;
        const auto model = solve(p, cfg);
        EXPECT_LE((model.Z * model.alpha - model.w).lpNorm<Eigen::Infinity>(), 1e-12) << c.name;
        for (const auto &pt : sample_points(p, 50, 5))
            for (std::size_t u = 0; u < p.unknown_count; ++u)
                EXPECT_NEAR(evaluate(model, UnknownId{u}, pt), evaluate_kernel_form(model, UnknownId{u}, pt), 1e-10)
                    << c.name << " bias " << c.bias;
    }
}

TEST(Model, SingleBasisFunctionKernel)
{
    const auto p = identity_problem("2 + t");
    auto cfg = config_with(3, 100);
    cfg.basis_degree = 1;
    const auto model = solve(p, cfg);
    EXPECT_NEAR(evaluate_kernel_form(model, UnknownId{0}, Point::at(0.1)), model.w(0), 1e-14);
    EXPECT_NEAR(evaluate_kernel_form(model, UnknownId{0}, Point::at(0.9)), model.w(0), 1e-14);
    EXPECT_NEAR(model.w(0), model.alpha.sum(), 1e-14);
}

TEST(Model, ResidualsShrinkWithGamma)
{
    const auto p = load_builtin("example3");
    double prev = std::numeric_limits<double>::infinity();
    for (double gamma : {1e1, 1e2, 1e3})
    {
        const auto model = solve(p, config_with(10, gamma));
        const double sse = model.residuals.squaredNorm();
        EXPECT_LE(sse, prev) << "gamma " << gamma;
        prev = sse;
    }
}

TEST(Model, InterpolationLimit)
{
    const auto p = identity_problem("exp(t)*sin(3*t)");
    const auto cfg = config_with(12, 1e14);
    const auto model = solve(p, cfg);
    const auto dual = assemble(p, model.grid, cfg);
    EXPECT_LE(model.residuals.lpNorm<Eigen::Infinity>(), 1e-8 * dual.y.lpNorm<Eigen::Infinity>());
}

TEST(Model, SpectralConvergenceExample1)
{
    // at gamma = 1e2 the ridge term dominates the error, so convergence in m shows only with weak regularization
    const auto p = load_builtin("example1");
    std::vector<double> errs;
    for (int m : {4, 6, 8, 10})
        errs.push_back(max_rel_error(solve(p, config_with(m, 1e10))));
    for (std::size_t i = 1; i < errs.size(); ++i)
        EXPECT_LT(errs[i], errs[i - 1]) << "step " << i;
    EXPECT_GE(errs.front() / errs.back(), 1e3);
}

TEST(GaussNewton, AgreesWithDualOnLinearProblems)
{
    for (auto name : {"example3", "example2"})
    {
        const auto p = load_builtin(name);
        auto cfg = config_with(name == std::string("example2") ? 14 : 10, name == std::string("example2") ? 1e3 : 1e2);
        cfg.method = SolveMethod::dual;
        const auto a = solve(p, cfg);
        cfg.method = SolveMethod::gauss_newton;
        const auto b = solve(p, cfg);
        for (const auto &pt : sample_points(p, 30, 9))
            for (std::size_t u = 0; u < p.unknown_count; ++u)
                EXPECT_NEAR(evaluate(a, UnknownId{u}, pt), evaluate(b, UnknownId{u}, pt), 1e-9) << name;
    }
}

TEST(GaussNewton, QuadraticRoot)
{
    const auto p = square_root_problem();
    auto cfg = config_with(1, 1e12);
    cfg.basis_degree = 1;
    cfg.nonlinear.initial_guess = 0.5;
    const auto pos = solve(p, cfg);
    EXPECT_EQ(pos.method, SolveMethod::gauss_newton);
    EXPECT_NEAR(evaluate(pos, UnknownId{0}, Point::at(0.3)), 2.0, 1e-10);

    cfg.nonlinear.initial_guess = -0.5;
    EXPECT_NEAR(evaluate(solve(p, cfg), UnknownId{0}, Point::at(0.3)), -2.0, 1e-10);
}

TEST(GaussNewton, DivergenceCarriesBestModel)
{
    const auto p = load_builtin("example1");
    auto cfg = config_with(6, 100);
    cfg.nonlinear.max_iters = 1;
    try
    {
        solve(p, cfg);
        FAIL() << "expected GaussNewtonDiverged";
    }
    catch (const GaussNewtonDiverged &e)
    {
        EXPECT_EQ(e.best().iterations, 1);
        EXPECT_TRUE(e.best().w.allFinite());
    }
}

TEST(GaussNewton, RejectsBias)
{
    auto cfg = config_with(4, 100);
    cfg.include_bias = true;
    EXPECT_THROW(solve(load_builtin("example1"), cfg), ValidationError);
}

TEST(Solve, HardInitialConditionsTightenFit)
{
    const auto p = load_builtin("example3");
    auto cfg = config_with(10, 100);
    const auto soft = solve(p, cfg);
    cfg.hard_ic = true;
    const auto hard = solve(p, cfg);
    for (std::size_t u = 0; u < 3; ++u)
        EXPECT_LT(std::abs(evaluate(hard, UnknownId{u}, Point::at(0.0))),
                  std::abs(evaluate(soft, UnknownId{u}, Point::at(0.0))));
}

TEST(Solve, L1SchemeTracksAnalytic)
{
    const auto p = load_builtin("example3");
    auto cfg = config_with(8, 100);
    const auto analytic = solve(p, cfg);
    cfg.fractional_scheme = FractionalScheme::l1;
    cfg.l1_grid_size = 2000;
    const auto l1 = solve(p, cfg);
    for (double t : {0.2, 0.6, 1.0})
        for (std::size_t u = 0; u < 3; ++u)
            EXPECT_NEAR(evaluate(analytic, UnknownId{u}, Point::at(t)), evaluate(l1, UnknownId{u}, Point::at(t)), 1e-3);
}

TEST(Solve, DualRejectsNonlinear)
{
    auto cfg = config_with(4, 100);
    cfg.method = SolveMethod::dual;
    EXPECT_THROW(solve(load_builtin("example4"), cfg), ValidationError);
}

TEST(Solve, Deterministic)
{
    const auto p = load_builtin("example1");
    const auto a = solve(p, config_with(8, 100));
    const auto b = solve(p, config_with(8, 100));
    ASSERT_EQ(a.w.size(), b.w.size());
    for (Eigen::Index i = 0; i < a.w.size(); ++i)
        EXPECT_EQ(a.w(i), b.w(i));
}

TEST(Report, ExactMatchGivesZeroError)
{
    const auto row = compare(Point::at(0.5), 1.25, 1.25);
    EXPECT_EQ(row.rel_err, 0.0);
    EXPECT_EQ(row.abs_err, 0.0);
    const auto tiny = compare(Point::at(0.0), 0.0, 3e-9);
    EXPECT_TRUE(tiny.absolute_only);
    EXPECT_DOUBLE_EQ(tiny.rel_err, 3e-9);
}

TEST(Report, RequiresExactSolutions)
{
    auto p = identity_problem("t");
    p.exact_solutions.clear();
    const auto model = solve(p, config_with(4, 100));
    EXPECT_THROW(report(model, {Point::at(0.5)}), MissingExact);
}
