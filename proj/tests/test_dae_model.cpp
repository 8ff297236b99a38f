#include <cmath>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include <clssvr/dae_model.hpp>
#include <clssvr/problem_io.hpp>

using namespace clssvr;

namespace
{

// u(t) = c for every unknown and operator value; derivatives and Caputo of a constant vanish
class ConstantCandidate final : public Candidate
{
public:
    explicit ConstantCandidate(double c) : c_(c) {}
    double apply(const LinearOp &op, UnknownId, const Point &) const override
    {
        return std::holds_alternative<Identity>(op) ? c_ : 0.0;
    }

private:
    double c_;
};

DaeProblem scalar_ode(const std::string &coeff)
{
    DaeProblem p;
    p.name = "scalar";
    p.unknown_count = 1;
    p.domain = Interval{0.0, 1.0};
    Equation eq;
    eq.linear_terms.push_back(OperatorTerm{ScalarField::parse(coeff), Derivative{1, Variable::t}, UnknownId{0}});
    eq.rhs = ScalarField::constant(0.0);
    p.equations.push_back(std::move(eq));
    return p;
}

} // namespace

TEST(DaeModel, TrivialCandidateHasZeroResidual)
{
    const auto p = scalar_ode("1");
    EXPECT_EQ(residual_at(p, 0, ConstantCandidate(3.0), Point::at(0.4)), 0.0);
}

TEST(DaeModel, ExactSolutionsSatisfyExamples)
{
    const auto ex1 = load_builtin("example1");
    EXPECT_LE(std::abs(residual_at(ex1, 0, ExactCandidate(ex1), Point::at(0.5))), 1e-12);
    const auto ex3 = load_builtin("example3");
    EXPECT_LE(std::abs(residual_at(ex3, 2, ExactCandidate(ex3), Point::at(1.0))), 1e-12);
}

TEST(DaeModel, EveryBuiltinResidualIsSmall)
{
    for (auto name : builtin::names)
    {
        const auto p = load_builtin(name);
        const ExactCandidate exact(p);
        for (std::size_t e = 0; e < p.equations.size(); ++e)
            for (int i = 1; i <= 10; ++i)
            {
                const double t = 0.1 * i;
                Point pt = p.is_2d() ? Point::at(t - 0.5, t) : Point::at(t);
                EXPECT_LE(std::abs(residual_at(p, e, exact, pt)), 1e-10) << name << " eq " << e << " t " << t;
            }
    }
}

TEST(DaeModel, Linearity)
{
    EXPECT_FALSE(is_linear(load_builtin("example1")));
    EXPECT_TRUE(is_linear(load_builtin("example2")));
    EXPECT_TRUE(is_linear(load_builtin("example3")));
    EXPECT_FALSE(is_linear(load_builtin("example4")));
    EXPECT_TRUE(is_linear(load_builtin("example5")));
}

TEST(ProblemIo, LoadsInitialConditions)
{
    const auto p = load_builtin("example1");
    ASSERT_EQ(p.side_conditions.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i)
    {
        EXPECT_EQ(p.side_conditions[i].target.index, i);
        EXPECT_EQ(p.side_conditions[i].t, 0.0);
        EXPECT_TRUE(std::holds_alternative<Identity>(p.side_conditions[i].op));
        EXPECT_EQ(p.side_conditions[i].value(Point::at(0.0)), 0.0);
    }
}

TEST(ProblemIo, TwoDimensionalConditions)
{
    const auto p = load_builtin("example5");
    EXPECT_TRUE(p.is_2d());
    EXPECT_EQ(p.side_conditions.size(), 6u);
    EXPECT_DOUBLE_EQ(p.side_conditions[0].value(Point::at(0.3, 0.0)), 0.09);
}

TEST(ProblemIo, MissingEquations)
{
    EXPECT_THROW(load_problem(R"({"unknowns": 1, "domain": {"lo": 0, "hi": 1}})"), ParseError);
}

TEST(ProblemIo, MalformedJsonReportsLine)
{
    try
    {
        load_problem("{\n  \"unknowns\": 1,\n  \"domain\": {\"lo\": 0 \"hi\": 1}\n}");
        FAIL() << "expected ParseError";
    }
    catch (const ParseError &e)
    {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(ProblemIo, BadFieldsAreParseErrors)
{
    const std::string prefix = R"({"unknowns": 1, "domain": {"lo": 0, "hi": 1}, "equations": [)";
    EXPECT_THROW(load_problem(prefix + R"({"terms": [{"op": "wibble", "target": "u1"}], "rhs": 0}]})"), ParseError);
    EXPECT_THROW(load_problem(prefix + R"({"terms": [{"op": "identity", "target": "u7"}], "rhs": 0}]})"), ParseError);
    EXPECT_THROW(load_problem(prefix + R"({"terms": [{"op": "identity", "target": "u1"}], "rhs": "t +"}]})"), ParseError);
    EXPECT_THROW(load_problem(prefix + R"({"terms": [{"op": "identity", "target": "u1"}]}]})"), ParseError);
}

TEST(ProblemIo, NonSquareSystem)
{
    const std::string text = R"({"unknowns": 2, "domain": {"lo": 0, "hi": 1},
        "equations": [{"terms": [{"op": "identity", "target": "u1"}], "rhs": 0}]})";
    EXPECT_THROW(load_problem(text), ValidationError);
}

TEST(ProblemIo, CaputoOrderAboveOne)
{
    const std::string text = R"({"unknowns": 1, "domain": {"lo": 0, "hi": 1},
        "equations": [{"terms": [{"op": "caputo", "alpha": 1.5, "target": "u1"}], "rhs": 0}]})";
    EXPECT_THROW(load_problem(text), ValidationError);
}

TEST(ProblemIo, SideConditionOutsideDomain)
{
    const std::string text = R"({"unknowns": 1, "domain": {"lo": 0, "hi": 1},
        "equations": [{"terms": [{"op": "identity", "target": "u1"}], "rhs": 0}],
        "side_conditions": [{"op": "identity", "target": "u1", "t": 2, "value": 0}]})";
    EXPECT_THROW(load_problem(text), ValidationError);
}

TEST(ProblemIo, SerializeRoundTrip)
{
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (auto name : builtin::names)
    {
        const auto a = load_builtin(name);
        const auto b = load_problem(serialize(a));
        ASSERT_EQ(a.unknown_count, b.unknown_count);
        ASSERT_EQ(a.side_conditions.size(), b.side_conditions.size());
        ASSERT_EQ(a.is_2d(), b.is_2d());
        const ExactCandidate ca(a), cb(b);
        for (int i = 0; i < 20; ++i)
        {
            const double t = unit(rng);
            const Point p = a.is_2d() ? Point::at(unit(rng) - 0.5, t) : Point::at(t);
            for (std::size_t e = 0; e < a.equations.size(); ++e)
            {
                EXPECT_NEAR(a.equations[e].rhs(p), b.equations[e].rhs(p), 1e-12);
                EXPECT_NEAR(residual_at(a, e, ca, p), residual_at(b, e, cb, p), 1e-12) << name;
            }
            for (std::size_t u = 0; u < a.unknown_count; ++u)
                EXPECT_NEAR(a.exact_solutions[u](p), b.exact_solutions[u](p), 1e-12);
        }
    }
}

TEST(ProblemIo, SerializeRejectsCallables)
{
    auto p = scalar_ode("1");
    p.equations[0].rhs = ScalarField([](const Point &q) { return q.t; });
    EXPECT_THROW(serialize(p), ValidationError);
}

TEST(DaeModel, NonFiniteCoefficientRaises)
{
    const auto p = scalar_ode("1/t");
    EXPECT_THROW(residual_at(p, 0, ConstantCandidate(1.0), Point::at(0.0)), EvaluationError);
    EXPECT_NO_THROW(residual_at(p, 0, ConstantCandidate(1.0), Point::at(0.5)));
}

TEST(DaeModel, OutsideDomainRaises)
{
    const auto p = scalar_ode("1");
    EXPECT_THROW(residual_at(p, 0, ConstantCandidate(1.0), Point::at(1.5)), DomainError);
}

TEST(ExactCandidateTest, CaputoOfFractionalPower)
{
    const auto p = load_builtin("example3"); // u1 = t^2.5
    const ExactCandidate c(p);
    for (double t : {0.2, 0.5, 1.0})
    {
        const double expected = std::tgamma(3.5) / std::tgamma(3.0) * t * t;
        EXPECT_NEAR(c.apply(Caputo{FractionalOrder(0.5)}, UnknownId{0}, Point::at(t)), expected, 1e-11);
    }
}

TEST(ExactCandidateTest, VolterraOfPolynomial)
{
    const auto p = load_builtin("example3");
    const ExactCandidate c(p);
    // integral_0^t (t - s) s^2 ds = t^4 / 12
    const VolterraIntegral v{KernelField::parse("t - s")};
    EXPECT_NEAR(c.apply(v, UnknownId{1}, Point::at(0.8)), std::pow(0.8, 4) / 12.0, 1e-13);
}

TEST(ExactCandidateTest, RequiresExact)
{
    EXPECT_THROW(ExactCandidate(scalar_ode("1")), MissingExact);
}
