#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include <clssvr/benchmark.hpp>

using namespace clssvr;

namespace
{

std::size_t count_lines(const std::string &s)
{
    std::size_t n = 0;
    for (char c : s)
        n += (c == '\n');
    return n;
}

} // namespace

TEST(Benchmark, ProbeLayout)
{
    for (auto name : builtin::names)
    {
        const auto bc = make_case(name);
        ASSERT_EQ(bc.probes.size(), 5u) << name;
        for (std::size_t i = 0; i < 5; ++i)
        {
            const double step = bc.problem.is_2d() ? 0.02 : 0.2;
            EXPECT_NEAR(bc.probes[i].t, step * static_cast<double>(i + 1), 1e-15);
            if (bc.problem.is_2d())
                EXPECT_NEAR(bc.probes[i].x, bc.probes[i].t, 0.0);
        }
    }
}

TEST(Benchmark, DefaultConfigurations)
{
    EXPECT_EQ(make_case("example1").config.collocation_degree, 10);
    EXPECT_EQ(make_case("example1").config.gamma, 1e2);
    EXPECT_EQ(make_case("example2").config.collocation_degree, 14);
    EXPECT_EQ(make_case("example2").config.gamma, 1e3);
    EXPECT_EQ(make_case("example3").config.gamma, 1e2);
    EXPECT_EQ(make_case("example4").config.gamma, 1e3);
    EXPECT_EQ(make_case("example5").config.collocation_degree, 6);
    EXPECT_EQ(make_case("example5").config.gamma, 1e2);
}

TEST(Benchmark, ExactResidualSelfCheck)
{
    for (auto name : builtin::names)
        EXPECT_LE(exact_residual(load_builtin(name)), 1e-10) << name;
}

TEST(Benchmark, RunCaseReportsEveryUnknown)
{
    const auto r = run_case("example3");
    ASSERT_EQ(r.report.unknowns.size(), 3u);
    for (const auto &ur : r.report.unknowns)
        EXPECT_EQ(ur.rows.size(), 5u);
    ASSERT_EQ(r.checks.size(), 3u);
    EXPECT_EQ(r.checks[1].label, "u2 l2");
    EXPECT_DOUBLE_EQ(r.checks[1].bound, 100 * 5.3e-7);
}

TEST(Benchmark, OverriddenMDropsMismatchedReference)
{
    ConfigOverrides o;
    o.m = 8;
    const auto r = run_case("example1", o);
    EXPECT_TRUE(r.checks.empty());
    EXPECT_EQ(r.config.collocation_degree, 8);
}

TEST(Benchmark, Example5ReferencePerM)
{
    ConfigOverrides o;
    o.m = 8;
    const auto r = run_case("example5", o);
    EXPECT_EQ(r.checks.size(), 15u);
}

TEST(Benchmark, Deterministic)
{
    std::ostringstream a, b;
    write_table(a, run_case("example1"), false);
    write_table(b, run_case("example1"), false);
    EXPECT_EQ(a.str(), b.str());
}

TEST(Benchmark, UnknownCase) { EXPECT_THROW(run_case("example9"), ValidationError); }

TEST(Sweep, EmptyInputs)
{
    EXPECT_TRUE(sweep("example3", {}, {100.0}).empty());
    EXPECT_TRUE(sweep("example3", {4}, {}).empty());
}

TEST(Sweep, FailingCellIsRecorded)
{
    const auto cells = sweep("example2", {6, 40}, {1e3});
    ASSERT_EQ(cells.size(), 2u);
    EXPECT_TRUE(cells[0].result.has_value());
    EXPECT_TRUE(cells[0].error.empty());
    EXPECT_FALSE(cells[1].result.has_value());
    EXPECT_NE(cells[1].error.find("degree"), std::string::npos) << cells[1].error;
}

TEST(Sweep, RejectsBadValues)
{
    EXPECT_THROW(sweep("example3", {0}, {1.0}), DomainError);
    EXPECT_THROW(sweep("example3", {4}, {-1.0}), DomainError);
}

TEST(Output, CsvLayout)
{
    const auto r = run_case("example3");
    std::ostringstream os;
    write_csv_header(os);
    write_csv_rows(os, r.name, r.report);
    const std::string s = os.str();
    EXPECT_EQ(s.substr(0, s.find('\n')), "case,unknown,point_x,point_t,exact,approx,rel_err,abs_err");
    EXPECT_EQ(count_lines(s), 1u + 15u);
    EXPECT_NE(s.find("\nexample3,u1,"), std::string::npos);
}

TEST(Output, TableColumns)
{
    const auto r = run_case("example5");
    std::ostringstream os;
    write_table(os, r, true);
    const std::string s = os.str();
    for (const char *needle : {"E_u1", "E_u2", "E_u3", "u2~", "l2:", "0.02"})
        EXPECT_NE(s.find(needle), std::string::npos) << needle;
}

TEST(Output, PlotData)
{
    const auto r = run_case("example3");
    std::ostringstream os;
    write_plot_data(os, r.name, r.report, false);
    EXPECT_GE(count_lines(os.str()), 15u);
}
