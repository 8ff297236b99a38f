#ifndef CLSSVR_BENCHMARK_HPP
#define CLSSVR_BENCHMARK_HPP

#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dae_model.hpp"
#include "error.hpp"
#include "problem_io.hpp"
#include "report.hpp"
#include "solver.hpp"

namespace clssvr
{

struct ReferenceError
{
    std::size_t unknown{0};
    Point point;
    double rel_err{0.0};
};

enum class PassRule
{
    per_probe, // rel_err <= multiplier[u] * reference at every probe
    l2_relative, // l2 <= multiplier * reference l2
    l2_absolute  // l2 <= absolute bound
};

struct BenchmarkCase
{
    std::string name;
    DaeProblem problem;
    SolverConfig config;
    std::vector<Point> probes;
    std::vector<ReferenceError> reference; // for config.collocation_degree
    std::vector<double> reference_l2;      // per unknown, may be empty
    PassRule rule{PassRule::per_probe};
    std::vector<double> multiplier; // per unknown
    double l2_bound{0.0};
};

namespace detail
{

inline std::vector<Point> table_probes(bool two_d)
{
    std::vector<Point> out;
    for (int i = 1; i <= 5; ++i)
        out.push_back(two_d ? Point::at(0.02 * i, 0.02 * i) : Point::at(0.2 * i));
    return out;
}

inline std::vector<ReferenceError> columns(const std::vector<Point> &probes,
                                           std::initializer_list<std::initializer_list<double>> per_unknown)
{
    std::vector<ReferenceError> out;
    std::size_t u = 0;
    for (const auto &col : per_unknown)
    {
        std::size_t i = 0;
        for (double v : col)
            out.push_back({u, probes.at(i++), v});
        ++u;
    }
    return out;
}

// Relative errors of the 2D example at the diagonal probes for m = 6, 8, 10, 12.
inline std::vector<ReferenceError> example5_reference(int m, const std::vector<Point> &probes)
{
    switch (m)
    {
    case 6:
        return columns(probes, {{3.2e-7, 2.9e-7, 2.5e-7, 2.1e-7, 1.8e-7},
                                {7.8e-6, 6.8e-6, 5.8e-6, 4.9e-6, 4.2e-6},
                                {3.9e-4, 1.6e-4, 9.5e-5, 6.0e-5, 4.0e-5}});
    case 8:
        return columns(probes, {{2.9e-9, 2.1e-9, 1.4e-9, 8.7e-10, 4.0e-10},
                                {3.9e-8, 1.9e-8, 5.1e-9, 5.2e-9, 1.2e-8},
                                {1.9e-6, 4.8e-7, 8.3e-8, 6.3e-8, 1.1e-7}});
    case 10:
        return columns(probes, {{5.2e-13, 3.6e-13, 2.5e-13, 1.7e-13, 1.1e-13},
                                {2.8e-11, 1.7e-11, 9.5e-12, 4.6e-12, 1.5e-12},
                                {1.3e-9, 4.2e-10, 1.5e-10, 5.5e-11, 1.5e-11}});
    case 12:
        return columns(probes, {{1.7e-15, 1.0e-15, 5.7e-16, 3.0e-16, 1.5e-16},
                                {1.2e-13, 5.5e-14, 1.8e-14, 1.4e-15, 5.0e-15},
                                {6.1e-12, 1.3e-12, 3.0e-13, 1.6e-14, 4.8e-14}});
    default:
        return {};
    }
}

} // namespace detail

/// The published setting of a built-in example: m, gamma, probes and error tables.
inline BenchmarkCase make_case(std::string_view name)
{
    BenchmarkCase bc;
    bc.name = std::string(name);
    bc.problem = load_builtin(name);
    bc.probes = detail::table_probes(bc.problem.is_2d());
    const auto &pr = bc.probes;

    if (name == "example1")
    {
        bc.config.collocation_degree = 10;
        bc.config.gamma = 1e2;
        bc.reference = detail::columns(pr, {{1.8e-6, 1.6e-7, 1.2e-7, 1.7e-7, 1.6e-8},
                                            {3.5e-7, 1.6e-6, 1.5e-6, 3.6e-8, 8.9e-8},
                                            {2.3e-5, 1.2e-7, 9.8e-6, 1.2e-5, 1.7e-5}});
        bc.multiplier = {100.0, 100.0, 100.0};
    }
    else if (name == "example2")
    {
        bc.config.collocation_degree = 14;
        bc.config.gamma = 1e3;
        bc.reference = detail::columns(pr, {{1.1e-4, 2.8e-5, 5.5e-6, 1.5e-6, 7.3e-7},
                                            {2.7e-3, 8.0e-4, 7.3e-4, 5.5e-4, 1.3e-2}});
        bc.multiplier = {100.0, 10.0};
    }
    else if (name == "example3")
    {
        bc.config.collocation_degree = 10;
        bc.config.gamma = 1e2;
        bc.reference = detail::columns(pr, {{1.3e-5, 1.5e-5, 2.1e-6, 1.7e-6, 1.0e-6},
                                            {8.2e-6, 7.4e-7, 9.9e-8, 3.8e-7, 3.1e-7},
                                            {8.8e-6, 2.1e-6, 1.4e-6, 2.1e-6, 8.4e-6}});
        bc.reference_l2 = {2.2e-6, 5.3e-7, 7.4e-6};
        bc.rule = PassRule::l2_relative;
        bc.multiplier = {100.0, 100.0, 100.0};
    }
    else if (name == "example4")
    {
        bc.config.collocation_degree = 10;
        bc.config.gamma = 1e3;
        bc.reference = detail::columns(pr, {{2.8e-13, 2.7e-13, 3.3e-14, 2.8e-14, 1.2e-15},
                                            {1.9e-15, 7.6e-16, 1.1e-15, 3.0e-15, 6.4e-17},
                                            {1.5e-14, 2.0e-14, 1.0e-14, 2.9e-15, 2.4e-14}});
        bc.reference_l2 = {2.4e-14, 6.3e-15, 9.8e-14};
        bc.rule = PassRule::l2_absolute;
        bc.l2_bound = 1e-8;
    }
    else
    {
        bc.config.collocation_degree = 6;
        bc.config.gamma = 1e2;
        bc.reference = detail::example5_reference(6, pr);
        bc.multiplier = {100.0, 100.0, 100.0};
    }
    return bc;
}

/// Optional replacements for fields of a case's SolverConfig.
struct ConfigOverrides
{
    std::optional<int> m;
    std::optional<double> gamma;
    std::optional<int> degree;
    std::optional<bool> include_bias;
    std::optional<bool> hard_ic;
    std::optional<FractionalScheme> fractional_scheme;
    std::optional<int> l1_grid_size;
    std::optional<int> quadrature_nodes;
    std::optional<SolveMethod> method;

    SolverConfig apply(SolverConfig c) const
    {
        if (m)
            c.collocation_degree = *m;
        if (gamma)
            c.gamma = *gamma;
        if (degree)
            c.basis_degree = *degree;
        if (include_bias)
            c.include_bias = *include_bias;
        if (hard_ic)
            c.hard_ic = *hard_ic;
        if (fractional_scheme)
            c.fractional_scheme = *fractional_scheme;
        if (l1_grid_size)
            c.l1_grid_size = *l1_grid_size;
        if (quadrature_nodes)
            c.quadrature_nodes = *quadrature_nodes;
        if (method)
            c.method = *method;
        return c;
    }
};

struct CheckLine
{
    std::string label;
    double measured{0.0};
    double bound{0.0};
    bool passed{false};
};

struct BenchmarkResult
{
    std::string name;
    SolverConfig config;
    ResidualReport report;
    std::vector<CheckLine> checks; // empty when no published table matches the configuration
    bool passed{true};
    double exact_residual{0.0};
    double seconds{0.0}; // wall clock, never printed in tables
};

/// max |residual_at(exact)| over 50 interior points of the t axis (2D: along the diagonal).
inline double exact_residual(const DaeProblem &problem)
{
    const ExactCandidate exact(problem);
    double worst = 0.0;
    for (int i = 1; i <= 50; ++i)
    {
        const double s = i / 51.0;
        Point p = Point::at(problem.t_lo() + s * (problem.t_hi() - problem.t_lo()));
        if (const auto *r = std::get_if<Rectangle>(&problem.domain))
            p.x = r->x_lo + s * (r->x_hi - r->x_lo);
        for (std::size_t e = 0; e < problem.equations.size(); ++e)
            worst = std::max(worst, std::abs(residual_at(problem, e, exact, p)));
    }
    return worst;
}

inline std::string unknown_label(std::size_t u) { return "u" + std::to_string(u + 1); }

inline std::vector<CheckLine> evaluate_checks(const BenchmarkCase &bc, const std::vector<ReferenceError> &reference,
                                              const ResidualReport &rep)
{
    std::vector<CheckLine> out;
    if (bc.rule == PassRule::l2_absolute)
    {
        for (const auto &ur : rep.unknowns)
            out.push_back({unknown_label(ur.unknown) + " l2", ur.l2, bc.l2_bound, ur.l2 <= bc.l2_bound});
        return out;
    }
    if (bc.rule == PassRule::l2_relative)
    {
        for (const auto &ur : rep.unknowns)
        {
            const double bound = bc.multiplier[ur.unknown] * bc.reference_l2[ur.unknown];
            out.push_back({unknown_label(ur.unknown) + " l2", ur.l2, bound, ur.l2 <= bound});
        }
        return out;
    }
    for (const auto &ref : reference)
    {
        const auto &rows = rep.unknowns[ref.unknown].rows;
        for (const auto &row : rows)
        {
            if (!(row.point == ref.point))
                continue;
            const double bound = bc.multiplier[ref.unknown] * ref.rel_err;
            char where[64];
            if (bc.problem.is_2d())
                std::snprintf(where, sizeof where, " (x,t)=(%g,%g)", row.point.x, row.point.t);
            else
                std::snprintf(where, sizeof where, " t=%g", row.point.t);
            out.push_back({unknown_label(ref.unknown) + where, row.rel_err, bound, row.rel_err <= bound});
        }
    }
    return out;
}

/*
 * Solves one built-in example. The exact solution is checked against the
 * encoded system first; a violation aborts with ValidationError. Published
 * tables are compared only when the configuration matches their m.
 */
inline BenchmarkResult run_case(std::string_view name, const ConfigOverrides &overrides = {})
{
    if (!is_builtin(name))
        throw ValidationError("unknown benchmark case '" + std::string(name) + "'");
    const BenchmarkCase bc = make_case(name);
    BenchmarkResult result;
    result.name = bc.name;
    result.config = overrides.apply(bc.config);
    result.config.validate();

    result.exact_residual = exact_residual(bc.problem);
    if (!(result.exact_residual <= 1e-10))
        throw ValidationError("exact solution of " + bc.name + " leaves residual " +
                              std::to_string(result.exact_residual) + " > 1e-10; the encoded system is inconsistent");

    const auto start = std::chrono::steady_clock::now();
    const TrainedModel model = solve(bc.problem, result.config);
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.report = report(model, bc.probes);

    std::vector<ReferenceError> reference;
    if (bc.problem.is_2d())
        reference = detail::example5_reference(result.config.collocation_degree, bc.probes);
    else if (result.config.collocation_degree == bc.config.collocation_degree)
        reference = bc.reference;
    const bool comparable = !reference.empty() || (bc.rule != PassRule::per_probe &&
                                                   result.config.collocation_degree == bc.config.collocation_degree);
    if (comparable)
        result.checks = evaluate_checks(bc, reference, result.report);
    for (const auto &c : result.checks)
        result.passed = result.passed && c.passed;
    return result;
}

struct SweepCell
{
    int m{0};
    double gamma{0.0};
    std::optional<BenchmarkResult> result;
    std::string error; // set when the cell failed
};

/// Runs every (m, gamma) pair; a failing cell records its error and the sweep continues.
inline std::vector<SweepCell> sweep(std::string_view name, const std::vector<int> &m_values,
                                    const std::vector<double> &gamma_values, ConfigOverrides base = {})
{
    for (int m : m_values)
        if (m < 1)
            throw DomainError("sweep m values must be positive");
    for (double g : gamma_values)
        if (!(g > 0.0) || !std::isfinite(g))
            throw DomainError("sweep gamma values must be finite and > 0");
    std::vector<SweepCell> out;
    for (int m : m_values)
    {
        for (double g : gamma_values)
        {
            SweepCell cell{m, g, std::nullopt, {}};
            ConfigOverrides o = base;
            o.m = m;
            o.gamma = g;
            try
            {
                cell.result = run_case(name, o);
            }
            catch (const Error &e)
            {
                cell.error = e.what();
            }
            out.push_back(std::move(cell));
        }
    }
    return out;
}

// ---- output ----

inline std::string format_g(double v, int digits = 17)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

inline void write_csv_header(std::ostream &os) { os << "case,unknown,point_x,point_t,exact,approx,rel_err,abs_err\n"; }

inline void write_csv_rows(std::ostream &os, const std::string &name, const ResidualReport &rep)
{
    for (const auto &ur : rep.unknowns)
        for (const auto &r : ur.rows)
            os << name << ',' << unknown_label(ur.unknown) << ',' << format_g(r.point.x) << ','
               << format_g(r.point.t) << ',' << format_g(r.exact) << ',' << format_g(r.approx) << ','
               << format_g(r.rel_err) << ',' << format_g(r.abs_err) << '\n';
}

/// Per-unknown (point, abs_err) series, blank-line separated.
inline void write_plot_data(std::ostream &os, const std::string &name, const ResidualReport &rep, bool two_d)
{
    for (const auto &ur : rep.unknowns)
    {
        os << "# " << name << ' ' << unknown_label(ur.unknown) << (two_d ? " x t abs_err\n" : " t abs_err\n");
        for (const auto &r : ur.rows)
        {
            if (two_d)
                os << format_g(r.point.x) << ' ';
            os << format_g(r.point.t) << ' ' << format_g(r.abs_err) << '\n';
        }
        os << '\n';
    }
}

/// Table layout t | u | u~ | E_u per unknown, then l2 norms and checks.
inline void write_table(std::ostream &os, const BenchmarkResult &res, bool two_d)
{
    char line[256];
    os << res.name << "  m=" << res.config.collocation_degree << " d=" << res.config.degree()
       << " gamma=" << format_g(res.config.gamma, 6) << '\n';
    for (const auto &ur : res.report.unknowns)
    {
        const std::string u = unknown_label(ur.unknown);
        if (two_d)
            std::snprintf(line, sizeof line, "  %-6s %-6s %-22s %-22s %s\n", "x", "t", u.c_str(), (u + "~").c_str(),
                          ("E_" + u).c_str());
        else
            std::snprintf(line, sizeof line, "  %-6s %-22s %-22s %s\n", "t", u.c_str(), (u + "~").c_str(),
                          ("E_" + u).c_str());
        os << line;
        for (const auto &r : ur.rows)
        {
            if (two_d)
                std::snprintf(line, sizeof line, "  %-6g %-6g %-22.15g %-22.15g %.2e%s\n", r.point.x, r.point.t,
                              r.exact, r.approx, r.rel_err, r.absolute_only ? " (abs)" : "");
            else
                std::snprintf(line, sizeof line, "  %-6g %-22.15g %-22.15g %.2e%s\n", r.point.t, r.exact, r.approx,
                              r.rel_err, r.absolute_only ? " (abs)" : "");
            os << line;
        }
    }
    os << "  l2:";
    for (const auto &ur : res.report.unknowns)
    {
        std::snprintf(line, sizeof line, " %s=%.3e", unknown_label(ur.unknown).c_str(), ur.l2);
        os << line;
    }
    os << '\n';
    for (const auto &c : res.checks)
    {
        std::snprintf(line, sizeof line, "  [%s] %s: %.3e <= %.3e\n", c.passed ? "ok" : "over", c.label.c_str(),
                      c.measured, c.bound);
        os << line;
    }
}

} // namespace clssvr

#endif // CLSSVR_BENCHMARK_HPP
