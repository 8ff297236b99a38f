// Command-line front end: solve, bench, sweep, list.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <clssvr/clssvr.hpp>

namespace
{

constexpr int exit_ok = 0;
constexpr int exit_solver = 1;
constexpr int exit_usage = 2;

class UsageError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct Flags
{
    std::optional<int> m;
    std::optional<double> gamma;
    std::optional<int> degree;
    std::string fractional_scheme;
    bool bias{false};
    bool hard_ic{false};
    std::optional<int> quadrature_nodes;
    std::string method;
    std::string out;
    std::string plot_data;
};

void add_solver_flags(CLI::App *cmd, Flags &f)
{
    cmd->add_option("--m", f.m, "collocation degree m (number of Legendre roots per axis)");
    cmd->add_option("--gamma", f.gamma, "regularization gamma > 0");
    cmd->add_option("--degree", f.degree, "basis size d per variable (default: m)");
    cmd->add_option("--fractional-scheme", f.fractional_scheme, "analytic | l1:<gridsize>");
    cmd->add_flag("--bias", f.bias, "include bias terms (dual solver only)");
    cmd->add_flag("--hard-ic", f.hard_ic, "scale side-condition rows by 1e3");
    cmd->add_option("--quadrature-nodes", f.quadrature_nodes, "Gauss nodes for Volterra integrals");
    cmd->add_option("--method", f.method, "auto | dual | gauss-newton");
    cmd->add_option("--out", f.out, "CSV output path");
    cmd->add_option("--plot-data", f.plot_data, "absolute-error series output path");
}

clssvr::ConfigOverrides overrides_from(const Flags &f)
{
    using namespace clssvr;
    ConfigOverrides o;
    if (f.m)
    {
        if (*f.m < 1)
            throw UsageError("--m must be >= 1");
        o.m = f.m;
    }
    if (f.gamma)
    {
        if (!(*f.gamma > 0.0) || !std::isfinite(*f.gamma))
            throw UsageError("--gamma must be > 0 (got " + std::to_string(*f.gamma) + ")");
        o.gamma = f.gamma;
    }
    if (f.degree)
    {
        if (*f.degree < 1)
            throw UsageError("--degree must be >= 1");
        o.degree = f.degree;
    }
    if (!f.fractional_scheme.empty())
    {
        if (f.fractional_scheme == "analytic")
        {
            o.fractional_scheme = FractionalScheme::analytic;
        }
        else if (f.fractional_scheme.rfind("l1:", 0) == 0)
        {
            int n = 0;
            try
            {
                std::size_t used = 0;
                n = std::stoi(f.fractional_scheme.substr(3), &used);
                if (used != f.fractional_scheme.size() - 3)
                    n = 0;
            }
            catch (const std::logic_error &)
            {
                n = 0;
            }
            if (n < 1)
                throw UsageError("--fractional-scheme l1:<gridsize> needs a positive integer grid size");
            o.fractional_scheme = FractionalScheme::l1;
            o.l1_grid_size = n;
        }
        else
        {
            throw UsageError("--fractional-scheme must be 'analytic' or 'l1:<gridsize>'");
        }
    }
    if (f.bias)
        o.include_bias = true;
    if (f.hard_ic)
        o.hard_ic = true;
    if (f.quadrature_nodes)
    {
        if (*f.quadrature_nodes < 1)
            throw UsageError("--quadrature-nodes must be >= 1");
        o.quadrature_nodes = f.quadrature_nodes;
    }
    if (!f.method.empty())
    {
        if (f.method == "auto")
            o.method = SolveMethod::automatic;
        else if (f.method == "dual")
            o.method = SolveMethod::dual;
        else if (f.method == "gauss-newton" || f.method == "gauss_newton")
            o.method = SolveMethod::gauss_newton;
        else
            throw UsageError("--method must be auto, dual or gauss-newton");
    }
    return o;
}

std::ofstream open_output(const std::string &path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw UsageError("cannot open '" + path + "' for writing");
    return os;
}

std::string read_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw UsageError("cannot read problem file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit(const std::vector<clssvr::BenchmarkResult> &results, const std::vector<bool> &two_d, const Flags &f)
{
    for (std::size_t i = 0; i < results.size(); ++i)
    {
        if (i > 0)
            std::cout << '\n';
        clssvr::write_table(std::cout, results[i], two_d[i]);
    }
    if (!f.out.empty())
    {
        auto os = open_output(f.out);
        clssvr::write_csv_header(os);
        for (const auto &r : results)
            clssvr::write_csv_rows(os, r.name, r.report);
    }
    if (!f.plot_data.empty())
    {
        auto os = open_output(f.plot_data);
        for (std::size_t i = 0; i < results.size(); ++i)
            clssvr::write_plot_data(os, results[i].name, results[i].report, two_d[i]);
    }
}

std::vector<clssvr::Point> default_probes(const clssvr::DaeProblem &p)
{
    std::vector<clssvr::Point> out;
    for (int i = 1; i <= 5; ++i)
    {
        const double s = 0.2 * i;
        clssvr::Point q = clssvr::Point::at(p.t_lo() + s * (p.t_hi() - p.t_lo()));
        if (const auto *r = std::get_if<clssvr::Rectangle>(&p.domain))
            q.x = r->x_lo + s * (r->x_hi - r->x_lo);
        out.push_back(q);
    }
    return out;
}

// A problem file: solve with the given settings and report at five probes.
int solve_file(const std::string &path, const Flags &f)
{
    using namespace clssvr;
    DaeProblem problem = load_problem(read_file(path));
    const SolverConfig config = overrides_from(f).apply(SolverConfig{});
    config.validate();
    const TrainedModel model = solve(problem, config);
    const auto probes = default_probes(problem);
    const std::string name = problem.name.empty() ? std::string("problem") : problem.name;

    if (problem.has_exact())
    {
        BenchmarkResult res;
        res.name = name;
        res.config = config;
        res.report = report(model, probes);
        emit({res}, {problem.is_2d()}, f);
        return exit_ok;
    }

    // no exact solution: values only
    ResidualReport rep;
    for (std::size_t u = 0; u < problem.unknown_count; ++u)
    {
        UnknownReport ur;
        ur.unknown = u;
        for (const auto &p : probes)
            ur.rows.push_back(ReportRow{p, std::nan(""), evaluate(model, UnknownId{u}, p), std::nan(""),
                                        std::nan(""), false});
        rep.unknowns.push_back(std::move(ur));
    }
    std::cout << name << "  m=" << config.collocation_degree << " d=" << config.degree()
              << " gamma=" << format_g(config.gamma, 6) << '\n';
    for (const auto &ur : rep.unknowns)
    {
        std::cout << "  " << (problem.is_2d() ? "x t " : "t ") << unknown_label(ur.unknown) << "~\n";
        for (const auto &r : ur.rows)
        {
            std::cout << "  ";
            if (problem.is_2d())
                std::cout << format_g(r.point.x, 6) << ' ';
            std::cout << format_g(r.point.t, 6) << ' ' << format_g(r.approx, 15) << '\n';
        }
    }
    if (!f.out.empty())
    {
        auto os = open_output(f.out);
        write_csv_header(os);
        write_csv_rows(os, name, rep);
    }
    return exit_ok;
}

std::vector<std::string> split(const std::string &s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(item);
    return out;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"clssvr: collocation least-squares SVR solver for differential-algebraic systems"};
    app.require_subcommand(1);

    Flags solve_flags;
    std::string solve_name;
    std::string solve_path;
    auto *solve_cmd = app.add_subcommand("solve", "solve a built-in example or a problem file");
    solve_cmd->add_option("name", solve_name, "built-in problem name (example1..example5)");
    solve_cmd->add_option("--file", solve_path, "problem file (JSON schema)");
    add_solver_flags(solve_cmd, solve_flags);

    Flags bench_flags;
    std::vector<std::string> bench_names;
    auto *bench_cmd = app.add_subcommand("bench", "run built-in examples against their published tables");
    bench_cmd->add_option("names", bench_names, "cases to run (default: all)");
    add_solver_flags(bench_cmd, bench_flags);

    Flags sweep_flags;
    std::string sweep_name;
    std::string sweep_m = "6,8,10";
    std::string sweep_gamma;
    auto *sweep_cmd = app.add_subcommand("sweep", "grid of runs over m and gamma");
    sweep_cmd->add_option("name", sweep_name, "built-in problem name")->required();
    sweep_cmd->add_option("--m-values", sweep_m, "comma-separated m values");
    sweep_cmd->add_option("--gamma-values", sweep_gamma, "comma-separated gamma values (default: case gamma)");
    add_solver_flags(sweep_cmd, sweep_flags);

    app.add_subcommand("list", "list built-in problems");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try
    {
        if (app.got_subcommand("list"))
        {
            for (auto name : clssvr::builtin::names)
            {
                const auto bc = clssvr::make_case(name);
                std::cout << name << "  m=" << bc.config.collocation_degree
                          << " gamma=" << clssvr::format_g(bc.config.gamma, 6) << "  " << bc.problem.description
                          << '\n';
            }
            return exit_ok;
        }

        if (app.got_subcommand(solve_cmd))
        {
            const auto o = overrides_from(solve_flags);
            if (solve_name.empty() == solve_path.empty())
                throw UsageError("solve needs exactly one of a built-in name or --file");
            if (!solve_path.empty())
                return solve_file(solve_path, solve_flags);
            if (!clssvr::is_builtin(solve_name))
                throw UsageError("unknown built-in problem '" + solve_name + "' (see `clssvr list`)");
            const auto res = clssvr::run_case(solve_name, o);
            emit({res}, {clssvr::make_case(solve_name).problem.is_2d()}, solve_flags);
            return exit_ok;
        }

        if (app.got_subcommand(bench_cmd))
        {
            const auto o = overrides_from(bench_flags);
            if (bench_names.empty())
                bench_names.assign(clssvr::builtin::names.begin(), clssvr::builtin::names.end());
            std::vector<clssvr::BenchmarkResult> results;
            std::vector<bool> two_d;
            for (const auto &n : bench_names)
            {
                if (!clssvr::is_builtin(n))
                    throw UsageError("unknown benchmark case '" + n + "' (see `clssvr list`)");
                results.push_back(clssvr::run_case(n, o));
                two_d.push_back(clssvr::make_case(n).problem.is_2d());
            }
            emit(results, two_d, bench_flags);
            return exit_ok;
        }

        // sweep
        if (!clssvr::is_builtin(sweep_name))
            throw UsageError("unknown built-in problem '" + sweep_name + "' (see `clssvr list`)");
        const auto o = overrides_from(sweep_flags);
        std::vector<int> ms;
        std::vector<double> gammas;
        try
        {
            for (const auto &s : split(sweep_m))
                ms.push_back(std::stoi(s));
            for (const auto &s : split(sweep_gamma))
                gammas.push_back(std::stod(s));
        }
        catch (const std::logic_error &)
        {
            throw UsageError("--m-values / --gamma-values must be comma-separated numbers");
        }
        if (gammas.empty())
            gammas.push_back(o.gamma.value_or(clssvr::make_case(sweep_name).config.gamma));
        for (int m : ms)
            if (m < 1)
                throw UsageError("--m-values must be positive");
        for (double g : gammas)
            if (!(g > 0.0))
                throw UsageError("--gamma-values must be > 0");

        const auto cells = clssvr::sweep(sweep_name, ms, gammas, o);
        const bool two_d = clssvr::make_case(sweep_name).problem.is_2d();
        std::vector<clssvr::BenchmarkResult> ok;
        std::vector<bool> flags2d;
        std::cout << sweep_name << " sweep: max relative error per unknown\n";
        for (const auto &c : cells)
        {
            std::cout << "  m=" << c.m << " gamma=" << clssvr::format_g(c.gamma, 6) << ':';
            if (!c.result)
            {
                std::cout << " failed: " << c.error << '\n';
                continue;
            }
            for (const auto &ur : c.result->report.unknowns)
            {
                char buf[64];
                std::snprintf(buf, sizeof buf, " %s=%.3e", clssvr::unknown_label(ur.unknown).c_str(), ur.max_rel());
                std::cout << buf;
            }
            std::cout << '\n';
            auto r = *c.result;
            r.name = sweep_name + "[m=" + std::to_string(c.m) + ";gamma=" + clssvr::format_g(c.gamma, 6) + "]";
            ok.push_back(std::move(r));
            flags2d.push_back(two_d);
        }
        if (!sweep_flags.out.empty())
        {
            auto os = open_output(sweep_flags.out);
            clssvr::write_csv_header(os);
            for (const auto &r : ok)
                clssvr::write_csv_rows(os, r.name, r.report);
        }
        if (!sweep_flags.plot_data.empty())
        {
            auto os = open_output(sweep_flags.plot_data);
            for (std::size_t i = 0; i < ok.size(); ++i)
                clssvr::write_plot_data(os, ok[i].name, ok[i].report, flags2d[i]);
        }
        return exit_ok;
    }
    catch (const UsageError &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
    catch (const clssvr::ParseError &e)
    {
        std::cerr << "parse error: " << e.what() << '\n';
        return exit_usage;
    }
    catch (const clssvr::ValidationError &e)
    {
        std::cerr << "invalid problem: " << e.what() << '\n';
        return exit_usage;
    }
    catch (const clssvr::Error &e)
    {
        std::cerr << "solver error: " << e.what() << '\n';
        return exit_solver;
    }
}
