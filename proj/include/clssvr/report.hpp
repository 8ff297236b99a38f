#ifndef CLSSVR_REPORT_HPP
#define CLSSVR_REPORT_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "dae_model.hpp"
#include "error.hpp"
#include "solver.hpp"

namespace clssvr
{

struct ReportRow
{
    Point point;
    double exact{0.0};
    double approx{0.0};
    double rel_err{0.0};
    double abs_err{0.0};
    bool absolute_only{false}; // |u| < 1e-14: rel_err holds the absolute error
};

struct UnknownReport
{
    std::size_t unknown{0};
    std::vector<ReportRow> rows;
    double l2{0.0}; // sqrt(sum (u - u~)^2) over the probes

    double max_rel() const
    {
        double m = 0.0;
        for (const auto &r : rows)
            m = std::max(m, r.rel_err);
        return m;
    }
};

struct ResidualReport
{
    std::vector<UnknownReport> unknowns;
};

inline constexpr double relative_guard = 1e-14;

/// E_u = |(u - u~)/u|, falling back to |u - u~| when |u| < 1e-14.
inline ReportRow compare(const Point &p, double exact, double approx)
{
    ReportRow row{p, exact, approx, 0.0, std::abs(exact - approx), false};
    if (std::abs(exact) < relative_guard)
    {
        row.rel_err = row.abs_err;
        row.absolute_only = true;
    }
    else
    {
        row.rel_err = row.abs_err / std::abs(exact);
    }
    return row;
}

inline ResidualReport report(const TrainedModel &model, const std::vector<Point> &probes)
{
    const DaeProblem &problem = model.problem;
    if (!problem.has_exact())
        throw MissingExact("problem '" + problem.name + "' has no exact solutions to compare against");
    ResidualReport out;
    for (std::size_t u = 0; u < problem.unknown_count; ++u)
    {
        UnknownReport ur;
        ur.unknown = u;
        double sq = 0.0;
        for (const auto &p : probes)
        {
            const auto row = compare(p, problem.exact_solutions[u](p), evaluate(model, UnknownId{u}, p));
            sq += row.abs_err * row.abs_err;
            ur.rows.push_back(row);
        }
        ur.l2 = std::sqrt(sq);
        out.unknowns.push_back(std::move(ur));
    }
    return out;
}

} // namespace clssvr

#endif // CLSSVR_REPORT_HPP
