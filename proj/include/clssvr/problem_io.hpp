#ifndef CLSSVR_PROBLEM_IO_HPP
#define CLSSVR_PROBLEM_IO_HPP

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dae_model.hpp"
#include "error.hpp"

namespace clssvr
{

/*
 * Problem files are JSON documents:
 *
 *   {
 *     "name": "...", "description": "...",
 *     "unknowns": k,
 *     "domain": {"lo": a, "hi": b}              (or)
 *     "domain2": {"x_lo": .., "x_hi": .., "t_lo": .., "t_hi": ..},
 *     "equations": [
 *       {"terms": [{"coeff": "expr(t,x)", "op": "identity|derivative|caputo|volterra",
 *                   "order": q, "variable": "t|x", "alpha": a, "kernel": "expr(t,s)",
 *                   "target": "u1"}],
 *        "nonlinear": "expr(t, x, u1, u1_t, u1_tt, u1_x, u1_xx, ...)",
 *        "rhs": "expr(t,x)"}
 *     ],
 *     "side_conditions": [{"op": .., "order": .., "variable": .., "target": "u1",
 *                          "t": t0, "x": x0 (optional in 2D), "value": "expr(x)"}],
 *     "exact": ["expr(t,x)", ...]
 *   }
 *
 * Targets are "u1".."uk" or 0-based integers. Expressions may also be numbers.
 */

namespace detail
{

using nlohmann::json;

struct Cursor
{
    const json &node;
    std::string path;

    [[noreturn]] void fail(const std::string &what) const
    {
        throw ParseError((path.empty() ? std::string("document") : path) + ": " + what);
    }

    Cursor field(const std::string &key) const
    {
        if (!node.is_object())
            fail("expected an object");
        auto it = node.find(key);
        if (it == node.end())
            fail("missing required field '" + key + "'");
        return Cursor{*it, path.empty() ? key : path + "." + key};
    }

    bool has(const std::string &key) const { return node.is_object() && node.contains(key); }

    Cursor index(std::size_t i) const { return Cursor{node.at(i), path + "[" + std::to_string(i) + "]"}; }

    std::size_t array_size() const
    {
        if (!node.is_array())
            fail("expected an array");
        return node.size();
    }

    double number() const
    {
        if (!node.is_number())
            fail("expected a number");
        return node.get<double>();
    }

    int integer() const
    {
        if (!node.is_number_integer())
            fail("expected an integer");
        return node.get<int>();
    }

    std::string text() const
    {
        if (!node.is_string())
            fail("expected a string");
        return node.get<std::string>();
    }

    // Expressions are written as strings; bare numbers are accepted too.
    std::string expression_text() const
    {
        if (node.is_number())
        {
            json copy = node;
            return copy.dump();
        }
        return text();
    }

    template <class Fn>
    auto guarded(Fn &&fn) const -> decltype(fn())
    {
        try
        {
            return fn();
        }
        catch (const ParseError &e)
        {
            if (std::string_view(e.what()).starts_with(path))
                throw;
            fail(e.what());
        }
        catch (const DomainError &e)
        {
            fail(e.what());
        }
    }
};

inline UnknownId parse_target(const Cursor &c, std::size_t k)
{
    std::size_t idx = 0;
    if (c.node.is_number_integer())
    {
        const int v = c.node.get<int>();
        if (v < 0)
            c.fail("negative unknown index");
        idx = static_cast<std::size_t>(v);
    }
    else
    {
        const std::string s = c.text();
        if (s.size() < 2 || s[0] != 'u')
            c.fail("target must look like \"u1\"");
        int one_based = 0;
        try
        {
            std::size_t used = 0;
            one_based = std::stoi(s.substr(1), &used);
            if (used != s.size() - 1)
                c.fail("target must look like \"u1\"");
        }
        catch (const std::logic_error &)
        {
            c.fail("target must look like \"u1\"");
        }
        if (one_based < 1)
            c.fail("unknowns are numbered from u1");
        idx = static_cast<std::size_t>(one_based - 1);
    }
    if (idx >= k)
        c.fail("target refers to unknown " + std::to_string(idx + 1) + " but the problem has " + std::to_string(k));
    return UnknownId{idx};
}

inline Variable parse_variable(const Cursor &c)
{
    const std::string v = c.text();
    if (v == "t")
        return Variable::t;
    if (v == "x")
        return Variable::x;
    c.fail("variable must be \"t\" or \"x\"");
}

inline LinearOp parse_op(const Cursor &c)
{
    const std::string kind = c.has("op") ? c.field("op").text() : "identity";
    if (kind == "identity")
        return Identity{};
    if (kind == "derivative")
    {
        Derivative d;
        d.order = c.has("order") ? c.field("order").integer() : 1;
        d.variable = c.has("variable") ? parse_variable(c.field("variable")) : Variable::t;
        return d;
    }
    if (kind == "caputo")
    {
        const Cursor a = c.field("alpha");
        return a.guarded([&] { return LinearOp{Caputo{FractionalOrder(a.number())}}; });
    }
    if (kind == "volterra")
    {
        const Cursor kc = c.field("kernel");
        return kc.guarded([&] { return LinearOp{VolterraIntegral{KernelField::parse(kc.expression_text())}}; });
    }
    c.field("op").fail("unknown operator '" + kind + "'");
}

inline ScalarField parse_field(const Cursor &c)
{
    const std::string text = c.expression_text();
    return c.guarded([&] { return ScalarField::parse(text); });
}

/// Variable table of nonlinear residual expressions and the probe behind each slot.
struct NonlinearSlots
{
    std::vector<std::string> names;
    std::vector<std::optional<Probe>> probes;

    explicit NonlinearSlots(std::size_t k)
    {
        names = {"t", "x"};
        probes = {std::nullopt, std::nullopt};
        for (std::size_t i = 0; i < k; ++i)
        {
            const std::string u = "u" + std::to_string(i + 1);
            const UnknownId id{i};
            names.push_back(u);
            probes.push_back(Probe{Identity{}, id});
            names.push_back(u + "_t");
            probes.push_back(Probe{Derivative{1, Variable::t}, id});
            names.push_back(u + "_tt");
            probes.push_back(Probe{Derivative{2, Variable::t}, id});
            names.push_back(u + "_x");
            probes.push_back(Probe{Derivative{1, Variable::x}, id});
            names.push_back(u + "_xx");
            probes.push_back(Probe{Derivative{2, Variable::x}, id});
        }
    }
};

inline NonlinearResidual make_nonlinear(const std::string &text, std::size_t k)
{
    const NonlinearSlots slots(k);
    Expression expr = Expression::parse(text, slots.names);

    NonlinearResidual nl;
    nl.source = text;
    std::vector<std::size_t> used;
    for (std::size_t s = 2; s < slots.names.size(); ++s)
    {
        if (expr.uses(s))
        {
            used.push_back(s);
            nl.inputs.push_back(*slots.probes[s]);
        }
    }
    const std::size_t width = slots.names.size();
    nl.fn = [expr, used, width](const Point &p, std::span<const double> in) {
        std::vector<double> vars(width, 0.0);
        vars[0] = p.t;
        vars[1] = p.x;
        for (std::size_t q = 0; q < used.size(); ++q)
            vars[used[q]] = in[q];
        return expr(vars);
    };
    return nl;
}

inline std::string op_name(const LinearOp &op)
{
    switch (op.index())
    {
    case 0:
        return "identity";
    case 1:
        return "derivative";
    case 2:
        return "caputo";
    default:
        return "volterra";
    }
}

inline void write_op(json &out, const LinearOp &op)
{
    out["op"] = op_name(op);
    if (const auto *d = std::get_if<Derivative>(&op))
    {
        out["order"] = d->order;
        out["variable"] = d->variable == Variable::t ? "t" : "x";
    }
    else if (const auto *c = std::get_if<Caputo>(&op))
    {
        out["alpha"] = c->alpha.value();
    }
    else if (const auto *v = std::get_if<VolterraIntegral>(&op))
    {
        out["kernel"] = v->kernel.source();
    }
}

inline std::size_t line_of(std::string_view text, std::size_t byte)
{
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

} // namespace detail

/// Parses and validates a problem document. ParseError on malformed input, ValidationError on a non-square system.
inline DaeProblem load_problem(std::string_view config_text)
{
    using detail::Cursor;
    using nlohmann::json;

    json doc;
    try
    {
        doc = json::parse(config_text);
    }
    catch (const json::parse_error &e)
    {
        throw ParseError("line " + std::to_string(detail::line_of(config_text, e.byte > 0 ? e.byte - 1 : 0)) +
                         ": malformed JSON (" + e.what() + ")");
    }

    const Cursor root{doc, ""};
    if (!doc.is_object())
        root.fail("expected a JSON object at top level");

    DaeProblem p;
    if (root.has("name"))
        p.name = root.field("name").text();
    if (root.has("description"))
        p.description = root.field("description").text();

    const int k = root.field("unknowns").integer();
    if (k < 1)
        root.field("unknowns").fail("must be at least 1");
    p.unknown_count = static_cast<std::size_t>(k);

    if (root.has("domain2"))
    {
        const Cursor d = root.field("domain2");
        p.domain = Rectangle{d.field("x_lo").number(), d.field("x_hi").number(), d.field("t_lo").number(),
                             d.field("t_hi").number()};
    }
    else
    {
        const Cursor d = root.field("domain");
        p.domain = Interval{d.field("lo").number(), d.field("hi").number()};
    }

    const Cursor eqs = root.field("equations");
    for (std::size_t e = 0; e < eqs.array_size(); ++e)
    {
        const Cursor ec = eqs.index(e);
        Equation eq;
        if (ec.has("terms"))
        {
            const Cursor terms = ec.field("terms");
            for (std::size_t i = 0; i < terms.array_size(); ++i)
            {
                const Cursor tc = terms.index(i);
                OperatorTerm term;
                term.coefficient = tc.has("coeff") ? detail::parse_field(tc.field("coeff")) : ScalarField::constant(1.0);
                term.op = detail::parse_op(tc);
                term.target = detail::parse_target(tc.field("target"), p.unknown_count);
                eq.linear_terms.push_back(std::move(term));
            }
        }
        if (ec.has("nonlinear"))
        {
            const Cursor nc = ec.field("nonlinear");
            const std::string text = nc.text();
            eq.nonlinear = nc.guarded([&] { return detail::make_nonlinear(text, p.unknown_count); });
        }
        eq.rhs = detail::parse_field(ec.field("rhs"));
        p.equations.push_back(std::move(eq));
    }

    if (root.has("side_conditions"))
    {
        const Cursor scs = root.field("side_conditions");
        for (std::size_t s = 0; s < scs.array_size(); ++s)
        {
            const Cursor sc = scs.index(s);
            SideCondition cond;
            cond.op = detail::parse_op(sc);
            cond.target = detail::parse_target(sc.field("target"), p.unknown_count);
            cond.t = sc.field("t").number();
            if (sc.has("x"))
                cond.x = sc.field("x").number();
            cond.value = detail::parse_field(sc.field("value"));
            p.side_conditions.push_back(std::move(cond));
        }
    }

    if (root.has("exact"))
    {
        const Cursor ex = root.field("exact");
        for (std::size_t i = 0; i < ex.array_size(); ++i)
            p.exact_solutions.push_back(detail::parse_field(ex.index(i)));
    }

    validate(p);
    return p;
}

/// Inverse of load_problem. Throws ValidationError if any field was built from a callable.
inline std::string serialize(const DaeProblem &problem)
{
    using nlohmann::json;
    json doc;
    doc["name"] = problem.name;
    if (!problem.description.empty())
        doc["description"] = problem.description;
    doc["unknowns"] = problem.unknown_count;
    if (const auto *r = std::get_if<Rectangle>(&problem.domain))
        doc["domain2"] = {{"x_lo", r->x_lo}, {"x_hi", r->x_hi}, {"t_lo", r->t_lo}, {"t_hi", r->t_hi}};
    else
    {
        const auto &i = std::get<Interval>(problem.domain);
        doc["domain"] = {{"lo", i.lo}, {"hi", i.hi}};
    }

    auto target_name = [](UnknownId id) { return "u" + std::to_string(id.index + 1); };

    json eqs = json::array();
    for (const auto &eq : problem.equations)
    {
        json e;
        json terms = json::array();
        for (const auto &term : eq.linear_terms)
        {
            json t;
            t["coeff"] = term.coefficient.source();
            detail::write_op(t, term.op);
            t["target"] = target_name(term.target);
            terms.push_back(std::move(t));
        }
        e["terms"] = std::move(terms);
        if (eq.nonlinear)
        {
            if (eq.nonlinear->source.empty())
                throw ValidationError("nonlinear residual built from a callable has no textual form");
            e["nonlinear"] = eq.nonlinear->source;
        }
        e["rhs"] = eq.rhs.source();
        eqs.push_back(std::move(e));
    }
    doc["equations"] = std::move(eqs);

    json scs = json::array();
    for (const auto &sc : problem.side_conditions)
    {
        json s;
        detail::write_op(s, sc.op);
        s["target"] = target_name(sc.target);
        s["t"] = sc.t;
        if (sc.x)
            s["x"] = *sc.x;
        s["value"] = sc.value.source();
        scs.push_back(std::move(s));
    }
    doc["side_conditions"] = std::move(scs);

    if (!problem.exact_solutions.empty())
    {
        json ex = json::array();
        for (const auto &f : problem.exact_solutions)
            ex.push_back(f.source());
        doc["exact"] = std::move(ex);
    }
    return doc.dump(2);
}

namespace builtin
{

// Nonlinear index-1 semi-explicit DAE; u1 = t sin t, u2 = tan t, u3 = t cos t.
inline constexpr std::string_view example1 = R"json({
  "name": "example1",
  "description": "nonlinear semi-explicit DAE on [0,1]",
  "unknowns": 3,
  "domain": {"lo": 0, "hi": 1},
  "equations": [
    {"terms": [{"coeff": "1", "op": "derivative", "order": 1, "target": "u1"},
               {"coeff": "-1", "op": "identity", "target": "u1"}],
     "nonlinear": "u3*u2",
     "rhs": "sin(t) + t*cos(t)"},
    {"terms": [{"coeff": "1", "op": "derivative", "order": 1, "target": "u2"},
               {"coeff": "-t", "op": "identity", "target": "u3"}],
     "nonlinear": "-u1^2",
     "rhs": "sec(t)^2 - t^2*(cos(t) + sin(t)^2)"},
    {"terms": [{"coeff": "1", "op": "identity", "target": "u1"},
               {"coeff": "-1", "op": "identity", "target": "u3"}],
     "rhs": "-t*(cos(t) - sin(t))"}
  ],
  "side_conditions": [
    {"op": "identity", "target": "u1", "t": 0, "value": "0"},
    {"op": "identity", "target": "u2", "t": 0, "value": "0"},
    {"op": "identity", "target": "u3", "t": 0, "value": "0"}
  ],
  "exact": ["t*sin(t)", "tan(t)", "t*cos(t)"]
})json";

// Fractional Volterra integro-differential algebraic system; u1 = u2 = t^(3/2).
// The forcing of the algebraic row carries the sign that the exact solution satisfies.
inline constexpr std::string_view example2 = R"json({
  "name": "example2",
  "description": "fractional Volterra integro-differential algebraic system on [0,1]",
  "unknowns": 2,
  "domain": {"lo": 0, "hi": 1},
  "equations": [
    {"terms": [{"coeff": "1", "op": "caputo", "alpha": 0.5, "target": "u1"},
               {"coeff": "-1", "op": "volterra", "kernel": "t", "target": "u1"},
               {"coeff": "-1", "op": "volterra", "kernel": "1 + t", "target": "u2"}],
     "rhs": "3*t*sqrt(pi)/4 - 2*t^3.5/5 - 2*(1 + t)*t^2.5/5"},
    {"terms": [{"coeff": "1", "op": "volterra", "kernel": "1 + s", "target": "u1"},
               {"coeff": "1", "op": "volterra", "kernel": "1", "target": "u2"}],
     "rhs": "2*t^2.5*(5*t + 7)/35 + 2*t^2.5/5"}
  ],
  "side_conditions": [
    {"op": "identity", "target": "u1", "t": 0, "value": "0"},
    {"op": "identity", "target": "u2", "t": 0, "value": "0"}
  ],
  "exact": ["t*sqrt(t)", "t*sqrt(t)"]
})json";

// Linear fractional DAE; u1 = t^(5/2), u2 = t^2, u3 = sin t.
inline constexpr std::string_view example3 = R"json({
  "name": "example3",
  "description": "linear fractional DAE on [0,1]",
  "unknowns": 3,
  "domain": {"lo": 0, "hi": 1},
  "equations": [
    {"terms": [{"coeff": "1", "op": "caputo", "alpha": 0.5, "target": "u1"},
               {"coeff": "2", "op": "identity", "target": "u1"},
               {"coeff": "-gamma(3.5)/gamma(3)", "op": "identity", "target": "u2"},
               {"coeff": "1", "op": "identity", "target": "u3"}],
     "rhs": "2*t^2.5 + sin(t)"},
    {"terms": [{"coeff": "1", "op": "caputo", "alpha": 0.5, "target": "u2"},
               {"coeff": "1", "op": "identity", "target": "u2"},
               {"coeff": "1", "op": "identity", "target": "u3"}],
     "rhs": "gamma(3)/gamma(2.5)*t^1.5 + t^2 + sin(t)"},
    {"terms": [{"coeff": "2", "op": "identity", "target": "u1"},
               {"coeff": "1", "op": "identity", "target": "u2"},
               {"coeff": "-1", "op": "identity", "target": "u3"}],
     "rhs": "2*t^2.5 + t^2 - sin(t)"}
  ],
  "side_conditions": [
    {"op": "identity", "target": "u1", "t": 0, "value": "0"},
    {"op": "identity", "target": "u2", "t": 0, "value": "0"},
    {"op": "identity", "target": "u3", "t": 0, "value": "0"}
  ],
  "exact": ["t^2.5", "t^2", "sin(t)"]
})json";

// Nonlinear fractional DAE; u1 = t^3, u2 = 2t + t^4, u3 = e^t + t sin t.
// The algebraic row's forcing uses -2t^3, the value the exact solution produces.
inline constexpr std::string_view example4 = R"json({
  "name": "example4",
  "description": "nonlinear fractional DAE on [0,1]",
  "unknowns": 3,
  "domain": {"lo": 0, "hi": 1},
  "equations": [
    {"terms": [{"coeff": "1", "op": "caputo", "alpha": 0.5, "target": "u1"},
               {"coeff": "-1", "op": "identity", "target": "u3"}],
     "nonlinear": "u1*u2",
     "rhs": "gamma(4)/gamma(3.5)*t^2.5 + 2*t^4 + t^7 - exp(t) - t*sin(t)"},
    {"terms": [{"coeff": "1", "op": "caputo", "alpha": 0.5, "target": "u2"},
               {"coeff": "-gamma(5)/gamma(4.5)*sqrt(t)", "op": "identity", "target": "u1"},
               {"coeff": "2", "op": "identity", "target": "u2"}],
     "nonlinear": "u1*u3",
     "rhs": "2/gamma(1.5)*sqrt(t) + 4*t + 2*t^4 + t^3*exp(t) + t^4*sin(t)"},
    {"terms": [{"coeff": "-t^2", "op": "identity", "target": "u2"},
               {"coeff": "1", "op": "identity", "target": "u3"}],
     "nonlinear": "u1^2",
     "rhs": "exp(t) - 2*t^3 + t*sin(t)"}
  ],
  "side_conditions": [
    {"op": "identity", "target": "u1", "t": 0, "value": "0"},
    {"op": "identity", "target": "u2", "t": 0, "value": "0"},
    {"op": "identity", "target": "u3", "t": 0, "value": "1"}
  ],
  "exact": ["t^3", "2*t + t^4", "exp(t) + t*sin(t)"]
})json";

// Linear partial DAE on [-0.5,0.5] x [0,1]; u = (x^2 e^-t, x^2 e^(-t/2), x^2 sin t).
inline constexpr std::string_view example5 = R"json({
  "name": "example5",
  "description": "linear partial DAE on [-0.5,0.5] x [0,1]",
  "unknowns": 3,
  "domain2": {"x_lo": -0.5, "x_hi": 0.5, "t_lo": 0, "t_hi": 1},
  "equations": [
    {"terms": [{"coeff": "1", "op": "derivative", "order": 1, "variable": "t", "target": "u2"},
               {"coeff": "1", "op": "derivative", "order": 1, "variable": "t", "target": "u3"}],
     "rhs": "-0.5*x^2*exp(-0.5*t) + x^2*cos(t)"},
    {"terms": [{"coeff": "2", "op": "derivative", "order": 1, "variable": "t", "target": "u1"},
               {"coeff": "-1", "op": "derivative", "order": 1, "variable": "t", "target": "u2"},
               {"coeff": "-1", "op": "derivative", "order": 1, "variable": "t", "target": "u3"},
               {"coeff": "-1", "op": "identity", "target": "u2"}],
     "rhs": "-2*x^2*exp(-t) - x^2*exp(-0.5*t)/2 - x^2*cos(t)"},
    {"terms": [{"coeff": "-1", "op": "derivative", "order": 2, "variable": "x", "target": "u3"},
               {"coeff": "1", "op": "identity", "target": "u3"}],
     "rhs": "-2*sin(t) + x^2*sin(t)"}
  ],
  "side_conditions": [
    {"op": "identity", "target": "u1", "t": 0, "value": "x^2"},
    {"op": "derivative", "order": 1, "variable": "t", "target": "u1", "t": 0, "value": "-x^2"},
    {"op": "identity", "target": "u2", "t": 0, "value": "x^2"},
    {"op": "derivative", "order": 1, "variable": "t", "target": "u2", "t": 0, "value": "-x^2/2"},
    {"op": "identity", "target": "u3", "t": 0, "value": "0"},
    {"op": "derivative", "order": 1, "variable": "t", "target": "u3", "t": 0, "value": "x^2"}
  ],
  "exact": ["x^2*exp(-t)", "x^2*exp(-t/2)", "x^2*sin(t)"]
})json";

inline constexpr std::array<std::string_view, 5> names{"example1", "example2", "example3", "example4", "example5"};

inline std::string_view text(std::string_view name)
{
    if (name == "example1")
        return example1;
    if (name == "example2")
        return example2;
    if (name == "example3")
        return example3;
    if (name == "example4")
        return example4;
    if (name == "example5")
        return example5;
    throw ValidationError("unknown built-in problem '" + std::string(name) + "'");
}

} // namespace builtin

inline bool is_builtin(std::string_view name)
{
    return std::find(builtin::names.begin(), builtin::names.end(), name) != builtin::names.end();
}

inline DaeProblem load_builtin(std::string_view name) { return load_problem(builtin::text(name)); }

} // namespace clssvr

#endif // CLSSVR_PROBLEM_IO_HPP
