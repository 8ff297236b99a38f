#ifndef CLSSVR_EXPRESSION_HPP
#define CLSSVR_EXPRESSION_HPP

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace clssvr
{

/*
 * Arithmetic expressions over named real variables.
 *
 * Grammar: numbers, variables, + - * / ^ (right associative), unary minus,
 * parentheses, the constant `pi`, and the functions sin, cos, tan, sec, exp,
 * log, sqrt, pow(a, b), gamma. Variables are bound to slots at parse time,
 * so evaluation is a tree walk over a span of doubles.
 */
class Expression
{
public:
    enum class Op
    {
        number,
        variable,
        negate,
        add,
        sub,
        mul,
        div,
        pow,
        sin,
        cos,
        tan,
        sec,
        exp,
        log,
        sqrt,
        gamma
    };

    struct Node;
    using NodePtr = std::shared_ptr<const Node>;

    struct Node
    {
        Op op{Op::number};
        double value{0.0};
        std::size_t slot{0};
        NodePtr lhs;
        NodePtr rhs;
    };

    Expression() : root_(number(0.0)), source_("0") {}

    static Expression parse(std::string_view text, std::vector<std::string> variables)
    {
        Parser p{text, variables};
        NodePtr root = p.parse_all();
        return Expression(std::move(root), std::string(text), std::move(variables));
    }

    static Expression constant(double v) { return Expression(number(v), format_number(v), {}); }

    double operator()(std::span<const double> vars) const { return eval(*root_, vars); }

    // Convenience for expressions over at most a handful of variables.
    double operator()(std::initializer_list<double> vars) const
    {
        return eval(*root_, std::span<const double>(vars.begin(), vars.size()));
    }

    /// d/d(variable slot). Throws EvaluationError for gamma of a non-constant argument.
    Expression derivative(std::size_t slot) const
    {
        NodePtr d = diff(root_, slot);
        return Expression(d, "d(" + source_ + ")/d" + variable_name(slot), variables_);
    }

    bool uses(std::size_t slot) const { return uses(*root_, slot); }

    bool is_constant() const
    {
        for (std::size_t s = 0; s < variables_.size(); ++s)
            if (uses(s))
                return false;
        return true;
    }

    const std::string &source() const { return source_; }
    const std::vector<std::string> &variables() const { return variables_; }
    const NodePtr &root() const { return root_; }

private:
    Expression(NodePtr root, std::string source, std::vector<std::string> variables)
        : root_(std::move(root)), source_(std::move(source)), variables_(std::move(variables))
    {
    }

    std::string variable_name(std::size_t slot) const
    {
        return slot < variables_.size() ? variables_[slot] : "#" + std::to_string(slot);
    }

    static std::string format_number(double v)
    {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    static NodePtr number(double v)
    {
        auto n = std::make_shared<Node>();
        n->op = Op::number;
        n->value = v;
        return n;
    }

    static NodePtr make(Op op, NodePtr lhs, NodePtr rhs = nullptr)
    {
        auto n = std::make_shared<Node>();
        n->op = op;
        n->lhs = std::move(lhs);
        n->rhs = std::move(rhs);
        return n;
    }

    static bool is_number(const NodePtr &n, double v) { return n->op == Op::number && n->value == v; }

    // light constant folding keeps derivative trees small
    static NodePtr add(NodePtr a, NodePtr b)
    {
        if (is_number(a, 0.0))
            return b;
        if (is_number(b, 0.0))
            return a;
        if (a->op == Op::number && b->op == Op::number)
            return number(a->value + b->value);
        return make(Op::add, std::move(a), std::move(b));
    }

    static NodePtr sub(NodePtr a, NodePtr b)
    {
        if (is_number(b, 0.0))
            return a;
        if (a->op == Op::number && b->op == Op::number)
            return number(a->value - b->value);
        if (is_number(a, 0.0))
            return neg(std::move(b));
        return make(Op::sub, std::move(a), std::move(b));
    }

    static NodePtr mul(NodePtr a, NodePtr b)
    {
        if (is_number(a, 0.0) || is_number(b, 0.0))
            return number(0.0);
        if (is_number(a, 1.0))
            return b;
        if (is_number(b, 1.0))
            return a;
        if (a->op == Op::number && b->op == Op::number)
            return number(a->value * b->value);
        return make(Op::mul, std::move(a), std::move(b));
    }

    static NodePtr div(NodePtr a, NodePtr b)
    {
        if (is_number(a, 0.0))
            return number(0.0);
        if (is_number(b, 1.0))
            return a;
        return make(Op::div, std::move(a), std::move(b));
    }

    static NodePtr neg(NodePtr a)
    {
        if (a->op == Op::number)
            return number(-a->value);
        return make(Op::negate, std::move(a));
    }

    static NodePtr power(NodePtr a, NodePtr b)
    {
        if (is_number(b, 1.0))
            return a;
        if (is_number(b, 0.0))
            return number(1.0);
        return make(Op::pow, std::move(a), std::move(b));
    }

    static bool uses(const Node &n, std::size_t slot)
    {
        if (n.op == Op::variable)
            return n.slot == slot;
        return (n.lhs && uses(*n.lhs, slot)) || (n.rhs && uses(*n.rhs, slot));
    }

    static NodePtr diff(const NodePtr &n, std::size_t v)
    {
        switch (n->op)
        {
        case Op::number:
            return number(0.0);
        case Op::variable:
            return number(n->slot == v ? 1.0 : 0.0);
        case Op::negate:
            return neg(diff(n->lhs, v));
        case Op::add:
            return add(diff(n->lhs, v), diff(n->rhs, v));
        case Op::sub:
            return sub(diff(n->lhs, v), diff(n->rhs, v));
        case Op::mul:
            return add(mul(diff(n->lhs, v), n->rhs), mul(n->lhs, diff(n->rhs, v)));
        case Op::div:
            return div(sub(mul(diff(n->lhs, v), n->rhs), mul(n->lhs, diff(n->rhs, v))), mul(n->rhs, n->rhs));
        case Op::pow: {
            const NodePtr du = diff(n->lhs, v);
            if (!uses(*n->rhs, v))
            {
                // c u^(c-1) u'
                const NodePtr exponent = sub(n->rhs, number(1.0));
                return mul(mul(n->rhs, power(n->lhs, exponent)), du);
            }
            // u^w (w' log u + w u'/u)
            const NodePtr dw = diff(n->rhs, v);
            return mul(n, add(mul(dw, make(Op::log, n->lhs)), div(mul(n->rhs, du), n->lhs)));
        }
        case Op::sin:
            return mul(make(Op::cos, n->lhs), diff(n->lhs, v));
        case Op::cos:
            return neg(mul(make(Op::sin, n->lhs), diff(n->lhs, v)));
        case Op::tan: {
            const NodePtr s = make(Op::sec, n->lhs);
            return mul(mul(s, s), diff(n->lhs, v));
        }
        case Op::sec:
            return mul(mul(n, make(Op::tan, n->lhs)), diff(n->lhs, v));
        case Op::exp:
            return mul(n, diff(n->lhs, v));
        case Op::log:
            return div(diff(n->lhs, v), n->lhs);
        case Op::sqrt:
            return div(diff(n->lhs, v), mul(number(2.0), n));
        case Op::gamma:
            if (uses(*n->lhs, v))
                throw EvaluationError("gamma() of a variable argument cannot be differentiated");
            return number(0.0);
        }
        return number(0.0);
    }

    static double eval(const Node &n, std::span<const double> vars)
    {
        switch (n.op)
        {
        case Op::number:
            return n.value;
        case Op::variable:
            if (n.slot >= vars.size())
                throw EvaluationError("expression variable slot " + std::to_string(n.slot) + " is unbound");
            return vars[n.slot];
        case Op::negate:
            return -eval(*n.lhs, vars);
        case Op::add:
            return eval(*n.lhs, vars) + eval(*n.rhs, vars);
        case Op::sub:
            return eval(*n.lhs, vars) - eval(*n.rhs, vars);
        case Op::mul:
            return eval(*n.lhs, vars) * eval(*n.rhs, vars);
        case Op::div:
            return eval(*n.lhs, vars) / eval(*n.rhs, vars);
        case Op::pow: {
            const double base = eval(*n.lhs, vars);
            const NodePtr &e = n.rhs;
            if (e->op == Op::number && e->value == 2.0)
                return base * base;
            return std::pow(base, eval(*e, vars));
        }
        case Op::sin:
            return std::sin(eval(*n.lhs, vars));
        case Op::cos:
            return std::cos(eval(*n.lhs, vars));
        case Op::tan:
            return std::tan(eval(*n.lhs, vars));
        case Op::sec:
            return 1.0 / std::cos(eval(*n.lhs, vars));
        case Op::exp:
            return std::exp(eval(*n.lhs, vars));
        case Op::log:
            return std::log(eval(*n.lhs, vars));
        case Op::sqrt:
            return std::sqrt(eval(*n.lhs, vars));
        case Op::gamma:
            return std::tgamma(eval(*n.lhs, vars));
        }
        return 0.0;
    }

    struct Parser
    {
        std::string_view text;
        const std::vector<std::string> &variables;
        std::size_t pos{0};

        [[noreturn]] void fail(const std::string &what) const
        {
            throw ParseError("expression \"" + std::string(text) + "\": " + what + " at column " +
                             std::to_string(pos + 1));
        }

        void skip_space()
        {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
                ++pos;
        }

        bool accept(char c)
        {
            skip_space();
            if (pos < text.size() && text[pos] == c)
            {
                ++pos;
                return true;
            }
            return false;
        }

        void expect(char c)
        {
            if (!accept(c))
                fail(std::string("expected '") + c + "'");
        }

        NodePtr parse_all()
        {
            NodePtr e = parse_sum();
            skip_space();
            if (pos != text.size())
                fail("unexpected trailing input");
            return e;
        }

        NodePtr parse_sum()
        {
            NodePtr lhs = parse_product();
            for (;;)
            {
                if (accept('+'))
                    lhs = make(Op::add, lhs, parse_product());
                else if (accept('-'))
                    lhs = make(Op::sub, lhs, parse_product());
                else
                    return lhs;
            }
        }

        NodePtr parse_product()
        {
            NodePtr lhs = parse_unary();
            for (;;)
            {
                if (accept('*'))
                    lhs = make(Op::mul, lhs, parse_unary());
                else if (accept('/'))
                    lhs = make(Op::div, lhs, parse_unary());
                else
                    return lhs;
            }
        }

        NodePtr parse_unary()
        {
            if (accept('-'))
                return make(Op::negate, parse_unary());
            if (accept('+'))
                return parse_unary();
            return parse_power();
        }

        NodePtr parse_power()
        {
            NodePtr base = parse_primary();
            if (accept('^'))
                return make(Op::pow, base, parse_unary());
            return base;
        }

        NodePtr parse_primary()
        {
            skip_space();
            if (pos >= text.size())
                fail("unexpected end of input");
            const char c = text[pos];
            if (accept('('))
            {
                NodePtr e = parse_sum();
                expect(')');
                return e;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
                return parse_number();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
                return parse_identifier();
            fail(std::string("unexpected character '") + c + "'");
        }

        NodePtr parse_number()
        {
            const std::string rest(text.substr(pos));
            char *end = nullptr;
            const double v = std::strtod(rest.c_str(), &end);
            if (end == rest.c_str())
                fail("malformed number");
            pos += static_cast<std::size_t>(end - rest.c_str());
            return number(v);
        }

        NodePtr parse_identifier()
        {
            const std::size_t start = pos;
            while (pos < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
                ++pos;
            const std::string name(text.substr(start, pos - start));

            skip_space();
            if (pos < text.size() && text[pos] == '(')
                return parse_call(name, start);

            if (name == "pi")
                return number(std::numbers::pi);
            for (std::size_t s = 0; s < variables.size(); ++s)
            {
                if (variables[s] == name)
                {
                    auto n = std::make_shared<Node>();
                    n->op = Op::variable;
                    n->slot = s;
                    return n;
                }
            }
            pos = start;
            fail("unknown variable '" + name + "'");
        }

        NodePtr parse_call(const std::string &name, std::size_t start)
        {
            expect('(');
            NodePtr arg = parse_sum();
            if (name == "pow")
            {
                expect(',');
                NodePtr exponent = parse_sum();
                expect(')');
                return make(Op::pow, arg, exponent);
            }
            expect(')');
            static const std::pair<const char *, Op> table[] = {
                {"sin", Op::sin},   {"cos", Op::cos}, {"tan", Op::tan},   {"sec", Op::sec},
                {"exp", Op::exp},   {"log", Op::log}, {"sqrt", Op::sqrt}, {"gamma", Op::gamma},
            };
            for (const auto &[fname, op] : table)
                if (name == fname)
                    return make(op, arg);
            pos = start;
            fail("unknown function '" + name + "'");
        }
    };

    NodePtr root_;
    std::string source_;
    std::vector<std::string> variables_;
};

} // namespace clssvr

#endif // CLSSVR_EXPRESSION_HPP
