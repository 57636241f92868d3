// SPDX-License-Identifier: MIT
//
// Tiny arithmetic expression language for coefficient files.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?
//   primary := number | name | name '(' expr ')' | '(' expr ')'
//
// Names: the variables `t` and `w` (common-noise level on a tree), the
// constants `pi` and `e`, and the functions exp, log, sqrt, sin, cos, tanh, abs.
#pragma once

#include "mfgliq/error.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace mfgliq {

struct ExprVars {
    double t = 0.0;
    double w = 0.0;
};

class Expression {
public:
    static Expression parse(std::string_view text) {
        Parser p{text, 0};
        Expression e;
        e.source_ = std::string(text);
        e.root_ = p.parse_expr();
        p.skip_ws();
        if (p.pos != text.size()) {
            throw InvalidArgument("expression: unexpected '" + std::string(1, text[p.pos]) +
                                  "' at offset " + std::to_string(p.pos) + " in \"" +
                                  std::string(text) + "\"");
        }
        e.uses_w_ = contains_var(*e.root_, 'w');
        e.uses_t_ = contains_var(*e.root_, 't');
        return e;
    }

    [[nodiscard]] double operator()(double t, double w = 0.0) const {
        return eval(*root_, ExprVars{t, w});
    }

    [[nodiscard]] const std::string& source() const noexcept { return source_; }
    [[nodiscard]] bool uses_w() const noexcept { return uses_w_; }
    [[nodiscard]] bool uses_t() const noexcept { return uses_t_; }

private:
    enum class Op { Num, VarT, VarW, Add, Sub, Mul, Div, Pow, Neg, Call };
    enum class Fn { Exp, Log, Sqrt, Sin, Cos, Tanh, Abs };

    struct Node {
        Op op;
        double value = 0.0;
        Fn fn = Fn::Exp;
        std::shared_ptr<const Node> lhs, rhs;
    };
    using NodePtr = std::shared_ptr<const Node>;

    static NodePtr make(Op op, NodePtr l = nullptr, NodePtr r = nullptr) {
        auto n = std::make_shared<Node>();
        n->op = op;
        n->lhs = std::move(l);
        n->rhs = std::move(r);
        return n;
    }

    struct Parser {
        std::string_view s;
        std::size_t pos;

        void skip_ws() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool eat(char c) {
            skip_ws();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }
        [[noreturn]] void fail(const std::string& msg) const {
            throw InvalidArgument("expression: " + msg + " at offset " + std::to_string(pos) +
                                  " in \"" + std::string(s) + "\"");
        }

        NodePtr parse_expr() {
            NodePtr lhs = parse_term();
            for (;;) {
                if (eat('+')) lhs = make(Op::Add, lhs, parse_term());
                else if (eat('-')) lhs = make(Op::Sub, lhs, parse_term());
                else return lhs;
            }
        }
        NodePtr parse_term() {
            NodePtr lhs = parse_unary();
            for (;;) {
                if (eat('*')) lhs = make(Op::Mul, lhs, parse_unary());
                else if (eat('/')) lhs = make(Op::Div, lhs, parse_unary());
                else return lhs;
            }
        }
        NodePtr parse_unary() {
            if (eat('-')) return make(Op::Neg, parse_unary());
            if (eat('+')) return parse_unary();
            return parse_power();
        }
        NodePtr parse_power() {
            NodePtr base = parse_primary();
            if (eat('^')) return make(Op::Pow, base, parse_unary());
            return base;
        }
        NodePtr parse_primary() {
            skip_ws();
            if (pos >= s.size()) fail("unexpected end of input");
            char c = s[pos];
            if (eat('(')) {
                NodePtr inner = parse_expr();
                if (!eat(')')) fail("expected ')'");
                return inner;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                std::string buf(s.substr(pos));
                char* end = nullptr;
                double v = std::strtod(buf.c_str(), &end);
                if (end == buf.c_str()) fail("bad number");
                pos += static_cast<std::size_t>(end - buf.c_str());
                auto n = std::make_shared<Node>();
                n->op = Op::Num;
                n->value = v;
                return n;
            }
            if (std::isalpha(static_cast<unsigned char>(c))) {
                std::size_t start = pos;
                while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
                    ++pos;
                std::string name(s.substr(start, pos - start));
                if (eat('(')) {
                    auto n = std::make_shared<Node>();
                    n->op = Op::Call;
                    if (name == "exp") n->fn = Fn::Exp;
                    else if (name == "log") n->fn = Fn::Log;
                    else if (name == "sqrt") n->fn = Fn::Sqrt;
                    else if (name == "sin") n->fn = Fn::Sin;
                    else if (name == "cos") n->fn = Fn::Cos;
                    else if (name == "tanh") n->fn = Fn::Tanh;
                    else if (name == "abs") n->fn = Fn::Abs;
                    else fail("unknown function '" + name + "'");
                    n->lhs = parse_expr();
                    if (!eat(')')) fail("expected ')'");
                    return n;
                }
                if (name == "t") return make(Op::VarT);
                if (name == "w") return make(Op::VarW);
                auto n = std::make_shared<Node>();
                n->op = Op::Num;
                if (name == "pi") n->value = std::numbers::pi;
                else if (name == "e") n->value = std::numbers::e;
                else fail("unknown name '" + name + "'");
                return n;
            }
            fail("unexpected character");
        }
    };

    static bool contains_var(const Node& n, char v) {
        if (n.op == Op::VarT) return v == 't';
        if (n.op == Op::VarW) return v == 'w';
        return (n.lhs && contains_var(*n.lhs, v)) || (n.rhs && contains_var(*n.rhs, v));
    }

    static double eval(const Node& n, const ExprVars& v) {
        switch (n.op) {
        case Op::Num: return n.value;
        case Op::VarT: return v.t;
        case Op::VarW: return v.w;
        case Op::Add: return eval(*n.lhs, v) + eval(*n.rhs, v);
        case Op::Sub: return eval(*n.lhs, v) - eval(*n.rhs, v);
        case Op::Mul: return eval(*n.lhs, v) * eval(*n.rhs, v);
        case Op::Div: return eval(*n.lhs, v) / eval(*n.rhs, v);
        case Op::Pow: return std::pow(eval(*n.lhs, v), eval(*n.rhs, v));
        case Op::Neg: return -eval(*n.lhs, v);
        case Op::Call: {
            double a = eval(*n.lhs, v);
            switch (n.fn) {
            case Fn::Exp: return std::exp(a);
            case Fn::Log: return std::log(a);
            case Fn::Sqrt: return std::sqrt(a);
            case Fn::Sin: return std::sin(a);
            case Fn::Cos: return std::cos(a);
            case Fn::Tanh: return std::tanh(a);
            case Fn::Abs: return std::fabs(a);
            }
        }
        }
        return 0.0;
    }

    std::string source_;
    NodePtr root_;
    bool uses_w_ = false;
    bool uses_t_ = false;
};

}  // namespace mfgliq
