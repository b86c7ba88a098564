#include "chemrep/expression.hpp"

#include <cctype>
#include <cmath>
#include <functional>

namespace chemrep {

namespace {

// Value plus partials w.r.t. x and y.
struct Dual {
    double v = 0.0, dx = 0.0, dy = 0.0;
};

Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.dx + b.dx, a.dy + b.dy}; }
Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.dx - b.dx, a.dy - b.dy}; }
Dual operator-(Dual a) { return {-a.v, -a.dx, -a.dy}; }
Dual operator*(Dual a, Dual b) {
    return {a.v * b.v, a.dx * b.v + a.v * b.dx, a.dy * b.v + a.v * b.dy};
}
Dual operator/(Dual a, Dual b) {
    const double inv = 1.0 / b.v;
    const double q = a.v * inv;
    return {q, (a.dx - q * b.dx) * inv, (a.dy - q * b.dy) * inv};
}
Dual exp(Dual a) {
    const double e = std::exp(a.v);
    return {e, e * a.dx, e * a.dy};
}
Dual cos(Dual a) {
    const double s = std::sin(a.v);
    return {std::cos(a.v), -s * a.dx, -s * a.dy};
}
Dual pow(Dual a, Dual b) {
    if (b.dx == 0.0 && b.dy == 0.0) {
        // Constant exponent; integer powers keep negative bases legal.
        const double p = std::pow(a.v, b.v);
        const double dp = b.v * std::pow(a.v, b.v - 1.0);
        return {p, dp * a.dx, dp * a.dy};
    }
    const double p = std::pow(a.v, b.v);
    const double la = std::log(a.v);
    const double common = p;
    return {p, common * (b.dx * la + b.v * a.dx / a.v),
            common * (b.dy * la + b.v * a.dy / a.v)};
}

struct Parser {
    const std::string& src;
    std::size_t pos = 0;

    explicit Parser(const std::string& s) : src(s) {}

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }
    bool consume(char c) {
        skip_ws();
        if (pos < src.size() && src[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    char peek() {
        skip_ws();
        return pos < src.size() ? src[pos] : '\0';
    }
};

} // namespace

template <typename T> T Expression::eval_node(int idx, T x, T y) const {
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    switch (n.op) {
    case Op::Num: {
        T t{};
        t.v = n.value;
        return t;
    }
    case Op::X: return x;
    case Op::Y: return y;
    case Op::Add: return eval_node<T>(n.lhs, x, y) + eval_node<T>(n.rhs, x, y);
    case Op::Sub: return eval_node<T>(n.lhs, x, y) - eval_node<T>(n.rhs, x, y);
    case Op::Mul: return eval_node<T>(n.lhs, x, y) * eval_node<T>(n.rhs, x, y);
    case Op::Div: return eval_node<T>(n.lhs, x, y) / eval_node<T>(n.rhs, x, y);
    case Op::Pow: return pow(eval_node<T>(n.lhs, x, y), eval_node<T>(n.rhs, x, y));
    case Op::Neg: return -eval_node<T>(n.lhs, x, y);
    case Op::Exp: return exp(eval_node<T>(n.lhs, x, y));
    case Op::Cos: return cos(eval_node<T>(n.lhs, x, y));
    }
    throw std::logic_error("Expression: corrupt node");
}

double Expression::eval(double x, double y) const {
    return eval_node<Dual>(root_, {x, 1.0, 0.0}, {y, 0.0, 1.0}).v;
}

Vec2 Expression::grad(double x, double y) const {
    const Dual d = eval_node<Dual>(root_, {x, 1.0, 0.0}, {y, 0.0, 1.0});
    return {d.dx, d.dy};
}

Expression Expression::parse(const std::string& source) {
    Expression ex;
    ex.source_ = source;
    Parser p(source);

    const auto add = [&ex](Node n) {
        ex.nodes_.push_back(n);
        return static_cast<int>(ex.nodes_.size() - 1);
    };

    // expr := term (('+'|'-') term)*
    // term := factor (('*'|'/') factor)*
    // factor := unary ('^' factor)?           (right-associative power)
    // unary := '-' unary | primary
    // primary := number | 'x' | 'y' | 'pi' | func '(' expr ')' | '(' expr ')'
    std::function<int()> parse_expr;

    const auto parse_primary = [&]() -> int {
        p.skip_ws();
        if (p.pos >= p.src.size()) throw ExpressionError("unexpected end of expression", p.pos);
        const char c = p.src[p.pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double val = 0.0;
            try {
                val = std::stod(p.src.substr(p.pos), &used);
            } catch (const std::exception&) {
                throw ExpressionError("malformed number", p.pos);
            }
            p.pos += used;
            return add({Op::Num, val, -1, -1});
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t end = p.pos;
            while (end < p.src.size() && std::isalpha(static_cast<unsigned char>(p.src[end]))) ++end;
            const std::string name = p.src.substr(p.pos, end - p.pos);
            p.pos = end;
            if (name == "x") return add({Op::X, 0.0, -1, -1});
            if (name == "y") return add({Op::Y, 0.0, -1, -1});
            if (name == "pi") return add({Op::Num, M_PI, -1, -1});
            if (name == "exp" || name == "cos") {
                if (!p.consume('(')) throw ExpressionError("expected '(' after " + name, p.pos);
                const int arg = parse_expr();
                if (!p.consume(')')) throw ExpressionError("expected ')'", p.pos);
                return add({name == "exp" ? Op::Exp : Op::Cos, 0.0, arg, -1});
            }
            throw ExpressionError("unknown identifier '" + name + "'", p.pos);
        }
        if (c == '(') {
            ++p.pos;
            const int inner = parse_expr();
            if (!p.consume(')')) throw ExpressionError("expected ')'", p.pos);
            return inner;
        }
        throw ExpressionError(std::string("unexpected character '") + c + "'", p.pos);
    };

    std::function<int()> parse_factor;
    const auto parse_unary = [&]() -> int {
        if (p.consume('-')) return add({Op::Neg, 0.0, parse_factor(), -1});
        if (p.consume('+')) return parse_factor();
        return parse_primary();
    };
    parse_factor = [&]() -> int {
        const int base = parse_unary();
        if (p.consume('^')) return add({Op::Pow, 0.0, base, parse_factor()});
        return base;
    };
    const auto parse_term = [&]() -> int {
        int lhs = parse_factor();
        while (true) {
            if (p.consume('*')) lhs = add({Op::Mul, 0.0, lhs, parse_factor()});
            else if (p.consume('/')) lhs = add({Op::Div, 0.0, lhs, parse_factor()});
            else return lhs;
        }
    };
    parse_expr = [&]() -> int {
        int lhs = parse_term();
        while (true) {
            if (p.consume('+')) lhs = add({Op::Add, 0.0, lhs, parse_term()});
            else if (p.consume('-')) lhs = add({Op::Sub, 0.0, lhs, parse_term()});
            else return lhs;
        }
    };

    ex.root_ = parse_expr();
    p.skip_ws();
    if (p.pos != p.src.size())
        throw ExpressionError("trailing characters after expression", p.pos);
    return ex;
}

} // namespace chemrep
