#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "chemrep/mesh.hpp"

namespace chemrep {

struct ExpressionError : std::runtime_error {
    ExpressionError(const std::string& msg, std::size_t position)
        : std::runtime_error(msg + " (at position " + std::to_string(position) + ")"),
          pos(position) {}
    std::size_t pos;
};

/// Arithmetic expressions in x and y: numbers, pi, + - * / ^, exp, cos,
/// parentheses, unary minus. Gradients come from forward-mode duals, so
/// projected initial gradients are exact.
class Expression {
public:
    static Expression parse(const std::string& source);

    double eval(double x, double y) const;
    Vec2 grad(double x, double y) const;
    const std::string& source() const { return source_; }

private:
    enum class Op : std::uint8_t { Num, X, Y, Add, Sub, Mul, Div, Pow, Neg, Exp, Cos };
    struct Node {
        Op op;
        double value = 0.0; // Num only
        int lhs = -1, rhs = -1;
    };
    std::vector<Node> nodes_;
    int root_ = -1;
    std::string source_;

    template <typename T> T eval_node(int idx, T x, T y) const;
};

} // namespace chemrep
