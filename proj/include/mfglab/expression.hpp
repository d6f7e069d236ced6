#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mfglab {

/// Tiny arithmetic expression over x1..xn, t, numeric literals and pi, with
/// + - * / ^, parentheses and the functions cos, sin, exp, tanh.
/// Grammar version "expr-v1"; documented in the README.
class ScalarExpr {
public:
    /// Parses or throws std::invalid_argument naming the offending position.
    static ScalarExpr parse(const std::string& source, int dim);

    double eval(std::span<const double> x, double t = 0.0) const;
    const std::string& source() const { return source_; }
    bool time_dependent() const { return time_dependent_; }

private:
    struct Node {
        enum class Op { constant, coordinate, time, add, sub, mul, div, pow, neg,
                        cos, sin, exp, tanh };
        Op op;
        double value = 0.0; // constant
        int axis = 0;       // coordinate
        int a = -1, b = -1; // child indices
    };

    ScalarExpr() = default;
    double eval_node(int node, std::span<const double> x, double t) const;

    std::string source_;
    std::vector<Node> nodes_;
    int root_ = -1;
    bool time_dependent_ = false;

    friend class ExprParser;
};

} // namespace mfglab
