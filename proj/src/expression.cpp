#include "mfglab/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>

namespace mfglab {

class ExprParser {
public:
    ExprParser(const std::string& src, int dim) : src_(src), dim_(dim) {}

    ScalarExpr run() {
        ScalarExpr e;
        e.source_ = src_;
        expr_ = &e;
        e.root_ = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("expression error at position " +
                                    std::to_string(pos_ + 1) + ": " + what + " in \"" +
                                    src_ + "\"");
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    int add(ScalarExpr::Node n) {
        expr_->nodes_.push_back(n);
        return static_cast<int>(expr_->nodes_.size()) - 1;
    }

    int parse_expr() {
        int lhs = parse_term();
        while (true) {
            if (consume('+'))
                lhs = add({ScalarExpr::Node::Op::add, 0.0, 0, lhs, parse_term()});
            else if (consume('-'))
                lhs = add({ScalarExpr::Node::Op::sub, 0.0, 0, lhs, parse_term()});
            else
                return lhs;
        }
    }

    int parse_term() {
        int lhs = parse_unary();
        while (true) {
            if (consume('*'))
                lhs = add({ScalarExpr::Node::Op::mul, 0.0, 0, lhs, parse_unary()});
            else if (consume('/'))
                lhs = add({ScalarExpr::Node::Op::div, 0.0, 0, lhs, parse_unary()});
            else
                return lhs;
        }
    }

    int parse_unary() {
        if (consume('-')) return add({ScalarExpr::Node::Op::neg, 0.0, 0, parse_unary(), -1});
        if (consume('+')) return parse_unary();
        return parse_power();
    }

    int parse_power() {
        int base = parse_atom();
        if (consume('^')) // right associative
            return add({ScalarExpr::Node::Op::pow, 0.0, 0, base, parse_unary()});
        return base;
    }

    int parse_atom() {
        skip_ws();
        if (pos_ >= src_.size()) fail("expected a value");
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = src_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("malformed number");
            pos_ += static_cast<std::size_t>(end - begin);
            return add({ScalarExpr::Node::Op::constant, v, 0, -1, -1});
        }
        if (c == '(') {
            ++pos_;
            const int inner = parse_expr();
            if (!consume(')')) fail("missing closing parenthesis");
            return inner;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
        fail(std::string("unexpected character '") + c + "'");
    }

    int parse_ident() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string name = src_.substr(start, pos_ - start);

        if (name == "pi")
            return add({ScalarExpr::Node::Op::constant, std::numbers::pi, 0, -1, -1});
        if (name == "t") {
            expr_->time_dependent_ = true;
            return add({ScalarExpr::Node::Op::time, 0.0, 0, -1, -1});
        }
        if (name.size() >= 2 && name[0] == 'x') {
            char* end = nullptr;
            const long axis = std::strtol(name.c_str() + 1, &end, 10);
            if (*end == '\0' && axis >= 1) {
                if (axis > dim_)
                    fail("coordinate " + name + " exceeds the domain dimension " +
                         std::to_string(dim_));
                return add({ScalarExpr::Node::Op::coordinate, 0.0,
                            static_cast<int>(axis - 1), -1, -1});
            }
        }

        ScalarExpr::Node::Op fn;
        if (name == "cos") fn = ScalarExpr::Node::Op::cos;
        else if (name == "sin") fn = ScalarExpr::Node::Op::sin;
        else if (name == "exp") fn = ScalarExpr::Node::Op::exp;
        else if (name == "tanh") fn = ScalarExpr::Node::Op::tanh;
        else fail("unknown identifier \"" + name + "\"");

        if (!consume('(')) fail("function " + name + " needs parentheses");
        const int arg = parse_expr();
        if (!consume(')')) fail("missing closing parenthesis");
        return add({fn, 0.0, 0, arg, -1});
    }

    const std::string& src_;
    int dim_;
    std::size_t pos_ = 0;
    ScalarExpr* expr_ = nullptr;
};

ScalarExpr ScalarExpr::parse(const std::string& source, int dim) {
    return ExprParser(source, dim).run();
}

double ScalarExpr::eval_node(int node, std::span<const double> x, double t) const {
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    using Op = Node::Op;
    switch (n.op) {
    case Op::constant: return n.value;
    case Op::coordinate: return x[static_cast<std::size_t>(n.axis)];
    case Op::time: return t;
    case Op::add: return eval_node(n.a, x, t) + eval_node(n.b, x, t);
    case Op::sub: return eval_node(n.a, x, t) - eval_node(n.b, x, t);
    case Op::mul: return eval_node(n.a, x, t) * eval_node(n.b, x, t);
    case Op::div: return eval_node(n.a, x, t) / eval_node(n.b, x, t);
    case Op::pow: return std::pow(eval_node(n.a, x, t), eval_node(n.b, x, t));
    case Op::neg: return -eval_node(n.a, x, t);
    case Op::cos: return std::cos(eval_node(n.a, x, t));
    case Op::sin: return std::sin(eval_node(n.a, x, t));
    case Op::exp: return std::exp(eval_node(n.a, x, t));
    case Op::tanh: return std::tanh(eval_node(n.a, x, t));
    }
    return 0.0;
}

double ScalarExpr::eval(std::span<const double> x, double t) const {
    if (root_ < 0) throw std::logic_error("ScalarExpr: empty expression");
    return eval_node(root_, x, t);
}

} // namespace mfglab
