#pragma once

// Small arithmetic grammar for potentials f(y):
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | '+' unary | power
//   power   := primary ('^' unary)?
//   primary := number | 'pi' | x1 | x2 | x3 | x | y | z | '|x|' | '(' expr ')'
//
// x1..x3 (aliases x, y, z) are coordinates of the evaluation point and |x|
// its Euclidean norm, so "|x|^2" is the squared radius.

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "smale/errors.hpp"

namespace smale {

class Expression {
 public:
  Expression() : Expression(constant(0.0)) {}

  static Expression constant(double value) {
    Expression e{std::vector<Node>{}};
    e.nodes_.push_back(Node{Op::Constant, value, -1, -1});
    return e;
  }

  static Expression parse(std::string_view text) {
    Parser p{text, {}, 0};
    const int root = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("unexpected trailing input");
    Expression e{std::move(p.nodes)};
    e.root_ = root;
    return e;
  }

  double operator()(std::span<const double> point) const { return eval(root_, point); }

  bool is_constant() const { return nodes_.size() == 1 && nodes_[0].op == Op::Constant; }

 private:
  enum class Op { Constant, Coordinate, Norm, Neg, Add, Sub, Mul, Div, Pow };

  struct Node {
    Op op;
    double value;  // constant value or coordinate index
    int lhs;
    int rhs;
  };

  explicit Expression(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  double eval(int i, std::span<const double> p) const {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    switch (n.op) {
      case Op::Constant: return n.value;
      case Op::Coordinate: {
        const auto k = static_cast<std::size_t>(n.value);
        return k < p.size() ? p[k] : 0.0;
      }
      case Op::Norm: {
        double s = 0.0;
        for (double v : p) s += v * v;
        return std::sqrt(s);
      }
      case Op::Neg: return -eval(n.lhs, p);
      case Op::Add: return eval(n.lhs, p) + eval(n.rhs, p);
      case Op::Sub: return eval(n.lhs, p) - eval(n.rhs, p);
      case Op::Mul: return eval(n.lhs, p) * eval(n.rhs, p);
      case Op::Div: return eval(n.lhs, p) / eval(n.rhs, p);
      case Op::Pow: return std::pow(eval(n.lhs, p), eval(n.rhs, p));
    }
    return 0.0;
  }

  struct Parser {
    std::string_view text;
    std::vector<Node> nodes;
    std::size_t pos;

    [[noreturn]] void fail(const std::string& what) const {
      throw ConfigError("expression '" + std::string(text) + "': " + what + " at offset " + std::to_string(pos));
    }

    void skip_ws() {
      while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool accept(char c) {
      skip_ws();
      if (pos < text.size() && text[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    int add(Op op, double value, int lhs = -1, int rhs = -1) {
      nodes.push_back(Node{op, value, lhs, rhs});
      return static_cast<int>(nodes.size()) - 1;
    }

    int parse_expr() {
      int lhs = parse_term();
      for (;;) {
        if (accept('+')) lhs = add(Op::Add, 0, lhs, parse_term());
        else if (accept('-')) lhs = add(Op::Sub, 0, lhs, parse_term());
        else return lhs;
      }
    }

    int parse_term() {
      int lhs = parse_unary();
      for (;;) {
        if (accept('*')) lhs = add(Op::Mul, 0, lhs, parse_unary());
        else if (accept('/')) lhs = add(Op::Div, 0, lhs, parse_unary());
        else return lhs;
      }
    }

    int parse_power() {
      const int base = parse_primary();
      if (accept('^')) return add(Op::Pow, 0, base, parse_unary());
      return base;
    }

    int parse_unary() {
      if (accept('-')) return add(Op::Neg, 0, parse_unary());
      if (accept('+')) return parse_unary();
      return parse_power();
    }

    int parse_primary() {
      skip_ws();
      if (pos >= text.size()) fail("unexpected end of input");
      const char c = text[pos];
      if (c == '(') {
        ++pos;
        const int inner = parse_expr();
        if (!accept(')')) fail("expected ')'");
        return inner;
      }
      if (c == '|') {
        ++pos;
        skip_ws();
        if (pos >= text.size() || text[pos] != 'x') fail("expected '|x|'");
        ++pos;
        if (!accept('|')) fail("expected closing '|'");
        return add(Op::Norm, 0);
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        char* end = nullptr;
        const std::string copy(text.substr(pos));
        const double v = std::strtod(copy.c_str(), &end);
        const auto used = static_cast<std::size_t>(end - copy.c_str());
        if (used == 0) fail("malformed number");
        pos += used;
        return add(Op::Constant, v);
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        std::size_t end = pos;
        while (end < text.size() && std::isalnum(static_cast<unsigned char>(text[end]))) ++end;
        const std::string_view id = text.substr(pos, end - pos);
        pos = end;
        if (id == "pi") return add(Op::Constant, std::numbers::pi);
        if (id == "x1" || id == "x") return add(Op::Coordinate, 0);
        if (id == "x2" || id == "y") return add(Op::Coordinate, 1);
        if (id == "x3" || id == "z") return add(Op::Coordinate, 2);
        fail("unknown identifier '" + std::string(id) + "'");
      }
      fail(std::string("unexpected character '") + c + "'");
    }
  };

  std::vector<Node> nodes_;
  int root_ = 0;
};

}  // namespace smale
