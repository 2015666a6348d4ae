#include "mks/expression.hpp"

#include <cctype>
#include <cmath>
#include <vector>

namespace mks {

struct Expression::Node {
  enum class Op { Const, VarX, VarY, VarS, VarTheta, Add, Sub, Mul, Div, Neg, Abs, Min, Max };
  Op op = Op::Const;
  double value = 0.0;
  std::shared_ptr<const Node> a, b;

  double eval(double x, double y, double s) const {
    switch (op) {
      case Op::Const: return value;
      case Op::VarX: return x;
      case Op::VarY: return y;
      case Op::VarS: return s;
      case Op::VarTheta: return std::atan2(y, x);
      case Op::Add: return a->eval(x, y, s) + b->eval(x, y, s);
      case Op::Sub: return a->eval(x, y, s) - b->eval(x, y, s);
      case Op::Mul: return a->eval(x, y, s) * b->eval(x, y, s);
      case Op::Div: return a->eval(x, y, s) / b->eval(x, y, s);
      case Op::Neg: return -a->eval(x, y, s);
      case Op::Abs: return std::abs(a->eval(x, y, s));
      case Op::Min: return std::min(a->eval(x, y, s), b->eval(x, y, s));
      case Op::Max: return std::max(a->eval(x, y, s), b->eval(x, y, s));
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0.0) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->value = v;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr run() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    throw ExpressionError("formula error at offset " + std::to_string(pos_) + ": " + msg +
                          " in \"" + s_ + "\"");
  }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (eat('+')) lhs = make(Op::Add, lhs, term());
      else if (eat('-')) lhs = make(Op::Sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (eat('*')) lhs = make(Op::Mul, lhs, unary());
      else if (eat('/')) lhs = make(Op::Div, lhs, unary());
      else return lhs;
    }
  }

  NodePtr unary() {
    if (eat('-')) return make(Op::Neg, unary());
    if (eat('+')) return unary();
    return primary();
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of formula");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!eat(')')) fail("missing ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t len = 0;
      double v = std::stod(s_.substr(pos_), &len);
      pos_ += len;
      return make(Op::Const, nullptr, nullptr, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      std::string id = s_.substr(start, pos_ - start);
      if (id == "x") return make(Op::VarX);
      if (id == "y") return make(Op::VarY);
      if (id == "s") return make(Op::VarS);
      if (id == "theta") return make(Op::VarTheta);
      if (id == "pi") return make(Op::Const, nullptr, nullptr, M_PI);
      if (id == "abs" || id == "min" || id == "max") {
        if (!eat('(')) fail("expected '(' after " + id);
        NodePtr a = expr();
        NodePtr b;
        if (id != "abs") {
          if (!eat(',')) fail("expected ',' in " + id + "(...)");
          b = expr();
        }
        if (!eat(')')) fail("missing ')' after " + id + "(...)");
        if (id == "abs") return make(Op::Abs, a);
        return make(id == "min" ? Op::Min : Op::Max, a, b);
      }
      fail("unknown identifier '" + id + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  const std::string& s_;
  size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.root_ = Parser(text).run();
  e.text_ = text;
  return e;
}

double Expression::eval(double x, double y, double s) const {
  if (!root_) return 0.0;
  return root_->eval(x, y, s);
}

}  // namespace mks
