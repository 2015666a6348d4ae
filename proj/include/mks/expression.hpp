#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "mks/geometry.hpp"

namespace mks {

struct ExpressionError : std::runtime_error {
  explicit ExpressionError(const std::string& what) : std::runtime_error(what) {}
};

// Closed expression grammar for datum/source formulas:
//   variables x, y, s (boundary arc parameter), theta (= atan2(y, x));
//   constants, pi; operators + - * /, unary -; abs(e), min(a,b), max(a,b).
class Expression {
 public:
  static Expression parse(const std::string& text);

  double eval(double x, double y, double s = 0.0) const;
  const std::string& text() const { return text_; }

  struct Node;
  Expression() = default;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace mks
