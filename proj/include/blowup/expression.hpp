#pragma once

// Arithmetic expressions in one variable x: + - * / ^, parentheses,
// sin cos exp tanh sqrt log, the constants pi and e.

#include "blowup/taylor.hpp"

#include <memory>
#include <stdexcept>
#include <string>

namespace blowup {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class Expression {
 public:
  enum class Kind { Number, Variable, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Tanh, Sqrt, Log };

  struct Node {
    Kind kind;
    double number = 0.0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };
  using NodePtr = std::shared_ptr<const Node>;

  static Expression parse(const std::string& text);

  double operator()(double x) const { return eval(root_, x); }
  Jet operator()(const Jet& x) const { return eval(root_, x); }

  /// Symbolic derivative with respect to x.
  Expression derivative() const;

  bool depends_on_x() const { return depends_on_x(root_); }
  std::string to_string() const { return to_string(root_); }

 private:
  explicit Expression(NodePtr root) : root_(std::move(root)) {}

  template <class T>
  static T eval(const NodePtr& n, const T& x);
  static NodePtr differentiate(const NodePtr& n);
  static bool depends_on_x(const NodePtr& n);
  static std::string to_string(const NodePtr& n);

  NodePtr root_;
};

}  // namespace blowup
