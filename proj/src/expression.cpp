#include "blowup/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>

namespace blowup {

namespace {

using Kind = Expression::Kind;
using Node = Expression::Node;
using NodePtr = Expression::NodePtr;

NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

NodePtr number(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Number;
  n->number = v;
  return n;
}

bool is_number(const NodePtr& n, double v) { return n->kind == Kind::Number && n->number == v; }

// Light constant folding keeps derivative trees small.
NodePtr add(NodePtr a, NodePtr b) {
  if (is_number(a, 0.0)) return b;
  if (is_number(b, 0.0)) return a;
  return make(Kind::Add, a, b);
}
NodePtr sub(NodePtr a, NodePtr b) {
  if (is_number(b, 0.0)) return a;
  if (is_number(a, 0.0)) return make(Kind::Neg, b);
  return make(Kind::Sub, a, b);
}
NodePtr mul(NodePtr a, NodePtr b) {
  if (is_number(a, 0.0) || is_number(b, 0.0)) return number(0.0);
  if (is_number(a, 1.0)) return b;
  if (is_number(b, 1.0)) return a;
  return make(Kind::Mul, a, b);
}
NodePtr div(NodePtr a, NodePtr b) {
  if (is_number(a, 0.0)) return number(0.0);
  if (is_number(b, 1.0)) return a;
  return make(Kind::Div, a, b);
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) throw ParseError("unexpected character '" + std::string(1, s_[pos_]) + "'", pos_);
    return e;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Kind::Add, lhs, term());
      else if (accept('-')) lhs = make(Kind::Sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make(Kind::Mul, lhs, unary());
      else if (accept('/')) lhs = make(Kind::Div, lhs, unary());
      else return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Kind::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  // Right associative; binds tighter than unary minus on its left operand.
  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Kind::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of expression", pos_);
    const std::size_t start = pos_;
    const char c = s_[pos_];
    if (accept('(')) {
      NodePtr e = expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        throw ParseError("malformed number", start);
      }
      pos_ += used;
      return number(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      if (id == "x") return make(Kind::Variable);
      if (id == "pi") return number(std::numbers::pi);
      if (id == "e") return number(std::numbers::e);
      Kind k;
      if (id == "sin") k = Kind::Sin;
      else if (id == "cos") k = Kind::Cos;
      else if (id == "exp") k = Kind::Exp;
      else if (id == "tanh") k = Kind::Tanh;
      else if (id == "sqrt") k = Kind::Sqrt;
      else if (id == "log") k = Kind::Log;
      else throw ParseError("unknown identifier '" + id + "'", start);
      if (!accept('(')) throw ParseError("expected '(' after " + id, pos_);
      NodePtr arg = expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return make(k, arg);
    }
    throw ParseError("unexpected character '" + std::string(1, c) + "'", start);
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text) { return Expression(Parser(text).parse()); }

template <class T>
T Expression::eval(const NodePtr& n, const T& x) {
  auto constant = [&](double v) -> T {
    if constexpr (std::is_same_v<T, double>) return v;
    else return x.constant_like(v);
  };
  switch (n->kind) {
    case Kind::Number: return constant(n->number);
    case Kind::Variable: return x;
    case Kind::Add: return eval(n->lhs, x) + eval(n->rhs, x);
    case Kind::Sub: return eval(n->lhs, x) - eval(n->rhs, x);
    case Kind::Mul: return eval(n->lhs, x) * eval(n->rhs, x);
    case Kind::Div: return eval(n->lhs, x) / eval(n->rhs, x);
    case Kind::Neg: return -eval(n->lhs, x);
    case Kind::Pow: {
      if (!depends_on_x(n->rhs)) {
        const double r = eval(n->rhs, 0.0);
        T base = eval(n->lhs, x);
        if (r == 0.0) return constant(1.0);
        if (r == std::round(r) && r > 0.0 && r <= 16.0) {
          T out = base;
          for (int k = 1; k < int(r); ++k) out = out * base;
          return out;
        }
        return pow(base, r);
      }
      return exp(eval(n->rhs, x) * log(eval(n->lhs, x)));
    }
    case Kind::Sin: return sin(eval(n->lhs, x));
    case Kind::Cos: return cos(eval(n->lhs, x));
    case Kind::Exp: return exp(eval(n->lhs, x));
    case Kind::Tanh: return tanh(eval(n->lhs, x));
    case Kind::Sqrt: return sqrt(eval(n->lhs, x));
    case Kind::Log: return log(eval(n->lhs, x));
  }
  throw std::logic_error("bad expression node");
}

template double Expression::eval<double>(const NodePtr&, const double&);
template Jet Expression::eval<Jet>(const NodePtr&, const Jet&);

bool Expression::depends_on_x(const NodePtr& n) {
  if (!n) return false;
  if (n->kind == Kind::Variable) return true;
  return depends_on_x(n->lhs) || depends_on_x(n->rhs);
}

Expression::NodePtr Expression::differentiate(const NodePtr& n) {
  const NodePtr& u = n->lhs;
  const NodePtr& v = n->rhs;
  switch (n->kind) {
    case Kind::Number: return number(0.0);
    case Kind::Variable: return number(1.0);
    case Kind::Add: return add(differentiate(u), differentiate(v));
    case Kind::Sub: return sub(differentiate(u), differentiate(v));
    case Kind::Neg: {
      NodePtr du = differentiate(u);
      return is_number(du, 0.0) ? du : make(Kind::Neg, du);
    }
    case Kind::Mul: return add(mul(differentiate(u), v), mul(u, differentiate(v)));
    case Kind::Div:
      return div(sub(mul(differentiate(u), v), mul(u, differentiate(v))), mul(v, v));
    case Kind::Pow: {
      if (!depends_on_x(v)) {
        const double r = eval(v, 0.0);
        return mul(mul(number(r), make(Kind::Pow, u, number(r - 1.0))), differentiate(u));
      }
      // d(u^v) = u^v (v' log u + v u'/u)
      return mul(n, add(mul(differentiate(v), make(Kind::Log, u)), div(mul(v, differentiate(u)), u)));
    }
    case Kind::Sin: return mul(make(Kind::Cos, u), differentiate(u));
    case Kind::Cos: return mul(make(Kind::Neg, make(Kind::Sin, u)), differentiate(u));
    case Kind::Exp: return mul(n, differentiate(u));
    case Kind::Tanh: return mul(sub(number(1.0), mul(n, n)), differentiate(u));
    case Kind::Sqrt: return div(differentiate(u), mul(number(2.0), n));
    case Kind::Log: return div(differentiate(u), u);
  }
  throw std::logic_error("bad expression node");
}

Expression Expression::derivative() const { return Expression(differentiate(root_)); }

std::string Expression::to_string(const NodePtr& n) {
  auto bin = [&](const char* op) { return "(" + to_string(n->lhs) + op + to_string(n->rhs) + ")"; };
  auto fn = [&](const char* f) { return std::string(f) + "(" + to_string(n->lhs) + ")"; };
  switch (n->kind) {
    case Kind::Number: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", n->number);
      return buf;
    }
    case Kind::Variable: return "x";
    case Kind::Add: return bin("+");
    case Kind::Sub: return bin("-");
    case Kind::Mul: return bin("*");
    case Kind::Div: return bin("/");
    case Kind::Pow: return bin("^");
    case Kind::Neg: return "(-" + to_string(n->lhs) + ")";
    case Kind::Sin: return fn("sin");
    case Kind::Cos: return fn("cos");
    case Kind::Exp: return fn("exp");
    case Kind::Tanh: return fn("tanh");
    case Kind::Sqrt: return fn("sqrt");
    case Kind::Log: return fn("log");
  }
  return "?";
}

}  // namespace blowup
