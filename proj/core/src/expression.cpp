#include "drbsde/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <vector>

#include "drbsde/error.hpp"

namespace drbsde {

namespace {

enum class Op { constant, var, neg, add, sub, mul, div, pow, abs, exp, log, sqrt, tanh, min, max };

unsigned symbol_bit(char c) {
  switch (c) {
    case 't': return 1U;
    case 'B': return 2U;
    case 'S': return 4U;
    case 'y': return 8U;
    case 'z': return 16U;
    default: return 0U;
  }
}

}  // namespace

struct Expression::Node {
  Op op = Op::constant;
  double value = 0.0;
  char symbol = 0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    NodePtr root = expr();
    skip();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return root;
  }

  unsigned symbols() const { return symbols_; }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("expression \"" + std::string(text_) + "\" at " + std::to_string(pos_) + ": " + what);
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Op::add, lhs, term());
      else if (accept('-')) lhs = make(Op::sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make(Op::mul, lhs, unary());
      else if (accept('/')) lhs = make(Op::div, lhs, unary());
      else return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Op::pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end");
    const char c = text_[pos_];
    if (accept('(')) {
      NodePtr inner = expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail(std::string("unexpected '") + c + "'");
  }

  NodePtr number() {
    const std::string rest(text_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str()) fail("bad number");
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    auto n = std::make_shared<Expression::Node>();
    n->value = v;
    return n;
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    const std::string name(text_.substr(start, pos_ - start));

    if (name.size() == 1 && symbol_bit(name[0]) != 0) {
      auto n = std::make_shared<Expression::Node>();
      n->op = Op::var;
      n->symbol = name[0];
      symbols_ |= symbol_bit(name[0]);
      return n;
    }
    if (name == "pi" || name == "inf") {
      auto n = std::make_shared<Expression::Node>();
      n->value = name == "pi" ? std::numbers::pi : std::numeric_limits<double>::infinity();
      return n;
    }

    struct Fn {
      const char* name;
      Op op;
      int arity;
    };
    static constexpr Fn fns[] = {{"abs", Op::abs, 1},  {"exp", Op::exp, 1}, {"log", Op::log, 1},
                                 {"sqrt", Op::sqrt, 1}, {"tanh", Op::tanh, 1}, {"min", Op::min, 2},
                                 {"max", Op::max, 2}};
    for (const Fn& fn : fns) {
      if (name != fn.name) continue;
      expect('(');
      NodePtr a = expr();
      NodePtr b;
      if (fn.arity == 2) {
        expect(',');
        b = expr();
      }
      expect(')');
      return make(fn.op, a, b);
    }
    pos_ = start;
    fail("unknown symbol '" + name + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  unsigned symbols_ = 0;
};

double eval(const Expression::Node& n, const ExpressionVars& v) {
  switch (n.op) {
    case Op::constant: return n.value;
    case Op::var:
      switch (n.symbol) {
        case 't': return v.t;
        case 'B': return v.B;
        case 'S': return v.S;
        case 'y': return v.y;
        default: return v.z;
      }
    case Op::neg: return -eval(*n.lhs, v);
    case Op::add: return eval(*n.lhs, v) + eval(*n.rhs, v);
    case Op::sub: return eval(*n.lhs, v) - eval(*n.rhs, v);
    case Op::mul: return eval(*n.lhs, v) * eval(*n.rhs, v);
    case Op::div: return eval(*n.lhs, v) / eval(*n.rhs, v);
    case Op::pow: {
      const double b = eval(*n.lhs, v);
      const double e = eval(*n.rhs, v);
      if (e == 2.0) return b * b;
      return std::pow(b, e);
    }
    case Op::abs: return std::fabs(eval(*n.lhs, v));
    case Op::exp: return std::exp(eval(*n.lhs, v));
    case Op::log: return std::log(eval(*n.lhs, v));
    case Op::sqrt: return std::sqrt(eval(*n.lhs, v));
    case Op::tanh: return std::tanh(eval(*n.lhs, v));
    case Op::min: return std::fmin(eval(*n.lhs, v), eval(*n.rhs, v));
    case Op::max: return std::fmax(eval(*n.lhs, v), eval(*n.rhs, v));
  }
  return 0.0;
}

}  // namespace

Expression Expression::parse(std::string_view text) {
  Parser parser(text);
  Expression e;
  e.root_ = parser.parse();
  e.text_ = std::string(text);
  e.symbols_ = parser.symbols();
  return e;
}

double Expression::evaluate(const ExpressionVars& vars) const { return eval(*root_, vars); }

bool Expression::uses(char symbol) const { return (symbols_ & symbol_bit(symbol)) != 0; }

}  // namespace drbsde
