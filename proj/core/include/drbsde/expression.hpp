#pragma once

// Small arithmetic expression language for custom drivers and node fields.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?
//   primary := number | symbol | call | '(' expr ')'
//   call    := abs(e) | exp(e) | log(e) | sqrt(e) | tanh(e) | min(e, e) | max(e, e)
//
// Symbols: t, B, S, y, z (and the constants pi, inf).

#include <memory>
#include <string>
#include <string_view>

namespace drbsde {

struct ExpressionVars {
  double t = 0.0;
  double B = 0.0;
  double S = 0.0;
  double y = 0.0;
  double z = 0.0;
};

class Expression {
 public:
  /// Throws ValidationError with the offending position on bad input.
  static Expression parse(std::string_view text);

  double evaluate(const ExpressionVars& vars) const;
  bool uses(char symbol) const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
  unsigned symbols_ = 0;
};

}  // namespace drbsde
