#pragma once

// Scalar fields given as text in a small expression language, evaluated together with
// exact first and second derivatives by forward-mode propagation.
//
// Grammar (standard precedence, left associative):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' exponent)*
//   exponent:= ['-'] INTEGER | '(' ['-'] INTEGER ')'
//   primary := NUMBER | 'x' INDEX | FUNC '(' expr ')' | '(' expr ')'
//   FUNC    := sin | cos | exp | log | sqrt
//
// Variables are x1..xn where n is the declared ambient dimension.

#include <Eigen/Core>

#include <memory>
#include <string>
#include <string_view>

namespace csmorse {

struct Jet1 {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

struct Jet2 {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;  // exactly symmetric
};

namespace detail {
struct Node;
}

/// Immutable expression tree. Copies share the tree; evaluation is reentrant.
class Expression {
 public:
  /// Throws ParseError on malformed input, unknown identifiers, variable indices above
  /// `dimension` and non-integer exponents.
  static Expression parse(std::string_view source, int dimension);
  static Expression constant(double value, int dimension);
  /// `index` is 1-based.
  static Expression variable(int index, int dimension);

  int dimension() const noexcept { return dimension_; }

  // All evaluators throw DomainError instead of producing NaN or infinity.
  double eval(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Jet1 eval_jet1(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Jet2 eval_jet2(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Infix rendering that parses back to the same tree.
  std::string str() const;
  /// Constructor-style rendering, e.g. `Add(Pow(x1,2),Pow(x2,2))`.
  std::string tree() const;

  friend Expression operator+(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a, const Expression& b);
  friend Expression operator*(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a);

 private:
  Expression(std::shared_ptr<const detail::Node> root, int dimension)
      : root_(std::move(root)), dimension_(dimension) {}

  std::shared_ptr<const detail::Node> root_;
  int dimension_ = 0;
};

Expression operator*(double a, const Expression& b);

}  // namespace csmorse
