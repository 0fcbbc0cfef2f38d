#include <cmath>

#include "csmorse/errors.hpp"
#include "csmorse/expr.hpp"
#include "expr_node.hpp"

namespace csmorse {

using detail::Node;
using detail::NodePtr;
using detail::Op;

namespace {

// The evaluator is written once over three number types: plain doubles, first-order jets
// and second-order jets. Each type provides constant/variable construction, the four
// arithmetic operations and `chain`, which applies a scalar function given its value and
// first two derivatives at the argument.

struct Scalar {
  using Type = double;
  static double constant(double c, int) { return c; }
  static double variable(int, double xi, int) { return xi; }
  static double value(double a) { return a; }
  static double add(double a, double b) { return a + b; }
  static double sub(double a, double b) { return a - b; }
  static double neg(double a) { return -a; }
  static double mul(double a, double b) { return a * b; }
  static double chain(double, double f0, double, double) { return f0; }
};

struct First {
  using Type = Jet1;
  static Jet1 constant(double c, int n) { return {c, Eigen::VectorXd::Zero(n)}; }
  static Jet1 variable(int i, double xi, int n) {
    Jet1 j{xi, Eigen::VectorXd::Zero(n)};
    j.gradient[i] = 1.0;
    return j;
  }
  static double value(const Jet1& a) { return a.value; }
  static Jet1 add(const Jet1& a, const Jet1& b) { return {a.value + b.value, a.gradient + b.gradient}; }
  static Jet1 sub(const Jet1& a, const Jet1& b) { return {a.value - b.value, a.gradient - b.gradient}; }
  static Jet1 neg(const Jet1& a) { return {-a.value, -a.gradient}; }
  static Jet1 mul(const Jet1& a, const Jet1& b) {
    return {a.value * b.value, a.value * b.gradient + b.value * a.gradient};
  }
  static Jet1 chain(const Jet1& a, double f0, double f1, double) { return {f0, f1 * a.gradient}; }
};

struct Second {
  using Type = Jet2;
  static Jet2 constant(double c, int n) {
    return {c, Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
  }
  static Jet2 variable(int i, double xi, int n) {
    Jet2 j = constant(xi, n);
    j.gradient[i] = 1.0;
    return j;
  }
  static double value(const Jet2& a) { return a.value; }
  static Jet2 add(const Jet2& a, const Jet2& b) {
    return {a.value + b.value, a.gradient + b.gradient, a.hessian + b.hessian};
  }
  static Jet2 sub(const Jet2& a, const Jet2& b) {
    return {a.value - b.value, a.gradient - b.gradient, a.hessian - b.hessian};
  }
  static Jet2 neg(const Jet2& a) { return {-a.value, -a.gradient, -a.hessian}; }
  static Jet2 mul(const Jet2& a, const Jet2& b) {
    Jet2 r;
    r.value = a.value * b.value;
    r.gradient = a.value * b.gradient + b.value * a.gradient;
    r.hessian = a.value * b.hessian + b.value * a.hessian + a.gradient * b.gradient.transpose() +
                b.gradient * a.gradient.transpose();
    return r;
  }
  static Jet2 chain(const Jet2& a, double f0, double f1, double f2) {
    Jet2 r;
    r.value = f0;
    r.gradient = f1 * a.gradient;
    r.hessian = f1 * a.hessian + f2 * (a.gradient * a.gradient.transpose());
    return r;
  }
};

double int_pow(double v, int k) {
  double result = 1.0;
  double base = v;
  unsigned e = static_cast<unsigned>(k < 0 ? -k : k);
  while (e != 0) {
    if (e & 1u) result *= base;
    base *= base;
    e >>= 1u;
  }
  return k < 0 ? 1.0 / result : result;
}

template <class A>
class Evaluator {
 public:
  using T = typename A::Type;

  Evaluator(const Eigen::Ref<const Eigen::VectorXd>& x, int n) : x_(x), n_(n) {}

  T eval(const Node& node) const {
    switch (node.op) {
      case Op::Constant: return A::constant(node.constant, n_);
      case Op::Variable: return A::variable(node.index, x_[node.index], n_);
      case Op::Add: return checked(node, A::add(eval(*node.lhs), eval(*node.rhs)));
      case Op::Sub: return checked(node, A::sub(eval(*node.lhs), eval(*node.rhs)));
      case Op::Mul: return checked(node, A::mul(eval(*node.lhs), eval(*node.rhs)));
      case Op::Neg: return A::neg(eval(*node.lhs));
      case Op::Div: {
        const T num = eval(*node.lhs);
        const T den = eval(*node.rhs);
        const double d = A::value(den);
        if (d == 0.0) fail("division by zero", node);
        return checked(node, A::mul(num, A::chain(den, 1.0 / d, -1.0 / (d * d), 2.0 / (d * d * d))));
      }
      case Op::Pow: return power(node);
      case Op::Sin: {
        const T a = eval(*node.lhs);
        const double v = A::value(a);
        return A::chain(a, std::sin(v), std::cos(v), -std::sin(v));
      }
      case Op::Cos: {
        const T a = eval(*node.lhs);
        const double v = A::value(a);
        return A::chain(a, std::cos(v), -std::sin(v), -std::cos(v));
      }
      case Op::Exp: {
        const T a = eval(*node.lhs);
        const double e = std::exp(A::value(a));
        return checked(node, A::chain(a, e, e, e));
      }
      case Op::Log: {
        const T a = eval(*node.lhs);
        const double v = A::value(a);
        if (!(v > 0.0)) fail("log of nonpositive argument", node);
        return A::chain(a, std::log(v), 1.0 / v, -1.0 / (v * v));
      }
      case Op::Sqrt: {
        const T a = eval(*node.lhs);
        const double v = A::value(a);
        if (v < 0.0) fail("sqrt of negative argument", node);
        if (v == 0.0 && !std::is_same_v<A, Scalar>) fail("sqrt is not differentiable at zero", node);
        const double s = std::sqrt(v);
        return A::chain(a, s, 0.5 / s, -0.25 / (s * v));
      }
    }
    return A::constant(0.0, n_);
  }

 private:
  T power(const Node& node) const {
    const int k = node.index;
    if (k == 0) return A::constant(1.0, n_);
    const T a = eval(*node.lhs);
    if (k == 1) return a;
    const double v = A::value(a);
    if (v == 0.0 && k < 0) fail("negative power of zero", node);
    const double f0 = int_pow(v, k);
    const double f1 = k * int_pow(v, k - 1);
    const double f2 = static_cast<double>(k) * (k - 1) * int_pow(v, k - 2);
    return checked(node, A::chain(a, f0, f1, f2));
  }

  T checked(const Node& node, T result) const {
    if (!std::isfinite(A::value(result))) fail("non-finite result", node);
    return result;
  }

  [[noreturn]] static void fail(const char* what, const Node& node) {
    throw DomainError(what, detail::render_infix(node));
  }

  const Eigen::Ref<const Eigen::VectorXd>& x_;
  int n_;
};

void check_point(const Eigen::Ref<const Eigen::VectorXd>& x, int n) {
  if (x.size() != n) {
    throw ValidationError("point has " + std::to_string(x.size()) + " coordinates, expected " +
                          std::to_string(n));
  }
}

}  // namespace

Expression Expression::parse(std::string_view source, int dimension) {
  if (dimension < 1) throw ValidationError("ambient dimension must be at least 1");
  return Expression(detail::parse_source(source, dimension), dimension);
}

Expression Expression::constant(double value, int dimension) {
  return Expression(detail::make_constant(value), dimension);
}

Expression Expression::variable(int index, int dimension) {
  if (index < 1 || index > dimension) throw ValidationError("variable index out of range");
  return Expression(detail::make_variable(index - 1), dimension);
}

double Expression::eval(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_point(x, dimension_);
  return Evaluator<Scalar>(x, dimension_).eval(*root_);
}

Jet1 Expression::eval_jet1(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_point(x, dimension_);
  return Evaluator<First>(x, dimension_).eval(*root_);
}

Jet2 Expression::eval_jet2(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_point(x, dimension_);
  Jet2 jet = Evaluator<Second>(x, dimension_).eval(*root_);
  // Keep the upper triangle and mirror it so the stored matrix is symmetric bit for bit.
  for (int j = 0; j < dimension_; ++j) {
    for (int i = j + 1; i < dimension_; ++i) jet.hessian(i, j) = jet.hessian(j, i);
  }
  return jet;
}

std::string Expression::str() const { return detail::render_infix(*root_); }

std::string Expression::tree() const { return detail::render_tree(*root_); }

namespace {
int common_dimension(const Expression& a, const Expression& b) {
  if (a.dimension() != b.dimension()) throw ValidationError("expressions differ in ambient dimension");
  return a.dimension();
}
}  // namespace

Expression operator+(const Expression& a, const Expression& b) {
  const int n = common_dimension(a, b);
  return Expression(detail::make_binary(Op::Add, a.root_, b.root_), n);
}

Expression operator-(const Expression& a, const Expression& b) {
  const int n = common_dimension(a, b);
  return Expression(detail::make_binary(Op::Sub, a.root_, b.root_), n);
}

Expression operator*(const Expression& a, const Expression& b) {
  const int n = common_dimension(a, b);
  return Expression(detail::make_binary(Op::Mul, a.root_, b.root_), n);
}

Expression operator-(const Expression& a) {
  return Expression(detail::make_unary(Op::Neg, a.root_), a.dimension_);
}

Expression operator*(double a, const Expression& b) {
  return Expression::constant(a, b.dimension()) * b;
}

}  // namespace csmorse
