#pragma once

#include <memory>
#include <string>

namespace csmorse::detail {

enum class Op { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Log, Sqrt };

struct Node {
  Op op = Op::Constant;
  double constant = 0.0;
  int index = 0;  // variable index (0-based) or integer exponent
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

using NodePtr = std::shared_ptr<const Node>;

NodePtr make_constant(double value);
NodePtr make_variable(int index0);
NodePtr make_binary(Op op, NodePtr lhs, NodePtr rhs);
NodePtr make_unary(Op op, NodePtr arg);
NodePtr make_power(NodePtr base, int exponent);

std::string render_infix(const Node& node);
std::string render_tree(const Node& node);

NodePtr parse_source(std::string_view source, int dimension);

}  // namespace csmorse::detail
