#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>
#include <string_view>

#include "csmorse/errors.hpp"
#include "expr_node.hpp"

namespace csmorse::detail {

NodePtr make_constant(double value) {
  auto n = std::make_shared<Node>();
  n->op = Op::Constant;
  n->constant = value;
  return n;
}

NodePtr make_variable(int index0) {
  auto n = std::make_shared<Node>();
  n->op = Op::Variable;
  n->index = index0;
  return n;
}

NodePtr make_binary(Op op, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

NodePtr make_unary(Op op, NodePtr arg) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(arg);
  return n;
}

NodePtr make_power(NodePtr base, int exponent) {
  auto n = std::make_shared<Node>();
  n->op = Op::Pow;
  n->index = exponent;
  n->lhs = std::move(base);
  return n;
}

namespace {

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

const char* function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    default: return "";
  }
}

// Binding strength used to decide where parentheses are needed when printing.
int precedence(const Node& n) {
  switch (n.op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Constant: return n.constant < 0 ? 3 : 5;
    default: return 5;
  }
}

std::string wrap(const Node& child, int min_prec) {
  std::string s = render_infix(child);
  return precedence(child) < min_prec ? "(" + s + ")" : s;
}

class Parser {
 public:
  Parser(std::string_view src, int dimension) : src_(src), dimension_(dimension) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected character '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }
  [[noreturn]] void fail_at(const std::string& msg, std::size_t at) const {
    throw ParseError(msg, at);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= src_.size()) fail(std::string("expected '") + c + "' but input ended");
      fail(std::string("expected '") + c + "'");
    }
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary(Op::Add, lhs, term());
      } else if (accept('-')) {
        lhs = make_binary(Op::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary(Op::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = make_binary(Op::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make_unary(Op::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    while (accept('^')) base = make_power(base, exponent());
    return base;
  }

  int exponent() {
    skip_ws();
    const bool paren = accept('(');
    const bool negative = accept('-');
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ == start) {
      if (pos_ < src_.size() && src_[pos_] == '.') fail("non-integer exponent literal");
      fail("exponent must be an integer literal");
    }
    if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E')) {
      fail_at("non-integer exponent literal", start);
    }
    int value = 0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc()) fail_at("exponent out of range", start);
    if (paren) expect(')');
    return negative ? -value : value;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), value);
    if (ec != std::errc()) fail("malformed number");
    pos_ = static_cast<std::size_t>(ptr - src_.data());
    if (!std::isfinite(value)) fail_at("number out of range", start);
    return make_constant(value);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = src_.substr(start, pos_ - start);

    if (name.size() > 1 && name[0] == 'x' &&
        name.find_first_not_of("0123456789", 1) == std::string_view::npos) {
      int index = 0;
      auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (ec != std::errc() || index < 1) fail_at("variable index must be at least 1", start);
      if (index > dimension_) {
        fail_at("variable index exceeds dimension (" + std::string(name) + " with n = " +
                    std::to_string(dimension_) + ")",
                start);
      }
      return make_variable(index - 1);
    }

    Op op;
    if (name == "sin") {
      op = Op::Sin;
    } else if (name == "cos") {
      op = Op::Cos;
    } else if (name == "exp") {
      op = Op::Exp;
    } else if (name == "log") {
      op = Op::Log;
    } else if (name == "sqrt") {
      op = Op::Sqrt;
    } else {
      fail_at("unknown identifier " + std::string(name), start);
    }
    skip_ws();
    if (pos_ >= src_.size() || src_[pos_] != '(') {
      fail("expected '(' after function " + std::string(name));
    }
    ++pos_;
    NodePtr arg = expr();
    expect(')');
    return make_unary(op, arg);
  }

  std::string_view src_;
  int dimension_;
  std::size_t pos_ = 0;
};

}  // namespace

NodePtr parse_source(std::string_view source, int dimension) {
  return Parser(source, dimension).parse();
}

std::string render_infix(const Node& n) {
  switch (n.op) {
    case Op::Constant: return format_number(n.constant);
    case Op::Variable: return "x" + std::to_string(n.index + 1);
    case Op::Add: return wrap(*n.lhs, 1) + " + " + wrap(*n.rhs, 2);
    case Op::Sub: return wrap(*n.lhs, 1) + " - " + wrap(*n.rhs, 2);
    case Op::Mul: return wrap(*n.lhs, 2) + "*" + wrap(*n.rhs, 3);
    case Op::Div: return wrap(*n.lhs, 2) + "/" + wrap(*n.rhs, 3);
    case Op::Neg: return "-" + wrap(*n.lhs, 3);
    case Op::Pow: {
      const std::string e = n.index < 0 ? "(" + std::to_string(n.index) + ")" : std::to_string(n.index);
      return wrap(*n.lhs, 5) + "^" + e;
    }
    default: return std::string(function_name(n.op)) + "(" + render_infix(*n.lhs) + ")";
  }
}

std::string render_tree(const Node& n) {
  switch (n.op) {
    case Op::Constant: return format_number(n.constant);
    case Op::Variable: return "x" + std::to_string(n.index + 1);
    case Op::Add: return "Add(" + render_tree(*n.lhs) + "," + render_tree(*n.rhs) + ")";
    case Op::Sub: return "Sub(" + render_tree(*n.lhs) + "," + render_tree(*n.rhs) + ")";
    case Op::Mul: return "Mul(" + render_tree(*n.lhs) + "," + render_tree(*n.rhs) + ")";
    case Op::Div: return "Div(" + render_tree(*n.lhs) + "," + render_tree(*n.rhs) + ")";
    case Op::Neg: return "Neg(" + render_tree(*n.lhs) + ")";
    case Op::Pow: return "Pow(" + render_tree(*n.lhs) + "," + std::to_string(n.index) + ")";
    case Op::Sin: return "Sin(" + render_tree(*n.lhs) + ")";
    case Op::Cos: return "Cos(" + render_tree(*n.lhs) + ")";
    case Op::Exp: return "Exp(" + render_tree(*n.lhs) + ")";
    case Op::Log: return "Log(" + render_tree(*n.lhs) + ")";
    case Op::Sqrt: return "Sqrt(" + render_tree(*n.lhs) + ")";
  }
  return {};
}

}  // namespace csmorse::detail
