#pragma once

// Test-only generator of random expressions. Each expression comes with its text (fed to
// the parser under test) and an independently built long-double evaluator used as the
// finite-difference oracle. Every generated expression is defined on all of R^n.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace csmorse::testing {

using LdVec = std::vector<long double>;
using LdFn = std::function<long double(const LdVec&)>;

struct GeneratedExpression {
  std::string text;
  LdFn fn;
};

class ExpressionGenerator {
 public:
  ExpressionGenerator(int dimension, std::uint64_t seed) : n_(dimension), rng_(seed) {}

  GeneratedExpression next(int max_depth = 4) { return node(max_depth); }

 private:
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int pick(int k) { return std::uniform_int_distribution<int>(0, k - 1)(rng_); }

  GeneratedExpression leaf() {
    if (pick(3) < 2) {
      const int i = pick(n_);
      return {"x" + std::to_string(i + 1), [i](const LdVec& x) { return x[i]; }};
    }
    // Two-decimal constants so the text is exact enough.
    const double c = std::round(uniform(-2.0, 2.0) * 100.0) / 100.0;
    const long double cl = std::stold(std::to_string(c));
    return {"(" + std::to_string(c) + ")", [cl](const LdVec&) { return cl; }};
  }

  // e^2 + 1 > 0: keeps log, sqrt and division well defined.
  static GeneratedExpression positive(const GeneratedExpression& e) {
    auto f = e.fn;
    return {"((" + e.text + ")^2 + 1)", [f](const LdVec& x) {
              const long double v = f(x);
              return v * v + 1.0L;
            }};
  }

  GeneratedExpression node(int depth) {
    if (depth <= 0 || pick(5) == 0) return leaf();
    const int kind = pick(10);
    auto a = node(depth - 1);
    auto fa = a.fn;
    switch (kind) {
      case 0:
      case 1: {
        auto b = node(depth - 1);
        auto fb = b.fn;
        return {"(" + a.text + " + " + b.text + ")", [fa, fb](const LdVec& x) { return fa(x) + fb(x); }};
      }
      case 2: {
        auto b = node(depth - 1);
        auto fb = b.fn;
        return {"(" + a.text + " - " + b.text + ")", [fa, fb](const LdVec& x) { return fa(x) - fb(x); }};
      }
      case 3: {
        auto b = node(depth - 1);
        auto fb = b.fn;
        return {"(" + a.text + " * " + b.text + ")", [fa, fb](const LdVec& x) { return fa(x) * fb(x); }};
      }
      case 4: {
        auto b = positive(node(depth - 1));
        auto fb = b.fn;
        return {"(" + a.text + " / " + b.text + ")", [fa, fb](const LdVec& x) { return fa(x) / fb(x); }};
      }
      case 5: {
        const int k = 2 + pick(2);
        return {"(" + a.text + ")^" + std::to_string(k), [fa, k](const LdVec& x) {
                  return std::pow(fa(x), static_cast<long double>(k));
                }};
      }
      case 6:
        return {"sin(" + a.text + ")", [fa](const LdVec& x) { return std::sin(fa(x)); }};
      case 7:
        return {"cos(" + a.text + ")", [fa](const LdVec& x) { return std::cos(fa(x)); }};
      case 8: {
        auto p = positive(a);
        auto fp = p.fn;
        if (pick(2) == 0) {
          return {"log" + p.text, [fp](const LdVec& x) { return std::log(fp(x)); }};
        }
        return {"sqrt" + p.text, [fp](const LdVec& x) { return std::sqrt(fp(x)); }};
      }
      default:
        // exp of a bounded argument keeps magnitudes moderate.
        return {"exp(sin(" + a.text + "))", [fa](const LdVec& x) { return std::exp(std::sin(fa(x))); }};
    }
  }

  int n_;
  std::mt19937_64 rng_;
};

/// Central-difference gradient of a long-double function.
inline std::vector<long double> fd_gradient(const LdFn& f, const LdVec& x, long double h) {
  std::vector<long double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    LdVec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0L * h);
  }
  return g;
}

/// Central second differences of a long-double function.
inline std::vector<std::vector<long double>> fd_hessian(const LdFn& f, const LdVec& x, long double h) {
  const std::size_t n = x.size();
  std::vector<std::vector<long double>> H(n, std::vector<long double>(n));
  const long double f0 = f(x);
  for (std::size_t i = 0; i < n; ++i) {
    LdVec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    H[i][i] = (f(xp) - 2.0L * f0 + f(xm)) / (h * h);
    for (std::size_t j = i + 1; j < n; ++j) {
      LdVec a = x, b = x, c = x, d = x;
      a[i] += h; a[j] += h;
      b[i] += h; b[j] -= h;
      c[i] -= h; c[j] += h;
      d[i] -= h; d[j] -= h;
      H[i][j] = H[j][i] = (f(a) - f(b) - f(c) + f(d)) / (4.0L * h * h);
    }
  }
  return H;
}

}  // namespace csmorse::testing
