#include "poisson_malliavin/density_expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "poisson_malliavin/errors.hpp"

namespace pm {

namespace {

using Fn = std::function<double(double)>;

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  Fn parse() {
    Fn f = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("density expression '" + s_ + "': " + msg + " at offset " +
                      std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Fn expr() {
    Fn lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = [a = lhs, b = term()](double x) { return a(x) + b(x); };
      } else if (accept('-')) {
        lhs = [a = lhs, b = term()](double x) { return a(x) - b(x); };
      } else {
        return lhs;
      }
    }
  }

  Fn term() {
    Fn lhs = power();
    for (;;) {
      if (accept('*')) {
        lhs = [a = lhs, b = power()](double x) { return a(x) * b(x); };
      } else if (accept('/')) {
        lhs = [a = lhs, b = power()](double x) { return a(x) / b(x); };
      } else {
        return lhs;
      }
    }
  }

  // right-associative
  Fn power() {
    Fn base = unary();
    if (accept('^')) {
      Fn ex = power();
      return [base, ex](double x) { return std::pow(base(x), ex(x)); };
    }
    return base;
  }

  Fn unary() {
    if (accept('-')) {
      Fn inner = unary();
      return [inner](double x) { return -inner(x); };
    }
    if (accept('+')) return unary();
    return primary();
  }

  Fn primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end");
    if (accept('(')) {
      Fn inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return [v](double) { return v; };
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      if (id == "x") return [](double x) { return x; };
      if (id == "pi") return [](double) { return std::numbers::pi; };
      double (*unary_fn)(double) = nullptr;
      if (id == "exp") unary_fn = [](double v) { return std::exp(v); };
      else if (id == "log") unary_fn = [](double v) { return std::log(v); };
      else if (id == "sqrt") unary_fn = [](double v) { return std::sqrt(v); };
      else if (id == "sin") unary_fn = [](double v) { return std::sin(v); };
      else if (id == "cos") unary_fn = [](double v) { return std::cos(v); };
      else if (id == "abs") unary_fn = [](double v) { return std::abs(v); };
      else fail("unknown identifier '" + id + "'");
      if (!accept('(')) fail("expected '(' after " + id);
      Fn arg = expr();
      if (!accept(')')) fail("expected ')'");
      return [unary_fn, arg](double x) { return unary_fn(arg(x)); };
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

DensityExpression DensityExpression::parse(const std::string& source) {
  Parser p(source);
  return DensityExpression(source, p.parse());
}

}  // namespace pm
