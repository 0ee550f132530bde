#pragma once

#include <functional>
#include <string>

namespace pm {

// Arithmetic expression in one variable `x`, used for mark densities given
// as text in run configs. Grammar: + - * / ^, unary minus, parentheses,
// numbers, the constant `pi`, and exp log sqrt sin cos abs.
class DensityExpression {
 public:
  static DensityExpression parse(const std::string& source);

  double operator()(double x) const { return fn_(x); }
  const std::string& source() const noexcept { return source_; }

 private:
  DensityExpression(std::string src, std::function<double(double)> fn)
      : source_(std::move(src)), fn_(std::move(fn)) {}
  std::string source_;
  std::function<double(double)> fn_;
};

}  // namespace pm
