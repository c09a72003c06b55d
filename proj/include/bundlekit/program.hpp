#pragma once

// Expressions compiled to a flat instruction list with shared subexpressions
// evaluated once. Used on every integrator step, where tree walking would
// dominate the cost.

#include "bundlekit/expr.hpp"

#include <span>
#include <string>
#include <vector>

namespace bundlekit::expr {

class Program {
 public:
  Program() = default;
  /// Throws MissingVariable if an output mentions a name outside `inputs`.
  Program(const std::vector<Expr>& outputs, const std::vector<std::string>& inputs);

  std::size_t num_inputs() const noexcept { return num_inputs_; }
  std::size_t num_outputs() const noexcept { return outputs_.size(); }
  std::size_t num_instructions() const noexcept { return code_.size(); }

  /// Throws EvalDomainError on division by zero, ln of non-positive values
  /// and any non-finite intermediate.
  void run(std::span<const double> inputs, std::span<double> outputs) const;
  std::vector<double> operator()(std::span<const double> inputs) const;

 private:
  struct Instr {
    Op op;
    Func func;
    int a;
    int b;
  };

  std::size_t num_inputs_ = 0;
  std::vector<double> constants_;  // slots num_inputs_ .. num_inputs_ + constants_.size()
  std::vector<Instr> code_;
  std::vector<int> outputs_;
};

}  // namespace bundlekit::expr
