#pragma once

// Complex matrices whose entries are pairs (re, im) of real expressions.
// Complex structure stays at this layer; the expression language is real.

#include "bundlekit/expr.hpp"
#include "bundlekit/program.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace bundlekit::expr {

struct ComplexExpr {
  Expr re;
  Expr im;
};

class ExprMatrix {
 public:
  ExprMatrix() = default;
  ExprMatrix(int rows, int cols);

  static ExprMatrix zero(int rows, int cols) { return {rows, cols}; }
  static ExprMatrix identity(int n);
  static ExprMatrix constant(const Eigen::MatrixXcd& m);
  /// 1x1 matrix exp(i * angle).
  static ExprMatrix phase(const Expr& angle);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  ComplexExpr& at(int i, int j) { return entries_[static_cast<std::size_t>(i * cols_ + j)]; }
  const ComplexExpr& at(int i, int j) const { return entries_[static_cast<std::size_t>(i * cols_ + j)]; }

  ExprMatrix adjoint() const;
  ExprMatrix scaled(const Expr& s) const;
  ExprMatrix deriv(const std::string& var) const;
  ExprMatrix substitute(const std::map<std::string, Expr>& bindings) const;
  bool is_zero() const;

  Eigen::MatrixXcd eval(const EvalContext& ctx) const;
  /// Real and imaginary parts, row-major, interleaved (re, im) per entry.
  std::vector<Expr> flatten() const;
  std::set<std::string> free_variables() const;

  friend ExprMatrix operator*(const ExprMatrix& a, const ExprMatrix& b);
  friend ExprMatrix operator+(const ExprMatrix& a, const ExprMatrix& b);
  friend ExprMatrix operator-(const ExprMatrix& a, const ExprMatrix& b);

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<ComplexExpr> entries_;
};

ExprMatrix block_diagonal(const ExprMatrix& a, const ExprMatrix& b);
Eigen::MatrixXcd unflatten(const double* data, int rows, int cols);

/// Several matrices compiled into one program over the same inputs.
class MatrixProgram {
 public:
  MatrixProgram() = default;
  MatrixProgram(const std::vector<ExprMatrix>& matrices, const std::vector<std::string>& inputs);

  std::size_t size() const noexcept { return shapes_.size(); }
  bool empty() const noexcept { return shapes_.empty(); }
  /// Evaluates every matrix at `inputs`.
  void run(std::span<const double> inputs, std::vector<Eigen::MatrixXcd>& out) const;
  std::vector<Eigen::MatrixXcd> operator()(std::span<const double> inputs) const;

 private:
  Program program_;
  std::vector<std::pair<int, int>> shapes_;
};

}  // namespace bundlekit::expr
