#include "bundlekit/expr_matrix.hpp"

#include "bundlekit/error.hpp"

namespace bundlekit::expr {

ExprMatrix::ExprMatrix(int rows, int cols)
    : rows_(rows), cols_(cols), entries_(static_cast<std::size_t>(rows * cols), {Expr(0.0), Expr(0.0)}) {}

ExprMatrix ExprMatrix::identity(int n) {
  ExprMatrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i).re = Expr(1.0);
  return m;
}

ExprMatrix ExprMatrix::constant(const Eigen::MatrixXcd& c) {
  ExprMatrix m(static_cast<int>(c.rows()), static_cast<int>(c.cols()));
  for (int i = 0; i < m.rows_; ++i) {
    for (int j = 0; j < m.cols_; ++j) m.at(i, j) = {Expr(c(i, j).real()), Expr(c(i, j).imag())};
  }
  return m;
}

ExprMatrix ExprMatrix::phase(const Expr& angle) {
  ExprMatrix m(1, 1);
  m.at(0, 0) = {cos(angle), sin(angle)};
  return m;
}

ExprMatrix ExprMatrix::adjoint() const {
  ExprMatrix m(cols_, rows_);
  for (int i = 0; i < rows_; ++i) {
    for (int j = 0; j < cols_; ++j) m.at(j, i) = {at(i, j).re, -at(i, j).im};
  }
  return m;
}

ExprMatrix ExprMatrix::scaled(const Expr& s) const {
  ExprMatrix m = *this;
  for (auto& e : m.entries_) e = {s * e.re, s * e.im};
  return m;
}

ExprMatrix ExprMatrix::deriv(const std::string& var) const {
  ExprMatrix m = *this;
  for (auto& e : m.entries_) e = {expr::deriv(e.re, var), expr::deriv(e.im, var)};
  return m;
}

ExprMatrix ExprMatrix::substitute(const std::map<std::string, Expr>& bindings) const {
  ExprMatrix m = *this;
  for (auto& e : m.entries_) e = {expr::substitute(e.re, bindings), expr::substitute(e.im, bindings)};
  return m;
}

bool ExprMatrix::is_zero() const {
  for (const auto& e : entries_) {
    if (!e.re.is_lit(0.0) || !e.im.is_lit(0.0)) return false;
  }
  return true;
}

Eigen::MatrixXcd ExprMatrix::eval(const EvalContext& ctx) const {
  Eigen::MatrixXcd m(rows_, cols_);
  for (int i = 0; i < rows_; ++i) {
    for (int j = 0; j < cols_; ++j) m(i, j) = {expr::eval(at(i, j).re, ctx), expr::eval(at(i, j).im, ctx)};
  }
  return m;
}

std::vector<Expr> ExprMatrix::flatten() const {
  std::vector<Expr> out;
  out.reserve(entries_.size() * 2);
  for (const auto& e : entries_) {
    out.push_back(e.re);
    out.push_back(e.im);
  }
  return out;
}

std::set<std::string> ExprMatrix::free_variables() const {
  std::set<std::string> out;
  for (const auto& e : entries_) {
    out.merge(expr::free_variables(e.re));
    out.merge(expr::free_variables(e.im));
  }
  return out;
}

ExprMatrix operator*(const ExprMatrix& a, const ExprMatrix& b) {
  if (a.cols_ != b.rows_) fail(ErrorKind::ShapeMismatch, "symbolic matrix product shape mismatch");
  ExprMatrix m(a.rows_, b.cols_);
  for (int i = 0; i < a.rows_; ++i) {
    for (int j = 0; j < b.cols_; ++j) {
      Expr re(0.0);
      Expr im(0.0);
      for (int k = 0; k < a.cols_; ++k) {
        const auto& x = a.at(i, k);
        const auto& y = b.at(k, j);
        re = re + (x.re * y.re - x.im * y.im);
        im = im + (x.re * y.im + x.im * y.re);
      }
      m.at(i, j) = {re, im};
    }
  }
  return m;
}

ExprMatrix operator+(const ExprMatrix& a, const ExprMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) fail(ErrorKind::ShapeMismatch, "symbolic matrix sum shape mismatch");
  ExprMatrix m(a.rows_, a.cols_);
  for (std::size_t k = 0; k < a.entries_.size(); ++k) {
    m.entries_[k] = {a.entries_[k].re + b.entries_[k].re, a.entries_[k].im + b.entries_[k].im};
  }
  return m;
}

ExprMatrix operator-(const ExprMatrix& a, const ExprMatrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) fail(ErrorKind::ShapeMismatch, "symbolic matrix difference shape mismatch");
  ExprMatrix m(a.rows_, a.cols_);
  for (std::size_t k = 0; k < a.entries_.size(); ++k) {
    m.entries_[k] = {a.entries_[k].re - b.entries_[k].re, a.entries_[k].im - b.entries_[k].im};
  }
  return m;
}

ExprMatrix block_diagonal(const ExprMatrix& a, const ExprMatrix& b) {
  ExprMatrix m(a.rows() + b.rows(), a.cols() + b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) m.at(i, j) = a.at(i, j);
  }
  for (int i = 0; i < b.rows(); ++i) {
    for (int j = 0; j < b.cols(); ++j) m.at(a.rows() + i, a.cols() + j) = b.at(i, j);
  }
  return m;
}

Eigen::MatrixXcd unflatten(const double* data, int rows, int cols) {
  Eigen::MatrixXcd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double* p = data + 2 * (i * cols + j);
      m(i, j) = {p[0], p[1]};
    }
  }
  return m;
}

MatrixProgram::MatrixProgram(const std::vector<ExprMatrix>& matrices, const std::vector<std::string>& inputs) {
  std::vector<Expr> all;
  for (const auto& m : matrices) {
    shapes_.emplace_back(m.rows(), m.cols());
    const auto flat = m.flatten();
    all.insert(all.end(), flat.begin(), flat.end());
  }
  program_ = Program(all, inputs);
}

void MatrixProgram::run(std::span<const double> inputs, std::vector<Eigen::MatrixXcd>& out) const {
  thread_local std::vector<double> buffer;
  buffer.resize(program_.num_outputs());
  program_.run(inputs, buffer);
  out.resize(shapes_.size());
  std::size_t offset = 0;
  for (std::size_t k = 0; k < shapes_.size(); ++k) {
    const auto [r, c] = shapes_[k];
    out[k] = unflatten(buffer.data() + offset, r, c);
    offset += static_cast<std::size_t>(2 * r * c);
  }
}

std::vector<Eigen::MatrixXcd> MatrixProgram::operator()(std::span<const double> inputs) const {
  std::vector<Eigen::MatrixXcd> out;
  run(inputs, out);
  return out;
}

}  // namespace bundlekit::expr
