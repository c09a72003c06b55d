#include "bundlekit/lie.hpp"

#include "bundlekit/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bundlekit::lie {

namespace {

const Complex kI(0.0, 1.0);

Matrix identity_matrix(int n) { return Matrix::Identity(n, n); }

double unitary_defect(const Matrix& m) {
  return (m.adjoint() * m - identity_matrix(static_cast<int>(m.rows()))).norm();
}

double imag_norm(const Matrix& m) { return m.imag().norm(); }

double off_block_norm(const GroupKind& kind, const Matrix& m) {
  double total = 0.0;
  int offset = 0;
  for (const auto& f : kind.factors()) {
    const int n = f.matrix_size();
    total += m.block(offset, 0, n, offset).squaredNorm();
    const int tail = kind.matrix_size() - offset - n;
    total += m.block(offset, offset + n, n, tail).squaredNorm();
    offset += n;
  }
  return std::sqrt(total);
}

Matrix pauli(int k) {
  Matrix s(2, 2);
  switch (k) {
    case 0: s << 0, 1, 1, 0; break;
    case 1: s << 0, -kI, kI, 0; break;
    default: s << 1, 0, 0, -1; break;
  }
  return s;
}

Matrix so3_generator(int k) {
  Matrix l = Matrix::Zero(3, 3);
  // (L_k)_{ij} = -epsilon_{kij}
  const int i = (k + 1) % 3;
  const int j = (k + 2) % 3;
  l(i, j) = -1.0;
  l(j, i) = 1.0;
  return l;
}

Matrix polar_unitary(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

Matrix project_su2(const Matrix& m) {
  Matrix u = polar_unitary(m);
  const Complex det = u.determinant();
  const Complex root = std::sqrt(det);
  Matrix a = u / root;
  Matrix b = -a;
  return (a - m).norm() <= (b - m).norm() ? a : b;
}

Matrix project_so3(const Matrix& m) {
  Eigen::Matrix3d r = m.real();
  Eigen::Vector3d c0 = r.col(0);
  Eigen::Vector3d c1 = r.col(1);
  c0.normalize();
  c1 -= c0.dot(c1) * c0;
  c1.normalize();
  Eigen::Vector3d c2 = c0.cross(c1);
  Eigen::Matrix3d out;
  out.col(0) = c0;
  out.col(1) = c1;
  out.col(2) = c2;
  return out.cast<Complex>();
}

Matrix su2_exp(const Matrix& xi) {
  const double det = xi.determinant().real();
  const double delta = std::sqrt(std::max(0.0, det));
  const double sinc = delta < 1e-8 ? 1.0 - delta * delta / 6.0 : std::sin(delta) / delta;
  return std::cos(delta) * identity_matrix(2) + sinc * xi;
}

Eigen::Vector3d so3_vector(const Matrix& xi) {
  const Eigen::Matrix3d k = xi.real();
  return {k(2, 1), k(0, 2), k(1, 0)};
}

Matrix so3_exp(const Matrix& xi) {
  const Eigen::Matrix3d k = xi.real();
  const double theta = so3_vector(xi).norm();
  double a = 1.0;
  double b = 0.5;
  if (theta > 1e-6) {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / (theta * theta);
  } else {
    a = 1.0 - theta * theta / 6.0;
    b = 0.5 - theta * theta / 24.0;
  }
  const Eigen::Matrix3d r = Eigen::Matrix3d::Identity() + a * k + b * k * k;
  return r.cast<Complex>();
}

Matrix unitary_log(const Matrix& g, double angle_margin) {
  Eigen::ComplexEigenSolver<Matrix> solver(g);
  const Matrix& v = solver.eigenvectors();
  Eigen::VectorXcd logs(g.rows());
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    const double arg = std::arg(solver.eigenvalues()(i));
    if (std::abs(arg) >= std::numbers::pi - angle_margin) {
      fail(ErrorKind::NearCutLocus, "eigenvalue argument " + std::to_string(arg) +
                                        " too close to pi");
    }
    logs(i) = Complex(0.0, arg);
  }
  Matrix x = v * logs.asDiagonal() * v.inverse();
  return 0.5 * (x - x.adjoint());
}

double max_eigen_arg(const Matrix& g) {
  Eigen::ComplexEigenSolver<Matrix> solver(g, false);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    worst = std::max(worst, std::abs(std::arg(solver.eigenvalues()(i))));
  }
  return worst;
}

void require_same_kind(const GroupKind& a, const GroupKind& b, const char* what) {
  if (a != b) {
    fail(ErrorKind::MembershipViolation,
         std::string(what) + ": group kinds differ (" + a.label() + " vs " + b.label() + ")");
  }
}

}  // namespace

GroupKind::GroupKind(GroupName name, int matrix_size, int algebra_dim, std::vector<GroupKind> factors)
    : name_(name), matrix_size_(matrix_size), algebra_dim_(algebra_dim), factors_(std::move(factors)) {}

GroupKind GroupKind::u1() { return {GroupName::U1, 1, 1}; }
GroupKind GroupKind::su2() { return {GroupName::SU2, 2, 3}; }
GroupKind GroupKind::so3() { return {GroupName::SO3, 3, 3}; }

GroupKind GroupKind::unitary(int n) {
  if (n < 1) fail(ErrorKind::InvalidParams, "unitary group needs n >= 1");
  return {GroupName::GenericMatrix, n, n * n};
}

GroupKind GroupKind::product(const GroupKind& first, const GroupKind& second) {
  return {GroupName::GenericMatrix, first.matrix_size() + second.matrix_size(),
          first.algebra_dim() + second.algebra_dim(), {first, second}};
}

bool GroupKind::is_real() const {
  if (name_ == GroupName::SO3) return true;
  if (factors_.empty()) return false;
  return std::all_of(factors_.begin(), factors_.end(), [](const GroupKind& f) { return f.is_real(); });
}

std::string GroupKind::label() const {
  switch (name_) {
    case GroupName::U1: return "U1";
    case GroupName::SU2: return "SU2";
    case GroupName::SO3: return "SO3";
    case GroupName::GenericMatrix: break;
  }
  if (factors_.empty()) return "U(" + std::to_string(matrix_size_) + ")";
  std::string out;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (i) out += "x";
    out += factors_[i].label();
  }
  return out;
}

bool operator==(const GroupKind& a, const GroupKind& b) {
  return a.name_ == b.name_ && a.matrix_size_ == b.matrix_size_ &&
         a.algebra_dim_ == b.algebra_dim_ && a.factors_ == b.factors_;
}

double group_defect(const GroupKind& kind, const Matrix& m) {
  if (m.rows() != kind.matrix_size() || m.cols() != kind.matrix_size()) {
    return std::numeric_limits<double>::infinity();
  }
  switch (kind.name()) {
    case GroupName::U1:
      return std::abs(std::abs(m(0, 0)) - 1.0);
    case GroupName::SU2:
      return unitary_defect(m) + std::abs(m.determinant() - 1.0);
    case GroupName::SO3:
      return unitary_defect(m) + std::abs(m.determinant() - 1.0) + imag_norm(m);
    case GroupName::GenericMatrix:
      break;
  }
  if (kind.factors().empty()) return unitary_defect(m);
  double total = off_block_norm(kind, m);
  for (std::size_t i = 0; i < kind.factors().size(); ++i) {
    total += group_defect(kind.factors()[i], factor_block(kind, m, static_cast<int>(i)));
  }
  return total;
}

double algebra_defect(const GroupKind& kind, const Matrix& m) {
  if (m.rows() != kind.matrix_size() || m.cols() != kind.matrix_size()) {
    return std::numeric_limits<double>::infinity();
  }
  switch (kind.name()) {
    case GroupName::U1:
      return std::abs(m(0, 0).real());
    case GroupName::SU2:
      return (m + m.adjoint()).norm() + std::abs(m.trace());
    case GroupName::SO3:
      return (m + m.transpose()).norm() + imag_norm(m);
    case GroupName::GenericMatrix:
      break;
  }
  if (kind.factors().empty()) return (m + m.adjoint()).norm();
  double total = off_block_norm(kind, m);
  for (std::size_t i = 0; i < kind.factors().size(); ++i) {
    total += algebra_defect(kind.factors()[i], factor_block(kind, m, static_cast<int>(i)));
  }
  return total;
}

Matrix project_to_group(const GroupKind& kind, const Matrix& m) {
  switch (kind.name()) {
    case GroupName::U1: {
      const Complex z = m(0, 0);
      const double r = std::abs(z);
      Matrix out(1, 1);
      out(0, 0) = r > 0.0 ? z / r : Complex(1.0, 0.0);
      return out;
    }
    case GroupName::SU2:
      return project_su2(m);
    case GroupName::SO3:
      return project_so3(m);
    case GroupName::GenericMatrix:
      break;
  }
  if (kind.factors().empty()) return polar_unitary(m);
  Matrix out = Matrix::Zero(kind.matrix_size(), kind.matrix_size());
  int offset = 0;
  for (std::size_t i = 0; i < kind.factors().size(); ++i) {
    const auto& f = kind.factors()[i];
    const int n = f.matrix_size();
    out.block(offset, offset, n, n) = project_to_group(f, m.block(offset, offset, n, n));
    offset += n;
  }
  return out;
}

std::vector<Matrix> algebra_basis(const GroupKind& kind) {
  std::vector<Matrix> basis;
  switch (kind.name()) {
    case GroupName::U1: {
      Matrix e(1, 1);
      e(0, 0) = kI;
      basis.push_back(e);
      return basis;
    }
    case GroupName::SU2:
      for (int k = 0; k < 3; ++k) basis.push_back(-0.5 * kI * pauli(k));
      return basis;
    case GroupName::SO3:
      for (int k = 0; k < 3; ++k) basis.push_back(so3_generator(k));
      return basis;
    case GroupName::GenericMatrix:
      break;
  }
  const int n = kind.matrix_size();
  if (kind.factors().empty()) {
    for (int j = 0; j < n; ++j) {
      Matrix e = Matrix::Zero(n, n);
      e(j, j) = kI;
      basis.push_back(e);
    }
    for (int j = 0; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        Matrix a = Matrix::Zero(n, n);
        a(j, k) = 1.0;
        a(k, j) = -1.0;
        basis.push_back(a);
        Matrix s = Matrix::Zero(n, n);
        s(j, k) = kI;
        s(k, j) = kI;
        basis.push_back(s);
      }
    }
    return basis;
  }
  int offset = 0;
  for (const auto& f : kind.factors()) {
    for (const auto& e : algebra_basis(f)) {
      Matrix big = Matrix::Zero(n, n);
      big.block(offset, offset, f.matrix_size(), f.matrix_size()) = e;
      basis.push_back(big);
    }
    offset += f.matrix_size();
  }
  return basis;
}

Eigen::VectorXd algebra_coords(const GroupKind& kind, const Matrix& xi) {
  const auto basis = algebra_basis(kind);
  Eigen::VectorXd c(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const double num = (basis[k].adjoint() * xi).trace().real();
    const double den = basis[k].squaredNorm();
    c(static_cast<Eigen::Index>(k)) = num / den;
  }
  return c;
}

Matrix algebra_from_coords(const GroupKind& kind, const Eigen::VectorXd& coords) {
  const auto basis = algebra_basis(kind);
  if (coords.size() != static_cast<Eigen::Index>(basis.size())) {
    fail(ErrorKind::ShapeMismatch, "algebra coordinate count mismatch for " + kind.label());
  }
  Matrix out = Matrix::Zero(kind.matrix_size(), kind.matrix_size());
  for (std::size_t k = 0; k < basis.size(); ++k) out += coords(static_cast<Eigen::Index>(k)) * basis[k];
  return out;
}

Matrix factor_block(const GroupKind& kind, const Matrix& m, int index) {
  int offset = 0;
  for (int i = 0; i < index; ++i) offset += kind.factors()[static_cast<std::size_t>(i)].matrix_size();
  const int n = kind.factors()[static_cast<std::size_t>(index)].matrix_size();
  return m.block(offset, offset, n, n);
}

Matrix block_diagonal(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

GroupElement GroupElement::identity(const GroupKind& kind) {
  return {kind, identity_matrix(kind.matrix_size())};
}

GroupElement GroupElement::from_matrix(const GroupKind& kind, Matrix m, double tol) {
  const double d = group_defect(kind, m);
  if (!(d <= tol)) {
    fail(ErrorKind::MembershipViolation,
         "matrix is not in " + kind.label() + " (defect " + std::to_string(d) + ")");
  }
  return {kind, std::move(m)};
}

GroupElement GroupElement::inverse() const { return {kind_, matrix_.adjoint()}; }

GroupElement operator*(const GroupElement& a, const GroupElement& b) {
  require_same_kind(a.kind_, b.kind_, "group product");
  return {a.kind_, a.matrix_ * b.matrix_};
}

AlgebraElement AlgebraElement::zero(const GroupKind& kind) {
  return {kind, Matrix::Zero(kind.matrix_size(), kind.matrix_size())};
}

AlgebraElement AlgebraElement::from_matrix(const GroupKind& kind, Matrix m, double tol) {
  const double d = algebra_defect(kind, m);
  if (!(d <= tol)) {
    fail(ErrorKind::MembershipViolation,
         "matrix is not in the Lie algebra of " + kind.label() + " (defect " + std::to_string(d) + ")");
  }
  return {kind, std::move(m)};
}

AlgebraElement AlgebraElement::from_coords(const GroupKind& kind, const Eigen::VectorXd& coords) {
  return {kind, algebra_from_coords(kind, coords)};
}

AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b) {
  require_same_kind(a.kind_, b.kind_, "algebra sum");
  return {a.kind_, a.matrix_ + b.matrix_};
}

AlgebraElement operator*(double s, const AlgebraElement& a) { return {a.kind_, s * a.matrix_}; }

Matrix taylor_exp(const Matrix& x) {
  const double norm = x.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Matrix scaled = x / std::ldexp(1.0, squarings);
  const Eigen::Index n = x.rows();
  Matrix result = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= 12; ++k) {
    term = term * scaled / static_cast<double>(k);
    result += term;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

Matrix exp_matrix(const GroupKind& kind, const Matrix& xi) {
  switch (kind.name()) {
    case GroupName::U1: {
      Matrix out(1, 1);
      out(0, 0) = std::exp(Complex(0.0, xi(0, 0).imag()));
      return out;
    }
    case GroupName::SU2:
      return su2_exp(xi);
    case GroupName::SO3:
      return so3_exp(xi);
    case GroupName::GenericMatrix:
      break;
  }
  return project_to_group(kind, taylor_exp(xi));
}

GroupElement exp(const AlgebraElement& xi) {
  const double d = algebra_defect(xi.kind(), xi.matrix());
  if (!(d <= kGroupTol)) fail(ErrorKind::MembershipViolation, "exp of non-algebra element");
  return GroupElement::from_matrix(xi.kind(), exp_matrix(xi.kind(), xi.matrix()), 10 * kGroupTol);
}

double rotation_angle(const GroupKind& kind, const Matrix& g) {
  switch (kind.name()) {
    case GroupName::U1:
      return std::abs(std::arg(g(0, 0)));
    case GroupName::SU2:
      return std::acos(std::clamp(0.5 * g.trace().real(), -1.0, 1.0));
    case GroupName::SO3:
      return std::acos(std::clamp(0.5 * (g.trace().real() - 1.0), -1.0, 1.0));
    case GroupName::GenericMatrix:
      break;
  }
  if (kind.factors().empty()) return max_eigen_arg(g);
  double worst = 0.0;
  for (std::size_t i = 0; i < kind.factors().size(); ++i) {
    worst = std::max(worst, rotation_angle(kind.factors()[i], factor_block(kind, g, static_cast<int>(i))));
  }
  return worst;
}

namespace {

Matrix log_matrix(const GroupKind& kind, const Matrix& g, double angle_margin) {
  const double angle = rotation_angle(kind, g);
  if (angle >= std::numbers::pi - angle_margin) {
    fail(ErrorKind::NearCutLocus, "rotation angle " + std::to_string(angle) + " within margin of pi");
  }
  switch (kind.name()) {
    case GroupName::U1: {
      Matrix out(1, 1);
      out(0, 0) = Complex(0.0, std::arg(g(0, 0)));
      return out;
    }
    case GroupName::SU2: {
      const double s = std::sin(angle);
      const double scale = angle < 1e-8 ? 1.0 + angle * angle / 6.0 : angle / s;
      Matrix x = 0.5 * scale * (g - g.adjoint());
      x -= 0.5 * x.trace() * identity_matrix(2);
      return x;
    }
    case GroupName::SO3: {
      const double s = std::sin(angle);
      const double scale = angle < 1e-6 ? 0.5 + angle * angle / 12.0 : angle / (2.0 * s);
      const Eigen::Matrix3d r = g.real();
      const Eigen::Matrix3d x = scale * (r - r.transpose());
      return x.cast<Complex>();
    }
    case GroupName::GenericMatrix:
      break;
  }
  if (kind.factors().empty()) return unitary_log(g, angle_margin);
  const int n = kind.matrix_size();
  Matrix out = Matrix::Zero(n, n);
  int offset = 0;
  for (std::size_t i = 0; i < kind.factors().size(); ++i) {
    const auto& f = kind.factors()[i];
    const int m = f.matrix_size();
    out.block(offset, offset, m, m) = log_matrix(f, g.block(offset, offset, m, m), angle_margin);
    offset += m;
  }
  return out;
}

}  // namespace

AlgebraElement log(const GroupElement& g, double angle_margin) {
  return AlgebraElement::from_matrix(g.kind(), log_matrix(g.kind(), g.matrix(), angle_margin), 10 * kGroupTol);
}

AlgebraElement adjoint(const GroupElement& g, const AlgebraElement& xi) {
  require_same_kind(g.kind(), xi.kind(), "adjoint");
  Matrix m = g.matrix() * xi.matrix() * g.matrix().adjoint();
  return AlgebraElement::from_matrix(g.kind(), std::move(m), 10 * kGroupTol);
}

AlgebraElement bracket(const AlgebraElement& xi, const AlgebraElement& eta) {
  require_same_kind(xi.kind(), eta.kind(), "bracket");
  Matrix m = xi.matrix() * eta.matrix() - eta.matrix() * xi.matrix();
  return AlgebraElement::from_matrix(xi.kind(), std::move(m), 10 * kGroupTol);
}

double geodesic_distance(const Matrix& g, const Matrix& h) {
  const Matrix rel = g.adjoint() * h;
  Eigen::ComplexEigenSolver<Matrix> solver(rel, false);
  double total = 0.0;
  for (Eigen::Index i = 0; i < rel.rows(); ++i) {
    const double a = std::arg(solver.eigenvalues()(i));
    total += a * a;
  }
  return std::sqrt(total);
}

double geodesic_distance(const GroupElement& g, const GroupElement& h) {
  require_same_kind(g.kind(), h.kind(), "geodesic distance");
  return geodesic_distance(g.matrix(), h.matrix());
}

Eigen::MatrixXd adjoint_matrix(const GroupKind& kind, const Matrix& g) {
  const auto basis = algebra_basis(kind);
  const auto dim = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd out(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    out.col(b) = algebra_coords(kind, g * basis[static_cast<std::size_t>(b)] * g.adjoint());
  }
  return out;
}

}  // namespace bundlekit::lie
