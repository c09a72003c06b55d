#pragma once

// Matrix Lie groups U(1), SU(2), SO(3) and a generic compact matrix group
// (unitary, optionally block-diagonal over factor groups), together with
// their Lie algebras in the defining representation.
//
// Basis convention for the Lie algebras (used by algebra coordinates and the
// adjoint representation):
//   u(1):  e1 = i
//   su(2): e_k = -(i/2) sigma_k, so that [e1, e2] = e3
//   so(3): (L_k)_{ij} = -epsilon_{kij}, L_3 generates rotations about z
// Product groups concatenate the bases of their factors.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace bundlekit::lie {

using Matrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

inline constexpr double kGroupTol = 1e-9;
inline constexpr double kAngleMargin = 1e-6;

enum class GroupName { U1, SU2, SO3, GenericMatrix };

class GroupKind {
 public:
  static GroupKind u1();
  static GroupKind su2();
  static GroupKind so3();
  /// The full unitary group U(n) as a generic embedded matrix group.
  static GroupKind unitary(int n);
  /// K x K' realized as block-diagonal matrices diag(k, k').
  static GroupKind product(const GroupKind& first, const GroupKind& second);

  GroupName name() const noexcept { return name_; }
  int matrix_size() const noexcept { return matrix_size_; }
  int algebra_dim() const noexcept { return algebra_dim_; }
  /// Block factors of a product group; empty for every other kind.
  const std::vector<GroupKind>& factors() const noexcept { return factors_; }
  bool is_product() const noexcept { return !factors_.empty(); }
  /// Real groups store matrices with vanishing imaginary part.
  bool is_real() const;
  std::string label() const;

  friend bool operator==(const GroupKind& a, const GroupKind& b);
  friend bool operator!=(const GroupKind& a, const GroupKind& b) { return !(a == b); }

 private:
  GroupKind(GroupName name, int matrix_size, int algebra_dim, std::vector<GroupKind> factors = {});

  GroupName name_;
  int matrix_size_;
  int algebra_dim_;
  std::vector<GroupKind> factors_;
};

/// Membership defect of a matrix in the group (0 for exact members).
double group_defect(const GroupKind& kind, const Matrix& m);
/// Membership defect of a matrix in the Lie algebra.
double algebra_defect(const GroupKind& kind, const Matrix& m);

/// Nearest-element re-projection: normalization for U(1), nearest unitary
/// with unit determinant for SU(2), Gram-Schmidt for SO(3), blockwise for
/// products and polar projection for U(n). Idempotent on group members.
Matrix project_to_group(const GroupKind& kind, const Matrix& m);

std::vector<Matrix> algebra_basis(const GroupKind& kind);
Eigen::VectorXd algebra_coords(const GroupKind& kind, const Matrix& xi);
Matrix algebra_from_coords(const GroupKind& kind, const Eigen::VectorXd& coords);

/// Sub-block of a product-group matrix belonging to factor `index`.
Matrix factor_block(const GroupKind& kind, const Matrix& m, int index);
Matrix block_diagonal(const Matrix& a, const Matrix& b);

class GroupElement {
 public:
  static GroupElement identity(const GroupKind& kind);
  /// Throws MembershipViolation if the defect exceeds `tol`.
  static GroupElement from_matrix(const GroupKind& kind, Matrix m, double tol = kGroupTol);

  const GroupKind& kind() const noexcept { return kind_; }
  const Matrix& matrix() const noexcept { return matrix_; }
  GroupElement inverse() const;

  friend GroupElement operator*(const GroupElement& a, const GroupElement& b);

 private:
  GroupElement(GroupKind kind, Matrix m) : kind_(std::move(kind)), matrix_(std::move(m)) {}

  GroupKind kind_;
  Matrix matrix_;
};

class AlgebraElement {
 public:
  static AlgebraElement zero(const GroupKind& kind);
  static AlgebraElement from_matrix(const GroupKind& kind, Matrix m, double tol = kGroupTol);
  static AlgebraElement from_coords(const GroupKind& kind, const Eigen::VectorXd& coords);

  const GroupKind& kind() const noexcept { return kind_; }
  const Matrix& matrix() const noexcept { return matrix_; }
  Eigen::VectorXd coords() const { return algebra_coords(kind_, matrix_); }

  friend AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b);
  friend AlgebraElement operator*(double s, const AlgebraElement& a);

 private:
  AlgebraElement(GroupKind kind, Matrix m) : kind_(std::move(kind)), matrix_(std::move(m)) {}

  GroupKind kind_;
  Matrix matrix_;
};

GroupElement exp(const AlgebraElement& xi);
/// Principal logarithm; throws NearCutLocus when the rotation angle reaches
/// pi - angle_margin.
AlgebraElement log(const GroupElement& g, double angle_margin = kAngleMargin);
AlgebraElement adjoint(const GroupElement& g, const AlgebraElement& xi);
AlgebraElement bracket(const AlgebraElement& xi, const AlgebraElement& eta);

/// Angle measuring distance from the identity in the injectivity domain of
/// exp: |arg z| for U(1), delta with U = cos(delta) I + ... for SU(2), the
/// rotation angle for SO(3), the largest eigenvalue argument otherwise.
double rotation_angle(const GroupKind& kind, const Matrix& g);

/// Frobenius norm of the principal logarithm of g^{-1} h, computed from
/// eigenvalue arguments so it is defined everywhere on the group.
double geodesic_distance(const GroupElement& g, const GroupElement& h);
double geodesic_distance(const Matrix& g, const Matrix& h);

/// Raw-matrix exponential of an algebra element (no membership check).
Matrix exp_matrix(const GroupKind& kind, const Matrix& xi);
/// Scaling-and-squaring Taylor exponential of order 12.
Matrix taylor_exp(const Matrix& x);

/// Matrix of Ad(g) acting on algebra coordinates.
Eigen::MatrixXd adjoint_matrix(const GroupKind& kind, const Matrix& g);

}  // namespace bundlekit::lie
