#include <doctest.h>

#include "bundlekit/error.hpp"
#include "bundlekit/lie.hpp"

#include <numbers>
#include <random>



using namespace bundlekit;
using namespace bundlekit::lie;

namespace {

Matrix pauli(int k) {
  Matrix s(2, 2);
  const Complex i(0, 1);
  if (k == 1) s << 0, 1, 1, 0;
  if (k == 2) s << 0, -i, i, 0;
  if (k == 3) s << 1, 0, 0, -1;
  return s;
}

}  // namespace

TEST_CASE("su2 exponential matches the half-angle closed form") {
  // exp(theta n.e) = cos(theta/2) - i sin(theta/2) n.sigma, e_k = -(i/2) sigma_k
  const auto g = GroupKind::su2();
  Eigen::Vector3d n(0.3, -0.5, 0.8);
  n.normalize();
  const double theta = 1.7;
  const Matrix want = std::cos(theta / 2) * Matrix::Identity(2, 2) -
                      Complex(0, 1) * std::sin(theta / 2) * (n[0] * pauli(1) + n[1] * pauli(2) + n[2] * pauli(3));
  const auto xi = AlgebraElement::from_coords(g, theta * n);
  CHECK((exp(xi).matrix() - want).norm() < 1e-13);
  CHECK(rotation_angle(g, want) == doctest::Approx(theta / 2).epsilon(1e-12));
}

TEST_CASE("so3 generator L3 rotates counterclockwise about z") {
  const auto g = GroupKind::so3();
  const double a = 0.9;
  Matrix want = Matrix::Identity(3, 3);
  want(0, 0) = want(1, 1) = std::cos(a);
  want(0, 1) = -std::sin(a);
  want(1, 0) = std::sin(a);
  const auto r = exp(AlgebraElement::from_coords(g, Eigen::Vector3d(0, 0, a)));
  CHECK((r.matrix() - want).norm() < 1e-13);
  CHECK(rotation_angle(g, r.matrix()) == doctest::Approx(a));
}

TEST_CASE("basis brackets close as [e1, e2] = e3") {
  for (const auto& g : {GroupKind::su2(), GroupKind::so3()}) {
    const auto e1 = AlgebraElement::from_coords(g, Eigen::Vector3d(1, 0, 0));
    const auto e2 = AlgebraElement::from_coords(g, Eigen::Vector3d(0, 1, 0));
    CHECK((bracket(e1, e2).coords() - Eigen::Vector3d(0, 0, 1)).norm() < 1e-14);
  }
}

TEST_CASE("log inverts exp away from the cut locus") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& g : {GroupKind::u1(), GroupKind::su2(), GroupKind::so3()}) {
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd c(g.algebra_dim());
      for (int j = 0; j < c.size(); ++j) c[j] = 1.5 * u(rng);
      const auto xi = AlgebraElement::from_coords(g, c);
      CHECK((log(exp(xi)).coords() - c).norm() < 1e-11);
    }
  }
}

TEST_CASE("log refuses the cut locus") {
  const auto minus_one = GroupElement::from_matrix(GroupKind::su2(), -Matrix::Identity(2, 2));
  CHECK_THROWS_AS(log(minus_one), Error);
  try {
    log(minus_one);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NearCutLocus);
  }
  Matrix flip = Matrix::Identity(3, 3);
  flip(0, 0) = flip(1, 1) = -1;
  CHECK_THROWS_AS(log(GroupElement::from_matrix(GroupKind::so3(), flip)), Error);
}

TEST_CASE("membership is enforced") {
  Matrix m = Matrix::Identity(2, 2) * 1.01;
  CHECK_THROWS_AS(GroupElement::from_matrix(GroupKind::su2(), m), Error);
  CHECK(group_defect(GroupKind::su2(), project_to_group(GroupKind::su2(), m)) < 1e-14);
  // det = -1 is unitary but not special
  Matrix d = Matrix::Identity(2, 2);
  d(1, 1) = -1;
  CHECK(group_defect(GroupKind::su2(), d) > 0.1);
  CHECK(algebra_defect(GroupKind::su2(), pauli(1)) > 0.1);
  CHECK(algebra_defect(GroupKind::su2(), Complex(0, 1) * pauli(1)) < 1e-15);
}

TEST_CASE("projection is idempotent on members") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (const auto& g : {GroupKind::u1(), GroupKind::su2(), GroupKind::so3(), GroupKind::unitary(3),
                        GroupKind::product(GroupKind::u1(), GroupKind::su2())}) {
    Eigen::VectorXd c(g.algebra_dim());
    for (int j = 0; j < c.size(); ++j) c[j] = u(rng);
    const Matrix x = exp_matrix(g, algebra_from_coords(g, c));
    CHECK(group_defect(g, x) < 1e-12);
    CHECK((project_to_group(g, x) - x).norm() < 1e-12);
  }
}

TEST_CASE("adjoint matrix is a homomorphism") {
  const auto g = GroupKind::su2();
  const Matrix a = exp(AlgebraElement::from_coords(g, Eigen::Vector3d(0.4, -1.2, 0.3))).matrix();
  const Matrix b = exp(AlgebraElement::from_coords(g, Eigen::Vector3d(-0.7, 0.2, 1.1))).matrix();
  CHECK((adjoint_matrix(g, a * b) - adjoint_matrix(g, a) * adjoint_matrix(g, b)).norm() < 1e-13);
  // Ad on su(2) is a rotation
  const Eigen::MatrixXd r = adjoint_matrix(g, a);
  CHECK((r.transpose() * r - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-13);
}

TEST_CASE("geodesic distance on U(1) is the wrapped angle") {
  const Matrix p = Matrix::Constant(1, 1, std::polar(1.0, 3.0));
  const Matrix q = Matrix::Constant(1, 1, std::polar(1.0, -3.0));
  CHECK(geodesic_distance(p, q) == doctest::Approx(2 * std::numbers::pi - 6.0));
  CHECK(geodesic_distance(p, p) < 1e-15);
}

TEST_CASE("product groups act blockwise") {
  const auto g = GroupKind::product(GroupKind::u1(), GroupKind::su2());
  CHECK(g.matrix_size() == 3);
  CHECK(g.algebra_dim() == 4);
  CHECK(g.label() == "U1xSU2");
  const Matrix a = Matrix::Constant(1, 1, std::polar(1.0, 0.3));
  const Matrix b = exp(AlgebraElement::from_coords(GroupKind::su2(), Eigen::Vector3d(0.1, 0.2, 0.3))).matrix();
  const Matrix m = block_diagonal(a, b);
  CHECK((factor_block(g, m, 1) - b).norm() == 0.0);
  CHECK(group_defect(g, m) < 1e-14);
}
