#pragma once

#include <Eigen/Dense>

#include <random>
#include <stdexcept>

namespace lgc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Tolerance used to enforce the group and tangency invariants.
inline constexpr double kGroupTolerance = 1e-9;

/// Element of SO(n), stored as an orthogonal matrix with determinant +1.
class GroupElement {
 public:
  /// Identity of SO(n).
  static GroupElement identity(int n);

  /// Validates `m` against the SO(n) invariants (within kGroupTolerance) and
  /// removes round-off drift. Throws std::invalid_argument when the violation
  /// is larger than the tolerance.
  static GroupElement from_matrix(const Matrix& m);

  /// Wraps a matrix that is known to be special orthogonal (products and
  /// inverses of group elements). No checks.
  static GroupElement trusted(Matrix m) { return GroupElement(std::move(m)); }

  const Matrix& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }

  GroupElement inverse() const { return GroupElement(m_.transpose()); }
  GroupElement operator*(const GroupElement& other) const {
    return GroupElement(m_ * other.m_);
  }

 private:
  explicit GroupElement(Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

/// Element of so(n). The stored matrix is always exactly skew.
class AlgebraElement {
 public:
  AlgebraElement() = default;
  /// Keeps the skew part (A - A^T)/2 of `m`.
  explicit AlgebraElement(const Matrix& m);
  static AlgebraElement zero(int n);

  const Matrix& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }

  AlgebraElement operator+(const AlgebraElement& o) const;
  AlgebraElement operator-(const AlgebraElement& o) const;
  AlgebraElement operator-() const;
  AlgebraElement operator*(double s) const;
  double norm() const { return m_.norm(); }

 private:
  Matrix m_;
};

/// Element of so(n)^*, identified with a skew matrix through the trace
/// pairing <mu, xi> = tr(mu^T xi). In this identification the dual basis of
/// {E_kl} is {E_kl / 2}.
class CoAlgebraElement {
 public:
  CoAlgebraElement() = default;
  explicit CoAlgebraElement(const Matrix& m);
  static CoAlgebraElement zero(int n);

  const Matrix& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }

  CoAlgebraElement operator+(const CoAlgebraElement& o) const;
  CoAlgebraElement operator-(const CoAlgebraElement& o) const;
  CoAlgebraElement operator-() const;
  CoAlgebraElement operator*(double s) const;
  double norm() const { return m_.norm(); }

 private:
  Matrix m_;
};

/// A tangent vector D_g at g, stored in ambient matrix coordinates.
struct TangentVector {
  GroupElement base;
  Matrix vector;
};

inline AlgebraElement operator*(double s, const AlgebraElement& a) { return a * s; }
inline CoAlgebraElement operator*(double s, const CoAlgebraElement& a) { return a * s; }

/// Dimension n(n-1)/2 of so(n).
int algebra_dim(int n);

/// E_kl for k < l: +1 at (k,l), -1 at (l,k). Indices are 0-based.
AlgebraElement basis_element(int n, int k, int l);
/// The basis in lexicographic (k,l) order; index `a` is the position used by
/// every coordinate routine below.
AlgebraElement basis_element(int n, int a);

/// Coordinates x with xi = sum_a x_a E_a (so x_kl = xi(k,l)).
Vector algebra_coords(const AlgebraElement& xi);
AlgebraElement algebra_from_coords(int n, const Eigen::Ref<const Vector>& x);

/// Dual coordinates f_a = <mu, E_a> = 2 mu(k,l). With these,
/// <mu, xi> = dual_coords(mu) . algebra_coords(xi).
Vector dual_coords(const CoAlgebraElement& mu);
CoAlgebraElement coalgebra_from_dual_coords(int n, const Eigen::Ref<const Vector>& f);

GroupElement exp(const AlgebraElement& xi);
/// Principal logarithm; requires ||g - I||_F < 1 (std::domain_error otherwise).
AlgebraElement log_near_identity(const GroupElement& g);

/// theta_g(D) = g^{-1} D, checked for tangency (std::invalid_argument).
AlgebraElement maurer_cartan(const TangentVector& d);
/// Inverse of maurer_cartan: the tangent vector g xi at g.
TangentVector left_translate(const GroupElement& g, const AlgebraElement& xi);

/// Ad_g xi = g xi g^{-1}.
AlgebraElement adjoint(const GroupElement& g, const AlgebraElement& xi);
/// Ad^*_g mu, defined by <Ad^*_g mu, xi> = <mu, Ad_g xi>; equals g^{-1} mu g.
CoAlgebraElement coadjoint(const GroupElement& g, const CoAlgebraElement& mu);
/// tr(mu^T xi).
double pairing(const CoAlgebraElement& mu, const AlgebraElement& xi);

/// Matrix of Ad_g acting on algebra coordinates.
Matrix adjoint_matrix(const GroupElement& g);

/// Nearest special orthogonal matrix in Frobenius norm (polar factor).
/// Throws std::domain_error for singular input or det <= 0.
GroupElement project_to_group(const Matrix& m);

/// Coordinates drawn uniformly from [-scale, scale] over the E_kl basis.
AlgebraElement random_algebra(int n, std::mt19937_64& rng, double scale = 1.0);
/// exp(scale * xi) with xi drawn as in random_algebra with unit scale.
GroupElement random_group(int n, std::mt19937_64& rng, double scale = 1.0);

/// Frobenius distance to the identity.
double distance_to_identity(const GroupElement& g);

}  // namespace lgc
