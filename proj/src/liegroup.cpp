#include "lgc/liegroup.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>

namespace lgc {

namespace {

Matrix skew_part(const Matrix& m) { return 0.5 * (m - m.transpose()); }

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw std::invalid_argument(std::string(what) + ": matrix must be square");
  }
}

// Pairs (k,l), k < l, in lexicographic order.
std::pair<int, int> basis_pair(int n, int a) {
  for (int k = 0; k < n; ++k) {
    const int row = n - 1 - k;
    if (a < row) return {k, k + 1 + a};
    a -= row;
  }
  throw std::out_of_range("basis index out of range");
}

}  // namespace

GroupElement GroupElement::identity(int n) { return GroupElement(Matrix::Identity(n, n)); }

GroupElement GroupElement::from_matrix(const Matrix& m) {
  require_square(m, "GroupElement");
  const int n = static_cast<int>(m.rows());
  const double orth = (m.transpose() * m - Matrix::Identity(n, n)).norm();
  if (!(orth <= kGroupTolerance)) {
    throw std::invalid_argument("GroupElement: matrix is not orthogonal (defect " +
                                std::to_string(orth) + ")");
  }
  if (m.determinant() < 0.0) {
    throw std::invalid_argument("GroupElement: determinant is -1");
  }
  // One Newton step of the polar iteration; quadratic, so round-off level
  // drift is gone after a single step.
  Matrix cleaned = 0.5 * (m + m.transpose().inverse());
  return GroupElement(std::move(cleaned));
}

AlgebraElement::AlgebraElement(const Matrix& m) : m_(skew_part(m)) {
  require_square(m, "AlgebraElement");
}

AlgebraElement AlgebraElement::zero(int n) { return AlgebraElement(Matrix::Zero(n, n)); }

AlgebraElement AlgebraElement::operator+(const AlgebraElement& o) const {
  return AlgebraElement(m_ + o.m_);
}
AlgebraElement AlgebraElement::operator-(const AlgebraElement& o) const {
  return AlgebraElement(m_ - o.m_);
}
AlgebraElement AlgebraElement::operator-() const { return AlgebraElement(Matrix(-m_)); }
AlgebraElement AlgebraElement::operator*(double s) const { return AlgebraElement(Matrix(s * m_)); }

CoAlgebraElement::CoAlgebraElement(const Matrix& m) : m_(skew_part(m)) {
  require_square(m, "CoAlgebraElement");
}

CoAlgebraElement CoAlgebraElement::zero(int n) { return CoAlgebraElement(Matrix::Zero(n, n)); }

CoAlgebraElement CoAlgebraElement::operator+(const CoAlgebraElement& o) const {
  return CoAlgebraElement(m_ + o.m_);
}
CoAlgebraElement CoAlgebraElement::operator-(const CoAlgebraElement& o) const {
  return CoAlgebraElement(m_ - o.m_);
}
CoAlgebraElement CoAlgebraElement::operator-() const { return CoAlgebraElement(Matrix(-m_)); }
CoAlgebraElement CoAlgebraElement::operator*(double s) const {
  return CoAlgebraElement(Matrix(s * m_));
}

int algebra_dim(int n) { return n * (n - 1) / 2; }

AlgebraElement basis_element(int n, int k, int l) {
  if (!(0 <= k && k < l && l < n)) throw std::out_of_range("basis_element: need 0 <= k < l < n");
  Matrix e = Matrix::Zero(n, n);
  e(k, l) = 1.0;
  e(l, k) = -1.0;
  return AlgebraElement(e);
}

AlgebraElement basis_element(int n, int a) {
  const auto [k, l] = basis_pair(n, a);
  return basis_element(n, k, l);
}

Vector algebra_coords(const AlgebraElement& xi) {
  const int n = xi.dim();
  Vector x(algebra_dim(n));
  int a = 0;
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) x(a++) = xi.matrix()(k, l);
  return x;
}

AlgebraElement algebra_from_coords(int n, const Eigen::Ref<const Vector>& x) {
  if (x.size() != algebra_dim(n)) throw std::invalid_argument("algebra_from_coords: size mismatch");
  Matrix m = Matrix::Zero(n, n);
  int a = 0;
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) {
      m(k, l) = x(a);
      m(l, k) = -x(a);
      ++a;
    }
  return AlgebraElement(m);
}

Vector dual_coords(const CoAlgebraElement& mu) {
  const int n = mu.dim();
  Vector f(algebra_dim(n));
  int a = 0;
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) f(a++) = 2.0 * mu.matrix()(k, l);
  return f;
}

CoAlgebraElement coalgebra_from_dual_coords(int n, const Eigen::Ref<const Vector>& f) {
  if (f.size() != algebra_dim(n)) {
    throw std::invalid_argument("coalgebra_from_dual_coords: size mismatch");
  }
  Matrix m = Matrix::Zero(n, n);
  int a = 0;
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) {
      m(k, l) = 0.5 * f(a);
      m(l, k) = -0.5 * f(a);
      ++a;
    }
  return CoAlgebraElement(m);
}

GroupElement exp(const AlgebraElement& xi) {
  Matrix g = xi.matrix().exp();
  return GroupElement::trusted(std::move(g));
}

AlgebraElement log_near_identity(const GroupElement& g) {
  const int n = g.dim();
  const double dist = (g.matrix() - Matrix::Identity(n, n)).norm();
  if (!(dist < 1.0)) {
    throw std::domain_error("log_near_identity: ||g - I||_F = " + std::to_string(dist) +
                            " is outside the principal region");
  }
  Matrix l = g.matrix().log();
  return AlgebraElement(l);
}

AlgebraElement maurer_cartan(const TangentVector& d) {
  const Matrix left = d.base.matrix().transpose() * d.vector;
  const double asym = (left + left.transpose()).norm();
  if (!(asym <= kGroupTolerance * (1.0 + d.vector.norm()))) {
    throw std::invalid_argument("maurer_cartan: vector is not tangent to SO(n) at its base");
  }
  return AlgebraElement(left);
}

TangentVector left_translate(const GroupElement& g, const AlgebraElement& xi) {
  return TangentVector{g, g.matrix() * xi.matrix()};
}

AlgebraElement adjoint(const GroupElement& g, const AlgebraElement& xi) {
  return AlgebraElement(g.matrix() * xi.matrix() * g.matrix().transpose());
}

CoAlgebraElement coadjoint(const GroupElement& g, const CoAlgebraElement& mu) {
  return CoAlgebraElement(g.matrix().transpose() * mu.matrix() * g.matrix());
}

double pairing(const CoAlgebraElement& mu, const AlgebraElement& xi) {
  return mu.matrix().cwiseProduct(xi.matrix()).sum();
}

Matrix adjoint_matrix(const GroupElement& g) {
  const int n = g.dim();
  const int d = algebra_dim(n);
  Matrix ad(d, d);
  for (int a = 0; a < d; ++a) ad.col(a) = algebra_coords(adjoint(g, basis_element(n, a)));
  return ad;
}

GroupElement project_to_group(const Matrix& m) {
  require_square(m, "project_to_group");
  const int n = static_cast<int>(m.rows());
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  if (!(s(n - 1) > 1e-12 * std::max(1.0, s(0)))) {
    throw std::domain_error("project_to_group: matrix is singular");
  }
  if (!(m.determinant() > 0.0)) {
    throw std::domain_error("project_to_group: det <= 0 (reflection branch)");
  }
  Matrix q = svd.matrixU() * svd.matrixV().transpose();
  return GroupElement::trusted(std::move(q));
}

AlgebraElement random_algebra(int n, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector x(algebra_dim(n));
  for (int a = 0; a < x.size(); ++a) x(a) = scale * dist(rng);
  return algebra_from_coords(n, x);
}

GroupElement random_group(int n, std::mt19937_64& rng, double scale) {
  return exp(random_algebra(n, rng) * scale);
}

double distance_to_identity(const GroupElement& g) {
  return (g.matrix() - Matrix::Identity(g.dim(), g.dim())).norm();
}

}  // namespace lgc
