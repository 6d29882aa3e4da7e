#include "lgc/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace lgc {

void FiberSignature::validate() const {
  if (components < 1) throw std::invalid_argument("FiberSignature: need at least one component");
  if (n < 2) throw std::invalid_argument("FiberSignature: need n >= 2");
}

Vector fiber_coords(const FiberVariation& xi) {
  if (xi.empty()) return Vector();
  const int d = algebra_dim(xi.front().dim());
  Vector out(d * static_cast<int>(xi.size()));
  for (std::size_t k = 0; k < xi.size(); ++k) out.segment(k * d, d) = algebra_coords(xi[k]);
  return out;
}

// Section ------------------------------------------------------------------

Section::Section(FiberSignature sig, int num_vertices) : sig_(sig), values_(num_vertices) {
  sig_.validate();
}

bool Section::has(VertexId v) const {
  return v >= 0 && v < num_vertices() && values_[v].has_value();
}

const Fiber& Section::at(VertexId v) const {
  if (!has(v)) throw std::invalid_argument("section has no value at vertex " + std::to_string(v));
  return *values_[v];
}

void Section::set(VertexId v, Fiber fiber) {
  if (v < 0 || v >= num_vertices()) {
    throw std::invalid_argument("section: vertex id " + std::to_string(v) + " out of range");
  }
  if (static_cast<int>(fiber.size()) != sig_.components) {
    throw std::invalid_argument("section: fiber has the wrong number of components");
  }
  for (const auto& g : fiber)
    if (g.dim() != sig_.n) throw std::invalid_argument("section: fiber component has wrong size");
  values_[v] = std::move(fiber);
}

Section Section::moved(const Variation& xi, double t) const {
  Section out(sig_, num_vertices());
  for (VertexId v = 0; v < num_vertices(); ++v) {
    if (!has(v)) continue;
    const auto& base = *values_[v];
    const auto& dir = xi.at(v);
    Fiber f;
    f.reserve(base.size());
    for (std::size_t k = 0; k < base.size(); ++k) f.push_back(base[k] * exp(dir[k] * t));
    out.values_[v] = std::move(f);
  }
  return out;
}

// Variation ----------------------------------------------------------------

Variation::Variation(FiberSignature sig, int num_vertices)
    : sig_(sig),
      values_(num_vertices, FiberVariation(sig.components, AlgebraElement::zero(sig.n))) {
  sig_.validate();
}

const FiberVariation& Variation::at(VertexId v) const {
  if (v < 0 || v >= num_vertices()) {
    throw std::invalid_argument("variation: vertex id " + std::to_string(v) + " out of range");
  }
  return values_[v];
}

void Variation::set(VertexId v, FiberVariation xi) {
  if (v < 0 || v >= num_vertices()) {
    throw std::invalid_argument("variation: vertex id " + std::to_string(v) + " out of range");
  }
  if (static_cast<int>(xi.size()) != sig_.components) {
    throw std::invalid_argument("variation: wrong number of components");
  }
  for (const auto& a : xi)
    if (a.dim() != sig_.n) throw std::invalid_argument("variation: component has wrong size");
  values_[v] = std::move(xi);
}

// Multiplier ---------------------------------------------------------------

Multiplier::Multiplier(int n, int num_faces) : n_(n), values_(num_faces) {
  if (n < 2) throw std::invalid_argument("Multiplier: need n >= 2");
}

Multiplier Multiplier::zeros(int n, int num_faces) {
  Multiplier m(n, num_faces);
  for (auto& v : m.values_) v = CoAlgebraElement::zero(n);
  return m;
}

bool Multiplier::has(FaceId f) const {
  return f >= 0 && f < num_faces() && values_[f].has_value();
}

const CoAlgebraElement& Multiplier::at(FaceId f) const {
  if (!has(f)) throw std::invalid_argument("multiplier missing on face " + std::to_string(f));
  return *values_[f];
}

void Multiplier::set(FaceId f, CoAlgebraElement mu) {
  if (f < 0 || f >= num_faces()) {
    throw std::invalid_argument("multiplier: face id " + std::to_string(f) + " out of range");
  }
  if (mu.dim() != n_) throw std::invalid_argument("multiplier: value has wrong size");
  values_[f] = std::move(mu);
}

Multiplier Multiplier::shifted(const Multiplier& other, double t) const {
  Multiplier out(n_, num_faces());
  for (FaceId f = 0; f < num_faces(); ++f) {
    if (!has(f)) continue;
    out.values_[f] = other.has(f) ? *values_[f] + other.at(f) * t : *values_[f];
  }
  return out;
}

// Jets and Cartan forms ----------------------------------------------------

Jet1 jet(const CellComplex& complex, const Section& y, FaceId face) {
  Jet1 j;
  j.face = face;
  for (VertexId v : complex.adherence(face)) j.values.push_back(y.at(v));
  return j;
}

namespace {

Jet1 bumped(const Jet1& base, int slot, int component, const AlgebraElement& step) {
  Jet1 j = base;
  auto& g = j.values[slot][component];
  g = g * exp(step);
  return j;
}

void check_slot(const Jet1& j, int slot) {
  if (slot < 0 || slot >= static_cast<int>(j.values.size())) {
    throw std::invalid_argument("jet slot " + std::to_string(slot) + " out of range");
  }
}

}  // namespace

Covector fd_lagrangian_cartan(const LagrangianDensity& lagrangian, const Jet1& j, int slot,
                              double h) {
  check_slot(j, slot);
  const auto& fiber = j.values[slot];
  const int c = static_cast<int>(fiber.size());
  const int n = fiber.front().dim();
  const int d = algebra_dim(n);
  Covector out(c * d);
  for (int k = 0; k < c; ++k)
    for (int a = 0; a < d; ++a) {
      const AlgebraElement e = basis_element(n, a);
      const double plus = lagrangian.value(bumped(j, slot, k, e * h));
      const double minus = lagrangian.value(bumped(j, slot, k, e * -h));
      out(k * d + a) = (plus - minus) / (2.0 * h);
    }
  return out;
}

CartanBlock fd_constraint_cartan(const ConstraintMap& constraint, const Jet1& j, int slot,
                                 double h) {
  check_slot(j, slot);
  const auto& fiber = j.values[slot];
  const int c = static_cast<int>(fiber.size());
  const int n = fiber.front().dim();
  const int d = algebra_dim(n);
  CartanBlock out(d, c * d);
  for (int k = 0; k < c; ++k)
    for (int a = 0; a < d; ++a) {
      const AlgebraElement e = basis_element(n, a);
      const GroupElement plus = constraint.value(bumped(j, slot, k, e * h));
      const GroupElement minus = constraint.value(bumped(j, slot, k, e * -h));
      out.col(k * d + a) = algebra_coords(log_near_identity(minus.inverse() * plus)) / (2.0 * h);
    }
  return out;
}

Covector LagrangianDensity::cartan(const Jet1& j, int slot) const {
  return fd_lagrangian_cartan(*this, j, slot, fd_step_);
}

// Problem ------------------------------------------------------------------

Problem::Problem(std::shared_ptr<const CellComplex> cx, FiberSignature sig,
                 std::shared_ptr<const LagrangianDensity> l,
                 std::shared_ptr<const ConstraintMap> phi, FaceSet fs)
    : complex(std::move(cx)),
      signature(sig),
      lagrangian(std::move(l)),
      constraint(std::move(phi)),
      faces(std::move(fs)) {
  if (!complex) throw std::invalid_argument("Problem: complex is required");
  if (!lagrangian) throw std::invalid_argument("Problem: Lagrangian is required");
  signature.validate();
  classes = classify_vertices(*complex, faces);
}

namespace {

int fiber_dim(const Problem& p) { return p.signature.fiber_dim(); }
int alg_dim(const Problem& p) { return p.signature.algebra_dim(); }

CartanBlock constraint_block(const Problem& p, const Jet1& j, int slot) {
  if (!p.constraint) return CartanBlock::Zero(alg_dim(p), fiber_dim(p));
  return p.constraint->cartan(j, slot);
}

int slot_of(const Problem& p, FaceId f, VertexId v) {
  const int s = p.complex->slot(f, v);
  if (s < 0) {
    throw std::invalid_argument("vertex " + std::to_string(v) + " is not adherent to face " +
                                std::to_string(f));
  }
  return s;
}

void require_interior(const Problem& p, VertexId v) {
  if (!p.classes.is_interior(v)) {
    throw std::invalid_argument("vertex " + std::to_string(v) + " is not interior to the face set");
  }
}

Covector extended_form_on_jet(const Problem& p, const Jet1& j, const Multiplier& lambda,
                              int slot) {
  Covector w = p.lagrangian->cartan(j, slot);
  if (p.constraint) {
    const CartanBlock t = p.constraint->cartan(j, slot);
    w += t.transpose() * dual_coords(lambda.at(j.face));
  }
  return w;
}

}  // namespace

double action(const Problem& problem, const Section& y) {
  double total = 0.0;
  for (FaceId f : problem.faces.faces()) total += problem.lagrangian->value(jet(*problem.complex, y, f));
  return total;
}

std::map<FaceId, GroupElement> psi(const Problem& problem, const Section& y) {
  std::map<FaceId, GroupElement> out;
  for (FaceId f : problem.faces.faces()) {
    out.emplace(f, problem.constraint ? problem.constraint->value(jet(*problem.complex, y, f))
                                      : GroupElement::identity(problem.signature.n));
  }
  return out;
}

AdmissibilityReport is_admissible(const Problem& problem, const Section& y, double tol) {
  AdmissibilityReport rep;
  for (const auto& [f, g] : psi(problem, y)) {
    const double r = distance_to_identity(g);
    if (rep.worst_face < 0 || r > rep.max_residual) {
      rep.max_residual = r;
      rep.worst_face = f;
    }
  }
  rep.admissible = rep.max_residual <= tol;
  return rep;
}

std::map<FaceId, AlgebraElement> d_psi(const Problem& problem, const Section& y,
                                       const Variation& dy) {
  std::map<FaceId, AlgebraElement> out;
  const int n = problem.signature.n;
  for (FaceId f : problem.faces.faces()) {
    const Jet1 j = jet(*problem.complex, y, f);
    Vector acc = Vector::Zero(alg_dim(problem));
    const auto adh = problem.complex->adherence(f);
    for (int s = 0; s < static_cast<int>(adh.size()); ++s) {
      acc += constraint_block(problem, j, s) * fiber_coords(dy.at(adh[s]));
    }
    out.emplace(f, algebra_from_coords(n, acc));
  }
  return out;
}

RegularityReport regularity_rank(const Problem& problem, const Section& y, double rank_tol) {
  RegularityReport rep;
  const auto& faces = problem.faces.faces();
  const auto& interior = problem.classes.interior;
  const int d = alg_dim(problem);
  const int m = fiber_dim(problem);
  rep.rows = static_cast<int>(faces.size()) * d;
  rep.cols = static_cast<int>(interior.size()) * m;
  if (rep.rows == 0) {
    rep.sigma_min = std::numeric_limits<double>::infinity();
    rep.regular = true;
    return rep;
  }
  rep.structurally_non_surjective = rep.rows > rep.cols;
  if (rep.cols > 0) {
    Matrix big = Matrix::Zero(rep.rows, rep.cols);
    for (int r = 0; r < static_cast<int>(faces.size()); ++r) {
      const FaceId f = faces[r];
      const Jet1 j = jet(*problem.complex, y, f);
      const auto adh = problem.complex->adherence(f);
      for (int s = 0; s < static_cast<int>(adh.size()); ++s) {
        const auto it = std::lower_bound(interior.begin(), interior.end(), adh[s]);
        if (it == interior.end() || *it != adh[s]) continue;
        const int c = static_cast<int>(it - interior.begin());
        big.block(r * d, c * m, d, m) = constraint_block(problem, j, s);
      }
    }
    const Vector sv = Eigen::BDCSVD<Matrix>(big).singularValues();
    rep.sigma_min = rep.structurally_non_surjective ? 0.0 : sv(rep.rows - 1);
  }
  rep.regular = !rep.structurally_non_surjective && rep.sigma_min > rank_tol;
  return rep;
}

Covector euler_lagrange_1form(const Problem& problem, const Section& y, VertexId v) {
  require_interior(problem, v);
  Covector acc = Covector::Zero(fiber_dim(problem));
  for (FaceId f : problem.complex->star(v)) {
    acc += problem.lagrangian->cartan(jet(*problem.complex, y, f), slot_of(problem, f, v));
  }
  return acc;
}

Covector extended_cartan_form(const Problem& problem, const Section& y, const Multiplier& lambda,
                              VertexId v, FaceId alpha) {
  return extended_form_on_jet(problem, jet(*problem.complex, y, alpha), lambda,
                              slot_of(problem, alpha, v));
}

ElResidual extended_el_residual(const Problem& problem, const Section& y,
                                const Multiplier& lambda, VertexId v) {
  require_interior(problem, v);
  ElResidual out;
  out.coords = Covector::Zero(fiber_dim(problem));
  for (FaceId f : problem.complex->star(v)) {
    out.coords += extended_cartan_form(problem, y, lambda, v, f);
  }
  out.norm = out.coords.norm();
  return out;
}

double max_extended_el_residual(const Problem& problem, const Section& y,
                                const Multiplier& lambda) {
  double worst = 0.0;
  for (VertexId v : problem.classes.interior)
    worst = std::max(worst, extended_el_residual(problem, y, lambda, v).norm);
  return worst;
}

double boundary_sum(const Problem& problem, const Section& y, const Multiplier& lambda,
                    const Variation& dy) {
  double total = 0.0;
  for (VertexId v : problem.classes.frontier) {
    const Vector x = fiber_coords(dy.at(v));
    for (FaceId f : problem.complex->star(v)) {
      if (!problem.faces.contains(f)) continue;
      total += extended_cartan_form(problem, y, lambda, v, f).dot(x);
    }
  }
  return total;
}

SplitResult variational_split_check(const Problem& problem, const Section& y,
                                    const Multiplier& lambda, const Variation& dy) {
  SplitResult out;
  const auto dpsi = problem.constraint ? d_psi(problem, y, dy) : std::map<FaceId, AlgebraElement>{};
  for (FaceId f : problem.faces.faces()) {
    const Jet1 j = jet(*problem.complex, y, f);
    const auto adh = problem.complex->adherence(f);
    double dl = 0.0;
    for (int s = 0; s < static_cast<int>(adh.size()); ++s)
      dl += problem.lagrangian->cartan(j, s).dot(fiber_coords(dy.at(adh[s])));
    const double dc = problem.constraint ? pairing(lambda.at(f), dpsi.at(f)) : 0.0;
    out.lhs += dl + dc;
  }
  for (VertexId v : problem.classes.interior) {
    out.interior += extended_el_residual(problem, y, lambda, v).coords.dot(fiber_coords(dy.at(v)));
  }
  out.boundary = boundary_sum(problem, y, lambda, dy);
  out.rhs = out.interior + out.boundary;
  return out;
}

NoetherReport noether_boundary_sum(const Problem& problem, const Section& y,
                                   const Multiplier& lambda, const Variation& field,
                                   double symmetry_tol) {
  NoetherReport rep;
  for (FaceId f : problem.faces.faces()) {
    const Jet1 j = jet(*problem.complex, y, f);
    const auto adh = problem.complex->adherence(f);
    double dl = 0.0;
    Vector dc = Vector::Zero(alg_dim(problem));
    for (int s = 0; s < static_cast<int>(adh.size()); ++s) {
      const Vector x = fiber_coords(field.at(adh[s]));
      dl += problem.lagrangian->cartan(j, s).dot(x);
      dc += constraint_block(problem, j, s) * x;
    }
    rep.lagrangian_defect = std::max(rep.lagrangian_defect, std::abs(dl));
    rep.constraint_defect =
        std::max(rep.constraint_defect, algebra_from_coords(problem.signature.n, dc).norm());
  }
  rep.el_residual = max_extended_el_residual(problem, y, lambda);
  rep.symmetry_ok = rep.lagrangian_defect <= symmetry_tol && rep.constraint_defect <= symmetry_tol;
  rep.sum = boundary_sum(problem, y, lambda, field);
  return rep;
}

namespace {

Vector stacked_el_residual(const Problem& p, const Section& y, const Multiplier& lambda) {
  const int m = fiber_dim(p);
  Vector out(static_cast<int>(p.classes.interior.size()) * m);
  int k = 0;
  for (VertexId v : p.classes.interior) out.segment(m * k++, m) = extended_el_residual(p, y, lambda, v).coords;
  return out;
}

// omega(Y) at (y, lambda): frontier sum of the extended Cartan forms on Y.
double boundary_form_on(const Problem& p, const Section& y, const Multiplier& lambda,
                        const JacobiDirection& dir) {
  return boundary_sum(p, y, lambda, dir.dy);
}

double derivative_along(const Problem& p, const Section& y, const Multiplier& lambda,
                        const JacobiDirection& x, const JacobiDirection& of, double h) {
  const double plus = boundary_form_on(p, y.moved(x.dy, h), lambda.shifted(x.dlambda, h), of);
  const double minus = boundary_form_on(p, y.moved(x.dy, -h), lambda.shifted(x.dlambda, -h), of);
  return (plus - minus) / (2.0 * h);
}

}  // namespace

JacobiReport jacobi_residual(const Problem& problem, const Section& y, const Multiplier& lambda,
                             const JacobiDirection& delta, double h) {
  JacobiReport rep;
  const Vector plus = stacked_el_residual(problem, y.moved(delta.dy, h), lambda.shifted(delta.dlambda, h));
  const Vector minus =
      stacked_el_residual(problem, y.moved(delta.dy, -h), lambda.shifted(delta.dlambda, -h));
  rep.residual = ((plus - minus) / (2.0 * h)).norm();
  for (const auto& [f, a] : d_psi(problem, y, delta.dy))
    rep.admissibility_defect = std::max(rep.admissibility_defect, a.norm());
  return rep;
}

double multisymplectic_defect(const Problem& problem, const Section& y, const Multiplier& lambda,
                              const JacobiDirection& delta1, const JacobiDirection& delta2,
                              double h) {
  // Bracket of the left-invariant extensions; the multiplier part is constant.
  JacobiDirection bracket{Variation(problem.signature, y.num_vertices()),
                          Multiplier::zeros(lambda.n(), lambda.num_faces())};
  for (VertexId v = 0; v < y.num_vertices(); ++v) {
    const auto& a = delta1.dy.at(v);
    const auto& b = delta2.dy.at(v);
    FiberVariation c;
    for (std::size_t k = 0; k < a.size(); ++k)
      c.emplace_back(a[k].matrix() * b[k].matrix() - b[k].matrix() * a[k].matrix());
    bracket.dy.set(v, std::move(c));
  }
  const double xy = derivative_along(problem, y, lambda, delta1, delta2, h);
  const double yx = derivative_along(problem, y, lambda, delta2, delta1, h);
  return xy - yx - boundary_form_on(problem, y, lambda, bracket);
}

}  // namespace lgc
