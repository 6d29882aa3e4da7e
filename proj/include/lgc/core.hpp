#pragma once

#include "lgc/complex.hpp"
#include "lgc/liegroup.hpp"

#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace lgc {

/// Fibers are products of `components` copies of SO(n).
struct FiberSignature {
  int components = 1;
  int n = 2;

  int algebra_dim() const { return lgc::algebra_dim(n); }
  /// Dimension m of a fiber.
  int fiber_dim() const { return components * algebra_dim(); }
  void validate() const;
};

using Fiber = std::vector<GroupElement>;
using FiberVariation = std::vector<AlgebraElement>;

/// Concatenated algebra coordinates of the components of a fiber variation.
Vector fiber_coords(const FiberVariation& xi);

/// Map vertex -> fiber value. Vertices without a value are "undefined".
class Section {
 public:
  Section() = default;
  Section(FiberSignature sig, int num_vertices);

  const FiberSignature& signature() const { return sig_; }
  int num_vertices() const { return static_cast<int>(values_.size()); }
  bool has(VertexId v) const;
  /// Throws std::invalid_argument when v has no value.
  const Fiber& at(VertexId v) const;
  void set(VertexId v, Fiber fiber);

  /// y(v) -> y(v) exp(t xi(v)) componentwise on every defined vertex.
  Section moved(const class Variation& xi, double t) const;

 private:
  FiberSignature sig_;
  std::vector<std::optional<Fiber>> values_;
};

/// Tangent vector to the section space in left-logarithmic form: the
/// component at v is the velocity of t -> y(v) exp(t xi(v)). Unset vertices
/// carry zero.
class Variation {
 public:
  Variation(FiberSignature sig, int num_vertices);

  const FiberSignature& signature() const { return sig_; }
  int num_vertices() const { return static_cast<int>(values_.size()); }
  const FiberVariation& at(VertexId v) const;
  void set(VertexId v, FiberVariation xi);

 private:
  FiberSignature sig_;
  std::vector<FiberVariation> values_;
};

/// Map face -> g^*.
class Multiplier {
 public:
  Multiplier() : n_(0) {}
  Multiplier(int n, int num_faces);
  static Multiplier zeros(int n, int num_faces);

  int n() const { return n_; }
  int num_faces() const { return static_cast<int>(values_.size()); }
  bool has(FaceId f) const;
  const CoAlgebraElement& at(FaceId f) const;
  void set(FaceId f, CoAlgebraElement mu);

  /// this + t * other on faces where both are defined (other defaults to 0).
  Multiplier shifted(const Multiplier& other, double t) const;

 private:
  int n_;
  std::vector<std::optional<CoAlgebraElement>> values_;
};

/// Fiber values over the vertices adherent to one face, in adherence order.
struct Jet1 {
  FaceId face = -1;
  std::vector<Fiber> values;
};

Jet1 jet(const CellComplex& complex, const Section& y, FaceId face);

/// Theta^v_alpha(Phi) for one adherent vertex: the d x (c d) matrix taking the
/// algebra coordinates of the vertex's left-log variation to the algebra
/// coordinates of theta o dPhi_alpha.
using CartanBlock = Matrix;

/// A covector on one vertex fiber, in dual coordinates (value on each E_kl of
/// each component, components concatenated).
using Covector = Vector;

class LagrangianDensity {
 public:
  explicit LagrangianDensity(double fd_step = 1e-6) : fd_step_(fd_step) {}
  virtual ~LagrangianDensity() = default;

  virtual double value(const Jet1& jet) const = 0;
  /// Theta^v_alpha(L) for the vertex in adherence slot `slot`. The default
  /// uses central differences along exp curves with step fd_step().
  virtual Covector cartan(const Jet1& jet, int slot) const;

  double fd_step() const { return fd_step_; }

 private:
  double fd_step_;
};

class ConstraintMap {
 public:
  virtual ~ConstraintMap() = default;
  virtual GroupElement value(const Jet1& jet) const = 0;
  /// Left-trivialized differential theta o dPhi_alpha restricted to `slot`.
  virtual CartanBlock cartan(const Jet1& jet, int slot) const = 0;
};

/// Central-difference Theta^v_alpha(L) (value on each basis direction).
Covector fd_lagrangian_cartan(const LagrangianDensity& lagrangian, const Jet1& jet, int slot,
                              double h);
/// Central-difference theta o dPhi_alpha on one slot, column per basis
/// direction: log(Phi(-h)^{-1} Phi(+h)) / 2h. Valid at any base point.
CartanBlock fd_constraint_cartan(const ConstraintMap& constraint, const Jet1& jet, int slot,
                                 double h);

/// Everything the solvers and checkers consume.
struct Problem {
  std::shared_ptr<const CellComplex> complex;
  FiberSignature signature;
  std::shared_ptr<const LagrangianDensity> lagrangian;
  std::shared_ptr<const ConstraintMap> constraint;
  FaceSet faces;
  VertexClass classes;

  Problem(std::shared_ptr<const CellComplex> complex, FiberSignature signature,
          std::shared_ptr<const LagrangianDensity> lagrangian,
          std::shared_ptr<const ConstraintMap> constraint, FaceSet faces);
};

double action(const Problem& problem, const Section& y);

std::map<FaceId, GroupElement> psi(const Problem& problem, const Section& y);

struct AdmissibilityReport {
  bool admissible = true;
  double max_residual = 0.0;
  FaceId worst_face = -1;
};

/// Default admissibility tolerance on ||Psi(y)(alpha) - I||_F.
inline constexpr double kAdmissibilityTolerance = 1e-10;

AdmissibilityReport is_admissible(const Problem& problem, const Section& y,
                                  double tol = kAdmissibilityTolerance);

/// Per face: sum over adherent v of Theta^v_alpha(Phi)(dy_v).
std::map<FaceId, AlgebraElement> d_psi(const Problem& problem, const Section& y,
                                       const Variation& dy);

struct RegularityReport {
  int rows = 0;  // |faces| * dim g
  int cols = 0;  // |interior| * fiber dim
  double sigma_min = 0.0;
  bool structurally_non_surjective = false;
  bool regular = false;
};

/// Smallest singular value of dPsi restricted to variations that vanish on
/// the frontier (the rows-th singular value; zero when rows > cols).
RegularityReport regularity_rank(const Problem& problem, const Section& y,
                                 double rank_tol = 1e-8);

/// E_v(L): sum over the star of v of Theta^v_alpha(L). v must be interior.
Covector euler_lagrange_1form(const Problem& problem, const Section& y, VertexId v);

/// Theta^v_alpha(L) + lambda(alpha) o Theta^v_alpha(Phi) at (y, lambda).
Covector extended_cartan_form(const Problem& problem, const Section& y,
                              const Multiplier& lambda, VertexId v, FaceId alpha);

struct ElResidual {
  Covector coords;
  double norm = 0.0;
};

/// E_v(L) + sum_{alpha in S_v} lambda(alpha) o Theta^v_alpha(Phi).
ElResidual extended_el_residual(const Problem& problem, const Section& y,
                                const Multiplier& lambda, VertexId v);

/// Max residual norm over the interior vertices.
double max_extended_el_residual(const Problem& problem, const Section& y,
                                const Multiplier& lambda);

struct SplitResult {
  double lhs = 0.0;       // face sum of the extended action 1-form
  double rhs = 0.0;       // interior + boundary
  double interior = 0.0;
  double boundary = 0.0;
};

SplitResult variational_split_check(const Problem& problem, const Section& y,
                                    const Multiplier& lambda, const Variation& dy);

/// Frontier part of the variational formula applied to dy.
double boundary_sum(const Problem& problem, const Section& y, const Multiplier& lambda,
                    const Variation& dy);

struct NoetherReport {
  double sum = 0.0;
  double lagrangian_defect = 0.0;  // max_alpha |(j^1 D) L_alpha|
  double constraint_defect = 0.0;  // max_alpha ||theta o dPhi_alpha (j^1 D)||
  double el_residual = 0.0;        // max extended EL residual at interior vertices
  bool symmetry_ok = false;
  /// The symmetry conditions are verified along img(j^1 y) only.
  bool checked_along_section_only = true;
};

NoetherReport noether_boundary_sum(const Problem& problem, const Section& y,
                                   const Multiplier& lambda, const Variation& field,
                                   double symmetry_tol = 1e-10);

/// Tangent vector to sections x multipliers.
struct JacobiDirection {
  Variation dy;
  Multiplier dlambda;
};

struct JacobiReport {
  double residual = 0.0;
  double admissibility_defect = 0.0;  // max_alpha ||d_psi(dy)(alpha)||
};

/// Default step for the Jacobi / multisymplectic finite differences.
inline constexpr double kJacobiStep = 1e-5;

JacobiReport jacobi_residual(const Problem& problem, const Section& y, const Multiplier& lambda,
                             const JacobiDirection& delta, double h = kJacobiStep);

/// Frontier sum of d(Theta^v_alpha(L) + lambda_alpha o Theta^v_alpha(Phi))
/// evaluated on (delta1, delta2), both extended as left-invariant fields.
double multisymplectic_defect(const Problem& problem, const Section& y, const Multiplier& lambda,
                              const JacobiDirection& delta1, const JacobiDirection& delta2,
                              double h = kJacobiStep);

/// Precondition failures surfaced to callers (CLI exit code 1).
class PreconditionViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lgc
