#pragma once

#include "lgc/core.hpp"

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lgc {

/// Component order of a reduced fiber.
inline constexpr int kU = 0;
inline constexpr int kV = 1;

/// Unreduced fields are sections with one component per grid vertex.
using UnreducedField = Section;
/// (u, v) per grid vertex. u_{W,j} and v_{i,H} belong to no constraint or
/// Lagrangian term; reduce() sets them to the identity.
using ReducedSection = Section;
/// theta_ij per grid vertex id.
using GaugeField = std::vector<AlgebraElement>;

/// Reduced Lagrangian l(u, v) evaluated on the face Delta_ij with corner (i,j).
///
/// left_u is L*_u dl(., v), the functional xi -> d/dt l(u exp(t xi), v); left_v
/// likewise. Right versions are derived as Ad*_{g^{-1}} of the left ones.
class ReducedLagrangian {
 public:
  explicit ReducedLagrangian(double fd_step = 1e-6) : fd_step_(fd_step) {}
  virtual ~ReducedLagrangian() = default;

  virtual double value(const GroupElement& u, const GroupElement& v) const = 0;
  virtual CoAlgebraElement left_u(const GroupElement& u, const GroupElement& v) const;
  virtual CoAlgebraElement left_v(const GroupElement& u, const GroupElement& v) const;

  /// xi -> d/dt l(exp(t xi) u, v).
  CoAlgebraElement right_u(const GroupElement& u, const GroupElement& v) const;
  /// xi -> d/dt l(u, exp(t xi) v).
  CoAlgebraElement right_v(const GroupElement& u, const GroupElement& v) const;

  double fd_step() const { return fd_step_; }

 private:
  double fd_step_;
};

/// Face Lagrangian l(u_ij, v_ij) of the reduced problem. Only the (i,j) slot
/// carries a differential.
class ReducedLagrangianDensity : public LagrangianDensity {
 public:
  explicit ReducedLagrangianDensity(std::shared_ptr<const ReducedLagrangian> l);
  double value(const Jet1& jet) const override;
  Covector cartan(const Jet1& jet, int slot) const override;
  const ReducedLagrangian& reduced() const { return *l_; }

 private:
  std::shared_ptr<const ReducedLagrangian> l_;
};

/// Phi(Delta_ij) = u_ij v_{i+1,j} u_{i,j+1}^{-1} v_ij^{-1}, with analytic
/// left-trivialized differentials valid at every point.
class PlaquetteConstraint : public ConstraintMap {
 public:
  GroupElement value(const Jet1& jet) const override;
  CartanBlock cartan(const Jet1& jet, int slot) const override;
};

/// Full-grid reduced problem with fiber (u, v) in SO(n) x SO(n).
Problem make_reduced_problem(int width, int height, int n,
                             std::shared_ptr<const ReducedLagrangian> lagrangian);

const GridLayout& require_grid(const Problem& problem);

/// u_ij = g_ij^{-1} g_{i+1,j}, v_ij = g_ij^{-1} g_{i,j+1}.
ReducedSection reduce(const GridLayout& grid, const UnreducedField& g);

GroupElement plaquette_constraint(const GridLayout& grid, const ReducedSection& y, int i, int j);

/// Plaquette forms in the closed form that assumes Phi = e at Delta_ij.
struct PlaquetteForms {
  CartanBlock corner;  // (i,j): (du, dv) -> Ad_u du - Ad_v dv
  CartanBlock east;    // (i+1,j): (., dv') -> Ad_u Ad_v' dv'
  CartanBlock north;   // (i,j+1): (du', .) -> -Ad_v Ad_u' du'
};

PlaquetteForms constraint_cartan_forms(const GridLayout& grid, const ReducedSection& y, int i,
                                       int j, double tol = kAdmissibilityTolerance);

/// R*_{u_ij} - L*_{u_{i-1,j}} + R*_{v_ij} - L*_{v_{i,j-1}} at an interior vertex.
CoAlgebraElement ep_residual(const ReducedLagrangian& l, const GridLayout& grid,
                             const ReducedSection& y, int i, int j);

/// Largest ep_residual norm over the interior vertices.
double max_ep_residual(const ReducedLagrangian& l, const GridLayout& grid, const ReducedSection& y);

class HolonomyError : public std::runtime_error {
 public:
  HolonomyError(FaceId face, double defect, const std::string& what)
      : std::runtime_error(what), face_(face), defect_(defect) {}
  FaceId face() const { return face_; }
  double defect() const { return defect_; }

 private:
  FaceId face_;
  double defect_;
};

struct Reconstruction {
  UnreducedField field;
  double max_plaquette_defect = 0.0;
  /// Max ||g_row - g_col|| between row-first and column-first propagation.
  double path_discrepancy = 0.0;
};

/// Propagates g_{i+1,j} = g_ij u_ij, g_{i,j+1} = g_ij v_ij from g_00 = seed
/// row by row and checks the column-by-column propagation against it. Throws
/// HolonomyError when a plaquette defect exceeds tol.
Reconstruction reconstruct(const GridLayout& grid, const ReducedSection& y, const GroupElement& seed,
                           double tol = kAdmissibilityTolerance);

/// Variation of reduce(g) induced by dg_ij = g_ij theta_ij, in left-log form:
/// u^{-1} du = theta_{i+1,j} - Ad_{u^{-1}} theta_ij and the same for v.
Variation reduced_variation(const GridLayout& grid, const UnreducedField& g, const GaugeField& theta);

/// The two left-hand sides of the multiplier system at (i,j):
///   r1 = R*_u + lambda_ij - Ad*_{v_{i,j-1}} lambda_{i,j-1}
///   r2 = R*_v - lambda_ij + Ad*_{u_{i-1,j}} lambda_{i-1,j}
std::pair<CoAlgebraElement, CoAlgebraElement> multiplier_system_residual(
    const ReducedLagrangian& l, const GridLayout& grid, const ReducedSection& y,
    const Multiplier& lambda, int i, int j);

class RecoveryConflict : public std::runtime_error {
 public:
  RecoveryConflict(FaceId face, double discrepancy, const std::string& what)
      : std::runtime_error(what), face_(face), discrepancy_(discrepancy) {}
  FaceId face() const { return face_; }
  double discrepancy() const { return discrepancy_; }

 private:
  FaceId face_;
  double discrepancy_;
};

struct RecoveryTolerances {
  double ep_tol = 1e-8;
  double cons_tol = 1e-9;
  double adm_tol = kAdmissibilityTolerance;
};

struct RecoveryResult {
  Multiplier lambda;
  double consistency = 0.0;  // max discrepancy on faces reached twice
  FaceId worst_face = -1;
  int checked_faces = 0;
};

/// Sweeps the interior vertices in decreasing lexicographic order starting
/// from lambda(Delta_{W-1,H-1}) = seed. Delta_00 touches no interior vertex
/// and is set to zero.
RecoveryResult recover_multipliers(const ReducedLagrangian& l, const GridLayout& grid,
                                   const ReducedSection& y, const CoAlgebraElement& seed,
                                   const RecoveryTolerances& tol = {});

struct EliminationDefect {
  int i = 0;
  int j = 0;
  double ep_direct = 0.0;       // ||ep_residual||
  /// ||r1 + r2 - Ad*_{u_{i-1,j}} r1(i-1,j) - Ad*_{v_{i,j-1}} r2(i,j-1)||, the EP
  /// residual assembled from the multiplier system once the cross term cancels.
  double ep_combination = 0.0;
  double identity_defect = 0.0; // ||combination + cross term - direct||, any section
  double cancellation = 0.0;    // ||Ad*_{v_{i,j-1}} Ad*_{u_{i-1,j-1}} - Ad*_{u_{i-1,j}} Ad*_{v_{i-1,j-1}}||
};

std::vector<EliminationDefect> elimination_check(const ReducedLagrangian& l, const GridLayout& grid,
                                                 const ReducedSection& y, const Multiplier& lambda);

}  // namespace lgc
