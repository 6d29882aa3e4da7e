#pragma once

#include "lgc/reduction.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lgc {

/// l(u, v) = tr u + tr v with closed-form differentials.
class TraceLagrangian : public ReducedLagrangian {
 public:
  double value(const GroupElement& u, const GroupElement& v) const override;
  CoAlgebraElement left_u(const GroupElement& u, const GroupElement& v) const override;
  CoAlgebraElement left_v(const GroupElement& u, const GroupElement& v) const override;
};

/// The four pulled-back differentials of the trace Lagrangian. Each equals
/// (g^T - g)/2 of its argument, so <mu, E_kl> = g_lk - g_kl.
struct TraceDifferentials {
  CoAlgebraElement right_u;
  CoAlgebraElement left_u;
  CoAlgebraElement right_v;
  CoAlgebraElement left_v;
};

TraceDifferentials trace_differentials(const GroupElement& u, const GroupElement& v);

/// M - M^T with M = u_ij + v_ij - u_{i-1,j} - v_{i,j-1}. Equals -2 times
/// ep_residual for the trace Lagrangian.
Matrix ep_symmetric_form(const GridLayout& grid, const ReducedSection& y, int i, int j);

/// Boundary values on the outer ring of a (W+1) x (H+1) vertex window.
UnreducedField identity_boundary(const GridLayout& grid, int n);
/// exp(scale * xi) with xi coordinates uniform on [-1, 1], drawn from
/// mt19937_64(seed) vertex by vertex in id order over the boundary ring.
UnreducedField random_boundary(const GridLayout& grid, int n, std::uint64_t seed, double scale);

bool is_boundary_vertex(const GridLayout& grid, VertexId v);

enum class Initializer { blend, identity };

struct SolverConfig {
  int max_iterations = 20000;
  double g_tol = 1e-10;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  double initial_step = 1.0;
  double min_step = 1e-16;
  /// Newton iterations with a finite-difference Hessian once the gradient
  /// norm drops below newton_switch or the line search stalls. When off, the
  /// stalled line search continues as steepest descent accepted on gradient
  /// norm decrease.
  bool newton_refinement = true;
  double newton_switch = 1e-6;
  int newton_max_iterations = 25;
  double hessian_step = 1e-5;
  Initializer initializer = Initializer::blend;
  /// Values on the boundary ring; interior entries are ignored.
  UnreducedField boundary;
};

struct VertexResidual {
  int i = 0;
  int j = 0;
  double gradient = 0.0;
  double ep_residual = 0.0;
  double symmetric_form = 0.0;
};

struct SolveReport {
  bool converged = false;
  double action = 0.0;
  int iterations = 0;         // total accepted steps
  int gradient_iterations = 0;
  int newton_iterations = 0;
  double gradient_norm = 0.0;  // max over interior vertices
  double max_ep_residual = 0.0;
  double max_symmetric_form = 0.0;
  double max_constraint_residual = 0.0;
  /// Objective -A after the initializer and after every Armijo-accepted step.
  /// The solver maximizes A, so this sequence is non-increasing. Steps taken
  /// once f no longer resolves the decrease appear only in gradient_history.
  std::vector<double> objective_history;
  /// Gradient norm after every accepted step of every phase.
  std::vector<double> gradient_history;
  std::vector<VertexResidual> vertices;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

struct Solution {
  UnreducedField field;
  ReducedSection reduced;
  SolveReport report;
};

/// Stationary point of A(g) = sum over faces of tr(u_ij) + tr(v_ij) with
/// the boundary ring fixed. Throws ConvergenceError when g_tol is not met.
Solution solve_unreduced(const GridLayout& grid, const SolverConfig& config);

/// Recomputes every residual of the report from the field.
SolveReport assess_solution(const GridLayout& grid, const UnreducedField& g);

/// Left-log form xi - Ad_{g^{-1}} xi of the conjugation field on each component.
Variation conjugation_symmetry_field(const ReducedSection& y, const AlgebraElement& xi);

struct NoetherScenario {
  double sum = 0.0;
  double action = 0.0;
  double threshold = 0.0;  // 1e-8 (1 + |action|)
  NoetherReport details;
  RecoveryResult recovery;
  bool passed = false;
};

/// Solve, recover multipliers with zero seed, sum the boundary term of the
/// conjugation field. `field_override` replaces the conjugation field.
NoetherScenario run_noether_scenario(const GridLayout& grid, const SolverConfig& config,
                                     const AlgebraElement& xi,
                                     const Variation* field_override = nullptr);

struct BoundaryBump {
  int i = 0;
  int j = 0;
  AlgebraElement direction;
};

struct MultisymplecticScenario {
  double defect = 0.0;
  double defect_swapped = 0.0;
  double defect_diagonal = 0.0;  // delta1 paired with itself
  double jacobi_residual_1 = 0.0;
  double jacobi_residual_2 = 0.0;
  double admissibility_1 = 0.0;
  double admissibility_2 = 0.0;
  bool passed = false;
};

/// Jacobi fields are forward difference quotients (step h) of critical pairs
/// whose boundary is bumped by exp(h * direction) at one ring vertex.
MultisymplecticScenario run_multisymplectic_scenario(const GridLayout& grid,
                                                     const SolverConfig& config,
                                                     const BoundaryBump& bump1,
                                                     const BoundaryBump& bump2,
                                                     double h = kJacobiStep);

/// Difference quotient of two critical pairs, (b - a) / h in left-log form.
JacobiDirection difference_quotient(const ReducedSection& a, const Multiplier& la,
                                    const ReducedSection& b, const Multiplier& lb, double h);

}  // namespace lgc
