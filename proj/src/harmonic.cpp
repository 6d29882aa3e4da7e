#include "lgc/harmonic.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace lgc {

namespace {

// (g^T - g)/2, the functional xi -> tr(g xi) = tr(xi g).
CoAlgebraElement trace_pullback(const GroupElement& g) {
  return CoAlgebraElement(Matrix(0.5 * (g.matrix().transpose() - g.matrix())));
}

}  // namespace

double TraceLagrangian::value(const GroupElement& u, const GroupElement& v) const {
  return u.matrix().trace() + v.matrix().trace();
}

CoAlgebraElement TraceLagrangian::left_u(const GroupElement& u, const GroupElement&) const {
  return trace_pullback(u);
}

CoAlgebraElement TraceLagrangian::left_v(const GroupElement&, const GroupElement& v) const {
  return trace_pullback(v);
}

TraceDifferentials trace_differentials(const GroupElement& u, const GroupElement& v) {
  return {trace_pullback(u), trace_pullback(u), trace_pullback(v), trace_pullback(v)};
}

Matrix ep_symmetric_form(const GridLayout& grid, const ReducedSection& y, int i, int j) {
  if (!(1 <= i && i < grid.width && 1 <= j && j < grid.height)) {
    throw std::invalid_argument("ep_symmetric_form: vertex is not interior");
  }
  const auto& here = y.at(grid.vertex(i, j));
  const Matrix m = here[kU].matrix() + here[kV].matrix() -
                   y.at(grid.vertex(i - 1, j))[kU].matrix() - y.at(grid.vertex(i, j - 1))[kV].matrix();
  return m - m.transpose();
}

bool is_boundary_vertex(const GridLayout& grid, VertexId v) {
  const auto [i, j] = grid.vertex_index(v);
  return i == 0 || j == 0 || i == grid.width || j == grid.height;
}

UnreducedField identity_boundary(const GridLayout& grid, int n) {
  UnreducedField b(FiberSignature{1, n}, grid.num_vertices());
  for (VertexId v = 0; v < grid.num_vertices(); ++v)
    if (is_boundary_vertex(grid, v)) b.set(v, {GroupElement::identity(n)});
  return b;
}

UnreducedField random_boundary(const GridLayout& grid, int n, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  UnreducedField b(FiberSignature{1, n}, grid.num_vertices());
  for (VertexId v = 0; v < grid.num_vertices(); ++v)
    if (is_boundary_vertex(grid, v)) b.set(v, {random_group(n, rng, scale)});
  return b;
}

// Solver -------------------------------------------------------------------

namespace {

struct State {
  const GridLayout& grid;
  int n;
  std::vector<Matrix> g;              // per vertex
  std::vector<VertexId> interior;     // row-major order
};

double objective(const State& s) {
  // -A(g) = -sum over faces of tr(g_ij^T g_{i+1,j}) + tr(g_ij^T g_{i,j+1}).
  double a = 0.0;
  for (int j = 0; j < s.grid.height; ++j)
    for (int i = 0; i < s.grid.width; ++i) {
      const Matrix& c = s.g[s.grid.vertex(i, j)];
      a += c.cwiseProduct(s.g[s.grid.vertex(i + 1, j)]).sum();
      a += c.cwiseProduct(s.g[s.grid.vertex(i, j + 1)]).sum();
    }
  return -a;
}

// Gradient of -A at interior vertex v in dual coordinates. It equals the EP
// residual R*_u + R*_v - L*_{u_w} - L*_{v_s} of the trace Lagrangian.
Vector vertex_gradient(const State& s, VertexId v) {
  const auto [i, j] = s.grid.vertex_index(v);
  const Matrix& c = s.g[v];
  const Matrix u = c.transpose() * s.g[s.grid.vertex(i + 1, j)];
  const Matrix vv = c.transpose() * s.g[s.grid.vertex(i, j + 1)];
  const Matrix& w = s.g[s.grid.vertex(i - 1, j)];
  const Matrix& so = s.g[s.grid.vertex(i, j - 1)];
  const Matrix uw = w.transpose() * c;
  const Matrix vs = so.transpose() * c;
  const Matrix m = u + vv - uw - vs;
  return dual_coords(CoAlgebraElement(Matrix(0.5 * (m.transpose() - m))));
}

Vector full_gradient(const State& s) {
  const int d = algebra_dim(s.n);
  Vector out(d * static_cast<int>(s.interior.size()));
  for (std::size_t k = 0; k < s.interior.size(); ++k) out.segment(k * d, d) = vertex_gradient(s, s.interior[k]);
  return out;
}

double max_vertex_norm(const Vector& grad, int d) {
  double worst = 0.0;
  for (int k = 0; k < grad.size() / d; ++k) worst = std::max(worst, grad.segment(k * d, d).norm());
  return worst;
}

void apply_step(State& s, const Vector& x) {
  const int d = algebra_dim(s.n);
  for (std::size_t k = 0; k < s.interior.size(); ++k) {
    const VertexId v = s.interior[k];
    s.g[v] = s.g[v] * exp(algebra_from_coords(s.n, x.segment(k * d, d))).matrix();
  }
}

Matrix fd_hessian(State& s, double h) {
  const int d = algebra_dim(s.n);
  const int m = d * static_cast<int>(s.interior.size());
  Matrix hess(m, m);
  for (std::size_t k = 0; k < s.interior.size(); ++k) {
    const VertexId v = s.interior[k];
    const Matrix base = s.g[v];
    for (int a = 0; a < d; ++a) {
      const AlgebraElement e = basis_element(s.n, a);
      s.g[v] = base * exp(e * h).matrix();
      const Vector plus = full_gradient(s);
      s.g[v] = base * exp(e * -h).matrix();
      const Vector minus = full_gradient(s);
      hess.col(k * d + a) = (plus - minus) / (2.0 * h);
    }
    s.g[v] = base;
  }
  return hess;
}

void initialize(State& s, const SolverConfig& cfg) {
  const int W = s.grid.width;
  const int H = s.grid.height;
  for (VertexId v : s.interior) {
    if (cfg.initializer == Initializer::identity) {
      s.g[v] = Matrix::Identity(s.n, s.n);
      continue;
    }
    const auto [i, j] = s.grid.vertex_index(v);
    const double x = static_cast<double>(i) / W;
    const double y = static_cast<double>(j) / H;
    const Matrix avg = 0.5 * ((1.0 - x) * s.g[s.grid.vertex(0, j)] + x * s.g[s.grid.vertex(W, j)] +
                              (1.0 - y) * s.g[s.grid.vertex(i, 0)] + y * s.g[s.grid.vertex(i, H)]);
    try {
      s.g[v] = project_to_group(avg).matrix();
    } catch (const std::domain_error&) {
      s.g[v] = Matrix::Identity(s.n, s.n);
    }
  }
}

UnreducedField to_field(const State& s) {
  UnreducedField out(FiberSignature{1, s.n}, s.grid.num_vertices());
  for (VertexId v = 0; v < s.grid.num_vertices(); ++v) out.set(v, {GroupElement::trusted(s.g[v])});
  return out;
}

}  // namespace

SolveReport assess_solution(const GridLayout& grid, const UnreducedField& g) {
  SolveReport rep;
  const TraceLagrangian trace;
  const ReducedSection y = reduce(grid, g);
  for (int j = 0; j < grid.height; ++j)
    for (int i = 0; i < grid.width; ++i) {
      const auto& f = y.at(grid.vertex(i, j));
      rep.action += trace.value(f[kU], f[kV]);
      rep.max_constraint_residual = std::max(
          rep.max_constraint_residual, distance_to_identity(plaquette_constraint(grid, y, i, j)));
    }
  for (int j = 1; j < grid.height; ++j)
    for (int i = 1; i < grid.width; ++i) {
      VertexResidual r;
      r.i = i;
      r.j = j;
      const CoAlgebraElement ep = ep_residual(trace, grid, y, i, j);
      r.ep_residual = ep.norm();
      r.gradient = dual_coords(ep).norm();
      r.symmetric_form = ep_symmetric_form(grid, y, i, j).norm();
      rep.gradient_norm = std::max(rep.gradient_norm, r.gradient);
      rep.max_ep_residual = std::max(rep.max_ep_residual, r.ep_residual);
      rep.max_symmetric_form = std::max(rep.max_symmetric_form, r.symmetric_form);
      rep.vertices.push_back(r);
    }
  return rep;
}

Solution solve_unreduced(const GridLayout& grid, const SolverConfig& cfg) {
  if (!(cfg.g_tol > 0.0)) throw std::invalid_argument("solver: g_tol must be positive");
  if (cfg.max_iterations < 0) throw std::invalid_argument("solver: max_iterations must be >= 0");
  if (cfg.boundary.num_vertices() != grid.num_vertices() || cfg.boundary.signature().components != 1) {
    throw std::invalid_argument("solver: boundary data does not match the grid");
  }
  const int n = cfg.boundary.signature().n;
  State s{grid, n, std::vector<Matrix>(grid.num_vertices()), {}};
  for (VertexId v = 0; v < grid.num_vertices(); ++v) {
    if (is_boundary_vertex(grid, v)) {
      if (!cfg.boundary.has(v)) {
        const auto [i, j] = grid.vertex_index(v);
        throw std::invalid_argument("solver: no boundary value at (" + std::to_string(i) + "," +
                                    std::to_string(j) + ")");
      }
      s.g[v] = cfg.boundary.at(v)[0].matrix();
    } else {
      s.interior.push_back(v);
    }
  }
  initialize(s, cfg);

  const int d = algebra_dim(n);
  SolveReport rep;
  double f = objective(s);
  Vector grad = full_gradient(s);
  double gnorm = s.interior.empty() ? 0.0 : max_vertex_norm(grad, d);
  rep.objective_history.push_back(f);
  rep.gradient_history.push_back(gnorm);

  double step = cfg.initial_step;
  while (gnorm > cfg.g_tol && rep.iterations < cfg.max_iterations) {
    if (cfg.newton_refinement && gnorm < cfg.newton_switch) break;
    const double slope = grad.squaredNorm();
    bool accepted = false;
    bool resolved = true;
    while (step >= cfg.min_step) {
      State trial = s;
      apply_step(trial, -step * grad);
      const double ft = objective(trial);
      if (ft <= f - cfg.armijo_c1 * step * slope) {
        s.g = std::move(trial.g);
        resolved = f - ft > 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f));
        f = ft;
        accepted = true;
        break;
      }
      step *= cfg.backtrack;
    }
    if (!accepted) break;
    grad = full_gradient(s);
    gnorm = max_vertex_norm(grad, d);
    ++rep.iterations;
    ++rep.gradient_iterations;
    rep.objective_history.push_back(f);
    rep.gradient_history.push_back(gnorm);
    step = std::min(cfg.initial_step, step / cfg.backtrack);
    // Decrease below the rounding of f: Armijo can no longer tell steps apart.
    if (!resolved) break;
  }

  if (!cfg.newton_refinement) {
    // Steepest descent certified by gradient-norm decrease instead of f.
    while (gnorm > cfg.g_tol && rep.iterations < cfg.max_iterations) {
      bool accepted = false;
      while (step >= cfg.min_step) {
        State trial = s;
        apply_step(trial, -step * grad);
        const Vector gt = full_gradient(trial);
        const double nt = max_vertex_norm(gt, d);
        if (nt < gnorm) {
          s.g = std::move(trial.g);
          grad = gt;
          gnorm = nt;
          accepted = true;
          break;
        }
        step *= cfg.backtrack;
      }
      if (!accepted) break;
      ++rep.iterations;
      ++rep.gradient_iterations;
      rep.gradient_history.push_back(gnorm);
      step = std::min(cfg.initial_step, step / cfg.backtrack);
    }
  }

  if (cfg.newton_refinement) {
    while (gnorm > cfg.g_tol && rep.newton_iterations < cfg.newton_max_iterations &&
           rep.iterations < cfg.max_iterations) {
      const Matrix hess = fd_hessian(s, cfg.hessian_step);
      const Vector dx = hess.fullPivLu().solve(-grad);
      if (!dx.allFinite()) break;
      bool accepted = false;
      double scale = 1.0;
      for (int tries = 0; tries < 30; ++tries, scale *= 0.5) {
        State trial = s;
        apply_step(trial, scale * dx);
        const Vector gt = full_gradient(trial);
        const double nt = max_vertex_norm(gt, d);
        if (nt < gnorm) {
          s.g = std::move(trial.g);
          grad = gt;
          gnorm = nt;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
      ++rep.iterations;
      ++rep.newton_iterations;
      rep.gradient_history.push_back(gnorm);
    }
  }

  Solution sol{to_field(s), ReducedSection(FiberSignature{2, n}, grid.num_vertices()), {}};
  SolveReport post = assess_solution(grid, sol.field);
  post.iterations = rep.iterations;
  post.gradient_iterations = rep.gradient_iterations;
  post.newton_iterations = rep.newton_iterations;
  post.objective_history = std::move(rep.objective_history);
  post.gradient_history = std::move(rep.gradient_history);
  post.converged = gnorm <= cfg.g_tol;
  if (!post.converged) {
    throw ConvergenceError("solver stopped after " + std::to_string(post.iterations) +
                               " iterations with gradient norm " + fmt::format("{:.3e}", gnorm),
                           post.gradient_history);
  }
  sol.reduced = reduce(grid, sol.field);
  sol.report = std::move(post);
  return sol;
}

// Scenarios ----------------------------------------------------------------

Variation conjugation_symmetry_field(const ReducedSection& y, const AlgebraElement& xi) {
  Variation out(y.signature(), y.num_vertices());
  for (VertexId v = 0; v < y.num_vertices(); ++v) {
    if (!y.has(v)) continue;
    FiberVariation f;
    for (const auto& g : y.at(v)) f.push_back(xi - adjoint(g.inverse(), xi));
    out.set(v, std::move(f));
  }
  return out;
}

NoetherScenario run_noether_scenario(const GridLayout& grid, const SolverConfig& config,
                                     const AlgebraElement& xi, const Variation* field_override) {
  const int n = config.boundary.signature().n;
  auto trace = std::make_shared<TraceLagrangian>();
  const Solution sol = solve_unreduced(grid, config);
  NoetherScenario out;
  out.recovery = recover_multipliers(*trace, grid, sol.reduced, CoAlgebraElement::zero(n));
  const Problem problem = make_reduced_problem(grid.width, grid.height, n, trace);
  const Variation field = field_override ? *field_override : conjugation_symmetry_field(sol.reduced, xi);
  out.details = noether_boundary_sum(problem, sol.reduced, out.recovery.lambda, field);
  out.sum = out.details.sum;
  out.action = sol.report.action;
  out.threshold = 1e-8 * (1.0 + std::abs(out.action));
  out.passed = out.details.symmetry_ok && std::abs(out.sum) <= out.threshold;
  return out;
}

JacobiDirection difference_quotient(const ReducedSection& a, const Multiplier& la,
                                    const ReducedSection& b, const Multiplier& lb, double h) {
  JacobiDirection out{Variation(a.signature(), a.num_vertices()), Multiplier::zeros(la.n(), la.num_faces())};
  for (VertexId v = 0; v < a.num_vertices(); ++v) {
    if (!a.has(v)) continue;
    const auto& fa = a.at(v);
    const auto& fb = b.at(v);
    FiberVariation f;
    for (std::size_t k = 0; k < fa.size(); ++k) f.push_back(log_near_identity(fa[k].inverse() * fb[k]) * (1.0 / h));
    out.dy.set(v, std::move(f));
  }
  for (FaceId f = 0; f < la.num_faces(); ++f) out.dlambda.set(f, (lb.at(f) - la.at(f)) * (1.0 / h));
  return out;
}

MultisymplecticScenario run_multisymplectic_scenario(const GridLayout& grid,
                                                     const SolverConfig& config,
                                                     const BoundaryBump& bump1,
                                                     const BoundaryBump& bump2, double h) {
  const int n = config.boundary.signature().n;
  auto trace = std::make_shared<TraceLagrangian>();
  const CoAlgebraElement seed = CoAlgebraElement::zero(n);

  const Solution base = solve_unreduced(grid, config);
  const Multiplier lambda = recover_multipliers(*trace, grid, base.reduced, seed).lambda;

  auto perturbed = [&](const BoundaryBump& bump) {
    const VertexId v = grid.vertex(bump.i, bump.j);
    if (!is_boundary_vertex(grid, v)) {
      throw std::invalid_argument("boundary bump must sit on the boundary ring");
    }
    SolverConfig c = config;
    c.boundary.set(v, {c.boundary.at(v)[0] * exp(bump.direction * h)});
    const Solution sol = solve_unreduced(grid, c);
    const Multiplier lb = recover_multipliers(*trace, grid, sol.reduced, seed).lambda;
    return difference_quotient(base.reduced, lambda, sol.reduced, lb, h);
  };
  const JacobiDirection d1 = perturbed(bump1);
  const JacobiDirection d2 = perturbed(bump2);

  const Problem problem = make_reduced_problem(grid.width, grid.height, n, trace);
  MultisymplecticScenario out;
  const JacobiReport j1 = jacobi_residual(problem, base.reduced, lambda, d1, h);
  const JacobiReport j2 = jacobi_residual(problem, base.reduced, lambda, d2, h);
  out.jacobi_residual_1 = j1.residual;
  out.jacobi_residual_2 = j2.residual;
  out.admissibility_1 = j1.admissibility_defect;
  out.admissibility_2 = j2.admissibility_defect;
  out.defect = multisymplectic_defect(problem, base.reduced, lambda, d1, d2, h);
  out.defect_swapped = multisymplectic_defect(problem, base.reduced, lambda, d2, d1, h);
  out.defect_diagonal = multisymplectic_defect(problem, base.reduced, lambda, d1, d1, h);
  out.passed = out.jacobi_residual_1 <= 1e-4 && out.jacobi_residual_2 <= 1e-4 &&
               std::abs(out.defect) <= 1e-4 &&
               std::abs(out.defect + out.defect_swapped) <= 1e-12 * std::max(1.0, std::abs(out.defect)) &&
               std::abs(out.defect_diagonal) <= 1e-12;
  return out;
}

}  // namespace lgc
