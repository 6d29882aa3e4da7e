#include "lgc/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lgc {

namespace {

std::string ij(int i, int j) { return "(" + std::to_string(i) + "," + std::to_string(j) + ")"; }

void require_interior(const GridLayout& grid, int i, int j) {
  if (!(1 <= i && i < grid.width && 1 <= j && j < grid.height)) {
    throw std::invalid_argument("vertex " + ij(i, j) + " is not interior to the grid");
  }
}

void require_face(const GridLayout& grid, int i, int j) {
  if (!grid.has_face(i, j)) throw std::invalid_argument("face " + ij(i, j) + " is outside the window");
}

void require_layout(const GridLayout& grid, const Section& s, int components) {
  if (s.num_vertices() != grid.num_vertices()) {
    throw std::invalid_argument("field does not match the grid vertex count");
  }
  if (s.signature().components != components) {
    throw std::invalid_argument("field has " + std::to_string(s.signature().components) +
                                " components, expected " + std::to_string(components));
  }
}

const GroupElement& U(const GridLayout& grid, const ReducedSection& y, int i, int j) {
  return y.at(grid.vertex(i, j))[kU];
}
const GroupElement& V(const GridLayout& grid, const ReducedSection& y, int i, int j) {
  return y.at(grid.vertex(i, j))[kV];
}

// Ad*_g as a matrix on dual coordinates.
Matrix coadjoint_matrix(const GroupElement& g) {
  const int n = g.dim();
  const int d = algebra_dim(n);
  Matrix m(d, d);
  for (int a = 0; a < d; ++a)
    m.col(a) = dual_coords(coadjoint(g, coalgebra_from_dual_coords(n, Vector::Unit(d, a))));
  return m;
}

// r1 and r2 without the interior requirement; needs i >= 1 for r2 and j >= 1 for r1.
CoAlgebraElement r1_at(const ReducedLagrangian& l, const GridLayout& grid, const ReducedSection& y,
                       const Multiplier& lambda, int i, int j) {
  const auto& u = U(grid, y, i, j);
  const auto& v = V(grid, y, i, j);
  return l.right_u(u, v) + lambda.at(grid.face(i, j)) -
         coadjoint(V(grid, y, i, j - 1), lambda.at(grid.face(i, j - 1)));
}

CoAlgebraElement r2_at(const ReducedLagrangian& l, const GridLayout& grid, const ReducedSection& y,
                       const Multiplier& lambda, int i, int j) {
  const auto& u = U(grid, y, i, j);
  const auto& v = V(grid, y, i, j);
  return l.right_v(u, v) - lambda.at(grid.face(i, j)) +
         coadjoint(U(grid, y, i - 1, j), lambda.at(grid.face(i - 1, j)));
}

}  // namespace

// ReducedLagrangian ----------------------------------------------------------

namespace {

template <class Eval>
CoAlgebraElement fd_left(int n, double h, Eval&& eval) {
  const int d = algebra_dim(n);
  Vector f(d);
  for (int a = 0; a < d; ++a) {
    const AlgebraElement e = basis_element(n, a);
    f(a) = (eval(exp(e * h)) - eval(exp(e * -h))) / (2.0 * h);
  }
  return coalgebra_from_dual_coords(n, f);
}

}  // namespace

CoAlgebraElement ReducedLagrangian::left_u(const GroupElement& u, const GroupElement& v) const {
  return fd_left(u.dim(), fd_step_, [&](const GroupElement& b) { return value(u * b, v); });
}

CoAlgebraElement ReducedLagrangian::left_v(const GroupElement& u, const GroupElement& v) const {
  return fd_left(v.dim(), fd_step_, [&](const GroupElement& b) { return value(u, v * b); });
}

CoAlgebraElement ReducedLagrangian::right_u(const GroupElement& u, const GroupElement& v) const {
  return coadjoint(u.inverse(), left_u(u, v));
}

CoAlgebraElement ReducedLagrangian::right_v(const GroupElement& u, const GroupElement& v) const {
  return coadjoint(v.inverse(), left_v(u, v));
}

ReducedLagrangianDensity::ReducedLagrangianDensity(std::shared_ptr<const ReducedLagrangian> l)
    : LagrangianDensity(l ? l->fd_step() : 1e-6), l_(std::move(l)) {
  if (!l_) throw std::invalid_argument("ReducedLagrangianDensity: null Lagrangian");
}

double ReducedLagrangianDensity::value(const Jet1& jet) const {
  const auto& f = jet.values.at(0);
  return l_->value(f[kU], f[kV]);
}

Covector ReducedLagrangianDensity::cartan(const Jet1& jet, int slot) const {
  const auto& f = jet.values.at(0);
  const int d = algebra_dim(f[kU].dim());
  Covector out = Covector::Zero(2 * d);
  if (slot == 0) {
    out.head(d) = dual_coords(l_->left_u(f[kU], f[kV]));
    out.tail(d) = dual_coords(l_->left_v(f[kU], f[kV]));
  }
  return out;
}

// Plaquette constraint -------------------------------------------------------

namespace {

struct Corners {
  const GroupElement& a;  // u_ij
  const GroupElement& b;  // v_{i+1,j}
  const GroupElement& c;  // u_{i,j+1}
  const GroupElement& d;  // v_ij
};

Corners corners(const Jet1& jet) {
  if (jet.values.size() != 3) throw std::invalid_argument("plaquette jet needs three vertices");
  return {jet.values[0].at(kU), jet.values[1].at(kV), jet.values[2].at(kU), jet.values[0].at(kV)};
}

}  // namespace

GroupElement PlaquetteConstraint::value(const Jet1& jet) const {
  const Corners k = corners(jet);
  return k.a * k.b * k.c.inverse() * k.d.inverse();
}

CartanBlock PlaquetteConstraint::cartan(const Jet1& jet, int slot) const {
  const Corners k = corners(jet);
  const int d = algebra_dim(k.a.dim());
  CartanBlock out = CartanBlock::Zero(d, 2 * d);
  const GroupElement dc = k.d * k.c;
  switch (slot) {
    case 0:
      out.leftCols(d) = adjoint_matrix(dc * k.b.inverse());
      out.rightCols(d) = -adjoint_matrix(k.d);
      break;
    case 1:
      out.rightCols(d) = adjoint_matrix(dc);
      break;
    case 2:
      out.leftCols(d) = -adjoint_matrix(dc);
      break;
    default:
      throw std::invalid_argument("plaquette slot out of range");
  }
  return out;
}

Problem make_reduced_problem(int width, int height, int n,
                             std::shared_ptr<const ReducedLagrangian> lagrangian) {
  auto complex = std::make_shared<const CellComplex>(build_triangulated_grid(width, height));
  FaceSet faces = FaceSet::all(*complex);
  return Problem(complex, FiberSignature{2, n},
                 std::make_shared<ReducedLagrangianDensity>(std::move(lagrangian)),
                 std::make_shared<PlaquetteConstraint>(), std::move(faces));
}

const GridLayout& require_grid(const Problem& problem) {
  if (!problem.complex->grid()) throw std::invalid_argument("problem is not posed on a grid");
  return *problem.complex->grid();
}

// Reduce / reconstruct -------------------------------------------------------

ReducedSection reduce(const GridLayout& grid, const UnreducedField& g) {
  require_layout(grid, g, 1);
  const int n = g.signature().n;
  ReducedSection y(FiberSignature{2, n}, grid.num_vertices());
  const GroupElement id = GroupElement::identity(n);
  for (int j = 0; j <= grid.height; ++j)
    for (int i = 0; i <= grid.width; ++i) {
      const VertexId vid = grid.vertex(i, j);
      const GroupElement& gi = g.at(vid)[0];
      const GroupElement ginv = gi.inverse();
      GroupElement u = i < grid.width ? ginv * g.at(grid.vertex(i + 1, j))[0] : id;
      GroupElement v = j < grid.height ? ginv * g.at(grid.vertex(i, j + 1))[0] : id;
      y.set(vid, {std::move(u), std::move(v)});
    }
  return y;
}

GroupElement plaquette_constraint(const GridLayout& grid, const ReducedSection& y, int i, int j) {
  require_face(grid, i, j);
  require_layout(grid, y, 2);
  return U(grid, y, i, j) * V(grid, y, i + 1, j) * U(grid, y, i, j + 1).inverse() *
         V(grid, y, i, j).inverse();
}

PlaquetteForms constraint_cartan_forms(const GridLayout& grid, const ReducedSection& y, int i,
                                       int j, double tol) {
  const double defect = distance_to_identity(plaquette_constraint(grid, y, i, j));
  if (!(defect <= tol)) {
    throw std::invalid_argument("constraint_cartan_forms: face " + ij(i, j) +
                                " is not admissible (defect " + std::to_string(defect) + ")");
  }
  const Matrix adu = adjoint_matrix(U(grid, y, i, j));
  const Matrix adv = adjoint_matrix(V(grid, y, i, j));
  const int d = static_cast<int>(adu.rows());
  PlaquetteForms out{CartanBlock::Zero(d, 2 * d), CartanBlock::Zero(d, 2 * d),
                     CartanBlock::Zero(d, 2 * d)};
  out.corner.leftCols(d) = adu;
  out.corner.rightCols(d) = -adv;
  out.east.rightCols(d) = adu * adjoint_matrix(V(grid, y, i + 1, j));
  out.north.leftCols(d) = -adv * adjoint_matrix(U(grid, y, i, j + 1));
  return out;
}

CoAlgebraElement ep_residual(const ReducedLagrangian& l, const GridLayout& grid,
                             const ReducedSection& y, int i, int j) {
  require_interior(grid, i, j);
  require_layout(grid, y, 2);
  const auto& u = U(grid, y, i, j);
  const auto& v = V(grid, y, i, j);
  return l.right_u(u, v) - l.left_u(U(grid, y, i - 1, j), V(grid, y, i - 1, j)) + l.right_v(u, v) -
         l.left_v(U(grid, y, i, j - 1), V(grid, y, i, j - 1));
}

double max_ep_residual(const ReducedLagrangian& l, const GridLayout& grid, const ReducedSection& y) {
  double worst = 0.0;
  for (int j = 1; j < grid.height; ++j)
    for (int i = 1; i < grid.width; ++i) worst = std::max(worst, ep_residual(l, grid, y, i, j).norm());
  return worst;
}

Reconstruction reconstruct(const GridLayout& grid, const ReducedSection& y, const GroupElement& seed,
                           double tol) {
  require_layout(grid, y, 2);
  Reconstruction out{UnreducedField(FiberSignature{1, seed.dim()}, grid.num_vertices())};
  FaceId worst = -1;
  for (int j = 0; j < grid.height; ++j)
    for (int i = 0; i < grid.width; ++i) {
      const double defect = distance_to_identity(plaquette_constraint(grid, y, i, j));
      if (worst < 0 || defect > out.max_plaquette_defect) {
        out.max_plaquette_defect = defect;
        worst = grid.face(i, j);
      }
    }
  if (worst >= 0 && !(out.max_plaquette_defect <= tol)) {
    const auto [wi, wj] = grid.face_index(worst);
    throw HolonomyError(worst, out.max_plaquette_defect,
                        "holonomy defect " + std::to_string(out.max_plaquette_defect) +
                            " on plaquette " + ij(wi, wj) + " (face " + std::to_string(worst) + ")");
  }

  std::vector<Matrix> row(grid.num_vertices());
  std::vector<Matrix> col(grid.num_vertices());
  for (int j = 0; j <= grid.height; ++j)
    for (int i = 0; i <= grid.width; ++i) {
      const VertexId v = grid.vertex(i, j);
      if (i == 0 && j == 0) {
        row[v] = seed.matrix();
      } else if (i == 0) {
        row[v] = row[grid.vertex(0, j - 1)] * V(grid, y, 0, j - 1).matrix();
      } else {
        row[v] = row[grid.vertex(i - 1, j)] * U(grid, y, i - 1, j).matrix();
      }
    }
  for (int i = 0; i <= grid.width; ++i)
    for (int j = 0; j <= grid.height; ++j) {
      const VertexId v = grid.vertex(i, j);
      if (i == 0 && j == 0) {
        col[v] = seed.matrix();
      } else if (j == 0) {
        col[v] = col[grid.vertex(i - 1, 0)] * U(grid, y, i - 1, 0).matrix();
      } else {
        col[v] = col[grid.vertex(i, j - 1)] * V(grid, y, i, j - 1).matrix();
      }
    }
  for (VertexId v = 0; v < grid.num_vertices(); ++v) {
    out.path_discrepancy = std::max(out.path_discrepancy, (row[v] - col[v]).norm());
    out.field.set(v, {GroupElement::trusted(row[v])});
  }
  // A flat section cannot disagree by more than the accumulated plaquette
  // defects along the two paths.
  const double allowed = tol * (grid.num_faces() + 1) + 1e-12;
  if (!(out.path_discrepancy <= allowed)) {
    throw HolonomyError(-1, out.path_discrepancy,
                        "row-first and column-first propagation disagree by " +
                            std::to_string(out.path_discrepancy));
  }
  return out;
}

Variation reduced_variation(const GridLayout& grid, const UnreducedField& g, const GaugeField& theta) {
  require_layout(grid, g, 1);
  if (static_cast<int>(theta.size()) != grid.num_vertices()) {
    throw std::invalid_argument("gauge field does not match the grid vertex count");
  }
  const int n = g.signature().n;
  const ReducedSection y = reduce(grid, g);
  Variation out(FiberSignature{2, n}, grid.num_vertices());
  const AlgebraElement zero = AlgebraElement::zero(n);
  for (int j = 0; j <= grid.height; ++j)
    for (int i = 0; i <= grid.width; ++i) {
      const VertexId vid = grid.vertex(i, j);
      const auto& t = theta[vid];
      AlgebraElement du = zero;
      AlgebraElement dv = zero;
      if (i < grid.width) {
        du = theta[grid.vertex(i + 1, j)] - adjoint(U(grid, y, i, j).inverse(), t);
      }
      if (j < grid.height) {
        dv = theta[grid.vertex(i, j + 1)] - adjoint(V(grid, y, i, j).inverse(), t);
      }
      out.set(vid, {du, dv});
    }
  return out;
}

// Multipliers ----------------------------------------------------------------

std::pair<CoAlgebraElement, CoAlgebraElement> multiplier_system_residual(
    const ReducedLagrangian& l, const GridLayout& grid, const ReducedSection& y,
    const Multiplier& lambda, int i, int j) {
  require_interior(grid, i, j);
  require_layout(grid, y, 2);
  return {r1_at(l, grid, y, lambda, i, j), r2_at(l, grid, y, lambda, i, j)};
}

RecoveryResult recover_multipliers(const ReducedLagrangian& l, const GridLayout& grid,
                                   const ReducedSection& y, const CoAlgebraElement& seed,
                                   const RecoveryTolerances& tol) {
  require_layout(grid, y, 2);
  const int n = y.signature().n;
  if (seed.dim() != n) throw std::invalid_argument("multiplier seed has the wrong size");

  double adm = 0.0;
  for (int j = 0; j < grid.height; ++j)
    for (int i = 0; i < grid.width; ++i)
      adm = std::max(adm, distance_to_identity(plaquette_constraint(grid, y, i, j)));
  if (!(adm <= tol.adm_tol)) {
    throw PreconditionViolation("recover_multipliers: section is not admissible (defect " +
                                std::to_string(adm) + ")");
  }
  const double ep = max_ep_residual(l, grid, y);
  if (!(ep <= tol.ep_tol)) {
    throw PreconditionViolation("recover_multipliers: EP residual " + std::to_string(ep) +
                                " exceeds ep_tol");
  }

  RecoveryResult out{Multiplier(n, grid.num_faces())};
  if (grid.width < 2 || grid.height < 2) {
    for (FaceId f = 0; f < grid.num_faces(); ++f) out.lambda.set(f, CoAlgebraElement::zero(n));
    if (grid.num_faces() > 0) out.lambda.set(grid.face(grid.width - 1, grid.height - 1), seed);
    return out;
  }
  out.lambda.set(grid.face(grid.width - 1, grid.height - 1), seed);

  auto assign = [&](int fi, int fj, const CoAlgebraElement& value) {
    const FaceId f = grid.face(fi, fj);
    if (!out.lambda.has(f)) {
      out.lambda.set(f, value);
      return;
    }
    const double gap = (out.lambda.at(f) - value).norm();
    ++out.checked_faces;
    if (out.worst_face < 0 || gap > out.consistency) {
      out.consistency = gap;
      out.worst_face = f;
    }
    if (!(gap <= tol.cons_tol)) {
      throw RecoveryConflict(f, gap,
                             "multiplier sweep disagrees by " + std::to_string(gap) + " on face " +
                                 ij(fi, fj));
    }
  };

  for (int i = grid.width - 1; i >= 1; --i)
    for (int j = grid.height - 1; j >= 1; --j) {
      const auto& u = U(grid, y, i, j);
      const auto& v = V(grid, y, i, j);
      const CoAlgebraElement& here = out.lambda.at(grid.face(i, j));
      // West: Ad*_{u_{i-1,j}} lambda_{i-1,j} = lambda_ij - R*_v.
      assign(i - 1, j, coadjoint(U(grid, y, i - 1, j).inverse(), here - l.right_v(u, v)));
      // South: Ad*_{v_{i,j-1}} lambda_{i,j-1} = R*_u + lambda_ij.
      assign(i, j - 1, coadjoint(V(grid, y, i, j - 1).inverse(), l.right_u(u, v) + here));
    }
  if (!out.lambda.has(grid.face(0, 0))) out.lambda.set(grid.face(0, 0), CoAlgebraElement::zero(n));
  return out;
}

std::vector<EliminationDefect> elimination_check(const ReducedLagrangian& l, const GridLayout& grid,
                                                 const ReducedSection& y, const Multiplier& lambda) {
  require_layout(grid, y, 2);
  std::vector<EliminationDefect> out;
  for (int j = 1; j < grid.height; ++j)
    for (int i = 1; i < grid.width; ++i) {
      EliminationDefect e;
      e.i = i;
      e.j = j;
      const CoAlgebraElement direct = ep_residual(l, grid, y, i, j);
      const GroupElement& u_w = U(grid, y, i - 1, j);
      const GroupElement& v_s = V(grid, y, i, j - 1);
      const GroupElement& u_sw = U(grid, y, i - 1, j - 1);
      const GroupElement& v_sw = V(grid, y, i - 1, j - 1);
      const CoAlgebraElement& lam_sw = lambda.at(grid.face(i - 1, j - 1));
      const CoAlgebraElement cross =
          coadjoint(v_s, coadjoint(u_sw, lam_sw)) - coadjoint(u_w, coadjoint(v_sw, lam_sw));
      const CoAlgebraElement combination =
          r1_at(l, grid, y, lambda, i, j) + r2_at(l, grid, y, lambda, i, j) -
          coadjoint(u_w, r1_at(l, grid, y, lambda, i - 1, j)) -
          coadjoint(v_s, r2_at(l, grid, y, lambda, i, j - 1));
      e.ep_direct = direct.norm();
      e.ep_combination = combination.norm();
      e.identity_defect = (combination + cross - direct).norm();
      e.cancellation =
          (coadjoint_matrix(v_s) * coadjoint_matrix(u_sw) - coadjoint_matrix(u_w) * coadjoint_matrix(v_sw))
              .norm();
      out.push_back(e);
    }
  return out;
}

}  // namespace lgc
