#include "lgc/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>

namespace lgc::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Missing input file (exit code 2).
class MissingFile : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A verification check failed (exit code 1).
class SuiteFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open '" + path + "'");
  return in;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read_key(const json& obj, const char* key, T& into) {
  if (!obj.contains(key)) return;
  try {
    into = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, {"n", "grid", "boundary", "solver", "tolerances", "verify", "output_dir"}, "config");
  RunConfig c;
  read_key(root, "n", c.n);
  if (root.contains("grid")) {
    const json& g = root["grid"];
    if (!g.is_array() || g.size() != 2) throw ConfigError("config key 'grid': expected [W, H]");
    read_key(json{{"w", g[0]}}, "w", c.width);
    read_key(json{{"h", g[1]}}, "h", c.height);
  }
  if (root.contains("boundary")) {
    const json& b = root["boundary"];
    check_keys(b, {"kind", "seed", "scale", "path"}, "boundary");
    std::string kind = "random";
    read_key(b, "kind", kind);
    if (kind == "identity") {
      c.boundary = BoundaryKind::identity;
    } else if (kind == "random") {
      c.boundary = BoundaryKind::random;
    } else if (kind == "file") {
      c.boundary = BoundaryKind::file;
    } else {
      throw ConfigError("boundary.kind must be identity, random or file");
    }
    read_key(b, "seed", c.seed);
    read_key(b, "scale", c.scale);
    read_key(b, "path", c.boundary_path);
  }
  if (root.contains("solver")) {
    const json& s = root["solver"];
    check_keys(s, {"max_iterations", "g_tol", "newton_refinement", "initializer"}, "solver");
    read_key(s, "max_iterations", c.max_iterations);
    read_key(s, "g_tol", c.g_tol);
    read_key(s, "newton_refinement", c.newton_refinement);
    std::string init = "blend";
    read_key(s, "initializer", init);
    if (init == "blend") {
      c.initializer = Initializer::blend;
    } else if (init == "identity") {
      c.initializer = Initializer::identity;
    } else {
      throw ConfigError("solver.initializer must be blend or identity");
    }
  }
  if (root.contains("tolerances")) {
    const json& t = root["tolerances"];
    check_keys(t,
               {"tau_group", "tol_adm", "h_L", "h_J", "ep_tol", "cons_tol", "rank_tol", "split_tol",
                "cartan_tol", "flat_tol", "multiplier_tol", "elimination_tol", "cancel_tol",
                "noether_tol", "jacobi_tol", "defect_tol"},
               "tolerances");
    read_key(t, "tau_group", c.tol.tau_group);
    read_key(t, "tol_adm", c.tol.tol_adm);
    read_key(t, "h_L", c.tol.h_L);
    read_key(t, "h_J", c.tol.h_J);
    read_key(t, "ep_tol", c.tol.ep_tol);
    read_key(t, "cons_tol", c.tol.cons_tol);
    read_key(t, "rank_tol", c.tol.rank_tol);
    read_key(t, "split_tol", c.tol.split_tol);
    read_key(t, "cartan_tol", c.tol.cartan_tol);
    read_key(t, "flat_tol", c.tol.flat_tol);
    read_key(t, "multiplier_tol", c.tol.multiplier_tol);
    read_key(t, "elimination_tol", c.tol.elimination_tol);
    read_key(t, "cancel_tol", c.tol.cancel_tol);
    read_key(t, "noether_tol", c.tol.noether_tol);
    read_key(t, "jacobi_tol", c.tol.jacobi_tol);
    read_key(t, "defect_tol", c.tol.defect_tol);
  }
  if (root.contains("verify")) {
    const json& v = root["verify"];
    check_keys(v, {"instances", "seed"}, "verify");
    read_key(v, "instances", c.instances);
    read_key(v, "seed", c.verify_seed);
  }
  read_key(root, "output_dir", c.output_dir);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in = open_input(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const RunConfig& c) {
  if (c.n < 2 || c.n > 16) throw ConfigError("n must be in [2, 16]");
  if (c.width < 1 || c.height < 1) throw ConfigError("grid dimensions must be positive");
  if (c.width > 64 || c.height > 64) throw ConfigError("grid dimensions are limited to 64");
  if (!(c.scale >= 0.0)) throw ConfigError("boundary.scale must be non-negative");
  if (c.boundary == BoundaryKind::file && c.boundary_path.empty()) {
    throw ConfigError("boundary.kind = file needs boundary.path");
  }
  if (c.max_iterations < 0) throw ConfigError("solver.max_iterations must be >= 0");
  if (!(c.g_tol > 0.0)) throw ConfigError("solver.g_tol must be positive");
  if (c.instances < 1) throw ConfigError("verify.instances must be >= 1");
  const Tolerances& t = c.tol;
  for (double x : {t.tau_group, t.tol_adm, t.h_L, t.h_J, t.ep_tol, t.cons_tol, t.rank_tol, t.split_tol,
                   t.cartan_tol, t.flat_tol, t.multiplier_tol, t.elimination_tol, t.cancel_tol,
                   t.noether_tol, t.jacobi_tol, t.defect_tol}) {
    if (!(x > 0.0)) throw ConfigError("tolerances must be positive");
  }
  if (c.output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

GridLayout grid_of(const RunConfig& c) { return GridLayout{c.width, c.height}; }

SolverConfig solver_config(const RunConfig& c) {
  const GridLayout grid = grid_of(c);
  SolverConfig s;
  s.max_iterations = c.max_iterations;
  s.g_tol = c.g_tol;
  s.newton_refinement = c.newton_refinement;
  s.initializer = c.initializer;
  switch (c.boundary) {
    case BoundaryKind::identity:
      s.boundary = identity_boundary(grid, c.n);
      break;
    case BoundaryKind::random:
      s.boundary = random_boundary(grid, c.n, c.seed, c.scale);
      break;
    case BoundaryKind::file: {
      std::ifstream in = open_input(c.boundary_path);
      FieldHeader h;
      s.boundary = read_section(in, &h);
      if (h.grid.width != c.width || h.grid.height != c.height || h.n != c.n || h.components != 1) {
        throw ConfigError("boundary file does not match n and grid of the config");
      }
      break;
    }
  }
  return s;
}

namespace {

// Shared helpers ------------------------------------------------------------

MetaList header_meta(const RunConfig& c) {
  MetaList m{{"generator", "mt19937_64"}};
  switch (c.boundary) {
    case BoundaryKind::identity:
      m.emplace_back("boundary", "identity");
      break;
    case BoundaryKind::random:
      m.emplace_back("boundary", "random");
      m.emplace_back("seed", std::to_string(c.seed));
      m.emplace_back("scale", format_real(c.scale));
      break;
    case BoundaryKind::file:
      m.emplace_back("boundary", "file:" + c.boundary_path);
      break;
  }
  return m;
}

void put_header(Report& r, const RunConfig& c, const std::string& command) {
  r.set("command", command);
  r.set("n", c.n);
  r.set("grid", fmt::format("{}x{}", c.width, c.height));
  for (const auto& [k, v] : header_meta(c)) r.set(k, v);
  r.set("verify_seed", std::to_string(c.verify_seed));
}

fs::path output_path(const RunConfig& c, const std::string& name) {
  fs::create_directories(c.output_dir);
  return fs::path(c.output_dir) / name;
}

void emit(const Report& r, const RunConfig& c, const std::string& file, std::ostream& out) {
  std::ofstream f(output_path(c, file));
  r.write(f);
  r.write(out);
}

std::string ij(int i, int j) { return fmt::format("({},{})", i, j); }

Section random_section(const GridLayout& grid, int components, int n, std::mt19937_64& rng,
                       double scale) {
  Section y(FiberSignature{components, n}, grid.num_vertices());
  for (VertexId v = 0; v < grid.num_vertices(); ++v) {
    Fiber f;
    for (int k = 0; k < components; ++k) f.push_back(random_group(n, rng, scale));
    y.set(v, std::move(f));
  }
  return y;
}

Multiplier random_multiplier(const GridLayout& grid, int n, std::mt19937_64& rng) {
  Multiplier m(n, grid.num_faces());
  for (FaceId f = 0; f < grid.num_faces(); ++f) m.set(f, CoAlgebraElement(random_algebra(n, rng).matrix()));
  return m;
}

Variation random_variation(const GridLayout& grid, int components, int n, std::mt19937_64& rng) {
  Variation dy(FiberSignature{components, n}, grid.num_vertices());
  for (VertexId v = 0; v < grid.num_vertices(); ++v) {
    FiberVariation f;
    for (int k = 0; k < components; ++k) f.push_back(random_algebra(n, rng));
    dy.set(v, std::move(f));
  }
  return dy;
}

std::shared_ptr<TraceLagrangian> trace_lagrangian() { return std::make_shared<TraceLagrangian>(); }

void check(Report& r, bool& pass, const std::string& key, double value, double tol,
           std::string& worst) {
  r.set(key, value);
  r.set(key + "_tol", tol);
  if (!(value <= tol)) {
    pass = false;
    if (worst.empty()) worst = fmt::format("{} = {:.3e} exceeds {:.1e}", key, value, tol);
  }
}

// Suites --------------------------------------------------------------------

struct SuiteResult {
  Report report;
  bool pass = true;
  std::string worst;
};

SuiteResult suite_split(const RunConfig& c) {
  SuiteResult s;
  s.report.set("anchor", "variational split: face sum of the extended 1-form = interior EL terms + frontier boundary terms");
  const GridLayout grid = grid_of(c);
  const Problem problem = make_reduced_problem(c.width, c.height, c.n, trace_lagrangian());
  std::mt19937_64 rng(c.verify_seed);
  double worst = 0.0;
  std::vector<std::vector<std::string>> rows;
  for (int k = 0; k < c.instances; ++k) {
    const Section y = random_section(grid, 2, c.n, rng, 1.0);
    const Multiplier lambda = random_multiplier(grid, c.n, rng);
    const Variation dy = random_variation(grid, 2, c.n, rng);
    const SplitResult r = variational_split_check(problem, y, lambda, dy);
    const double rel = std::abs(r.lhs - r.rhs) / (1.0 + std::abs(r.lhs));
    worst = std::max(worst, rel);
    rows.push_back({std::to_string(k), format_real(r.lhs), format_real(r.interior),
                    format_real(r.boundary), format_real(rel)});
  }
  s.report.set("instances", c.instances);
  check(s.report, s.pass, "max_relative_defect", worst, c.tol.split_tol, s.worst);
  s.report.add_table("instances", {"instance", "face_sum", "interior", "boundary", "relative_defect"},
                     std::move(rows));
  return s;
}

double relative(const Matrix& a, const Matrix& ref) {
  const double scale = ref.norm();
  return (a - ref).norm() / (scale > 0.0 ? scale : 1.0);
}

SuiteResult suite_cartan(const RunConfig& c) {
  SuiteResult s;
  s.report.set("anchor", "Cartan decomposition: theta o dPhi = sum of per-vertex blocks; plaquette derivatives");
  const GridLayout grid = grid_of(c);
  const Problem problem = make_reduced_problem(c.width, c.height, c.n, trace_lagrangian());
  const PlaquetteConstraint phi;
  const double h = 1e-6;
  std::mt19937_64 rng(c.verify_seed);
  double general = 0.0;
  double closed = 0.0;
  double directional = 0.0;
  double lagrangian = 0.0;
  for (int k = 0; k < c.instances; ++k) {
    const Section y = random_section(grid, 2, c.n, rng, 1.0);
    for (FaceId f = 0; f < grid.num_faces(); ++f) {
      const Jet1 j = jet(*problem.complex, y, f);
      for (int slot = 0; slot < 3; ++slot) {
        general = std::max(general, relative(phi.cartan(j, slot), fd_constraint_cartan(phi, j, slot, h)));
        lagrangian = std::max(lagrangian, relative(problem.lagrangian->cartan(j, slot),
                                                   fd_lagrangian_cartan(*problem.lagrangian, j, slot, h)));
      }
    }
    const UnreducedField g = random_section(grid, 1, c.n, rng, 1.0);
    const ReducedSection yr = reduce(grid, g);
    for (int fj = 0; fj < grid.height; ++fj)
      for (int fi = 0; fi < grid.width; ++fi) {
        const PlaquetteForms forms = constraint_cartan_forms(grid, yr, fi, fj, c.tol.tol_adm);
        const Jet1 j = jet(*problem.complex, yr, grid.face(fi, fj));
        closed = std::max(closed, relative(forms.corner, fd_constraint_cartan(phi, j, 0, h)));
        closed = std::max(closed, relative(forms.east, fd_constraint_cartan(phi, j, 1, h)));
        closed = std::max(closed, relative(forms.north, fd_constraint_cartan(phi, j, 2, h)));
      }
    // Directional check (1/2t) log(Phi(+t) Phi(-t)^{-1}) along a random variation.
    const Variation dy = random_variation(grid, 2, c.n, rng);
    const auto analytic = d_psi(problem, yr, dy);
    const Section plus = yr.moved(dy, h);
    const Section minus = yr.moved(dy, -h);
    for (const auto& [f, a] : analytic) {
      const GroupElement pp = phi.value(jet(*problem.complex, plus, f));
      const GroupElement pm = phi.value(jet(*problem.complex, minus, f));
      const AlgebraElement fd = log_near_identity(pp * pm.inverse()) * (1.0 / (2.0 * h));
      directional = std::max(directional, relative(a.matrix(), fd.matrix()));
    }
  }
  s.report.set("instances", c.instances);
  s.report.set("fd_step", h);
  check(s.report, s.pass, "general_blocks_relative_error", general, c.tol.cartan_tol, s.worst);
  check(s.report, s.pass, "closed_forms_relative_error", closed, c.tol.cartan_tol, s.worst);
  check(s.report, s.pass, "directional_relative_error", directional, c.tol.cartan_tol, s.worst);
  check(s.report, s.pass, "lagrangian_relative_error", lagrangian, c.tol.cartan_tol, s.worst);
  return s;
}

SuiteResult suite_flatness(const RunConfig& c) {
  SuiteResult s;
  s.report.set("anchor", "flatness and reconstruction: reduce and reconstruct are inverse up to the seed");
  const GridLayout grid = grid_of(c);
  std::mt19937_64 rng(c.verify_seed);
  double adm = 0.0;
  double round1 = 0.0;
  double round2 = 0.0;
  double paths = 0.0;
  int injected = 0;
  int detected = 0;
  for (int k = 0; k < c.instances; ++k) {
    const UnreducedField g = random_section(grid, 1, c.n, rng, 1.0);
    const ReducedSection y = reduce(grid, g);
    for (int fj = 0; fj < grid.height; ++fj)
      for (int fi = 0; fi < grid.width; ++fi)
        adm = std::max(adm, distance_to_identity(plaquette_constraint(grid, y, fi, fj)));
    const Reconstruction rec = reconstruct(grid, y, g.at(0)[0], c.tol.tol_adm);
    paths = std::max(paths, rec.path_discrepancy);
    const ReducedSection again = reduce(grid, rec.field);
    for (VertexId v = 0; v < grid.num_vertices(); ++v) {
      round1 = std::max(round1, (rec.field.at(v)[0].matrix() - g.at(v)[0].matrix()).norm());
      for (int comp = 0; comp < 2; ++comp)
        round2 = std::max(round2, (again.at(v)[comp].matrix() - y.at(v)[comp].matrix()).norm());
    }
    // Inject a defect of size >= 1e-6 on one meaningful component.
    std::uniform_int_distribution<int> pick_i(0, grid.width - 1);
    std::uniform_int_distribution<int> pick_j(0, grid.height - 1);
    const int ti = pick_i(rng);
    const int tj = pick_j(rng);
    ReducedSection tampered = y;
    Fiber f = y.at(grid.vertex(ti, tj));
    const double eps = std::pow(10.0, -6.0 + 5.0 * std::uniform_real_distribution<double>(0, 1)(rng));
    f[kU] = f[kU] * exp(basis_element(c.n, 0) * eps);
    tampered.set(grid.vertex(ti, tj), f);
    ++injected;
    try {
      reconstruct(grid, tampered, g.at(0)[0], c.tol.tol_adm);
    } catch (const HolonomyError& e) {
      if (e.face() == grid.face(ti, tj) || (tj > 0 && e.face() == grid.face(ti, tj - 1))) ++detected;
    }
  }
  s.report.set("instances", c.instances);
  check(s.report, s.pass, "max_plaquette_defect", adm, c.tol.flat_tol, s.worst);
  check(s.report, s.pass, "reconstruct_after_reduce", round1, c.tol.flat_tol, s.worst);
  check(s.report, s.pass, "reduce_after_reconstruct", round2, c.tol.flat_tol, s.worst);
  check(s.report, s.pass, "row_vs_column_propagation", paths, c.tol.flat_tol, s.worst);
  s.report.set("tamper_injected", injected);
  s.report.set("tamper_detected", detected);
  if (detected != injected) {
    s.pass = false;
    if (s.worst.empty()) s.worst = fmt::format("{} of {} tampered plaquettes missed", injected - detected, injected);
  }
  return s;
}

struct CriticalPair {
  Solution solution;
  RecoveryResult recovery;
};

CriticalPair critical_pair(const RunConfig& c, const CoAlgebraElement& seed) {
  const SolverConfig sc = solver_config(c);
  Solution sol = solve_unreduced(grid_of(c), sc);
  RecoveryTolerances rt{c.tol.ep_tol, c.tol.cons_tol, c.tol.tol_adm};
  RecoveryResult rec = recover_multipliers(TraceLagrangian(), grid_of(c), sol.reduced, seed, rt);
  return {std::move(sol), std::move(rec)};
}

double max_system_residual(const GridLayout& grid, const ReducedSection& y, const Multiplier& lambda) {
  const TraceLagrangian trace;
  double worst = 0.0;
  for (int j = 1; j < grid.height; ++j)
    for (int i = 1; i < grid.width; ++i) {
      const auto [r1, r2] = multiplier_system_residual(trace, grid, y, lambda, i, j);
      worst = std::max({worst, r1.norm(), r2.norm()});
    }
  return worst;
}

SuiteResult suite_multipliers(const RunConfig& c) {
  SuiteResult s;
  s.report.set("anchor", "multiplier recovery: the Lagrange system holds at every interior vertex; the multiplier is not unique");
  const GridLayout grid = grid_of(c);
  const CriticalPair zero = critical_pair(c, CoAlgebraElement::zero(c.n));
  std::mt19937_64 rng(c.verify_seed);
  const CoAlgebraElement mu(random_algebra(c.n, rng).matrix());
  RecoveryTolerances rt{c.tol.ep_tol, c.tol.cons_tol, c.tol.tol_adm};
  const RecoveryResult other = recover_multipliers(TraceLagrangian(), grid, zero.solution.reduced, mu, rt);
  double gap = 0.0;
  for (FaceId f = 0; f < grid.num_faces(); ++f)
    gap = std::max(gap, (other.lambda.at(f) - zero.recovery.lambda.at(f)).norm());
  s.report.set("ep_residual", zero.solution.report.max_ep_residual);
  check(s.report, s.pass, "system_residual_zero_seed",
        max_system_residual(grid, zero.solution.reduced, zero.recovery.lambda), c.tol.multiplier_tol, s.worst);
  check(s.report, s.pass, "sweep_consistency_zero_seed", zero.recovery.consistency, c.tol.cons_tol, s.worst);
  check(s.report, s.pass, "system_residual_random_seed",
        max_system_residual(grid, zero.solution.reduced, other.lambda), c.tol.multiplier_tol, s.worst);
  check(s.report, s.pass, "sweep_consistency_random_seed", other.consistency, c.tol.cons_tol, s.worst);
  s.report.set("multiplier_gap_between_seeds", gap);
  if (!(gap > 1e-6)) {
    s.pass = false;
    if (s.worst.empty()) s.worst = "distinct seeds gave the same multiplier";
  }
  return s;
}

SuiteResult suite_elimination(const RunConfig& c) {
  SuiteResult s;
  s.report.set("anchor", "multiplier elimination: the coadjoint cross term cancels under flatness");
  const GridLayout grid = grid_of(c);
  const CriticalPair pair = critical_pair(c, CoAlgebraElement::zero(c.n));
  const auto defects = elimination_check(TraceLagrangian(), grid, pair.solution.reduced, pair.recovery.lambda);
  double cancel = 0.0;
  double combo = 0.0;
  double ident = 0.0;
  std::vector<std::vector<std::string>> rows;
  for (const auto& d : defects) {
    cancel = std::max(cancel, d.cancellation);
    combo = std::max(combo, d.ep_combination);
    ident = std::max(ident, d.identity_defect);
    rows.push_back({std::to_string(d.i), std::to_string(d.j), format_real(d.ep_direct),
                    format_real(d.ep_combination), format_real(d.cancellation)});
  }
  check(s.report, s.pass, "max_cancellation_defect", cancel, c.tol.cancel_tol, s.worst);
  check(s.report, s.pass, "max_ep_from_multiplier_system", combo, c.tol.elimination_tol, s.worst);
  s.report.set("max_identity_defect", ident);
  s.report.add_table("vertices", {"i", "j", "ep_direct", "ep_combination", "cancellation"}, std::move(rows));
  return s;
}

SuiteResult suite_noether(const RunConfig& c, bool break_symmetry) {
  SuiteResult s;
  s.report.set("anchor", "Noether: the frontier sum of the extended Cartan forms on a symmetry vanishes");
  const GridLayout grid = grid_of(c);
  const SolverConfig sc = solver_config(c);
  std::mt19937_64 rng(c.verify_seed);
  const AlgebraElement xi = random_algebra(c.n, rng);
  std::optional<Variation> field;
  if (break_symmetry) field = random_variation(grid, 2, c.n, rng);
  const NoetherScenario ns = run_noether_scenario(grid, sc, xi, field ? &*field : nullptr);
  s.report.set("field", std::string(break_symmetry ? "random" : "conjugation"));
  s.report.set("action", ns.action);
  s.report.set("lagrangian_defect", ns.details.lagrangian_defect);
  s.report.set("constraint_defect", ns.details.constraint_defect);
  s.report.set("el_residual", ns.details.el_residual);
  s.report.set("symmetry_checked_along_section_only", ns.details.checked_along_section_only);
  s.report.set("symmetry_ok", ns.details.symmetry_ok);
  if (!ns.details.symmetry_ok) {
    s.pass = false;
    s.worst = "field is not a symmetry along the section (precondition violated)";
  }
  check(s.report, s.pass, "abs_boundary_sum", std::abs(ns.sum),
        c.tol.noether_tol * (1.0 + std::abs(ns.action)), s.worst);
  return s;
}

SuiteResult suite_multisymplectic(const RunConfig& c) {
  SuiteResult s;
  s.report.set("anchor", "multisymplectic form formula: frontier sum of d(extended Cartan forms) on two Jacobi fields");
  const GridLayout grid = grid_of(c);
  const SolverConfig sc = solver_config(c);
  const int d = algebra_dim(c.n);
  const BoundaryBump b1{0, c.height / 2, basis_element(c.n, 0)};
  const BoundaryBump b2{c.width / 2, 0, basis_element(c.n, d - 1)};
  const MultisymplecticScenario ms = run_multisymplectic_scenario(grid, sc, b1, b2, c.tol.h_J);
  s.report.set("bump_1", ij(b1.i, b1.j));
  s.report.set("bump_2", ij(b2.i, b2.j));
  s.report.set("h_J", c.tol.h_J);
  check(s.report, s.pass, "jacobi_residual_1", ms.jacobi_residual_1, c.tol.jacobi_tol, s.worst);
  check(s.report, s.pass, "jacobi_residual_2", ms.jacobi_residual_2, c.tol.jacobi_tol, s.worst);
  s.report.set("admissibility_1", ms.admissibility_1);
  s.report.set("admissibility_2", ms.admissibility_2);
  check(s.report, s.pass, "abs_defect", std::abs(ms.defect), c.tol.defect_tol, s.worst);
  check(s.report, s.pass, "antisymmetry", std::abs(ms.defect + ms.defect_swapped), 1e-12, s.worst);
  check(s.report, s.pass, "diagonal", std::abs(ms.defect_diagonal), 1e-12, s.worst);
  return s;
}

SuiteResult suite_regularity(const RunConfig& c) {
  SuiteResult s;
  s.report.set("anchor", "regularity: dPsi restricted to variations fixed on the frontier is onto");
  const GridLayout grid = grid_of(c);
  const Problem problem = make_reduced_problem(c.width, c.height, c.n, trace_lagrangian());
  std::mt19937_64 rng(c.verify_seed);
  double smallest = std::numeric_limits<double>::infinity();
  RegularityReport last;
  std::vector<std::vector<std::string>> rows;
  for (int k = 0; k < c.instances; ++k) {
    const ReducedSection y = reduce(grid, random_section(grid, 1, c.n, rng, 1.0));
    last = regularity_rank(problem, y, c.tol.rank_tol);
    smallest = std::min(smallest, last.sigma_min);
    rows.push_back({std::to_string(k), format_real(last.sigma_min), last.regular ? "true" : "false"});
  }
  s.report.set("rows", last.rows);
  s.report.set("cols", last.cols);
  s.report.set("structurally_non_surjective", last.structurally_non_surjective);
  s.report.set("sigma_min", smallest);
  s.report.set("rank_tol", c.tol.rank_tol);
  if (!(smallest > c.tol.rank_tol)) {
    s.pass = false;
    s.worst = last.structurally_non_surjective
                  ? fmt::format("structurally non-surjective: {} rows > {} columns", last.rows, last.cols)
                  : fmt::format("sigma_min = {:.3e} <= {:.1e}", smallest, c.tol.rank_tol);
  }
  s.report.add_table("instances", {"instance", "sigma_min", "regular"}, std::move(rows));
  return s;
}

// Commands ------------------------------------------------------------------

int cmd_solve(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const GridLayout grid = grid_of(c);
  Report r;
  put_header(r, c, "solve");
  try {
    const Solution sol = solve_unreduced(grid, solver_config(c));
    const SolveReport& rep = sol.report;
    r.set("converged", rep.converged);
    r.set("iterations", rep.iterations);
    r.set("gradient_iterations", rep.gradient_iterations);
    r.set("newton_iterations", rep.newton_iterations);
    r.set("action", rep.action);
    r.set("gradient_norm", rep.gradient_norm);
    r.set("max_ep_residual", rep.max_ep_residual);
    r.set("max_symmetric_form", rep.max_symmetric_form);
    r.set("max_constraint_residual", rep.max_constraint_residual);
    r.set("ep_tol", c.tol.ep_tol);
    r.set("tol_adm", c.tol.tol_adm);
    std::vector<std::vector<std::string>> rows;
    for (const auto& v : rep.vertices) {
      rows.push_back({std::to_string(v.i), std::to_string(v.j), format_real(v.gradient),
                      format_real(v.ep_residual), format_real(v.symmetric_form)});
    }
    r.add_table("vertices", {"i", "j", "gradient", "ep_residual", "symmetric_form"}, std::move(rows));
    std::vector<std::vector<std::string>> hist;
    for (std::size_t k = 0; k < rep.objective_history.size(); ++k) {
      hist.push_back({std::to_string(k), format_real(rep.objective_history[k])});
    }
    r.add_table("objective_history", {"step", "negative_action"}, std::move(hist));
    {
      std::ofstream f(output_path(c, "field.txt"));
      write_section(f, grid, sol.field, header_meta(c));
    }
    {
      std::ofstream f(output_path(c, "reduced.txt"));
      write_section(f, grid, sol.reduced, header_meta(c));
    }
    emit(r, c, "solve_report.txt", out);
    const bool ok = rep.max_ep_residual <= c.tol.ep_tol && rep.max_constraint_residual <= c.tol.tol_adm;
    if (!ok) err << "solve: post-hoc residuals exceed tolerance\n";
    return ok ? kSuccess : kFailure;
  } catch (const ConvergenceError& e) {
    r.set("converged", false);
    r.set("error", std::string(e.what()));
    std::vector<std::vector<std::string>> hist;
    for (std::size_t k = 0; k < e.history().size(); ++k) {
      hist.push_back({std::to_string(k), format_real(e.history()[k])});
    }
    r.add_table("gradient_history", {"step", "gradient_norm"}, std::move(hist));
    emit(r, c, "solve_report.txt", out);
    err << "solve: " << e.what() << '\n';
    return kFailure;
  }
}

int cmd_verify(const RunConfig& c, const std::string& suite, bool break_symmetry, std::ostream& out,
               std::ostream& err) {
  SuiteResult s;
  if (suite == "split") {
    s = suite_split(c);
  } else if (suite == "cartan") {
    s = suite_cartan(c);
  } else if (suite == "flatness") {
    s = suite_flatness(c);
  } else if (suite == "noether") {
    s = suite_noether(c, break_symmetry);
  } else if (suite == "multisymplectic") {
    s = suite_multisymplectic(c);
  } else if (suite == "multipliers") {
    s = suite_multipliers(c);
  } else if (suite == "elimination") {
    s = suite_elimination(c);
  } else if (suite == "regularity") {
    s = suite_regularity(c);
  } else {
    throw ConfigError("unknown verify suite '" + suite + "'");
  }
  Report r;
  put_header(r, c, "verify " + suite);
  r.set("suite", suite);
  r.set("pass", s.pass);
  if (!s.worst.empty()) r.set("worst", s.worst);
  std::ostringstream body;
  s.report.write(body);
  std::ofstream f(output_path(c, "verify_" + suite + ".txt"));
  r.write(f);
  f << body.str();
  r.write(out);
  out << body.str();
  if (!s.pass) err << "verify " << suite << ": FAILED: " << s.worst << '\n';
  return s.pass ? kSuccess : kFailure;
}

ReducedSection load_reduced(const RunConfig& c, const std::string& path, GridLayout& grid) {
  std::ifstream in = open_input(path);
  FieldHeader h;
  ReducedSection y = read_section(in, &h);
  if (h.components != 2) throw ConfigError("section file must hold (u, v) pairs");
  (void)c;
  grid = h.grid;
  return y;
}

int cmd_reconstruct(const RunConfig& c, const std::string& section_path, std::optional<std::uint64_t> seed,
                    std::ostream& out, std::ostream& err) {
  GridLayout grid;
  const ReducedSection y = load_reduced(c, section_path, grid);
  const int n = y.signature().n;
  GroupElement anchor = GroupElement::identity(n);
  if (seed) {
    std::mt19937_64 rng(*seed);
    anchor = random_group(n, rng, 1.0);
  }
  Report r;
  r.set("command", std::string("reconstruct"));
  r.set("section", section_path);
  r.set("n", n);
  r.set("grid", fmt::format("{}x{}", grid.width, grid.height));
  r.set("generator", std::string("mt19937_64"));
  r.set("anchor_seed", seed ? std::to_string(*seed) : std::string("identity"));
  try {
    const Reconstruction rec = reconstruct(grid, y, anchor, c.tol.tol_adm);
    r.set("max_plaquette_defect", rec.max_plaquette_defect);
    r.set("path_discrepancy", rec.path_discrepancy);
    std::ofstream f(output_path(c, "reconstructed.txt"));
    write_section(f, grid, rec.field, {{"generator", "mt19937_64"},
                                       {"anchor_seed", seed ? std::to_string(*seed) : "identity"}});
    emit(r, c, "reconstruct_report.txt", out);
    return kSuccess;
  } catch (const HolonomyError& e) {
    r.set("error", std::string(e.what()));
    if (e.face() >= 0) {
      const auto [i, j] = grid.face_index(e.face());
      r.set("worst_plaquette", ij(i, j));
      r.set("worst_face_id", e.face());
    }
    r.set("defect", e.defect());
    emit(r, c, "reconstruct_report.txt", out);
    err << "reconstruct: " << e.what() << '\n';
    return kFailure;
  }
}

int cmd_recover(const RunConfig& c, const std::string& section_path, std::optional<std::uint64_t> seed,
                std::ostream& out, std::ostream& err) {
  GridLayout grid;
  const ReducedSection y = load_reduced(c, section_path, grid);
  const int n = y.signature().n;
  CoAlgebraElement mu = CoAlgebraElement::zero(n);
  if (seed) {
    std::mt19937_64 rng(*seed);
    mu = CoAlgebraElement(random_algebra(n, rng).matrix());
  }
  Report r;
  r.set("command", std::string("recover-multipliers"));
  r.set("section", section_path);
  r.set("n", n);
  r.set("grid", fmt::format("{}x{}", grid.width, grid.height));
  r.set("generator", std::string("mt19937_64"));
  r.set("lambda_seed", seed ? std::to_string(*seed) : std::string("zero"));
  const TraceLagrangian trace;
  try {
    const RecoveryResult rec =
        recover_multipliers(trace, grid, y, mu, {c.tol.ep_tol, c.tol.cons_tol, c.tol.tol_adm});
    std::vector<std::vector<std::string>> rows;
    double worst = 0.0;
    for (int j = 1; j < grid.height; ++j)
      for (int i = 1; i < grid.width; ++i) {
        const auto [r1, r2] = multiplier_system_residual(trace, grid, y, rec.lambda, i, j);
        worst = std::max({worst, r1.norm(), r2.norm()});
        rows.push_back({std::to_string(i), std::to_string(j), format_real(r1.norm()), format_real(r2.norm())});
      }
    r.set("consistency", rec.consistency);
    r.set("faces_checked_twice", rec.checked_faces);
    r.set("max_system_residual", worst);
    r.add_table("vertices", {"i", "j", "r1", "r2"}, std::move(rows));
    std::ofstream f(output_path(c, "multipliers.txt"));
    write_multiplier(f, grid, rec.lambda,
                     {{"generator", "mt19937_64"}, {"lambda_seed", seed ? std::to_string(*seed) : "zero"}});
    emit(r, c, "recover_report.txt", out);
    const bool ok = worst <= c.tol.multiplier_tol;
    if (!ok) err << "recover-multipliers: system residual exceeds tolerance\n";
    return ok ? kSuccess : kFailure;
  } catch (const PreconditionViolation& e) {
    err << "recover-multipliers: " << e.what() << '\n';
    return kFailure;
  } catch (const RecoveryConflict& e) {
    const auto [i, j] = grid.face_index(e.face());
    err << "recover-multipliers: " << e.what() << " at plaquette " << ij(i, j) << '\n';
    return kFailure;
  }
}

int cmd_report(const RunConfig& c, const std::string& field_path, std::ostream& out, std::ostream& err) {
  std::ifstream in = open_input(field_path);
  FieldHeader h;
  const UnreducedField g = read_section(in, &h);
  if (h.components != 1) throw ConfigError("report expects an unreduced field (one component)");
  const SolveReport rep = assess_solution(h.grid, g);
  Report r;
  r.set("command", std::string("report"));
  r.set("field", field_path);
  r.set("n", h.n);
  r.set("grid", fmt::format("{}x{}", h.grid.width, h.grid.height));
  for (const auto& [k, v] : h.meta) r.set(k, v);
  r.set("action", rep.action);
  r.set("gradient_norm", rep.gradient_norm);
  r.set("max_ep_residual", rep.max_ep_residual);
  r.set("max_symmetric_form", rep.max_symmetric_form);
  r.set("max_constraint_residual", rep.max_constraint_residual);
  std::vector<std::vector<std::string>> rows;
  for (const auto& v : rep.vertices) {
    rows.push_back({std::to_string(v.i), std::to_string(v.j), format_real(v.ep_residual),
                    format_real(v.symmetric_form)});
  }
  r.add_table("vertices", {"i", "j", "ep_residual", "symmetric_form"}, std::move(rows));
  emit(r, c, "report.txt", out);
  const bool ok = rep.max_ep_residual <= c.tol.ep_tol && rep.max_constraint_residual <= c.tol.tol_adm;
  if (!ok) err << "report: residuals exceed tolerance\n";
  return ok ? kSuccess : kFailure;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discrete Lagrange problems with SO(n)-valued constraints on cellular complexes"};
  app.name("lgc");
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<int> n;
  std::optional<int> width;
  std::optional<int> height;
  std::optional<std::string> boundary;
  std::optional<std::uint64_t> boundary_seed;
  std::optional<double> scale;
  std::optional<std::string> boundary_file;
  std::optional<int> max_iterations;
  std::optional<double> g_tol;
  std::optional<double> ep_tol;
  std::optional<double> cons_tol;
  std::optional<double> tol_adm;
  std::optional<double> rank_tol;
  std::optional<double> h_J;
  std::optional<int> instances;
  std::optional<std::uint64_t> verify_seed;
  std::optional<std::string> output_dir;

  app.add_option("-c,--config", config_path, "JSON configuration file");
  app.add_option("--n", n, "group size n of SO(n)");
  app.add_option("--width", width, "grid width W");
  app.add_option("--height", height, "grid height H");
  app.add_option("--boundary", boundary, "identity | random | file");
  app.add_option("--boundary-seed", boundary_seed, "seed of the random boundary");
  app.add_option("--scale", scale, "scale of the random boundary");
  app.add_option("--boundary-file", boundary_file, "field file with boundary values");
  app.add_option("--max-iterations", max_iterations);
  app.add_option("--g-tol", g_tol);
  app.add_option("--ep-tol", ep_tol);
  app.add_option("--cons-tol", cons_tol);
  app.add_option("--tol-adm", tol_adm);
  app.add_option("--rank-tol", rank_tol);
  app.add_option("--h-j", h_J);
  app.add_option("--instances", instances, "random instances per verify suite");
  app.add_option("--verify-seed", verify_seed, "seed of verify data");
  app.add_option("-o,--output-dir", output_dir);

  auto* solve = app.add_subcommand("solve", "solve the harmonic-map problem with fixed boundary");

  auto* verify = app.add_subcommand("verify", "run an identity suite");
  std::string suite;
  bool break_symmetry = false;
  verify->add_option("suite", suite, "split | cartan | flatness | noether | multisymplectic | multipliers | elimination | regularity")
      ->required();
  verify->add_flag("--break-symmetry", break_symmetry, "noether: use a random field instead of the conjugation field");

  auto* recon = app.add_subcommand("reconstruct", "rebuild the unreduced field from a reduced section");
  std::string section_path;
  std::optional<std::uint64_t> anchor_seed;
  recon->add_option("--section", section_path, "reduced section file")->required();
  recon->add_option("--seed", anchor_seed, "seed of a random anchor value at (0,0); identity when absent");

  auto* recover = app.add_subcommand("recover-multipliers", "recover multipliers on an EP-critical section");
  std::optional<std::uint64_t> lambda_seed;
  recover->add_option("--section", section_path, "reduced section file")->required();
  recover->add_option("--seed", lambda_seed, "seed of a random multiplier on the corner face; zero when absent");

  auto* report = app.add_subcommand("report", "recompute residuals of an unreduced field file");
  std::string field_path;
  report->add_option("--field", field_path, "unreduced field file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (n) c.n = *n;
    if (width) c.width = *width;
    if (height) c.height = *height;
    if (boundary) {
      if (*boundary == "identity") {
        c.boundary = BoundaryKind::identity;
      } else if (*boundary == "random") {
        c.boundary = BoundaryKind::random;
      } else if (*boundary == "file") {
        c.boundary = BoundaryKind::file;
      } else {
        throw ConfigError("--boundary must be identity, random or file");
      }
    }
    if (boundary_seed) c.seed = *boundary_seed;
    if (scale) c.scale = *scale;
    if (boundary_file) {
      c.boundary_path = *boundary_file;
      if (!boundary) c.boundary = BoundaryKind::file;
    }
    if (max_iterations) c.max_iterations = *max_iterations;
    if (g_tol) c.g_tol = *g_tol;
    if (ep_tol) c.tol.ep_tol = *ep_tol;
    if (cons_tol) c.tol.cons_tol = *cons_tol;
    if (tol_adm) c.tol.tol_adm = *tol_adm;
    if (rank_tol) c.tol.rank_tol = *rank_tol;
    if (h_J) c.tol.h_J = *h_J;
    if (instances) c.instances = *instances;
    if (verify_seed) c.verify_seed = *verify_seed;
    if (output_dir) c.output_dir = *output_dir;
    validate(c);

    if (*solve) return cmd_solve(c, out, err);
    if (*verify) return cmd_verify(c, suite, break_symmetry, out, err);
    if (*recon) return cmd_reconstruct(c, section_path, anchor_seed, out, err);
    if (*recover) return cmd_recover(c, section_path, lambda_seed, out, err);
    if (*report) return cmd_report(c, field_path, out, err);
    return kUsage;
  } catch (const MissingFile& e) {
    err << "lgc: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    err << "lgc: configuration error: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError& e) {
    err << "lgc: " << e.what() << '\n';
    return kUsage;
  } catch (const ConvergenceError& e) {
    err << "lgc: " << e.what() << '\n';
    return kFailure;
  } catch (const PreconditionViolation& e) {
    err << "lgc: precondition violated: " << e.what() << '\n';
    return kFailure;
  } catch (const RecoveryConflict& e) {
    err << "lgc: " << e.what() << '\n';
    return kFailure;
  } catch (const HolonomyError& e) {
    err << "lgc: " << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    err << "lgc: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace lgc::cli
