#pragma once

#include "lgc/harmonic.hpp"
#include "lgc/io.hpp"

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>

namespace lgc::cli {

enum ExitCode : int { kSuccess = 0, kFailure = 1, kUsage = 2 };

/// Bad or inconsistent configuration (exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Tolerances {
  double tau_group = kGroupTolerance;
  double tol_adm = kAdmissibilityTolerance;
  double h_L = 1e-6;
  double h_J = kJacobiStep;
  double ep_tol = 1e-8;
  double cons_tol = 1e-9;
  double rank_tol = 1e-8;
  double split_tol = 1e-12;
  double cartan_tol = 1e-6;
  double flat_tol = 1e-12;
  double multiplier_tol = 1e-10;
  double elimination_tol = 1e-9;
  double cancel_tol = 1e-12;
  double noether_tol = 1e-8;
  double jacobi_tol = 1e-4;
  double defect_tol = 1e-4;
};

enum class BoundaryKind { identity, random, file };

struct RunConfig {
  int n = 3;
  int width = 6;
  int height = 6;
  BoundaryKind boundary = BoundaryKind::random;
  std::uint64_t seed = 42;
  double scale = 0.1;
  std::string boundary_path;
  int max_iterations = 20000;
  double g_tol = 1e-10;
  bool newton_refinement = true;
  Initializer initializer = Initializer::blend;
  Tolerances tol;
  int instances = 20;
  std::uint64_t verify_seed = 7;
  std::string output_dir = "lgc_out";
};

/// Reads the JSON schema documented in the README. Unknown keys are errors.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);
/// Throws ConfigError when a value violates a module precondition.
void validate(const RunConfig& config);

GridLayout grid_of(const RunConfig& config);
/// Solver settings including the boundary values named by the config.
SolverConfig solver_config(const RunConfig& config);

/// Entry point of the `lgc` executable.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace lgc::cli
