#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "g2cone/shoot.hpp"

namespace g2cone::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kInvalidConfig = 2 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::vector<double> mus;  // empty: command default
  double rtol = 1e-10;
  double atol = 1e-12;
  double conv_tol = 1e-6;
  double t_max = 200.0;
  double u_max = 60.0;
  int order = 4;
  std::size_t stride = 1;
  std::filesystem::path out_dir = ".";
  std::set<std::string> formats{"csv", "json"};
  std::uint64_t seed = 1;
  int samples = 200;
  /// Negative control for verify-torsion: flips the sign of one term of Psi.
  bool debug_flip_psi = false;
};

/// "LO:HI:N" -> N equally spaced values.
std::vector<double> parse_mu_range(const std::string& spec);
/// Comma-separated list -> set, rejecting unknown formats.
std::set<std::string> parse_formats(const std::string& spec);
/// Throws ConfigError.
void validate(const RunConfig& cfg);

struct CommandResult {
  int exit_code = kOk;
  nlohmann::json report;
};

/// One family member: shape route to t_max, continued on the sphere to u_max.
struct ShootResult {
  double mu = 0.0;
  Trajectory shape;
  Trajectory tail;
  bool positivity_ok = false;
  bool converged = false;
  std::optional<double> convergence_u;
  double F_initial = 0.0;
  double F_drift = 0.0;
  std::optional<ALCFit> alc;
  double max_torsion_residual = 0.0;
  /// F / f^3 where alpha3 first reaches 0.3; a scale-free label of the member.
  std::optional<double> homothety_invariant;
  nlohmann::json summary;
};

ShootResult shoot_member(double mu, const RunConfig& cfg);

CommandResult cmd_verify_torsion(const RunConfig& cfg);
CommandResult cmd_oracle(const RunConfig& cfg);
CommandResult cmd_shoot(const RunConfig& cfg);
CommandResult cmd_stationary(const RunConfig& cfg);
CommandResult cmd_sweep(const RunConfig& cfg);

/// Validates, dispatches and writes <out>/<command>.json when json output is on.
CommandResult run_command(const RunConfig& cfg);

/// Argument parsing and dispatch; returns the process exit status.
int run_main(int argc, char** argv);

}  // namespace g2cone::cli
