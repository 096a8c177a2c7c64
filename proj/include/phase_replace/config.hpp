#pragma once

#include "phase_replace/grid_field.hpp"
#include "phase_replace/potential.hpp"
#include "phase_replace/replacement.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace phase_replace {

enum class Command { VerifyLemma, Minimize, CorollarySweep, PotentialCheck };

const char* to_string(Command c);

/// Validated run configuration. Sources are a flat `key=value` file (`#`
/// starts a comment) and `--key=value` flags; flags win.
struct RunConfig {
  Command command = Command::PotentialCheck;
  /// Effective key=value inputs after merging, for the manifest.
  std::map<std::string, std::string> inputs;

  std::string potential_name = "two_well";
  std::vector<double> potential_params;
  Potentiald potential;

  // Grid: strip (R, mu, h) or rectangle (nx, ny, hx, hy, x0, y0).
  std::string grid_kind = "strip";
  double R = 16;
  double mu = 4;
  double h = 0.5;
  Index nx = 64;
  Index ny = 64;
  double hx = 1.0 / 63;
  double hy = 1.0 / 63;
  double x0 = 0;
  double y0 = 0;

  Pointd a;
  double r = 0.2;

  double dt = 0;  // 0: 0.9 of the stability bound
  Index max_steps = 20000;
  double tol = 1e-5;
  Index record_every = 100;
  std::optional<double> curvature_bound;
  Index accel_period = 0;
  std::optional<double> accel_r;

  std::uint64_t seed = 1;
  Index seeds = 3;
  double noise = 0.1;
  bool pin_left = true;
  std::optional<Pointd> left_value;
  std::vector<double> R_list{16, 32, 64};

  Index n_dirs = 64;
  Index n_lambda = 256;
  Index w0_grid = 400;
  double w0_box = 3;
  bool half_plane = true;

  SurgeryMode mode = SurgeryMode::Alpha;
  std::optional<std::filesystem::path> field_file;
  /// x1_min, x1_max, x2_min, x2_max of the surgery region (verify-lemma).
  std::optional<std::array<double, 4>> region;

  std::filesystem::path out = "out";

  Grid2d make_grid() const;
  BoundarySpecd make_boundary() const;
};

/// args excludes the program name. Throws ConfigError naming the key.
RunConfig parse_config(const std::vector<std::string>& args);

/// Output directory named by the arguments, if any can be read; used to place
/// the error manifest when parsing fails.
std::optional<std::filesystem::path> peek_output_dir(const std::vector<std::string>& args);

/// Writes `manifest.txt` with status=config_error into dir.
void write_error_manifest(const std::filesystem::path& dir, const std::string& cause);

/// Runs the command; exit status 0 when every asserted property held, 1 on a
/// property failure or module error.
int run(const RunConfig& cfg);

}  // namespace phase_replace
