#pragma once

#include "phase_replace/energy.hpp"
#include "phase_replace/grid_field.hpp"
#include "phase_replace/minimizer.hpp"
#include "phase_replace/potential.hpp"
#include "phase_replace/replacement.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace phase_replace {

// Column diagnostics on the strip (0, mu R) x [-R, R]. A node column x1 is
// "bad" (in i_R) when the column reaches rho >= r/2; it is in j_R when the
// column also contains an interval on which rho passes from r/4 to r/2.

/// Interval of x2 along one column on which rho runs from r/4 at one end to
/// r/2 at the other, staying within [r/4, r/2].
struct ColumnInterval {
  Index column = -1;
  double x1 = 0;
  /// Endpoints in x2 (absolute coordinates once placed by compute_measures,
  /// offsets from the first sample when returned by extract_L_interval).
  double lo = 0;
  double hi = 0;
  double length = 0;
  /// rho(lo) = r/4 and rho(hi) = r/2 when true; reversed otherwise.
  bool rising = true;
};

/// Scans the piecewise-linear interpolant of a column profile for the first
/// maximal run inside [r/4, r/2] whose two ends sit on different thresholds.
std::optional<ColumnInterval> extract_L_interval(std::span<const double> rho_column, double hy, double r);

struct MeasureReport {
  double r = 0;
  double half = 0;
  double quarter = 0;
  double R = 0;
  double eta_window = 0;
  Index scanned_columns = 0;
  Eigen::ArrayXd column_max_rho;
  std::vector<Index> i_columns;
  std::vector<Index> j_columns;
  /// One interval per j_R column, same order.
  std::vector<ColumnInterval> intervals;
  double abs_iR = 0;
  double abs_jR = 0;
  std::optional<Index> good_column;
  double xbar1 = std::numeric_limits<double>::quiet_NaN();

  // Filled by the experiment driver.
  double C = std::numeric_limits<double>::quiet_NaN();
  double w0 = std::numeric_limits<double>::quiet_NaN();
  double eta0 = std::numeric_limits<double>::quiet_NaN();
  double R0 = std::numeric_limits<double>::quiet_NaN();
};

/// Column sets i_R, j_R over x1 in [0, eta_window R) and the first good
/// column (max rho < r/2). Columns are scanned over the full range |x2| <= R.
MeasureReport compute_measures(const PolarDecomposition<double>& pd, const Grid2d& grid, double r,
                               double eta_window);

struct LineBoundCheck {
  double line_energy = 0;
  double bound = 0;
  bool pass = false;
};

/// int_L (1/2 |grad u|^2 + W(u)) dx2 against r sqrt(w0) / (2 sqrt 2), with a
/// 5% discretization allowance. x2-derivatives are edge differences, the
/// x1-derivative and W are interpolated linearly from the nodes.
LineBoundCheck column_lower_bound_check(const VectorFieldd& u, const ColumnInterval& col, const Potentiald& p,
                                        double w0, double r, double slack = 0.05);

/// 2 sqrt 2 C / (r sqrt w0); beyond x1 = eta0 R the minimizer stays r/2-close to a.
double eta0_constant(double C, double r, double w0);

/// int over the column's nodes of W (trapezoid in x2) times the column width.
double column_potential(const VectorFieldd& u, const Potentiald& p, Index column);

struct ExperimentConfig {
  std::vector<double> R_list{16, 32, 64};
  double mu = 4;
  double h = 0.5;
  double r = 0.2;
  Potentiald potential;
  /// Well; defaults to potential.minimum.
  std::optional<Pointd> a;
  /// Dirichlet value on x1 = 0; defaults to a with its first component zeroed.
  std::optional<Pointd> left_value;
  bool pin_left = true;
  FlowConfig<double> flow;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  double noise = 0.1;
  /// w0 search: box around a and the half-plane u1 >= 0.
  double w0_box_halfwidth = 3;
  bool w0_half_plane = true;
  Index w0_grid = 400;
  /// Scan window for x1 as a multiple of R; defaults to mu.
  std::optional<double> eta_window;
};

struct ExperimentRow {
  double R = 0;
  double mu = 0;
  double J = 0;
  double C = 0;
  double w0 = 0;
  double eta0 = 0;
  double abs_iR = 0;
  double abs_jR = 0;
  double xbar1 = std::numeric_limits<double>::quiet_NaN();
  /// max rho over {x1 >= xbar1} before and after the surgery.
  double max_rho_tail_before = std::numeric_limits<double>::quiet_NaN();
  double max_rho_tail_after = std::numeric_limits<double>::quiet_NaN();
  /// max rho over {x1 >= eta0 R} of the minimizer (0 when that set is empty).
  double max_rho_beyond_eta0 = 0;
  bool pass = false;
  std::string failure;

  std::uint64_t best_seed = 0;
  MeasureReport measures;
  std::vector<LineBoundCheck> line_checks;
  /// w0 * |i_R \ j_R| * 2R against the potential energy of those columns.
  double chain_lower = 0;
  double chain_potential = 0;
  std::optional<ReplacementReportd> surgery;
  FlowHistory<double> history;
  EnergyBreakdownd energy;
  VectorFieldd minimizer;
  VectorFieldd after_surgery;
};

struct ExperimentReport {
  W0Result<double> w0;
  double R0 = 0;
  double mu0 = 0;
  std::vector<ExperimentRow> rows;
  /// Successive ratios C(R_{k+1}) / C(R_k).
  std::vector<double> c_ratios;
  bool c_stable = true;
  bool pass = false;
};

/// Minimizes on each strip, measures the bad-column sets, finds the good
/// column and applies the surgery with radius r/2 to its right. Throws
/// DomainError (before any flow) when w0 or eta0 is degenerate.
ExperimentReport run_corollary_experiment(const ExperimentConfig& cfg);

}  // namespace phase_replace
