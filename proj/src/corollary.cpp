#include "phase_replace/corollary.hpp"

#include <algorithm>
#include <cmath>

namespace phase_replace {

namespace {

struct BandEnd {
  double t = 0;
  double value = 0;
};

struct BandPiece {
  BandEnd start;
  BandEnd end;
};

// Portion of segment [s, s+1] of the interpolant on which lo <= f <= hi.
std::optional<BandPiece> band_piece(double f0, double f1, Index s, double lo, double hi) {
  const double ts = double(s);
  if (f0 == f1) {
    if (f0 < lo || f0 > hi) return std::nullopt;
    return BandPiece{{ts, f0}, {ts + 1, f1}};
  }
  // f(t) = f0 + (f1 - f0)(t - s); solve for the band edges.
  auto time_of = [&](double level) { return ts + (level - f0) / (f1 - f0); };
  BandEnd a{ts, f0}, b{ts + 1, f1};
  if (f1 > f0) {
    if (f1 < lo || f0 > hi) return std::nullopt;
    if (f0 < lo) a = {time_of(lo), lo};
    if (f1 > hi) b = {time_of(hi), hi};
  } else {
    if (f0 < lo || f1 > hi) return std::nullopt;
    if (f0 > hi) a = {time_of(hi), hi};
    if (f1 < lo) b = {time_of(lo), lo};
  }
  a.t = std::clamp(a.t, ts, ts + 1);
  b.t = std::clamp(b.t, ts, ts + 1);
  return BandPiece{a, b};
}

}  // namespace

std::optional<ColumnInterval> extract_L_interval(std::span<const double> rho, double hy, double r) {
  if (!(r > 0) || !(hy > 0)) throw DomainError("extract_L_interval: r and hy must be positive");
  if (rho.size() < 2) return std::nullopt;
  const double quarter = r / 4;
  const double half = r / 2;
  const double tol = 1e-12 * r;
  auto near = [tol](double v, double level) { return std::abs(v - level) <= tol; };

  // Merge per-segment pieces into maximal runs and test the run ends.
  std::optional<BandPiece> run;
  auto classify = [&](const BandPiece& c) -> std::optional<ColumnInterval> {
    const bool rising = near(c.start.value, quarter) && near(c.end.value, half);
    const bool falling = near(c.start.value, half) && near(c.end.value, quarter);
    if (!rising && !falling) return std::nullopt;
    ColumnInterval out;
    out.lo = c.start.t * hy;
    out.hi = c.end.t * hy;
    out.length = out.hi - out.lo;
    out.rising = rising;
    return out;
  };

  const Index n = static_cast<Index>(rho.size());
  for (Index s = 0; s + 1 < n; ++s) {
    const auto piece = band_piece(rho[size_t(s)], rho[size_t(s + 1)], s, quarter, half);
    if (piece && run && run->end.t == piece->start.t) {
      run->end = piece->end;
    } else {
      if (run)
        if (auto hit = classify(*run)) return hit;
      run = piece;
    }
    // A piece ending inside the segment closes the run.
    if (run && run->end.t < double(s + 1)) {
      if (auto hit = classify(*run)) return hit;
      run.reset();
    }
  }
  if (run)
    if (auto hit = classify(*run)) return hit;
  return std::nullopt;
}

MeasureReport compute_measures(const PolarDecomposition<double>& pd, const Grid2d& grid, double r,
                               double eta_window) {
  if (grid.tag != DomainTag::Strip) throw DomainError("compute_measures: grid is not a strip");
  if (!(r > 0)) throw DomainError("compute_measures: r must be positive");
  if (!(eta_window > 0) || eta_window > grid.mu * (1 + 1e-12))
    throw DomainError("compute_measures: eta_window must lie in (0, mu]");
  if (pd.rho.size() != grid.size()) throw DomainError("compute_measures: polar field does not match grid");

  MeasureReport m;
  m.r = r;
  m.half = r / 2;
  m.quarter = r / 4;
  m.R = grid.R;
  m.eta_window = eta_window;
  m.column_max_rho = column_max(grid, pd.rho);

  std::vector<double> column(static_cast<size_t>(grid.ny));
  const double x_end = eta_window * grid.R;
  for (Index i = 0; i < grid.nx && grid.x1(i) < x_end; ++i) {
    ++m.scanned_columns;
    if (m.column_max_rho(i) < m.half) {
      if (!m.good_column) {
        m.good_column = i;
        m.xbar1 = grid.x1(i);
      }
      continue;
    }
    m.i_columns.push_back(i);
    for (Index j = 0; j < grid.ny; ++j) column[size_t(j)] = pd.rho(grid.index(i, j));
    if (auto L = extract_L_interval(column, grid.hy, r)) {
      L->column = i;
      L->x1 = grid.x1(i);
      L->lo += grid.y0;
      L->hi += grid.y0;
      m.j_columns.push_back(i);
      m.intervals.push_back(*L);
    }
  }
  m.abs_iR = double(m.i_columns.size()) * grid.hx;
  m.abs_jR = double(m.j_columns.size()) * grid.hx;
  return m;
}

LineBoundCheck column_lower_bound_check(const VectorFieldd& u, const ColumnInterval& col, const Potentiald& p,
                                        double w0, double r, double slack) {
  const auto& g = u.grid;
  if (col.column < 0 || col.column >= g.nx) throw DomainError("column_lower_bound_check: column out of range");
  if (u.m() != p.dim) throw DomainError("column_lower_bound_check: dimension mismatch");
  const Index i = col.column;
  const Index il = std::max<Index>(0, i - 1);
  const Index ir = std::min<Index>(g.nx - 1, i + 1);
  const double dx = double(ir - il) * g.hx;

  // Nodal W and 1/2 |d u / d x1|^2 along the column.
  std::vector<double> w(size_t(g.ny)), k1(size_t(g.ny));
  for (Index j = 0; j < g.ny; ++j) {
    w[size_t(j)] = checked_value(p, u.node(i, j));
    k1[size_t(j)] = 0.5 * ((u.node(ir, j) - u.node(il, j)) / dx).squaredNorm();
  }

  const double t_lo = (col.lo - g.y0) / g.hy;
  const double t_hi = (col.hi - g.y0) / g.hy;
  double energy = 0;
  for (Index s = 0; s + 1 < g.ny; ++s) {
    const double a = std::max(t_lo, double(s));
    const double b = std::min(t_hi, double(s + 1));
    if (b <= a) continue;
    const double len = (b - a) * g.hy;
    const double k2 = 0.5 * ((u.node(i, s + 1) - u.node(i, s)) / g.hy).squaredNorm();
    auto lerp = [s](const std::vector<double>& v, double t) {
      const double f = t - double(s);
      return (1 - f) * v[size_t(s)] + f * v[size_t(s + 1)];
    };
    const double mean_nodal = 0.5 * (lerp(w, a) + lerp(w, b) + lerp(k1, a) + lerp(k1, b));
    energy += (k2 + mean_nodal) * len;
  }

  LineBoundCheck out;
  out.line_energy = energy;
  out.bound = r * std::sqrt(w0) / (2 * std::sqrt(2.0));
  out.pass = out.line_energy >= out.bound * (1 - slack);
  return out;
}

double eta0_constant(double C, double r, double w0) {
  if (!(C > 0) || !(r > 0) || !(w0 > 0) || !std::isfinite(C) || !std::isfinite(w0))
    throw DomainError("eta0_constant: C, r and w0 must be positive (C = " + std::to_string(C) +
                      ", r = " + std::to_string(r) + ", w0 = " + std::to_string(w0) + ")");
  return 2 * std::sqrt(2.0) * C / (r * std::sqrt(w0));
}

double column_potential(const VectorFieldd& u, const Potentiald& p, Index column) {
  const auto& g = u.grid;
  double s = 0;
  for (Index j = 0; j < g.ny; ++j) {
    const double wj = (j == 0 || j == g.ny - 1) ? 0.5 : 1.0;
    s += wj * checked_value(p, u.node(column, j));
  }
  const double width = (column == 0 || column == g.nx - 1) ? g.hx / 2 : g.hx;
  return s * g.hy * width;
}

ExperimentReport run_corollary_experiment(const ExperimentConfig& cfg) {
  const Potentiald& p = cfg.potential;
  if (p.dim != 2) throw DomainError("corollary experiment: potential must map R^2");
  if (cfg.R_list.empty()) throw DomainError("corollary experiment: empty R list");
  const Pointd a = cfg.a.value_or(p.minimum);
  CutoffParams<double>{a, cfg.r}.validate(p);

  ExperimentReport rep;
  Box<double> box{a.array() - cfg.w0_box_halfwidth, a.array() + cfg.w0_box_halfwidth};
  std::optional<HalfSpace<double>> half_plane;
  if (cfg.w0_half_plane) half_plane = HalfSpace<double>{Pointd::Unit(2, 0), 0.0};
  rep.w0 = min_w_outside(p, a, cfg.r / 4, box, half_plane, cfg.w0_grid);
  const double w0 = rep.w0.value;
  rep.R0 = cfg.r / (2 * std::sqrt(2 * w0));
  rep.mu0 = cfg.mu;

  Pointd left = a;
  left(0) = 0;
  if (cfg.left_value) left = *cfg.left_value;
  const double window = cfg.eta_window.value_or(cfg.mu);
  const double half = cfg.r / 2;

  for (double R : cfg.R_list) {
    ExperimentRow row;
    row.R = R;
    row.mu = cfg.mu;
    row.w0 = w0;
    const Grid2d grid = Grid2d::strip(R, cfg.mu, cfg.h);
    const BoundarySpecd bc = BoundarySpecd::strip(a, cfg.pin_left ? std::optional<Pointd>(left) : std::nullopt);
    FlowConfig<double> flow = cfg.flow;
    if (!(flow.dt > 0)) flow.dt = 0.9 * stable_time_step(grid, flow.curvature_bound.value_or(p.curvature_bound));

    bool have = false;
    for (auto seed : cfg.seeds) {
      auto u0 = noisy_initial_field(grid, a, cfg.noise, seed, bc);
      auto res = minimize(u0, p, bc, flow);
      const double J = res.history.records.back().total;
      if (!have || J < row.J) {
        have = true;
        row.J = J;
        row.best_seed = seed;
        row.minimizer = std::move(res.field);
        row.history = std::move(res.history);
      }
    }
    row.energy = total_energy(row.minimizer, p, bc);
    row.C = row.J / R;
    try {
      row.eta0 = eta0_constant(row.C, cfg.r, w0);
    } catch (const DomainError& e) {
      row.failure = e.what();
      row.after_surgery = row.minimizer;
      rep.rows.push_back(std::move(row));
      continue;
    }

    const auto pd = polar_decompose(row.minimizer, a);
    row.measures = compute_measures(pd, grid, cfg.r, window);
    auto& m = row.measures;
    m.C = row.C;
    m.w0 = w0;
    m.eta0 = row.eta0;
    m.R0 = rep.R0;
    row.abs_iR = m.abs_iR;
    row.abs_jR = m.abs_jR;

    bool lines_ok = true;
    for (const auto& L : m.intervals) {
      row.line_checks.push_back(column_lower_bound_check(row.minimizer, L, p, w0, cfg.r));
      lines_ok = lines_ok && row.line_checks.back().pass;
    }

    for (Index i : m.i_columns) {
      if (std::find(m.j_columns.begin(), m.j_columns.end(), i) != m.j_columns.end()) continue;
      const double width = (i == 0 || i == grid.nx - 1) ? grid.hx / 2 : grid.hx;
      row.chain_lower += w0 * 2 * R * width;
      row.chain_potential += column_potential(row.minimizer, p, i);
    }
    const bool chain_ok = row.chain_lower <= row.chain_potential * (1 + 1e-12);

    for (Index k = 0; k < grid.size(); ++k)
      if (grid.x1(grid.column_of(k)) >= row.eta0 * R) row.max_rho_beyond_eta0 = std::max(row.max_rho_beyond_eta0, pd.rho(k));

    row.after_surgery = row.minimizer;
    bool surgery_ok = false;
    if (m.good_column) {
      const Index bar = *m.good_column;
      row.xbar1 = m.xbar1;
      const auto A = RegionMask::columns_from(grid.nx, grid.ny, bar + 1);
      auto s = replace(row.minimizer, A, p, CutoffParams<double>{a, half}, bc, SurgeryMode::Alpha);
      row.after_surgery = std::move(s.field);
      row.max_rho_tail_before = 0;
      row.max_rho_tail_after = 0;
      for (Index k = 0; k < grid.size(); ++k) {
        if (grid.column_of(k) < bar) continue;
        row.max_rho_tail_before = std::max(row.max_rho_tail_before, pd.rho(k));
        row.max_rho_tail_after = std::max(row.max_rho_tail_after, (row.after_surgery.values.col(k) - a).norm());
      }
      surgery_ok = s.report.certified && s.report.total_delta <= 0 && row.max_rho_tail_after <= half + 1e-12;
      row.surgery = std::move(s.report);
    } else {
      row.failure = "no good column in [0, " + std::to_string(window * R) + "); |i_R| = " + std::to_string(m.abs_iR);
    }

    const bool measure_ok = m.abs_iR <= 2 * row.eta0 * R;
    const bool eta_tail_ok = row.max_rho_beyond_eta0 <= half;
    row.pass = m.good_column.has_value() && surgery_ok && lines_ok && chain_ok && measure_ok && eta_tail_ok;
    if (!row.pass && row.failure.empty()) {
      row.failure = !surgery_ok ? "surgery did not certify rho <= r/2 on the tail"
                    : !lines_ok ? "line-energy lower bound failed"
                    : !chain_ok ? "potential lower bound on i_R \\ j_R failed"
                    : !measure_ok ? "|i_R| exceeds 2 eta0 R"
                                  : "rho > r/2 beyond eta0 R";
    }
    rep.rows.push_back(std::move(row));
  }

  for (size_t k = 1; k < rep.rows.size(); ++k) {
    const double ratio = rep.rows[k].C / rep.rows[k - 1].C;
    rep.c_ratios.push_back(ratio);
    if (!(ratio >= 0.8 && ratio <= 1.25)) rep.c_stable = false;
  }
  rep.pass = rep.c_stable && std::all_of(rep.rows.begin(), rep.rows.end(), [](const auto& r) { return r.pass; });
  return rep;
}

}  // namespace phase_replace
