#include "phase_replace/config.hpp"

#include "phase_replace/corollary.hpp"
#include "phase_replace/io.hpp"
#include "phase_replace/minimizer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace phase_replace {

namespace fs = std::filesystem;

namespace {

/// Tracks every artifact written so the manifest lists exactly what exists.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw Error("cannot write " + (dir_ / name).string());
    body(os);
    if (!os) throw Error("write failed for " + (dir_ / name).string());
    files_.push_back(name);
  }

  void note(const std::string& key, const std::string& value) { notes_.emplace_back(key, value); }

  void manifest(const RunConfig& cfg, bool pass, const std::string& cause) {
    std::ofstream os(dir_ / "manifest.txt", std::ios::binary);
    os << "command=" << to_string(cfg.command) << '\n';
    os << "seed=" << cfg.seed << '\n';
    for (const auto& [k, v] : cfg.inputs) os << "input." << k << '=' << v << '\n';
    for (const auto& [k, v] : notes_) os << "result." << k << '=' << v << '\n';
    for (const auto& f : files_) os << "file=" << f << '\n';
    os << "status=" << (cause.empty() ? (pass ? "pass" : "fail") : "error") << '\n';
    if (!cause.empty()) os << "cause=" << cause << '\n';
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
  std::vector<std::pair<std::string, std::string>> notes_;
};

std::string tag(double R) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "R%g", R);
  return buf;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

FlowConfig<double> flow_config(const RunConfig& cfg, const Grid2d& g) {
  FlowConfig<double> f;
  f.max_steps = cfg.max_steps;
  f.tolerance = cfg.tol;
  f.record_every = cfg.record_every;
  f.curvature_bound = cfg.curvature_bound;
  f.seed = cfg.seed;
  const double lw = cfg.curvature_bound.value_or(cfg.potential.curvature_bound);
  f.dt = cfg.dt > 0 ? cfg.dt : 0.9 * stable_time_step(g, lw);
  if (cfg.accel_period > 0) f.acceleration = {cfg.accel_period, cfg.a, cfg.accel_r.value_or(cfg.r)};
  return f;
}

VectorFieldd load_field(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open field file " + path.string());
  return read_field(in);
}

/// Smooth bump a - 3r (1 - s^2)^2 e1 centred in the box, s = distance / (quarter of the short side).
VectorFieldd synthetic_bump(const Grid2d& g, const Pointd& a, double r) {
  VectorFieldd u = VectorFieldd::constant(g, a);
  const double lx = g.hx * double(g.nx - 1), ly = g.hy * double(g.ny - 1);
  const double cx = g.x0 + lx / 2, cy = g.y0 + ly / 2;
  const double radius = 0.25 * std::min(lx, ly);
  for (Index j = 0; j < g.ny; ++j)
    for (Index i = 0; i < g.nx; ++i) {
      const double s = std::hypot(g.x1(i) - cx, g.x2(j) - cy) / radius;
      if (s < 1) u.values(0, g.index(i, j)) -= 3 * r * std::pow(1 - s * s, 2);
    }
  return u;
}

bool verify_lemma(const RunConfig& cfg, Outputs& out) {
  const BoundarySpecd bc = BoundarySpecd::all_neumann();
  VectorFieldd u = cfg.field_file ? load_field(*cfg.field_file)
                                  : synthetic_bump(Grid2d::rectangle(cfg.nx, cfg.ny, cfg.hx, cfg.hy, cfg.x0, cfg.y0),
                                                   cfg.a, cfg.r);
  if (u.m() != cfg.potential.dim) throw DomainError("field dimension does not match the potential");
  const Grid2d& g = u.grid;

  RegionMask A;
  if (cfg.region) {
    const auto b = *cfg.region;
    A = RegionMask::where(g, [&](double x1, double x2) { return x1 >= b[0] && x1 <= b[1] && x2 >= b[2] && x2 <= b[3]; });
  } else if (cfg.field_file) {
    A = RegionMask::full(g);
  } else {
    const double lx = g.hx * double(g.nx - 1), ly = g.hy * double(g.ny - 1);
    const double cx = g.x0 + lx / 2, cy = g.y0 + ly / 2, rad = 0.3 * std::min(lx, ly);
    A = RegionMask::where(g, [&](double x1, double x2) { return std::hypot(x1 - cx, x2 - cy) <= rad; });
  }

  auto res = replace(u, A, cfg.potential, CutoffParams<double>{cfg.a, cfg.r}, bc, cfg.mode);
  const auto& rep = res.report;

  out.write("field_before.txt", [&](std::ostream& os) { write_field(os, u); });
  out.write("field_after.txt", [&](std::ostream& os) { write_field(os, res.field); });
  out.write("region_mask.txt", [&](std::ostream& os) { write_mask(os, A); });
  out.write("replacement.csv", [&](std::ostream& os) { write_replacement_csv(os, rep); });
  out.write("energy_before.csv", [&](std::ostream& os) { write_energy_csv(os, rep.before); });
  out.write("energy_after.csv", [&](std::ostream& os) { write_energy_csv(os, rep.after); });

  const RegionMask moved = A & ~pinned_mask(g, bc);
  bool outside_same = true;
  for (Index k = 0; k < g.size(); ++k)
    if (!moved.contains(k) && (res.field.values.col(k).array() != u.values.col(k).array()).any()) outside_same = false;

  const double scale = std::max(1.0, std::abs(rep.before.total));
  const bool descent = rep.total_delta <= 1e-12 * scale;
  const bool strict = !rep.strict_expected || rep.total_delta < -1e-12 * scale;
  const bool range = rep.max_rho_after <= cfg.r + 1e-12;
  out.note("certified", rep.certified ? "1" : "0");
  out.note("descent", descent ? "1" : "0");
  out.note("strict", strict ? "1" : "0");
  out.note("range", range ? "1" : "0");
  out.note("outside_unchanged", outside_same ? "1" : "0");
  return rep.certified && descent && strict && range && outside_same;
}

bool run_minimize(const RunConfig& cfg, Outputs& out) {
  const BoundarySpecd bc = cfg.make_boundary();
  VectorFieldd u0;
  if (cfg.field_file) {
    u0 = load_field(*cfg.field_file);
  } else {
    u0 = noisy_initial_field(cfg.make_grid(), cfg.a, cfg.noise, cfg.seed, bc);
  }
  if (u0.m() != cfg.potential.dim) throw DomainError("field dimension does not match the potential");
  const auto flow = flow_config(cfg, u0.grid);
  auto res = minimize(u0, cfg.potential, bc, flow);
  const auto e = total_energy(res.field, cfg.potential, bc);

  out.write("history.csv", [&](std::ostream& os) { write_history_csv(os, res.history); });
  out.write("energy.csv", [&](std::ostream& os) { write_energy_csv(os, e); });
  out.write("columns.csv", [&](std::ostream& os) { write_column_energy_csv(os, res.field.grid, e); });
  out.write("field_initial.txt", [&](std::ostream& os) { write_field(os, pin_dirichlet(u0, bc)); });
  out.write("field_final.txt", [&](std::ostream& os) { write_field(os, res.field); });
  out.note("converged", res.history.converged ? "1" : "0");
  out.note("steps", std::to_string(res.history.steps));
  out.note("final_residual", format_number(res.history.final_residual));
  out.note("dt", format_number(flow.dt));
  // Descent is enforced inside the flow (CflViolation); reaching here means it held.
  return true;
}

bool run_sweep(const RunConfig& cfg, Outputs& out) {
  ExperimentConfig ec;
  ec.R_list = cfg.R_list;
  ec.mu = cfg.mu;
  ec.h = cfg.h;
  ec.r = cfg.r;
  ec.potential = cfg.potential;
  ec.a = cfg.a;
  ec.left_value = cfg.left_value;
  ec.pin_left = cfg.pin_left;
  ec.flow = flow_config(cfg, Grid2d::strip(cfg.R_list.front(), cfg.mu, cfg.h));
  ec.flow.dt = cfg.dt;  // 0 lets the driver pick per grid
  ec.seeds.clear();
  for (Index s = 0; s < cfg.seeds; ++s) ec.seeds.push_back(cfg.seed + std::uint64_t(s));
  ec.noise = cfg.noise;
  ec.w0_box_halfwidth = cfg.w0_box;
  ec.w0_half_plane = cfg.half_plane;
  ec.w0_grid = cfg.w0_grid;

  const auto rep = run_corollary_experiment(ec);
  out.write("corollary_report.csv", [&](std::ostream& os) { write_experiment_csv(os, rep); });
  for (const auto& row : rep.rows) {
    const std::string t = tag(row.R);
    out.write("profile_" + t + ".csv", [&](std::ostream& os) { write_profile_csv(os, row); });
    out.write("history_" + t + ".csv", [&](std::ostream& os) { write_history_csv(os, row.history); });
    out.write("energy_" + t + ".csv", [&](std::ostream& os) { write_energy_csv(os, row.energy); });
    out.write("field_minimizer_" + t + ".txt", [&](std::ostream& os) { write_field(os, row.minimizer); });
    out.write("field_surgery_" + t + ".txt", [&](std::ostream& os) { write_field(os, row.after_surgery); });
    if (!row.pass) out.note("failure_" + t, one_line(row.failure));
  }
  out.note("w0", format_number(rep.w0.value));
  out.note("R0", format_number(rep.R0));
  out.note("c_stable", rep.c_stable ? "1" : "0");
  return rep.pass;
}

bool potential_check(const RunConfig& cfg, Outputs& out) {
  const auto& p = cfg.potential;
  const auto h = check_hypothesis_H(p, cfg.a, p.r0, cfg.n_dirs, cfg.n_lambda);
  Box<double> box{(cfg.a.array() - cfg.w0_box).matrix(), (cfg.a.array() + cfg.w0_box).matrix()};
  std::optional<HalfSpace<double>> half;
  if (cfg.half_plane) half = HalfSpace<double>{Pointd::Unit(p.dim, 0), 0.0};
  std::optional<W0Result<double>> w0;
  std::string w0_error;
  try {
    w0 = min_w_outside(p, cfg.a, cfg.r / 4, box, half, cfg.w0_grid);
  } catch (const DomainError& e) {
    w0_error = one_line(e.what());
  }

  auto join = [](const Pointd& v) {
    std::string s;
    for (Index k = 0; k < v.size(); ++k) s += (k ? ";" : "") + format_number(v(k));
    return s;
  };
  out.write("potential_check.csv", [&](std::ostream& os) {
    os << "potential,r0,H_pass,n_directions,n_radii,margin,direction,lambda_lo,lambda_hi,w0,w0_argmin\n";
    os << p.name << ',' << format_number(p.r0) << ',' << (h.pass ? 1 : 0) << ',' << h.n_directions << ','
       << h.n_radii << ',' << format_number(h.margin) << ',' << (h.pass ? "" : join(h.direction)) << ','
       << format_number(h.lambda_lo) << ',' << format_number(h.lambda_hi) << ','
       << (w0 ? format_number(w0->value) : "nan") << ',' << (w0 ? join(w0->argmin) : "") << '\n';
  });
  out.note("H", h.pass ? "pass" : "fail");
  if (!w0_error.empty()) out.note("w0_error", w0_error);
  return h.pass && w0.has_value();
}

}  // namespace

int run(const RunConfig& cfg) {
  Outputs out(cfg.out);
  bool pass = false;
  std::string cause;
  try {
    switch (cfg.command) {
      case Command::VerifyLemma: pass = verify_lemma(cfg, out); break;
      case Command::Minimize: pass = run_minimize(cfg, out); break;
      case Command::CorollarySweep: pass = run_sweep(cfg, out); break;
      case Command::PotentialCheck: pass = potential_check(cfg, out); break;
    }
  } catch (const std::exception& e) {
    cause = one_line(e.what());
    pass = false;
  }
  out.manifest(cfg, pass, cause);
  return pass ? 0 : 1;
}

}  // namespace phase_replace
