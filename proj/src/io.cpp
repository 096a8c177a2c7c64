#include "phase_replace/io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace phase_replace {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_field(std::ostream& os, const VectorFieldd& u) {
  const auto& g = u.grid;
  os << g.nx << ' ' << g.ny << ' ' << format_number(g.hx) << ' ' << format_number(g.hy) << ' ' << u.m() << ' '
     << format_number(g.x0) << ' ' << format_number(g.y0) << '\n';
  for (Index j = 0; j < g.ny; ++j) {
    for (Index i = 0; i < g.nx; ++i) {
      os << i << ' ' << j;
      const auto v = u.node(i, j);
      for (Index c = 0; c < u.m(); ++c) os << ' ' << format_number(v(c));
      os << '\n';
    }
  }
}

VectorFieldd read_field(std::istream& is) {
  Index nx = 0, ny = 0, m = 0;
  double hx = 0, hy = 0, x0 = 0, y0 = 0;
  if (!(is >> nx >> ny >> hx >> hy >> m >> x0 >> y0)) throw Error("read_field: malformed header");
  if (m < 1) throw Error("read_field: component count must be positive");
  VectorFieldd u(Grid2d::rectangle(nx, ny, hx, hy, x0, y0), m);
  std::vector<bool> seen(size_t(nx * ny), false);
  for (Index n = 0; n < nx * ny; ++n) {
    Index i = -1, j = -1;
    if (!(is >> i >> j)) throw Error("read_field: truncated body at node " + std::to_string(n));
    if (i < 0 || i >= nx || j < 0 || j >= ny) throw Error("read_field: node index out of range");
    for (Index c = 0; c < m; ++c)
      if (!(is >> u.node(i, j)(c))) throw Error("read_field: bad value at node (" + std::to_string(i) + ", " +
                                                 std::to_string(j) + ")");
    seen[size_t(u.grid.index(i, j))] = true;
  }
  for (bool s : seen)
    if (!s) throw Error("read_field: some nodes are missing");
  if (!u.all_finite()) throw EvaluationError("read_field: non-finite value in field");
  return u;
}

void write_mask(std::ostream& os, const RegionMask& mask) {
  for (Index j = 0; j < mask.ny(); ++j)
    for (Index i = 0; i < mask.nx(); ++i) os << i << ' ' << j << ' ' << (mask.contains(i, j) ? 1 : 0) << '\n';
}

void write_energy_csv(std::ostream& os, const EnergyBreakdownd& e) {
  os << "total,kinetic,potential\n"
     << format_number(e.total) << ',' << format_number(e.kinetic) << ',' << format_number(e.potential) << '\n';
}

void write_column_energy_csv(std::ostream& os, const Grid2d& g, const EnergyBreakdownd& e) {
  os << "x1,line_energy\n";
  for (Index i = 0; i < g.nx; ++i) os << format_number(g.x1(i)) << ',' << format_number(e.line_energy(i)) << '\n';
}

void write_replacement_csv(std::ostream& os, const ReplacementReportd& r) {
  os << "J_before,J_after,kin_delta,pot_delta,area_C0,area_Aplus,max_rho_before,max_rho_after,flags\n";
  os << format_number(r.before.total) << ',' << format_number(r.after.total) << ',' << format_number(r.kinetic_delta)
     << ',' << format_number(r.potential_delta) << ',' << format_number(r.area_c0) << ','
     << format_number(r.area_a_plus) << ',' << format_number(r.max_rho_before) << ','
     << format_number(r.max_rho_after) << ',' << r.flags() << '\n';
}

void write_history_csv(std::ostream& os, const FlowHistory<double>& h) {
  os << "step,J,kin,pot,grad_norm,replacements\n";
  for (const auto& r : h.records)
    os << r.step << ',' << format_number(r.total) << ',' << format_number(r.kinetic) << ','
       << format_number(r.potential) << ',' << format_number(r.grad_norm) << ',' << r.replacements << '\n';
}

void write_experiment_csv(std::ostream& os, const ExperimentReport& rep) {
  os << "R,mu,J,C_measured,w0,eta0,abs_iR,abs_jR,xbar1,max_rho_tail_before,max_rho_tail_after,pass\n";
  for (const auto& r : rep.rows)
    os << format_number(r.R) << ',' << format_number(r.mu) << ',' << format_number(r.J) << ',' << format_number(r.C)
       << ',' << format_number(r.w0) << ',' << format_number(r.eta0) << ',' << format_number(r.abs_iR) << ','
       << format_number(r.abs_jR) << ',' << format_number(r.xbar1) << ',' << format_number(r.max_rho_tail_before)
       << ',' << format_number(r.max_rho_tail_after) << ',' << (r.pass ? 1 : 0) << '\n';
}

void write_profile_csv(std::ostream& os, const ExperimentRow& row) {
  const auto& g = row.minimizer.grid;
  os << "x1,max_rho,line_energy\n";
  for (Index i = 0; i < g.nx; ++i)
    os << format_number(g.x1(i)) << ',' << format_number(row.measures.column_max_rho.size() ? row.measures.column_max_rho(i) : 0.0)
       << ',' << format_number(row.energy.line_energy(i)) << '\n';
}

}  // namespace phase_replace
