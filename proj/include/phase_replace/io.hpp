#pragma once

#include "phase_replace/corollary.hpp"
#include "phase_replace/energy.hpp"
#include "phase_replace/grid_field.hpp"
#include "phase_replace/minimizer.hpp"
#include "phase_replace/replacement.hpp"

#include <iosfwd>
#include <string>

namespace phase_replace {

/// Shortest round-trip decimal ("%.17g").
std::string format_number(double v);

// Field dump: header `nx ny hx hy m origin_x origin_y`, then `i j u_1 ... u_m`
// per node with j outer and i inner.
void write_field(std::ostream& os, const VectorFieldd& u);
VectorFieldd read_field(std::istream& is);
void write_mask(std::ostream& os, const RegionMask& mask);

/// `total,kinetic,potential`
void write_energy_csv(std::ostream& os, const EnergyBreakdownd& e);
/// `x1,line_energy`
void write_column_energy_csv(std::ostream& os, const Grid2d& g, const EnergyBreakdownd& e);
/// `J_before,J_after,kin_delta,pot_delta,area_C0,area_Aplus,max_rho_before,max_rho_after,flags`
void write_replacement_csv(std::ostream& os, const ReplacementReportd& rep);
/// `step,J,kin,pot,grad_norm,replacements`
void write_history_csv(std::ostream& os, const FlowHistory<double>& h);
/// `R,mu,J,C_measured,w0,eta0,abs_iR,abs_jR,xbar1,max_rho_tail_before,max_rho_tail_after,pass`
void write_experiment_csv(std::ostream& os, const ExperimentReport& rep);
/// `x1,max_rho,line_energy`
void write_profile_csv(std::ostream& os, const ExperimentRow& row);

}  // namespace phase_replace
