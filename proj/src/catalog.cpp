#include "phase_replace/potential.hpp"

namespace phase_replace {

namespace {

Pointd well_from(const std::vector<double>& params, Index dim) {
  if (params.empty()) {
    Pointd a = Pointd::Zero(dim);
    a(0) = 1;
    return a;
  }
  return Eigen::Map<const Pointd>(params.data(), static_cast<Index>(params.size()));
}

}  // namespace

Potentiald make_potential(const std::string& name, const std::vector<double>& params) {
  if (name == "two_well") {
    if (params.size() > 1) throw DomainError("two_well takes at most one parameter (alpha)");
    const double alpha = params.empty() ? 1.0 : params[0];
    if (!(alpha > 0)) throw DomainError("two_well: alpha must be positive");
    return two_well<double>(alpha);
  }
  if (name == "quadratic") return radial_quadratic<double>(well_from(params, 2));
  if (name == "oscillatory") return oscillatory<double>(well_from(params, 2));
  if (name == "scalar_double_well") {
    if (!params.empty()) throw DomainError("scalar_double_well takes no parameters");
    return scalar_double_well<double>();
  }
  if (name == "zero") return constant_potential<double>(well_from(params, 2), 0.0);
  throw DomainError("unknown potential '" + name + "'");
}

}  // namespace phase_replace
