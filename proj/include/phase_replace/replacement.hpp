#pragma once

#include "phase_replace/energy.hpp"
#include "phase_replace/grid_field.hpp"
#include "phase_replace/potential.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace phase_replace {

/// Truncation radius r around the well a; the surgery needs 2r < r0.
template <typename Scalar>
struct CutoffParams {
  Point<Scalar> a;
  Scalar r = Scalar(0);

  void validate(const Potential<Scalar>& p) const {
    if (a.size() != p.dim) throw DomainError("CutoffParams: well has wrong dimension");
    if (!(r > 0)) throw HypothesisError("CutoffParams: r must be positive");
    if (!(Scalar(2) * r < p.r0))
      throw HypothesisError("CutoffParams: 2r = " + std::to_string(double(2 * r)) + " is not below r0 = " +
                            std::to_string(double(p.r0)));
  }
};

/// Piecewise linear cutoff: 1 on [0, r], (2r - tau)/r on [r, 2r], 0 beyond 2r.
template <typename Scalar>
Scalar cutoff_alpha(Scalar tau, Scalar r) {
  if (tau <= r) return Scalar(1);
  if (tau >= Scalar(2) * r) return Scalar(0);
  return (Scalar(2) * r - tau) / r;
}

/// u -> a + r alpha(rho) n with rho = |u - a|, n = (u - a)/rho. Identity on
/// the closed r-ball, collapses to a outside the 2r-ball, 1-Lipschitz.
template <typename Derived>
typename Derived::PlainObject radial_truncation_map(const Eigen::MatrixBase<Derived>& u,
                                                     const CutoffParams<typename Derived::Scalar>& params) {
  using Scalar = typename Derived::Scalar;
  const Scalar rho = (u - params.a).norm();
  if (rho <= params.r) return u;
  const Scalar radius = params.r * cutoff_alpha(rho, params.r);
  return params.a + (radius / rho) * (u - params.a);
}

/// Radial clamp u -> a + min(rho, r) n: the epsilon -> 0 endpoint of the
/// level-set construction used when rho <= 2r on the whole region.
template <typename Derived>
typename Derived::PlainObject clamp_at_r_map(const Eigen::MatrixBase<Derived>& u,
                                             const CutoffParams<typename Derived::Scalar>& params) {
  using Scalar = typename Derived::Scalar;
  const Scalar rho = (u - params.a).norm();
  if (rho <= params.r) return u;
  return params.a + (params.r / rho) * (u - params.a);
}

enum class SurgeryMode { Alpha, Clamp };

inline const char* to_string(SurgeryMode m) { return m == SurgeryMode::Alpha ? "alpha" : "clamp"; }

template <typename Scalar>
struct ReplacementReport {
  SurgeryMode mode = SurgeryMode::Alpha;
  Scalar r = Scalar(0);
  EnergyBreakdown<Scalar> before;
  EnergyBreakdown<Scalar> after;
  Scalar kinetic_delta = Scalar(0);
  Scalar potential_delta = Scalar(0);
  Scalar total_delta = Scalar(0);
  /// Nodes of A with rho > r (C0) and rho > 2r (A+), and their areas.
  Index count_c0 = 0;
  Index count_a_plus = 0;
  Scalar area_c0 = Scalar(0);
  Scalar area_a_plus = Scalar(0);
  Scalar max_rho_before = Scalar(0);
  Scalar max_rho_after = Scalar(0);
  /// |u - a| <= r on the relative boundary of A.
  bool boundary_ok = false;
  /// Some node of A has |u - a| > r.
  bool exceeds_r = false;
  /// A (minus Dirichlet nodes) has no nodes; the call was a no-op.
  bool empty_region = false;
  /// Decrease J_after <= J_before is guaranteed (boundary hypothesis holds).
  bool certified = false;
  /// Certified and C0 nonempty: the decrease is strict.
  bool strict_expected = false;

  std::string flags() const {
    std::string s;
    auto add = [&s](bool on, const char* name) {
      if (!on) return;
      if (!s.empty()) s += '|';
      s += name;
    };
    add(boundary_ok, "boundary_ok");
    add(!boundary_ok, "boundary_violated");
    add(exceeds_r, "x0_found");
    add(empty_region, "empty_region");
    add(certified, "certified");
    add(strict_expected, "strict");
    return s;
  }
};

using ReplacementReportd = ReplacementReport<double>;

template <typename Scalar>
struct ReplacementResult {
  VectorField<Scalar> field;
  ReplacementReport<Scalar> report;
};

/// Field surgery on A: nodes outside A (and Dirichlet nodes) are copied
/// untouched, nodes inside are mapped by the alpha cutoff or the radial clamp.
/// The report carries the exact discrete energy change. When the boundary
/// hypothesis fails the surgery is still applied but not certified. Clamp mode
/// requires max_A rho <= 2r and throws HypothesisError otherwise.
template <typename Scalar>
ReplacementResult<Scalar> replace(const VectorField<Scalar>& u, const RegionMask& region,
                                  const Potential<Scalar>& p, const CutoffParams<Scalar>& params,
                                  const BoundarySpec<Scalar>& bc, SurgeryMode mode = SurgeryMode::Alpha,
                                  Scalar boundary_tol = Scalar(1e-12)) {
  params.validate(p);
  if (u.m() != p.dim) throw DomainError("replace: field and potential dimensions differ");
  if (!region.matches(u.grid)) throw DomainError("replace: region does not match grid");
  const auto& g = u.grid;
  const RegionMask A = region & ~pinned_mask(g, bc);
  const auto pd = polar_decompose(u, params.a);

  ReplacementResult<Scalar> out{u, {}};
  auto& rep = out.report;
  rep.mode = mode;
  rep.r = params.r;
  rep.empty_region = A.empty();

  for (Index k = 0; k < A.size(); ++k) {
    if (!A.contains(k)) continue;
    rep.max_rho_before = std::max(rep.max_rho_before, pd.rho(k));
    if (pd.rho(k) > params.r) ++rep.count_c0;
    if (pd.rho(k) > Scalar(2) * params.r) ++rep.count_a_plus;
  }
  rep.exceeds_r = rep.count_c0 > 0;
  rep.area_c0 = Scalar(rep.count_c0) * g.hx * g.hy;
  rep.area_a_plus = Scalar(rep.count_a_plus) * g.hx * g.hy;

  if (mode == SurgeryMode::Clamp && rep.max_rho_before > Scalar(2) * params.r)
    throw HypothesisError("replace: clamp mode needs max rho <= 2r on A, found " +
                          std::to_string(double(rep.max_rho_before)));

  rep.boundary_ok = true;
  for (Index k : A.relative_boundary())
    if (pd.rho(k) > params.r + boundary_tol) rep.boundary_ok = false;
  rep.certified = rep.boundary_ok && !rep.empty_region;
  rep.strict_expected = rep.certified && rep.exceeds_r;

  rep.before = total_energy(u, p, bc);
  if (!rep.exceeds_r) {
    rep.after = rep.before;
    rep.max_rho_after = rep.max_rho_before;
    return out;
  }

  for (Index k = 0; k < A.size(); ++k) {
    if (!A.contains(k) || pd.rho(k) <= params.r) continue;
    if (mode == SurgeryMode::Alpha)
      out.field.values.col(k) = radial_truncation_map(u.values.col(k), params);
    else
      out.field.values.col(k) = clamp_at_r_map(u.values.col(k), params);
  }
  for (Index k = 0; k < A.size(); ++k)
    if (A.contains(k))
      rep.max_rho_after = std::max(rep.max_rho_after, (out.field.values.col(k) - params.a).norm());

  rep.after = total_energy(out.field, p, bc);
  rep.kinetic_delta = rep.after.kinetic - rep.before.kinetic;
  rep.potential_delta = rep.after.potential - rep.before.potential;
  rep.total_delta = rep.after.total - rep.before.total;
  return out;
}

namespace detail {

template <typename Scalar>
bool level_collides(const PolarDecomposition<Scalar>& pd, const RegionMask& A, Scalar level) {
  for (Index k = 0; k < A.size(); ++k)
    if (A.contains(k) && pd.rho(k) == level) return true;
  return false;
}

}  // namespace detail

/// Discrete stand-in for "r is not a critical value of rho on A": the largest
/// level r' in [r - delta_max, r] that no node value of rho on A equals. Tried
/// levels are r and then r - delta_max 2^-k for k = n_halvings, ..., 0.
template <typename Scalar>
Scalar select_noncritical_level(const PolarDecomposition<Scalar>& pd, const RegionMask& A, Scalar r,
                                Scalar delta_max, int n_halvings = 20) {
  if (!(delta_max > 0)) throw DomainError("select_noncritical_level: delta_max must be positive");
  if (!detail::level_collides(pd, A, r)) return r;
  for (int k = n_halvings; k >= 0; --k) {
    const Scalar level = r - std::ldexp(delta_max, -k);
    if (level < r && !detail::level_collides(pd, A, level)) return level;
  }
  throw HypothesisError("select_noncritical_level: every tested level collides with a node value; "
                        "increase delta_max");
}

/// Strictly decreasing levels r_n -> r from above, none of which equals a
/// node value of rho on A: r_n = r + delta0 2^-n, shrunk towards r on collision.
template <typename Scalar>
std::vector<Scalar> noncritical_levels_above(const PolarDecomposition<Scalar>& pd, const RegionMask& A, Scalar r,
                                             Scalar delta0, int n_terms) {
  if (!(delta0 > 0)) throw DomainError("noncritical_levels_above: delta0 must be positive");
  std::vector<Scalar> levels;
  for (int n = 0; n < n_terms; ++n) {
    Scalar offset = std::ldexp(delta0, -n);
    Scalar level = r + offset;
    for (int tries = 0; detail::level_collides(pd, A, level) && tries < 64; ++tries) {
      offset *= Scalar(0.75);
      level = r + offset;
    }
    if (detail::level_collides(pd, A, level) || level <= r)
      throw HypothesisError("noncritical_levels_above: could not avoid node values near r");
    if (!levels.empty() && !(level < levels.back())) break;
    levels.push_back(level);
  }
  return levels;
}

}  // namespace phase_replace
