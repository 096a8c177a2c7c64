#pragma once

#include "phase_replace/types.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

namespace phase_replace {

/// Nonnegative C^1 potential W : R^m -> R together with its analytic gradient,
/// a distinguished global minimum a and the radius r0 on which W grows
/// radially away from a.
template <typename Scalar>
struct Potential {
  using ValueFn = std::function<Scalar(PointRef<Scalar>)>;
  using GradientFn = std::function<void(PointRef<Scalar>, PointOut<Scalar>)>;

  std::string name;
  Index dim = 0;
  Point<Scalar> minimum;
  Scalar r0 = Scalar(0);
  /// Upper bound on the Hessian of W over the range the flow visits (L_W).
  Scalar curvature_bound = Scalar(0);
  ValueFn value;
  GradientFn gradient_into;

  Scalar operator()(PointRef<Scalar> u) const { return value(u); }

  Point<Scalar> gradient(PointRef<Scalar> u) const {
    Point<Scalar> g(dim);
    gradient_into(u, g);
    return g;
  }
};

using Potentiald = Potential<double>;

template <typename Derived>
std::string format_point(const Eigen::MatrixBase<Derived>& u) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (Index k = 0; k < u.size(); ++k) os << (k ? ", " : "") << u(k);
  os << ')';
  return os.str();
}

/// Evaluates W and throws EvaluationError on a non-finite value.
template <typename Scalar>
Scalar checked_value(const Potential<Scalar>& p, std::type_identity_t<PointRef<Scalar>> u) {
  const Scalar w = p.value(u);
  if (!std::isfinite(w)) {
    throw EvaluationError("potential '" + p.name + "' is not finite at " + format_point(u));
  }
  return w;
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

/// W(u) = |u - a+|^2 |u - a-|^2 with a+- = (+-alpha, 0). Satisfies (H) at a+
/// for r0 = 0.9 alpha.
template <typename Scalar>
Potential<Scalar> two_well(Scalar alpha = Scalar(1)) {
  Potential<Scalar> p;
  p.name = "two_well";
  p.dim = 2;
  p.minimum = Point<Scalar>::Zero(2);
  p.minimum(0) = alpha;
  p.r0 = Scalar(0.9) * alpha;
  p.curvature_bound = Scalar(40) * alpha * alpha;
  p.value = [alpha](PointRef<Scalar> u) {
    const Scalar plus = (u(0) - alpha) * (u(0) - alpha) + u(1) * u(1);
    const Scalar minus = (u(0) + alpha) * (u(0) + alpha) + u(1) * u(1);
    return plus * minus;
  };
  p.gradient_into = [alpha](PointRef<Scalar> u, PointOut<Scalar> g) {
    const Scalar plus = (u(0) - alpha) * (u(0) - alpha) + u(1) * u(1);
    const Scalar minus = (u(0) + alpha) * (u(0) + alpha) + u(1) * u(1);
    g(0) = Scalar(2) * ((u(0) - alpha) * minus + (u(0) + alpha) * plus);
    g(1) = Scalar(2) * u(1) * (minus + plus);
  };
  return p;
}

/// W(u) = |u - a|^2.
template <typename Scalar>
Potential<Scalar> radial_quadratic(const Point<Scalar>& a, Scalar r0 = Scalar(1)) {
  Potential<Scalar> p;
  p.name = "quadratic";
  p.dim = a.size();
  p.minimum = a;
  p.r0 = r0;
  p.curvature_bound = Scalar(2);
  p.value = [a](PointRef<Scalar> u) { return (u - a).squaredNorm(); };
  p.gradient_into = [a](PointRef<Scalar> u, PointOut<Scalar> g) { g = Scalar(2) * (u - a); };
  return p;
}

/// W(u) = sin^2(4|u - a|) + |u - a|^2 / 100. Nonnegative with a global minimum
/// at a, but not radially monotone beyond pi/8.
template <typename Scalar>
Potential<Scalar> oscillatory(const Point<Scalar>& a, Scalar r0 = Scalar(1)) {
  using std::sin;
  using std::sqrt;
  Potential<Scalar> p;
  p.name = "oscillatory";
  p.dim = a.size();
  p.minimum = a;
  p.r0 = r0;
  p.curvature_bound = Scalar(40);
  p.value = [a](PointRef<Scalar> u) {
    const Scalar rho = (u - a).norm();
    const Scalar s = sin(Scalar(4) * rho);
    return s * s + rho * rho / Scalar(100);
  };
  p.gradient_into = [a](PointRef<Scalar> u, PointOut<Scalar> g) {
    const Scalar rho = (u - a).norm();
    // d/drho sin^2(4 rho) = 4 sin(8 rho); sin(8 rho)/rho -> 8 at the well.
    const Scalar ratio = rho > Scalar(1e-8) ? sin(Scalar(8) * rho) / rho : Scalar(8);
    g = (Scalar(4) * ratio + Scalar(1) / Scalar(50)) * (u - a);
  };
  return p;
}

/// Scalar double well W(u) = (1 - u^2)^2 / 4 on R^1, minimum at u = 1.
template <typename Scalar>
Potential<Scalar> scalar_double_well() {
  Potential<Scalar> p;
  p.name = "scalar_double_well";
  p.dim = 1;
  p.minimum = Point<Scalar>::Ones(1);
  p.r0 = Scalar(1);
  p.curvature_bound = Scalar(4);
  p.value = [](PointRef<Scalar> u) {
    const Scalar s = Scalar(1) - u(0) * u(0);
    return s * s / Scalar(4);
  };
  p.gradient_into = [](PointRef<Scalar> u, PointOut<Scalar> g) {
    g(0) = u(0) * u(0) * u(0) - u(0);
  };
  return p;
}

/// W = c everywhere. With c = 0 this is the degenerate "no potential" entry.
template <typename Scalar>
Potential<Scalar> constant_potential(const Point<Scalar>& a, Scalar c = Scalar(0)) {
  Potential<Scalar> p;
  p.name = c == Scalar(0) ? "zero" : "constant";
  p.dim = a.size();
  p.minimum = a;
  p.r0 = Scalar(1);
  p.curvature_bound = Scalar(0);
  p.value = [c](PointRef<Scalar>) { return c; };
  p.gradient_into = [](PointRef<Scalar>, PointOut<Scalar> g) { g.setZero(); };
  return p;
}

/// Name-based lookup used by the command line. Known names: two_well,
/// quadratic, oscillatory, scalar_double_well, zero. `params` is the
/// potential-specific parameter list (two_well: alpha; quadratic/oscillatory:
/// the well coordinates).
Potentiald make_potential(const std::string& name, const std::vector<double>& params);

// ---------------------------------------------------------------------------
// Hypothesis (H)
// ---------------------------------------------------------------------------

template <typename Scalar>
struct HReport {
  bool pass = false;
  Index n_directions = 0;
  Index n_radii = 0;
  /// min over sampled rays and consecutive radii of W(a + l_{k+1} w) - W(a + l_k w).
  Scalar margin = std::numeric_limits<Scalar>::infinity();
  /// Location of the worst pair; meaningful when pass is false.
  Point<Scalar> direction;
  Scalar lambda_lo = Scalar(0);
  Scalar lambda_hi = Scalar(0);
};

/// Unit directions used by the (H) sampler: equally spaced angles for m = 2,
/// +-1 for m = 1, and seeded random directions plus the signed axes otherwise.
template <typename Scalar>
std::vector<Point<Scalar>> sample_directions(Index m, Index n_dirs) {
  std::vector<Point<Scalar>> dirs;
  if (m == 1) {
    dirs.push_back(Point<Scalar>::Constant(1, Scalar(1)));
    dirs.push_back(Point<Scalar>::Constant(1, Scalar(-1)));
    return dirs;
  }
  if (m == 2) {
    const Scalar two_pi = Scalar(2) * Scalar(M_PI);
    for (Index k = 0; k < n_dirs; ++k) {
      Point<Scalar> w(2);
      const Scalar theta = two_pi * Scalar(k) / Scalar(n_dirs);
      w << std::cos(theta), std::sin(theta);
      dirs.push_back(w);
    }
    return dirs;
  }
  for (Index k = 0; k < m; ++k) {
    dirs.push_back(Point<Scalar>::Unit(m, k));
    dirs.push_back(-Point<Scalar>::Unit(m, k));
  }
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  while (static_cast<Index>(dirs.size()) < n_dirs) {
    Point<Scalar> w(m);
    for (Index k = 0; k < m; ++k) w(k) = Scalar(normal(rng));
    if (w.norm() > Scalar(1e-6)) dirs.push_back(w.normalized());
  }
  return dirs;
}

/// Falsifiable sampling check of (H): lambda -> W(a + lambda w) strictly
/// increasing on [0, r0) along every sampled unit direction w. The radius grid
/// is lambda_k = r0 k / n_lambda, so doubling n_lambda refines it.
template <typename Scalar>
HReport<Scalar> check_hypothesis_H(const Potential<Scalar>& p, const Point<Scalar>& a, Scalar r0,
                                   Index n_dirs = 64, Index n_lambda = 256) {
  if (!(r0 > Scalar(0))) throw DomainError("check_hypothesis_H: r0 must be positive");
  if (n_dirs < 8) throw DomainError("check_hypothesis_H: need at least 8 directions");
  if (n_lambda < 16) throw DomainError("check_hypothesis_H: need at least 16 radii");
  if (a.size() != p.dim) throw DomainError("check_hypothesis_H: well has wrong dimension");

  HReport<Scalar> report;
  report.n_radii = n_lambda;
  const auto dirs = sample_directions<Scalar>(p.dim, n_dirs);
  report.n_directions = static_cast<Index>(dirs.size());
  Point<Scalar> u(p.dim);
  for (const auto& w : dirs) {
    Scalar prev = checked_value(p, a);
    for (Index k = 1; k < n_lambda; ++k) {
      const Scalar lambda = r0 * Scalar(k) / Scalar(n_lambda);
      u = a + lambda * w;
      const Scalar cur = checked_value<Scalar>(p, u);
      const Scalar diff = cur - prev;
      if (diff < report.margin) {
        report.margin = diff;
        report.direction = w;
        report.lambda_lo = r0 * Scalar(k - 1) / Scalar(n_lambda);
        report.lambda_hi = lambda;
      }
      prev = cur;
    }
  }
  report.pass = report.margin > Scalar(0);
  return report;
}

// ---------------------------------------------------------------------------
// w0 = min { W(u) : |u - a| > exclusion radius } over a compact search region
// ---------------------------------------------------------------------------

template <typename Scalar>
struct Box {
  Point<Scalar> lo;
  Point<Scalar> hi;
};

/// { u : normal . u >= offset }
template <typename Scalar>
struct HalfSpace {
  Point<Scalar> normal;
  Scalar offset = Scalar(0);
};

template <typename Scalar>
struct W0Result {
  Scalar value = Scalar(0);
  Point<Scalar> argmin;
  Box<Scalar> box;
  std::optional<HalfSpace<Scalar>> constraint;
};

namespace detail {

template <typename Scalar>
Point<Scalar> project_feasible(Point<Scalar> u, const Point<Scalar>& a, Scalar radius,
                               const Box<Scalar>& box,
                               const std::optional<HalfSpace<Scalar>>& constraint) {
  for (int sweep = 0; sweep < 4; ++sweep) {
    u = u.cwiseMax(box.lo).cwiseMin(box.hi);
    if (constraint) {
      const Scalar nn = constraint->normal.squaredNorm();
      const Scalar gap = constraint->normal.dot(u) - constraint->offset;
      if (gap < Scalar(0)) u -= (gap / nn) * constraint->normal;
    }
    const Scalar d = (u - a).norm();
    if (d < radius && d > Scalar(0)) u = a + (radius / d) * (u - a);
  }
  return u;
}

template <typename Scalar>
bool feasible(const Point<Scalar>& u, const Point<Scalar>& a, Scalar radius,
              const Box<Scalar>& box, const std::optional<HalfSpace<Scalar>>& constraint,
              Scalar slack) {
  if ((u.array() < box.lo.array() - slack).any() || (u.array() > box.hi.array() + slack).any())
    return false;
  if (constraint && constraint->normal.dot(u) < constraint->offset - slack) return false;
  return (u - a).norm() >= radius * (Scalar(1) - slack);
}

}  // namespace detail

/// Grid search over box (intersected with the optional half-space) for the
/// minimum of W outside the open ball B(a, exclusion_radius), refined by a
/// projected compass search started at the best grid sample. Throws
/// DomainError when the result is <= degenerate_tol (a second zero of W is
/// feasible).
template <typename Scalar>
W0Result<Scalar> min_w_outside(const Potential<Scalar>& p, const Point<Scalar>& a,
                               Scalar exclusion_radius, const Box<Scalar>& box,
                               const std::optional<HalfSpace<std::type_identity_t<Scalar>>>& constraint,
                               Index grid_n = 400, Scalar degenerate_tol = Scalar(1e-12)) {
  const Index m = p.dim;
  if (!(exclusion_radius > Scalar(0))) throw DomainError("min_w_outside: exclusion radius must be positive");
  if (a.size() != m || box.lo.size() != m || box.hi.size() != m)
    throw DomainError("min_w_outside: dimension mismatch");
  if (((a.array() - exclusion_radius) < box.lo.array()).any() ||
      ((a.array() + exclusion_radius) > box.hi.array()).any())
    throw DomainError("min_w_outside: box must contain the exclusion ball");
  if (grid_n < 2) throw DomainError("min_w_outside: grid_n must be >= 2");
  double total = 1;
  for (Index k = 0; k < m; ++k) total *= double(grid_n + 1);
  if (total > 1e9) throw DomainError("min_w_outside: search lattice too large");

  W0Result<Scalar> out;
  out.box = box;
  out.constraint = constraint;
  out.value = std::numeric_limits<Scalar>::infinity();

  const Point<Scalar> step = (box.hi - box.lo) / Scalar(grid_n);
  std::vector<Index> idx(static_cast<size_t>(m), 0);
  Point<Scalar> u(m);
  const auto n_points = static_cast<long long>(total);
  for (long long flat = 0; flat < n_points; ++flat) {
    long long rem = flat;
    for (Index k = 0; k < m; ++k) {
      idx[size_t(k)] = Index(rem % (grid_n + 1));
      rem /= (grid_n + 1);
      u(k) = box.lo(k) + step(k) * Scalar(idx[size_t(k)]);
    }
    if ((u - a).norm() <= exclusion_radius) continue;
    if (constraint && constraint->normal.dot(u) < constraint->offset) continue;
    const Scalar w = checked_value<Scalar>(p, u);
    if (w < out.value) {
      out.value = w;
      out.argmin = u;
    }
  }
  if (!std::isfinite(out.value)) throw DomainError("min_w_outside: feasible region has no grid samples");

  // Projected compass search; infeasible trial points are pushed back onto the
  // feasible set, which lets the search slide along the exclusion sphere.
  Point<Scalar> best = out.argmin;
  Scalar best_w = out.value;
  Scalar h = step.maxCoeff();
  const Scalar h_min = Scalar(1e-13) * std::max(Scalar(1), (box.hi - box.lo).maxCoeff());
  Point<Scalar> trial(m);
  while (h > h_min) {
    bool improved = false;
    for (Index k = 0; k < m && !improved; ++k) {
      for (int sign : {1, -1}) {
        trial = best;
        trial(k) += Scalar(sign) * h;
        trial = detail::project_feasible<Scalar>(trial, a, exclusion_radius, box, constraint);
        if (!detail::feasible<Scalar>(trial, a, exclusion_radius, box, constraint, Scalar(1e-12)))
          continue;
        const Scalar w = checked_value<Scalar>(p, trial);
        if (w < best_w) {
          best_w = w;
          best = trial;
          improved = true;
          break;
        }
      }
    }
    if (!improved) h /= Scalar(2);
  }
  out.value = best_w;
  out.argmin = best;
  if (!(out.value > degenerate_tol)) {
    throw DomainError("w0-degenerate: min W outside the exclusion ball is " + std::to_string(double(out.value)) +
                      " at " + format_point(out.argmin) + " (a second zero of W is feasible)");
  }
  return out;
}

}  // namespace phase_replace
