#pragma once

#include "phase_replace/energy.hpp"
#include "phase_replace/replacement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace phase_replace {

/// Surgery used as a descent accelerator inside the flow: every `period`
/// steps, find the first node column whose max |u - a| is below r/2 and apply
/// the alpha surgery with radius r on all columns to its right.
template <typename Scalar>
struct AccelerationConfig {
  Index period = 0;  // 0 disables
  Point<Scalar> a;
  Scalar r = Scalar(0);
};

template <typename Scalar>
struct FlowConfig {
  Scalar dt = Scalar(0);
  Index max_steps = 10000;
  /// Stop when the max-norm of the Euler-Lagrange residual on free nodes drops
  /// to this value (this also bounds the energy gradient, which is smaller).
  Scalar tolerance = Scalar(1e-6);
  /// Energy is recorded (and checked for descent) every this many steps.
  Index record_every = 100;
  /// Hessian bound of W for the stability check; defaults to the potential's.
  std::optional<Scalar> curvature_bound;
  AccelerationConfig<Scalar> acceleration;
  std::uint64_t seed = 1;
};

/// Explicit-Euler stability bound 1 / (4 (1/hx^2 + 1/hy^2) + L_W).
template <typename Scalar>
Scalar stable_time_step(const Grid2<Scalar>& g, Scalar curvature_bound) {
  return Scalar(1) / (Scalar(4) * (Scalar(1) / (g.hx * g.hx) + Scalar(1) / (g.hy * g.hy)) + curvature_bound);
}

template <typename Scalar>
struct FlowRecord {
  Index step = 0;
  Scalar total = Scalar(0);
  Scalar kinetic = Scalar(0);
  Scalar potential = Scalar(0);
  Scalar grad_norm = Scalar(0);
  Index replacements = 0;
};

template <typename Scalar>
struct FlowHistory {
  std::vector<FlowRecord<Scalar>> records;
  /// Reports of accepted surgery steps.
  std::vector<ReplacementReport<Scalar>> activations;
  bool converged = false;
  Index steps = 0;
  Scalar final_residual = Scalar(0);
  /// min of the first component over the final field (positivity monitor).
  Scalar min_first_component = Scalar(0);
};

template <typename Scalar>
struct FlowResult {
  VectorField<Scalar> field;
  FlowHistory<Scalar> history;
};

/// Thrown when the recorded energy rises; almost always a time step above the
/// stability bound for the potential's actual curvature.
class CflViolation : public Error {
 public:
  using Error::Error;
};

namespace detail {

/// Smallest column whose max radius is < r/2, or -1.
template <typename Scalar>
Index first_quiet_column(const VectorField<Scalar>& u, const Point<Scalar>& a, Scalar r) {
  const auto pd = polar_decompose(u, a);
  const auto cmax = column_max(u.grid, pd.rho);
  for (Index i = 0; i < u.grid.nx; ++i)
    if (cmax(i) < r / Scalar(2)) return i;
  return -1;
}

}  // namespace detail

/// Gradient flow u <- u - dt * energy_gradient(u) with Dirichlet nodes held
/// at their values. Descent is checked at every record; a rise beyond a
/// relative slack of 1e-12 aborts with CflViolation.
template <typename Scalar>
FlowResult<Scalar> minimize(const VectorField<Scalar>& u0, const Potential<Scalar>& p, const BoundarySpec<Scalar>& bc,
                            const FlowConfig<Scalar>& cfg) {
  if (u0.m() != p.dim) throw DomainError("minimize: field and potential dimensions differ");
  const auto& g = u0.grid;
  const Scalar lw = cfg.curvature_bound.value_or(p.curvature_bound);
  const Scalar dt_max = stable_time_step(g, lw);
  if (!(cfg.dt > 0) || cfg.dt > dt_max)
    throw DomainError("minimize: dt = " + std::to_string(double(cfg.dt)) + " outside (0, " +
                      std::to_string(double(dt_max)) + "]");
  if (cfg.record_every < 1) throw DomainError("minimize: record_every must be >= 1");
  const auto& acc = cfg.acceleration;
  if (acc.period > 0) CutoffParams<Scalar>{acc.a, acc.r}.validate(p);

  FlowResult<Scalar> out{pin_dirichlet(u0, bc), {}};
  auto& u = out.field;
  auto& hist = out.history;
  if (!u.all_finite()) throw EvaluationError("minimize: initial field is not finite");

  Eigen::Array<Scalar, Eigen::Dynamic, 1> inv_weight(g.size());
  for (Index j = 0; j < g.ny; ++j)
    for (Index i = 0; i < g.nx; ++i) inv_weight(g.index(i, j)) = Scalar(1) / nodal_weight(g, i, j);

  Index activations = 0;
  auto record = [&](Index step, Scalar grad_norm) {
    const auto e = total_energy(u, p, bc);
    if (!hist.records.empty()) {
      const Scalar prev = hist.records.back().total;
      const Scalar slack = Scalar(1e-12) * std::max(Scalar(1), std::abs(prev));
      if (e.total > prev + slack)
        throw CflViolation("minimize: energy rose from " + std::to_string(double(prev)) + " to " +
                           std::to_string(double(e.total)) + " at step " + std::to_string(step) +
                           "; reduce dt");
    }
    hist.records.push_back({step, e.total, e.kinetic, e.potential, grad_norm, activations});
  };

  const RegionMask pinned = pinned_mask(g, bc);
  const Index m = u.m();
  typename VectorField<Scalar>::Matrix grad;
  Scalar grad_norm = Scalar(0);
  Scalar residual = Scalar(0);
  auto evaluate = [&] {
    detail::gradient_kernel(u, p, pinned, grad);
    grad_norm = Scalar(0);
    residual = Scalar(0);
    const Scalar* G = grad.data();
    for (Index k = 0; k < g.size(); ++k) {
      Scalar mk(0);
      for (Index c = 0; c < m; ++c) mk = std::max(mk, std::abs(G[k * m + c]));
      grad_norm = std::max(grad_norm, mk);
      residual = std::max(residual, mk * inv_weight(k));
    }
  };

  evaluate();
  record(0, grad_norm);

  Index step = 0;
  while (residual > cfg.tolerance && step < cfg.max_steps) {
    u.values.noalias() -= cfg.dt * grad;
    ++step;
    if (!u.all_finite()) throw EvaluationError("minimize: field became non-finite at step " + std::to_string(step));

    if (acc.period > 0 && step % acc.period == 0) {
      const Index col = detail::first_quiet_column(u, acc.a, acc.r);
      if (col >= 0 && col + 1 < g.nx) {
        const auto A = RegionMask::columns_from(g.nx, g.ny, col + 1);
        auto res = replace(u, A, p, CutoffParams<Scalar>{acc.a, acc.r}, bc, SurgeryMode::Alpha);
        if (res.report.strict_expected && res.report.total_delta < Scalar(0)) {
          u = std::move(res.field);
          ++activations;
          hist.activations.push_back(std::move(res.report));
        }
      }
    }

    evaluate();
    if (step % cfg.record_every == 0) record(step, grad_norm);
  }
  if (hist.records.back().step != step) record(step, grad_norm);

  hist.steps = step;
  hist.converged = residual <= cfg.tolerance;
  hist.final_residual = residual;
  hist.min_first_component = u.values.row(0).minCoeff();
  return out;
}

/// a + amplitude * U(-1, 1) noise per component, then Dirichlet nodes pinned.
template <typename Scalar>
VectorField<Scalar> noisy_initial_field(const Grid2<Scalar>& g, const Point<Scalar>& a, Scalar amplitude,
                                        std::uint64_t seed, const BoundarySpec<Scalar>& bc) {
  VectorField<Scalar> u = VectorField<Scalar>::constant(g, a);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (Index k = 0; k < u.values.size(); ++k) u.values.data()[k] += amplitude * Scalar(unif(rng));
  return pin_dirichlet(std::move(u), bc);
}

}  // namespace phase_replace
