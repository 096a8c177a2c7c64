#pragma once

#include "phase_replace/grid_field.hpp"

#include <cmath>
#include <random>

namespace fixtures {

using namespace phase_replace;

inline Pointd pt(double x, double y) { return (Pointd(2) << x, y).finished(); }

/// a plus a sum of Gaussian bumps with random centres, widths and vector amplitudes.
inline VectorFieldd smooth_field(const Grid2d& g, const Pointd& a, std::mt19937_64& rng, int n_bumps,
                                 double amplitude) {
  std::uniform_real_distribution<double> unif(0, 1);
  std::normal_distribution<double> nrm(0, 1);
  const double lx = g.hx * double(g.nx - 1), ly = g.hy * double(g.ny - 1);
  VectorFieldd u = VectorFieldd::constant(g, a);
  for (int b = 0; b < n_bumps; ++b) {
    const double cx = g.x0 + lx * unif(rng), cy = g.y0 + ly * unif(rng);
    const double s = (0.1 + 0.2 * unif(rng)) * std::min(lx, ly);
    Pointd c(a.size());
    for (Index k = 0; k < c.size(); ++k) c(k) = nrm(rng);
    c *= amplitude * unif(rng) / std::max(c.norm(), 1e-12);
    for (Index j = 0; j < g.ny; ++j)
      for (Index i = 0; i < g.nx; ++i) {
        const double d2 = std::pow(g.x1(i) - cx, 2) + std::pow(g.x2(j) - cy, 2);
        u.node(i, j) += std::exp(-d2 / (2 * s * s)) * c;
      }
  }
  return u;
}

/// Fully random nodal values a + U(-amp, amp).
inline VectorFieldd rough_field(const Grid2d& g, const Pointd& a, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> unif(-amp, amp);
  VectorFieldd u = VectorFieldd::constant(g, a);
  for (Index k = 0; k < u.values.size(); ++k) u.values.data()[k] += unif(rng);
  return u;
}

/// Field whose rho equals r exactly on a central disc, a plateau above 2r at
/// the centre and a smooth decay to zero at the border. Used for level-collision cases.
inline VectorFieldd collision_field(const Grid2d& g, const Pointd& a, double r) {
  VectorFieldd u = VectorFieldd::constant(g, a);
  const double lx = g.hx * double(g.nx - 1), ly = g.hy * double(g.ny - 1);
  const double cx = g.x0 + lx / 2, cy = g.y0 + ly / 2, L = std::min(lx, ly);
  for (Index j = 0; j < g.ny; ++j)
    for (Index i = 0; i < g.nx; ++i) {
      const double d = std::hypot(g.x1(i) - cx, g.x2(j) - cy) / L;
      double rho = 0;
      if (d < 0.1)
        rho = 2.5 * r;
      else if (d < 0.2)
        rho = r;
      else if (d < 0.35)
        rho = r * std::pow(std::cos((d - 0.2) / 0.15 * M_PI / 2), 2);
      // Second component only: |(0, rho)| == rho exactly.
      u.node(i, j)(1) += rho;
    }
  return u;
}

}  // namespace fixtures
