#pragma once

#include "phase_replace/grid_field.hpp"
#include "phase_replace/parallel.hpp"
#include "phase_replace/potential.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace phase_replace {

// Discretization of J(u) = int 1/2 |grad u|^2 + W(u).
//
// Cells are the (nx-1) x (ny-1) rectangles between nodes. On a cell the
// kinetic density is 1/2 of the mean of the squared forward differences over
// its two x-edges and its two y-edges; the potential density is the mean of W
// over its four corners. Every term is therefore a function of single edges or
// single nodes, and an edge-wise 1-Lipschitz or node-wise W-decreasing
// modification of u decreases each term separately.
//
// Dirichlet nodes are evaluated at their pinned values; Neumann sides need no
// ghost cells (mirrored ghosts contribute zero normal differences).

template <typename Scalar>
struct EnergyBreakdown {
  Scalar kinetic = Scalar(0);
  Scalar potential = Scalar(0);
  Scalar total = Scalar(0);
  /// (nx-1) x (ny-1) energy per unit area; zero on cells outside the region.
  Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> cell_density;
  /// Energy attributed to each node column (half of each adjacent cell column).
  Eigen::Array<Scalar, Eigen::Dynamic, 1> column_energy;
  /// column_energy divided by the column's width: an approximation of the
  /// line integral of the energy density along x1 = const.
  Eigen::Array<Scalar, Eigen::Dynamic, 1> line_energy;
};

using EnergyBreakdownd = EnergyBreakdown<double>;

/// Nodal quadrature weight as a fraction of hx*hy: 1 inside, 1/2 on sides, 1/4 at corners.
template <typename Scalar>
Scalar nodal_weight(const Grid2<Scalar>& g, Index i, Index j) {
  Scalar w(1);
  if (i == 0 || i == g.nx - 1) w /= Scalar(2);
  if (j == 0 || j == g.ny - 1) w /= Scalar(2);
  return w;
}

template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> nodal_potential(const VectorField<Scalar>& u, const Potential<Scalar>& p) {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> w(u.grid.size());
  parallel_for(0, u.grid.size(), [&](Index k) { w(k) = p.value(u.values.col(k)); });
  return w;
}

/// Total, kinetic and potential energy. When `region` is given only cells
/// whose lower-left node lies in it are counted, so a partition of the nodes
/// induces a partition of the cells.
template <typename Scalar>
EnergyBreakdown<Scalar> total_energy(const VectorField<Scalar>& u_in, const Potential<Scalar>& p,
                                     const BoundarySpec<Scalar>& bc, const RegionMask* region = nullptr) {
  if (u_in.m() != p.dim) throw DomainError("total_energy: field and potential dimensions differ");
  if (region && !region->matches(u_in.grid)) throw DomainError("total_energy: region does not match grid");
  const VectorField<Scalar> u = pin_dirichlet(u_in, bc);
  const auto& g = u.grid;
  const Index cx = g.nx - 1;
  const Index cy = g.ny - 1;
  const auto w = nodal_potential(u, p);
  const Scalar area = g.hx * g.hy;
  const Scalar ihx2 = Scalar(1) / (g.hx * g.hx);
  const Scalar ihy2 = Scalar(1) / (g.hy * g.hy);

  Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> kin(cx, cy), pot(cx, cy);
  parallel_for(0, cy, [&](Index j) {
    for (Index i = 0; i < cx; ++i) {
      if (region && !region->contains(i, j)) {
        kin(i, j) = Scalar(0);
        pot(i, j) = Scalar(0);
        continue;
      }
      const Index k00 = g.index(i, j), k10 = g.index(i + 1, j);
      const Index k01 = g.index(i, j + 1), k11 = g.index(i + 1, j + 1);
      const Scalar dx = (u.values.col(k10) - u.values.col(k00)).squaredNorm() +
                        (u.values.col(k11) - u.values.col(k01)).squaredNorm();
      const Scalar dy = (u.values.col(k01) - u.values.col(k00)).squaredNorm() +
                        (u.values.col(k11) - u.values.col(k10)).squaredNorm();
      kin(i, j) = Scalar(0.25) * area * (dx * ihx2 + dy * ihy2);
      pot(i, j) = Scalar(0.25) * area * (w(k00) + w(k10) + w(k01) + w(k11));
    }
  });

  for (Index j = 0; j < cy; ++j)
    for (Index i = 0; i < cx; ++i)
      if (!std::isfinite(kin(i, j)) || !std::isfinite(pot(i, j)))
        throw EvaluationError("total_energy: non-finite contribution in cell (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");

  EnergyBreakdown<Scalar> e;
  e.kinetic = pairwise_sum(kin.data(), kin.size());
  e.potential = pairwise_sum(pot.data(), pot.size());
  e.total = e.kinetic + e.potential;
  e.cell_density = (kin + pot) / area;

  e.column_energy.setZero(g.nx);
  e.line_energy.setZero(g.nx);
  for (Index i = 0; i < cx; ++i) {
    const Scalar col = pairwise_sum(Eigen::Array<Scalar, Eigen::Dynamic, 1>(kin.row(i).transpose() + pot.row(i).transpose()));
    e.column_energy(i) += col / Scalar(2);
    e.column_energy(i + 1) += col / Scalar(2);
  }
  for (Index i = 0; i < g.nx; ++i) {
    const Scalar width = (i == 0 || i == g.nx - 1) ? g.hx / Scalar(2) : g.hx;
    e.line_energy(i) = e.column_energy(i) / width;
  }
  return e;
}

namespace detail {

/// Gradient kernel for a field whose Dirichlet nodes already hold their
/// values; `grad` is resized as needed and zero on pinned nodes.
template <typename Scalar>
void gradient_kernel(const VectorField<Scalar>& u, const Potential<Scalar>& p, const RegionMask& pinned,
                     Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& grad) {
  const auto& g = u.grid;
  const Index m = u.m();
  const Index nx = g.nx, ny = g.ny;
  grad.resize(m, g.size());
  const Scalar ihx2 = Scalar(1) / (g.hx * g.hx);
  const Scalar ihy2 = Scalar(1) / (g.hy * g.hy);
  const Scalar* U = u.values.data();
  Scalar* G = grad.data();

  parallel_for(0, ny, [&](Index j) {
    Point<Scalar> wu(m);
    const Scalar cx = (j == 0 || j == ny - 1) ? Scalar(0.5) : Scalar(1);
    for (Index i = 0; i < nx; ++i) {
      const Index k = g.index(i, j);
      Scalar* out = G + k * m;
      if (pinned.contains(k)) {
        std::fill(out, out + m, Scalar(0));
        continue;
      }
      const Scalar cy = (i == 0 || i == nx - 1) ? Scalar(0.5) : Scalar(1);
      const Scalar* c0 = U + k * m;
      p.gradient_into(Eigen::Map<const Point<Scalar>>(c0, m), wu);
      const Scalar w = cx * cy;
      for (Index c = 0; c < m; ++c) {
        const Scalar uc = c0[c];
        Scalar acc = w * wu(c);
        if (i > 0) acc -= cx * ihx2 * (c0[c - m] - uc);
        if (i + 1 < nx) acc -= cx * ihx2 * (c0[c + m] - uc);
        if (j > 0) acc -= cy * ihy2 * (c0[c - m * nx] - uc);
        if (j + 1 < ny) acc -= cy * ihy2 * (c0[c + m * nx] - uc);
        out[c] = acc;
      }
    }
  });
}

}  // namespace detail

/// Discrete first variation: g(node) = dJ/du(node) / (hx hy), zero on Dirichlet
/// nodes. Hence J(u - t g) = J(u) - t <g, g> hx hy + O(t^2), and on free nodes
/// g = -w(node) * residual(node) with w the nodal quadrature weight.
template <typename Scalar>
VectorField<Scalar> energy_gradient(const VectorField<Scalar>& u_in, const Potential<Scalar>& p,
                                    const BoundarySpec<Scalar>& bc) {
  if (u_in.m() != p.dim) throw DomainError("energy_gradient: field and potential dimensions differ");
  const VectorField<Scalar> u = pin_dirichlet(u_in, bc);
  VectorField<Scalar> grad(u.grid, u.m());
  detail::gradient_kernel(u, p, pinned_mask(u.grid, bc), grad.values);
  return grad;
}

template <typename Scalar>
struct ResidualField {
  VectorField<Scalar> values;
  /// Largest component magnitude over free nodes.
  Scalar max_norm = Scalar(0);
};

/// Delta_h u - W_u(u) with the 5-point Laplacian on the ghost-extended field;
/// identically zero on Dirichlet nodes.
template <typename Scalar>
ResidualField<Scalar> euler_lagrange_residual(const VectorField<Scalar>& u, const Potential<Scalar>& p,
                                              const BoundarySpec<Scalar>& bc) {
  if (u.m() != p.dim) throw DomainError("euler_lagrange_residual: field and potential dimensions differ");
  const auto& g = u.grid;
  if (g.nx < 3 || g.ny < 3) throw DomainError("euler_lagrange_residual: grid must be at least 3x3");
  const auto ext = apply_boundary(u, bc);
  ResidualField<Scalar> res{VectorField<Scalar>(g, u.m()), Scalar(0)};
  const Scalar ihx2 = Scalar(1) / (g.hx * g.hx);
  const Scalar ihy2 = Scalar(1) / (g.hy * g.hy);
  parallel_for(0, g.ny, [&](Index j) {
    Point<Scalar> wu(u.m());
    for (Index i = 0; i < g.nx; ++i) {
      if (bc.pinned_by(g, i, j)) continue;
      const auto c = ext.at(i, j);
      p.gradient_into(c, wu);
      res.values.node(i, j) = (ext.at(i - 1, j) + ext.at(i + 1, j) - Scalar(2) * c) * ihx2 +
                              (ext.at(i, j - 1) + ext.at(i, j + 1) - Scalar(2) * c) * ihy2 - wu;
    }
  });
  res.max_norm = res.values.values.size() ? res.values.values.cwiseAbs().maxCoeff() : Scalar(0);
  return res;
}

}  // namespace phase_replace
