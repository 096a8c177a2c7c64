#include <doctest.h>

#include "fixtures.hpp"
#include "phase_replace/energy.hpp"

using namespace phase_replace;
using fixtures::pt;

TEST_CASE("energy of the well is zero") {
  const auto g = Grid2d::strip(4, 4, 0.5);
  const auto p = two_well<double>();
  const auto e = total_energy(VectorFieldd::constant(g, p.minimum), p, BoundarySpecd::strip(p.minimum));
  CHECK(e.total == 0);
  CHECK(e.kinetic == 0);
  CHECK(e.potential == 0);
  CHECK(e.column_energy.size() == g.nx);
}

TEST_CASE("linear field without potential") {
  const auto g = Grid2d::rectangle(11, 21, 0.1, 0.1);
  const double slope = 3;
  VectorFieldd u(g, 2);
  for (Index j = 0; j < g.ny; ++j)
    for (Index i = 0; i < g.nx; ++i) u.node(i, j) = pt(slope * g.x1(i), 0.5);
  const auto e = total_energy(u, constant_potential<double>(pt(0, 0)), BoundarySpecd::all_neumann());
  CHECK(e.kinetic == doctest::Approx(0.5 * slope * slope * 2.0).epsilon(1e-12));
  CHECK(e.potential == 0);
  // Line energy of each column equals the x2-integral of |grad u|^2 / 2.
  for (Index i = 0; i < g.nx; ++i) CHECK(e.line_energy(i) == doctest::Approx(0.5 * slope * slope * 2.0));
  CHECK(e.column_energy.sum() == doctest::Approx(e.total));
}

TEST_CASE("heteroclinic profile energy") {
  // tanh(x / sqrt 2) solves the scalar double-well equation; its energy is
  // 2 sqrt 2 / 3 per unit length in x2.
  const auto g = Grid2d::rectangle(2001, 3, 0.01, 1.0, -10.0, 0.0);
  VectorFieldd u(g, 1);
  for (Index j = 0; j < g.ny; ++j)
    for (Index i = 0; i < g.nx; ++i) u.node(i, j)(0) = std::tanh(g.x1(i) / std::sqrt(2.0));
  const auto e = total_energy(u, scalar_double_well<double>(), BoundarySpecd::all_neumann());
  CHECK(e.total / 2 == doctest::Approx(0.9428090415820635).epsilon(0.01));
  // Equipartition for the exact profile.
  CHECK(e.kinetic == doctest::Approx(e.potential).epsilon(0.01));
}

TEST_CASE("energy is additive over node partitions") {
  std::mt19937_64 rng(3);
  const auto g = Grid2d::rectangle(20, 15, 0.1, 0.2);
  const auto p = two_well<double>();
  const auto u = fixtures::smooth_field(g, p.minimum, rng, 4, 0.5);
  const auto bc = BoundarySpecd::all_neumann();
  const auto A = RegionMask::where(g, [](double x, double y) { return x + y < 1.5; });
  const auto B = ~A;
  const auto all = total_energy(u, p, bc);
  const auto ea = total_energy(u, p, bc, &A);
  const auto eb = total_energy(u, p, bc, &B);
  CHECK(ea.total + eb.total == doctest::Approx(all.total).epsilon(1e-13));
  CHECK(ea.kinetic + eb.kinetic == doctest::Approx(all.kinetic).epsilon(1e-13));
}

TEST_CASE("energy_gradient matches central differences") {
  std::mt19937_64 rng(2024);
  const auto p = two_well<double>();
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = Grid2d::rectangle(8, 8, 0.3, 0.25, 0.0, -1.0);
    BoundarySpecd bc;
    if (trial % 2) bc.dirichlet(Side::Left, pt(0, 0)).dirichlet(Side::Right, p.minimum);
    auto u = pin_dirichlet(fixtures::rough_field(g, p.minimum, rng, 0.6), bc);
    const auto grad = energy_gradient(u, p, bc);
    const double eps = 1e-6;
    double err = 0, scale = 0;
    for (Index k = 0; k < g.size(); ++k)
      for (Index c = 0; c < 2; ++c) {
        auto up = u, dn = u;
        up.values(c, k) += eps;
        dn.values(c, k) -= eps;
        const double fd = (total_energy(up, p, bc).total - total_energy(dn, p, bc).total) / (2 * eps);
        const double an = grad.values(c, k) * g.hx * g.hy;
        err = std::max(err, std::abs(fd - an));
        scale = std::max(scale, std::abs(an));
      }
    CHECK(err <= 1e-5 * scale);
  }
}

TEST_CASE("gradient stencil is local") {
  std::mt19937_64 rng(9);
  const auto g = Grid2d::rectangle(9, 9, 0.2, 0.2);
  const auto p = two_well<double>();
  const auto bc = BoundarySpecd::all_neumann();
  const auto u = fixtures::rough_field(g, p.minimum, rng, 0.3);
  auto v = u;
  v.node(4, 4) += pt(0.1, -0.2);
  const Eigen::MatrixXd d = energy_gradient(v, p, bc).values - energy_gradient(u, p, bc).values;
  for (Index j = 0; j < g.ny; ++j)
    for (Index i = 0; i < g.nx; ++i) {
      const bool near = std::abs(i - 4) + std::abs(j - 4) <= 1;
      if (!near) CHECK(d.col(g.index(i, j)).norm() == 0);
    }
  CHECK(d.col(g.index(4, 4)).norm() > 0);
}

TEST_CASE("Euler-Lagrange residual") {
  const auto g = Grid2d::rectangle(7, 6, 0.5, 0.5);
  const auto bc = BoundarySpecd::all_neumann();
  SUBCASE("vanishes at the well") {
    const auto p = two_well<double>();
    CHECK(euler_lagrange_residual(VectorFieldd::constant(g, p.minimum), p, bc).max_norm == 0);
  }
  SUBCASE("quadratic field has Laplacian 2 inside") {
    VectorFieldd u(g, 1);
    for (Index j = 0; j < g.ny; ++j)
      for (Index i = 0; i < g.nx; ++i) u.node(i, j)(0) = g.x1(i) * g.x1(i);
    const auto p = constant_potential<double>(Pointd::Zero(1));
    const auto res = euler_lagrange_residual(u, p, bc);
    for (Index j = 0; j < g.ny; ++j)
      for (Index i = 1; i + 1 < g.nx; ++i) CHECK(res.values.node(i, j)(0) == doctest::Approx(2));
  }
  SUBCASE("gradient is minus the weighted residual on free nodes") {
    std::mt19937_64 rng(4);
    const auto p = two_well<double>();
    BoundarySpecd bcd;
    bcd.dirichlet(Side::Right, p.minimum);
    const auto u = pin_dirichlet(fixtures::rough_field(g, p.minimum, rng, 0.4), bcd);
    const auto grad = energy_gradient(u, p, bcd);
    const auto res = euler_lagrange_residual(u, p, bcd);
    for (Index j = 0; j < g.ny; ++j)
      for (Index i = 0; i < g.nx; ++i) {
        const auto gk = grad.node(i, j);
        const auto rk = res.values.node(i, j);
        CHECK((gk + nodal_weight(g, i, j) * rk).norm() <= 1e-10 * (1 + rk.norm()));
      }
  }
  SUBCASE("too small a grid") {
    CHECK_THROWS_AS(euler_lagrange_residual(VectorFieldd(Grid2d::rectangle(2, 5, 1.0, 1.0), 2),
                                            two_well<double>(), bc),
                    DomainError);
  }
}

TEST_CASE("non-finite values are reported") {
  const auto g = Grid2d::rectangle(4, 4, 1.0, 1.0);
  auto u = VectorFieldd::constant(g, pt(1, 0));
  u.node(2, 1)(0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(total_energy(u, two_well<double>(), BoundarySpecd::all_neumann()), EvaluationError);
}

TEST_CASE("discretization converges at first order or better") {
  // u - a = (0.3 sin(pi x) cos(pi y), 0.2 cos(pi x)) on the unit square with W = |u - a|^2.
  const Pointd a = pt(1, 0);
  const auto p = radial_quadratic<double>(a);
  const double pi = M_PI;
  const double exact = 0.0325 * pi * pi + 0.0425;
  auto error = [&](Index n) {
    const double h = 1.0 / double(n - 1);
    const auto g = Grid2d::rectangle(n, n, h, h);
    VectorFieldd u(g, 2);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) {
        const double x = g.x1(i), y = g.x2(j);
        u.node(i, j) = a + pt(0.3 * std::sin(pi * x) * std::cos(pi * y), 0.2 * std::cos(pi * x));
      }
    return std::abs(total_energy(u, p, BoundarySpecd::all_neumann()).total - exact);
  };
  const double e1 = error(17), e2 = error(33), e3 = error(65);
  CHECK(std::log2(e1 / e2) >= 0.9);
  CHECK(std::log2(e2 / e3) >= 0.9);
}
