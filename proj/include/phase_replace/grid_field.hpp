#pragma once

#include "phase_replace/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace phase_replace {

enum class DomainTag { Rectangle, Strip };

/// Rectangular node grid. Node (i, j) sits at (x0 + i hx, y0 + j hy); flat
/// storage index is j * nx + i (rows of constant x2).
template <typename Scalar>
struct Grid2 {
  Index nx = 0;
  Index ny = 0;
  Scalar hx = Scalar(1);
  Scalar hy = Scalar(1);
  Scalar x0 = Scalar(0);
  Scalar y0 = Scalar(0);
  DomainTag tag = DomainTag::Rectangle;
  /// Strip parameters of (0, mu R) x [-R, R]; zero for plain rectangles.
  Scalar R = Scalar(0);
  Scalar mu = Scalar(0);

  Index size() const { return nx * ny; }
  Index index(Index i, Index j) const { return j * nx + i; }
  Index column_of(Index k) const { return k % nx; }
  Index row_of(Index k) const { return k / nx; }
  Scalar x1(Index i) const { return x0 + Scalar(i) * hx; }
  Scalar x2(Index j) const { return y0 + Scalar(j) * hy; }
  Scalar cell_area() const { return hx * hy; }

  static Grid2 rectangle(Index nx, Index ny, Scalar hx, Scalar hy, Scalar x0 = Scalar(0),
                         Scalar y0 = Scalar(0)) {
    Grid2 g;
    g.nx = nx;
    g.ny = ny;
    g.hx = hx;
    g.hy = hy;
    g.x0 = x0;
    g.y0 = y0;
    g.validate();
    return g;
  }

  /// Strip (0, mu R) x [-R, R] with spacing as close to h as the node counts allow.
  static Grid2 strip(Scalar R, Scalar mu, Scalar h) {
    if (!(R > 0) || !(mu > 0) || !(h > 0)) throw DomainError("strip grid: R, mu and h must be positive");
    Grid2 g;
    g.tag = DomainTag::Strip;
    g.R = R;
    g.mu = mu;
    g.nx = std::max<Index>(2, static_cast<Index>(std::llround(double(mu * R / h))) + 1);
    g.ny = std::max<Index>(2, static_cast<Index>(std::llround(double(Scalar(2) * R / h))) + 1);
    g.hx = mu * R / Scalar(g.nx - 1);
    g.hy = Scalar(2) * R / Scalar(g.ny - 1);
    g.x0 = Scalar(0);
    g.y0 = -R;
    g.validate();
    return g;
  }

  void validate() const {
    if (nx < 2 || ny < 2) throw DomainError("grid needs at least 2 nodes per direction");
    if (!(hx > 0) || !(hy > 0)) throw DomainError("grid spacings must be positive");
    if (tag == DomainTag::Strip) {
      using std::abs;
      const Scalar span1 = Scalar(nx - 1) * hx;
      const Scalar span2 = Scalar(ny - 1) * hy;
      if (abs(span1 - mu * R) > Scalar(1e-12) * mu * R || abs(span2 - Scalar(2) * R) > Scalar(1e-12) * 2 * R)
        throw DomainError("strip grid does not span (0, mu R) x [-R, R]");
    }
  }

  bool same_shape(const Grid2& o) const {
    return nx == o.nx && ny == o.ny && hx == o.hx && hy == o.hy && x0 == o.x0 && y0 == o.y0;
  }
};

using Grid2d = Grid2<double>;

/// m-component field sampled at the grid nodes; column k of `values` is the
/// value at flat node k.
template <typename Scalar>
struct VectorField {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Grid2<Scalar> grid;
  Matrix values;

  VectorField() = default;
  VectorField(const Grid2<Scalar>& g, Index m) : grid(g), values(Matrix::Zero(m, g.size())) {}

  static VectorField constant(const Grid2<Scalar>& g, const Point<Scalar>& c) {
    VectorField f(g, c.size());
    f.values.colwise() = c;
    return f;
  }

  Index m() const { return values.rows(); }
  auto node(Index i, Index j) { return values.col(grid.index(i, j)); }
  auto node(Index i, Index j) const { return values.col(grid.index(i, j)); }
  bool all_finite() const { return values.allFinite(); }
};

using VectorFieldd = VectorField<double>;

// ---------------------------------------------------------------------------
// Polar decomposition u = a + rho n
// ---------------------------------------------------------------------------

template <typename Scalar>
struct PolarDecomposition {
  Grid2<Scalar> grid;
  Point<Scalar> center;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> rho;
  /// Unit direction per node; zero where undefined.
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> unit;
  Eigen::Array<bool, Eigen::Dynamic, 1> defined;
};

template <typename Scalar>
PolarDecomposition<Scalar> polar_decompose(const VectorField<Scalar>& u, const Point<Scalar>& a,
                                           Scalar rho_tol = Scalar(1e-12)) {
  if (a.size() != u.m()) throw DomainError("polar_decompose: center has wrong dimension");
  if (!(rho_tol > 0)) throw DomainError("polar_decompose: rho_tol must be positive");
  PolarDecomposition<Scalar> pd;
  pd.grid = u.grid;
  pd.center = a;
  const Index n = u.grid.size();
  pd.rho.resize(n);
  pd.unit.setZero(u.m(), n);
  pd.defined.resize(n);
  for (Index k = 0; k < n; ++k) {
    const auto d = u.values.col(k) - a;
    const Scalar r = d.norm();
    pd.rho(k) = r;
    pd.defined(k) = r >= rho_tol;
    if (pd.defined(k)) pd.unit.col(k) = d / r;
  }
  return pd;
}

// ---------------------------------------------------------------------------
// Region masks
// ---------------------------------------------------------------------------

/// Node indicator of an open set A. Its relative boundary is the set of nodes
/// outside A having a 4-neighbour in A: the nodes whose values enter the
/// difference quotients across the edge of A.
class RegionMask {
 public:
  RegionMask() = default;
  RegionMask(Index nx, Index ny, bool fill = false)
      : nx_(nx), ny_(ny), inside_(static_cast<size_t>(nx * ny), fill ? 1 : 0) {}

  template <typename Scalar>
  static RegionMask none(const Grid2<Scalar>& g) {
    return RegionMask(g.nx, g.ny, false);
  }
  template <typename Scalar>
  static RegionMask full(const Grid2<Scalar>& g) {
    return RegionMask(g.nx, g.ny, true);
  }
  /// Nodes whose coordinates satisfy pred(x1, x2).
  template <typename Scalar, typename Pred>
  static RegionMask where(const Grid2<Scalar>& g, Pred&& pred) {
    RegionMask m(g.nx, g.ny);
    for (Index j = 0; j < g.ny; ++j)
      for (Index i = 0; i < g.nx; ++i)
        if (pred(g.x1(i), g.x2(j))) m.set(i, j, true);
    return m;
  }
  /// Nodes with first index >= i_min.
  static RegionMask columns_from(Index nx, Index ny, Index i_min) {
    RegionMask m(nx, ny);
    for (Index j = 0; j < ny; ++j)
      for (Index i = std::max<Index>(0, i_min); i < nx; ++i) m.set(i, j, true);
    return m;
  }

  Index nx() const { return nx_; }
  Index ny() const { return ny_; }
  Index size() const { return nx_ * ny_; }
  bool contains(Index k) const { return inside_[size_t(k)] != 0; }
  bool contains(Index i, Index j) const { return contains(j * nx_ + i); }
  void set(Index i, Index j, bool v) { inside_[size_t(j * nx_ + i)] = v ? 1 : 0; }
  void set(Index k, bool v) { inside_[size_t(k)] = v ? 1 : 0; }

  Index count() const {
    Index c = 0;
    for (auto v : inside_) c += v;
    return c;
  }
  bool empty() const { return count() == 0; }

  template <typename Scalar>
  Scalar area(const Grid2<Scalar>& g) const {
    return Scalar(count()) * g.hx * g.hy;
  }

  std::vector<Index> relative_boundary() const {
    std::vector<Index> out;
    for (Index j = 0; j < ny_; ++j) {
      for (Index i = 0; i < nx_; ++i) {
        if (contains(i, j)) continue;
        const bool touches = (i > 0 && contains(i - 1, j)) || (i + 1 < nx_ && contains(i + 1, j)) ||
                             (j > 0 && contains(i, j - 1)) || (j + 1 < ny_ && contains(i, j + 1));
        if (touches) out.push_back(j * nx_ + i);
      }
    }
    return out;
  }

  RegionMask operator&(const RegionMask& o) const { return combine(o, [](bool a, bool b) { return a && b; }); }
  RegionMask operator|(const RegionMask& o) const { return combine(o, [](bool a, bool b) { return a || b; }); }
  RegionMask operator~() const {
    RegionMask m(nx_, ny_);
    for (size_t k = 0; k < inside_.size(); ++k) m.inside_[k] = inside_[k] ? 0 : 1;
    return m;
  }
  bool operator==(const RegionMask& o) const = default;

  template <typename Scalar>
  bool matches(const Grid2<Scalar>& g) const {
    return nx_ == g.nx && ny_ == g.ny;
  }

 private:
  template <typename Op>
  RegionMask combine(const RegionMask& o, Op op) const {
    if (nx_ != o.nx_ || ny_ != o.ny_) throw DomainError("RegionMask: shape mismatch");
    RegionMask m(nx_, ny_);
    for (size_t k = 0; k < inside_.size(); ++k) m.inside_[k] = op(inside_[k] != 0, o.inside_[k] != 0) ? 1 : 0;
    return m;
  }

  Index nx_ = 0;
  Index ny_ = 0;
  std::vector<std::uint8_t> inside_;
};

/// Nodes of `region` with rho > threshold (strict_above) or rho <= threshold.
template <typename Scalar>
RegionMask sublevel_mask(const PolarDecomposition<Scalar>& pd, const RegionMask& region, Scalar threshold,
                         bool strict_above) {
  if (!(threshold >= 0)) throw DomainError("sublevel_mask: threshold must be nonnegative");
  if (!region.matches(pd.grid)) throw DomainError("sublevel_mask: region does not match grid");
  RegionMask out(region.nx(), region.ny());
  for (Index k = 0; k < region.size(); ++k) {
    if (!region.contains(k)) continue;
    out.set(k, strict_above ? pd.rho(k) > threshold : pd.rho(k) <= threshold);
  }
  return out;
}

/// max over each node column x1 = const of a nodal scalar.
template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> column_max(const Grid2<Scalar>& g,
                                                    const Eigen::Array<Scalar, Eigen::Dynamic, 1>& nodal) {
  Eigen::Array<Scalar, Eigen::Dynamic, 1> out =
      Eigen::Array<Scalar, Eigen::Dynamic, 1>::Constant(g.nx, -std::numeric_limits<Scalar>::infinity());
  for (Index j = 0; j < g.ny; ++j)
    for (Index i = 0; i < g.nx; ++i) out(i) = std::max(out(i), nodal(g.index(i, j)));
  return out;
}

// ---------------------------------------------------------------------------
// Boundary conditions
// ---------------------------------------------------------------------------

enum class Side : int { Left = 0, Right = 1, Bottom = 2, Top = 3 };
enum class BoundaryKind { Neumann, Dirichlet };

template <typename Scalar>
struct BoundaryCondition {
  BoundaryKind kind = BoundaryKind::Neumann;
  /// Pinned value on a Dirichlet side.
  Point<Scalar> value;
};

/// Per-side conditions of the rectangle: left x1 = min, right x1 = max,
/// bottom x2 = min, top x2 = max. Dirichlet wins at corners.
template <typename Scalar>
struct BoundarySpec {
  std::array<BoundaryCondition<Scalar>, 4> sides;

  BoundaryCondition<Scalar>& operator[](Side s) { return sides[size_t(s)]; }
  const BoundaryCondition<Scalar>& operator[](Side s) const { return sides[size_t(s)]; }

  static BoundarySpec all_neumann() { return BoundarySpec{}; }

  BoundarySpec& dirichlet(Side s, const Point<Scalar>& value) {
    (*this)[s] = {BoundaryKind::Dirichlet, value};
    return *this;
  }

  /// Strip experiments: u = a on x1 = mu R, zero normal derivative on the
  /// remaining sides unless left_value pins x1 = 0 as well.
  static BoundarySpec strip(const Point<Scalar>& a, const std::optional<Point<Scalar>>& left_value = {}) {
    BoundarySpec bc;
    bc.dirichlet(Side::Right, a);
    if (left_value) bc.dirichlet(Side::Left, *left_value);
    return bc;
  }

  bool is_dirichlet(Side s) const { return (*this)[s].kind == BoundaryKind::Dirichlet; }

  /// Dirichlet side owning node (i, j), if any. Left/right take precedence.
  template <typename G>
  const BoundaryCondition<Scalar>* pinned_by(const G& g, Index i, Index j) const {
    if (i == 0 && is_dirichlet(Side::Left)) return &(*this)[Side::Left];
    if (i == g.nx - 1 && is_dirichlet(Side::Right)) return &(*this)[Side::Right];
    if (j == 0 && is_dirichlet(Side::Bottom)) return &(*this)[Side::Bottom];
    if (j == g.ny - 1 && is_dirichlet(Side::Top)) return &(*this)[Side::Top];
    return nullptr;
  }

  void validate(Index m) const {
    for (const auto& s : sides)
      if (s.kind == BoundaryKind::Dirichlet && s.value.size() != m)
        throw DomainError("boundary: Dirichlet value has wrong dimension");
  }
};

using BoundarySpecd = BoundarySpec<double>;

template <typename Scalar>
RegionMask pinned_mask(const Grid2<Scalar>& g, const BoundarySpec<Scalar>& bc) {
  RegionMask m(g.nx, g.ny);
  for (Index j = 0; j < g.ny; ++j)
    for (Index i = 0; i < g.nx; ++i)
      if (bc.pinned_by(g, i, j)) m.set(i, j, true);
  return m;
}

/// Copy of u with every Dirichlet node set to its side's value.
template <typename Scalar>
VectorField<Scalar> pin_dirichlet(VectorField<Scalar> u, const BoundarySpec<Scalar>& bc) {
  bc.validate(u.m());
  const auto& g = u.grid;
  for (Index j = 0; j < g.ny; ++j)
    for (Index i = 0; i < g.nx; ++i)
      if (const auto* c = bc.pinned_by(g, i, j)) u.node(i, j) = c->value;
  return u;
}

/// Field with one layer of ghost nodes around the grid: Neumann sides mirror
/// across the boundary node (u(-1) = u(1)), Dirichlet sides are pinned and
/// their ghosts carry the pinned value.
template <typename Scalar>
struct GhostField {
  Grid2<Scalar> grid;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> values;

  Index stride() const { return grid.nx + 2; }
  /// i in [-1, nx], j in [-1, ny].
  auto at(Index i, Index j) { return values.col((j + 1) * stride() + (i + 1)); }
  auto at(Index i, Index j) const { return values.col((j + 1) * stride() + (i + 1)); }
};

template <typename Scalar>
GhostField<Scalar> apply_boundary(const VectorField<Scalar>& u_in, const BoundarySpec<Scalar>& bc) {
  const VectorField<Scalar> u = pin_dirichlet(u_in, bc);
  const auto& g = u.grid;
  GhostField<Scalar> ext;
  ext.grid = g;
  ext.values.setZero(u.m(), (g.nx + 2) * (g.ny + 2));
  for (Index j = 0; j < g.ny; ++j)
    for (Index i = 0; i < g.nx; ++i) ext.at(i, j) = u.node(i, j);

  auto ghost_x = [&](Index j, Side side) {
    const Index i_ghost = side == Side::Left ? -1 : g.nx;
    const Index i_mirror = side == Side::Left ? std::min<Index>(1, g.nx - 1) : std::max<Index>(g.nx - 2, 0);
    if (bc.is_dirichlet(side))
      ext.at(i_ghost, j) = bc[side].value;
    else
      ext.at(i_ghost, j) = ext.at(i_mirror, j);
  };
  for (Index j = 0; j < g.ny; ++j) {
    ghost_x(j, Side::Left);
    ghost_x(j, Side::Right);
  }
  for (Index i = -1; i <= g.nx; ++i) {
    for (Side side : {Side::Bottom, Side::Top}) {
      const Index j_ghost = side == Side::Bottom ? -1 : g.ny;
      const Index j_mirror = side == Side::Bottom ? std::min<Index>(1, g.ny - 1) : std::max<Index>(g.ny - 2, 0);
      if (bc.is_dirichlet(side))
        ext.at(i, j_ghost) = bc[side].value;
      else
        ext.at(i, j_ghost) = ext.at(i, j_mirror);
    }
  }
  return ext;
}

}  // namespace phase_replace
