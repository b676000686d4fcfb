#ifndef SLITLAB_GRID_HPP
#define SLITLAB_GRID_HPP

#include "slitlab/geometry.hpp"

#include <memory>
#include <optional>

namespace slitlab {

/// Coordinates carried by a tensor grid.
///
/// physical: (x^T, x_n, x_{n+1}); sqrt_map: (x^T, xi, eta) with xi >= 0,
/// where the slit is the flat face {xi = 0}.
enum class Coords { physical, sqrt_map };

template <int N>
class SlitGrid {
 public:
  static constexpr int Dim = N + 1;
  static constexpr int Corners = 1 << Dim;
  using Index = std::array<int, Dim>;
  using Raw = std::array<double, Dim>;

  SlitGrid(Coords coords, Raw lo, std::array<int, Dim> cells, double h)
      : coords_(coords), lo_(lo), cells_(cells), h_(h) {
    require(h_ > 0.0, "SlitGrid: spacing must be positive");
    for (int a = 0; a < Dim; ++a) require(cells_[a] >= 1, "SlitGrid: empty axis");
    if (coords_ == Coords::sqrt_map) {
      require(lo_[N - 1] >= -1e-12 * h_, "SlitGrid: xi axis must start at 0 or above");
      if (std::abs(lo_[N - 1]) < 1e-12 * h_) lo_[N - 1] = 0.0;
    }
    // node row of the thin plane (physical) or eta = 0 (sqrt)
    const double j = -lo_[N] / h_;
    const long jr = std::lround(j);
    if (std::abs(j - static_cast<double>(jr)) < 1e-9 && jr >= 0 && jr <= cells_[N]) {
      zero_row_ = static_cast<int>(jr);
    }
    if (coords_ == Coords::physical && lo_[N] < 0.0 && lo_[N] + cells_[N] * h_ > 0.0) {
      require(zero_row_ >= 0, "SlitGrid: the plane x_{n+1} = 0 must be a node row");
      dup_ = zero_row_ > 0 && zero_row_ < cells_[N];
    }
    stride_[Dim - 1] = 1;
    for (int a = Dim - 2; a >= 0; --a) stride_[a] = stride_[a + 1] * storage_nodes(a + 1);
    size_ = stride_[0] * storage_nodes(0);
  }

  /// Box [lo, hi] with spacing h; the upper ends are rounded up to whole cells.
  static SlitGrid box(Coords coords, Raw lo, Raw hi, double h) {
    std::array<int, Dim> cells{};
    for (int a = 0; a < Dim; ++a) {
      const double c = (hi[a] - lo[a]) / h;
      cells[a] = std::max(1, static_cast<int>(std::ceil(c - 1e-9)));
    }
    return SlitGrid(coords, lo, cells, h);
  }

  /// Physical cube [-R, R]^{n+1}.
  static SlitGrid physical_cube(double R, double h) {
    Raw lo, hi;
    lo.fill(-R);
    hi.fill(R);
    return box(Coords::physical, lo, hi, h);
  }

  /// Physical half box [-R, R]^n x [0, R].
  static SlitGrid physical_half(double R, double h) {
    Raw lo, hi;
    lo.fill(-R);
    hi.fill(R);
    lo[N] = 0.0;
    return box(Coords::physical, lo, hi, h);
  }

  /// Square-root grid covering the physical ball B_R centred on R^{n-1}.
  static SlitGrid sqrt_ball(double R, double h) {
    const double s = std::sqrt(R);
    Raw lo, hi;
    for (int a = 0; a < N - 1; ++a) {
      lo[a] = -R;
      hi[a] = R;
    }
    lo[N - 1] = 0.0;
    hi[N - 1] = s;
    const double m = std::ceil(s / h - 1e-9) * h;
    lo[N] = -m;
    hi[N] = m;
    return box(Coords::sqrt_map, lo, hi, h);
  }

  Coords coords() const noexcept { return coords_; }
  bool is_sqrt() const noexcept { return coords_ == Coords::sqrt_map; }
  double h() const noexcept { return h_; }
  double lo(int a) const { return lo_[a]; }
  double hi(int a) const { return lo_[a] + cells_[a] * h_; }
  int cells(int a) const { return cells_[a]; }
  int nodes(int a) const { return cells_[a] + 1; }
  double coord(int a, int i) const { return lo_[a] + i * h_; }
  int zero_row() const noexcept { return zero_row_; }
  bool duplicated_plane() const noexcept { return dup_; }
  std::size_t size() const noexcept { return size_; }

  std::size_t cell_count() const {
    std::size_t c = 1;
    for (int a = 0; a < Dim; ++a) c *= static_cast<std::size_t>(cells_[a]);
    return c;
  }

  /// Storage row of node row j on the given side of the plane.
  int storage_row(int j, Side side) const {
    if (!dup_ || j < zero_row_) return j;
    if (j > zero_row_) return j + 1;
    return side == Side::lower ? j : j + 1;
  }

  std::size_t index(const Index& i, Side side = Side::upper) const {
    std::size_t s = 0;
    for (int a = 0; a < N; ++a) s += static_cast<std::size_t>(i[a]) * stride_[a];
    return s + static_cast<std::size_t>(storage_row(i[N], side));
  }

  /// Multi-index and side of a storage slot.
  Index multi(std::size_t s, Side* side = nullptr) const {
    Index i{};
    for (int a = 0; a < Dim; ++a) {
      i[a] = static_cast<int>(s / stride_[a]);
      s %= stride_[a];
    }
    Side sd = Side::upper;
    if (dup_) {
      if (i[N] == zero_row_) {
        sd = Side::lower;
      } else if (i[N] > zero_row_) {
        i[N] -= 1;
      }
    } else if (coords_ == Coords::physical && zero_row_ == cells_[N]) {
      sd = Side::lower;
    }
    if (side) *side = sd;
    return i;
  }

  Raw raw(const Index& i) const {
    Raw r;
    for (int a = 0; a < Dim; ++a) r[a] = coord(a, i[a]);
    return r;
  }

  /// Physical point of raw grid coordinates.
  SlitPoint<N> to_physical(const Raw& r, Side side = Side::upper) const {
    if (coords_ == Coords::physical) {
      SlitPoint<N> p;
      for (int a = 0; a < N - 1; ++a) p.xT[a] = r[a];
      p.xn = r[N - 1];
      p.xnp1 = r[N];
      p.side = side;
      return p;
    }
    SqrtPoint<N> q;
    for (int a = 0; a < N - 1; ++a) q.xT[a] = r[a];
    q.xi = std::max(0.0, r[N - 1]);
    q.eta = r[N];
    auto p = inverse_map(q);
    if (q.eta == 0.0) p.side = side;
    return p;
  }

  SlitPoint<N> point(std::size_t s) const {
    Side side;
    const Index i = multi(s, &side);
    return to_physical(raw(i), side);
  }

  /// Storage indices of the corners of cell k; bit a of the corner number means +1 along axis a.
  std::array<std::size_t, Corners> corners(const Index& k) const {
    std::array<std::size_t, Corners> out{};
    // the b-axis side of the shared plane follows the cell
    const Side side = (dup_ && k[N] < zero_row_) ? Side::lower : Side::upper;
    for (int c = 0; c < Corners; ++c) {
      Index i = k;
      for (int a = 0; a < Dim; ++a)
        if (c & (1 << a)) i[a] += 1;
      out[c] = index(i, side);
    }
    return out;
  }

  /// Mirror slot under x_{n+1} -> -x_{n+1} (eta -> -eta), if it exists.
  std::optional<std::size_t> mirror(std::size_t s) const {
    if (zero_row_ < 0) return std::nullopt;
    Side side;
    Index i = multi(s, &side);
    const int j = 2 * zero_row_ - i[N];
    if (j < 0 || j > cells_[N]) return std::nullopt;
    i[N] = j;
    Side ms = side == Side::upper ? Side::lower : Side::upper;
    return index(i, ms);
  }

  /// Raw coordinates of a physical point, or nullopt outside the grid box.
  std::optional<Raw> raw_of(const SlitPoint<N>& p) const {
    Raw r;
    for (int a = 0; a < N - 1; ++a) r[a] = p.xT[a];
    if (coords_ == Coords::physical) {
      r[N - 1] = p.xn;
      r[N] = p.xnp1;
    } else {
      const auto w = perp_weights(p);
      r[N - 1] = w.xi;
      r[N] = w.eta;
    }
    const double tol = 1e-12 * (1.0 + h_);
    for (int a = 0; a < Dim; ++a) {
      if (r[a] < lo(a) - tol || r[a] > hi(a) + tol) return std::nullopt;
    }
    return r;
  }

  struct Location {
    Index cell;
    Raw t;
  };

  /// Cell and local coordinates of a physical point.
  std::optional<Location> locate(const SlitPoint<N>& p) const {
    const auto r = raw_of(p);
    if (!r) return std::nullopt;
    Location loc;
    for (int a = 0; a < Dim; ++a) {
      const double u = ((*r)[a] - lo_[a]) / h_;
      int k = static_cast<int>(std::floor(u));
      k = std::clamp(k, 0, cells_[a] - 1);
      loc.cell[a] = k;
      loc.t[a] = std::clamp(u - k, 0.0, 1.0);
    }
    if (dup_ && p.xnp1 == 0.0 && coords_ == Coords::physical) {
      // pick the cell on the requested lip
      if (p.side == Side::lower) {
        loc.cell[N] = zero_row_ - 1;
        loc.t[N] = 1.0;
      } else {
        loc.cell[N] = zero_row_;
        loc.t[N] = 0.0;
      }
    }
    return loc;
  }

  /// Physical extent covered by the grid, as a bounding box.
  std::pair<Raw, Raw> physical_bounds() const {
    Raw lo, hi;
    for (int a = 0; a < N - 1; ++a) {
      lo[a] = this->lo(a);
      hi[a] = this->hi(a);
    }
    if (coords_ == Coords::physical) {
      for (int a = N - 1; a < Dim; ++a) {
        lo[a] = this->lo(a);
        hi[a] = this->hi(a);
      }
    } else {
      const double s = std::min({hi(N - 1), -lo(N), hi(N)});
      lo[N - 1] = lo[N] = -s * s;
      hi[N - 1] = hi[N] = s * s;
    }
    return {lo, hi};
  }

  /// True if the physical box [blo, bhi] is inside the grid.
  ///
  /// On square-root grids a nonnegative perp bounds |x_perp| over the region
  /// more tightly than the box corners.
  bool covers(const Raw& blo, const Raw& bhi, double perp = -1.0) const {
    const double tol = 1e-9 * h_;
    for (int a = 0; a < N - 1; ++a)
      if (blo[a] < lo(a) - tol || bhi[a] > hi(a) + tol) return false;
    if (coords_ == Coords::physical) {
      for (int a = N - 1; a < Dim; ++a)
        if (blo[a] < lo(a) - tol || bhi[a] > hi(a) + tol) return false;
      return true;
    }
    const double rmax = perp >= 0.0 ? perp
                                     : std::hypot(std::max(std::abs(blo[N - 1]), std::abs(bhi[N - 1])),
                                                  std::max(std::abs(blo[N]), std::abs(bhi[N])));
    const double s = std::sqrt(rmax);
    return s <= hi(N - 1) + tol && -s >= lo(N) - tol && s <= hi(N) + tol && lo(N - 1) <= tol;
  }

  /// Cell index range [first, last) intersecting a physical bounding box.
  std::pair<Index, Index> cell_range(const Raw& blo, const Raw& bhi, double perp = -1.0) const {
    Raw rlo = blo, rhi = bhi;
    if (coords_ == Coords::sqrt_map) {
      const double rmax = perp >= 0.0 ? perp
                                       : std::hypot(std::max(std::abs(blo[N - 1]), std::abs(bhi[N - 1])),
                                                    std::max(std::abs(blo[N]), std::abs(bhi[N])));
      const double s = std::sqrt(rmax);
      rlo[N - 1] = 0.0;
      rhi[N - 1] = s;
      rlo[N] = -s;
      rhi[N] = s;
    }
    Index first, last;
    for (int a = 0; a < Dim; ++a) {
      first[a] = std::clamp(static_cast<int>(std::floor((rlo[a] - lo_[a]) / h_)) - 1, 0, cells_[a]);
      last[a] = std::clamp(static_cast<int>(std::ceil((rhi[a] - lo_[a]) / h_)) + 1, 0, cells_[a]);
    }
    return {first, last};
  }

  /// Calls fn(k) for each cell multi-index in [first, last), last axis fastest.
  template <class Fn>
  void for_cells(const Index& first, const Index& last, Fn&& fn) const {
    for (int a = 0; a < Dim; ++a)
      if (first[a] >= last[a]) return;
    Index k = first;
    while (true) {
      fn(static_cast<const Index&>(k));
      int a = Dim - 1;
      while (a >= 0) {
        if (++k[a] < last[a]) break;
        k[a] = first[a];
        --a;
      }
      if (a < 0) return;
    }
  }

  template <class Fn>
  void for_cells(Fn&& fn) const {
    Index first{}, last;
    for (int a = 0; a < Dim; ++a) last[a] = cells_[a];
    for_cells(first, last, std::forward<Fn>(fn));
  }

  bool operator==(const SlitGrid& o) const {
    return coords_ == o.coords_ && lo_ == o.lo_ && cells_ == o.cells_ && h_ == o.h_;
  }

 private:
  int storage_nodes(int a) const { return cells_[a] + 1 + ((a == N && dup_) ? 1 : 0); }

  Coords coords_;
  Raw lo_;
  std::array<int, Dim> cells_;
  double h_;
  int zero_row_ = -1;
  bool dup_ = false;
  std::array<std::size_t, Dim> stride_{};
  std::size_t size_ = 0;
};

// ---------------------------------------------------------------------------
// Fields

namespace detail {

template <int Dim>
double shape(int c, const std::array<double, Dim>& t) {
  double v = 1.0;
  for (int a = 0; a < Dim; ++a) v *= (c & (1 << a)) ? t[a] : 1.0 - t[a];
  return v;
}

template <int Dim>
double shape_d(int c, int axis, const std::array<double, Dim>& t) {
  double v = 1.0;
  for (int a = 0; a < Dim; ++a) {
    if (a == axis) {
      v *= (c & (1 << a)) ? 1.0 : -1.0;
    } else {
      v *= (c & (1 << a)) ? t[a] : 1.0 - t[a];
    }
  }
  return v;
}

}  // namespace detail

/// Nodal samples of a scalar field.
template <int N>
struct FieldSample {
  std::shared_ptr<const SlitGrid<N>> grid;
  std::vector<double> values;
  Parity parity = Parity::none;
  /// Optional node mask; empty means every node is valid.
  std::vector<unsigned char> valid;

  const SlitGrid<N>& g() const { return *grid; }

  bool is_valid(std::size_t s) const { return valid.empty() || valid[s] != 0; }

  /// Multilinear interpolation at a physical point.
  std::optional<double> at(const SlitPoint<N>& p) const {
    const auto loc = grid->locate(p);
    if (!loc) return std::nullopt;
    const auto cs = grid->corners(loc->cell);
    double v = 0.0;
    for (int c = 0; c < SlitGrid<N>::Corners; ++c) {
      const double w = detail::shape<N + 1>(c, loc->t);
      if (w == 0.0) continue;
      if (!is_valid(cs[c])) return std::nullopt;
      v += w * values[cs[c]];
    }
    return v;
  }

  double max_abs() const {
    double m = 0.0;
    for (std::size_t s = 0; s < values.size(); ++s)
      if (is_valid(s)) m = std::max(m, std::abs(values[s]));
    return m;
  }
};

template <int N>
using GridPtr = std::shared_ptr<const SlitGrid<N>>;

template <int N>
GridPtr<N> make_grid(SlitGrid<N> g) {
  return std::make_shared<const SlitGrid<N>>(std::move(g));
}

/// Largest violation of the declared parity over mirrored node pairs.
template <int N>
double parity_violation(const FieldSample<N>& f) {
  if (f.parity == Parity::none) return 0.0;
  const double sign = f.parity == Parity::even ? 1.0 : -1.0;
  double worst = 0.0;
  for (std::size_t s = 0; s < f.values.size(); ++s) {
    const auto m = f.grid->mirror(s);
    if (!m || !f.is_valid(s) || !f.is_valid(*m)) continue;
    const double d = std::abs(f.values[s] - sign * f.values[*m]);
    worst = std::max(worst, d / std::max(1.0, std::abs(f.values[s])));
  }
  return worst;
}

template <int N>
void validate(const FieldSample<N>& f) {
  require(f.grid != nullptr, "FieldSample: missing grid");
  require(f.values.size() == f.grid->size(), "FieldSample: value count does not match grid");
  require(f.valid.empty() || f.valid.size() == f.values.size(), "FieldSample: mask size mismatch");
  for (std::size_t s = 0; s < f.values.size(); ++s) {
    if (f.is_valid(s)) require(std::isfinite(f.values[s]), "FieldSample: non-finite value");
  }
  require(parity_violation(f) <= 1e-12, "FieldSample: declared parity does not hold");
}

/// Samples fn at every node; slit nodes are evaluated with their lip flag.
template <int N, class Fn>
FieldSample<N> sample(GridPtr<N> grid, Fn&& fn, Parity parity = Parity::none) {
  FieldSample<N> f;
  f.grid = grid;
  f.parity = parity;
  f.values.resize(grid->size());
  for (std::size_t s = 0; s < grid->size(); ++s) f.values[s] = fn(grid->point(s));
  return f;
}

template <int N>
struct VectorFieldSample {
  std::shared_ptr<const SlitGrid<N>> grid;
  std::array<std::vector<double>, N + 1> components;

  std::optional<Vec<N + 1>> at(const SlitPoint<N>& p) const {
    const auto loc = grid->locate(p);
    if (!loc) return std::nullopt;
    const auto cs = grid->corners(loc->cell);
    Vec<N + 1> v = Vec<N + 1>::Zero();
    for (int c = 0; c < SlitGrid<N>::Corners; ++c) {
      const double w = detail::shape<N + 1>(c, loc->t);
      for (int a = 0; a <= N; ++a) v[a] += w * components[a][cs[c]];
    }
    return v;
  }
};

// ---------------------------------------------------------------------------
// Regions and quadrature

template <int N>
struct Region {
  std::string name;
  std::function<bool(const SlitPoint<N>&)> contains;
  std::array<double, N + 1> lo{};
  std::array<double, N + 1> hi{};
  double perp_extent = -1.0;  // bound on |x_perp| over the region, if known

  bool covered_by(const SlitGrid<N>& g) const { return g.covers(lo, hi, perp_extent); }

  /// Open ball |x - c| < r in the Euclidean metric.
  static Region ball(const SlitPoint<N>& c, double r, std::string name = "ball") {
    require(r > 0.0, "Region::ball: radius must be positive");
    Region reg;
    reg.name = std::move(name);
    const Vec<N + 1> cv = c.vec();
    reg.contains = [cv, r](const SlitPoint<N>& x) { return (x.vec() - cv).squaredNorm() < r * r; };
    for (int a = 0; a <= N; ++a) {
      reg.lo[a] = cv[a] - r;
      reg.hi[a] = cv[a] + r;
    }
    reg.perp_extent = std::hypot(cv[N - 1], cv[N]) + r;
    return reg;
  }

  static Region ball(double r) { return ball(SlitPoint<N>{}, r); }

  static Region box(std::array<double, N + 1> lo, std::array<double, N + 1> hi,
                    std::string name = "box") {
    Region reg;
    reg.name = std::move(name);
    reg.lo = lo;
    reg.hi = hi;
    reg.contains = [lo, hi](const SlitPoint<N>& x) {
      const auto v = x.vec();
      for (int a = 0; a <= N; ++a)
        if (v[a] < lo[a] || v[a] > hi[a]) return false;
      return true;
    };
    return reg;
  }
};

enum class QuadRule { midpoint, gauss2 };

/// A quadrature point with access to field values and physical gradients.
template <int N>
struct QuadPoint {
  static constexpr int Dim = N + 1;
  SlitPoint<N> x;
  double rho = 0.0;
  double xi = 0.0;
  double eta = 0.0;
  double weight = 0.0;  // physical measure
  const SlitGrid<N>* grid = nullptr;
  std::array<std::size_t, SlitGrid<N>::Corners> corners{};
  std::array<double, Dim> t{};

  double value(const std::vector<double>& v) const {
    double s = 0.0;
    for (int c = 0; c < SlitGrid<N>::Corners; ++c) s += detail::shape<Dim>(c, t) * v[corners[c]];
    return s;
  }

  /// Gradient in raw grid coordinates.
  Vec<Dim> grad_raw(const std::vector<double>& v) const {
    Vec<Dim> g = Vec<Dim>::Zero();
    for (int c = 0; c < SlitGrid<N>::Corners; ++c) {
      const double val = v[corners[c]];
      for (int a = 0; a < Dim; ++a) g[a] += detail::shape_d<Dim>(c, a, t) * val;
    }
    return g / grid->h();
  }

  /// Physical gradient.
  Vec<Dim> grad(const std::vector<double>& v) const { return to_physical_grad(grad_raw(v)); }

  Vec<Dim> to_physical_grad(const Vec<Dim>& gr) const {
    if (!grid->is_sqrt()) return gr;
    Vec<Dim> g = gr;
    // grad_perp = M grad_(xi,eta) / (2 rho), M = [[xi, -eta], [eta, xi]]
    const double a = gr[N - 1], b = gr[N];
    g[N - 1] = (xi * a - eta * b) / (2.0 * rho);
    g[N] = (eta * a + xi * b) / (2.0 * rho);
    return g;
  }

  bool all_valid(const std::vector<unsigned char>& mask) const {
    if (mask.empty()) return true;
    for (auto c : corners)
      if (!mask[c]) return false;
    return true;
  }
};

struct QuadOptions {
  QuadRule rule = QuadRule::midpoint;
  int cut_subdivision = 8;  // per axis, for cells cut by the region boundary
  int tip_subdivision = 4;  // per axis, for physical cells touching the slit tip
};

/// Integrates K quantities at once over region minus S.
///
/// fn(const QuadPoint&) returns std::array<double, K> of integrand values;
/// the quadrature weight is applied here. Accumulation uses pairwise
/// summation in a fixed cell order.
template <std::size_t K, int N, class Fn>
std::array<double, K> integrate_many(const SlitGrid<N>& grid, const Region<N>& region, Fn&& fn,
                                     const QuadOptions& opt = {}) {
  constexpr int Dim = N + 1;
  require(region.covered_by(grid), "integrate: region '" + region.name + "' not covered by grid");
  std::array<PairwiseSum, K> acc;
  const double h = grid.h();
  double cell_measure = 1.0;
  for (int a = 0; a < Dim; ++a) cell_measure *= h;

  static constexpr double g1 = 0.21132486540518711775;  // (1 - 1/sqrt(3)) / 2
  QuadPoint<N> qp;
  qp.grid = &grid;

  auto eval_at = [&](const typename SlitGrid<N>::Index& k, const std::array<double, Dim>& t,
                     double w, bool check_region) {
    std::array<double, Dim> r;
    for (int a = 0; a < Dim; ++a) r[a] = grid.coord(a, k[a]) + t[a] * h;
    const Side side = (grid.duplicated_plane() && k[N] < grid.zero_row()) ? Side::lower : Side::upper;
    SlitPoint<N> x = grid.to_physical(r, side);
    if (check_region && !region.contains(x)) return;
    const auto pw = perp_weights(x);
    if (pw.rho == 0.0) return;
    qp.x = x;
    qp.rho = pw.rho;
    qp.xi = pw.xi;
    qp.eta = pw.eta;
    qp.t = t;
    qp.weight = w * cell_measure * (grid.is_sqrt() ? 4.0 * pw.rho : 1.0);
    const auto vals = fn(static_cast<const QuadPoint<N>&>(qp));
    for (std::size_t i = 0; i < K; ++i) acc[i].add(vals[i] * qp.weight);
  };

  auto sub_rule = [&](const typename SlitGrid<N>::Index& k, int m, bool check_region) {
    // m^Dim midpoint sub-cells
    std::array<int, Dim> j{};
    const double w = 1.0 / std::pow(static_cast<double>(m), Dim);
    while (true) {
      std::array<double, Dim> t;
      for (int a = 0; a < Dim; ++a) t[a] = (j[a] + 0.5) / m;
      eval_at(k, t, w, check_region);
      int a = Dim - 1;
      while (a >= 0) {
        if (++j[a] < m) break;
        j[a] = 0;
        --a;
      }
      if (a < 0) break;
    }
  };

  bool small_region = false;
  for (int a = 0; a < Dim; ++a) {
    const double extent = region.hi[a] - region.lo[a];
    const double scale = (grid.is_sqrt() && a >= N - 1) ? h * h : h;
    if (extent < 2.0 * scale) small_region = true;
  }
  const auto [first, last] = grid.cell_range(region.lo, region.hi, region.perp_extent);
  grid.for_cells(first, last, [&](const typename SlitGrid<N>::Index& k) {
    qp.corners = grid.corners(k);
    // classify the cell against the region by its corners
    int inside = 0;
    bool tip = false;
    for (int c = 0; c < SlitGrid<N>::Corners; ++c) {
      std::array<double, Dim> r;
      for (int a = 0; a < Dim; ++a) r[a] = grid.coord(a, k[a] + ((c >> a) & 1));
      const SlitPoint<N> x = grid.to_physical(r);
      if (region.contains(x)) ++inside;
      if (!grid.is_sqrt() && x.xn == 0.0 && x.xnp1 == 0.0) tip = true;
    }
    if (inside == 0) {
      // only regions thinner than two cells can hide between corners
      if (small_region) sub_rule(k, opt.cut_subdivision, true);
      return;
    }
    const bool cut = inside < SlitGrid<N>::Corners;
    if (cut) {
      sub_rule(k, std::max(opt.cut_subdivision, tip ? opt.tip_subdivision : 1), true);
    } else if (tip) {
      sub_rule(k, opt.tip_subdivision, false);
    } else if (opt.rule == QuadRule::midpoint) {
      std::array<double, Dim> t;
      t.fill(0.5);
      eval_at(k, t, 1.0, false);
    } else {
      const double w = 1.0 / SlitGrid<N>::Corners;
      for (int c = 0; c < SlitGrid<N>::Corners; ++c) {
        std::array<double, Dim> t;
        for (int a = 0; a < Dim; ++a) t[a] = (c & (1 << a)) ? 1.0 - g1 : g1;
        eval_at(k, t, w, false);
      }
    }
  });
  std::array<double, K> out{};
  for (std::size_t i = 0; i < K; ++i) out[i] = acc[i].value();
  return out;
}

template <int N, class Fn>
double integrate(const SlitGrid<N>& grid, const Region<N>& region, Fn&& fn,
                 const QuadOptions& opt = {}) {
  return integrate_many<1>(
      grid, region, [&](const QuadPoint<N>& q) { return std::array<double, 1>{fn(q)}; }, opt)[0];
}

}  // namespace slitlab

#endif  // SLITLAB_GRID_HPP
