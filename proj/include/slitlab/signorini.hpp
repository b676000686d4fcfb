#ifndef SLITLAB_SIGNORINI_HPP
#define SLITLAB_SIGNORINI_HPP

#include "slitlab/dsolve.hpp"
#include "slitlab/wspace.hpp"

#include <json.hpp>

#include <fstream>
#include <limits>
#include <ostream>

namespace slitlab {

/// Minimize J(U) = int (1/2) grad U^T A grad U + F U over the box [-R, R]^{n+1}
/// with U = boundary on its faces and U >= 0 on the thin plane {x_{n+1} = 0}.
template <int N>
struct SignoriniProblem {
  std::string id = "signorini";
  CoeffField<N> A;
  ScalarFn<N> F;
  ScalarFn<N> boundary;
  double R = 1.0;
};

struct PsorOptions {
  double omega = 1.5;  // nonpositive selects optimal_omega per level
  int max_sweeps = 200000;
  double energy_tol = 1e-12;
  double complementarity_tol = 1e-8;
  bool nested = true;
  int coarsest_cells = 8;
  int check_every = 1;
  int perturbation_tests = 16;
  unsigned long long seed = 5;
};

/// SOR factor 2 / (1 + sin(pi h / L)) for the even-reflected box of side L = 2R.
inline double optimal_omega(double h, double R) {
  return 2.0 / (1.0 + std::sin(std::numbers::pi * h / (2.0 * R)));
}

struct PsorLevel {
  double h = 0.0;
  double omega = 0.0;
  int sweeps = 0;
  double energy_drop = 0.0;    // last per-sweep decrease
  double complementarity = 0.0;
  bool converged = false;
};

template <int N>
struct SignoriniSolution {
  FieldSample<N> half;  // x_{n+1} >= 0 half grid
  FieldSample<N> U;     // mirrored onto the full cube, even
  std::vector<unsigned char> contact;  // half-grid slots on the plane with U = 0
  double energy = 0.0;                 // full-domain J
  double complementarity = 0.0;        // max |min(U, lambda)| in U units
  double complementarity_product = 0.0;
  double max_energy_increase = 0.0;    // largest per-sweep increase seen (should be 0)
  double min_perturbation_gain = 0.0;  // J(U + t v) - J(U) over random admissible v
  bool energy_monotone = true;
  bool infeasible_boundary = false;    // g < 0 somewhere on the plane's boundary trace
  std::vector<PsorLevel> levels;

  const SlitGrid<N>& half_grid() const { return half.g(); }

  bool in_contact(std::size_t half_slot) const { return contact[half_slot] != 0; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["h"] = half.g().h();
    j["energy"] = energy;
    j["complementarity"] = complementarity;
    j["complementarity_product"] = complementarity_product;
    j["energy_monotone"] = energy_monotone;
    j["max_energy_increase"] = max_energy_increase;
    j["min_perturbation_gain"] = min_perturbation_gain;
    j["infeasible_boundary"] = infeasible_boundary;
    std::size_t c = 0;
    for (auto v : contact) c += v;
    j["contact_nodes"] = c;
    j["levels"] = nlohmann::json::array();
    for (const auto& l : levels) {
      j["levels"].push_back({{"h", l.h}, {"omega", l.omega}, {"sweeps", l.sweeps},
                             {"energy_drop", l.energy_drop}, {"complementarity", l.complementarity},
                             {"converged", l.converged}});
    }
    return j;
  }
};

namespace detail {

template <int N>
bool on_outer_face(const SlitGrid<N>& g, const typename SlitGrid<N>::Index& i) {
  for (int a = 0; a < N; ++a)
    if (i[a] == 0 || i[a] == g.cells(a)) return true;
  return i[N] == g.cells(N);
}

/// PSOR state on one half grid.
template <int N>
struct PsorSystem {
  GridPtr<N> grid;
  DofMap dofs;
  LinearSystem sys;
  std::vector<unsigned char> plane;  // per unknown
  std::vector<double> diag;

  double energy(const std::vector<double>& x) const {
    std::vector<double> kx;
    sys.K.multiply(x, kx);
    PairwiseSum s;
    for (std::size_t i = 0; i < x.size(); ++i) s.add(0.5 * x[i] * kx[i] - sys.rhs[i] * x[i]);
    return s.value();
  }

  /// Largest complementarity defect, and the largest |U lambda| product, in U units.
  std::pair<double, double> complementarity(const std::vector<double>& x) const {
    std::vector<double> kx;
    sys.K.multiply(x, kx);
    double worst = 0.0, prod = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = (sys.rhs[i] - kx[i]) / diag[i];
      if (plane[i]) {
        worst = std::max(worst, std::abs(std::min(x[i], -r)));
        prod = std::max(prod, std::abs(x[i] * r));
      } else {
        worst = std::max(worst, std::abs(r));
      }
    }
    return {worst, prod};
  }

  /// One lexicographic projected SOR sweep; returns the energy change.
  double sweep(std::vector<double>& x, double omega) const {
    const auto& K = sys.K;
    double dJ = 0.0;
    for (int i = 0; i < K.rows; ++i) {
      double r = sys.rhs[static_cast<std::size_t>(i)];
      for (std::size_t p = K.row_ptr[static_cast<std::size_t>(i)]; p < K.row_ptr[static_cast<std::size_t>(i) + 1]; ++p) {
        r -= K.val[p] * x[static_cast<std::size_t>(K.col[p])];
      }
      const double d = diag[static_cast<std::size_t>(i)];
      double xn = x[static_cast<std::size_t>(i)] + omega * r / d;
      if (plane[static_cast<std::size_t>(i)] && xn < 0.0) xn = 0.0;
      const double delta = xn - x[static_cast<std::size_t>(i)];
      dJ += 0.5 * d * delta * delta - r * delta;
      x[static_cast<std::size_t>(i)] = xn;
    }
    return dJ;
  }
};

template <int N>
PsorSystem<N> build_psor(const SignoriniProblem<N>& p, GridPtr<N> grid) {
  const auto& g = *grid;
  PsorSystem<N> s;
  s.grid = grid;
  s.dofs = make_dofs(
      g, [&](std::size_t k) { return !on_outer_face(g, g.multi(k)); },
      [&](std::size_t k) { return p.boundary(g.point(k)); });
  s.sys = assemble_system(g, s.dofs, [&](const QuadPoint<N>& q) {
    GaussTerms<N> t;
    t.K = checked_coefficient(p.A, q.x);
    if (p.F) t.c = -p.F(q.x);
    return t;
  });
  s.plane.resize(s.dofs.node_of.size());
  for (std::size_t i = 0; i < s.plane.size(); ++i) s.plane[i] = g.multi(s.dofs.node_of[i])[N] == 0;
  s.diag = s.sys.K.diagonal();
  return s;
}

template <int N>
double half_energy(const SignoriniProblem<N>& p, const SlitGrid<N>& g, const std::vector<double>& v) {
  constexpr int Dim = N + 1;
  const double h = g.h();
  double wq = 1.0;
  for (int a = 0; a < Dim; ++a) wq *= h;
  wq /= SlitGrid<N>::Corners;
  PairwiseSum acc;
  QuadPoint<N> qp;
  qp.grid = &g;
  g.for_cells([&](const typename SlitGrid<N>::Index& k) {
    qp.corners = g.corners(k);
    for_gauss_points<N>(g, k, qp, [&](const QuadPoint<N>& q) {
      const Vec<Dim> gr = q.grad(v);
      double e = 0.5 * gr.dot(p.A(q.x) * gr);
      if (p.F) e += p.F(q.x) * q.value(v);
      acc.add(wq * e);
    });
  });
  return acc.value();
}

}  // namespace detail

/// Half box [-R, R]^n x [0, R] with spacing h; R / h must be a whole number.
template <int N>
GridPtr<N> signorini_half_grid(double R, double h) {
  const double m = R / h;
  require(std::abs(m - std::round(m)) < 1e-9 && m >= 1.0, "signorini: R / h must be a whole number");
  return make_grid(SlitGrid<N>::physical_half(R, h));
}

/// Even extension of a half-grid field onto the full cube with the same spacing.
template <int N>
FieldSample<N> mirror_to_full(const FieldSample<N>& half) {
  const auto& hg = half.g();
  require(hg.zero_row() == 0, "mirror_to_full: field must live on a half grid");
  const double R = hg.hi(N);
  auto full = make_grid(SlitGrid<N>::physical_cube(R, hg.h()));
  require(full->cells(N) == 2 * hg.cells(N), "mirror_to_full: half grid is not a half cube");
  FieldSample<N> out;
  out.grid = full;
  out.parity = Parity::even;
  out.values.resize(full->size());
  if (!half.valid.empty()) out.valid.resize(full->size());
  for (std::size_t s = 0; s < full->size(); ++s) {
    auto i = full->multi(s);
    i[N] = std::abs(i[N] - full->zero_row());
    const std::size_t hs = hg.index(i);
    out.values[s] = half.values[hs];
    if (!half.valid.empty()) out.valid[s] = half.valid[hs];
  }
  return out;
}

/// Projected SOR for the thin obstacle problem, with nested coarse-to-fine warm starts.
template <int N>
SignoriniSolution<N> solve_signorini(const SignoriniProblem<N>& p, double h,
                                     const PsorOptions& opt = {}) {
  require(static_cast<bool>(p.boundary), "solve_signorini: missing boundary data");
  require(p.R > 0.0 && h > 0.0, "solve_signorini: need positive R and h");
  std::vector<double> hs{h};
  if (opt.nested) {
    while (true) {
      const double hc = 2.0 * hs.back();
      const double m = p.R / hc;
      if (std::abs(m - std::round(m)) > 1e-9 || m < opt.coarsest_cells) break;
      hs.push_back(hc);
    }
  }
  std::reverse(hs.begin(), hs.end());

  SignoriniSolution<N> out;
  std::vector<double> x;
  FieldSample<N> prev;
  detail::PsorSystem<N> sys;
  for (std::size_t level = 0; level < hs.size(); ++level) {
    const auto grid = signorini_half_grid<N>(p.R, hs[level]);
    sys = detail::build_psor(p, grid);
    const auto& g = *grid;
    x.assign(sys.dofs.node_of.size(), 0.0);
    if (level > 0) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        const auto v = prev.at(g.point(sys.dofs.node_of[i]));
        x[i] = v ? *v : 0.0;
        if (sys.plane[i]) x[i] = std::max(0.0, x[i]);
      }
    }
    PsorLevel lev;
    lev.h = hs[level];
    lev.omega = opt.omega > 0.0 ? opt.omega : optimal_omega(hs[level], p.R);
    require(lev.omega > 0.0 && lev.omega < 2.0, "solve_signorini: omega must lie in (0, 2)");
    double J = sys.energy(x);
    while (lev.sweeps < opt.max_sweeps) {
      sys.sweep(x, lev.omega);
      ++lev.sweeps;
      const double Jn = sys.energy(x);
      const double drop = J - Jn;
      const double scale = std::max(1.0, std::abs(Jn));
      if (drop < -1e-13 * scale) {
        out.energy_monotone = false;
        out.max_energy_increase = std::max(out.max_energy_increase, -drop);
      }
      J = Jn;
      lev.energy_drop = drop;
      if (drop < opt.energy_tol * scale && lev.sweeps % opt.check_every == 0) {
        lev.complementarity = sys.complementarity(x).first;
        if (lev.complementarity < opt.complementarity_tol) {
          lev.converged = true;
          break;
        }
      }
    }
    if (!lev.converged) lev.complementarity = sys.complementarity(x).first;
    out.levels.push_back(lev);
    prev.grid = grid;
    prev.values = scatter(sys.dofs, x);
    prev.parity = Parity::none;
  }
  const auto& last = out.levels.back();
  if (!last.converged) {
    throw ConvergenceError(p.id + ": projected SOR did not converge", last.sweeps,
                           last.complementarity, 0.0);
  }
  const auto& g = prev.g();
  out.half = prev;
  std::tie(out.complementarity, out.complementarity_product) = sys.complementarity(x);
  out.contact.assign(g.size(), 0);
  for (std::size_t s = 0; s < g.size(); ++s) {
    const auto i = g.multi(s);
    if (i[N] != 0) continue;
    if (out.half.values[s] <= 0.0) out.contact[s] = 1;
    if (sys.dofs.unknown[s] < 0 && out.half.values[s] < 0.0) out.infeasible_boundary = true;
  }
  out.energy = 2.0 * detail::half_energy(p, g, out.half.values);

  // admissible perturbations never lower the discrete energy
  unsigned long long st = opt.seed * 0x9E3779B97F4A7C15ULL + 3;
  const double J0 = sys.energy(x);
  out.min_perturbation_gain = std::numeric_limits<double>::infinity();
  for (int t = 0; t < opt.perturbation_tests; ++t) {
    std::vector<double> y = x;
    const double amp = 1e-3 * std::pow(2.0, -(t % 4));
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] += amp * (2.0 * detail::uniform01(st) - 1.0);
      if (sys.plane[i]) y[i] = std::max(0.0, y[i]);
    }
    out.min_perturbation_gain = std::min(out.min_perturbation_gain, sys.energy(y) - J0);
  }
  if (opt.perturbation_tests == 0) out.min_perturbation_gain = 0.0;
  out.U = mirror_to_full(out.half);
  return out;
}

// ---------------------------------------------------------------------------
// Free boundary

template <int N>
struct FreeBoundary {
  std::vector<std::array<double, N - 1>> xT;
  std::vector<double> gamma;             // NaN where undefined
  std::vector<int> crossings;            // contact transitions along the line
  std::vector<unsigned char> flagged;    // non-graph or undefined line
  double h = 0.0;

  std::size_t flagged_count() const {
    std::size_t c = 0;
    for (auto f : flagged) c += f;
    return c;
  }

  /// Piecewise linear interpolation in x_1 (constant for n = 1); NaN outside.
  GraphFn<N> as_function() const {
    auto xs = xT;
    auto gs = gamma;
    return [xs, gs](const std::array<double, N - 1>& y) -> double {
      if constexpr (N == 1) {
        return gs.empty() ? std::nan("") : gs[0];
      } else {
        const double t = y[0];
        if (xs.empty() || t < xs.front()[0] || t > xs.back()[0]) return std::nan("");
        std::size_t k = 0;
        while (k + 1 < xs.size() && xs[k + 1][0] < t) ++k;
        if (k + 1 == xs.size()) return gs[k];
        const double s = (t - xs[k][0]) / (xs[k + 1][0] - xs[k][0]);
        return (1.0 - s) * gs[k] + s * gs[k + 1];
      }
    };
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (std::size_t k = 0; k < gamma.size(); ++k) {
      nlohmann::json row;
      row["xT"] = std::vector<double>(xT[k].begin(), xT[k].end());
      row["gamma"] = std::isfinite(gamma[k]) ? nlohmann::json(gamma[k]) : nlohmann::json(nullptr);
      row["crossings"] = crossings[k];
      row["flagged"] = flagged[k] != 0;
      j.push_back(row);
    }
    return j;
  }
};

/// Outermost contact-to-positivity crossing per tangential line of the plane.
///
/// Between the last contact node and its neighbour the crossing is placed by
/// linear interpolation of U^{2/3}, which is affine across a regular free
/// boundary where U grows like distance^{3/2}.
template <int N>
FreeBoundary<N> free_boundary_graph(const SignoriniSolution<N>& sol) {
  const auto& g = sol.half_grid();
  FreeBoundary<N> fb;
  fb.h = g.h();
  const int m = g.cells(N - 1);
  typename SlitGrid<N>::Index first{}, last{};
  for (int a = 0; a < N - 1; ++a) last[a] = g.nodes(a);
  last[N - 1] = 1;
  last[N] = 1;
  g.for_cells(first, last, [&](const typename SlitGrid<N>::Index& base) {
    auto idx = base;
    std::vector<unsigned char> c(static_cast<std::size_t>(m + 1));
    std::vector<double> u(static_cast<std::size_t>(m + 1));
    for (int j = 0; j <= m; ++j) {
      idx[N - 1] = j;
      const std::size_t s = g.index(idx);
      c[static_cast<std::size_t>(j)] = sol.contact[s];
      u[static_cast<std::size_t>(j)] = std::max(0.0, sol.half.values[s]);
    }
    std::array<double, N - 1> xT{};
    for (int a = 0; a < N - 1; ++a) xT[a] = g.coord(a, base[a]);
    int transitions = 0;
    int jstar = -1;
    for (int j = 0; j <= m; ++j) {
      if (j < m && c[static_cast<std::size_t>(j)] != c[static_cast<std::size_t>(j + 1)]) ++transitions;
      if (c[static_cast<std::size_t>(j)]) jstar = j;
    }
    double gam = std::nan("");
    bool flag = transitions != 1 || !c[0];
    if (jstar >= 0 && jstar < m) {
      const double x0 = g.coord(N - 1, jstar), h = g.h();
      const double a = std::cbrt(u[static_cast<std::size_t>(jstar + 1)] * u[static_cast<std::size_t>(jstar + 1)]);
      double t = 0.5;
      if (jstar + 2 <= m) {
        const double b = std::cbrt(u[static_cast<std::size_t>(jstar + 2)] * u[static_cast<std::size_t>(jstar + 2)]);
        if (b > a) t = 1.0 - a / (b - a);
      }
      gam = x0 + std::clamp(t, 0.0, 1.0) * h;
    } else {
      flag = true;
    }
    fb.xT.push_back(xT);
    fb.gamma.push_back(gam);
    fb.crossings.push_back(transitions);
    fb.flagged.push_back(flag ? 1 : 0);
  });
  return fb;
}

// ---------------------------------------------------------------------------
// Frequency and blow-up

namespace detail {

/// Trapezoid (angles) and midpoint (latitudes) samples of the sphere |x - x0| = r.
template <int N, class Fn>
void for_sphere_points(const SlitPoint<N>& x0, double r, Fn&& fn) {
  const double pi = std::numbers::pi;
  const Vec<N + 1> c = x0.vec();
  if constexpr (N == 1) {
    const int m = 256;
    for (int k = 0; k < m; ++k) {
      const double t = 2.0 * pi * k / m;
      Vec<2> v = c + r * Vec<2>(std::cos(t), std::sin(t));
      fn(SlitPoint<1>::from_vec(v), r * 2.0 * pi / m);
    }
  } else {
    const int nt = 64, np = 128;
    for (int i = 0; i < nt; ++i) {
      const double th = pi * (i + 0.5) / nt;
      for (int j = 0; j < np; ++j) {
        const double ph = 2.0 * pi * j / np;
        Vec<3> v = c + r * Vec<3>(std::cos(th), std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph));
        fn(SlitPoint<2>::from_vec(v), r * r * std::sin(th) * (pi / nt) * (2.0 * pi / np));
      }
    }
  }
}

template <int N>
std::pair<double, double> sphere_moments(const FieldSample<N>& U, const SlitPoint<N>& x0, double r) {
  PairwiseSum s, area;
  for_sphere_points<N>(x0, r, [&](const SlitPoint<N>& p, double w) {
    const auto v = U.at(p);
    if (!v) throw InvalidArgument("frequency: sphere leaves the grid");
    s.add(w * (*v) * (*v));
    area.add(w);
  });
  return {s.value(), area.value()};
}

}  // namespace detail

/// N(r) = r int_{B_r} |grad U|^2 / int_{dB_r} U^2.
template <int N>
double frequency(const FieldSample<N>& U, const SlitPoint<N>& x0, double r) {
  validate(U);
  require(r > 0.0, "frequency: radius must be positive");
  const auto ball = Region<N>::ball(x0, r);
  require(ball.covered_by(U.g()), "frequency: ball not covered by grid");
  const auto [den, area] = detail::sphere_moments(U, x0, r);
  if (!(den > 1e-300)) throw InvalidArgument("frequency: U vanishes on the sphere");
  const double vol = integrate(U.g(), ball, [&](const QuadPoint<N>& q) { return q.grad(U.values).squaredNorm(); });
  return r * vol / den;
}

struct FrequencyProfile {
  std::vector<double> center;
  std::vector<double> radii;
  std::vector<double> values;

  /// Largest N(r1) - N(r2) over r1 < r2.
  double monotonicity_violation() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i)
      for (std::size_t j = 0; j < radii.size(); ++j)
        if (radii[i] < radii[j]) worst = std::max(worst, values[i] - values[j]);
    return worst;
  }
};

template <int N>
FrequencyProfile frequency_profile(const FieldSample<N>& U, const SlitPoint<N>& x0,
                                   const std::vector<double>& radii) {
  FrequencyProfile p;
  const auto v = x0.vec();
  p.center.assign(v.data(), v.data() + N + 1);
  p.radii = radii;
  for (double r : radii) p.values.push_back(frequency(U, x0, r));
  return p;
}

/// U_r(x) = U(r x + x0) / (sphere average of U^2 over dB_r(x0))^{1/2} on the unit cube.
template <int N>
FieldSample<N> blow_up(const FieldSample<N>& U, const SlitPoint<N>& x0, double r, double h_out = 0.0) {
  validate(U);
  require(r > 0.0, "blow_up: radius must be positive");
  const auto [s, area] = detail::sphere_moments(U, x0, r);
  const double norm = std::sqrt(s / area);
  if (!(norm > 1e-150)) throw InvalidArgument("blow_up: vanishing normalizer");
  const double h = h_out > 0.0 ? h_out : U.g().h();
  auto grid = make_grid(SlitGrid<N>::physical_cube(1.0, h));
  FieldSample<N> out;
  out.grid = grid;
  out.values.assign(grid->size(), 0.0);
  out.valid.assign(grid->size(), 1);
  const Vec<N + 1> c = x0.vec();
  for (std::size_t k = 0; k < grid->size(); ++k) {
    const auto p = grid->point(k);
    const auto q = SlitPoint<N>::from_vec(c + r * p.vec(), p.side);
    const auto v = U.at(q);
    if (v) {
      out.values[k] = *v / norm;
    } else {
      out.valid[k] = 0;
    }
  }
  return out;
}

struct RegularityClass {
  bool regular = false;
  double extrapolated = 0.0;  // N(0+) from a least-squares line in r
  double monotonicity_violation = 0.0;
  bool monotone = true;
  double tau = 0.05;
};

/// Regular free-boundary point iff N(r) extrapolates to 3/2 within tau.
inline RegularityClass classify_regular(const FrequencyProfile& p, double tau = 0.05,
                                        double monotone_tol = 0.01) {
  require(p.radii.size() >= 4, "classify_regular: need at least four radii");
  RegularityClass c;
  c.tau = tau;
  c.extrapolated = fit_line(p.radii, p.values).first;
  c.monotonicity_violation = p.monotonicity_violation();
  c.monotone = c.monotonicity_violation <= monotone_tol;
  c.regular = std::abs(c.extrapolated - 1.5) < tau;
  return c;
}

// ---------------------------------------------------------------------------
// Derivatives

namespace detail {

/// Difference quotient of a full-grid field along an axis, never across the plane.
///
/// skip(s) marks nodes not to be used as stencil points; such nodes get zero.
template <int N, class Skip>
FieldSample<N> axis_derivative(const FieldSample<N>& U, int axis, Skip&& skip) {
  const auto& g = U.g();
  FieldSample<N> out;
  out.grid = U.grid;
  out.values.assign(g.size(), 0.0);
  const double h = g.h();
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (skip(s)) continue;
    Side side;
    const auto i = g.multi(s, &side);
    auto at = [&](int d) -> std::optional<double> {
      auto j = i;
      j[axis] += d;
      if (j[axis] < 0 || j[axis] > g.cells(axis)) return std::nullopt;
      if (axis == N && g.duplicated_plane()) {
        // stay on this side of the plane
        const int z = g.zero_row();
        if ((i[N] < z || (i[N] == z && side == Side::lower)) && j[N] > z) return std::nullopt;
        if ((i[N] > z || (i[N] == z && side == Side::upper)) && j[N] < z) return std::nullopt;
      }
      const std::size_t t = g.index(j, side);
      if (skip(t)) return std::nullopt;
      return U.values[t];
    };
    const double u0 = U.values[s];
    const auto p1 = at(1), m1 = at(-1);
    if (p1 && m1) {
      out.values[s] = (*p1 - *m1) / (2.0 * h);
      continue;
    }
    if (p1) {
      const auto p2 = at(2);
      out.values[s] = p2 ? (-3.0 * u0 + 4.0 * *p1 - *p2) / (2.0 * h) : (*p1 - u0) / h;
    } else if (m1) {
      const auto m2 = at(-2);
      out.values[s] = m2 ? (3.0 * u0 - 4.0 * *m1 + *m2) / (2.0 * h) : (u0 - *m1) / h;
    }
  }
  return out;
}

template <int N>
std::vector<unsigned char> full_contact(const SignoriniSolution<N>& sol) {
  const auto& g = sol.U.g();
  const auto& hg = sol.half_grid();
  std::vector<unsigned char> c(g.size(), 0);
  for (std::size_t s = 0; s < g.size(); ++s) {
    auto i = g.multi(s);
    if (i[N] != g.zero_row()) continue;
    i[N] = 0;
    c[s] = sol.contact[hg.index(i)];
  }
  return c;
}

}  // namespace detail

/// u_m = dU/dx_m for 0 <= m < n (zero-based), by centred differences on the full grid.
///
/// Contact nodes are excluded from stencils (their derivative is zero), so nodes
/// next to the contact set use one-sided stencils.
template <int N>
FieldSample<N> derivative_fields(const SignoriniSolution<N>& sol, int m) {
  require(m >= 0 && m < N, "derivative_fields: direction out of range");
  const auto contact = detail::full_contact(sol);
  auto out = detail::axis_derivative(sol.U, m, [&](std::size_t s) { return contact[s] != 0; });
  out.parity = Parity::even;
  return out;
}

/// dU/dx_{n+1}, one-sided at the plane on each lip; odd in x_{n+1}.
template <int N>
FieldSample<N> normal_derivative(const SignoriniSolution<N>& sol) {
  auto out = detail::axis_derivative(sol.U, N, [](std::size_t) { return false; });
  out.parity = Parity::none;
  return out;
}

// ---------------------------------------------------------------------------
// CSV dumps

/// Shortest round-trip decimal form.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// Columns x_1, ..., x_{n+1}, U, contact over the half grid.
template <int N>
void write_solution_csv(std::ostream& os, const SignoriniSolution<N>& sol) {
  for (int a = 1; a <= N + 1; ++a) os << "x" << a << ",";
  os << "U,contact\n";
  const auto& g = sol.half_grid();
  for (std::size_t s = 0; s < g.size(); ++s) {
    const auto v = g.point(s).vec();
    for (int a = 0; a <= N; ++a) os << format_number(v[a]) << ",";
    os << format_number(sol.half.values[s]) << "," << int(sol.contact[s]) << "\n";
  }
}

template <int N>
void write_free_boundary_csv(std::ostream& os, const FreeBoundary<N>& fb) {
  for (int a = 1; a <= N - 1; ++a) os << "x" << a << ",";
  os << "gamma,crossings,flagged\n";
  for (std::size_t k = 0; k < fb.gamma.size(); ++k) {
    for (int a = 0; a < N - 1; ++a) os << format_number(fb.xT[k][a]) << ",";
    os << format_number(fb.gamma[k]) << "," << fb.crossings[k] << "," << int(fb.flagged[k]) << "\n";
  }
}

}  // namespace slitlab

#endif  // SLITLAB_SIGNORINI_HPP
