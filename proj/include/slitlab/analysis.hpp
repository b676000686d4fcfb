#ifndef SLITLAB_ANALYSIS_HPP
#define SLITLAB_ANALYSIS_HPP

#include "slitlab/signorini.hpp"

#include <numeric>

namespace slitlab {

// ---------------------------------------------------------------------------
// Property (F) and its variants

enum class FVariant { F, F1, F2, F3 };

inline std::string to_string(FVariant v) {
  switch (v) {
    case FVariant::F: return "F";
    case FVariant::F1: return "F1";
    case FVariant::F2: return "F2";
    case FVariant::F3: return "F3";
  }
  return "?";
}

inline FVariant parse_variant(const std::string& s) {
  if (s == "F") return FVariant::F;
  if (s == "F1") return FVariant::F1;
  if (s == "F2") return FVariant::F2;
  if (s == "F3") return FVariant::F3;
  throw InvalidArgument("unknown property variant '" + s + "'");
}

struct PropertyFOptions {
  double alpha = 0.25;
  double C = 10.0;
  int samples = 4000;       // pairs per check
  double band = -1.0;       // distance to S excluded; negative means 1e-3 * radius
  double floor = 1e-14;     // smallest admissible u-bar
  unsigned long long seed = 11;
};

template <int N>
struct PropertyFReport {
  FVariant variant = FVariant::F;
  std::array<double, N - 1> centerT{};
  double radius = 0.0;
  double seminorm = 0.0;  // sampled C^alpha seminorm of f / u-bar
  double sup = 0.0;       // sampled sup |f / u-bar|
  SlitPoint<N> worst_y, worst_z;
  int pairs = 0;
  double C = 0.0;
  bool pass = false;

  double constant() const { return std::max(seminorm, sup); }

  nlohmann::json to_json() const {
    return {{"variant", to_string(variant)},
            {"centerT", std::vector<double>(centerT.begin(), centerT.end())},
            {"radius", radius},
            {"seminorm", seminorm},
            {"sup", sup},
            {"pairs", pairs},
            {"C", C},
            {"worst_pair", {std::vector<double>(worst_y.vec().data(), worst_y.vec().data() + N + 1),
                            std::vector<double>(worst_z.vec().data(), worst_z.vec().data() + N + 1)}},
            {"pass", pass}};
  }
};

namespace detail {

template <int N>
double slit_distance(const SlitPoint<N>& p) {
  return p.xn < 0.0 ? std::abs(p.xnp1) : std::hypot(p.xn, p.xnp1);
}

inline double gaussian(unsigned long long& st) {
  const double u1 = std::max(uniform01(st), 1e-300), u2 = uniform01(st);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <int Dim>
Vec<Dim> unit_ball_point(unsigned long long& st) {
  while (true) {
    Vec<Dim> v;
    for (int a = 0; a < Dim; ++a) v[a] = 2.0 * uniform01(st) - 1.0;
    if (v.squaredNorm() < 1.0) return v;
  }
}

template <int Dim>
Vec<Dim> unit_direction(unsigned long long& st) {
  while (true) {
    Vec<Dim> v;
    for (int a = 0; a < Dim; ++a) v[a] = gaussian(st);
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

inline Side random_side(unsigned long long& st) { return uniform01(st) < 0.5 ? Side::lower : Side::upper; }

/// Point of Cone_r(cT) with |y_perp| in [lo, r], log-uniform in |y_perp|.
template <int N>
SlitPoint<N> cone_point(const std::array<double, N - 1>& cT, double lo, double r, unsigned long long& st) {
  const double perp = lo * std::pow(r / lo, uniform01(st));
  const double th = std::numbers::pi * (2.0 * uniform01(st) - 1.0);
  SlitPoint<N> y;
  y.xn = perp * std::cos(th);
  y.xnp1 = perp * std::sin(th);
  y.side = th < 0.0 ? Side::lower : Side::upper;
  if constexpr (N > 1) {
    const Vec<N - 1> t = unit_ball_point<N - 1>(st);
    for (int i = 0; i < N - 1; ++i) y.xT[i] = cT[i] + perp * t[i];
  }
  return y;
}

}  // namespace detail

/// Sampled (F)-type check of f / u-bar over B_radius(centerT).
///
/// F compares f / u-bar_{A(y^T)}(y) over random pairs of the ball. F1, F2 and
/// F3 draw cones Cone_r(c^T) inside the ball and use u-bar_{A(c^T)}: F1 on
/// the annulus Cone_r \ Cone_{r/2}, F2 on all of Cone_r, F3 on pairs
/// y in B_r(c^T), z in Cone_r(c^T) with B_{2r}(c^T) inside the ball.
template <int N>
PropertyFReport<N> check_property_F(const ScalarFn<N>& f, const CoeffField<N>& A, FVariant variant,
                                    const std::array<double, N - 1>& centerT, double radius,
                                    const PropertyFOptions& opt = {}) {
  require(static_cast<bool>(f), "check_property_F: missing field");
  require(radius > 0.0, "check_property_F: radius must be positive");
  require(opt.alpha > 0.0 && opt.alpha <= 1.0, "check_property_F: alpha must lie in (0, 1]");
  PropertyFReport<N> rep;
  rep.variant = variant;
  rep.centerT = centerT;
  rep.radius = radius;
  rep.C = opt.C;
  const double band = opt.band >= 0.0 ? opt.band : 1e-3 * radius;
  unsigned long long st = opt.seed * 0x9E3779B97F4A7C15ULL + static_cast<unsigned long long>(variant) + 1;
  const SlitPoint<N> c0 = edge_point<N>(centerT);
  const Vec<N + 1> cv = c0.vec();

  auto ratio = [&](const SlitPoint<N>& y, const HomSolution& ub) -> std::optional<double> {
    if (detail::slit_distance(y) < band) return std::nullopt;
    const double u = ub(y);
    if (u < opt.floor) return std::nullopt;
    const double v = f(y);
    if (!std::isfinite(v)) return std::nullopt;
    return v / u;
  };
  auto own = [&](const SlitPoint<N>& y) { return ratio(y, A.hom_at(y.xT)); };
  auto in_ball = [&](const SlitPoint<N>& y) { return (y.vec() - cv).norm() < radius; };
  auto record = [&](const SlitPoint<N>& y, double hy, const SlitPoint<N>& z, double hz) {
    rep.sup = std::max({rep.sup, std::abs(hy), std::abs(hz)});
    const double d = path_distance(y, z);
    if (d <= 0.0) return;
    const double q = std::abs(hy - hz) / std::pow(d, opt.alpha);
    ++rep.pairs;
    if (q > rep.seminorm) {
      rep.seminorm = q;
      rep.worst_y = y;
      rep.worst_z = z;
    }
  };
  // tangential cone centre and radius with the needed neighbourhood inside the ball
  auto draw_cone = [&](double reach) {
    std::array<double, N - 1> cT = centerT;
    double r = 0.0;
    while (true) {
      r = radius * std::pow(1e-3, detail::uniform01(st)) / reach;
      double off = 0.0;
      if constexpr (N > 1) {
        const Vec<N - 1> t = detail::unit_ball_point<N - 1>(st);
        for (int i = 0; i < N - 1; ++i) cT[i] = centerT[i] + radius * t[i];
        off = (radius * t).norm();
      }
      if (off + reach * r <= radius) break;
    }
    return std::pair{cT, r};
  };

  int attempts = 0;
  while (rep.pairs < opt.samples && attempts < 50 * opt.samples) {
    ++attempts;
    if (variant == FVariant::F) {
      const auto y = SlitPoint<N>::from_vec(cv + radius * detail::unit_ball_point<N + 1>(st), detail::random_side(st));
      const double s = radius * std::pow(1e-3, detail::uniform01(st));
      const auto z = SlitPoint<N>::from_vec(y.vec() + s * detail::unit_direction<N + 1>(st), detail::random_side(st));
      if (!in_ball(y) || !in_ball(z)) continue;
      const auto hy = own(y), hz = own(z);
      if (hy && hz) record(y, *hy, z, *hz);
    } else if (variant == FVariant::F1 || variant == FVariant::F2) {
      // Cone_r(c^T) lies in B_{sqrt(2) r}(c^T)
      const auto [cT, r] = draw_cone(std::sqrt(2.0));
      const auto ub = A.hom_at(cT);
      const double lo = variant == FVariant::F1 ? 0.5 * r : std::max(band, 1e-3 * r);
      const auto y = detail::cone_point<N>(cT, lo, r, st);
      const auto z = detail::cone_point<N>(cT, lo, r, st);
      const auto hy = ratio(y, ub), hz = ratio(z, ub);
      if (hy && hz) record(y, *hy, z, *hz);
    } else {
      const auto [cT, r] = draw_cone(2.0);
      const auto ub = A.hom_at(cT);
      const Vec<N + 1> yv = edge_point<N>(cT).vec() + r * detail::unit_ball_point<N + 1>(st);
      const auto y = SlitPoint<N>::from_vec(yv, detail::random_side(st));
      const auto z = detail::cone_point<N>(cT, std::max(band, 1e-3 * r), r, st);
      const auto hy = ratio(y, ub), hz = ratio(z, ub);
      if (hy && hz) record(y, *hy, z, *hz);
    }
  }
  rep.pass = rep.pairs > 0 && rep.seminorm <= opt.C && rep.sup <= opt.C;
  return rep;
}

/// Same check on a sampled field, with the exclusion band set to one grid cell.
template <int N>
PropertyFReport<N> check_property_F(const FieldSample<N>& f, const CoeffField<N>& A, FVariant variant,
                                    const std::array<double, N - 1>& centerT, double radius,
                                    PropertyFOptions opt = {}) {
  validate(f);
  if (opt.band < 0.0) opt.band = f.g().is_sqrt() ? f.g().h() * f.g().h() : f.g().h();
  const FieldSample<N>* fp = &f;
  ScalarFn<N> fn = [fp](const SlitPoint<N>& y) {
    const auto v = fp->at(y);
    return v ? *v : std::nan("");
  };
  return check_property_F<N>(fn, A, variant, centerT, radius, opt);
}

struct Implication {
  std::string from, to;
  bool premise = false;     // from-variant passes at the outer radius
  bool conclusion = false;  // to-variant passes at the shrunken radius
  double inflation = 0.0;   // constant(to, shrunken) / constant(from, outer)
  bool holds() const { return !premise || conclusion; }
};

template <int N>
struct EquivalenceEntry {
  std::string name;
  bool expect_regular = true;
  std::array<PropertyFReport<N>, 4> outer;  // at the outer radius
  std::array<PropertyFReport<N>, 4> inner;  // at radius / shrink
  std::vector<Implication> implications;

  bool consistent() const {
    for (const auto& i : implications)
      if (!i.holds()) return false;
    if (!expect_regular) {
      for (const auto& r : outer)
        if (r.pass) return false;
    }
    return true;
  }
};

template <int N>
struct EquivalenceReport {
  double radius = 1.0;
  double shrink = 100.0;
  std::vector<EquivalenceEntry<N>> entries;
  double inflation_max = 0.0;  // recorded K_emp over every implication that fired

  bool pass() const {
    for (const auto& e : entries)
      if (!e.consistent()) return false;
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["radius"] = radius;
    j["shrink"] = shrink;
    j["inflation_max"] = inflation_max;
    j["pass"] = pass();
    j["fields"] = nlohmann::json::array();
    for (const auto& e : entries) {
      nlohmann::json f;
      f["name"] = e.name;
      f["expect_regular"] = e.expect_regular;
      f["consistent"] = e.consistent();
      for (int v = 0; v < 4; ++v) {
        f["outer"].push_back(e.outer[v].to_json());
        f["inner"].push_back(e.inner[v].to_json());
      }
      for (const auto& i : e.implications) {
        f["implications"].push_back({{"from", i.from}, {"to", i.to}, {"premise", i.premise},
                                     {"conclusion", i.conclusion}, {"inflation", i.inflation}});
      }
      j["fields"].push_back(f);
    }
    return j;
  }
};

template <int N>
struct NamedField {
  std::string name;
  ScalarFn<N> f;
  bool expect_regular = true;
};

/// Runs all four variants at radius and radius / shrink and checks the implication lattice.
template <int N>
EquivalenceReport<N> equivalence_suite(const std::vector<NamedField<N>>& corpus, const CoeffField<N>& A,
                                       double radius = 1.0, double shrink = 100.0,
                                       const PropertyFOptions& opt = {}) {
  EquivalenceReport<N> rep;
  rep.radius = radius;
  rep.shrink = shrink;
  const std::array<FVariant, 4> vs{FVariant::F, FVariant::F1, FVariant::F2, FVariant::F3};
  const std::array<std::pair<int, int>, 6> lattice{{{3, 0}, {3, 1}, {3, 2}, {0, 1}, {2, 3}, {2, 1}}};
  for (const auto& nf : corpus) {
    EquivalenceEntry<N> e;
    e.name = nf.name;
    e.expect_regular = nf.expect_regular;
    for (int v = 0; v < 4; ++v) {
      e.outer[v] = check_property_F<N>(nf.f, A, vs[v], {}, radius, opt);
      e.inner[v] = check_property_F<N>(nf.f, A, vs[v], {}, radius / shrink, opt);
    }
    for (const auto& [a, b] : lattice) {
      Implication im;
      im.from = to_string(vs[a]);
      im.to = to_string(vs[b]);
      im.premise = e.outer[a].pass;
      im.conclusion = e.inner[b].pass;
      const double base = e.outer[a].constant();
      im.inflation = base > 0.0 ? e.inner[b].constant() / base : 0.0;
      if (im.premise) rep.inflation_max = std::max(rep.inflation_max, im.inflation);
      e.implications.push_back(im);
    }
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

/// Synthetic corpus in n = 2: fields u-bar_{A(x^T)} h with smooth h, failing fields, and zero.
inline std::vector<NamedField<2>> property_corpus(const CoeffField<2>& A) {
  std::vector<NamedField<2>> out;
  auto regular = [&](std::string name, std::function<double(const SlitPoint<2>&)> h) {
    out.push_back({std::move(name), [A, h](const SlitPoint<2>& x) { return A.hom_at(x.xT)(x) * h(x); }, true});
  };
  regular("ubar", [](const SlitPoint<2>&) { return 1.0; });
  regular("ubar*(1+x1)", [](const SlitPoint<2>& x) { return 1.0 + x.xT[0]; });
  regular("ubar*(2-x2)", [](const SlitPoint<2>& x) { return 2.0 - x.xn; });
  regular("ubar*x3^2", [](const SlitPoint<2>& x) { return x.xnp1 * x.xnp1; });
  regular("ubar*cos(x1+x2)", [](const SlitPoint<2>& x) { return std::cos(x.xT[0] + x.xn); });
  regular("ubar*sin(2x1)", [](const SlitPoint<2>& x) { return std::sin(2.0 * x.xT[0]); });
  regular("ubar*rho", [](const SlitPoint<2>& x) { return rho_of(x); });
  regular("ubar*exp(x1x2)", [](const SlitPoint<2>& x) { return std::exp(x.xT[0] * x.xn); });
  regular("ubar*(1+x1^2+x2^2)", [](const SlitPoint<2>& x) { return 1.0 + x.xT[0] * x.xT[0] + x.xn * x.xn; });
  regular("ubar*rho^0.5", [](const SlitPoint<2>& x) { return std::sqrt(rho_of(x)); });
  regular("ubar*|x1|^0.5", [](const SlitPoint<2>& x) { return std::sqrt(std::abs(x.xT[0])); });
  regular("ubar*arctan(3x1)", [](const SlitPoint<2>& x) { return std::atan(3.0 * x.xT[0]); });
  regular("ubar*(3+x1x2x3)", [](const SlitPoint<2>& x) { return 3.0 + x.xT[0] * x.xn * x.xnp1; });
  regular("ubar*xi", [](const SlitPoint<2>& x) { return xi_of(x); });
  out.push_back({"zero", [](const SlitPoint<2>&) { return 0.0; }, true});
  out.push_back({"one", [](const SlitPoint<2>&) { return 1.0; }, false});
  out.push_back({"x2", [](const SlitPoint<2>& x) { return x.xn; }, false});
  out.push_back({"eta", [](const SlitPoint<2>& x) { return perp_weights(x).eta; }, false});
  out.push_back({"sqrt(rho)", [](const SlitPoint<2>& x) { return std::sqrt(rho_of(x)); }, false});
  out.push_back({"1+x1", [](const SlitPoint<2>& x) { return 1.0 + x.xT[0]; }, false});
  return out;
}

// ---------------------------------------------------------------------------
// Random test fields

/// Seeded smooth field supported in B_r: (1 - |x|^2/r^2)^2 times a few random plane waves,
/// plus an eta component (odd across the plane, discontinuous across S) for odd seeds.
template <int N>
ScalarFn<N> random_compact_field(unsigned long long seed, double r = 1.0) {
  unsigned long long st = seed * 0xD1B54A32D192ED03ULL + 7;
  struct Wave {
    double amp, phase;
    Vec<N + 1> k;
  };
  const int count = 1 + static_cast<int>(seed % 6);
  std::vector<Wave> waves;
  for (int i = 0; i < count; ++i) {
    Wave w;
    w.amp = 2.0 * detail::uniform01(st) - 1.0;
    for (int a = 0; a <= N; ++a) w.k[a] = 6.0 * (2.0 * detail::uniform01(st) - 1.0) / r;
    w.phase = 2.0 * std::numbers::pi * detail::uniform01(st);
    waves.push_back(w);
  }
  const double eta_amp = seed % 2 ? detail::uniform01(st) : 0.0;
  return [waves, eta_amp, r](const SlitPoint<N>& p) {
    const Vec<N + 1> x = p.vec();
    const double t = x.squaredNorm() / (r * r);
    if (t >= 1.0) return 0.0;
    double s = eta_amp * perp_weights(p).eta / std::sqrt(r);
    for (const auto& w : waves) s += w.amp * std::cos(w.k.dot(x) + w.phase);
    return (1.0 - t) * (1.0 - t) * s;
  };
}

// ---------------------------------------------------------------------------
// Ratios

/// Nodes closer to S than one cell (the trace row on square-root grids).
template <int N>
bool in_slit_band(const SlitGrid<N>& g, std::size_t s) {
  if (g.is_sqrt()) return g.multi(s)[N - 1] == 0;
  return detail::slit_distance(g.point(s)) < g.h() * (1.0 - 1e-9) || g.point(s).on_slit();
}

/// w = u1 / u2 off the one-cell band; throws if u2 < floor * xi there.
template <int N>
FieldSample<N> ratio_field(const FieldSample<N>& u1, const FieldSample<N>& u2, double floor) {
  validate(u1);
  validate(u2);
  require(u1.grid == u2.grid || (u1.g().size() == u2.g().size() && u1.g().h() == u2.g().h()),
          "ratio_field: fields must share a grid");
  const auto& g = u2.g();
  FieldSample<N> w;
  w.grid = u2.grid;
  w.values.assign(g.size(), 0.0);
  w.valid.assign(g.size(), 0);
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (!u1.is_valid(s) || !u2.is_valid(s) || in_slit_band(g, s)) continue;
    const double xi = xi_of(g.point(s));
    if (!(u2.values[s] >= floor * xi) || u2.values[s] <= 0.0) {
      throw InvalidArgument("ratio_field: Hopf floor violated at node " + std::to_string(s));
    }
    w.values[s] = u1.values[s] / u2.values[s];
    w.valid[s] = 1;
  }
  return w;
}

/// Finite-difference residual of the equation satisfied by w = u1 / u2:
///   div(u2^2 A grad w) - div(u2 f1 - u1 f2) - (f2 . grad u1 - f1 . grad u2) - (u2 phi1 - u1 phi2).
///
/// Evaluated at nodes of a physical grid whose two-cell stencil stays off S.
template <int N>
FieldSample<N> ratio_residual(const FieldSample<N>& u1, const FieldSample<N>& u2, const CoeffField<N>& A,
                              const VecFn<N>& f1, const VecFn<N>& f2, const ScalarFn<N>& phi1,
                              const ScalarFn<N>& phi2) {
  validate(u1);
  validate(u2);
  const auto& g = u2.g();
  require(!g.is_sqrt(), "ratio_residual: needs a physical grid");
  require(u1.g().size() == g.size(), "ratio_residual: fields must share a grid");
  constexpr int Dim = N + 1;
  const double h = g.h();
  auto zero = [](const SlitPoint<N>&) { return Vec<Dim>::Zero().eval(); };
  const VecFn<N> F1 = f1 ? f1 : VecFn<N>(zero), F2 = f2 ? f2 : VecFn<N>(zero);
  std::vector<unsigned char> ok(g.size(), 0);
  for (std::size_t s = 0; s < g.size(); ++s) {
    Side side;
    const auto i = g.multi(s, &side);
    bool inside = detail::slit_distance(g.point(s)) > 2.5 * h;
    for (int a = 0; a < Dim && inside; ++a) inside = i[a] >= 2 && i[a] + 2 <= g.cells(a);
    ok[s] = inside;
  }
  auto nb = [&](std::size_t s, int a, int d) {
    Side side;
    auto i = g.multi(s, &side);
    i[a] += d;
    return g.index(i, side);
  };
  auto grad = [&](const std::vector<double>& v, std::size_t s) {
    Vec<Dim> gr;
    for (int a = 0; a < Dim; ++a) gr[a] = (v[nb(s, a, 1)] - v[nb(s, a, -1)]) / (2.0 * h);
    return gr;
  };
  // flux G = u2^2 A grad w - (u2 f1 - u1 f2) at nodes one cell inside the stencil region
  std::vector<Vec<Dim>> G(g.size(), Vec<Dim>::Zero());
  std::vector<unsigned char> gok(g.size(), 0);
  std::vector<double> w(g.size(), 0.0);
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (u2.values[s] != 0.0) w[s] = u1.values[s] / u2.values[s];
  }
  for (std::size_t s = 0; s < g.size(); ++s) {
    Side side;
    const auto i = g.multi(s, &side);
    bool inside = detail::slit_distance(g.point(s)) > 1.5 * h;
    for (int a = 0; a < Dim && inside; ++a) inside = i[a] >= 1 && i[a] + 1 <= g.cells(a);
    if (!inside) continue;
    const auto x = g.point(s);
    const double a2 = u2.values[s], a1 = u1.values[s];
    G[s] = a2 * a2 * (A(x) * grad(w, s)) - (a2 * F1(x) - a1 * F2(x));
    gok[s] = 1;
  }
  FieldSample<N> out;
  out.grid = u2.grid;
  out.values.assign(g.size(), 0.0);
  out.valid.assign(g.size(), 0);
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (!ok[s]) continue;
    double div = 0.0;
    bool good = true;
    for (int a = 0; a < Dim; ++a) {
      const std::size_t p = nb(s, a, 1), m = nb(s, a, -1);
      good = good && gok[p] && gok[m];
      div += (G[p][a] - G[m][a]) / (2.0 * h);
    }
    if (!good) continue;
    const auto x = g.point(s);
    const Vec<Dim> gu1 = grad(u1.values, s), gu2 = grad(u2.values, s);
    double r = div - (F2(x).dot(gu1) - F1(x).dot(gu2));
    if (phi1) r -= u2.values[s] * phi1(x);
    if (phi2) r += u1.values[s] * phi2(x);
    out.values[s] = r;
    out.valid[s] = 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Campanato and Hölder-average fits

template <int N>
struct CampanatoReport {
  std::array<double, N - 1> centerT{};
  std::vector<double> radii;
  std::vector<double> sigma;
  std::vector<LinearPoly<N>> fits;  // per radius
  LinearPoly<N> L;                  // fit on the smallest ball
  double alpha = 0.25;
  double exponent = 0.0;            // beta with int |w - L|^2 / rho ~ r^{n+2+2 beta}
  double tolerance = 0.1;
  bool pass = false;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["centerT"] = std::vector<double>(centerT.begin(), centerT.end());
    j["radii"] = radii;
    j["sigma"] = sigma;
    const auto c = L.coefficients();
    j["L"] = std::vector<double>(c.begin(), c.end());
    j["kappa"] = L.kappa;
    j["alpha"] = alpha;
    j["exponent"] = exponent;
    j["pass"] = pass;
    return j;
  }

  /// Rows (r, sigma, bound) with bound = 10 sigma at the largest radius.
  void write_csv(std::ostream& os) const {
    os << "r,sigma,bound\n";
    const double bound = sigma.empty() ? 0.0 : 10.0 * sigma.front();
    for (std::size_t i = 0; i < radii.size(); ++i) {
      os << format_number(radii[i]) << "," << format_number(sigma[i]) << "," << format_number(bound) << "\n";
    }
  }
};

/// Per radius: L_i = best weighted fit on B_{r_i}, sigma_i = Campanato deviation from L_i.
///
/// Radii are sorted decreasing. The exponent is alpha plus the log-log slope of sigma.
template <int N>
CampanatoReport<N> campanato_fit(const FieldSample<N>& w, const std::array<double, N - 1>& centerT,
                                 std::vector<double> radii, double alpha, double kappa = 1.0,
                                 double tolerance = 0.1) {
  require(radii.size() >= 3, "campanato_fit: need at least three radii");
  std::sort(radii.begin(), radii.end(), std::greater<>());
  CampanatoReport<N> rep;
  rep.centerT = centerT;
  rep.radii = radii;
  rep.alpha = alpha;
  rep.tolerance = tolerance;
  QuadOptions quad;
  quad.rule = QuadRule::gauss2;
  const auto c = edge_point<N>(centerT);
  // the nodal interpolant of L itself deviates from L by the interpolation error,
  // so sigma below twice that level carries no decay information
  std::vector<double> interp;
  for (double r : radii) {
    const auto L = linearize(w, c, r, kappa);
    rep.fits.push_back(L);
    rep.sigma.push_back(campanato_deviation(w, L, centerT, r, alpha, quad));
    auto Lh = sample<N>(w.grid, [&L](const SlitPoint<N>& x) { return L(x); });
    Lh.valid = w.valid;
    interp.push_back(2.0 * campanato_deviation(Lh, L, centerT, r, alpha, quad));
  }
  rep.L = rep.fits.back();
  // sigma r^{1+alpha} is the weighted rms of w - L, up to a constant
  const double floor = 1e-10 * (1.0 + w.max_abs());
  bool flat = true;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    flat = flat && rep.sigma[i] <= std::max(interp[i], floor / std::pow(radii[i], 1.0 + alpha));
  }
  if (flat) {
    // w lies in the span: every exponent is admissible
    rep.exponent = 1.0;
  } else {
    std::vector<double> s = rep.sigma;
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::max(s[i], floor / std::pow(radii[i], 1.0 + alpha));
    rep.exponent = alpha + loglog_slope(rep.radii, s);
  }
  rep.pass = rep.exponent >= alpha - tolerance;
  return rep;
}

template <int N>
struct HolderReport {
  std::array<double, N - 1> centerT{};
  double cbar = 0.0;
  std::vector<double> radii;
  std::vector<double> integral;    // int_{B_r} |u/xi - cbar|^2 / rho
  std::vector<double> deviations;  // r^{-(n+2 alpha)} integral
  double alpha = 0.25;
  double exponent = 0.0;
  bool pass = false;

  nlohmann::json to_json() const {
    return {{"centerT", std::vector<double>(centerT.begin(), centerT.end())},
            {"cbar", cbar},
            {"radii", radii},
            {"deviations", deviations},
            {"alpha", alpha},
            {"exponent", exponent},
            {"pass", pass}};
  }
};

/// Weighted average of u/xi on the smallest ball and the decay of its deviation.
template <int N>
HolderReport<N> holder_average_fit(const FieldSample<N>& u, const std::array<double, N - 1>& centerT,
                                   std::vector<double> radii, double alpha, double tolerance = 0.1) {
  validate(u);
  require(radii.size() >= 3, "holder_average_fit: need at least three radii");
  std::sort(radii.begin(), radii.end(), std::greater<>());
  const auto c = edge_point<N>(centerT);
  require(resolves(u.g(), radii.back()), "holder_average_fit: smallest ball not resolved");
  HolderReport<N> rep;
  rep.centerT = centerT;
  rep.radii = radii;
  rep.alpha = alpha;
  QuadOptions quad;
  quad.rule = QuadRule::gauss2;
  auto ratio = [&](const QuadPoint<N>& q) { return q.xi > 0.0 ? q.value(u.values) / q.xi : 0.0; };
  const auto m = integrate_many<2>(
      u.g(), Region<N>::ball(c, radii.back()),
      [&](const QuadPoint<N>& q) {
        if (!q.all_valid(u.valid) || q.xi <= 0.0) return std::array<double, 2>{0.0, 0.0};
        return std::array<double, 2>{ratio(q) / q.rho, 1.0 / q.rho};
      },
      quad);
  require(m[1] > 0.0, "holder_average_fit: empty ball");
  rep.cbar = m[0] / m[1];
  for (double r : radii) {
    const double I = integrate(
        u.g(), Region<N>::ball(c, r),
        [&](const QuadPoint<N>& q) {
          if (!q.all_valid(u.valid) || q.xi <= 0.0) return 0.0;
          const double d = ratio(q) - rep.cbar;
          return d * d / q.rho;
        },
        quad);
    rep.integral.push_back(I);
    rep.deviations.push_back(I / std::pow(r, N + 2.0 * alpha));
  }
  const double floor = 1e-24 * (1.0 + u.max_abs() * u.max_abs());
  bool flat = true;
  for (double v : rep.integral) flat = flat && v <= floor;
  if (flat) {
    rep.exponent = 1.0;
  } else {
    std::vector<double> I = rep.integral;
    for (auto& v : I) v = std::max(v, floor);
    rep.exponent = std::min(1.0, 0.5 * (loglog_slope(rep.radii, I) - N));
  }
  rep.pass = rep.exponent >= alpha - tolerance;
  return rep;
}

// ---------------------------------------------------------------------------
// Hopf

struct HopfReport {
  double min_ratio = 0.0;
  double threshold = 0.5;
  std::size_t nodes = 0;
  bool pass = false;

  nlohmann::json to_json() const {
    return {{"min_ratio", min_ratio}, {"threshold", threshold}, {"nodes", nodes}, {"pass", pass}};
  }
};

/// min u/xi over valid nodes of B_r(center) outside the one-cell band.
template <int N>
HopfReport hopf_check(const FieldSample<N>& u, double r = 0.125, const SlitPoint<N>& center = {},
                      double threshold = 0.5) {
  validate(u);
  const auto& g = u.g();
  HopfReport rep;
  rep.threshold = threshold;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  const Vec<N + 1> c = center.vec();
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (!u.is_valid(s) || in_slit_band(g, s)) continue;
    const auto p = g.point(s);
    if ((p.vec() - c).norm() >= r) continue;
    const double xi = xi_of(p);
    if (xi <= 0.0) continue;
    rep.min_ratio = std::min(rep.min_ratio, u.values[s] / xi);
    ++rep.nodes;
  }
  require(rep.nodes > 0, "hopf_check: no nodes in the ball");
  rep.pass = rep.min_ratio >= threshold;
  return rep;
}

// ---------------------------------------------------------------------------
// Boundary Harnack experiment

struct TangentialFit {
  double exponent = 0.0;  // 1 + beta for the restriction to R^{n-1}
  double beta = 0.0;
  bool flat = false;      // remainders below the noise floor
  std::size_t pairs = 0;

  nlohmann::json to_json() const {
    return {{"exponent", exponent}, {"beta", beta}, {"flat", flat}, {"pairs", pairs}};
  }
};

namespace detail {

/// Log-log slope of the modulus of continuity omega(d) = max{q : pair distance <= d}.
///
/// Pair distances are grouped to relative 1e-9; values below noise are raised to it.
inline double modulus_slope(std::vector<double> d, std::vector<double> q, double noise) {
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  std::vector<double> ds, ws;
  double env = noise;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double dk = d[order[k]];
    env = std::max(env, q[order[k]]);
    const bool last = k + 1 == order.size() || d[order[k + 1]] > dk * (1.0 + 1e-9);
    if (last && dk > 0.0) {
      ds.push_back(dk);
      ws.push_back(env);
    }
  }
  if (ds.size() < 2) return 1.0;
  return loglog_slope(ds, ws);
}

}  // namespace detail

/// Taylor remainder fit: omega(d) = max |v(b) - v(a) - s(a)(b - a)| over pairs at distance <= d
/// behaves like d^{1+beta}; beta is capped at 1.
template <int M>
TangentialFit tangential_fit(const std::vector<std::array<double, M>>& pts, const std::vector<double>& v,
                             const std::vector<std::array<double, M>>& slope, double noise) {
  TangentialFit fit;
  std::vector<double> d, rem;
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = 0; b < pts.size(); ++b) {
      if (a == b) continue;
      double dist2 = 0.0, lin = 0.0;
      for (int i = 0; i < M; ++i) {
        const double t = pts[b][i] - pts[a][i];
        dist2 += t * t;
        lin += slope[a][i] * t;
      }
      d.push_back(std::sqrt(dist2));
      rem.push_back(std::abs(v[b] - v[a] - lin));
    }
  }
  fit.pairs = d.size();
  double worst = 0.0;
  for (double r : rem) worst = std::max(worst, r);
  if (d.size() < 2 || worst <= noise) {
    fit.flat = true;
    fit.beta = 1.0;
  } else {
    fit.beta = std::clamp(detail::modulus_slope(d, rem, noise) - 1.0, 0.0, 1.0);
  }
  fit.exponent = 1.0 + fit.beta;
  return fit;
}

/// Hölder fit: omega(d) = max |v(b) - v(a)| over pairs at distance <= d behaves like d^beta;
/// beta is capped at 1.
template <int M>
TangentialFit holder_fit(const std::vector<std::array<double, M>>& pts, const std::vector<double>& v,
                         double noise) {
  TangentialFit fit;
  std::vector<double> d, diff;
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      double dist2 = 0.0;
      for (int i = 0; i < M; ++i) dist2 += (pts[b][i] - pts[a][i]) * (pts[b][i] - pts[a][i]);
      d.push_back(std::sqrt(dist2));
      diff.push_back(std::abs(v[b] - v[a]));
    }
  }
  fit.pairs = d.size();
  double worst = 0.0;
  for (double x : diff) worst = std::max(worst, x);
  if (d.size() < 2 || worst <= noise) {
    fit.flat = true;
    fit.beta = 1.0;
  } else {
    fit.beta = std::clamp(detail::modulus_slope(d, diff, noise), 0.0, 1.0);
  }
  fit.exponent = fit.beta;
  return fit;
}

template <int N>
struct HarnackReport {
  double hopf_floor = 0.0;          // min u2/xi off the band
  double atilde_min_eig = 0.0;      // (u2^2 / xi^2) A
  double atilde_max_eig = 0.0;
  double f_sup = 0.0;               // (u2 f1 - u1 f2) / xi^2
  double hterm_sup = 0.0;           // (rho / xi^2)(f2 . grad u1 - f1 . grad u2)
  double phi_sup = 0.0;             // (u2 phi1 - u1 phi2) / xi
  std::vector<PropertyFReport<N>> f_checks;
  std::vector<CampanatoReport<N>> centers;
  std::vector<double> cbar;         // w at each center (constant term)
  TangentialFit tangential;
  bool pass = false;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["constants"] = {{"hopf_floor", hopf_floor}, {"atilde_min_eig", atilde_min_eig},
                      {"atilde_max_eig", atilde_max_eig}, {"f_sup", f_sup},
                      {"hterm_sup", hterm_sup}, {"phi_sup", phi_sup}};
    j["f_checks"] = nlohmann::json::array();
    for (const auto& f : f_checks) j["f_checks"].push_back(f.to_json());
    j["centers"] = nlohmann::json::array();
    for (const auto& c : centers) j["centers"].push_back(c.to_json());
    j["cbar"] = cbar;
    j["tangential"] = tangential.to_json();
    j["pass"] = pass;
    return j;
  }
};

template <int N>
struct HarnackInput {
  FieldSample<N> u1, u2;
  CoeffField<N> A;
  VecFn<N> f1, f2;
  ScalarFn<N> phi1, phi2;
};

struct HarnackOptions {
  std::vector<double> radii{0.2, 0.1, 0.05};
  double alpha = 0.25;
  double hopf_floor = 0.0;  // abort if u2 < floor * xi
  double check_radius = 0.5;
  PropertyFOptions fcheck{};
  bool check_f = true;
  double tolerance = 0.1;
};

/// Per-center Campanato fits of w = u1/u2 in the rho_kappa basis, plus a tangential C^{1,beta} fit.
template <int N>
HarnackReport<N> harnack_experiment(const HarnackInput<N>& in,
                                    const std::vector<std::array<double, N - 1>>& centers,
                                    const HarnackOptions& opt = {}) {
  require(!centers.empty(), "harnack_experiment: need at least one center");
  validate(in.u1);
  validate(in.u2);
  HarnackReport<N> rep;
  const auto& g = in.u2.g();
  // Hopf floor and sampled data of the degenerate problem for w
  rep.hopf_floor = std::numeric_limits<double>::infinity();
  rep.atilde_min_eig = std::numeric_limits<double>::infinity();
  const double hs = g.is_sqrt() ? g.h() * g.h() : g.h();
  const Vec<N + 1> zero = Vec<N + 1>::Zero();
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (!in.u1.is_valid(s) || !in.u2.is_valid(s) || in_slit_band(g, s)) continue;
    const auto x = g.point(s);
    if (x.vec().norm() >= opt.check_radius) continue;
    const double xi = xi_of(x);
    if (xi <= 0.0) continue;
    const double u1 = in.u1.values[s], u2 = in.u2.values[s];
    rep.hopf_floor = std::min(rep.hopf_floor, u2 / xi);
    Eigen::SelfAdjointEigenSolver<Mat<N + 1>> es((u2 * u2 / (xi * xi)) * in.A(x), Eigen::EigenvaluesOnly);
    rep.atilde_min_eig = std::min(rep.atilde_min_eig, es.eigenvalues().minCoeff());
    rep.atilde_max_eig = std::max(rep.atilde_max_eig, es.eigenvalues().maxCoeff());
    const Vec<N + 1> f1 = in.f1 ? in.f1(x) : zero, f2 = in.f2 ? in.f2(x) : zero;
    if (in.f1 || in.f2) {
      rep.f_sup = std::max(rep.f_sup, (u2 * f1 - u1 * f2).norm() / (xi * xi));
      // one-sided safe gradients by interpolation at +-hs
      Vec<N + 1> g1 = zero, g2 = zero;
      bool ok = true;
      for (int a = 0; a <= N && ok; ++a) {
        Vec<N + 1> e = zero;
        e[a] = hs;
        const auto p = SlitPoint<N>::from_vec(x.vec() + e, x.side), m = SlitPoint<N>::from_vec(x.vec() - e, x.side);
        const auto a1p = in.u1.at(p), a1m = in.u1.at(m), a2p = in.u2.at(p), a2m = in.u2.at(m);
        ok = a1p && a1m && a2p && a2m;
        if (ok) {
          g1[a] = (*a1p - *a1m) / (2 * hs);
          g2[a] = (*a2p - *a2m) / (2 * hs);
        }
      }
      if (ok) rep.hterm_sup = std::max(rep.hterm_sup, rho_of(x) / (xi * xi) * std::abs(f2.dot(g1) - f1.dot(g2)));
    }
    const double p1 = in.phi1 ? in.phi1(x) : 0.0, p2 = in.phi2 ? in.phi2(x) : 0.0;
    rep.phi_sup = std::max(rep.phi_sup, std::abs(u2 * p1 - u1 * p2) / xi);
  }
  if (!(rep.hopf_floor > opt.hopf_floor)) {
    throw InvalidArgument("harnack_experiment: u2/xi floor " + std::to_string(rep.hopf_floor) +
                          " not above " + std::to_string(opt.hopf_floor));
  }
  // (F) hypotheses on the drift components f.e_j (j <= n) and f.e_{n+1} / x_{n+1}
  if (opt.check_f) {
    for (const VecFn<N>* f : {&in.f1, &in.f2}) {
      if (!*f) continue;
      for (int j = 0; j <= N; ++j) {
        const VecFn<N> fn = *f;
        ScalarFn<N> comp = [fn, j, hs](const SlitPoint<N>& x) {
          if (j < N) return fn(x)[j];
          return std::abs(x.xnp1) < hs ? std::nan("") : fn(x)[j] / x.xnp1;
        };
        rep.f_checks.push_back(check_property_F<N>(comp, in.A, FVariant::F, {}, opt.check_radius, opt.fcheck));
        if (!rep.f_checks.back().pass) {
          throw InvalidArgument("harnack_experiment: drift component " + std::to_string(j + 1) +
                                " fails property (F)");
        }
      }
    }
  }
  const auto w = ratio_field(in.u1, in.u2, opt.hopf_floor);
  for (const auto& c : centers) {
    const double kappa = in.A.hom_at(c).kappa;
    rep.centers.push_back(campanato_fit(w, c, opt.radii, opt.alpha, kappa, opt.tolerance));
    rep.cbar.push_back(rep.centers.back().L.c0);
  }
  if constexpr (N > 1) {
    std::vector<std::array<double, N - 1>> slope;
    for (const auto& c : rep.centers) {
      std::array<double, N - 1> s{};
      for (int i = 0; i < N - 1; ++i) s[i] = c.L.c[i];
      slope.push_back(s);
    }
    rep.tangential = tangential_fit<N - 1>(centers, rep.cbar, slope, 1e-10 * (1.0 + w.max_abs()));
  } else {
    rep.tangential.flat = true;
    rep.tangential.beta = 1.0;
    rep.tangential.exponent = 2.0;
  }
  rep.pass = rep.tangential.exponent >= 1.0 + opt.alpha - opt.tolerance;
  for (const auto& c : rep.centers) rep.pass = rep.pass && c.pass;
  return rep;
}

// ---------------------------------------------------------------------------
// C^{2,alpha} pipeline (n = 2)

struct StageReport {
  std::string stage;
  nlohmann::json inputs = nlohmann::json::object();
  nlohmann::json constants = nlohmann::json::object();
  nlohmann::json exponents = nlohmann::json::object();
  bool pass = false;

  nlohmann::json to_json() const {
    return {{"stage", stage}, {"inputs", inputs}, {"constants", constants}, {"exponents", exponents}, {"pass", pass}};
  }
};

struct PipelineReport {
  std::vector<StageReport> stages;
  std::string aborted_at;  // empty when every stage ran
  std::string diagnostic;
  double dgamma_exponent = std::nan("");
  bool pass = false;

  const StageReport* find(const std::string& name) const {
    for (const auto& s : stages)
      if (s.stage == name) return &s;
    return nullptr;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["stages"] = nlohmann::json::array();
    for (const auto& s : stages) j["stages"].push_back(s.to_json());
    j["aborted_at"] = aborted_at.empty() ? nlohmann::json(nullptr) : nlohmann::json(aborted_at);
    j["diagnostic"] = diagnostic;
    j["dgamma_exponent"] = std::isfinite(dgamma_exponent) ? nlohmann::json(dgamma_exponent) : nlohmann::json(nullptr);
    j["pass"] = pass;
    return j;
  }
};

struct PipelineOptions {
  double h = 1.0 / 64;             // physical grid spacing of the Signorini solve
  double alpha = 0.25;
  double working_radius = 0.4;    // ball, in straightened coordinates, for Hopf and Harnack
  double sqrt_h = 1.0 / 64;        // square-root grid spacing for the resampled fields
  double band_cells = 1.5;         // physical cells excluded next to S
  std::vector<double> frequency_radii{0.1, 0.15, 0.2, 0.25};
  double tau = 0.05;
  std::vector<double> centers{-0.08, -0.06, -0.04, -0.02, 0.0, 0.02, 0.04, 0.06, 0.08};
  std::vector<double> harnack_radii{0.1, 0.075, 0.05};
  double hopf_threshold = 0.5;
  bool check_f = false;
  PsorOptions psor{.omega = 0.0};
};

namespace detail {

/// Field on a square-root grid in straightened coordinates, sampled from a y-coordinate field.
inline FieldSample<2> pull_to_x(const FieldSample<2>& fy, const Pullback<2>& pb, GridPtr<2> xg, double band) {
  FieldSample<2> out;
  out.grid = xg;
  out.values.assign(xg->size(), 0.0);
  out.valid.assign(xg->size(), 0);
  for (std::size_t s = 0; s < xg->size(); ++s) {
    const auto x = xg->point(s);
    if (slit_distance(x) < band) continue;
    const double gam = pb.gamma()(x.xT);
    if (!std::isfinite(gam)) continue;
    const auto v = fy.at(pb.to_y(x));
    if (!v) continue;
    out.values[s] = *v;
    out.valid[s] = 1;
  }
  return out;
}

}  // namespace detail

/// Chains the Signorini solve through free-boundary extraction, straightening, Hopf and
/// boundary Harnack to a Hölder exponent of the free boundary's gradient.
inline PipelineReport c2alpha_pipeline(const SignoriniProblem<2>& p, const PipelineOptions& opt = {}) {
  PipelineReport rep;
  auto fail = [&](StageReport st, const std::string& why) {
    st.pass = false;
    rep.stages.push_back(std::move(st));
    rep.aborted_at = rep.stages.back().stage;
    rep.diagnostic = why;
    rep.pass = false;
    return rep;
  };

  // 1. solve
  StageReport s1{"solve_signorini"};
  s1.inputs = {{"R", p.R}, {"h", opt.h}, {"eps0", p.A.eps0()}, {"alpha", opt.alpha}};
  SignoriniSolution<2> sol;
  try {
    sol = solve_signorini(p, opt.h, opt.psor);
  } catch (const Error& e) {
    return fail(s1, e.what());
  }
  s1.constants = sol.to_json();
  s1.pass = sol.energy_monotone && sol.complementarity < 1e-6 && sol.min_perturbation_gain >= 0.0;
  if (!s1.pass) return fail(s1, "solver invariants violated");
  rep.stages.push_back(s1);

  // 2. free boundary
  StageReport s2{"free_boundary_graph"};
  const auto fb = free_boundary_graph(sol);
  const auto gamma = fb.as_function();
  const double g0 = gamma({0.0});
  s2.constants = {{"lines", fb.gamma.size()}, {"flagged", fb.flagged_count()}, {"gamma0", g0}};
  s2.pass = std::isfinite(g0);
  if (!s2.pass) return fail(s2, "no free boundary through x^T = 0");
  rep.stages.push_back(s2);

  // 3. frequency at the free-boundary point
  StageReport s3{"classify_regular"};
  SlitPoint<2> x0;
  x0.xn = g0;
  s3.inputs = {{"center", {0.0, g0, 0.0}}, {"radii", opt.frequency_radii}, {"tau", opt.tau}};
  try {
    const auto prof = frequency_profile(sol.U, x0, opt.frequency_radii);
    const auto cls = classify_regular(prof, opt.tau);
    s3.constants = {{"N", prof.values}, {"monotonicity_violation", cls.monotonicity_violation}};
    s3.exponents = {{"N0", cls.extrapolated}};
    s3.pass = cls.regular;
  } catch (const Error& e) {
    return fail(s3, e.what());
  }
  if (!s3.pass) return fail(s3, "free-boundary point is not regular");
  rep.stages.push_back(s3);

  // 4. straighten and pull back
  StageReport s4{"pullback"};
  const Pullback<2> pb(p.A, gamma, p.F, opt.h);
  const auto A = pb.coefficients();
  const auto jac = pb.jacobian({0.0});
  s4.constants = {{"lambda", A.lambda()}, {"Lambda", A.Lambda()}, {"dgamma0", -jac(1, 0)}};
  s4.pass = A.lambda() > 0.0;
  rep.stages.push_back(s4);

  // 5. derivative fields in straightened coordinates
  StageReport s5{"derivative_fields"};
  const auto xg = make_grid(SlitGrid<2>::sqrt_ball(opt.working_radius, opt.sqrt_h));
  const double band = opt.band_cells * opt.h;
  std::array<FieldSample<2>, 3> uy{derivative_fields(sol, 0), derivative_fields(sol, 1), normal_derivative(sol)};
  std::array<FieldSample<2>, 3> ux;
  for (int m = 0; m < 3; ++m) ux[m] = detail::pull_to_x(uy[m], pb, xg, band);
  std::size_t valid = 0;
  for (auto v : ux[1].valid) valid += v;
  s5.inputs = {{"sqrt_h", opt.sqrt_h}, {"working_radius", opt.working_radius}, {"band", band}};
  s5.constants = {{"valid_nodes", valid}, {"nodes", xg->size()}};
  s5.pass = valid > 0;
  if (!s5.pass) return fail(s5, "derivative fields do not reach the working ball");
  rep.stages.push_back(s5);

  // 6. Hopf on the normalized u_n
  StageReport s6{"hopf_check"};
  QuadOptions quad;
  quad.rule = QuadRule::gauss2;
  const auto mom = integrate_many<2>(
      *xg, Region<2>::ball(opt.working_radius),
      [&](const QuadPoint<2>& q) {
        if (!q.all_valid(ux[1].valid) || q.xi <= 0.0) return std::array<double, 2>{0.0, 0.0};
        return std::array<double, 2>{q.value(ux[1].values) / q.xi / q.rho, 1.0 / q.rho};
      },
      quad);
  const double scale = mom[1] > 0.0 ? mom[0] / mom[1] : 0.0;
  s6.constants = {{"average_un_over_xi", scale}};
  if (!(scale > 0.0)) return fail(s6, "u_n has nonpositive weighted average");
  FieldSample<2> un = ux[1];
  for (auto& v : un.values) v /= scale;
  HopfReport hopf;
  try {
    hopf = hopf_check(un, opt.working_radius / 8.0, {}, opt.hopf_threshold);
  } catch (const Error& e) {
    return fail(s6, e.what());
  }
  s6.constants["min_ratio"] = hopf.min_ratio;
  s6.constants["nodes"] = hopf.nodes;
  s6.pass = hopf.pass;
  if (!s6.pass) return fail(s6, "normalized u_n/xi below the Hopf threshold");
  rep.stages.push_back(s6);

  // 7. boundary Harnack for w_1 = u_1 / u_n
  StageReport s7{"harnack"};
  HarnackInput<2> hin;
  hin.u1 = ux[0];
  hin.u2 = un;
  for (auto& v : hin.u1.values) v /= scale;
  hin.A = A;
  auto grad_at = [ux, scale](const SlitPoint<2>& x) {
    Vec<3> u;
    for (int m = 0; m < 3; ++m) {
      const auto v = ux[m].at(x);
      u[m] = v ? *v / scale : 0.0;
    }
    return u;
  };
  hin.f1 = [pb, grad_at](const SlitPoint<2>& x) { return pb.drift(0, x, grad_at(x)); };
  hin.f2 = [pb, grad_at](const SlitPoint<2>& x) { return pb.drift(1, x, grad_at(x)); };
  if (p.F) {
    hin.phi1 = [pb, scale](const SlitPoint<2>& x) { return pb.phi(0, x) / scale; };
    hin.phi2 = [pb, scale](const SlitPoint<2>& x) { return pb.phi(1, x) / scale; };
  }
  std::vector<std::array<double, 1>> centers;
  for (double c : opt.centers) centers.push_back({c});
  HarnackOptions hopt;
  hopt.radii = opt.harnack_radii;
  hopt.alpha = opt.alpha;
  hopt.hopf_floor = 0.0;
  hopt.check_radius = opt.working_radius;
  hopt.check_f = opt.check_f;
  HarnackReport<2> hr;
  try {
    hr = harnack_experiment(hin, centers, hopt);
  } catch (const Error& e) {
    return fail(s7, e.what());
  }
  s7.inputs = {{"centers", opt.centers}, {"radii", opt.harnack_radii}};
  s7.constants = hr.to_json();
  s7.exponents = {{"tangential", hr.tangential.exponent}};
  s7.pass = true;
  for (const auto& c : hr.centers) s7.pass = s7.pass && std::isfinite(c.exponent);
  if (!s7.pass) return fail(s7, "Campanato fits failed");
  rep.stages.push_back(s7);

  // 8. Hölder exponent of the gradient of gamma: d gamma = -w_1 on the edge
  StageReport s8{"dgamma_holder"};
  std::vector<double> dg, d2g;
  for (std::size_t k = 0; k < hr.centers.size(); ++k) {
    dg.push_back(-hr.centers[k].L.c0);
    d2g.push_back(-hr.centers[k].L.c[0]);
  }
  std::vector<std::array<double, 1>> slope;
  for (double v : d2g) slope.push_back({v});
  const auto fit = holder_fit<1>(centers, dg, 1e-10);
  const auto taylor = tangential_fit<1>(centers, dg, slope, 1e-10);
  // finite-difference comparison with the extracted graph
  double fd_err = 0.0;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const double c = centers[k][0], d = 2.0 * opt.h;
    const double gp = gamma({c + d}), gm = gamma({c - d});
    if (std::isfinite(gp) && std::isfinite(gm)) fd_err = std::max(fd_err, std::abs((gp - gm) / (2 * d) - dg[k]));
  }
  s8.constants = {{"dgamma", dg}, {"d2gamma", d2g}, {"max_diff_vs_graph", fd_err}};
  s8.exponents = {{"beta", fit.beta}, {"flat", fit.flat}, {"alpha", opt.alpha}, {"taylor_exponent", taylor.exponent}};
  rep.dgamma_exponent = fit.beta;
  s8.pass = fit.beta >= opt.alpha;
  rep.stages.push_back(s8);
  rep.pass = true;
  for (const auto& s : rep.stages) rep.pass = rep.pass && s.pass;
  return rep;
}

}  // namespace slitlab

#endif  // SLITLAB_ANALYSIS_HPP
