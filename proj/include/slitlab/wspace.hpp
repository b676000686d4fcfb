#ifndef SLITLAB_WSPACE_HPP
#define SLITLAB_WSPACE_HPP

#include "slitlab/grid.hpp"
#include "slitlab/linear_poly.hpp"

namespace slitlab {

struct WeightedNorms {
  double energy = 0.0;        // int xi^2 |grad w|^2
  double wl2 = 0.0;           // int w^2 / rho
  double plain_l2 = 0.0;      // int w^2
  double plain_energy = 0.0;  // int |grad w|^2

  /// Square of the H^1(xi^2 dx) norm.
  double norm_squared() const { return energy + wl2; }
};

template <int N>
using VecFn = std::function<Vec<N + 1>(const SlitPoint<N>&)>;

/// Quadrature of the four integrals over region minus S.
///
/// Gradients come from the cell containing the quadrature point, so they
/// never difference across S. Masked nodes exclude their cells.
template <int N>
WeightedNorms weighted_norms(const FieldSample<N>& w, const Region<N>& region,
                             const QuadOptions& opt = {}) {
  validate(w);
  const auto r = integrate_many<4>(
      w.g(), region,
      [&](const QuadPoint<N>& q) -> std::array<double, 4> {
        if (!q.all_valid(w.valid)) return {0.0, 0.0, 0.0, 0.0};
        const double v = q.value(w.values);
        const double g2 = q.grad(w.values).squaredNorm();
        return {q.xi * q.xi * g2, v * v / q.rho, v * v, g2};
      },
      opt);
  return {r[0], r[1], r[2], r[3]};
}

/// Copy of w with every node outside the open ball B_r(center) set to zero.
template <int N>
FieldSample<N> mask_outside(const FieldSample<N>& w, const SlitPoint<N>& center, double r) {
  FieldSample<N> out = w;
  const Vec<N + 1> c = center.vec();
  for (std::size_t s = 0; s < out.values.size(); ++s) {
    if ((w.grid->point(s).vec() - c).norm() >= r) out.values[s] = 0.0;
  }
  return out;
}

/// Ratio int w^2/rho over int xi^2 |grad w|^2 for w masked to B_r.
template <int N>
double check_poincare(const FieldSample<N>& w, double r, const QuadOptions& opt = {}) {
  const auto masked = mask_outside(w, SlitPoint<N>{}, r);
  // the interpolant of the masked field lives within one cell of B_r
  const double pad = w.g().is_sqrt() ? 2.0 * std::sqrt(r) * w.g().h() + w.g().h() * w.g().h()
                                     : 1.5 * w.g().h();
  const auto norms = weighted_norms(masked, Region<N>::ball(SlitPoint<N>{}, r + pad), opt);
  if (norms.energy == 0.0) {
    if (norms.wl2 == 0.0) return 0.0;
    throw InvalidArgument("check_poincare: zero energy with nonzero weighted L2 norm");
  }
  return norms.wl2 / norms.energy;
}

/// Largest |value| on the slit nodes, relative to the field's sup norm.
template <int N>
double slit_trace(const FieldSample<N>& u) {
  const auto& g = u.g();
  double worst = 0.0;
  for (std::size_t s = 0; s < u.values.size(); ++s) {
    if (!u.is_valid(s)) continue;
    bool on_slit;
    if (g.is_sqrt()) {
      on_slit = g.multi(s)[N - 1] == 0 && g.lo(N - 1) == 0.0;
    } else {
      on_slit = g.point(s).on_slit();
    }
    if (on_slit) worst = std::max(worst, std::abs(u.values[s]));
  }
  const double scale = u.max_abs();
  return scale > 0.0 ? worst / scale : 0.0;
}

/// Ratio int (u/xi)^2/rho over int |grad u|^2.
template <int N>
double check_hardy(const FieldSample<N>& u, const Region<N>& region, const QuadOptions& opt = {}) {
  validate(u);
  require(slit_trace(u) <= 1e-8, "check_hardy: u must vanish on S");
  const auto r = integrate_many<2>(
      u.g(), region,
      [&](const QuadPoint<N>& q) -> std::array<double, 2> {
        if (!q.all_valid(u.valid) || q.xi == 0.0) return {0.0, 0.0};
        const double v = q.value(u.values) / q.xi;
        return {v * v / q.rho, q.grad(u.values).squaredNorm()};
      },
      opt);
  if (r[1] == 0.0) {
    if (r[0] == 0.0) return 0.0;
    throw InvalidArgument("check_hardy: zero energy");
  }
  return r[0] / r[1];
}

/// Minimal resolvable radius of a ball on this grid (three cells).
template <int N>
bool resolves(const SlitGrid<N>& g, double r, double cells = 3.0) {
  return g.is_sqrt() ? std::sqrt(r) >= cells * g.h() : r >= cells * g.h();
}

template <int N>
SlitPoint<N> edge_point(const std::array<double, N - 1>& xT) {
  SlitPoint<N> p;
  p.xT = xT;
  return p;
}

/// sigma with sigma^2 = r^{-(n+2+2 alpha)} int_{B_r(center)} |w - L|^2 / rho.
template <int N>
double campanato_deviation(const FieldSample<N>& w, const LinearPoly<N>& L,
                           const std::array<double, N - 1>& centerT, double r, double alpha,
                           const QuadOptions& opt = {}) {
  require(resolves(w.g(), r), "campanato_deviation: radius below three grid cells");
  const double integral = integrate(
      w.g(), Region<N>::ball(edge_point<N>(centerT), r),
      [&](const QuadPoint<N>& q) {
        if (!q.all_valid(w.valid)) return 0.0;
        const double d = q.value(w.values) - L(q.x);
        return d * d / q.rho;
      },
      opt);
  return std::sqrt(integral / std::pow(r, N + 2 + 2.0 * alpha));
}

struct CaccioppoliResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio() const { return rhs > 0.0 ? lhs / rhs : 0.0; }
};

/// lhs = int_{B_{r/2}} xi^2 |grad w|^2; rhs = int_{B_r} (w^2/rho + xi^2 |f|^2 + rho xi^4 g^2).
///
/// With dirichlet set, the w^2/rho term is dropped (w vanishes outside B_r).
template <int N>
CaccioppoliResult check_caccioppoli(const FieldSample<N>& w, const VecFn<N>& f,
                                    const ScalarFn<N>& g, double r, bool dirichlet = false,
                                    const SlitPoint<N>& center = {}, const QuadOptions& opt = {}) {
  validate(w);
  CaccioppoliResult out;
  const double inner = dirichlet ? r : 0.5 * r;
  out.lhs = integrate(
      w.g(), Region<N>::ball(center, inner),
      [&](const QuadPoint<N>& q) { return q.xi * q.xi * q.grad(w.values).squaredNorm(); }, opt);
  out.rhs = integrate(
      w.g(), Region<N>::ball(center, r),
      [&](const QuadPoint<N>& q) {
        double s = 0.0;
        if (!dirichlet) {
          const double v = q.value(w.values);
          s += v * v / q.rho;
        }
        if (f) s += q.xi * q.xi * f(q.x).squaredNorm();
        if (g) {
          const double gv = g(q.x);
          s += q.rho * std::pow(q.xi, 4) * gv * gv;
        }
        return s;
      },
      opt);
  return out;
}

}  // namespace slitlab

#endif  // SLITLAB_WSPACE_HPP
