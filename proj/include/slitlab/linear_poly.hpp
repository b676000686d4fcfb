#ifndef SLITLAB_LINEAR_POLY_HPP
#define SLITLAB_LINEAR_POLY_HPP

#include "slitlab/geometry.hpp"

namespace slitlab {

/// Linear "polynomial" c0 + sum c_i x_i + c_rho rho_kappa.
///
/// Tangential coordinates are measured from centerT, and rho_kappa =
/// sqrt(x_n^2 + kappa^2 x_{n+1}^2). With centerT = 0 and kappa = 1 this is
/// c0 + sum c_i x_i + c_rho rho.
template <int N>
struct LinearPoly {
  static constexpr int Basis = N + 2;

  double c0 = 0.0;
  std::array<double, N> c{};
  double c_rho = 0.0;
  double kappa = 1.0;
  std::array<double, N - 1> centerT{};

  static double rho_kappa(const SlitPoint<N>& x, double kappa) {
    return std::hypot(x.xn, kappa * x.xnp1);
  }

  /// Basis values (1, x_1 - c_1, ..., x_n, rho_kappa).
  std::array<double, Basis> basis(const SlitPoint<N>& x) const {
    std::array<double, Basis> b{};
    b[0] = 1.0;
    for (int i = 0; i < N - 1; ++i) b[1 + i] = x.xT[i] - centerT[i];
    b[N] = x.xn;
    b[N + 1] = rho_kappa(x, kappa);
    return b;
  }

  std::array<double, Basis> coefficients() const {
    std::array<double, Basis> v{};
    v[0] = c0;
    for (int i = 0; i < N; ++i) v[1 + i] = c[i];
    v[N + 1] = c_rho;
    return v;
  }

  void set_coefficients(const std::array<double, Basis>& v) {
    c0 = v[0];
    for (int i = 0; i < N; ++i) c[i] = v[1 + i];
    c_rho = v[N + 1];
  }

  double operator()(const SlitPoint<N>& x) const {
    const auto b = basis(x);
    const auto v = coefficients();
    double s = 0.0;
    for (int i = 0; i < Basis; ++i) s += v[i] * b[i];
    return s;
  }

  /// Gradient off the tip.
  Vec<N + 1> gradient(const SlitPoint<N>& x) const {
    Vec<N + 1> g = Vec<N + 1>::Zero();
    for (int i = 0; i < N; ++i) g[i] = c[i];
    const double r = rho_kappa(x, kappa);
    if (r > 0.0) {
      g[N - 1] += c_rho * x.xn / r;
      g[N] += c_rho * kappa * kappa * x.xnp1 / r;
    }
    return g;
  }

  LinearPoly& operator+=(const LinearPoly& o) {
    require(o.kappa == kappa && o.centerT == centerT, "LinearPoly: incompatible bases");
    c0 += o.c0;
    for (int i = 0; i < N; ++i) c[i] += o.c[i];
    c_rho += o.c_rho;
    return *this;
  }

  LinearPoly& operator-=(const LinearPoly& o) {
    LinearPoly neg = o;
    neg *= -1.0;
    return *this += neg;
  }

  LinearPoly& operator*=(double s) {
    c0 *= s;
    for (auto& v : c) v *= s;
    c_rho *= s;
    return *this;
  }

  friend LinearPoly operator+(LinearPoly a, const LinearPoly& b) { return a += b; }
  friend LinearPoly operator-(LinearPoly a, const LinearPoly& b) { return a -= b; }

  /// Largest absolute coefficient difference.
  double distance(const LinearPoly& o) const {
    const auto a = coefficients(), b = o.coefficients();
    double d = 0.0;
    for (int i = 0; i < Basis; ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
  }
};

}  // namespace slitlab

#endif  // SLITLAB_LINEAR_POLY_HPP
