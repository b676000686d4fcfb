#ifndef SLITLAB_FEM_HPP
#define SLITLAB_FEM_HPP

#include "slitlab/grid.hpp"
#include "slitlab/sparse.hpp"

namespace slitlab {

/// Integrand data at one Gauss point, in raw grid coordinates and per unit raw measure.
///
/// The element contribution is int grad(phi_i)^T K grad(phi_j) for the
/// stiffness and int (b . grad(phi_i) + c phi_i) for the load.
template <int N>
struct GaussTerms {
  Mat<N + 1> K = Mat<N + 1>::Zero();
  Vec<N + 1> b = Vec<N + 1>::Zero();
  double c = 0.0;
};

/// Unknown / Dirichlet split of the grid nodes.
struct DofMap {
  std::vector<int> unknown;           // storage slot -> unknown index, or -1
  std::vector<std::size_t> node_of;   // unknown index -> storage slot
  std::vector<double> fixed;          // Dirichlet value per storage slot

  int count() const { return static_cast<int>(node_of.size()); }
};

template <int N, class IsUnknown, class Fixed>
DofMap make_dofs(const SlitGrid<N>& g, IsUnknown&& is_unknown, Fixed&& fixed_value) {
  DofMap d;
  d.unknown.assign(g.size(), -1);
  d.fixed.assign(g.size(), 0.0);
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (is_unknown(s)) {
      d.unknown[s] = static_cast<int>(d.node_of.size());
      d.node_of.push_back(s);
    } else {
      d.fixed[s] = fixed_value(s);
    }
  }
  return d;
}

struct LinearSystem {
  CsrMatrix K;
  std::vector<double> rhs;
};

/// Physical coefficient matrix seen in raw coordinates, including the Jacobian.
///
/// On square-root grids, with P = diag(I, M/(2 rho)) and M = [[xi, -eta], [eta, xi]],
/// the result is 4 rho P^T A P; on physical grids it is A.
template <int N>
Mat<N + 1> to_raw_matrix(const QuadPoint<N>& q, const Mat<N + 1>& a) {
  if (!q.grid->is_sqrt()) return a;
  Mat<N + 1> p = Mat<N + 1>::Identity();
  const double s = 1.0 / (2.0 * q.rho);
  p(N - 1, N - 1) = q.xi * s;
  p(N - 1, N) = -q.eta * s;
  p(N, N - 1) = q.eta * s;
  p(N, N) = q.xi * s;
  return 4.0 * q.rho * p.transpose() * a * p;
}

/// Physical vector load (int v . grad phi dx) seen in raw coordinates.
template <int N>
Vec<N + 1> to_raw_vector(const QuadPoint<N>& q, const Vec<N + 1>& v) {
  if (!q.grid->is_sqrt()) return v;
  Vec<N + 1> out = v;
  const double s = 1.0 / (2.0 * q.rho);
  const double a = v[N - 1], b = v[N];
  // P^T v
  out[N - 1] = (q.xi * a + q.eta * b) * s;
  out[N] = (-q.eta * a + q.xi * b) * s;
  return 4.0 * q.rho * out;
}

/// Jacobian of the raw measure: dx = jac dy.
template <int N>
double raw_jacobian(const QuadPoint<N>& q) {
  return q.grid->is_sqrt() ? 4.0 * q.rho : 1.0;
}

namespace detail {

template <int N, class Fn>
void for_gauss_points(const SlitGrid<N>& g, const typename SlitGrid<N>::Index& k, QuadPoint<N>& qp,
                      Fn&& fn) {
  constexpr int Dim = N + 1;
  static constexpr double g1 = 0.21132486540518711775;
  const double h = g.h();
  const Side side = (g.duplicated_plane() && k[N] < g.zero_row()) ? Side::lower : Side::upper;
  for (int c = 0; c < SlitGrid<N>::Corners; ++c) {
    std::array<double, Dim> t, r;
    for (int a = 0; a < Dim; ++a) {
      t[a] = (c & (1 << a)) ? 1.0 - g1 : g1;
      r[a] = g.coord(a, k[a]) + t[a] * h;
    }
    qp.x = g.to_physical(r, side);
    const auto pw = perp_weights(qp.x);
    qp.rho = pw.rho;
    qp.xi = pw.xi;
    qp.eta = pw.eta;
    qp.t = t;
    fn(static_cast<const QuadPoint<N>&>(qp));
  }
}

}  // namespace detail

/// Q1 finite-element assembly with 2-point Gauss quadrature per axis.
///
/// coef(const QuadPoint&) returns GaussTerms<N>. Dirichlet couplings are
/// moved to the right-hand side.
template <int N, class CoefFn>
LinearSystem assemble_system(const SlitGrid<N>& g, const DofMap& dofs, CoefFn&& coef) {
  constexpr int Dim = N + 1;
  constexpr int C = SlitGrid<N>::Corners;
  const int n = dofs.count();
  std::vector<std::vector<int>> pattern(static_cast<std::size_t>(n));
  g.for_cells([&](const typename SlitGrid<N>::Index& k) {
    const auto cs = g.corners(k);
    for (int a = 0; a < C; ++a) {
      const int i = dofs.unknown[cs[a]];
      if (i < 0) continue;
      for (int b = 0; b < C; ++b) {
        const int j = dofs.unknown[cs[b]];
        if (j >= 0) pattern[static_cast<std::size_t>(i)].push_back(j);
      }
    }
  });
  LinearSystem sys;
  sys.K = CsrMatrix::from_pattern(std::move(pattern));
  sys.rhs.assign(static_cast<std::size_t>(n), 0.0);

  const double h = g.h();
  double wq = 1.0;
  for (int a = 0; a < Dim; ++a) wq *= h;
  wq /= C;
  QuadPoint<N> qp;
  qp.grid = &g;
  g.for_cells([&](const typename SlitGrid<N>::Index& k) {
    const auto cs = g.corners(k);
    bool any = false;
    for (int a = 0; a < C; ++a) any = any || dofs.unknown[cs[a]] >= 0;
    if (!any) return;
    qp.corners = cs;
    Eigen::Matrix<double, C, C> ke = Eigen::Matrix<double, C, C>::Zero();
    Eigen::Matrix<double, C, 1> fe = Eigen::Matrix<double, C, 1>::Zero();
    detail::for_gauss_points<N>(g, k, qp, [&](const QuadPoint<N>& q) {
      const GaussTerms<N> gt = coef(q);
      Eigen::Matrix<double, Dim, C> grads;
      Eigen::Matrix<double, C, 1> vals;
      for (int c = 0; c < C; ++c) {
        vals[c] = detail::shape<Dim>(c, q.t);
        for (int a = 0; a < Dim; ++a) grads(a, c) = detail::shape_d<Dim>(c, a, q.t) / h;
      }
      ke.noalias() += wq * grads.transpose() * gt.K * grads;
      fe.noalias() += wq * (grads.transpose() * gt.b + gt.c * vals);
    });
    for (int a = 0; a < C; ++a) {
      const int i = dofs.unknown[cs[a]];
      if (i < 0) continue;
      sys.rhs[static_cast<std::size_t>(i)] += fe[a];
      for (int b = 0; b < C; ++b) {
        const int j = dofs.unknown[cs[b]];
        if (j >= 0) {
          sys.K.add(i, j, ke(a, b));
        } else {
          sys.rhs[static_cast<std::size_t>(i)] -= ke(a, b) * dofs.fixed[cs[b]];
        }
      }
    }
  });
  return sys;
}

/// Full nodal vector from unknown values and Dirichlet data.
inline std::vector<double> scatter(const DofMap& dofs, const std::vector<double>& x) {
  std::vector<double> v = dofs.fixed;
  for (std::size_t i = 0; i < dofs.node_of.size(); ++i) v[dofs.node_of[i]] = x[i];
  return v;
}

inline std::vector<double> gather(const DofMap& dofs, const std::vector<double>& full) {
  std::vector<double> x(dofs.node_of.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = full[dofs.node_of[i]];
  return x;
}

}  // namespace slitlab

#endif  // SLITLAB_FEM_HPP
