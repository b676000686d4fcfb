#ifndef SLITLAB_DSOLVE_HPP
#define SLITLAB_DSOLVE_HPP

#include "slitlab/fem.hpp"
#include "slitlab/wspace.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <json.hpp>

namespace slitlab {

inline Vec<2> grad_rho_perp(double xn, double xnp1) {
  const double r = std::hypot(xn, xnp1);
  if (r == 0.0) return Vec<2>::Zero();
  return Vec<2>(xn / r, xnp1 / r);
}

template <int N>
Vec<N + 1> grad_rho(const SlitPoint<N>& x) {
  Vec<N + 1> g = Vec<N + 1>::Zero();
  g.template tail<2>() = grad_rho_perp(x.xn, x.xnp1);
  return g;
}

/// Point-wise C^alpha vector data f = sum c_i e_i + c_rho grad(rho) + remainder.
template <int N>
struct PointwiseField {
  std::array<double, N> c{};
  double c_rho = 0.0;
  VecFn<N> remainder;

  Vec<N + 1> constant_part(const SlitPoint<N>& x) const {
    Vec<N + 1> v = c_rho * grad_rho(x);
    for (int i = 0; i < N; ++i) v[i] += c[i];
    return v;
  }

  Vec<N + 1> operator()(const SlitPoint<N>& x) const {
    Vec<N + 1> v = constant_part(x);
    if (remainder) v += remainder(x);
    return v;
  }

  bool is_zero() const {
    if (remainder || c_rho != 0.0) return false;
    for (double v : c)
      if (v != 0.0) return false;
    return true;
  }

  /// The linear "polynomial" whose gradient is the constant part.
  LinearPoly<N> potential() const {
    LinearPoly<N> l;
    l.c = c;
    l.c_rho = c_rho;
    return l;
  }
};

/// div(xi^2 A grad w) = div(xi^2 f) + xi^2 g in B_radius(center), w = boundary outside.
template <int N>
struct DegenerateProblem {
  std::string id = "degenerate";
  CoeffField<N> A;
  PointwiseField<N> f;
  ScalarFn<N> g;
  double alpha = 0.25;
  ScalarFn<N> boundary;
  SlitPoint<N> center;
  double radius = 1.0;

  double p() const { return (N + 3) / (1.0 - alpha); }
};

/// div(A grad u) = div(f / sqrt(rho)) in B_radius(center), u = 0 on S, u = boundary outside.
template <int N>
struct UniformProblem {
  std::string id = "uniform";
  CoeffField<N> A;
  VecFn<N> f;
  ScalarFn<N> boundary;
  SlitPoint<N> center;
  double radius = 1.0;
};

struct BoundCheck {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool pass = true;
};

struct SolveReport {
  std::string problem_id;
  double h = 0.0;
  int iterations = 0;
  double residual = 0.0;
  double energy = 0.0;
  double condition_estimate = 0.0;
  std::vector<BoundCheck> bounds_checked;

  bool all_bounds_pass() const {
    for (const auto& b : bounds_checked)
      if (!b.pass) return false;
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["problem_id"] = problem_id;
    j["h"] = h;
    j["iterations"] = iterations;
    j["residual"] = residual;
    j["energy"] = energy;
    j["condition_estimate"] = condition_estimate;
    j["bounds_checked"] = nlohmann::json::array();
    for (const auto& b : bounds_checked) {
      j["bounds_checked"].push_back({{"name", b.name}, {"value", b.value}, {"bound", b.bound}, {"pass", b.pass}});
    }
    return j;
  }
};

template <int N>
struct Solution {
  FieldSample<N> field;
  SolveReport report;
};

namespace detail {

template <int N>
void require_solver_grid(const SlitGrid<N>& g, const SlitPoint<N>& center, double r,
                         const std::string& who) {
  require(g.is_sqrt(), who + ": grid must use square-root coordinates");
  for (int a = 0; a <= N; ++a) {
    require(g.cells(a) >= 8, who + ": grid too coarse (fewer than 8 cells per axis)");
  }
  require(r > 0.0, who + ": radius must be positive");
  const auto ball = Region<N>::ball(center, r);
  require(ball.covered_by(g), who + ": ball not covered by grid");
}

template <int N>
bool strictly_inside(const SlitPoint<N>& p, const SlitPoint<N>& center, double r) {
  return (p.vec() - center.vec()).norm() < r * (1.0 - 1e-12);
}

template <int N>
Mat<N + 1> checked_coefficient(const CoeffField<N>& a, const SlitPoint<N>& x) {
  const Mat<N + 1> m = a(x);
  Eigen::LLT<Mat<N + 1>> llt(m);
  if (llt.info() != Eigen::Success || !m.allFinite()) {
    throw InvalidArgument("solver: non-elliptic sampled A");
  }
  return m;
}

/// Sum over cells of int grad(v)^T K grad(v) with the assembly quadrature.
template <int N, class KFn>
double fe_energy(const SlitGrid<N>& g, const std::vector<double>& v, KFn&& kfn,
                 const DofMap* only = nullptr) {
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
    if (only) {
      bool any = false;
      for (auto c : qp.corners) any = any || only->unknown[c] >= 0;
      if (!any) return;
    }
    for_gauss_points<N>(g, k, qp, [&](const QuadPoint<N>& q) {
      const Vec<Dim> gr = q.grad_raw(v);
      acc.add(wq * gr.dot(kfn(q) * gr));
    });
  });
  return acc.value();
}

inline std::vector<double> residual_vector(const LinearSystem& sys, const std::vector<double>& x) {
  std::vector<double> r;
  sys.K.multiply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = sys.rhs[i] - r[i];
  return r;
}

template <int N>
Solution<N> run_solve(GridPtr<N> grid, const DofMap& dofs, const LinearSystem& sys,
                      const std::string& id, const CgOptions& cg) {
  std::vector<double> x(dofs.node_of.size(), 0.0);
  const CgResult res = pcg(sys.K, sys.rhs, x, cg);
  if (!res.converged) {
    throw ConvergenceError(id + ": conjugate gradients did not converge", res.iterations,
                           res.residual, res.condition_estimate);
  }
  Solution<N> out;
  out.field.grid = grid;
  out.field.values = scatter(dofs, x);
  out.report.problem_id = id;
  out.report.h = grid->h();
  out.report.iterations = res.iterations;
  out.report.residual = res.residual;
  out.report.condition_estimate = res.condition_estimate;
  return out;
}

}  // namespace detail

struct SolverOptions {
  CgOptions cg{};
};

/// Gauss-point integrand of the degenerate weak form
/// int xi^2 grad(phi) . A grad(w) = int xi^2 f . grad(phi) - int xi^2 g phi.
template <int N>
auto degenerate_integrand(const DegenerateProblem<N>& p) {
  return [&p](const QuadPoint<N>& q) {
    GaussTerms<N> t;
    const double w = q.xi * q.xi;
    t.K = w * to_raw_matrix(q, detail::checked_coefficient(p.A, q.x));
    if (!p.f.is_zero()) t.b = w * to_raw_vector(q, p.f(q.x));
    if (p.g) t.c = -w * raw_jacobian(q) * p.g(q.x);
    return t;
  };
}

/// Gauss-point integrand of int grad(phi) . A grad(u) = int (f / sqrt(rho)) . grad(phi).
template <int N>
auto uniform_integrand(const UniformProblem<N>& p) {
  return [&p](const QuadPoint<N>& q) {
    GaussTerms<N> t;
    t.K = to_raw_matrix(q, detail::checked_coefficient(p.A, q.x));
    if (p.f) t.b = to_raw_vector(q, (p.f(q.x) / std::sqrt(q.rho)).eval());
    return t;
  };
}

struct Assembled {
  DofMap dofs;
  LinearSystem system;
};

/// Nodes strictly inside the ball are unknown, including the slit face
/// {xi = 0}, where no condition is imposed.
template <int N>
Assembled assemble(const DegenerateProblem<N>& p, const SlitGrid<N>& g) {
  detail::require_solver_grid(g, p.center, p.radius, "assemble");
  require(static_cast<bool>(p.boundary), "assemble: missing boundary data");
  Assembled a;
  a.dofs = make_dofs(
      g, [&](std::size_t s) { return detail::strictly_inside(g.point(s), p.center, p.radius); },
      [&](std::size_t s) { return p.boundary(g.point(s)); });
  a.system = assemble_system(g, a.dofs, degenerate_integrand(p));
  return a;
}

/// As above with the slit face {xi = 0} held at zero.
template <int N>
Assembled assemble(const UniformProblem<N>& p, const SlitGrid<N>& g) {
  detail::require_solver_grid(g, p.center, p.radius, "assemble");
  require(static_cast<bool>(p.boundary), "assemble: missing boundary data");
  Assembled a;
  a.dofs = make_dofs(
      g,
      [&](std::size_t s) {
        return g.multi(s)[N - 1] > 0 && detail::strictly_inside(g.point(s), p.center, p.radius);
      },
      [&](std::size_t s) { return g.multi(s)[N - 1] == 0 ? 0.0 : p.boundary(g.point(s)); });
  a.system = assemble_system(g, a.dofs, uniform_integrand(p));
  return a;
}

/// Weak solution of the degenerate equation on a square-root grid.
template <int N>
Solution<N> solve_degenerate(const DegenerateProblem<N>& p, GridPtr<N> grid,
                             const SolverOptions& opt = {}) {
  const auto& g = *grid;
  const auto [dofs, sys] = assemble(p, g);
  const bool homogeneous = p.f.is_zero() && !p.g;
  auto weighted_a = [&](const QuadPoint<N>& q) { return degenerate_integrand(p)(q).K; };
  auto out = detail::run_solve(grid, dofs, sys, p.id, opt.cg);
  auto& rep = out.report;
  rep.energy = detail::fe_energy(g, out.field.values, weighted_a);

  const auto r = detail::residual_vector(sys, gather(dofs, out.field.values));
  const double rel = norm2(r) / std::max(norm2(sys.rhs), 1e-300);
  rep.bounds_checked.push_back({"galerkin_orthogonality", rel, 1e-9, rel <= 1e-9});
  if (homogeneous) {
    // Dirichlet principle against the nodal extension of the boundary data
    const double ext = detail::fe_energy(g, dofs.fixed, weighted_a);
    rep.bounds_checked.push_back({"dirichlet_principle", rep.energy, ext, rep.energy <= ext * (1.0 + 1e-9) + 1e-14});
    auto plain = [](const QuadPoint<N>& q) {
      return (q.xi * q.xi * to_raw_matrix(q, Mat<N + 1>::Identity().eval())).eval();
    };
    const double ew = detail::fe_energy(g, out.field.values, plain);
    const double ee = detail::fe_energy(g, dofs.fixed, plain);
    const double c = p.A.Lambda() / p.A.lambda();
    rep.bounds_checked.push_back({"energy_bound", ew, c * ee, ew <= c * ee * (1.0 + 1e-9) + 1e-14});
    double bmin = std::numeric_limits<double>::infinity(), bmax = -bmin;
    double imin = bmin, imax = -bmin;
    for (std::size_t s = 0; s < g.size(); ++s) {
      const double v = out.field.values[s];
      if (dofs.unknown[s] >= 0) {
        imin = std::min(imin, v);
        imax = std::max(imax, v);
      } else {
        bmin = std::min(bmin, v);
        bmax = std::max(bmax, v);
      }
    }
    const double excess = std::max({0.0, imax - bmax, bmin - imin});
    rep.bounds_checked.push_back({"maximum_principle", excess, 1e-8, excess <= 1e-8});
  }
  return out;
}

/// Solution of the uniform equation with zero trace on S.
template <int N>
Solution<N> solve_uniform(const UniformProblem<N>& p, GridPtr<N> grid, const SolverOptions& opt = {}) {
  const auto& g = *grid;
  const auto [dofs, sys] = assemble(p, g);
  auto out = detail::run_solve(grid, dofs, sys, p.id, opt.cg);
  out.report.energy = detail::fe_energy(g, out.field.values,
                                        [&](const QuadPoint<N>& q) { return uniform_integrand(p)(q).K; });
  const auto r = detail::residual_vector(sys, gather(dofs, out.field.values));
  const double rel = norm2(r) / std::max(norm2(sys.rhs), 1e-300);
  out.report.bounds_checked.push_back({"galerkin_orthogonality", rel, 1e-9, rel <= 1e-9});
  return out;
}

struct ReplacementResult {
  double energy_before = 0.0;  // weighted energy of w on the cells touching the ball
  double energy_after = 0.0;
  double ratio() const { return energy_before > 0.0 ? energy_after / energy_before : 0.0; }
};

/// xi^2-harmonic replacement of w in B_r(center), keeping w outside.
template <int N>
FieldSample<N> harmonic_replacement(const FieldSample<N>& w, const SlitPoint<N>& center, double r,
                                    ReplacementResult* info = nullptr, const SolverOptions& opt = {}) {
  validate(w);
  const auto& g = w.g();
  detail::require_solver_grid(g, center, r, "harmonic_replacement");
  require(resolves(g, r), "harmonic_replacement: ball below three grid cells");
  const DofMap dofs = make_dofs(
      g, [&](std::size_t s) { return detail::strictly_inside(g.point(s), center, r); },
      [&](std::size_t s) { return w.values[s]; });
  auto weighted_i = [](const QuadPoint<N>& q) {
    return (q.xi * q.xi * to_raw_matrix(q, Mat<N + 1>::Identity().eval())).eval();
  };
  const LinearSystem sys = assemble_system(g, dofs, [&](const QuadPoint<N>& q) {
    GaussTerms<N> t;
    t.K = weighted_i(q);
    return t;
  });
  auto sol = detail::run_solve(w.grid, dofs, sys, "harmonic_replacement", opt.cg);
  sol.field.parity = Parity::none;
  if (info) {
    info->energy_before = detail::fe_energy(g, w.values, weighted_i, &dofs);
    info->energy_after = detail::fe_energy(g, sol.field.values, weighted_i, &dofs);
  }
  return sol.field;
}

/// Minimizer of int_{B_r} |h - L|^2 / rho over L in span{1, x_1, ..., x_n, rho_kappa}.
///
/// The integral is lumped onto the nodes (weight int phi_s / rho over the
/// ball), so members of the span are recovered exactly from nodal samples.
template <int N>
LinearPoly<N> linearize(const FieldSample<N>& h, const SlitPoint<N>& center, double r,
                        double kappa = 1.0, double max_condition = 1e12) {
  validate(h);
  const auto& grid = h.g();
  require(resolves(grid, r), "linearize: ball below three grid cells");
  constexpr int B = LinearPoly<N>::Basis;
  LinearPoly<N> proto;
  proto.kappa = kappa;
  proto.centerT = center.xT;
  std::vector<double> lump(grid.size(), 0.0);
  QuadOptions opt;
  opt.rule = QuadRule::gauss2;
  integrate(
      grid, Region<N>::ball(center, r),
      [&](const QuadPoint<N>& q) {
        for (int c = 0; c < SlitGrid<N>::Corners; ++c) {
          lump[q.corners[c]] += detail::shape<N + 1>(c, q.t) * q.weight / q.rho;
        }
        return 0.0;
      },
      opt);
  std::array<PairwiseSum, B * B + B> acc;
  for (std::size_t s = 0; s < grid.size(); ++s) {
    if (lump[s] == 0.0 || !h.is_valid(s)) continue;
    const auto b = proto.basis(grid.point(s));
    for (int i = 0; i < B; ++i) {
      for (int j = 0; j < B; ++j) acc[i * B + j].add(lump[s] * b[i] * b[j]);
      acc[B * B + i].add(lump[s] * h.values[s] * b[i]);
    }
  }
  std::array<double, B * B + B> sums;
  for (int i = 0; i < B * B + B; ++i) sums[i] = acc[i].value();
  Eigen::Matrix<double, B, B> G;
  Eigen::Matrix<double, B, 1> rhs;
  for (int i = 0; i < B; ++i) {
    for (int j = 0; j < B; ++j) G(i, j) = sums[i * B + j];
    rhs[i] = sums[B * B + i];
  }
  Eigen::Matrix<double, B, 1> d;
  for (int i = 0; i < B; ++i) {
    require(G(i, i) > 0.0, "linearize: degenerate normal equations");
    d[i] = 1.0 / std::sqrt(G(i, i));
  }
  const Eigen::Matrix<double, B, B> Gs = d.asDiagonal() * G * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, B, B>> es(Gs, Eigen::EigenvaluesOnly);
  const double cond = es.eigenvalues().maxCoeff() / std::max(es.eigenvalues().minCoeff(), 1e-300);
  if (!(cond <= max_condition)) {
    throw InvalidArgument("linearize: ill-conditioned normal equations (ball too small)");
  }
  const Eigen::Matrix<double, B, 1> ys = Gs.ldlt().solve(d.asDiagonal() * rhs);
  std::array<double, B> coef;
  for (int i = 0; i < B; ++i) coef[i] = d[i] * ys[i];
  proto.set_coefficients(coef);
  return proto;
}

// ---------------------------------------------------------------------------
// Campanato iteration

struct CampanatoOptions {
  double lambda = 0.25;
  int levels = 3;
  double min_cells = 8.0;     // smallest ball must span this many cells
  double bound_factor = 10.0; // sigma_k <= factor * (sigma_0 + phi_0 + gamma_0)
  int holder_samples = 300;
  unsigned long long seed = 1;
  SolverOptions solver{};
};

template <int N>
struct CampanatoLevel {
  int k = 0;
  double radius = 0.0;
  double sigma = 0.0;
  double phi = 0.0;
  double gamma = 0.0;
  LinearPoly<N> l;        // correction found at this level
  LinearPoly<N> L;        // accumulated polynomial after this level
  double energy_ratio = 0.0;  // harmonic replacement energy over input energy
};

template <int N>
struct CampanatoResult {
  LinearPoly<N> L;
  std::vector<CampanatoLevel<N>> levels;
  double sigma_max = 0.0;
  bool bounded = true;
};

/// Smallest eps0-compatible shrinking rate.
inline double lambda_floor(int n, double eps0) {
  return eps0 > 0.0 ? std::pow(eps0, 2.0 / (n + 4)) : 0.0;
}

/// Deepest level K with the ball of radius lambda^K r still resolved.
template <int N>
int resolvable_depth(const SlitGrid<N>& g, double r, double lambda, double min_cells) {
  int k = 0;
  while (k < 64 && resolves(g, r * std::pow(lambda, k + 1), min_cells)) ++k;
  return k;
}

namespace detail {

/// Sampled C^alpha seminorm of a vector field over B_r(center).
template <int N, class Fn>
double sampled_holder(Fn&& f, const SlitPoint<N>& center, double r, double alpha, int count,
                      unsigned long long seed) {
  unsigned long long st = seed * 0x9e3779b97f4a7c15ULL + 7;
  std::vector<SlitPoint<N>> pts;
  std::vector<Vec<N + 1>> vals;
  const Vec<N + 1> c = center.vec();
  while (static_cast<int>(pts.size()) < count) {
    Vec<N + 1> v;
    for (int a = 0; a <= N; ++a) v[a] = 2.0 * uniform01(st) - 1.0;
    if (v.norm() >= 1.0) continue;
    const auto p = SlitPoint<N>::from_vec(c + r * v, uniform01(st) < 0.5 ? Side::lower : Side::upper);
    pts.push_back(p);
    vals.push_back(f(p));
  }
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double d = euclidean_distance(pts[i], pts[j]);
      if (d <= 0.0) continue;
      best = std::max(best, (vals[i] - vals[j]).norm() / std::pow(d, alpha));
    }
  }
  return best;
}

}  // namespace detail

/// Campanato iteration started from a given field w on a square-root grid.
///
/// At level k (radius r_k = lambda^k r): h_k is the xi^2-harmonic replacement of
/// w_k in B_{r_k/2}, l_k its linearization on B_{r_{k+1}}, and w_{k+1} = w_k - l_k.
/// f_k = f_0 + (I - A) grad(l_0 + ... + l_{k-1}) carries the drift.
template <int N>
CampanatoResult<N> campanato_iterate(const FieldSample<N>& w, const CoeffField<N>& A,
                                     const VecFn<N>& f0, const ScalarFn<N>& g, double alpha,
                                     const SlitPoint<N>& center, double r,
                                     const CampanatoOptions& opt = {}) {
  validate(w);
  const auto& grid = w.g();
  require(grid.is_sqrt(), "campanato_iterate: grid must use square-root coordinates");
  const double lo = lambda_floor(N, A.eps0());
  require(opt.lambda >= lo - 1e-12 && opt.lambda <= 0.25 + 1e-12,
          "campanato_iterate: lambda outside the admissible window [eps0^(2/(n+4)), 1/4]");
  require(opt.levels >= 1, "campanato_iterate: need at least one level");
  const int depth = resolvable_depth(grid, r, opt.lambda, opt.min_cells);
  require(opt.levels <= depth, "campanato_iterate: K = " + std::to_string(opt.levels) +
                                   " exceeds the grid-resolvable depth " + std::to_string(depth));

  CampanatoResult<N> out;
  LinearPoly<N> L;
  L.centerT = center.xT;
  LinearPoly<N> sum_l = L;
  FieldSample<N> wk = w;
  wk.parity = Parity::none;
  const double expo = N + 2 + 2.0 * alpha;
  QuadOptions quad;
  quad.rule = QuadRule::gauss2;
  for (int k = 0; k < opt.levels; ++k) {
    CampanatoLevel<N> lev;
    lev.k = k;
    lev.radius = r * std::pow(opt.lambda, k);
    const double rk = lev.radius;
    lev.sigma = campanato_deviation(wk, LinearPoly<N>{.centerT = center.xT}, center.xT, rk, alpha, quad);
    auto fk = [&](const SlitPoint<N>& x) -> Vec<N + 1> {
      Vec<N + 1> v = f0 ? f0(x) : Vec<N + 1>::Zero().eval();
      const Mat<N + 1> m = Mat<N + 1>::Identity() - A(x);
      return v + m * sum_l.gradient(x);
    };
    lev.phi = detail::sampled_holder<N>(fk, center, rk, alpha, opt.holder_samples, opt.seed + k);
    if (g) {
      const double gi = integrate(
          grid, Region<N>::ball(center, rk),
          [&](const QuadPoint<N>& q) {
            const double gv = g(q.x);
            return q.rho * std::pow(q.xi, 4) * gv * gv;
          },
          quad);
      lev.gamma = std::sqrt(gi / std::pow(rk, expo));
    }
    ReplacementResult info;
    const FieldSample<N> hk = harmonic_replacement(wk, center, 0.5 * rk, &info, opt.solver);
    lev.energy_ratio = info.ratio();
    lev.l = linearize(hk, center, opt.lambda * rk);
    sum_l += lev.l;
    L += lev.l;
    lev.L = L;
    for (std::size_t s = 0; s < wk.values.size(); ++s) wk.values[s] -= lev.l(grid.point(s));
    out.sigma_max = std::max(out.sigma_max, lev.sigma);
    out.levels.push_back(lev);
  }
  out.L = L;
  const auto& first = out.levels.front();
  out.bounded = out.sigma_max <= opt.bound_factor * (first.sigma + first.phi + first.gamma) + 1e-12;
  return out;
}

/// Solves the problem, removes the constant part of f, then iterates.
template <int N>
CampanatoResult<N> campanato_iterate(const DegenerateProblem<N>& p, GridPtr<N> grid,
                                     const CampanatoOptions& opt = {}) {
  const auto sol = solve_degenerate(p, grid, opt.solver);
  FieldSample<N> w = sol.field;
  LinearPoly<N> l0 = p.f.potential();
  l0.centerT = {};
  for (std::size_t s = 0; s < w.values.size(); ++s) w.values[s] -= l0(grid->point(s));
  const auto A = p.A;
  const auto f = p.f;
  VecFn<N> f0 = [A, f, l0](const SlitPoint<N>& x) -> Vec<N + 1> {
    return f(x) - A(x) * l0.gradient(x);
  };
  auto res = campanato_iterate<N>(w, p.A, f0, p.g, p.alpha, p.center, p.radius, opt);
  // report the polynomial in the caller's coordinates
  LinearPoly<N> shift = l0;
  shift.centerT = res.L.centerT;
  for (int i = 0; i < N - 1; ++i) shift.c0 += l0.c[i] * res.L.centerT[i];
  res.L += shift;
  for (auto& lev : res.levels) lev.L += shift;
  return res;
}

// ---------------------------------------------------------------------------
// Right-hand-side absorption

/// e_{n+1} int_0^{x_{n+1}} phi(x^T, x_n, s) ds by cumulative trapezoid along node columns.
template <int N>
VectorFieldSample<N> absorb_scalar_phi(const FieldSample<N>& phi) {
  validate(phi);
  const auto& g = phi.g();
  require(!g.is_sqrt(), "absorb_scalar_phi: needs a physical grid");
  require(g.zero_row() >= 0, "absorb_scalar_phi: grid has no x_{n+1} = 0 row");
  VectorFieldSample<N> out;
  out.grid = phi.grid;
  for (auto& c : out.components) c.assign(g.size(), 0.0);
  auto& col = out.components[N];
  const double h = g.h();
  typename SlitGrid<N>::Index first{}, last{};
  for (int a = 0; a < N; ++a) last[a] = g.nodes(a);
  last[N] = 1;
  g.for_cells(first, last, [&](const typename SlitGrid<N>::Index& base) {
    auto idx = base;
    // upward
    for (int j = g.zero_row(); j < g.cells(N); ++j) {
      idx[N] = j;
      const std::size_t a = g.index(idx, Side::upper);
      idx[N] = j + 1;
      const std::size_t b = g.index(idx, Side::upper);
      col[b] = col[a] + 0.5 * h * (phi.values[a] + phi.values[b]);
    }
    // downward
    for (int j = g.zero_row(); j > 0; --j) {
      idx[N] = j;
      const std::size_t a = g.index(idx, Side::lower);
      idx[N] = j - 1;
      const std::size_t b = g.index(idx, Side::lower);
      col[b] = col[a] - 0.5 * h * (phi.values[a] + phi.values[b]);
    }
  });
  return out;
}

/// Callable form of absorb_scalar_phi with Gauss-Legendre quadrature on the segment.
template <int N>
VecFn<N> absorb_scalar_phi(ScalarFn<N> phi) {
  return [phi](const SlitPoint<N>& x) -> Vec<N + 1> {
    Vec<N + 1> v = Vec<N + 1>::Zero();
    if (x.xnp1 == 0.0) return v;
    auto along = [&](double s) {
      SlitPoint<N> y = x;
      y.xnp1 = s;
      return phi(y);
    };
    v[N] = boost::math::quadrature::gauss<double, 20>::integrate(along, 0.0, x.xnp1);
    return v;
  };
}

/// f = Psi grad(rho), Psi(x) = int_0^1 s h(x^T, s x_perp) ds, so that div(xi^2 f) = (xi^2/rho) h.
template <int N>
VecFn<N> absorb_h_term(ScalarFn<N> h) {
  return [h](const SlitPoint<N>& x) -> Vec<N + 1> {
    const double rho = std::hypot(x.xn, x.xnp1);
    if (rho == 0.0) return Vec<N + 1>::Zero();
    auto along = [&](double s) {
      SlitPoint<N> y = x;
      y.xn = s * x.xn;
      y.xnp1 = s * x.xnp1;
      return s * h(y);
    };
    const double psi = boost::math::quadrature::gauss<double, 20>::integrate(along, 0.0, 1.0);
    return psi * grad_rho(x);
  };
}

template <int N>
VectorFieldSample<N> sample_vector(GridPtr<N> grid, const VecFn<N>& f) {
  VectorFieldSample<N> out;
  out.grid = grid;
  for (auto& c : out.components) c.resize(grid->size());
  for (std::size_t s = 0; s < grid->size(); ++s) {
    const Vec<N + 1> v = f(grid->point(s));
    for (int a = 0; a <= N; ++a) out.components[a][s] = v[a];
  }
  return out;
}

}  // namespace slitlab

#endif  // SLITLAB_DSOLVE_HPP
