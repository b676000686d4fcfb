#ifndef SLITLAB_GEOMETRY_HPP
#define SLITLAB_GEOMETRY_HPP

#include "slitlab/common.hpp"

#include <complex>
#include <optional>

namespace slitlab {

/// A point of R^{n+1} written as (x^T, x_n, x_{n+1}).
///
/// `side` disambiguates trace points on the slit: for x_{n+1} == 0 and
/// x_n < 0 it says which lip the point is the limit of. Elsewhere it is
/// ignored.
template <int N>
struct SlitPoint {
  static_assert(N == 1 || N == 2, "slitlab supports n = 1 and n = 2");
  std::array<double, N - 1> xT{};
  double xn = 0.0;
  double xnp1 = 0.0;
  Side side = Side::upper;

  static SlitPoint perp(double xn, double xnp1, Side side = Side::upper) {
    SlitPoint p;
    p.xn = xn;
    p.xnp1 = xnp1;
    p.side = side;
    return p;
  }

  /// Coordinates as a vector (x_1, ..., x_{n+1}).
  Vec<N + 1> vec() const {
    Vec<N + 1> v;
    for (int i = 0; i < N - 1; ++i) v[i] = xT[i];
    v[N - 1] = xn;
    v[N] = xnp1;
    return v;
  }

  static SlitPoint from_vec(const Vec<N + 1>& v, Side side = Side::upper) {
    SlitPoint p;
    for (int i = 0; i < N - 1; ++i) p.xT[i] = v[i];
    p.xn = v[N - 1];
    p.xnp1 = v[N];
    p.side = side;
    return p;
  }

  /// Sign of x_{n+1}, falling back to the side flag on the plane.
  double vertical_sign() const {
    if (xnp1 > 0.0) return 1.0;
    if (xnp1 < 0.0) return -1.0;
    return side == Side::upper ? 1.0 : -1.0;
  }

  bool on_slit() const { return xnp1 == 0.0 && xn < 0.0; }
};

struct PerpWeights {
  double rho;
  double xi;
  double eta;
};

/// rho = |x_perp| and the principal square root xi + i eta of x_n + i x_{n+1}.
///
/// xi >= 0 always; eta carries the sign of x_{n+1} (the side flag on the slit).
inline PerpWeights perp_weights(double xn, double xnp1, Side side = Side::upper) {
  const double rho = std::hypot(xn, xnp1);
  if (rho == 0.0) return {0.0, 0.0, 0.0};
  const double s = xnp1 > 0.0 ? 1.0 : (xnp1 < 0.0 ? -1.0 : (side == Side::upper ? 1.0 : -1.0));
  if (xn >= 0.0) {
    const double xi = std::sqrt(0.5 * (xn + rho));
    return {rho, xi, xnp1 / (2.0 * xi)};
  }
  // cancellation-free branch for the left half plane
  const double eta = s * std::sqrt(0.5 * (rho - xn));
  return {rho, xnp1 / (2.0 * eta), eta};
}

template <int N>
PerpWeights perp_weights(const SlitPoint<N>& p) {
  return perp_weights(p.xn, p.xnp1, p.side);
}

template <int N>
double rho_of(const SlitPoint<N>& p) {
  return std::hypot(p.xn, p.xnp1);
}

template <int N>
double xi_of(const SlitPoint<N>& p) {
  return perp_weights(p).xi;
}

/// Point in square-root coordinates (x^T, xi, eta).
template <int N>
struct SqrtPoint {
  std::array<double, N - 1> xT{};
  double xi = 0.0;
  double eta = 0.0;
};

template <int N>
SqrtPoint<N> sqrt_map(const SlitPoint<N>& p) {
  const auto w = perp_weights(p);
  return {p.xT, w.xi, w.eta};
}

template <int N>
SlitPoint<N> inverse_map(const SqrtPoint<N>& q) {
  require(q.xi >= 0.0, "inverse_map: xi must be nonnegative");
  SlitPoint<N> p;
  p.xT = q.xT;
  p.xn = q.xi * q.xi - q.eta * q.eta;
  p.xnp1 = 2.0 * q.xi * q.eta;
  p.side = q.eta < 0.0 ? Side::lower : Side::upper;
  return p;
}

/// Re((x_n + i x_{n+1})^{3/2}) on the branch with xi >= 0.
inline double re_z32(double xn, double xnp1, Side side = Side::upper) {
  const auto w = perp_weights(xn, xnp1, side);
  return w.xi * (w.xi * w.xi - 3.0 * w.eta * w.eta);
}

// ---------------------------------------------------------------------------
// Homogeneous solutions

/// Positive 1/2-homogeneous solution of div(Abar grad u) = 0 vanishing on S.
struct HomSolution {
  double kappa = 1.0;

  double operator()(double xn, double xnp1) const {
    return std::sqrt(0.5 * (xn + std::hypot(xn, kappa * xnp1)));
  }

  template <int N>
  double operator()(const SlitPoint<N>& p) const {
    return (*this)(p.xn, p.xnp1);
  }
};

template <int Dim>
void require_elliptic(const Mat<Dim>& a, const std::string& who) {
  require(a.allFinite(), who + ": non-finite matrix");
  require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + a.cwiseAbs().maxCoeff()),
          who + ": matrix not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat<Dim>> es(a, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() > 0.0, who + ": matrix not elliptic");
}

/// kappa = sqrt(Abar^{nn} / Abar^{n+1,n+1}).
template <int Dim>
HomSolution hom_solution(const Mat<Dim>& abar) {
  static_assert(Dim == 2 || Dim == 3);
  require_elliptic<Dim>(abar, "hom_solution");
  constexpr int n = Dim - 2;  // zero-based index of x_n
  constexpr int v = Dim - 1;  // zero-based index of x_{n+1}
  for (int i = 0; i < v; ++i) {
    require(std::abs(abar(i, v)) <= 1e-14, "hom_solution: Abar^{i,n+1} must vanish for i <= n");
  }
  return HomSolution{std::sqrt(abar(n, n) / abar(v, v))};
}

// ---------------------------------------------------------------------------
// Path metric on R^{n+1} \ S

/// Geodesic distance in the plane slit along the negative x_n axis.
inline double planar_slit_distance(double an, double anp1, Side aside, double bn, double bnp1,
                                   Side bside) {
  const double sa = anp1 > 0.0 ? 1.0 : (anp1 < 0.0 ? -1.0 : (aside == Side::upper ? 1.0 : -1.0));
  const double sb = bnp1 > 0.0 ? 1.0 : (bnp1 < 0.0 ? -1.0 : (bside == Side::upper ? 1.0 : -1.0));
  const double direct = std::hypot(an - bn, anp1 - bnp1);
  if (sa == sb) return direct;
  // opposite sides: does the segment meet the plane at x_n < 0?
  double cross_n;
  const double denom = anp1 - bnp1;
  if (denom == 0.0) {
    // both on the plane, on different lips
    cross_n = std::max(an, bn);
  } else {
    const double t = anp1 / denom;
    cross_n = an + t * (bn - an);
  }
  if (cross_n < 0.0) return std::hypot(an, anp1) + std::hypot(bn, bnp1);
  return direct;
}

template <int N>
double path_distance(const SlitPoint<N>& p, const SlitPoint<N>& q) {
  double t2 = 0.0;
  for (int i = 0; i < N - 1; ++i) t2 += (p.xT[i] - q.xT[i]) * (p.xT[i] - q.xT[i]);
  const double d = planar_slit_distance(p.xn, p.xnp1, p.side, q.xn, q.xnp1, q.side);
  return std::sqrt(t2 + d * d);
}

template <int N>
double euclidean_distance(const SlitPoint<N>& p, const SlitPoint<N>& q) {
  return (p.vec() - q.vec()).norm();
}

// ---------------------------------------------------------------------------
// Cones of opening one

template <int N>
struct Cone {
  std::array<double, N - 1> centerT{};
  double radius = 1.0;

  double tangential_offset(const SlitPoint<N>& y) const {
    double s = 0.0;
    for (int i = 0; i < N - 1; ++i) s += (y.xT[i] - centerT[i]) * (y.xT[i] - centerT[i]);
    return std::sqrt(s);
  }

  bool contains(const SlitPoint<N>& y) const {
    if (y.on_slit()) return false;
    const double perp = std::hypot(y.xn, y.xnp1);
    return perp <= radius && tangential_offset(y) <= perp;
  }
};

/// Radial projection of y_perp onto the cone surface |w_perp| = |y^T - center|.
template <int N>
SlitPoint<N> cone_project(const SlitPoint<N>& y, const Cone<N>& c) {
  const double perp = std::hypot(y.xn, y.xnp1);
  require(perp > 0.0, "cone_project: y_perp must be nonzero");
  const double scale = c.tangential_offset(y) / perp;
  SlitPoint<N> w = y;
  w.xn = scale * y.xn;
  w.xnp1 = scale * y.xnp1;
  return w;
}

// ---------------------------------------------------------------------------
// Straightening of the free boundary

template <int N>
using GraphFn = std::function<double(const std::array<double, N - 1>&)>;

/// x = (y^T, y_n - gamma(y^T), y_{n+1}).
template <int N>
SlitPoint<N> straighten(const GraphFn<N>& gamma, const SlitPoint<N>& y) {
  require(static_cast<bool>(gamma), "straighten: gamma undefined");
  const double g = gamma(y.xT);
  require(std::isfinite(g), "straighten: gamma undefined at this point");
  SlitPoint<N> x = y;
  x.xn = y.xn - g;
  return x;
}

template <int N>
SlitPoint<N> unstraighten(const GraphFn<N>& gamma, const SlitPoint<N>& x) {
  require(static_cast<bool>(gamma), "unstraighten: gamma undefined");
  const double g = gamma(x.xT);
  require(std::isfinite(g), "unstraighten: gamma undefined at this point");
  SlitPoint<N> y = x;
  y.xn = x.xn + g;
  return y;
}

// ---------------------------------------------------------------------------
// Coefficient fields A = A_D + x_{n+1} A_O

template <int N>
class CoeffField {
 public:
  static constexpr int Dim = N + 1;
  using Matrix = Mat<Dim>;
  using MatrixFn = std::function<Matrix(const SlitPoint<N>&)>;

  CoeffField() : CoeffField(identity_fn(), zero_fn(), 1.0, 1.0, 0.0, 0.25) {}

  CoeffField(MatrixFn diag_part, MatrixFn off_part, double lambda, double Lambda, double eps0,
             double alpha)
      : ad_(std::move(diag_part)),
        ao_(std::move(off_part)),
        lambda_(lambda),
        Lambda_(Lambda),
        eps0_(eps0),
        alpha_(alpha) {
    require(lambda_ > 0.0 && Lambda_ >= lambda_, "CoeffField: need 0 < lambda <= Lambda");
    require(alpha_ > 0.0 && alpha_ < 0.5, "CoeffField: alpha must lie in (0, 1/2)");
  }

  static CoeffField identity(double alpha = 0.25) {
    return CoeffField(identity_fn(), zero_fn(), 1.0, 1.0, 0.0, alpha);
  }

  static CoeffField constant(const Matrix& a, double alpha = 0.25) {
    require_elliptic<Dim>(a, "CoeffField::constant");
    for (int i = 0; i < N; ++i) {
      require(a(i, N) == 0.0, "CoeffField::constant: (i, n+1) entries must vanish");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    return CoeffField([a](const SlitPoint<N>&) { return a; }, zero_fn(),
                      es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff(), 0.0, alpha);
  }

  /// Seeded smooth perturbation of the identity with A(0) = I.
  ///
  /// The raw perturbation is rescaled so that its sampled C^alpha seminorm
  /// over B_1 equals eps0; lambda/Lambda are the resulting sampled bounds.
  static CoeffField perturbed(double eps0, unsigned long long seed, double alpha = 0.25);

  Matrix operator()(const SlitPoint<N>& x) const { return ad_(x) + x.xnp1 * ao_(x); }
  Matrix diag_part(const SlitPoint<N>& x) const { return ad_(x); }
  Matrix off_part(const SlitPoint<N>& x) const { return ao_(x); }

  /// A at the tangential point x^T of R^{n-1}.
  Matrix on_edge(const std::array<double, N - 1>& xT) const {
    SlitPoint<N> p;
    p.xT = xT;
    return (*this)(p);
  }

  HomSolution hom_at(const std::array<double, N - 1>& xT) const {
    return hom_solution<Dim>(on_edge(xT));
  }

  double lambda() const noexcept { return lambda_; }
  double Lambda() const noexcept { return Lambda_; }
  double eps0() const noexcept { return eps0_; }
  double alpha() const noexcept { return alpha_; }

  const MatrixFn& diag_fn() const noexcept { return ad_; }
  const MatrixFn& off_fn() const noexcept { return ao_; }

 private:
  static MatrixFn identity_fn() {
    return [](const SlitPoint<N>&) { return Matrix::Identity().eval(); };
  }
  static MatrixFn zero_fn() {
    return [](const SlitPoint<N>&) { return Matrix::Zero().eval(); };
  }

  MatrixFn ad_;
  MatrixFn ao_;
  double lambda_;
  double Lambda_;
  double eps0_;
  double alpha_;
};

/// Sampled check of the structural assumptions on A.
struct CoeffCheck {
  double min_eig = 0.0;
  double max_eig = 0.0;
  double structure_violation = 0.0;  // |A_D^{i,n+1}| and A_O outside (i, n+1)
  double parity_violation = 0.0;     // A_D, A_O not even in x_{n+1}
  double holder_seminorm = 0.0;      // sampled [A]_{C^alpha}
  double tangential_holder = 0.0;    // sampled [d_i A]_{C^alpha}, i <= n
  bool elliptic = false;
  bool ok = false;
};

namespace detail {

/// splitmix64: small deterministic generator for coefficient draws.
inline unsigned long long splitmix(unsigned long long& state) {
  unsigned long long z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30U)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27U)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31U);
}

inline double uniform01(unsigned long long& state) {
  return static_cast<double>(splitmix(state) >> 11U) * 0x1.0p-53;
}

/// Deterministic sample points in B_1 used by coefficient checks.
template <int N>
std::vector<SlitPoint<N>> coefficient_probe_points(int count, unsigned long long seed) {
  std::vector<SlitPoint<N>> pts;
  pts.reserve(static_cast<std::size_t>(count));
  unsigned long long state = seed;
  while (static_cast<int>(pts.size()) < count) {
    Vec<N + 1> v;
    for (int i = 0; i <= N; ++i) v[i] = 2.0 * uniform01(state) - 1.0;
    if (v.norm() <= 1.0) pts.push_back(SlitPoint<N>::from_vec(v));
  }
  return pts;
}

}  // namespace detail

template <int N>
CoeffCheck check_coefficients(const CoeffField<N>& a, int samples = 400,
                              unsigned long long seed = 7) {
  constexpr int Dim = N + 1;
  CoeffCheck out;
  out.min_eig = std::numeric_limits<double>::infinity();
  out.max_eig = -std::numeric_limits<double>::infinity();
  const auto pts = detail::coefficient_probe_points<N>(samples, seed);
  const double fd = 1e-5;
  std::vector<Mat<Dim>> vals;
  std::vector<std::array<Mat<Dim>, N>> grads;
  vals.reserve(pts.size());
  for (const auto& p : pts) {
    const Mat<Dim> m = a(p);
    Eigen::SelfAdjointEigenSolver<Mat<Dim>> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    out.min_eig = std::min(out.min_eig, es.eigenvalues().minCoeff());
    out.max_eig = std::max(out.max_eig, es.eigenvalues().maxCoeff());
    const Mat<Dim> d = a.diag_part(p);
    const Mat<Dim> o = a.off_part(p);
    for (int i = 0; i < Dim; ++i) {
      for (int j = 0; j < Dim; ++j) {
        const bool cross = (i == N) != (j == N);
        if (cross) {
          out.structure_violation = std::max(out.structure_violation, std::abs(d(i, j)));
        } else {
          out.structure_violation = std::max(out.structure_violation, std::abs(o(i, j)));
        }
      }
    }
    SlitPoint<N> mirror = p;
    mirror.xnp1 = -p.xnp1;
    out.parity_violation = std::max(out.parity_violation, (a.diag_part(mirror) - d).cwiseAbs().maxCoeff());
    out.parity_violation = std::max(out.parity_violation, (a.off_part(mirror) - o).cwiseAbs().maxCoeff());
    vals.push_back(m);
    std::array<Mat<Dim>, N> g;
    for (int i = 0; i < N; ++i) {
      Vec<Dim> e = Vec<Dim>::Zero();
      e[i] = fd;
      const auto plus = SlitPoint<N>::from_vec(p.vec() + e);
      const auto minus = SlitPoint<N>::from_vec(p.vec() - e);
      g[i] = (a(plus) - a(minus)) / (2.0 * fd);
    }
    grads.push_back(g);
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double dist = euclidean_distance(pts[i], pts[j]);
      if (dist <= 0.0) continue;
      const double scale = std::pow(dist, a.alpha());
      out.holder_seminorm =
          std::max(out.holder_seminorm, (vals[i] - vals[j]).cwiseAbs().maxCoeff() / scale);
      for (int k = 0; k < N; ++k) {
        out.tangential_holder = std::max(
            out.tangential_holder, (grads[i][k] - grads[j][k]).cwiseAbs().maxCoeff() / scale);
      }
    }
  }
  out.elliptic = out.min_eig > 0.0;
  out.ok = out.elliptic && out.structure_violation <= 1e-12 && out.parity_violation <= 1e-12 &&
           std::isfinite(out.tangential_holder);
  return out;
}

template <int N>
CoeffField<N> CoeffField<N>::perturbed(double eps0, unsigned long long seed, double alpha) {
  require(eps0 >= 0.0, "CoeffField::perturbed: eps0 must be nonnegative");
  unsigned long long state = seed * 0x2545F4914F6CDD1DULL + 1;
  struct Mode {
    std::array<double, N> k;  // wave vector over (x_1, ..., x_n)
    double phase;
    double curv;  // coefficient of x_{n+1}^2
  };
  auto draw = [&] {
    Mode m;
    for (int i = 0; i < N; ++i) m.k[i] = 2.0 * detail::uniform01(state) - 1.0;
    m.phase = 2.0 * std::numbers::pi * detail::uniform01(state);
    m.curv = 2.0 * detail::uniform01(state) - 1.0;
    return m;
  };
  // symmetric raw perturbation S(x) with S(0) = 0
  std::array<std::array<Mode, Dim>, Dim> diag_modes;
  std::array<Mode, N> off_modes;
  for (int i = 0; i < Dim; ++i)
    for (int j = 0; j < Dim; ++j) diag_modes[i][j] = draw();
  for (int i = 0; i < N; ++i) off_modes[i] = draw();

  auto mode_value = [](const Mode& m, const SlitPoint<N>& x) {
    double arg = m.phase;
    for (int i = 0; i < N - 1; ++i) arg += m.k[i] * x.xT[i];
    arg += m.k[N - 1] * x.xn;
    return std::sin(arg) - std::sin(m.phase) + m.curv * x.xnp1 * x.xnp1;
  };
  auto raw_d = [diag_modes, mode_value](const SlitPoint<N>& x) {
    Matrix s = Matrix::Zero();
    for (int i = 0; i < Dim; ++i) {
      for (int j = i; j < Dim; ++j) {
        if ((i == N) != (j == N)) continue;  // (i, n+1) entries live in A_O
        const double v = mode_value(diag_modes[i][j], x);
        s(i, j) = v;
        s(j, i) = v;
      }
    }
    return s;
  };
  auto raw_o = [off_modes](const SlitPoint<N>& x) {
    Matrix s = Matrix::Zero();
    for (int i = 0; i < N; ++i) {
      double arg = off_modes[i].phase;
      for (int t = 0; t < N - 1; ++t) arg += off_modes[i].k[t] * x.xT[t];
      arg += off_modes[i].k[N - 1] * x.xn;
      const double v = std::cos(arg) + off_modes[i].curv * x.xnp1 * x.xnp1;
      s(i, N) = v;
      s(N, i) = v;
    }
    return s;
  };
  // normalize the sampled seminorm of the raw perturbation
  CoeffField raw(raw_d, raw_o, 1.0, 1.0, 0.0, alpha);
  // raw is not elliptic in general; only its seminorm is needed here
  double semi = 0.0;
  {
    const auto pts = detail::coefficient_probe_points<N>(300, 11);
    std::vector<Matrix> vals;
    for (const auto& p : pts) vals.push_back(raw(p));
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        const double d = euclidean_distance(pts[i], pts[j]);
        if (d > 0.0) semi = std::max(semi, (vals[i] - vals[j]).cwiseAbs().maxCoeff() / std::pow(d, alpha));
      }
  }
  const double scale = semi > 0.0 ? eps0 / semi : 0.0;
  MatrixFn ad = [raw_d, scale](const SlitPoint<N>& x) {
    return (Matrix::Identity() + scale * raw_d(x)).eval();
  };
  MatrixFn ao = [raw_o, scale](const SlitPoint<N>& x) { return (scale * raw_o(x)).eval(); };
  // sampled ellipticity bounds over B_1
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& p : detail::coefficient_probe_points<N>(300, 13)) {
    const Matrix m = ad(p) + p.xnp1 * ao(p);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
    hi = std::max(hi, es.eigenvalues().maxCoeff());
  }
  require(lo > 0.0, "CoeffField::perturbed: eps0 too large, field not elliptic");
  return CoeffField(std::move(ad), std::move(ao), lo, hi, eps0, alpha);
}

// ---------------------------------------------------------------------------
// Pullback of the coefficients under x = (y^T, y_n - gamma(y^T), y_{n+1})

template <int N>
using ScalarFn = std::function<double(const SlitPoint<N>&)>;

/// Coefficients of the equations satisfied by u_m = d_{y_m} U in x-coordinates.
template <int N>
class Pullback {
 public:
  static constexpr int Dim = N + 1;
  using Matrix = Mat<Dim>;

  Pullback(CoeffField<N> b, GraphFn<N> gamma, ScalarFn<N> source, double step)
      : b_(std::move(b)), gamma_(std::move(gamma)), source_(std::move(source)), step_(step) {
    require(static_cast<bool>(gamma_), "pullback: gamma undefined");
    require(step_ > 0.0, "pullback: difference step must be positive");
  }

  /// Jacobian dx_i/dy_p at the tangential position y^T.
  Matrix jacobian(const std::array<double, N - 1>& yT) const {
    Matrix j = Matrix::Identity();
    for (int p = 0; p < N - 1; ++p) {
      auto plus = yT, minus = yT;
      plus[p] += step_;
      minus[p] -= step_;
      j(N - 1, p) = -(gamma_(plus) - gamma_(minus)) / (2.0 * step_);
    }
    return j;
  }

  SlitPoint<N> to_y(const SlitPoint<N>& x) const { return unstraighten<N>(gamma_, x); }

  /// a^{ij} = b^{pq} (dx_i/dy_p)(dx_j/dy_q), with the A_D / A_O split preserved.
  CoeffField<N> coefficients() const {
    auto self = *this;
    typename CoeffField<N>::MatrixFn ad = [self](const SlitPoint<N>& x) {
      const auto y = self.to_y(x);
      const Matrix j = self.jacobian(y.xT);
      return (j * self.b_.diag_part(y) * j.transpose()).eval();
    };
    typename CoeffField<N>::MatrixFn ao = [self](const SlitPoint<N>& x) {
      const auto y = self.to_y(x);
      const Matrix j = self.jacobian(y.xT);
      return (j * self.b_.off_part(y) * j.transpose()).eval();
    };
    // ellipticity bounds: the Jacobian is unimodular, so rescale by its extreme singular values
    double smin = std::numeric_limits<double>::infinity(), smax = 0.0;
    for (const auto& p : detail::coefficient_probe_points<N>(200, 17)) {
      Eigen::JacobiSVD<Matrix> svd(jacobian(p.xT));
      smin = std::min(smin, svd.singularValues().minCoeff());
      smax = std::max(smax, svd.singularValues().maxCoeff());
    }
    return CoeffField<N>(std::move(ad), std::move(ao), b_.lambda() * smin * smin,
                         b_.Lambda() * smax * smax, b_.eps0(), b_.alpha());
  }

  /// f_m = -(dx_i/dy_p)(d_{y_m} b^{pq}) u_q e_i, with u = (u_1, ..., u_{n+1}) = grad_y U.
  Vec<Dim> drift(int m, const SlitPoint<N>& x, const Vec<Dim>& u) const {
    require(m >= 0 && m < N, "pullback: drift direction out of range");
    const auto y = to_y(x);
    const Matrix j = jacobian(y.xT);
    Vec<Dim> e = Vec<Dim>::Zero();
    e[m] = step_;
    const auto yp = SlitPoint<N>::from_vec(y.vec() + e, y.side);
    const auto ym = SlitPoint<N>::from_vec(y.vec() - e, y.side);
    const Matrix db = (b_(yp) - b_(ym)) / (2.0 * step_);
    return -(j * db * u);
  }

  /// phi_m = d_{y_m} F.
  double phi(int m, const SlitPoint<N>& x) const {
    require(m >= 0 && m < N, "pullback: phi direction out of range");
    if (!source_) return 0.0;
    const auto y = to_y(x);
    Vec<Dim> e = Vec<Dim>::Zero();
    e[m] = step_;
    const auto yp = SlitPoint<N>::from_vec(y.vec() + e, y.side);
    const auto ym = SlitPoint<N>::from_vec(y.vec() - e, y.side);
    return (source_(yp) - source_(ym)) / (2.0 * step_);
  }

  const CoeffField<N>& original() const noexcept { return b_; }
  const GraphFn<N>& gamma() const noexcept { return gamma_; }
  double step() const noexcept { return step_; }

 private:
  CoeffField<N> b_;
  GraphFn<N> gamma_;
  ScalarFn<N> source_;
  double step_;
};

}  // namespace slitlab

#endif  // SLITLAB_GEOMETRY_HPP
