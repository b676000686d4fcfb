#ifndef SLITLAB_SPARSE_HPP
#define SLITLAB_SPARSE_HPP

#include "slitlab/common.hpp"

#include <Eigen/Eigenvalues>

namespace slitlab {

/// Compressed sparse row matrix with sorted column indices.
struct CsrMatrix {
  int rows = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<int> col;
  std::vector<double> val;

  /// Builds the pattern from per-row column lists (sorted and deduplicated here).
  static CsrMatrix from_pattern(std::vector<std::vector<int>> pattern) {
    CsrMatrix m;
    m.rows = static_cast<int>(pattern.size());
    m.row_ptr.assign(pattern.size() + 1, 0);
    for (std::size_t i = 0; i < pattern.size(); ++i) {
      auto& p = pattern[i];
      std::sort(p.begin(), p.end());
      p.erase(std::unique(p.begin(), p.end()), p.end());
      m.row_ptr[i + 1] = m.row_ptr[i] + p.size();
    }
    m.col.reserve(m.row_ptr.back());
    for (auto& p : pattern) m.col.insert(m.col.end(), p.begin(), p.end());
    m.val.assign(m.col.size(), 0.0);
    return m;
  }

  /// Position of (i, j) in val, or npos.
  std::size_t find(int i, int j) const {
    const auto b = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
    const auto e = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
    const auto it = std::lower_bound(b, e, j);
    if (it == e || *it != j) return npos;
    return static_cast<std::size_t>(it - col.begin());
  }

  void add(int i, int j, double v) {
    const std::size_t k = find(i, j);
    if (k == npos) throw Error("CsrMatrix::add: entry outside the sparsity pattern");
    val[k] += v;
  }

  double at(int i, int j) const {
    const std::size_t k = find(i, j);
    return k == npos ? 0.0 : val[k];
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(static_cast<std::size_t>(rows), 0.0);
    for (int i = 0; i < rows; ++i) d[static_cast<std::size_t>(i)] = at(i, i);
    return d;
  }

  void multiply(const std::vector<double>& x, std::vector<double>& y) const {
    y.resize(static_cast<std::size_t>(rows));
    for (int i = 0; i < rows; ++i) {
      double s = 0.0;
      for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[static_cast<std::size_t>(col[k])];
      y[static_cast<std::size_t>(i)] = s;
    }
  }

  std::size_t nonzeros() const { return col.size(); }

  /// Largest |A_ij - A_ji| relative to the largest entry.
  double asymmetry() const {
    double worst = 0.0, scale = 0.0;
    for (int i = 0; i < rows; ++i) {
      for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
        scale = std::max(scale, std::abs(val[k]));
        worst = std::max(worst, std::abs(val[k] - at(col[k], i)));
      }
    }
    return scale > 0.0 ? worst / scale : 0.0;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  PairwiseSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
  return s.value();
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

struct CgOptions {
  double rel_tol = 1e-10;
  int max_iterations = 20000;
};

struct CgResult {
  int iterations = 0;
  double residual = 0.0;  // final ||r|| / ||b||
  double condition_estimate = 0.0;
  bool converged = false;
};

/// Extreme eigenvalue ratio of the Lanczos tridiagonal built from CG coefficients.
inline double lanczos_condition(const std::vector<double>& alpha, const std::vector<double>& beta) {
  const std::size_t k = alpha.size();
  if (k == 0) return 1.0;
  Eigen::VectorXd d(static_cast<Eigen::Index>(k));
  Eigen::VectorXd e(static_cast<Eigen::Index>(k > 1 ? k - 1 : 1));
  for (std::size_t j = 0; j < k; ++j) {
    d[static_cast<Eigen::Index>(j)] = 1.0 / alpha[j] + (j > 0 ? beta[j - 1] / alpha[j - 1] : 0.0);
    if (j + 1 < k) e[static_cast<Eigen::Index>(j)] = std::sqrt(beta[j]) / alpha[j];
  }
  if (k == 1) return 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, e.head(static_cast<Eigen::Index>(k - 1)), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

/// Jacobi-preconditioned conjugate gradients; x holds the initial guess.
inline CgResult pcg(const CsrMatrix& a, const std::vector<double>& b, std::vector<double>& x,
                    const CgOptions& opt = {}) {
  const std::size_t n = static_cast<std::size_t>(a.rows);
  require(b.size() == n, "pcg: right-hand side size mismatch");
  if (x.size() != n) x.assign(n, 0.0);
  CgResult res;
  const double bnorm = norm2(b);
  if (n == 0) {
    res.converged = true;
    return res;
  }
  std::vector<double> inv_diag = a.diagonal();
  for (auto& d : inv_diag) {
    require(d > 0.0, "pcg: nonpositive diagonal entry");
    d = 1.0 / d;
  }
  std::vector<double> r(n), z(n), p(n), q(n);
  a.multiply(x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  const double scale = bnorm > 0.0 ? bnorm : 1.0;
  double rnorm = norm2(r);
  if (bnorm == 0.0 && rnorm == 0.0) {
    res.converged = true;
    return res;
  }
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(r, z);
  std::vector<double> alphas, betas;
  int it = 0;
  while (rnorm / scale > opt.rel_tol && it < opt.max_iterations) {
    a.multiply(p, q);
    const double pq = dot(p, q);
    if (pq <= 0.0) break;
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rz = rz_new;
    alphas.push_back(alpha);
    betas.push_back(beta);
    rnorm = norm2(r);
    ++it;
  }
  // recompute the true residual
  a.multiply(x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  res.iterations = it;
  res.residual = norm2(r) / scale;
  res.condition_estimate = lanczos_condition(alphas, betas);
  // the recursive residual may drift below the true one by rounding
  res.converged = rnorm / scale <= opt.rel_tol && res.residual <= 100.0 * opt.rel_tol;
  return res;
}

}  // namespace slitlab

#endif  // SLITLAB_SPARSE_HPP
