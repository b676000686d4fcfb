#ifndef SLITLAB_COMMON_HPP
#define SLITLAB_COMMON_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace slitlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition or argument violation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Iterative solver failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int iterations, double residual,
                   double condition_estimate)
      : Error(what),
        iterations_(iterations),
        residual_(residual),
        condition_estimate_(condition_estimate) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }
  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  int iterations_;
  double residual_;
  double condition_estimate_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

/// Which side of the thin plane {x_{n+1} = 0} a trace point belongs to.
enum class Side : signed char { lower = -1, upper = 1 };

/// Declared symmetry of a field under x_{n+1} -> -x_{n+1}.
enum class Parity { none, even, odd };

template <int Dim>
using Vec = Eigen::Matrix<double, Dim, 1>;
template <int Dim>
using Mat = Eigen::Matrix<double, Dim, Dim>;

/// Exact pairwise (cascade) summation with O(log n) state.
///
/// Partial sums are merged like a binary counter, so the association
/// order depends only on the number of terms added, never on timing.
class PairwiseSum {
 public:
  void add(double v) {
    double carry = v;
    std::size_t level = 0;
    std::size_t n = count_;
    while (n & 1U) {
      carry += stack_[level];
      stack_[level] = 0.0;
      n >>= 1U;
      ++level;
    }
    if (level >= stack_.size()) stack_.resize(level + 1, 0.0);
    stack_[level] = carry;
    ++count_;
  }

  double value() const {
    double total = 0.0;
    // lowest levels hold the most recent (smallest) partials
    for (std::size_t level = 0; level < stack_.size(); ++level) {
      if ((count_ >> level) & 1U) total += stack_[level];
    }
    return total;
  }

  std::size_t count() const noexcept { return count_; }

 private:
  std::vector<double> stack_;
  std::size_t count_ = 0;
};

inline double pairwise_sum(std::span<const double> values) {
  if (values.empty()) return 0.0;
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

/// Worker count, capped by the SLITLAB_THREADS environment variable.
inline unsigned thread_count() {
  unsigned n = std::max(1U, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SLITLAB_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

/// Runs fn(begin, end) over fixed-size chunks of [0, n).
///
/// Chunk boundaries do not depend on the thread count, so per-chunk
/// partial results combine identically however many workers run.
template <class Fn>
void parallel_chunks(std::size_t n, std::size_t chunk, Fn&& fn) {
  if (n == 0) return;
  const std::size_t chunks = (n + chunk - 1) / chunk;
  const unsigned workers = std::min<std::size_t>(thread_count(), chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) fn(c, c * chunk, std::min(n, (c + 1) * chunk));
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t c = w; c < chunks; c += workers) {
        fn(c, c * chunk, std::min(n, (c + 1) * chunk));
      }
    });
  }
  for (auto& t : pool) t.join();
}

/// Least-squares slope of y against x.
inline double fit_slope(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "fit_slope: need at least two samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  require(sxx > 0.0, "fit_slope: degenerate abscissae");
  return sxy / sxx;
}

/// Intercept and slope of the least-squares line through (x, y).
inline std::pair<double, double> fit_line(std::span<const double> x, std::span<const double> y) {
  const double slope = fit_slope(x, y);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  return {my - slope * mx, slope};
}

/// Slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, "loglog_slope: nonpositive sample");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_slope(lx, ly);
}

}  // namespace slitlab

#endif  // SLITLAB_COMMON_HPP
