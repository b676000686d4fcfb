#include "slitlab/sparse.hpp"

#include <gtest/gtest.h>

namespace {

using namespace slitlab;

CsrMatrix laplace_1d(int n) {
  std::vector<std::vector<int>> pat(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = std::max(0, i - 1); j <= std::min(n - 1, i + 1); ++j) pat[static_cast<std::size_t>(i)].push_back(j);
  }
  auto a = CsrMatrix::from_pattern(pat);
  for (int i = 0; i < n; ++i) {
    a.add(i, i, 2.0);
    if (i > 0) a.add(i, i - 1, -1.0);
    if (i + 1 < n) a.add(i, i + 1, -1.0);
  }
  return a;
}

TEST(Csr, PatternAndProduct) {
  auto a = laplace_1d(5);
  EXPECT_EQ(a.nonzeros(), 13u);
  EXPECT_EQ(a.at(0, 4), 0.0);
  EXPECT_THROW(a.add(0, 4, 1.0), Error);
  std::vector<double> y;
  a.multiply({1, 1, 1, 1, 1}, y);
  EXPECT_EQ(y, (std::vector<double>{1, 0, 0, 0, 1}));
  EXPECT_EQ(a.asymmetry(), 0.0);
}

TEST(Pcg, SolvesTridiagonal) {
  const int n = 200;
  const auto a = laplace_1d(n);
  std::vector<double> xs(n), b;
  for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = std::sin(0.1 * i);
  a.multiply(xs, b);
  std::vector<double> x;
  const auto res = pcg(a, b, x);
  EXPECT_TRUE(res.converged);
  EXPECT_LE(res.residual, 1e-9);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(x[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(i)], 1e-6);
  // condition number of the 1-D Laplacian grows like (n+1)^2 * 4 / pi^2
  const double expected = std::pow(std::cos(M_PI / (2 * (n + 1))) / std::sin(M_PI / (2 * (n + 1))), 2);
  EXPECT_NEAR(res.condition_estimate / expected, 1.0, 0.05);
}

TEST(Pcg, ZeroRightHandSide) {
  const auto a = laplace_1d(10);
  std::vector<double> x;
  const auto res = pcg(a, std::vector<double>(10, 0.0), x);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations, 0);
}

TEST(Pcg, ReportsNonConvergence) {
  const auto a = laplace_1d(400);
  std::vector<double> b(400, 1.0), x;
  CgOptions opt;
  opt.max_iterations = 5;
  const auto res = pcg(a, b, x, opt);
  EXPECT_FALSE(res.converged);
  EXPECT_EQ(res.iterations, 5);
  EXPECT_GT(res.residual, 1e-3);
}

TEST(Pcg, RejectsNonpositiveDiagonal) {
  auto a = CsrMatrix::from_pattern({{0}, {1}});
  a.add(0, 0, 1.0);
  std::vector<double> x;
  EXPECT_THROW(pcg(a, {1.0, 1.0}, x), InvalidArgument);
}

TEST(PairwiseSum, OrderIndependentOfChunking) {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + static_cast<double>(i));
  PairwiseSum s;
  for (double x : v) s.add(x);
  PairwiseSum t;
  for (double x : v) t.add(x);
  EXPECT_EQ(s.value(), t.value());
  EXPECT_NEAR(s.value(), pairwise_sum(v), 1e-13);
}

}  // namespace
