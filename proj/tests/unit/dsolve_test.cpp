#include "slitlab/dsolve.hpp"

#include <gtest/gtest.h>

namespace {

using namespace slitlab;

template <int N>
double max_error(const FieldSample<N>& f, const ScalarFn<N>& exact, const SlitPoint<N>& c, double r) {
  double e = 0.0;
  for (std::size_t s = 0; s < f.values.size(); ++s) {
    const auto p = f.grid->point(s);
    if ((p.vec() - c.vec()).norm() < r) e = std::max(e, std::abs(f.values[s] - exact(p)));
  }
  return e;
}

double model_wstar(const SlitPoint<1>& p) { return p.xn - 0.5 * rho_of(p); }

TEST(Assemble, XiStencilMatchesHandOracle) {
  // A = I in (xi, eta) coordinates is the weight xi^2 times the identity, so a
  // function of xi alone sees the 1-D stencil h * sum k_e (v_i - v_j) with
  // k_e = (xi_a^2 + xi_a xi_b + xi_b^2) / (3 h).
  const double h = 1.0 / 16;
  const auto g = SlitGrid<1>::sqrt_ball(1.0, h);
  DegenerateProblem<1> p;
  p.boundary = [](const SlitPoint<1>&) { return 0.0; };
  const auto dofs = make_dofs(g, [](std::size_t) { return true; }, [](std::size_t) { return 0.0; });
  const auto sys = assemble_system(g, dofs, degenerate_integrand(p));
  EXPECT_LT(sys.K.asymmetry(), 1e-14);
  std::vector<double> v(g.size()), kv;
  for (std::size_t s = 0; s < g.size(); ++s) v[s] = std::pow(g.coord(0, g.multi(s)[0]), 3);
  sys.K.multiply(v, kv);
  auto ke = [&](int i) {
    const double a = i * h, b = (i + 1) * h;
    return (a * a + a * b + b * b) / (3 * h);
  };
  for (int i : {1, 5, 12}) {
    const std::size_t s = g.index({i, 16});
    const double vi = std::pow(i * h, 3), vl = std::pow((i - 1) * h, 3), vr = std::pow((i + 1) * h, 3);
    const double expected = h * (ke(i - 1) * (vi - vl) + ke(i) * (vi - vr));
    EXPECT_NEAR(kv[s], expected, 1e-14);
  }
}

TEST(Assemble, ConstantsAndTangentialCoordinateAreInKernel) {
  const auto g = SlitGrid<2>::sqrt_ball(1.0, 1.0 / 8);
  DegenerateProblem<2> p;
  const auto dofs = make_dofs(g, [](std::size_t) { return true; }, [](std::size_t) { return 0.0; });
  const auto sys = assemble_system(g, dofs, degenerate_integrand(p));
  std::vector<double> one(g.size(), 1.0), x1(g.size()), out;
  for (std::size_t s = 0; s < g.size(); ++s) x1[s] = g.point(s).xT[0];
  sys.K.multiply(one, out);
  for (double v : out) EXPECT_NEAR(v, 0.0, 1e-14);
  sys.K.multiply(x1, out);
  for (std::size_t s = 0; s < g.size(); ++s) {
    const int i = g.multi(s)[0];
    if (i > 0 && i < g.cells(0)) {
      EXPECT_NEAR(out[s], 0.0, 1e-14);
    }
  }
}

TEST(Assemble, Errors) {
  DegenerateProblem<1> p;
  p.boundary = [](const SlitPoint<1>&) { return 0.0; };
  EXPECT_THROW(assemble(p, SlitGrid<1>::sqrt_ball(1.0, 1.0 / 4)), InvalidArgument);
  EXPECT_THROW(assemble(p, SlitGrid<1>::physical_cube(1.0, 1.0 / 16)), InvalidArgument);
  Mat<2> bad = Mat<2>::Identity();
  bad(1, 1) = -1.0;
  p.A = CoeffField<1>([bad](const SlitPoint<1>&) { return bad; },
                      [](const SlitPoint<1>&) { return Mat<2>::Zero().eval(); }, 1.0, 1.0, 0.0, 0.25);
  EXPECT_THROW(assemble(p, SlitGrid<1>::sqrt_ball(1.0, 1.0 / 16)), InvalidArgument);
}

TEST(SolveDegenerate, ConstantDataGivesConstant) {
  auto g = make_grid(SlitGrid<2>::sqrt_ball(1.0, 1.0 / 12));
  DegenerateProblem<2> p;
  p.boundary = [](const SlitPoint<2>&) { return 1.0; };
  const auto sol = solve_degenerate(p, g);
  for (double v : sol.field.values) EXPECT_NEAR(v, 1.0, 1e-9);
  EXPECT_TRUE(sol.report.all_bounds_pass());
  EXPECT_LE(sol.report.residual, 1e-10);
}

TEST(SolveDegenerate, WeightedHarmonicLinearFunctionConverges) {
  std::vector<double> hs, errs;
  for (int m : {16, 32, 64}) {
    auto g = make_grid(SlitGrid<1>::sqrt_ball(1.0, 1.0 / m));
    DegenerateProblem<1> p;
    p.boundary = model_wstar;
    const auto sol = solve_degenerate(p, g);
    EXPECT_TRUE(sol.report.all_bounds_pass());
    hs.push_back(1.0 / m);
    errs.push_back(max_error<1>(sol.field, model_wstar, {}, 1.0));
  }
  EXPECT_LT(errs.back(), 5e-3);
  EXPECT_GE(loglog_slope(hs, errs), 0.9);
}

TEST(SolveDegenerate, AbsorbedDriftMatchesScalarSource) {
  // f = grad(rho)/2 and g = 1/rho give the same weak form
  auto g = make_grid(SlitGrid<1>::sqrt_ball(1.0, 1.0 / 32));
  DegenerateProblem<1> a, b;
  a.boundary = b.boundary = [](const SlitPoint<1>&) { return 0.0; };
  a.f.c_rho = 0.5;
  b.g = [](const SlitPoint<1>& x) { return 1.0 / rho_of(x); };
  const auto sa = solve_degenerate(a, g), sb = solve_degenerate(b, g);
  double d = 0.0, m = 0.0;
  for (std::size_t s = 0; s < g->size(); ++s) {
    d = std::max(d, std::abs(sa.field.values[s] - sb.field.values[s]));
    m = std::max(m, std::abs(sa.field.values[s]));
  }
  EXPECT_GT(m, 1e-3);
  EXPECT_LT(d, 1e-8 * m);
}

TEST(SolveDegenerate, MaximumPrincipleWithRandomData) {
  auto g = make_grid(SlitGrid<1>::sqrt_ball(1.0, 1.0 / 24));
  DegenerateProblem<1> p;
  p.A = CoeffField<1>::perturbed(0.1, 3);
  p.boundary = [](const SlitPoint<1>& x) { return std::sin(7 * x.xn) * std::cos(5 * x.xnp1) + perp_weights(x).eta; };
  const auto sol = solve_degenerate(p, g);
  for (const auto& b : sol.report.bounds_checked) EXPECT_TRUE(b.pass) << b.name;
  const auto j = sol.report.to_json();
  EXPECT_EQ(j["bounds_checked"].size(), 4u);
  EXPECT_EQ(j["problem_id"], "degenerate");
}

TEST(SolveDegenerate, EvenDataGivesEvenSolution) {
  auto g = make_grid(SlitGrid<2>::sqrt_ball(1.0, 1.0 / 12));
  DegenerateProblem<2> p;
  p.A = CoeffField<2>::perturbed(0.05, 8);
  p.boundary = [](const SlitPoint<2>& x) { return x.xT[0] + x.xn * x.xn + x.xnp1 * x.xnp1; };
  auto sol = solve_degenerate(p, g);
  sol.field.parity = Parity::even;
  EXPECT_LT(parity_violation(sol.field), 1e-9);
}

TEST(SolveDegenerate, ReportsNonConvergence) {
  auto g = make_grid(SlitGrid<1>::sqrt_ball(1.0, 1.0 / 32));
  DegenerateProblem<1> p;
  p.boundary = model_wstar;
  SolverOptions opt;
  opt.cg.max_iterations = 3;
  try {
    solve_degenerate(p, g, opt);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.iterations(), 3);
    EXPECT_GT(e.residual(), 1e-10);
    EXPECT_GT(e.condition_estimate(), 1.0);
  }
}

TEST(SolveUniform, XiAndModelSolution) {
  auto g = make_grid(SlitGrid<1>::sqrt_ball(1.0, 1.0 / 32));
  for (ScalarFn<1> exact : {ScalarFn<1>([](const SlitPoint<1>& x) { return xi_of(x); }),
                            ScalarFn<1>([](const SlitPoint<1>& x) { return re_z32(x.xn, x.xnp1, x.side); })}) {
    UniformProblem<1> p;
    p.boundary = exact;
    const auto sol = solve_uniform(p, g);
    EXPECT_LT(max_error<1>(sol.field, exact, {}, 1.0), 2e-3);
  }
}

TEST(SolveUniform, HopfLowerBound) {
  auto g = make_grid(SlitGrid<2>::sqrt_ball(1.0, 1.0 / 16));
  UniformProblem<2> p;
  p.A = CoeffField<2>::perturbed(0.05, 5);
  p.boundary = [](const SlitPoint<2>& x) { return xi_of(x); };
  const auto sol = solve_uniform(p, g);
  double worst = 1e300;
  for (std::size_t s = 0; s < g->size(); ++s) {
    const auto x = g->point(s);
    const double xi = xi_of(x);
    if (xi > 0 && x.vec().norm() < 0.125) worst = std::min(worst, sol.field.values[s] / xi);
  }
  EXPECT_GE(worst, 0.5);
}

TEST(HarmonicReplacement, IdempotentOnDiscreteSolutions) {
  auto g = make_grid(SlitGrid<1>::sqrt_ball(1.0, 1.0 / 32));
  DegenerateProblem<1> p;
  p.boundary = model_wstar;
  const auto w = solve_degenerate(p, g).field;
  ReplacementResult info;
  const auto h = harmonic_replacement(w, SlitPoint<1>{}, 0.5, &info);
  for (std::size_t s = 0; s < g->size(); ++s) EXPECT_NEAR(h.values[s], w.values[s], 1e-8);
  EXPECT_NEAR(info.ratio(), 1.0, 1e-8);
}

TEST(HarmonicReplacement, DirichletPrincipleAndRho) {
  auto g = make_grid(SlitGrid<1>::sqrt_ball(1.0, 1.0 / 32));
  const auto w = sample<1>(g, [](const SlitPoint<1>& x) { return rho_of(x); });
  ReplacementResult info;
  const auto h = harmonic_replacement(w, SlitPoint<1>{}, 0.5, &info);
  EXPECT_LT(info.ratio(), 1.0);
  const double diff = integrate(*g, Region<1>::ball(0.5), [&](const QuadPoint<1>& q) {
    const double d = q.value(h.values) - q.value(w.values);
    return d * d / q.rho;
  });
  EXPECT_GT(diff, 1e-6);

  unsigned long long st = 99;
  auto noisy = w;
  for (auto& v : noisy.values) v = detail::uniform01(st);
  ReplacementResult ninfo;
  harmonic_replacement(noisy, SlitPoint<1>{}, 0.5, &ninfo);
  EXPECT_LT(ninfo.ratio(), 1.0);
}

TEST(Linearize, RecoversBasisMembers) {
  auto g = make_grid(SlitGrid<2>::sqrt_ball(1.0, 1.0 / 16));
  const auto h = sample<2>(g, [](const SlitPoint<2>& x) { return 3 + 2 * x.xT[0] - rho_of(x); });
  const auto l = linearize(h, SlitPoint<2>{}, 0.9);
  EXPECT_NEAR(l.c0, 3.0, 1e-10);
  EXPECT_NEAR(l.c[0], 2.0, 1e-10);
  EXPECT_NEAR(l.c[1], 0.0, 1e-10);
  EXPECT_NEAR(l.c_rho, -1.0, 1e-10);

  auto g1 = make_grid(SlitGrid<1>::sqrt_ball(1.0, 1.0 / 32));
  const auto l1 = linearize(sample<1>(g1, model_wstar), SlitPoint<1>{}, 0.5);
  EXPECT_NEAR(l1.c0, 0.0, 1e-10);
  EXPECT_NEAR(l1.c[0], 1.0, 1e-10);
  EXPECT_NEAR(l1.c_rho, -0.5, 1e-10);
  EXPECT_THROW(linearize(sample<1>(g1, model_wstar), SlitPoint<1>{}, 1e-4), InvalidArgument);
}

TEST(Linearize, QuadraticDecayForSmoothHarmonicData) {
  // the xi^2-harmonic extension of rho^2 data: its deviation from the
  // linearization on B_r decays like r^{n+4}, i.e. sigma with alpha = 1 stays flat
  auto g = make_grid(SlitGrid<1>::sqrt_ball(1.0, 1.0 / 128));
  DegenerateProblem<1> p;
  p.boundary = [](const SlitPoint<1>& x) { return x.xn * x.xn + x.xnp1 * x.xnp1; };
  const auto h = solve_degenerate(p, g).field;
  std::vector<double> rs, sig;
  for (double r : {0.4, 0.2, 0.1}) {
    const auto l = linearize(h, SlitPoint<1>{}, r);
    rs.push_back(r);
    sig.push_back(campanato_deviation(h, l, {}, r, 1.0));
  }
  EXPECT_NEAR(loglog_slope(rs, sig), 0.0, 0.25);
}

TEST(Campanato, LinearDataStopsCorrecting) {
  auto g = make_grid(SlitGrid<1>::sqrt_ball(1.0, 1.0 / 128));
  const auto w = sample<1>(g, model_wstar);
  const auto res = campanato_iterate<1>(w, CoeffField<1>::identity(), nullptr, nullptr, 0.25, {}, 1.0);
  ASSERT_EQ(res.levels.size(), 3u);
  EXPECT_LT(res.levels[0].l.distance(res.L), 1e-2);
  for (std::size_t k = 1; k < res.levels.size(); ++k) {
    EXPECT_LT(res.levels[k].l.distance(LinearPoly<1>{}), 1e-2);
    EXPECT_LT(res.levels[k].sigma, 1e-2);
  }
  EXPECT_TRUE(res.bounded);
}

TEST(Campanato, WindowAndDepthErrors) {
  auto g = make_grid(SlitGrid<1>::sqrt_ball(1.0, 1.0 / 32));
  const auto w = sample<1>(g, model_wstar);
  CampanatoOptions opt;
  opt.lambda = 0.5;
  EXPECT_THROW(campanato_iterate<1>(w, CoeffField<1>::identity(), nullptr, nullptr, 0.25, {}, 1.0, opt),
               InvalidArgument);
  opt.lambda = 0.25;
  opt.levels = 3;  // sqrt(1/64) = 1/8 is only four cells
  EXPECT_THROW(campanato_iterate<1>(w, CoeffField<1>::identity(), nullptr, nullptr, 0.25, {}, 1.0, opt),
               InvalidArgument);
  // eps0 = 0.1 forces lambda >= 0.1^(2/5) > 1/4: the window is empty
  opt.levels = 1;
  EXPECT_THROW(campanato_iterate<1>(w, CoeffField<1>::perturbed(0.1, 1), nullptr, nullptr, 0.25, {}, 1.0, opt),
               InvalidArgument);
  EXPECT_NEAR(lambda_floor(1, 0.05), std::pow(0.05, 0.4), 1e-15);
}

TEST(Campanato, GammaBoundedForAdmissibleSource) {
  // g = (45/16) rho^{-3/4} solves div(xi^2 grad rho^{5/4}) = xi^2 g and satisfies
  // r^{-(n+2+2 alpha)} int rho xi^4 g^2 <= C with alpha = 1/4
  auto g = make_grid(SlitGrid<1>::sqrt_ball(1.0, 1.0 / 256));
  DegenerateProblem<1> p;
  p.alpha = 0.25;
  p.g = [](const SlitPoint<1>& x) { return 45.0 / 16.0 * std::pow(rho_of(x), -0.75); };
  p.boundary = [](const SlitPoint<1>& x) { return model_wstar(x) + std::pow(rho_of(x), 1.25); };
  const auto res = campanato_iterate(p, g);
  ASSERT_EQ(res.levels.size(), 3u);
  for (const auto& lev : res.levels) EXPECT_NEAR(lev.gamma, res.levels[0].gamma, 1e-2 * res.levels[0].gamma);
  EXPECT_TRUE(res.bounded);
  // the extra rho^{5/4} is radial, so its replacements add constants only
  EXPECT_NEAR(res.L.c0, 0.0, 5e-2);
  EXPECT_NEAR(res.L.c[0], 1.0, 5e-2);
  EXPECT_NEAR(res.L.c_rho, -0.5, 5e-2);
}

TEST(AbsorbScalarPhi, ExactCases) {
  auto g = make_grid(SlitGrid<1>::physical_cube(1.0, 1.0 / 16));
  const auto one = absorb_scalar_phi(sample<1>(g, [](const SlitPoint<1>&) { return 1.0; }));
  const auto xn = absorb_scalar_phi(sample<1>(g, [](const SlitPoint<1>& x) { return x.xn; }));
  for (std::size_t s = 0; s < g->size(); ++s) {
    const auto x = g->point(s);
    EXPECT_NEAR(one.components[1][s], x.xnp1, 1e-14);
    EXPECT_NEAR(xn.components[1][s], x.xnp1 * x.xn, 1e-14);
    EXPECT_EQ(one.components[0][s], 0.0);
  }
}

TEST(AbsorbScalarPhi, DivergenceReproducesPhi) {
  ScalarFn<1> phi = [](const SlitPoint<1>& x) { return std::sin(3 * x.xn) * std::exp(x.xnp1); };
  std::vector<double> hs, errs;
  for (int m : {16, 32, 64}) {
    auto g = make_grid(SlitGrid<1>::physical_cube(1.0, 1.0 / m));
    const auto F = absorb_scalar_phi(sample<1>(g, phi));
    double e = 0.0;
    const double h = 1.0 / m;
    for (int i = 0; i <= g->cells(0); ++i) {
      for (int j = 1; j < g->cells(1); ++j) {
        if (j == g->zero_row()) continue;
        const double d = (F.components[1][g->index({i, j + 1})] - F.components[1][g->index({i, j - 1})]) / (2 * h);
        e = std::max(e, std::abs(d - phi(g->point(g->index({i, j})))));
      }
    }
    hs.push_back(h);
    errs.push_back(e);
  }
  EXPECT_LT(errs.back(), 1e-2);
  EXPECT_GE(loglog_slope(hs, errs), 0.9);
  // callable form agrees with the closed form
  const auto f = absorb_scalar_phi<1>(phi);
  const auto x = SlitPoint<1>::perp(0.3, -0.4);
  EXPECT_NEAR(f(x)[1], std::sin(0.9) * (std::exp(-0.4) - 1.0), 1e-13);
}

TEST(AbsorbHTerm, ConstantsAndTangentialData) {
  const auto f1 = absorb_h_term<2>([](const SlitPoint<2>&) { return 1.0; });
  const auto f0 = absorb_h_term<2>([](const SlitPoint<2>&) { return 0.0; });
  const auto fx = absorb_h_term<2>([](const SlitPoint<2>& x) { return x.xT[0]; });
  SlitPoint<2> x;
  x.xT = {0.7};
  x.xn = -0.3;
  x.xnp1 = 0.2;
  EXPECT_LT((f1(x) - 0.5 * grad_rho(x)).norm(), 1e-14);
  EXPECT_EQ(f0(x).norm(), 0.0);
  EXPECT_LT((fx(x) - 0.35 * grad_rho(x)).norm(), 1e-14);
  EXPECT_EQ(f1(SlitPoint<2>{}).norm(), 0.0);
}

TEST(AbsorbHTerm, DivergenceIdentity) {
  // div(xi^2 f) = (xi^2 / rho) h, checked by centered differences away from the tip
  ScalarFn<1> h = [](const SlitPoint<1>& x) { return 1.0 + std::cos(2 * x.xn) + 0.5 * x.xnp1; };
  const auto f = absorb_h_term<1>(h);
  const double d = 1e-5;
  for (auto [a, b] : {std::pair{0.4, 0.3}, std::pair{-0.5, 0.2}, std::pair{0.1, -0.6}}) {
    auto flux = [&](double xn, double xv, int comp) {
      const auto p = SlitPoint<1>::perp(xn, xv);
      const double xi = xi_of(p);
      return xi * xi * f(p)[comp];
    };
    const double div = (flux(a + d, b, 0) - flux(a - d, b, 0)) / (2 * d) +
                       (flux(a, b + d, 1) - flux(a, b - d, 1)) / (2 * d);
    const auto p = SlitPoint<1>::perp(a, b);
    const double xi = xi_of(p);
    EXPECT_NEAR(div, xi * xi / rho_of(p) * h(p), 1e-7);
  }
}

TEST(RatioIdentity, FiniteDifferenceCheck) {
  // div(u2^2 A grad w) = u2 div(A grad u1) - u1 div(A grad u2), u1 = u2 w
  Mat<2> A;
  A << 2.0, 1.0 / 3, 1.0 / 3, 1.0;
  auto u2 = [](double x, double y) { return 2 + std::sin(x) * std::cos(y) / 3; };
  auto w = [](double x, double y) { return x * x - y + x * y; };
  auto u1 = [&](double x, double y) { return u2(x, y) * w(x, y); };
  std::vector<double> hs, errs;
  for (double h : {1e-2, 5e-3, 2.5e-3}) {
    auto flux = [&](auto&& coeff, auto&& fn, double x, double y) {
      const Vec<2> g((fn(x + h, y) - fn(x - h, y)) / (2 * h), (fn(x, y + h) - fn(x, y - h)) / (2 * h));
      return (coeff(x, y) * (A * g)).eval();
    };
    auto div = [&](auto&& coeff, auto&& fn, double x, double y) {
      return (flux(coeff, fn, x + h, y)[0] - flux(coeff, fn, x - h, y)[0]) / (2 * h) +
             (flux(coeff, fn, x, y + h)[1] - flux(coeff, fn, x, y - h)[1]) / (2 * h);
    };
    auto sq = [&](double x, double y) { return u2(x, y) * u2(x, y); };
    auto unit = [](double, double) { return 1.0; };
    const double x = 0.3, y = -0.2;
    const double lhs = div(sq, w, x, y);
    const double rhs = u2(x, y) * div(unit, u1, x, y) - u1(x, y) * div(unit, u2, x, y);
    hs.push_back(h);
    errs.push_back(std::abs(lhs - rhs));
  }
  EXPECT_LT(errs.back(), 1e-4);
  EXPECT_GE(loglog_slope(hs, errs), 0.9);
}

}  // namespace
