#include "slitlab/analysis.hpp"

#include <gtest/gtest.h>

namespace {

using namespace slitlab;

double model(const SlitPoint<1>& x) { return re_z32(x.xn, x.xnp1, x.side); }
double xi1(const SlitPoint<1>& x) { return xi_of(x); }

PropertyFOptions few_samples() {
  PropertyFOptions o;
  o.samples = 1500;
  return o;
}

// ---------------------------------------------------------------------------
// Property (F)

TEST(PropertyF, XiHasConstantQuotient) {
  for (auto v : {FVariant::F, FVariant::F1, FVariant::F2, FVariant::F3}) {
    const auto r = check_property_F<1>(ScalarFn<1>(xi1), CoeffField<1>::identity(), v, {}, 1.0, few_samples());
    EXPECT_NEAR(r.seminorm, 0.0, 1e-10) << to_string(v);
    EXPECT_NEAR(r.sup, 1.0, 1e-12);
    EXPECT_TRUE(r.pass);
    EXPECT_GT(r.pairs, 0);
  }
}

TEST(PropertyF, SqrtRhoIsUnbounded) {
  ScalarFn<2> f = [](const SlitPoint<2>& x) { return std::sqrt(rho_of(x)); };
  for (auto v : {FVariant::F, FVariant::F1, FVariant::F2, FVariant::F3}) {
    const auto r = check_property_F<2>(f, CoeffField<2>::identity(), v, {}, 1.0, few_samples());
    EXPECT_FALSE(r.pass) << to_string(v);
    // h = sqrt(rho) / xi blows up as the angle approaches the slit: worst pairs sit near S
    EXPECT_GT(r.sup, 10.0);
  }
}

TEST(PropertyF, VariableCoefficientsRecoverTheSmoothFactor) {
  const auto A = CoeffField<2>::perturbed(0.05, 4);
  ScalarFn<2> f = [A](const SlitPoint<2>& x) { return A.hom_at(x.xT)(x) * (1.0 + x.xT[0]); };
  const auto r = check_property_F<2>(f, A, FVariant::F, {}, 0.5, few_samples());
  EXPECT_TRUE(r.pass);
  // sup |1 + x1| on B_{1/2} is 3/2; the C^{1/4} seminorm of x1 there is at most 1^{3/4}
  EXPECT_LE(r.sup, 1.5 + 1e-9);
  EXPECT_GT(r.sup, 1.3);
  EXPECT_LE(r.seminorm, 1.0 + 1e-9);
  EXPECT_GT(r.seminorm, 0.5);
}

TEST(PropertyF, ShrinkingTheRegionDoesNotIncreaseTheConstant) {
  const auto A = CoeffField<2>::perturbed(0.05, 2);
  ScalarFn<2> f = [A](const SlitPoint<2>& x) { return A.hom_at(x.xT)(x) * std::exp(x.xT[0] * x.xn + x.xnp1); };
  for (auto v : {FVariant::F, FVariant::F3}) {
    double prev = std::numeric_limits<double>::infinity();
    for (double r : {0.8, 0.4, 0.2, 0.1}) {
      const double c = check_property_F<2>(f, A, v, {}, r, few_samples()).constant();
      EXPECT_LE(c, prev * (1.0 + 1e-2)) << to_string(v) << " r = " << r;
      prev = c;
    }
  }
}

TEST(PropertyF, SampledFieldAndErrors) {
  auto g = make_grid(SlitGrid<1>::sqrt_ball(1.0, 1.0 / 32));
  const auto xi = sample<1>(g, xi1);
  const auto r = check_property_F(xi, CoeffField<1>::identity(), FVariant::F2, {}, 0.8, few_samples());
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.seminorm, 1e-6);
  EXPECT_THROW(check_property_F<1>(ScalarFn<1>(), CoeffField<1>::identity(), FVariant::F, {}, 1.0), InvalidArgument);
  EXPECT_THROW(check_property_F<1>(ScalarFn<1>(xi1), CoeffField<1>::identity(), FVariant::F, {}, 0.0), InvalidArgument);
  EXPECT_EQ(parse_variant("F3"), FVariant::F3);
  EXPECT_THROW(parse_variant("F4"), InvalidArgument);
  EXPECT_EQ(r.to_json()["variant"], "F2");
}

TEST(EquivalenceSuite, LatticeHoldsOnTheCorpus) {
  const auto A = CoeffField<2>::perturbed(0.05, 3);
  auto corpus = property_corpus(A);
  ASSERT_EQ(corpus.size(), 20u);
  const auto rep = equivalence_suite(corpus, A, 1.0, 100.0, few_samples());
  EXPECT_TRUE(rep.pass());
  EXPECT_GT(rep.inflation_max, 0.0);
  EXPECT_LT(rep.inflation_max, 2.0);
  for (const auto& e : rep.entries) {
    EXPECT_TRUE(e.consistent()) << e.name;
    if (e.name == "zero") {
      for (const auto& r : e.outer) {
        EXPECT_TRUE(r.pass);
        EXPECT_EQ(r.constant(), 0.0);
      }
    }
    if (e.name == "sqrt(rho)") {
      for (const auto& r : e.outer) EXPECT_FALSE(r.pass);
      for (const auto& r : e.inner) EXPECT_FALSE(r.pass);
    }
    if (e.expect_regular) {
      for (const auto& r : e.inner) EXPECT_TRUE(r.pass) << e.name;
    }
  }
  EXPECT_EQ(rep.to_json()["fields"].size(), 20u);
}

// ---------------------------------------------------------------------------
// Ratios

TEST(RatioField, ModelPairGivesTheLinearIdentity) {
  auto g = make_grid(SlitGrid<1>::sqrt_ball(0.5, 1.0 / 64));
  const auto w = ratio_field(sample<1>(g, model), sample<1>(g, xi1), 0.5);
  double e = 0.0;
  for (std::size_t s = 0; s < g->size(); ++s) {
    if (!w.is_valid(s)) continue;
    const auto x = g->point(s);
    e = std::max(e, std::abs(w.values[s] - (2 * x.xn - rho_of(x))));
  }
  EXPECT_LT(e, 1e-12);
}

TEST(RatioField, EqualFieldsScalingAndFloor) {
  auto g = make_grid(SlitGrid<1>::physical_cube(1.0, 1.0 / 32));
  auto u2f = [](const SlitPoint<1>& x) { return xi_of(x) * (1.5 + 0.3 * x.xn); };
  const auto u1 = sample<1>(g, model), u2 = sample<1>(g, u2f);
  const auto one = ratio_field(u2, u2, 0.5);
  for (std::size_t s = 0; s < g->size(); ++s)
    if (one.is_valid(s)) EXPECT_EQ(one.values[s], 1.0);
  auto c1 = u1, c2 = u2;
  for (auto& v : c1.values) v *= 4.0;
  for (auto& v : c2.values) v *= 4.0;
  const auto a = ratio_field(u1, u2, 0.5), b = ratio_field(c1, c2, 0.5);
  for (std::size_t s = 0; s < g->size(); ++s) EXPECT_EQ(a.values[s], b.values[s]);
  // the one-cell band next to S is masked
  EXPECT_FALSE(a.is_valid(g->index({g->zero_row() - 1, g->zero_row()}, Side::upper)));
  EXPECT_THROW(ratio_field(u1, sample<1>(g, [](const SlitPoint<1>& x) { return 0.3 * xi_of(x); }), 0.5),
               InvalidArgument);
}

TEST(RatioResidual, VanishesForEqualFields) {
  auto g = make_grid(SlitGrid<1>::physical_cube(1.0, 1.0 / 32));
  const auto u = sample<1>(g, model);
  const auto r = ratio_residual(u, u, CoeffField<1>::identity(), {}, {}, {}, {});
  std::size_t n = 0;
  for (std::size_t s = 0; s < g->size(); ++s) {
    if (!r.is_valid(s)) continue;
    ++n;
    EXPECT_NEAR(r.values[s], 0.0, 1e-12);
  }
  EXPECT_GT(n, 100u);
}

TEST(RatioResidual, ManufacturedSourcesConverge) {
  // u_i = xi g_i with Delta u_i = xi Delta g_i + grad(xi).grad(g_i) * 2, grad xi = (xi, eta) / (2 rho)
  auto g1 = [](double x, double y) { return 1.0 + x * x; };
  auto g2 = [](double x, double y) { return 2.0 + y; };
  auto lap = [](const SlitPoint<1>& p, double gx, double gy, double lg) {
    const auto w = perp_weights(p);
    const double r = rho_of(p);
    return w.xi * lg + 2.0 * (w.xi * gx + w.eta * gy) / (2.0 * r);
  };
  ScalarFn<1> phi1 = [&](const SlitPoint<1>& p) { return lap(p, 2 * p.xn, 0.0, 2.0); };
  ScalarFn<1> phi2 = [&](const SlitPoint<1>& p) { return lap(p, 0.0, 1.0, 0.0); };
  std::vector<double> hs, errs;
  for (int m : {32, 64}) {
    auto grid = make_grid(SlitGrid<1>::physical_cube(1.0, 1.0 / m));
    const auto u1 = sample<1>(grid, [&](const SlitPoint<1>& p) { return xi_of(p) * g1(p.xn, p.xnp1); });
    const auto u2 = sample<1>(grid, [&](const SlitPoint<1>& p) { return xi_of(p) * g2(p.xn, p.xnp1); });
    const auto r = ratio_residual(u1, u2, CoeffField<1>::identity(), {}, {}, phi1, phi2);
    double e = 0.0;
    for (std::size_t s = 0; s < grid->size(); ++s) {
      const auto p = grid->point(s);
      if (r.is_valid(s) && p.vec().norm() < 0.75 && detail::slit_distance(p) > 0.1) e = std::max(e, std::abs(r.values[s]));
    }
    hs.push_back(1.0 / m);
    errs.push_back(e);
  }
  EXPECT_LT(errs.back(), 1e-2);
  EXPECT_GE(loglog_slope(hs, errs), 0.9);
}

// ---------------------------------------------------------------------------
// Campanato and Hölder fits

TEST(CampanatoFit, RecoversTheDecayExponent) {
  auto g = make_grid(SlitGrid<1>::sqrt_ball(0.5, 1.0 / 256));
  const auto w = sample<1>(g, [](const SlitPoint<1>& x) {
    const double r = rho_of(x);
    return x.xn - 0.5 * r + std::pow(r, 1.25);
  });
  const auto rep = campanato_fit<1>(w, {}, {0.05, 0.4, 0.1, 0.2}, 0.25);
  EXPECT_EQ(rep.radii.front(), 0.4);
  EXPECT_NEAR(rep.exponent, 0.25, 0.1);
  EXPECT_TRUE(rep.pass);
  std::ostringstream os;
  rep.write_csv(os);
  EXPECT_EQ(os.str().substr(0, 14), "r,sigma,bound\n");
}

TEST(CampanatoFit, AddingALinearPolynomialShiftsTheFit) {
  auto g = make_grid(SlitGrid<2>::sqrt_ball(0.5, 1.0 / 16));
  auto base = [](const SlitPoint<2>& x) { return std::sin(2 * x.xT[0]) + x.xn * x.xn + std::pow(rho_of(x), 1.5); };
  LinearPoly<2> Lp;
  Lp.c0 = 0.7;
  Lp.c = {-0.4, 1.3};
  Lp.c_rho = 2.1;
  const auto a = campanato_fit<2>(sample<2>(g, base), {}, {0.4, 0.2, 0.1}, 0.25);
  const auto b = campanato_fit<2>(sample<2>(g, [&](const SlitPoint<2>& x) { return base(x) + Lp(x); }), {},
                                  {0.4, 0.2, 0.1}, 0.25);
  for (std::size_t k = 0; k < a.fits.size(); ++k) {
    const auto ca = a.fits[k].coefficients(), cb = b.fits[k].coefficients(), cl = Lp.coefficients();
    for (int i = 0; i < LinearPoly<2>::Basis; ++i) EXPECT_NEAR(cb[i] - ca[i], cl[i], 1e-9);
  }
}

TEST(CampanatoFit, InSpanDataIsFlat) {
  auto g = make_grid(SlitGrid<1>::sqrt_ball(0.5, 1.0 / 64));
  const auto rep = campanato_fit<1>(sample<1>(g, [](const SlitPoint<1>& x) { return 2 * x.xn - rho_of(x); }), {},
                                    {0.4, 0.2, 0.1}, 0.25);
  EXPECT_EQ(rep.exponent, 1.0);
  EXPECT_NEAR(rep.L.c0, 0.0, 1e-3);
  EXPECT_NEAR(rep.L.c[0], 2.0, 1e-3);
  EXPECT_NEAR(rep.L.c_rho, -1.0, 1e-3);
  EXPECT_THROW(campanato_fit<1>(sample<1>(g, xi1), {}, {0.4, 0.2}, 0.25), InvalidArgument);
}

TEST(HolderAverage, Xi) {
  auto g = make_grid(SlitGrid<1>::sqrt_ball(0.5, 1.0 / 64));
  const auto rep = holder_average_fit<1>(sample<1>(g, xi1), {}, {0.4, 0.2, 0.1}, 0.25);
  EXPECT_NEAR(rep.cbar, 1.0, 1e-10);
  for (double d : rep.deviations) EXPECT_LT(d, 1e-12);
  EXPECT_TRUE(rep.pass);
}

TEST(HolderAverage, SmoothFactorDecaysAtRateOne) {
  auto g = make_grid(SlitGrid<2>::sqrt_ball(0.5, 1.0 / 32));
  const auto rep = holder_average_fit<2>(
      sample<2>(g, [](const SlitPoint<2>& x) { return xi_of(x) * (1.0 + x.xT[0]); }), {}, {0.4, 0.2, 0.1}, 0.25);
  EXPECT_NEAR(rep.cbar, 1.0, 1e-2);
  EXPECT_NEAR(rep.exponent, 1.0, 0.1);
  EXPECT_TRUE(rep.pass);
}

TEST(HolderAverage, RoughFactorDecaysAtRateAlpha) {
  // u / xi = 1 + rho^alpha cos(theta) has weighted mean 1 on every ball
  auto g = make_grid(SlitGrid<1>::sqrt_ball(0.5, 1.0 / 128));
  const auto rep = holder_average_fit<1>(sample<1>(g, [](const SlitPoint<1>& x) {
                                           const double r = rho_of(x);
                                           return r > 0.0 ? xi_of(x) * (1.0 + std::pow(r, -0.75) * x.xn) : 0.0;
                                         }),
                                         {}, {0.4, 0.2, 0.1, 0.05}, 0.25);
  EXPECT_NEAR(rep.cbar, 1.0, 1e-2);
  EXPECT_NEAR(rep.exponent, 0.25, 0.1);
  EXPECT_TRUE(rep.pass);
  EXPECT_THROW(holder_average_fit<1>(sample<1>(g, xi1), {}, {0.4, 0.2, 1e-4}, 0.25), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Hopf

TEST(Hopf, XiAndNegativeControl) {
  auto g = make_grid(SlitGrid<2>::sqrt_ball(0.5, 1.0 / 16));
  const auto xi = sample<2>(g, [](const SlitPoint<2>& x) { return xi_of(x); });
  const auto r = hopf_check(xi);
  EXPECT_NEAR(r.min_ratio, 1.0, 1e-10);
  EXPECT_TRUE(r.pass);
  auto weak = xi;
  for (auto& v : weak.values) v *= 0.3;
  const auto w = hopf_check(weak);
  EXPECT_NEAR(w.min_ratio, 0.3, 1e-10);
  EXPECT_FALSE(w.pass);
  EXPECT_THROW(hopf_check(xi, 1e-6), InvalidArgument);
}

TEST(Hopf, PerturbedUniformSolve) {
  auto g = make_grid(SlitGrid<1>::sqrt_ball(1.0, 1.0 / 32));
  UniformProblem<1> p;
  p.A = CoeffField<1>::perturbed(0.05, 9);
  p.boundary = xi1;
  const auto r = hopf_check(solve_uniform(p, g).field);
  EXPECT_TRUE(r.pass);
  EXPECT_GT(r.min_ratio, 0.5);
}

// ---------------------------------------------------------------------------
// Harnack

TEST(Harnack, ModelPairInTwoDimensions) {
  auto g = make_grid(SlitGrid<1>::sqrt_ball(0.5, 1.0 / 64));
  HarnackInput<1> in;
  in.u1 = sample<1>(g, model);
  in.u2 = sample<1>(g, xi1);
  const auto rep = harnack_experiment<1>(in, {{}});
  ASSERT_EQ(rep.centers.size(), 1u);
  const auto& L = rep.centers[0].L;
  EXPECT_NEAR(L.c0, 0.0, 5e-2);
  EXPECT_NEAR(L.c[0], 2.0, 5e-2);
  EXPECT_NEAR(L.c_rho, -1.0, 5e-2);
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.hopf_floor, 1.0, 1e-12);
  // agrees with a direct linearization of w
  const auto w = ratio_field(in.u1, in.u2, 0.0);
  const auto direct = linearize(w, SlitPoint<1>{}, 0.05);
  EXPECT_LT(L.distance(direct), 5e-2);
}

TEST(Harnack, ModelPairInThreeDimensions) {
  auto g = make_grid(SlitGrid<2>::sqrt_ball(0.5, 1.0 / 32));
  HarnackInput<2> in;
  in.u1 = sample<2>(g, [](const SlitPoint<2>& x) { return re_z32(x.xn, x.xnp1, x.side); });
  in.u2 = sample<2>(g, [](const SlitPoint<2>& x) { return xi_of(x); });
  const auto rep = harnack_experiment<2>(in, {{-0.1}, {0.0}, {0.1}});
  for (const auto& c : rep.centers) {
    EXPECT_NEAR(c.L.c0, 0.0, 5e-2);
    EXPECT_NEAR(c.L.c[0], 0.0, 5e-2);
    EXPECT_NEAR(c.L.c[1], 2.0, 5e-2);
    EXPECT_NEAR(c.L.c_rho, -1.0, 5e-2);
  }
  EXPECT_GE(rep.tangential.exponent, 0.9 * 1.25);
  EXPECT_TRUE(rep.pass);
}

TEST(Harnack, EqualFieldsGiveOne) {
  auto g = make_grid(SlitGrid<2>::sqrt_ball(0.5, 1.0 / 16));
  HarnackInput<2> in;
  in.u1 = in.u2 = sample<2>(g, [](const SlitPoint<2>& x) { return xi_of(x) * (2.0 + x.xT[0]); });
  in.A = CoeffField<2>::perturbed(0.05, 1);
  const auto rep = harnack_experiment<2>(in, {{-0.1}, {0.1}});
  for (const auto& c : rep.centers) {
    EXPECT_NEAR(c.L.c0, 1.0, 1e-10);
    EXPECT_NEAR(c.L.c_rho, 0.0, 1e-10);
  }
}

TEST(Harnack, HypothesisFailuresAbort) {
  auto g = make_grid(SlitGrid<1>::sqrt_ball(0.5, 1.0 / 32));
  HarnackInput<1> in;
  in.u1 = sample<1>(g, model);
  in.u2 = sample<1>(g, [](const SlitPoint<1>& x) { return 0.3 * xi_of(x); });
  HarnackOptions opt;
  opt.hopf_floor = 0.5;
  EXPECT_THROW(harnack_experiment<1>(in, {{}}, opt), InvalidArgument);
  in.u2 = sample<1>(g, xi1);
  in.f1 = [](const SlitPoint<1>& x) { return Vec<2>(std::sqrt(rho_of(x)), 0.0); };
  EXPECT_THROW(harnack_experiment<1>(in, {{}}), InvalidArgument);
  EXPECT_THROW(harnack_experiment<1>(in, {}), InvalidArgument);
}

TEST(Fits, HolderAndTangential) {
  std::vector<std::array<double, 1>> pts;
  std::vector<double> root, line, taylor;
  std::vector<std::array<double, 1>> slope;
  for (int k = 0; k <= 16; ++k) {
    const double t = 0.01 * k;
    pts.push_back({t});
    root.push_back(std::sqrt(t));
    line.push_back(3.0 * t);
    taylor.push_back(t * t);
    slope.push_back({2 * t});
  }
  const double beta = holder_fit<1>(pts, root, 1e-14).beta;
  EXPECT_NEAR(beta, 0.5, 1e-9);
  EXPECT_NEAR(holder_fit<1>(pts, line, 1e-14).beta, 1.0, 1e-9);
  const auto tf = tangential_fit<1>(pts, taylor, slope, 1e-14);
  EXPECT_NEAR(tf.beta, 1.0, 1e-6);
  EXPECT_FALSE(tf.flat);
  std::vector<double> flat(pts.size(), 2.0);
  EXPECT_TRUE(holder_fit<1>(pts, flat, 1e-12).flat);
}

// ---------------------------------------------------------------------------
// Pipeline

TEST(Pipeline, FlatModelRuns) {
  SignoriniProblem<2> p;
  p.R = 0.5;
  p.boundary = [](const SlitPoint<2>& y) { return re_z32(y.xn, y.xnp1); };
  const auto rep = c2alpha_pipeline(p);
  EXPECT_TRUE(rep.aborted_at.empty()) << rep.aborted_at << ": " << rep.diagnostic;
  EXPECT_TRUE(rep.pass);
  const auto* fb = rep.find("free_boundary_graph");
  ASSERT_NE(fb, nullptr);
  EXPECT_TRUE(fb->pass);
  EXPECT_LE(std::abs(fb->constants["gamma0"].get<double>()), 2.0 / 64);
  const auto j = rep.to_json();
  EXPECT_EQ(j["stages"].size(), 8u);
  for (const auto& st : j["stages"]) {
    for (const char* key : {"stage", "inputs", "constants", "exponents", "pass"}) EXPECT_TRUE(st.contains(key));
  }
}

TEST(Pipeline, HopfViolationAborts) {
  SignoriniProblem<2> p;
  p.R = 0.5;
  p.boundary = [](const SlitPoint<2>& y) {
    if (y.xnp1 == 0.0 && y.xn < 0.0) return 0.0;
    return re_z32(y.xn, y.xnp1) + 20.0 * std::real(std::pow(std::complex<double>(y.xn, y.xnp1), 3.5));
  };
  PipelineOptions opt;
  opt.frequency_radii = {0.04, 0.06, 0.08, 0.1};
  const auto rep = c2alpha_pipeline(p, opt);
  EXPECT_EQ(rep.aborted_at, "hopf_check");
  EXPECT_FALSE(rep.pass);
  EXPECT_FALSE(rep.diagnostic.empty());
  EXPECT_EQ(rep.find("harnack"), nullptr);
}

}  // namespace
