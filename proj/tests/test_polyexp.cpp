#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "tandem/polyexp.hpp"
#include "tandem/simulator.hpp"

using namespace tandem;

namespace {

struct Model {
  const char* name;
  Distribution x;
};

std::vector<Model> figure_models() {
  std::vector<Model> out;
  for (double rho : {0.5, 0.75, 0.95}) {
    out.push_back({"D/M", Distribution::deterministic(1.0 / rho)});
    out.push_back({"E2/M", Distribution::gamma(2.0, 2.0 * rho)});
  }
  return out;
}

// P(W > x) <= 1 - E[gamma(x - W+, x - W)] with W = Z - Y ~ Laplace(mu), by
// quadrature of the density (mu / 2) e^{-mu |w|}. Shares nothing with the
// closed-form case formulas beyond gamma itself.
double bound_by_quadrature(const PolyExpParams& p, double x) {
  using boost::math::quadrature::gauss_kronrod;
  auto f = [&](double w) {
    return 0.5 * p.mu * std::exp(-p.mu * std::abs(w)) *
           gamma_function(p, x - positive_part(w), x - w);
  };
  const double edge = x + p.a;  // indicator switches off for w > x + a
  double s = 0.0;
  std::vector<double> cuts{-kInf, 0.0, edge};
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(kInf);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] > cuts[i]) s += gauss_kronrod<double, 61>::integrate(f, cuts[i], cuts[i + 1], 20, 1e-14);
  }
  return std::clamp(1.0 - s, 0.0, 1.0);
}

}  // namespace

TEST(PolyExp, DeterministicFitMatchesHighPrecision) {
  using mp = boost::multiprecision::cpp_bin_float_50;
  // e^{-2 theta} = 1 - theta for D/M with c = 2, mu = 1.
  mp lo = 0.5, hi = 0.99;
  for (int i = 0; i < 200; ++i) {
    mp mid = (lo + hi) / 2;
    (exp(-2 * mid) <= 1 - mid ? lo : hi) = mid;
  }
  const mp th = lo;
  const mp D = 1 - th;
  const mp C = th * (1 - th) * D;
  const mp m = 2 * exp(-2 * th);
  const mp B = C * (m - (1 - th)) / (1 - m);

  const auto p = fit_gim_mm(Distribution::deterministic(2.0), 1.0);
  EXPECT_NEAR(p.theta, th.convert_to<double>(), 1e-10);
  EXPECT_NEAR(p.D_coef, D.convert_to<double>(), 1e-10);
  EXPECT_NEAR(p.C, C.convert_to<double>(), 1e-10);
  EXPECT_NEAR(p.B, B.convert_to<double>(), 1e-10);
  EXPECT_NEAR(p.D_coef, 0.2032, 1e-4);
  EXPECT_NEAR(p.C, 0.0329, 1e-4);
}

TEST(PolyExp, ParameterInvariants) {
  for (const auto& m : figure_models()) {
    const auto p = fit_gim_mm(m.x, 1.0);
    EXPECT_NEAR(p.D_coef, (p.mu - p.theta) / p.mu, 1e-12) << m.name;
    EXPECT_NEAR(p.C, p.theta * (p.mu - p.theta) * p.D_coef / p.mu, 1e-12);
    EXPECT_GE(p.B, 0.0);
    EXPECT_GE(p.C, 0.0);
    EXPECT_GT(p.D_coef, 0.0);
    EXPECT_LT(p.D_coef, 1.0);
    for (double u = -positive_part(p.a); u <= 1000.0; u += 7.3) {
      for (double v = std::max(-p.a, u); v <= 1000.0; v += 11.1) {
        ASSERT_GE(polynomial_part(p, u, v), 0.0) << m.name << " u=" << u << " v=" << v;
      }
    }
  }
}

TEST(PolyExp, MeanXExpForPointMass) {
  const detail::GimMmTerms t(Distribution::deterministic(2.0), 1.0);
  EXPECT_NEAR(t.mean_x_exp(0.3), 2.0 * std::exp(-0.6), 1e-15);
}

TEST(PolyExp, BClampedToZero) {
  // Exponential arrivals: mu E[X e^{-theta X}] equals (mu - theta) / mu exactly.
  const auto p = fit_gim_mm(Distribution::exponential(0.5), 1.0);
  EXPECT_NEAR(p.B, 0.0, 1e-12);
  // Gamma with shape < 1 can push the clamp strictly negative.
  const auto x = Distribution::gamma(0.5, 0.25);
  const detail::GimMmTerms t(x, 1.0);
  if (t.mean_x_exp(t.theta()) <= (1.0 - t.theta())) EXPECT_EQ(t.B(), 0.0);
}

TEST(PolyExp, UnsupportedArrival) {
  try {
    fit_gim_mm(Distribution::very_light(1.0), 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unsupported_arrival);
  }
  EXPECT_THROW(fit_gim_mm(Distribution::deterministic(0.5), 1.0), Error);
}

TEST(PolyExp, A1ClosedFormsMatchQuadrature) {
  for (const auto& m : figure_models()) {
    const detail::GimMmTerms t(m.x, 1.0);
    for (double a : {-3.0, 0.0, 0.4, 1.3, 2.5}) {
      EXPECT_NEAR(t.A1(a), t.A1_by_quadrature(a), 1e-9) << m.name << " a=" << a;
    }
  }
}

TEST(PolyExp, ShiftSelection) {
  for (const auto& m : figure_models()) {
    const auto f = fit_gim_mm_detailed(m.x, 1.0);
    const detail::GimMmTerms t(m.x, 1.0);
    EXPECT_GE(f.a_nonneg, 0.0);
    EXPECT_LE(f.a_nonneg, f.a1 + 1e-12);
    EXPECT_NEAR(f.A_nonneg, std::max(t.A1(f.a_nonneg), t.A2(f.a_nonneg)), 1e-12);
    EXPECT_LE(f.a_nonpos, 0.0);
    EXPECT_NEAR(f.A_nonpos,
                std::max({t.A1(f.a_nonpos), t.A2(f.a_nonpos), t.A3(f.a_nonpos)}), 1e-12);
    EXPECT_DOUBLE_EQ(f.params.A, std::min(f.A_nonneg, f.A_nonpos));
    // No grid point of either branch beats the chosen objective.
    for (double a = 0.0; a <= f.a1; a += f.a1 / 50.0 + 1e-9) {
      EXPECT_GE(std::max(t.A1(a), t.A2(a)), f.A_nonneg - 1e-9) << m.name;
    }
    for (double a = -20.0 / t.theta(); a <= 0.0; a += 0.5 / t.theta()) {
      EXPECT_GE(std::max({t.A1(a), t.A2(a), t.A3(a)}), f.A_nonpos - 1e-9) << m.name;
    }
  }
}

TEST(PolyExp, KnownFits) {
  const auto p = fit_gim_mm(Distribution::deterministic(2.0), 1.0);
  EXPECT_NEAR(p.a, 1.6306, 1e-4);
  EXPECT_NEAR(p.A, 0.14155, 1e-5);
  const auto q = fit_gim_mm(Distribution::deterministic(1.0 / 0.95), 1.0);
  EXPECT_LT(q.a, 0.0);
}

TEST(PolyExp, BoundMatchesQuadratureOracle) {
  for (const auto& m : figure_models()) {
    const auto p = fit_gim_mm(m.x, 1.0);
    std::vector<double> xs{0.0, 0.3, 1.0, 2.5, 5.0, 10.0, 25.0};
    if (p.a < 0.0) {
      for (double f : {0.1, 0.5, 0.9, 0.999, 1.001}) xs.push_back(-p.a * f);
    }
    for (double x : xs) {
      EXPECT_NEAR(eval_bound(p, x), bound_by_quadrature(p, x), 1e-10) << m.name << " x=" << x;
    }
  }
}

TEST(PolyExp, CaseSelection) {
  const auto p = fit_gim_mm(Distribution::deterministic(2.0), 1.0);
  ASSERT_GE(p.a, 0.0);
  for (double x : {0.0, 1.0, 3.0}) EXPECT_EQ(eval_bound(p, x), std::clamp(bound_far(p, x), 0.0, 1.0));
  const auto q = fit_gim_mm(Distribution::deterministic(1.0 / 0.95), 1.0);
  ASSERT_LT(q.a, 0.0);
  EXPECT_EQ(eval_bound(q, -q.a / 2), std::clamp(bound_near(q, -q.a / 2), 0.0, 1.0));
  EXPECT_GE(branch_gap(q), 0.0);
  EXPECT_EQ(branch_gap(p), 0.0);
  EXPECT_THROW(eval_bound(p, -1.0), Error);
}

TEST(PolyExp, TailShape) {
  for (const auto& m : figure_models()) {
    const auto p = fit_gim_mm(m.x, 1.0);
    const double x0 = 10.0 / p.theta;
    double prev = eval_bound(p, x0);
    for (double x = x0; x < 60.0 / p.theta; x += 0.5 / p.theta) {
      const double v = eval_bound(p, x);
      EXPECT_LE(v, prev) << m.name << " x=" << x;
      EXPECT_GE(v, 0.0);
      prev = v;
    }
    // Polynomial correction to the slope between 100/theta and 120/theta is ln(1.2)/20.
    const double x1 = 100.0 / p.theta, x2 = 120.0 / p.theta;
    const double slope = (std::log(eval_bound(p, x1)) - std::log(eval_bound(p, x2))) / (x2 - x1);
    EXPECT_NEAR(slope / p.theta, 1.0, 0.015) << m.name;
    EXPECT_LT(eval_bound(p, 300.0 / p.theta), 1e-100);
  }
}

TEST(PolyExp, SojournBound) {
  const auto p = fit_gim_mm(Distribution::deterministic(2.0), 1.0);
  EXPECT_EQ(sojourn_bound(p, 0.0, 1000, RandomStream(1)).value, 1.0);
  EXPECT_LT(sojourn_bound(p, 60.0, 20000, RandomStream(2)).value, 1e-6);
  EXPECT_THROW(sojourn_bound(p, -1.0, 1000, RandomStream(1)), Error);

  // Against the simulated sojourn time of the same tandem.
  TandemSpec spec{Renewal{Distribution::deterministic(2.0)},
                  {Distribution::exponential(1.0), Distribution::exponential(1.0)}};
  SimConfig cfg;
  cfg.runs = 4000;
  cfg.path_len = 400;
  cfg.seed = 5;
  cfg.metric = Metric::sojourn;
  cfg.x_grid = {1.0, 2.0, 4.0, 6.0, 10.0};
  const auto sim = simulate(spec, cfg);
  for (const auto& pt : sim.points) {
    const auto b = sojourn_bound(p, pt.x, 20000, RandomStream(3));
    EXPECT_GE(b.value + 3.0 * b.std_error, pt.value - 3.0 * pt.std_error) << "x=" << pt.x;
    // Sojourn exceeds waiting, so its bound sits above the waiting bound.
    EXPECT_GE(b.value + 4.0 * b.std_error, eval_bound(p, pt.x)) << "x=" << pt.x;
    const auto o = sojourn_bound(p, pt.x, 20000, RandomStream(3), SojournParse::outer_max);
    EXPECT_GE(o.value + 3.0 * o.std_error, pt.value - 3.0 * pt.std_error) << "x=" << pt.x;
  }
}

TEST(PolyExp, SojournParseSwitch) {
  const auto p = fit_gim_mm(Distribution::deterministic(2.0), 1.0);
  const auto inner = sojourn_bound(p, 3.0, 5000, RandomStream(4), SojournParse::inner_max);
  const auto outer = sojourn_bound(p, 3.0, 5000, RandomStream(4), SojournParse::outer_max);
  EXPECT_NE(inner.value, outer.value);
}

TEST(PolyExp, KingmanAndRoss) {
  const auto x = Distribution::exponential(0.5);
  const auto y = Distribution::exponential(1.0);
  EXPECT_DOUBLE_EQ(kingman_bound(x, y, 0.0), 1.0);
  EXPECT_NEAR(kingman_bound(x, y, 2.0), std::exp(-1.0), 1e-10);
  EXPECT_NEAR(ross_prefactor(x, y), 0.5, 1e-10);
  for (double t : {0.0, 0.5, 1.0, 2.0, 5.0, 20.0}) {
    EXPECT_NEAR(ross_bound(x, y, t), 0.5 * std::exp(-0.5 * t), 1e-9);
    EXPECT_LE(ross_bound(x, y, t), kingman_bound(x, y, t));
  }
}

TEST(PolyExp, RossPrefactorClosedFormMatchesSearch) {
  const auto x = Distribution::deterministic(2.0);
  const auto y = Distribution::exponential(1.0);
  const double theta = solve_theta(x, y).theta;
  EXPECT_NEAR(ross_prefactor(x, y), std::exp(-2.0 * theta), 1e-10);
  EXPECT_NEAR(ross_prefactor(x, y), ross_prefactor_by_search(x, y), 1e-6);

  // Non-exponential service goes through the search; the prefactor stays in (0, 1].
  const auto g = Distribution::gamma(2.0, 3.0);
  const double pre = ross_prefactor(x, g);
  EXPECT_GT(pre, 0.0);
  EXPECT_LE(pre, 1.0);
  EXPECT_LE(ross_bound(x, g, 1.0), kingman_bound(x, g, 1.0));
}

TEST(PolyExp, RossPrefactorReachesOvershootLimit) {
  // Gamma(2, 3) residuals shrink towards Exponential(3), so the infimum sits at u -> infinity.
  const auto x = Distribution::deterministic(2.0);
  const auto g = Distribution::gamma(2.0, 3.0);
  const double theta = solve_theta(x, g).theta;
  const double far = cond_exp_moment(g, theta, 0, 200.0);
  EXPECT_NEAR(1.0 / ross_prefactor(x, g), 3.0 / (3.0 - theta), 1e-12);
  EXPECT_LT(3.0 / (3.0 - theta), far);
  EXPECT_NEAR(far, 3.0 / (3.0 - theta), 0.03 * far);

  TandemSpec spec{Renewal{x}, {g}};
  SimConfig cfg;
  cfg.runs = 20000;
  cfg.path_len = 200;
  cfg.x_grid = {0.0, 0.25, 0.5, 1.0};
  for (const auto& pt : simulate(spec, cfg).points) {
    EXPECT_GE(ross_bound(x, g, pt.x), pt.value - 3.0 * pt.std_error) << pt.x;
  }
}

TEST(PolyExp, SingleQueueBoundsDominateSimulation) {
  const auto x = Distribution::deterministic(1.5);
  const auto y = Distribution::exponential(1.0);
  TandemSpec spec{Renewal{x}, {y}};
  SimConfig cfg;
  cfg.runs = 4000;
  cfg.path_len = 500;
  cfg.x_grid = {0.0, 0.5, 1.0, 2.0, 4.0};
  for (const auto& pt : simulate(spec, cfg).points) {
    EXPECT_GE(ross_bound(x, y, pt.x), pt.value - 3.0 * pt.std_error);
    EXPECT_GE(kingman_bound(x, y, pt.x), pt.value - 3.0 * pt.std_error);
  }
}

TEST(PolyExp, ParamsJson) {
  const auto f = fit_gim_mm_detailed(Distribution::deterministic(2.0), 1.0);
  const nlohmann::json j = f;
  EXPECT_DOUBLE_EQ(j["params"]["D"].get<double>(), f.params.D_coef);
  EXPECT_DOUBLE_EQ(j["a1"].get<double>(), f.a1);
}
