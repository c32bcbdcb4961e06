#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tandem/curve.hpp"
#include "tandem/distributions.hpp"
#include "tandem/error.hpp"
#include "tandem/numeric.hpp"
#include "tandem/polyexp.hpp"
#include "tandem/random.hpp"
#include "tandem/rates.hpp"

namespace tandem {

struct GridPoint {
  double u;
  double v;
};

struct CheckDetail {
  std::vector<double> point;
  double lhs;
  double rhs;
  double std_error;
  bool vacuous;
  bool pass;
};

/// Outcome of one check over a grid. A point violates when rhs exceeds lhs by
/// more than its allowance; worst_violation is the largest excess (<= 0 when
/// every point passes).
struct VerificationReport {
  std::string check_name;
  double tolerance = 0.0;
  std::size_t pass_count = 0;
  std::size_t fail_count = 0;
  double worst_violation = -kInf;
  std::vector<CheckDetail> details;

  void record(std::vector<double> point, double lhs, double rhs, double std_error,
              double allowance, bool vacuous = false) {
    const double excess = vacuous ? -kInf : rhs - lhs - allowance;
    const bool ok = vacuous || excess <= 0.0;
    worst_violation = std::max(worst_violation, excess);
    (ok ? pass_count : fail_count) += 1;
    details.push_back({std::move(point), lhs, rhs, std_error, vacuous, ok});
  }

  std::size_t size() const { return pass_count + fail_count; }
  double pass_fraction() const {
    return size() ? static_cast<double>(pass_count) / static_cast<double>(size()) : 1.0;
  }
  bool passed(double min_fraction = 1.0) const { return pass_fraction() >= min_fraction; }
};

// ---------------------------------------------------------------------------
// Random walks behind psi(u, v) = P(T1 <= u, T2 <= v)

struct WalkMaxima {
  double t1;
  double t2;
  double truncation;  // bound on P(either maximum still grows beyond the horizon)
};

namespace detail {

inline double walk_decay_rate(const Distribution& x, const Distribution& y,
                              const Distribution& z) {
  double rate = solve_theta(x, y).theta;
  if (mean(z) > 0.0 || z.kind() != DistKind::deterministic) {
    rate = std::min(rate, solve_theta(x, z).theta);
  }
  return rate;
}

/// Smallest gap g with (1 + theta g) e^{-theta g} <= eps.
inline double safe_gap(double theta, double eps = 1e-9) {
  auto big = [&](double g) { return (1.0 + theta * g) * std::exp(-theta * g) > eps; };
  double hi = 1.0 / theta;
  while (big(hi)) hi *= 2.0;
  return bisect_boundary(big, 0.0, hi) + 1e-12;
}

}  // namespace detail

/// T1 = max_i U_1 + ... + U_i and T2 = max_{i<j} V_1 + ... + V_i + U_{i+1} + ... + U_j
/// over at most `horizon` increments, with U = Y - X and V = Z - X sharing X.
/// Stops early once neither maximum can grow by `gap` except with
/// probability below the Kingman-type tail.
inline WalkMaxima sample_walk_maxima(const Distribution& x, const Distribution& y,
                                     const Distribution& z, std::size_t horizon,
                                     double theta, double gap, RandomStream& rng) {
  double su = 0.0;
  double sv = 0.0;
  double t1 = -kInf;
  double t2 = -kInf;
  double best_switch = -kInf;
  double remaining_gap = 0.0;
  for (std::size_t k = 1; k <= horizon; ++k) {
    const double xk = sample(x, rng);
    const double u = sample(y, rng) - xk;
    const double v = sample(z, rng) - xk;
    if (k > 1) t2 = std::max(t2, best_switch + su + u);
    su += u;
    sv += v;
    t1 = std::max(t1, su);
    best_switch = std::max(best_switch, sv - su);
    const double base2 = std::max({su, best_switch + su, sv});
    remaining_gap = std::min(t1 - su, t2 - base2);
    if (k > 1 && remaining_gap >= gap) return {t1, t2, 0.0};
  }
  const double g = positive_part(remaining_gap);
  return {t1, t2, std::min(1.0, (1.0 + theta * g) * std::exp(-theta * g))};
}

struct PsiEstimate {
  double value;
  double std_error;
  double truncation_bias;
};

inline PsiEstimate estimate_psi(const Distribution& x, const Distribution& y,
                                const Distribution& z, double u, double v,
                                std::size_t horizon, std::size_t n_mc, RandomStream rng) {
  if (horizon < 100) throw Error(Errc::invalid_argument, "horizon must be at least 100");
  const double theta = detail::walk_decay_rate(x, y, z);
  const double gap = detail::safe_gap(theta);
  MeanAccumulator hit;
  MeanAccumulator trunc;
  for (std::size_t i = 0; i < n_mc; ++i) {
    auto path_rng = rng.split(i);
    const auto w = sample_walk_maxima(x, y, z, horizon, theta, gap, path_rng);
    hit.add(w.t1 <= u && w.t2 <= v ? 1.0 : 0.0);
    trunc.add(w.truncation);
  }
  return {hit.mean(), hit.stderr_of_mean(), trunc.mean()};
}

/// Both sides of psi(u, v) = E[1{u >= U} psi((u - U) ^ (v - V), v - V)].
/// Each path's (T1, T2) feeds the left side directly and, paired with a fresh
/// independent (U, V), the right side, so the two estimates share noise.
inline VerificationReport check_fixed_point(const Distribution& x, const Distribution& y,
                                            const Distribution& z,
                                            std::span<const GridPoint> grid, std::size_t n_mc,
                                            std::size_t horizon, RandomStream rng,
                                            double k_sigma = 4.0) {
  if (horizon < 100) throw Error(Errc::invalid_argument, "horizon must be at least 100");
  const double theta = detail::walk_decay_rate(x, y, z);
  const double gap = detail::safe_gap(theta);

  struct Draw {
    double t1, t2, u, v;
  };
  std::vector<Draw> draws(n_mc);
  for (std::size_t i = 0; i < n_mc; ++i) {
    auto path_rng = rng.split(2 * i);
    auto step_rng = rng.split(2 * i + 1);
    const auto w = sample_walk_maxima(x, y, z, horizon, theta, gap, path_rng);
    const double xs = sample(x, step_rng);
    draws[i] = {w.t1, w.t2, sample(y, step_rng) - xs, sample(z, step_rng) - xs};
  }

  VerificationReport rep{"fixed-point", k_sigma};
  for (const auto& p : grid) {
    MeanAccumulator l, r, diff;
    for (const auto& d : draws) {
      const double lhs = d.t1 <= p.u && d.t2 <= p.v ? 1.0 : 0.0;
      const bool step_ok = d.u <= p.u;
      const double rhs = step_ok && d.t1 <= std::min(p.u - d.u, p.v - d.v) && d.t2 <= p.v - d.v
                             ? 1.0
                             : 0.0;
      l.add(lhs);
      r.add(rhs);
      diff.add(lhs - rhs);
    }
    const double se = diff.stderr_of_mean();
    // Two-sided: excess is |lhs - rhs| beyond the allowance.
    const double gap_lr = std::abs(l.mean() - r.mean());
    rep.record({p.u, p.v}, 0.0, gap_lr, se, k_sigma * se + 1e-12);
    rep.details.back().lhs = l.mean();
    rep.details.back().rhs = r.mean();
  }
  return rep;
}

/// Monte Carlo check of E[1{u >= U} g((u - U) ^ (v - V), v - V)] >= g(u, v) at
/// grid points where g > 0; elsewhere the requirement is vacuous.
inline VerificationReport check_gamma_inequality(
    const std::function<double(double, double)>& g, const Distribution& x,
    const Distribution& y, const Distribution& z, std::span<const GridPoint> grid,
    std::size_t n_mc, RandomStream rng, double k_sigma = 4.0) {
  std::vector<std::pair<double, double>> steps(n_mc);
  for (std::size_t i = 0; i < n_mc; ++i) {
    const double xs = sample(x, rng);
    steps[i] = {sample(y, rng) - xs, sample(z, rng) - xs};
  }
  VerificationReport rep{"gamma-inequality", k_sigma};
  for (const auto& p : grid) {
    const double target = g(p.u, p.v);
    if (!(target > 0.0)) {
      rep.record({p.u, p.v}, 0.0, target, 0.0, 0.0, true);
      continue;
    }
    MeanAccumulator acc;
    for (const auto& [u, v] : steps) {
      acc.add(u <= p.u ? g(std::min(p.u - u, p.v - v), p.v - v) : 0.0);
    }
    const double se = acc.stderr_of_mean();
    rep.record({p.u, p.v}, acc.mean(), target, se, k_sigma * se + 1e-12);
  }
  return rep;
}

inline VerificationReport check_gamma_inequality(const PolyExpParams& params,
                                                 const Distribution& x,
                                                 std::span<const GridPoint> grid,
                                                 std::size_t n_mc, RandomStream rng,
                                                 double k_sigma = 4.0) {
  const auto service = Distribution::exponential(params.mu);
  auto g = [&](double u, double v) { return gamma_function(params, u, v); };
  return check_gamma_inequality(g, x, service, service, grid, n_mc, rng, k_sigma);
}

/// nu x nv grid inside D_a: u from -a+ in steps of `step`, v from max(u, -a).
inline std::vector<GridPoint> domain_grid(const PolyExpParams& p, std::size_t nu,
                                          std::size_t nv, double step) {
  std::vector<GridPoint> out;
  for (std::size_t i = 0; i < nu; ++i) {
    const double u = -positive_part(p.a) + step * static_cast<double>(i);
    for (std::size_t j = 0; j < nv; ++j) {
      out.push_back({u, std::max(u, -p.a) + step * static_cast<double>(j)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// The eight sufficient inequalities for Y, Z ~ Exponential(mu)

namespace detail {

struct EightTerms {
  const PolyExpParams& p;
  const Distribution& x;
  double m0;  // K_0 = mu / (mu - theta)
  double m1;  // K_1 = mu / (mu - theta)^2

  double ex(const std::function<double(double)>& f, std::initializer_list<double> brk) const {
    const std::vector<double> b(brk);
    return expect(x, f, b);
  }

  /// P(Y > X + u | X) for exponential Y.
  double w(double xv, double u) const {
    const double t = xv + u;
    return t >= 0.0 ? std::exp(-p.mu * t) : 1.0;
  }

  std::pair<double, double> ineq1(double u, double v) const {
    const double th = p.theta, mu = p.mu;
    const double prob = ex([&](double xv) { return w(xv, u); }, {-u});
    const double e0 = ex([&](double xv) { return std::exp(-th * xv) * w(xv, u); }, {-u});
    const double e1 = ex([&](double xv) { return xv * std::exp(-th * xv) * w(xv, u); }, {-u});
    const double g = ex(
        [&](double xv) {
          const double t = xv + u;
          return std::exp(-th * xv) *
                 (t >= 0.0 ? (u + 1.0 / mu) * std::exp(-mu * t) : 1.0 / mu - xv);
        },
        {-u});
    const double lhs = p.A * m0 * e0 + p.B * (v * m0 * e0 - m1 * e0 + m0 * e1) +
                       p.C * (u * m0 * e0 - m0 * g);
    return {lhs / prob, 0.0};
  }

  std::pair<double, double> ineq2() const {
    const double l0 = laplace(x, p.theta);
    const double l1 = ex([&](double xv) { return xv * std::exp(-p.theta * xv); }, {});
    return {p.B * (m1 * l0 - m0 * l1) + p.C * m0 * (l0 / p.mu - l1), 0.0};
  }

  std::pair<double, double> ineq3() const {
    return {std::exp(p.theta * p.a) * ((p.A + p.D_coef) * m0 - (p.B + p.C) * (p.a * m0 + m1)),
            1.0};
  }

  std::pair<double, double> ineq4() const {
    return {p.C * m1 + p.D_coef * (1.0 - m0), 0.0};
  }

  std::pair<double, double> ineq5(double u) const {
    const double mass = ex(
        [&](double xv) { return xv + u >= 0.0 ? std::exp(-p.mu * (xv + u)) : 0.0; }, {-u});
    return {p.D_coef * m0 * mass, mass};
  }

  /// Empty conditioning event when X >= -u almost surely.
  std::optional<std::pair<double, double>> ineq7(double u) const {
    const double mass = ex([&](double xv) { return xv + u < 0.0 ? 1.0 : 0.0; }, {-u});
    if (!(mass > 0.0)) return std::nullopt;
    const double num = ex(
        [&](double xv) { return xv + u < 0.0 ? std::exp(-p.theta * (xv + u)) : 0.0; }, {-u});
    return std::pair{p.D_coef * m0 * num / mass, 1.0};
  }

  /// Only reached for a < 0.
  std::pair<double, double> ineq8(double u, double v) const {
    const double mu = p.mu, th = p.theta, a = p.a;
    auto lhs_rhs = [&](double xv, bool want_lhs) {
      const double r = v + a + xv;
      const double s1 = u + xv;
      const double s0 = positive_part(u + xv + a);
      if (!(s1 > s0)) return 0.0;
      const double ez = std::exp(-mu * r);
      const double pr = std::exp(-mu * s0) - std::exp(-mu * s1);
      if (!want_lhs) return ez * pr;
      const double i1 = (s1 - s0) * std::exp(-mu * s0) - pr / mu;
      const double i2 = mu * std::exp(-th * s1) *
                        (std::exp(-(mu - th) * s0) - std::exp(-(mu - th) * s1)) / (mu - th);
      const double ea = std::exp(th * a);
      return ez * (p.A * ea * m0 * pr - p.B * ea * (m1 + a * m0) * pr + p.C * ea * m0 * i1 +
                   p.D_coef * i2);
    };
    const double lhs = ex([&](double xv) { return lhs_rhs(xv, true); }, {-u, -u - a});
    const double rhs = ex([&](double xv) { return lhs_rhs(xv, false); }, {-u, -u - a});
    return {lhs, rhs};
  }
};

}  // namespace detail

inline constexpr double kInequalityTolerance = 1e-9;

/// Evaluates the eight sufficient inequalities at every grid point; returns one
/// report per inequality, named "ineq1" .. "ineq8".
inline std::vector<VerificationReport> check_eight_inequalities(
    const PolyExpParams& p, const Distribution& x, std::span<const GridPoint> grid) {
  for (const auto& g : grid) {
    if (!(g.u >= -positive_part(p.a) && g.v >= -p.a && g.v >= g.u)) {
      throw Error(Errc::invalid_argument, "grid point outside the fitted domain");
    }
  }
  const double m0 = p.mu / (p.mu - p.theta);
  const detail::EightTerms t{p, x, m0, m0 / (p.mu - p.theta)};

  std::vector<VerificationReport> reps;
  for (int i = 1; i <= 8; ++i) {
    reps.push_back(VerificationReport{"ineq" + std::to_string(i), kInequalityTolerance});
  }
  auto put = [&](int i, const GridPoint& g, std::pair<double, double> lr) {
    const double allow = kInequalityTolerance * std::max(1.0, std::abs(lr.second));
    reps[i - 1].record({g.u, g.v}, lr.first, lr.second, 0.0, allow);
  };
  auto vacuous = [&](int i, const GridPoint& g) {
    reps[i - 1].record({g.u, g.v}, 0.0, 0.0, 0.0, 0.0, true);
  };

  const auto two = t.ineq2();
  const auto three = t.ineq3();
  const auto four = t.ineq4();
  for (const auto& g : grid) {
    put(1, g, t.ineq1(g.u, g.v));
    put(2, g, two);
    put(3, g, three);
    put(4, g, four);
    put(5, g, t.ineq5(g.u));
    vacuous(6, g);  // P(Y = 0) = 0 for exponential Y
    if (const auto seven = t.ineq7(g.u)) {
      put(7, g, *seven);
    } else {
      vacuous(7, g);
    }
    if (p.a >= 0.0) {
      vacuous(8, g);
    } else {
      put(8, g, t.ineq8(g.u, g.v));
    }
  }
  return reps;
}

/// Pass iff bound >= sim - k_sigma * stderr at every shared grid point.
inline VerificationReport check_dominance(const CcdfCurve& bound, const CcdfCurve& sim,
                                          double k_sigma) {
  if (bound.points.size() != sim.points.size()) {
    throw Error(Errc::grid_mismatch, "curves have different grid sizes");
  }
  VerificationReport rep{std::string("dominance:") + to_string(bound.kind), k_sigma};
  for (std::size_t i = 0; i < bound.points.size(); ++i) {
    const auto& b = bound.points[i];
    const auto& s = sim.points[i];
    if (b.x != s.x) throw Error(Errc::grid_mismatch, "curves have different x grids");
    rep.record({b.x}, b.value, s.value, s.std_error, k_sigma * s.std_error);
  }
  return rep;
}

inline void to_json(nlohmann::json& j, const VerificationReport& r) {
  auto details = nlohmann::json::array();
  for (const auto& d : r.details) {
    details.push_back({{"point", d.point},
                       {"lhs", d.lhs},
                       {"rhs", d.rhs},
                       {"stderr", d.std_error},
                       {"vacuous", d.vacuous},
                       {"pass", d.pass}});
  }
  j = {{"check_name", r.check_name},
       {"tolerance", r.tolerance},
       {"pass_count", r.pass_count},
       {"fail_count", r.fail_count},
       {"worst_violation", std::isfinite(r.worst_violation) ? nlohmann::json(r.worst_violation)
                                                            : nlohmann::json(nullptr)},
       {"details", details}};
}

/// One fixed-width line per report.
inline void write_summary(std::ostream& os, std::span<const VerificationReport> reports) {
  char line[160];
  std::snprintf(line, sizeof line, "%-22s %6s %6s %14s  %s\n", "check", "pass", "fail",
                "worst", "status");
  os << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-22s %6zu %6zu %14.6e  %s\n", r.check_name.c_str(),
                  r.pass_count, r.fail_count,
                  std::isfinite(r.worst_violation) ? r.worst_violation : 0.0,
                  r.fail_count == 0 ? "PASS" : "FAIL");
    os << line;
  }
}

}  // namespace tandem
