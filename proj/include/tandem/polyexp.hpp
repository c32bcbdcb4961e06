#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <json.hpp>

#include "tandem/distributions.hpp"
#include "tandem/error.hpp"
#include "tandem/numeric.hpp"
#include "tandem/random.hpp"
#include "tandem/rates.hpp"

namespace tandem {

/// Parameters of the candidate function
///   gamma(u, v) = 1{(u, v) in D_a} [1 - (A + B v + C u) e^{-theta v} - D e^{-theta u}]
/// for the GI/M/1 -> ./M/1 tandem with service rate mu at both queues, where
///   D_a = {u >= -a+, v >= max(-a, u)}.
struct PolyExpParams {
  double mu;
  double theta;
  double a;
  double A;
  double B;
  double C;
  double D_coef;
};

inline bool in_domain(const PolyExpParams& p, double u, double v) {
  return u >= -positive_part(p.a) && v >= std::max(-p.a, u);
}

inline double polynomial_part(const PolyExpParams& p, double u, double v) {
  return p.A + p.B * v + p.C * u;
}

inline double gamma_function(const PolyExpParams& p, double u, double v) {
  if (std::isinf(u) && std::isinf(v) && u > 0 && v > 0) return 1.0;
  if (!in_domain(p, u, v)) return 0.0;
  return 1.0 - polynomial_part(p, u, v) * std::exp(-p.theta * v) -
         p.D_coef * std::exp(-p.theta * u);
}

/// Everything the parameter search produced, kept for audit.
struct GimMmFit {
  PolyExpParams params;
  double a1;        // argmin of A2 over a >= 0
  double a_nonneg;  // optimal shift restricted to a >= 0
  double A_nonneg;
  double a_nonpos;  // optimal shift restricted to a <= 0
  double A_nonpos;
};

namespace detail {

/// The closed-form pieces of the GI/M/1 -> ./M/1 construction for one
/// arrival law. theta, B, C, D are fixed; A1, A2, A3 are functions of the
/// shift a.
class GimMmTerms {
 public:
  GimMmTerms(const Distribution& arrival, double mu)
      : x_(arrival), mu_(mu) {
    if (!(mu > 0.0)) throw Error(Errc::invalid_argument, "service rate must be positive");
    if (arrival.kind() == DistKind::very_light) {
      throw Error(Errc::unsupported_arrival,
                  "poly-exp fit supports deterministic, gamma and exponential arrivals");
    }
    theta_ = solve_theta(arrival, Distribution::exponential(mu)).theta;
    D_ = (mu - theta_) / mu;
    C_ = theta_ * (mu - theta_) * D_ / mu;
    const double m = mu * mean_x_exp(theta_);
    B_ = C_ * positive_part(m - (mu - theta_) / mu) / (1.0 - m);
    lambda_ = 1.0 / mean(arrival);
  }

  double theta() const { return theta_; }
  double B() const { return B_; }
  double C() const { return C_; }
  double D() const { return D_; }
  double mu() const { return mu_; }

  /// E[X e^{-t X}].
  double mean_x_exp(double t) const {
    if (const auto* d = x_.get_if<Deterministic>()) return d->value * std::exp(-t * d->value);
    const auto g = as_gamma();
    return g.shape * std::pow(g.rate, g.shape) / std::pow(g.rate + t, g.shape + 1.0);
  }

  double A1(double a) const {
    if (const auto* d = x_.get_if<Deterministic>()) {
      const double c = d->value;
      return a * B_ + B_ * (1.0 / (mu_ - theta_) - c) +
             C_ * (1.0 / mu_ + positive_part(positive_part(a) - c));
    }
    auto ratio = [&](double x) { return gamma_ratio(x); };
    return a * B_ + sup_over_shift(ratio, a);
  }

  /// Same quantity via direct quadrature of the defining expectations; valid
  /// for any arrival law and used as the independent route in tests.
  double A1_by_quadrature(double a) const {
    auto ratio = [&](double x) {
      const std::array<double, 1> brk{-x};
      auto w = [&](double s) { return s >= 0.0 ? std::exp(-mu_ * s) : 1.0; };
      const double den = expect(
          x_, [&](double X) { return std::exp(-theta_ * X) * w(X + x); }, brk);
      const double num_b = expect(
          x_,
          [&](double X) {
            return (1.0 / (mu_ - theta_) - X) * std::exp(-theta_ * X) * w(X + x);
          },
          brk);
      const double num_c = expect(
          x_,
          [&](double X) {
            const double s = X + x;
            return std::exp(-theta_ * X) *
                   (s >= 0.0 ? std::exp(-mu_ * s) / mu_ : 1.0 / mu_ - s);
          },
          brk);
      return (B_ * num_b + C_ * num_c) / den;
    };
    return a * B_ + sup_over_shift(ratio, a);
  }

  double A2(double a) const {
    return a * (B_ + C_) + std::exp(-theta_ * a) * (mu_ - theta_) / mu_ +
           (B_ + C_) / (mu_ - theta_) - D_;
  }

  /// Only meaningful for a <= 0.
  double A3(double a) const {
    const double hi = -a;
    const double lo = std::min(essinf(x_), hi);
    const double lead = D_ * std::exp(-theta_ * a);
    auto f = [&](double r) {
      if (r < 1e-12) return (lead * (mu_ - theta_) + C_) / mu_;
      return (-lead * std::expm1((theta_ - mu_) * r) + C_ * r) /
             (-std::expm1(-mu_ * r));
    };
    const double inner = hi > lo ? minimize_scalar(f, lo, hi, 200).value : f(hi);
    return B_ * (a + 1.0 / (mu_ - theta_)) - inner + C_ / lambda_ +
           std::exp(-theta_ * a) * (mu_ - theta_) / mu_;
  }

  double a1() const {
    return positive_part(std::log(theta_ * (mu_ - theta_) / (mu_ * (B_ + C_))) / theta_);
  }

 private:
  Gamma as_gamma() const {
    if (const auto* g = x_.get_if<Gamma>()) return *g;
    return Gamma{1.0, x_.get_if<Exponential>()->rate};
  }

  /// The objective inside the sup of A1, Gamma(alpha, beta) arrivals.
  double gamma_ratio(double x) const {
    const auto [al, be] = as_gamma();
    const double th = theta_;
    const double mu = mu_;
    const double k_far = std::pow(be / (be + th + mu), al);
    const double k_near = std::pow(be / (be + th), al);
    const double t1 = k_far * std::exp(-mu * x) *
                      (1.0 - reg_incomplete_gamma(-x, al, be + th + mu));
    const double t2 = k_near * reg_incomplete_gamma(-x, al, be + th);
    const double lead = B_ / (mu - th) + C_ / mu;
    const double num =
        lead * t1 + (lead - C_ * x) * t2 -
        (B_ + C_) * al * std::pow(be, al) / std::pow(be + th, al + 1.0) *
            reg_incomplete_gamma(-x, al + 1.0, be + th) -
        B_ * al * std::pow(be, al) / std::pow(be + th + mu, al + 1.0) *
            std::exp(-mu * x) * (1.0 - reg_incomplete_gamma(-x, al + 1.0, be + th + mu));
    return num / (t1 + t2);
  }

  /// sup over x >= -a+ of an objective that is constant on x >= 0.
  template <class F>
  static double sup_over_shift(F&& f, double a) {
    const double lo = -positive_part(a);
    if (lo == 0.0) return f(0.0);
    const auto steps = static_cast<std::size_t>(std::ceil(-lo / 0.05)) + 1;
    return maximize_scalar(f, lo, 0.0, std::clamp<std::size_t>(steps, 50, 2000)).value;
  }

  Distribution x_;
  double mu_;
  double theta_ = 0.0;
  double B_ = 0.0;
  double C_ = 0.0;
  double D_ = 0.0;
  double lambda_ = 0.0;
};

}  // namespace detail

/// Fits (theta, a, A, B, C, D) for GI/M/1 -> ./M/1 with equal service rate mu.
inline GimMmFit fit_gim_mm_detailed(const Distribution& arrival, double mu) {
  const detail::GimMmTerms t(arrival, mu);
  GimMmFit fit{};
  fit.a1 = t.a1();

  // a >= 0: A1 is non-decreasing and A2 non-increasing on [0, a1], so the
  // optimum is the last point where A1 <= A2.
  auto a1_below = [&](double a) { return t.A1(a) <= t.A2(a); };
  if (a1_below(fit.a1)) {
    fit.a_nonneg = fit.a1;
  } else if (!a1_below(0.0)) {
    fit.a_nonneg = 0.0;
  } else {
    fit.a_nonneg = bisect_boundary(a1_below, 0.0, fit.a1);
  }
  fit.A_nonneg = std::max(t.A1(fit.a_nonneg), t.A2(fit.a_nonneg));

  auto worst = [&](double a) { return std::max({t.A1(a), t.A2(a), t.A3(a)}); };
  const Extremum neg = minimize_scalar(worst, -20.0 / t.theta(), 0.0, 400);
  fit.a_nonpos = neg.x;
  fit.A_nonpos = neg.value;

  const bool use_nonneg = fit.A_nonneg <= fit.A_nonpos;
  fit.params = PolyExpParams{mu,
                             t.theta(),
                             use_nonneg ? fit.a_nonneg : fit.a_nonpos,
                             use_nonneg ? fit.A_nonneg : fit.A_nonpos,
                             t.B(),
                             t.C(),
                             t.D()};
  return fit;
}

inline PolyExpParams fit_gim_mm(const Distribution& arrival, double mu) {
  return fit_gim_mm_detailed(arrival, mu).params;
}

/// Unclamped bound on P(W > x) for x >= (-a)+.
inline double bound_far(const PolyExpParams& p, double x) {
  const double mu = p.mu, th = p.theta, a = p.a;
  const double e1 = std::exp(-th * x);
  const double e2 = std::exp(-mu * x + (th - mu) * a);
  const double s = mu * mu - th * th;
  const double lin = mu * (1.0 + (mu - th) * a) / (2.0 * (mu - th) * (mu - th));
  return 0.5 * std::exp(-mu * (x + a)) +
         p.D_coef * ((2.0 * mu - th) * e1 - mu * e2) / (2.0 * (mu - th)) +
         p.C * (x * mu * mu / s * e1 + lin * e2 - mu / (2.0 * (mu - th) * (mu - th)) * e1) +
         p.A * (e1 * mu * mu / s - e2 * mu / (2.0 * (mu - th))) +
         p.B * (mu * mu / s * x * e1 - 2.0 * mu * mu * th / (s * s) * e1 + lin * e2);
}

/// Unclamped bound on P(W > x) for 0 <= x < -a.
inline double bound_near(const PolyExpParams& p, double x) {
  const double mu = p.mu, th = p.theta, a = p.a;
  return 1.0 - 0.5 * std::exp(mu * (x + a)) +
         0.5 * p.D_coef * std::exp((mu - th) * x + mu * a) +
         mu / (2.0 * (mu + th)) * std::exp((mu + th) * a + mu * x) *
             (p.A + p.B * (1.0 / (mu + th) - a) + p.C * x);
}

/// Upper bound on P(W > x), clamped to [0, 1].
inline double eval_bound(const PolyExpParams& p, double x) {
  if (x < 0.0) throw Error(Errc::invalid_argument, "bound needs x >= 0");
  const double raw = x >= positive_part(-p.a) ? bound_far(p, x) : bound_near(p, x);
  return std::clamp(raw, 0.0, 1.0);
}

/// |far(-a) - near(-a)| when a < 0; zero otherwise. Reported, not enforced.
inline double branch_gap(const PolyExpParams& p) {
  if (p.a >= 0.0) return 0.0;
  return std::abs(bound_far(p, -p.a) - bound_near(p, -p.a));
}

struct Estimate {
  double value;
  double std_error;
};

/// How the sojourn-time argument "x - (Z1 + Z2 v Y)" is grouped.
enum class SojournParse {
  inner_max,  // x - (Z1 + max(Z2, Y)), the grouping implied by D = W + Z1 + Y
  outer_max,  // x - max(Z1 + Z2, Y)
};

/// Monte Carlo bound on P(D > x) for the sojourn time D = W + Z1 + Y.
inline Estimate sojourn_bound(const PolyExpParams& p, double x, std::size_t n_mc,
                              RandomStream rng,
                              SojournParse parse = SojournParse::inner_max) {
  if (x < 0.0) throw Error(Errc::invalid_argument, "bound needs x >= 0");
  const auto service = Distribution::exponential(p.mu);
  MeanAccumulator acc;
  for (std::size_t i = 0; i < n_mc; ++i) {
    const double z1 = sample(service, rng);
    const double z2 = sample(service, rng);
    const double y = sample(service, rng);
    double g = 0.0;
    if (z1 + y < x) {
      const double first = parse == SojournParse::inner_max ? z1 + std::max(z2, y)
                                                            : std::max(z1 + z2, y);
      g = gamma_function(p, x - first, x - (z1 + z2));
    }
    acc.add(g);
  }
  return {std::clamp(1.0 - acc.mean(), 0.0, 1.0), acc.stderr_of_mean()};
}

inline double kingman_bound(const Distribution& arrival, const Distribution& service,
                            double x) {
  if (x < 0.0) throw Error(Errc::invalid_argument, "bound needs x >= 0");
  return std::exp(-solve_theta(arrival, service).theta * x);
}

namespace detail {

/// E[e^{theta (U - u)} | U > u] with U = Y - X, computed by quadrature over X.
inline double overshoot_moment(const Distribution& arrival, const Distribution& service,
                               double theta, double u) {
  const std::array<double, 1> brk{-u};
  const double mass = expect(arrival, [&](double x) { return tail(service, x + u); }, brk);
  if (!(mass > 0.0)) return kInf;
  const double weighted = expect(
      arrival,
      [&](double x) {
        const double t = tail(service, x + u);
        return t > 0.0 ? t * cond_exp_moment(service, theta, 0, x + u) : 0.0;
      },
      brk);
  return weighted / mass;
}

inline double increment_tail(const Distribution& arrival, const Distribution& service,
                             double u) {
  const std::array<double, 1> brk{-u};
  return expect(arrival, [&](double x) { return tail(service, x + u); }, brk);
}

/// Limit of the overshoot moment as u -> infinity. Gamma and very-light
/// residuals converge to Exponential(rate); bounded services have no limit.
inline double overshoot_limit(const Distribution& service, double theta) {
  double rate = kInf;
  if (const auto* g = service.get_if<Gamma>()) rate = g->rate;
  if (const auto* v = service.get_if<VeryLight>()) rate = v->rate;
  if (const auto* e = service.get_if<Exponential>()) rate = e->rate;
  return std::isfinite(rate) && theta < rate ? rate / (rate - theta) : kInf;
}

}  // namespace detail

/// 1 / inf_{u >= 0} E[e^{theta (U - u)} | U > u] by grid + refinement over the
/// bulk of U, together with the limit u -> infinity.
inline double ross_prefactor_by_search(const Distribution& arrival,
                                       const Distribution& service) {
  const double theta = solve_theta(arrival, service).theta;
  double u_max = 1.0;
  while (detail::increment_tail(arrival, service, u_max) > 1e-10 && u_max < 1e6) {
    u_max *= 2.0;
  }
  auto f = [&](double u) { return detail::overshoot_moment(arrival, service, theta, u); };
  const double bulk = minimize_scalar(f, 0.0, u_max, 200).value;
  return 1.0 / std::min(bulk, detail::overshoot_limit(service, theta));
}

/// The waiting-time prefactor; exponential services make the overshoot
/// memoryless, so the infimum is attained everywhere.
inline double ross_prefactor(const Distribution& arrival, const Distribution& service) {
  if (const auto* e = service.get_if<Exponential>()) {
    const double theta = solve_theta(arrival, service).theta;
    return (e->rate - theta) / e->rate;
  }
  return ross_prefactor_by_search(arrival, service);
}

inline double ross_bound(const Distribution& arrival, const Distribution& service,
                         double x) {
  if (x < 0.0) throw Error(Errc::invalid_argument, "bound needs x >= 0");
  const double theta = solve_theta(arrival, service).theta;
  return ross_prefactor(arrival, service) * std::exp(-theta * x);
}

inline void to_json(nlohmann::json& j, const PolyExpParams& p) {
  j = {{"mu", p.mu}, {"theta", p.theta}, {"a", p.a},      {"A", p.A},
       {"B", p.B},   {"C", p.C},         {"D", p.D_coef}};
}

inline void to_json(nlohmann::json& j, const GimMmFit& f) {
  j = {{"params", f.params},     {"a1", f.a1},
       {"a_nonneg", f.a_nonneg}, {"A_nonneg", f.A_nonneg},
       {"a_nonpos", f.a_nonpos}, {"A_nonpos", f.A_nonpos}};
}

}  // namespace tandem
