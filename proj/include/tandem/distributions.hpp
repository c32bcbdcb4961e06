#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <json.hpp>

#include "tandem/error.hpp"
#include "tandem/numeric.hpp"
#include "tandem/random.hpp"

namespace tandem {

// Laws for inter-arrival and service times. Parameters are rates (1/time)
// unless stated otherwise.

/// Point mass. A zero value is accepted so that "no second queue" (Z = 0) can
/// be expressed; every other parameter must be strictly positive.
struct Deterministic {
  double value;
  bool operator==(const Deterministic&) const = default;
};

struct Exponential {
  double rate;
  bool operator==(const Exponential&) const = default;
};

/// Shape/rate parameterisation: density beta^alpha x^(alpha-1) e^(-beta x) / Gamma(alpha).
struct Gamma {
  double shape;
  double rate;
  bool operator==(const Gamma&) const = default;
};

/// Density normalizer * e^(-rate x) / (1 + x^2) on x >= 0. Its MGF is finite
/// at the abscissa itself, which makes the decay rate equal the abscissa.
struct VeryLight {
  double rate;
  double normalizer;
  bool operator==(const VeryLight&) const = default;
};

enum class DistKind { deterministic, exponential, gamma, very_light };

namespace detail {

/// Integral over [lo, inf) of e^{(t - mu) x} / (1 + x^2), t <= mu.
inline double very_light_kernel(double mu, double t, double lo) {
  lo = positive_part(lo);
  if (t == mu && lo == 0.0) return std::numbers::pi / 2.0;
  if (t == mu) return std::numbers::pi / 2.0 - std::atan(lo);
  const double k = mu - t;
  auto f = [&](double x) { return std::exp(-k * x) / (1.0 + x * x); };
  return integrate(f, lo, kInf);
}

}  // namespace detail

class Distribution {
 public:
  using Law = std::variant<Deterministic, Exponential, Gamma, VeryLight>;

  static Distribution deterministic(double value) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
      throw Error(Errc::invalid_argument, "deterministic value must be >= 0");
    }
    return Distribution(Deterministic{value});
  }

  static Distribution exponential(double rate) {
    require_positive(rate, "exponential rate");
    return Distribution(Exponential{rate});
  }

  static Distribution gamma(double shape, double rate) {
    require_positive(shape, "gamma shape");
    require_positive(rate, "gamma rate");
    return Distribution(Gamma{shape, rate});
  }

  /// The normalizer is fixed here, once, by quadrature.
  static Distribution very_light(double rate) {
    require_positive(rate, "very-light rate");
    const double mass = detail::very_light_kernel(rate, 0.0, 0.0);
    return Distribution(VeryLight{rate, 1.0 / mass});
  }

  const Law& law() const noexcept { return law_; }
  DistKind kind() const noexcept { return static_cast<DistKind>(law_.index()); }

  template <class T>
  const T* get_if() const noexcept {
    return std::get_if<T>(&law_);
  }

  bool is_continuous() const noexcept {
    return kind() != DistKind::deterministic;
  }

  bool operator==(const Distribution&) const = default;

 private:
  explicit Distribution(Law law) : law_(law) {}

  static void require_positive(double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw Error(Errc::invalid_argument,
                  std::string(what) + " must be positive and finite");
    }
  }

  Law law_;
};

inline std::string describe(const Distribution& d) {
  return std::visit(
      [](const auto& law) -> std::string {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, Deterministic>) {
          return "Deterministic(" + std::to_string(law.value) + ")";
        } else if constexpr (std::is_same_v<T, Exponential>) {
          return "Exponential(" + std::to_string(law.rate) + ")";
        } else if constexpr (std::is_same_v<T, Gamma>) {
          return "Gamma(" + std::to_string(law.shape) + ", " +
                 std::to_string(law.rate) + ")";
        } else {
          return "VeryLight(" + std::to_string(law.rate) + ")";
        }
      },
      d.law());
}

/// P(Gamma(shape, rate) <= x).
inline double reg_incomplete_gamma(double x, double shape, double rate) {
  if (!(x > 0.0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(shape, rate * x);
}

/// Sup of {t : E[e^{tR}] < inf}; the MGF may or may not be finite at the
/// abscissa itself (it is for VeryLight).
inline double mgf_abscissa(const Distribution& d) {
  switch (d.kind()) {
    case DistKind::deterministic: return kInf;
    case DistKind::exponential: return d.get_if<Exponential>()->rate;
    case DistKind::gamma: return d.get_if<Gamma>()->rate;
    case DistKind::very_light: return d.get_if<VeryLight>()->rate;
  }
  return kInf;
}

inline double essinf(const Distribution& d) {
  if (const auto* p = d.get_if<Deterministic>()) return p->value;
  return 0.0;
}

inline double pdf(const Distribution& d, double x) {
  if (x < 0.0) return 0.0;
  switch (d.kind()) {
    case DistKind::deterministic:
      throw Error(Errc::unsupported, "point mass has no density");
    case DistKind::exponential: {
      const double r = d.get_if<Exponential>()->rate;
      return r * std::exp(-r * x);
    }
    case DistKind::gamma: {
      const auto& g = *d.get_if<Gamma>();
      if (x == 0.0) return g.shape == 1.0 ? g.rate : (g.shape < 1.0 ? kInf : 0.0);
      return std::exp(g.shape * std::log(g.rate) + (g.shape - 1.0) * std::log(x) -
                      g.rate * x - std::lgamma(g.shape));
    }
    case DistKind::very_light: {
      const auto& v = *d.get_if<VeryLight>();
      return v.normalizer * std::exp(-v.rate * x) / (1.0 + x * x);
    }
  }
  return 0.0;
}

/// log pdf for the laws with a density; -inf off the support.
inline double log_pdf(const Distribution& d, double x) {
  if (x < 0.0) return -kInf;
  if (const auto* g = d.get_if<Gamma>()) {
    if (x == 0.0) return std::log(pdf(d, x));
    return g->shape * std::log(g->rate) + (g->shape - 1.0) * std::log(x) - g->rate * x -
           std::lgamma(g->shape);
  }
  if (const auto* v = d.get_if<VeryLight>()) {
    return std::log(v->normalizer) - v->rate * x - std::log1p(x * x);
  }
  return std::log(pdf(d, x));
}

/// P(R > r); equals 1 for r < 0.
inline double tail(const Distribution& d, double r) {
  if (r < 0.0) return 1.0;
  switch (d.kind()) {
    case DistKind::deterministic: return r < d.get_if<Deterministic>()->value ? 1.0 : 0.0;
    case DistKind::exponential: return std::exp(-d.get_if<Exponential>()->rate * r);
    case DistKind::gamma: {
      const auto& g = *d.get_if<Gamma>();
      return r == 0.0 ? 1.0 : boost::math::gamma_q(g.shape, g.rate * r);
    }
    case DistKind::very_light: {
      const auto& v = *d.get_if<VeryLight>();
      return std::min(1.0, v.normalizer * detail::very_light_kernel(v.rate, 0.0, r));
    }
  }
  return 0.0;
}

/// Point beyond which the remaining probability mass is below `mass`.
inline double upper_quantile(const Distribution& d, double mass = 1e-17) {
  if (const auto* p = d.get_if<Deterministic>()) return p->value;
  double hi = 1.0;
  while (tail(d, hi) > mass && hi < 1e12) hi *= 2.0;
  return hi;
}

/// E[f(R)]. `breaks` marks points where f is not smooth.
template <class F>
double expect(const Distribution& d, F&& f, std::span<const double> breaks = {}) {
  if (const auto* p = d.get_if<Deterministic>()) return f(p->value);
  const double hi = upper_quantile(d);
  auto g = [&](double x) { return f(x) * pdf(d, x); };
  return integrate(g, 0.0, hi, breaks);
}

inline double mean(const Distribution& d) {
  return std::visit(
      [](const auto& law) -> double {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, Deterministic>) {
          return law.value;
        } else if constexpr (std::is_same_v<T, Exponential>) {
          return 1.0 / law.rate;
        } else if constexpr (std::is_same_v<T, Gamma>) {
          return law.shape / law.rate;
        } else {
          auto f = [&](double x) {
            return x * std::exp(-law.rate * x) / (1.0 + x * x);
          };
          return law.normalizer * integrate(f, 0.0, kInf);
        }
      },
      d.law());
}

/// E[e^{tR}], or +inf where it diverges.
inline double mgf(const Distribution& d, double t) {
  return std::visit(
      [t](const auto& law) -> double {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, Deterministic>) {
          return std::exp(t * law.value);
        } else if constexpr (std::is_same_v<T, Exponential>) {
          return t < law.rate ? law.rate / (law.rate - t) : kInf;
        } else if constexpr (std::is_same_v<T, Gamma>) {
          return t < law.rate ? std::pow(law.rate / (law.rate - t), law.shape)
                              : kInf;
        } else {
          if (t > law.rate) return kInf;
          return law.normalizer * detail::very_light_kernel(law.rate, t, 0.0);
        }
      },
      d.law());
}

/// E[e^{-theta R}], theta >= 0.
inline double laplace(const Distribution& d, double theta) {
  if (theta < 0.0) {
    throw Error(Errc::invalid_argument, "laplace transform needs theta >= 0");
  }
  return mgf(d, -theta);
}

/// E[(R - r)^i e^{theta (R - r)} | R > r].
inline double cond_exp_moment(const Distribution& d, double theta, int i,
                              double r) {
  if (i < 0) throw Error(Errc::invalid_argument, "moment order must be >= 0");
  const double tail_mass = tail(d, r);
  if (!(tail_mass > 0.0)) {
    throw Error(Errc::conditioning_on_null,
                "P(R > " + std::to_string(r) + ") = 0 for " + describe(d));
  }
  switch (d.kind()) {
    case DistKind::deterministic: {
      const double s = d.get_if<Deterministic>()->value - r;
      return std::pow(s, i) * std::exp(theta * s);
    }
    case DistKind::exponential: {
      const double mu = d.get_if<Exponential>()->rate;
      if (theta >= mu) return kInf;
      // E[R^k e^{theta R}] = mu k! / (mu - theta)^{k+1}
      auto raw = [&](int k) {
        return mu * std::tgamma(k + 1.0) / std::pow(mu - theta, k + 1);
      };
      if (r >= 0.0) return raw(i);
      // No conditioning left: shift by s = -r and expand binomially.
      const double s = -r;
      double sum = 0.0;
      for (int k = 0; k <= i; ++k) {
        const double binom = std::tgamma(i + 1.0) /
                             (std::tgamma(k + 1.0) * std::tgamma(i - k + 1.0));
        sum += binom * std::pow(s, i - k) * raw(k);
      }
      return std::exp(theta * s) * sum;
    }
    case DistKind::gamma:
    case DistKind::very_light: {
      const double abscissa = mgf_abscissa(d);
      if (theta > abscissa || (theta == abscissa && (d.kind() == DistKind::gamma || i > 0))) {
        return kInf;
      }
      const double start = positive_part(r);
      const double decay = abscissa - theta;
      // Integrate over s = R - start, conditional density pdf(start + s) / tail.
      auto f = [&](double s) {
        const double x = start + s;
        return std::pow(x - r, i) * std::exp(theta * (x - r) + log_pdf(d, x));
      };
      if (decay > 0.0) {
        const double cutoff = (40.0 + 4.0 * i + 2.0 * std::abs(std::log(tail_mass))) / decay +
                              (d.kind() == DistKind::gamma ? 4.0 * d.get_if<Gamma>()->shape / d.get_if<Gamma>()->rate : 0.0);
        const std::array<double, 3> breaks{cutoff / 64.0, cutoff / 8.0, cutoff / 2.0};
        return integrate(f, 0.0, cutoff, breaks) / tail_mass;
      }
      return integrate(f, 0.0, kInf) / tail_mass;
    }
  }
  return kInf;
}

/// One draw. Exponential uses inverse-CDF, Gamma the Boost shape/scale sampler.
inline double sample(const Distribution& d, RandomStream& rng) {
  switch (d.kind()) {
    case DistKind::deterministic: return d.get_if<Deterministic>()->value;
    case DistKind::exponential: return -std::log(rng.uniform01()) / d.get_if<Exponential>()->rate;
    case DistKind::gamma: {
      const auto& g = *d.get_if<Gamma>();
      boost::random::gamma_distribution<double> dist(g.shape, 1.0 / g.rate);
      return dist(rng);
    }
    case DistKind::very_light:
      throw Error(Errc::unsupported, "sampling the very-light law is not supported");
  }
  return 0.0;
}

inline void to_json(nlohmann::json& j, const Distribution& d) {
  std::visit(
      [&j](const auto& law) {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, Deterministic>) {
          j = {{"kind", "deterministic"}, {"value", law.value}};
        } else if constexpr (std::is_same_v<T, Exponential>) {
          j = {{"kind", "exponential"}, {"rate", law.rate}};
        } else if constexpr (std::is_same_v<T, Gamma>) {
          j = {{"kind", "gamma"}, {"shape", law.shape}, {"rate", law.rate}};
        } else {
          j = {{"kind", "verylight"}, {"rate", law.rate}};
        }
      },
      d.law());
}

inline Distribution distribution_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw Error(Errc::invalid_argument, "distribution needs a string \"kind\"");
  }
  auto number = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_number()) {
      throw Error(Errc::invalid_argument,
                  std::string("distribution field \"") + key + "\" missing");
    }
    return j[key].get<double>();
  };
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "deterministic") return Distribution::deterministic(number("value"));
  if (kind == "exponential") return Distribution::exponential(number("rate"));
  if (kind == "gamma") return Distribution::gamma(number("shape"), number("rate"));
  if (kind == "verylight") return Distribution::very_light(number("rate"));
  throw Error(Errc::invalid_argument, "unknown distribution kind \"" + kind + "\"");
}

}  // namespace tandem
