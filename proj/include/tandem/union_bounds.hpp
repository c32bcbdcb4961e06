#pragma once

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "tandem/distributions.hpp"
#include "tandem/error.hpp"
#include "tandem/numeric.hpp"
#include "tandem/rates.hpp"

namespace tandem {

struct LdBoundResult {
  double theta_star;
  double beta_star;
  double value;
};

/// beta(theta) = E[e^{theta (Y - X)}] for Y ~ Exponential(mu).
inline double ld_beta(const Distribution& arrival, double mu, double theta) {
  return mu / (mu - theta) * laplace(arrival, theta);
}

/// Chernoff/union-bound prefactor of the two-queue tandem at a fixed theta.
inline double ld_prefactor(const Distribution& arrival, double mu, double theta) {
  const double beta = ld_beta(arrival, mu, theta);
  if (!(beta < 1.0)) return kInf;
  const double r = beta / (1.0 - beta);
  return r * (2.0 * mu - theta) / (2.0 * (mu - theta)) +
         r * r * mu * mu / ((mu - theta) * (mu + theta));
}

/// Tightest union bound on P(W > x) for the two-queue tandem with
/// Exponential(mu) services at both queues, optimizing theta per x.
inline LdBoundResult ld_bound(const Distribution& arrival, double mu, double x) {
  if (x < 0.0) throw Error(Errc::invalid_argument, "bound needs x >= 0");
  const double root = solve_theta(arrival, Distribution::exponential(mu)).theta;
  const double lo = root * 1e-9;
  const double hi = root * (1.0 - 1e-9);
  auto log_bound = [&](double t) {
    const double pre = ld_prefactor(arrival, mu, t);
    return std::isfinite(pre) ? std::log(pre) - t * x : kInf;
  };
  const Extremum best = minimize_scalar(log_bound, lo, hi, 400);
  if (!std::isfinite(best.value)) {
    throw Error(Errc::no_feasible_theta, "beta >= 1 on the whole search range");
  }
  return {best.x, ld_beta(arrival, mu, best.x), std::min(1.0, std::exp(best.value))};
}

inline void to_json(nlohmann::json& j, const LdBoundResult& r) {
  j = {{"theta_star", r.theta_star}, {"beta_star", r.beta_star}, {"value", r.value}};
}

}  // namespace tandem
