#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tandem/distributions.hpp"
#include "tandem/error.hpp"
#include "tandem/numeric.hpp"

namespace tandem {

/// Tolerance under which E[e^{theta V}] counts as equal to one.
inline constexpr double kIndicatorTolerance = 1e-8;

/// E[e^{t (Y - X)}] for t >= 0 with X, Y independent.
inline double increment_mgf(const Distribution& arrival,
                            const Distribution& service, double t) {
  const double up = mgf(service, t);
  if (std::isinf(up)) return kInf;
  return up * laplace(arrival, t);
}

inline void require_stable(const Distribution& arrival,
                           const Distribution& service) {
  const double ma = mean(arrival);
  const double ms = mean(service);
  if (!(ma > ms)) {
    throw Error(Errc::unstable, "mean inter-arrival " + std::to_string(ma) +
                                    " <= mean service " + std::to_string(ms));
  }
}

struct DecayReport {
  double theta_plus;
  double theta;
  /// E[e^{theta_plus U}] < 1: the decay rate is pinned at the abscissa.
  bool subunit_at_theta_plus;
};

/// Decay rate of the single-queue waiting time with inter-arrivals X and
/// services Y: the root of E[e^{theta (Y - X)}] = 1, or the MGF abscissa when
/// the MGF stays below one there.
inline DecayReport solve_theta(const Distribution& arrival,
                               const Distribution& service) {
  require_stable(arrival, service);
  auto below_one = [&](double t) {
    return increment_mgf(arrival, service, t) <= 1.0;
  };

  const double theta_plus = mgf_abscissa(service);
  if (std::isfinite(theta_plus)) {
    if (increment_mgf(arrival, service, theta_plus) < 1.0) {
      return {theta_plus, theta_plus, true};
    }
    const double mid = 0.5 * theta_plus;
    const double theta = below_one(mid) ? bisect_boundary(below_one, mid, theta_plus)
                                        : bisect_boundary(below_one, 0.0, mid);
    return {theta_plus, theta, false};
  }

  double lo = 0.0;
  double hi = 1e-3;
  while (below_one(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw Error(Errc::invalid_argument, "no finite decay rate");
  }
  return {theta_plus, bisect_boundary(below_one, lo, hi), false};
}

struct CascadeReport {
  std::vector<double> thetas;
  std::vector<int> indicators;
  std::vector<int> degrees;
};

/// Per-prefix decay rates of an M-queue tandem and the predicted polynomial
/// degree of the bound at each stage.
inline CascadeReport theta_cascade(const Distribution& arrival,
                                   std::span<const Distribution> services) {
  if (services.empty()) {
    throw Error(Errc::invalid_argument, "cascade needs at least one queue");
  }
  CascadeReport out;
  double running = kInf;
  for (const auto& s : services) {
    running = std::min(running, solve_theta(arrival, s).theta);
    out.thetas.push_back(running);
  }
  for (std::size_t i = 0; i < services.size(); ++i) {
    const double m = increment_mgf(arrival, services[i], out.thetas[i]);
    out.indicators.push_back(std::abs(m - 1.0) < kIndicatorTolerance ? 1 : 0);
  }
  out.degrees.push_back(0);
  for (std::size_t j = 1; j < services.size(); ++j) {
    out.degrees.push_back(out.degrees.back() + out.indicators[j]);
  }
  return out;
}

inline void to_json(nlohmann::json& j, const DecayReport& r) {
  j = {{"theta_plus", std::isinf(r.theta_plus) ? nlohmann::json("inf")
                                               : nlohmann::json(r.theta_plus)},
       {"theta", r.theta},
       {"subunit_at_theta_plus", r.subunit_at_theta_plus}};
}

inline void to_json(nlohmann::json& j, const CascadeReport& r) {
  j = {{"thetas", r.thetas}, {"indicators", r.indicators}, {"degrees", r.degrees}};
}

}  // namespace tandem
