#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tandem/curve.hpp"
#include "tandem/distributions.hpp"
#include "tandem/error.hpp"
#include "tandem/numeric.hpp"
#include "tandem/random.hpp"

namespace tandem {

struct Renewal {
  Distribution dist;
};

/// Inter-arrivals alternate between two laws, starting with a fair coin.
struct Alternating {
  Distribution dist1;
  Distribution dist2;
};

using ArrivalProcess = std::variant<Renewal, Alternating>;

/// independent: fresh service draws at every queue.
/// packet: one service time per job, reused at every queue.
enum class ServiceMode { independent, packet };

inline const char* to_string(ServiceMode m) {
  return m == ServiceMode::independent ? "independent" : "packet";
}

struct TandemSpec {
  ArrivalProcess arrivals;
  std::vector<Distribution> services;
  ServiceMode mode = ServiceMode::independent;

  std::size_t queues() const { return services.size(); }

  double mean_interarrival() const {
    if (const auto* r = std::get_if<Renewal>(&arrivals)) return mean(r->dist);
    const auto& alt = std::get<Alternating>(arrivals);
    return 0.5 * (mean(alt.dist1) + mean(alt.dist2));
  }

  void validate() const {
    if (services.empty()) throw Error(Errc::invalid_argument, "tandem needs at least one queue");
    if (mode == ServiceMode::packet) {
      for (const auto& s : services) {
        if (!(s == services.front())) {
          throw Error(Errc::invalid_argument, "packet mode needs one shared service law");
        }
      }
    }
    double worst = 0.0;
    for (const auto& s : services) worst = std::max(worst, mean(s));
    if (!(mean_interarrival() > worst)) {
      throw Error(Errc::unstable, "mean inter-arrival does not exceed the largest mean service");
    }
  }
};

enum class Metric { waiting, sojourn };

struct SimConfig {
  std::size_t runs = 10000;
  std::size_t path_len = 10000;
  std::uint64_t seed = 1;
  std::vector<double> x_grid;
  Metric metric = Metric::waiting;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate(std::size_t queues) const {
    if (runs < 100) throw Error(Errc::invalid_argument, "runs must be at least 100");
    if (path_len < std::max<std::size_t>(queues, 1)) {
      throw Error(Errc::invalid_argument, "path_len must be at least the number of queues");
    }
    if (x_grid.empty()) throw Error(Errc::invalid_argument, "x_grid is empty");
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
      if (!(x_grid[i] >= 0.0) || (i > 0 && !(x_grid[i] > x_grid[i - 1]))) {
        throw Error(Errc::invalid_argument, "x_grid must be nonnegative and increasing");
      }
    }
  }
};

using ServiceMatrix = std::vector<std::vector<double>>;

namespace detail {

inline std::size_t check_dimensions(std::span<const double> inter_arrivals,
                                    const ServiceMatrix& services) {
  if (services.empty() || services.front().empty()) {
    throw Error(Errc::dimension_mismatch, "service matrix is empty");
  }
  const std::size_t n = services.front().size();
  for (const auto& row : services) {
    if (row.size() != n) throw Error(Errc::dimension_mismatch, "ragged service matrix");
  }
  if (inter_arrivals.size() + 1 != n) {
    throw Error(Errc::dimension_mismatch, "need one inter-arrival fewer than jobs");
  }
  return n;
}

}  // namespace detail

/// Departure epochs from the last queue for every job; job 0 arrives at 0 and
/// inter_arrivals[k] separates jobs k and k + 1.
inline std::vector<double> lindley_exit_time(std::span<const double> inter_arrivals,
                                             const ServiceMatrix& services) {
  const std::size_t n = detail::check_dimensions(inter_arrivals, services);
  std::vector<double> dep(n, 0.0);
  double arrival = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) arrival += inter_arrivals[k - 1];
    dep[k] = arrival;
  }
  for (const auto& row : services) {
    double prev = -kInf;
    for (std::size_t k = 0; k < n; ++k) {
      dep[k] = std::max(dep[k], prev) + row[k];
      prev = dep[k];
    }
  }
  return dep;
}

/// Exit time of the last job as the maximum over all monotone index chains
/// k_1 <= ... <= k_M <= n - 1 of arrival(k_1) plus the services along the chain.
inline double brute_force_exit_time(std::span<const double> inter_arrivals,
                                    const ServiceMatrix& services) {
  const std::size_t n = detail::check_dimensions(inter_arrivals, services);
  const std::size_t m = services.size();
  if (n > 12 || m > 4) throw Error(Errc::too_large, "brute force limited to n <= 12, M <= 4");

  std::vector<double> arrival(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) arrival[k] = arrival[k - 1] + inter_arrivals[k - 1];

  double best = -kInf;
  std::vector<std::size_t> chain(m);
  std::function<void(std::size_t, std::size_t)> walk = [&](std::size_t q, std::size_t from) {
    if (q == m) {
      double total = arrival[chain[0]];
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t end = j + 1 < m ? chain[j + 1] : n - 1;
        for (std::size_t k = chain[j]; k <= end; ++k) total += services[j][k];
      }
      best = std::max(best, total);
      return;
    }
    for (std::size_t k = from; k < n; ++k) {
      chain[q] = k;
      walk(q + 1, k);
    }
  };
  walk(0, 0);
  return best;
}

/// Last-job waiting time of a two-queue tandem through the random-walk
/// representation max{0, T1 + (Z2 - Y2)+, T2 + Z2 - Y2}, with indexes
/// reversed so that index 2 refers to the last job.
inline double two_queue_waiting(std::span<const double> inter_arrivals,
                                const ServiceMatrix& services) {
  const std::size_t n = detail::check_dimensions(inter_arrivals, services);
  if (services.size() != 2) throw Error(Errc::dimension_mismatch, "needs exactly two queues");
  const std::size_t last = n - 1;
  if (last == 0) return 0.0;

  // Reversed sequences for m = 3 .. last + 2.
  auto Y = [&](std::size_t m) { return services[0][last + 2 - m]; };
  auto Z = [&](std::size_t m) { return services[1][last + 1 - m]; };
  auto X = [&](std::size_t m) { return inter_arrivals[last + 2 - m]; };

  double su = 0.0;
  double t1 = -kInf;
  double sv = 0.0;
  double best_switch = -kInf;  // max over i < j of (sum V - sum U) up to i
  double t2 = -kInf;
  for (std::size_t m = 3; m <= last + 2; ++m) {
    if (m > 3) t2 = std::max(t2, best_switch + su + (Y(m) - X(m)));
    su += Y(m) - X(m);
    t1 = std::max(t1, su);
    if (m <= last + 1) {
      sv += Z(m) - X(m);
      best_switch = std::max(best_switch, sv - su);
    }
  }
  const double dz = services[1][last - 1] - services[0][last];
  double w = std::max(0.0, t1 + positive_part(dz));
  if (std::isfinite(t2)) w = std::max(w, t2 + dz);
  return w;
}

/// Last-job waiting time of an M-queue packet tandem (service y[k] of job k at
/// every queue) through max{T1, T2 - (M - 1) Y1} v 0, indexes reversed so that
/// Y1 is the last job's service.
inline double packet_waiting(std::span<const double> inter_arrivals,
                             std::span<const double> service, std::size_t queues) {
  if (inter_arrivals.size() + 1 != service.size() || service.empty() || queues == 0) {
    throw Error(Errc::dimension_mismatch, "need one inter-arrival fewer than jobs");
  }
  const std::size_t last = service.size() - 1;
  const double extra = static_cast<double>(queues - 1);
  double sum = 0.0;
  double peak = -kInf;
  double w = 0.0;
  for (std::size_t m = 2; m <= last + 1; ++m) {
    const double y = service[last + 1 - m];
    sum += y - inter_arrivals[last + 1 - m];
    peak = std::max(peak, y);
    w = std::max({w, sum, sum + extra * (peak - service[last])});
  }
  return w;
}

/// n inter-arrivals of the alternating renewal process: a fair coin picks the
/// starting law, after which the two laws alternate.
inline std::vector<double> ar_stream(const Distribution& dist1, const Distribution& dist2,
                                     RandomStream& rng, std::size_t n) {
  const bool first_is_one = rng.uniform01() < 0.5;
  const Distribution& even = first_is_one ? dist1 : dist2;
  const Distribution& odd = first_is_one ? dist2 : dist1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = sample(i % 2 == 0 ? even : odd, rng);
  return out;
}

struct SamplePath {
  std::vector<double> inter_arrivals;
  ServiceMatrix services;
};

/// Draws the path of one run. Stream (seed, run, 0) feeds arrivals and
/// (seed, run, q) feeds queue q; packet mode reuses queue 1's draws.
inline SamplePath draw_path(const TandemSpec& spec, std::size_t path_len, std::uint64_t seed,
                            std::uint64_t run) {
  SamplePath p;
  auto arrivals = RandomStream::keyed(seed, run, 0);
  if (const auto* r = std::get_if<Renewal>(&spec.arrivals)) {
    p.inter_arrivals.resize(path_len - 1);
    for (auto& x : p.inter_arrivals) x = sample(r->dist, arrivals);
  } else {
    const auto& alt = std::get<Alternating>(spec.arrivals);
    p.inter_arrivals = ar_stream(alt.dist1, alt.dist2, arrivals, path_len - 1);
  }
  p.services.resize(spec.queues());
  for (std::size_t q = 0; q < spec.queues(); ++q) {
    if (spec.mode == ServiceMode::packet && q > 0) {
      p.services[q] = p.services[0];
      continue;
    }
    auto rng = RandomStream::keyed(seed, run, q + 1);
    p.services[q].resize(path_len);
    for (auto& y : p.services[q]) y = sample(spec.services[q], rng);
  }
  return p;
}

struct JobTimes {
  double waiting;
  double sojourn;
};

/// The same recursion as lindley_exit_time with every epoch measured from the
/// current job's arrival, so idle queues contribute an exact zero wait.
inline JobTimes last_job_times(const SamplePath& p) {
  const std::size_t m = p.services.size();
  const std::size_t n = p.services.front().size();
  std::vector<double> prev_dep(m, -kInf);
  double waiting = 0.0;
  double exit = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double gap = k > 0 ? p.inter_arrivals[k - 1] : 0.0;
    waiting = 0.0;
    exit = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double wait = positive_part(prev_dep[j] - gap - exit);
      exit += wait + p.services[j][k];
      waiting += wait;
      prev_dep[j] = exit;
    }
  }
  return {waiting, exit};
}

/// Last-job metric for every run, in run order.
inline std::vector<double> simulate_samples(const TandemSpec& spec, const SimConfig& cfg) {
  spec.validate();
  cfg.validate(spec.queues());
  std::vector<double> out(cfg.runs);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const auto t = last_job_times(draw_path(spec, cfg.path_len, cfg.seed, r));
      out[r] = cfg.metric == Metric::waiting ? t.waiting : t.sojourn;
    }
  };
  unsigned threads = cfg.threads ? cfg.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(cfg.runs));
  if (threads == 1) {
    work(0, cfg.runs);
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (cfg.runs + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t b = t * chunk;
    const std::size_t e = std::min(cfg.runs, b + chunk);
    if (b < e) pool.emplace_back(work, b, e);
  }
  for (auto& th : pool) th.join();
  return out;
}

inline CcdfCurve empirical_ccdf(std::span<const double> samples, std::span<const double> x_grid) {
  CcdfCurve c{CurveKind::simulation, {}};
  const double n = static_cast<double>(samples.size());
  for (double x : x_grid) {
    const auto hits = std::count_if(samples.begin(), samples.end(), [&](double w) { return w > x; });
    const double p = static_cast<double>(hits) / n;
    c.points.push_back({x, p, std::sqrt(p * (1.0 - p) / n)});
  }
  return c;
}

inline CcdfCurve simulate(const TandemSpec& spec, const SimConfig& cfg) {
  const auto samples = simulate_samples(spec, cfg);
  return empirical_ccdf(samples, cfg.x_grid);
}

inline void to_json(nlohmann::json& j, const TandemSpec& s) {
  nlohmann::json arr;
  if (const auto* r = std::get_if<Renewal>(&s.arrivals)) {
    arr = {{"type", "renewal"}, {"dist", r->dist}};
  } else {
    const auto& a = std::get<Alternating>(s.arrivals);
    arr = {{"type", "alternating"}, {"dist1", a.dist1}, {"dist2", a.dist2}};
  }
  j = {{"arrivals", arr}, {"services", s.services}, {"mode", to_string(s.mode)}};
}

inline TandemSpec tandem_spec_from_json(const nlohmann::json& j) {
  TandemSpec s{Renewal{Distribution::exponential(1.0)}, {}, ServiceMode::independent};
  const auto& arr = j.at("arrivals");
  const std::string type = arr.value("type", "renewal");
  if (type == "renewal") {
    s.arrivals = Renewal{distribution_from_json(arr.at("dist"))};
  } else if (type == "alternating") {
    s.arrivals = Alternating{distribution_from_json(arr.at("dist1")),
                             distribution_from_json(arr.at("dist2"))};
  } else {
    throw Error(Errc::invalid_argument, "unknown arrival type \"" + type + "\"");
  }
  for (const auto& d : j.at("services")) s.services.push_back(distribution_from_json(d));
  const std::string mode = j.value("mode", "independent");
  if (mode == "independent") {
    s.mode = ServiceMode::independent;
  } else if (mode == "packet") {
    s.mode = ServiceMode::packet;
  } else {
    throw Error(Errc::invalid_argument, "unknown service mode \"" + mode + "\"");
  }
  return s;
}

inline void to_json(nlohmann::json& j, const SimConfig& c) {
  j = {{"runs", c.runs},
       {"path_len", c.path_len},
       {"seed", c.seed},
       {"x_grid", c.x_grid},
       {"metric", c.metric == Metric::waiting ? "waiting" : "sojourn"}};
}

inline SimConfig sim_config_from_json(const nlohmann::json& j, SimConfig base = {}) {
  if (j.contains("runs")) base.runs = j.at("runs").get<std::size_t>();
  if (j.contains("path_len")) base.path_len = j.at("path_len").get<std::size_t>();
  if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("x_grid")) base.x_grid = j.at("x_grid").get<std::vector<double>>();
  if (j.contains("threads")) base.threads = j.at("threads").get<unsigned>();
  if (j.contains("metric")) {
    const auto m = j.at("metric").get<std::string>();
    if (m == "waiting") {
      base.metric = Metric::waiting;
    } else if (m == "sojourn") {
      base.metric = Metric::sojourn;
    } else {
      throw Error(Errc::invalid_argument, "unknown metric \"" + m + "\"");
    }
  }
  return base;
}

}  // namespace tandem
