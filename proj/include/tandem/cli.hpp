#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tandem/curve.hpp"
#include "tandem/distributions.hpp"
#include "tandem/error.hpp"
#include "tandem/polyexp.hpp"
#include "tandem/simulator.hpp"
#include "tandem/union_bounds.hpp"
#include "tandem/verifier.hpp"

namespace tandem::cli {

inline constexpr int kSchemaVersion = 1;

enum class Command { bound, simulate, compare, verify, figure };
enum class OutputFormat { csv, json };
enum class BoundKind { polyexp, ld, kingman, ross };

inline Command command_from_string(const std::string& s) {
  if (s == "bound") return Command::bound;
  if (s == "simulate") return Command::simulate;
  if (s == "compare") return Command::compare;
  if (s == "verify") return Command::verify;
  if (s == "figure") return Command::figure;
  throw Error(Errc::invalid_argument, "unknown command \"" + s + "\"");
}

inline const char* to_string(Command c) {
  switch (c) {
    case Command::bound: return "bound";
    case Command::simulate: return "simulate";
    case Command::compare: return "compare";
    case Command::verify: return "verify";
    case Command::figure: return "figure";
  }
  return "unknown";
}

inline BoundKind bound_kind_from_string(const std::string& s) {
  if (s == "polyexp") return BoundKind::polyexp;
  if (s == "ld") return BoundKind::ld;
  if (s == "kingman") return BoundKind::kingman;
  if (s == "ross") return BoundKind::ross;
  throw Error(Errc::invalid_argument, "unknown bound kind \"" + s + "\"");
}

inline OutputFormat format_from_string(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw Error(Errc::invalid_argument, "unknown format \"" + s + "\"");
}

struct VerifyOptions {
  std::vector<std::string> checks{"eight-inequalities"};
  std::size_t n_mc = 100000;
  std::size_t horizon = 2000;
  double min_pass_fraction = 0.95;  // fixed-point check only
  std::vector<GridPoint> grid;      // empty: a 10 x 10 grid inside the domain
};

struct RunConfig {
  Command command = Command::bound;
  std::optional<TandemSpec> model;
  SimConfig sim;
  std::vector<BoundKind> bound_kinds;  // empty: every applicable kind
  std::string output_path;             // empty: stdout; directory for "figure"
  OutputFormat format = OutputFormat::csv;
  std::string figure_model = "dm2";
  std::optional<double> rho;
  VerifyOptions verify;
};

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> path_len;
  std::optional<double> rho;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<unsigned> threads;
};

inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig c;
  if (j.contains("command")) c.command = command_from_string(j.at("command"));
  if (j.contains("model")) c.model = tandem_spec_from_json(j.at("model"));
  if (j.contains("sim")) c.sim = sim_config_from_json(j.at("sim"));
  if (j.contains("x_grid")) c.sim.x_grid = j.at("x_grid").get<std::vector<double>>();
  for (const auto& b : j.value("bounds", nlohmann::json::array())) {
    c.bound_kinds.push_back(bound_kind_from_string(b.get<std::string>()));
  }
  c.output_path = j.value("output", "");
  if (j.contains("format")) c.format = format_from_string(j.at("format"));
  c.figure_model = j.value("figure", c.figure_model);
  if (j.contains("rho")) c.rho = j.at("rho").get<double>();
  if (j.contains("verify")) {
    const auto& v = j.at("verify");
    if (v.contains("checks")) c.verify.checks = v.at("checks").get<std::vector<std::string>>();
    c.verify.n_mc = v.value("n_mc", c.verify.n_mc);
    c.verify.horizon = v.value("horizon", c.verify.horizon);
    c.verify.min_pass_fraction = v.value("min_pass_fraction", c.verify.min_pass_fraction);
    for (const auto& p : v.value("grid", nlohmann::json::array())) {
      c.verify.grid.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
  }
  return c;
}

inline void apply(RunConfig& c, const Overrides& o) {
  if (o.seed) c.sim.seed = *o.seed;
  if (o.runs) c.sim.runs = *o.runs;
  if (o.path_len) c.sim.path_len = *o.path_len;
  if (o.rho) c.rho = *o.rho;
  if (o.out) c.output_path = *o.out;
  if (o.format) c.format = format_from_string(*o.format);
  if (o.threads) c.sim.threads = *o.threads;
}

/// The same law with every draw multiplied by `factor`.
inline Distribution scaled(const Distribution& d, double factor) {
  if (const auto* x = d.get_if<Deterministic>()) return Distribution::deterministic(x->value * factor);
  if (const auto* x = d.get_if<Exponential>()) return Distribution::exponential(x->rate / factor);
  if (const auto* x = d.get_if<Gamma>()) return Distribution::gamma(x->shape, x->rate / factor);
  throw Error(Errc::invalid_argument, "cannot rescale " + describe(d));
}

/// Rescales the arrival process so that the bottleneck load equals rho.
inline void set_load(TandemSpec& spec, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw Error(Errc::invalid_argument, "rho must lie in (0, 1)");
  double slowest = 0.0;
  for (const auto& s : spec.services) slowest = std::max(slowest, mean(s));
  const double factor = slowest / rho / spec.mean_interarrival();
  if (auto* r = std::get_if<Renewal>(&spec.arrivals)) {
    r->dist = scaled(r->dist, factor);
  } else {
    auto& a = std::get<Alternating>(spec.arrivals);
    a.dist1 = scaled(a.dist1, factor);
    a.dist2 = scaled(a.dist2, factor);
  }
}

/// Renewal arrivals into two independent Exponential(mu) queues: the setting
/// of the poly-exp and union bounds.
struct TwoQueueModel {
  Distribution arrival;
  double mu;
};

inline std::optional<TwoQueueModel> two_queue_model(const TandemSpec& s) {
  const auto* r = std::get_if<Renewal>(&s.arrivals);
  if (!r || s.mode != ServiceMode::independent || s.services.size() != 2) return std::nullopt;
  const auto* e = s.services[0].get_if<Exponential>();
  if (!e || !(s.services[1] == s.services[0])) return std::nullopt;
  return TwoQueueModel{r->dist, e->rate};
}

inline bool single_queue(const TandemSpec& s) {
  return std::holds_alternative<Renewal>(s.arrivals) && s.services.size() == 1;
}

inline std::vector<BoundKind> applicable_bounds(const TandemSpec& s, Metric metric) {
  if (two_queue_model(s)) {
    return metric == Metric::waiting ? std::vector{BoundKind::polyexp, BoundKind::ld}
                                     : std::vector{BoundKind::polyexp};
  }
  if (single_queue(s) && metric == Metric::waiting) return {BoundKind::kingman, BoundKind::ross};
  return {};
}

struct BoundOutput {
  std::vector<CcdfCurve> curves;
  std::optional<GimMmFit> fit;
};

inline BoundOutput compute_bounds(const RunConfig& c) {
  const TandemSpec& spec = *c.model;
  spec.validate();
  const auto allowed = applicable_bounds(spec, c.sim.metric);
  const auto kinds = c.bound_kinds.empty() ? allowed : c.bound_kinds;
  if (kinds.empty()) throw Error(Errc::invalid_argument, "no bound applies to this model");
  BoundOutput out;
  for (auto k : kinds) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw Error(Errc::invalid_argument, "requested bound does not apply to this model");
    }
    CcdfCurve curve{CurveKind::polyexp_bound, {}};
    switch (k) {
      case BoundKind::polyexp: {
        const auto m = *two_queue_model(spec);
        out.fit = fit_gim_mm_detailed(m.arrival, m.mu);
        for (double x : c.sim.x_grid) {
          if (c.sim.metric == Metric::waiting) {
            curve.points.push_back({x, eval_bound(out.fit->params, x), 0.0});
          } else {
            const auto e = sojourn_bound(out.fit->params, x, 100000,
                                         RandomStream::keyed(c.sim.seed, ~0ULL, 1));
            curve.points.push_back({x, e.value, e.std_error});
          }
        }
        break;
      }
      case BoundKind::ld: {
        const auto m = *two_queue_model(spec);
        curve.kind = CurveKind::ld_bound;
        for (double x : c.sim.x_grid) {
          curve.points.push_back({x, ld_bound(m.arrival, m.mu, x).value, 0.0});
        }
        break;
      }
      case BoundKind::kingman:
      case BoundKind::ross: {
        const auto& x_law = std::get<Renewal>(spec.arrivals).dist;
        curve.kind = k == BoundKind::kingman ? CurveKind::kingman : CurveKind::ross;
        for (double x : c.sim.x_grid) {
          const double v = k == BoundKind::kingman ? kingman_bound(x_law, spec.services[0], x)
                                                   : ross_bound(x_law, spec.services[0], x);
          curve.points.push_back({x, v, 0.0});
        }
        break;
      }
    }
    out.curves.push_back(std::move(curve));
  }
  return out;
}

inline std::string curves_document(const RunConfig& c, const std::vector<CcdfCurve>& curves,
                                   const nlohmann::json& extra = nlohmann::json::object()) {
  if (c.format == OutputFormat::csv) {
    std::ostringstream os;
    write_csv(os, curves);
    return os.str();
  }
  nlohmann::json j = {{"schema_version", kSchemaVersion},
                      {"command", to_string(c.command)},
                      {"curves", curves}};
  j.update(extra);
  return j.dump(2) + "\n";
}

inline void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::invalid_argument, "cannot write " + path);
  f << text;
}

inline std::string sidecar_path(const std::string& out, const std::string& suffix) {
  if (out.empty()) return {};
  std::filesystem::path p(out);
  p.replace_extension();
  return p.string() + suffix;
}

inline int run_bound(const RunConfig& c) {
  const auto b = compute_bounds(c);
  nlohmann::json extra = nlohmann::json::object();
  if (b.fit) extra["fit"] = *b.fit;
  emit(c.output_path, curves_document(c, b.curves, extra));
  return 0;
}

inline int run_simulate(const RunConfig& c) {
  const auto curve = simulate(*c.model, c.sim);
  emit(c.output_path, curves_document(c, {curve}));
  return 0;
}

inline nlohmann::json dominance_document(const std::vector<VerificationReport>& reps) {
  nlohmann::json j = {{"schema_version", kSchemaVersion}, {"reports", reps}};
  bool ok = true;
  for (const auto& r : reps) ok = ok && r.fail_count == 0;
  j["all_pass"] = ok;
  return j;
}

inline int run_compare(const RunConfig& c, std::ostream& log) {
  auto b = compute_bounds(c);
  const auto sim = simulate(*c.model, c.sim);
  std::vector<VerificationReport> reps;
  for (const auto& curve : b.curves) reps.push_back(check_dominance(curve, sim, 3.0));
  b.curves.push_back(sim);
  write_summary(log, reps);
  if (c.format == OutputFormat::json) {
    nlohmann::json extra = {{"dominance", dominance_document(reps)}};
    if (b.fit) extra["fit"] = *b.fit;
    emit(c.output_path, curves_document(c, b.curves, extra));
  } else {
    emit(c.output_path, curves_document(c, b.curves));
    const auto side = sidecar_path(c.output_path, ".dominance.json");
    if (!side.empty()) emit(side, dominance_document(reps).dump(2) + "\n");
  }
  return 0;
}

inline int run_verify(const RunConfig& c, std::ostream& log) {
  const TandemSpec& spec = *c.model;
  spec.validate();
  const auto m = two_queue_model(spec);
  std::vector<VerificationReport> reps;
  bool ok = true;
  for (const auto& name : c.verify.checks) {
    if (name == "fixed-point") {
      const auto* r = std::get_if<Renewal>(&spec.arrivals);
      if (!r || spec.mode != ServiceMode::independent || spec.services.size() > 2) {
        throw Error(Errc::invalid_argument, "fixed-point check needs renewal arrivals, M <= 2");
      }
      const auto z = spec.services.size() == 2 ? spec.services[1] : Distribution::deterministic(0.0);
      std::vector<GridPoint> grid = c.verify.grid;
      if (grid.empty()) {
        for (double u : linspace(-1.0, 8.0, 5)) {
          for (double v : linspace(-1.0, 8.0, 5)) grid.push_back({u, v});
        }
      }
      reps.push_back(check_fixed_point(r->dist, spec.services[0], z, grid, c.verify.n_mc,
                                       c.verify.horizon, RandomStream::keyed(c.sim.seed, 1)));
      ok = ok && reps.back().passed(c.verify.min_pass_fraction);
      continue;
    }
    if (!m) throw Error(Errc::invalid_argument, name + " needs the two-queue exponential model");
    const auto params = fit_gim_mm(m->arrival, m->mu);
    const auto grid = c.verify.grid.empty() ? domain_grid(params, 10, 10, 1.0) : c.verify.grid;
    if (name == "gamma-inequality") {
      reps.push_back(check_gamma_inequality(params, m->arrival, grid, c.verify.n_mc,
                                            RandomStream::keyed(c.sim.seed, 2)));
      ok = ok && reps.back().passed();
    } else if (name == "eight-inequalities") {
      for (auto& r : check_eight_inequalities(params, m->arrival, grid)) {
        ok = ok && r.passed();
        reps.push_back(std::move(r));
      }
    } else {
      throw Error(Errc::invalid_argument, "unknown check \"" + name + "\"");
    }
  }
  write_summary(log, reps);
  nlohmann::json j = {{"schema_version", kSchemaVersion},
                      {"command", "verify"},
                      {"all_pass", ok},
                      {"reports", reps}};
  emit(c.output_path, j.dump(2) + "\n");
  return ok ? 0 : 3;
}

/// The three-load sweep at mu = 1: deterministic ("dm2") or Erlang-2 ("e2m2")
/// inter-arrivals into two Exponential(1) queues.
inline int run_figure(const RunConfig& c, std::ostream& log) {
  if (c.figure_model != "dm2" && c.figure_model != "e2m2") {
    throw Error(Errc::invalid_argument, "figure must be dm2 or e2m2");
  }
  const std::vector<double> loads = c.rho ? std::vector{*c.rho} : std::vector{0.5, 0.75, 0.95};
  const std::filesystem::path dir = c.output_path.empty() ? "." : c.output_path;
  std::filesystem::create_directories(dir);
  for (double rho : loads) {
    const auto arrival = c.figure_model == "dm2" ? Distribution::deterministic(1.0 / rho)
                                                 : Distribution::gamma(2.0, 2.0 * rho);
    RunConfig sub = c;
    sub.model = TandemSpec{Renewal{arrival},
                           {Distribution::exponential(1.0), Distribution::exponential(1.0)},
                           ServiceMode::independent};
    sub.bound_kinds = {BoundKind::polyexp, BoundKind::ld};
    sub.sim.metric = Metric::waiting;
    const double theta = solve_theta(arrival, Distribution::exponential(1.0)).theta;
    sub.sim.x_grid = linspace(0.0, std::ceil(14.0 / theta), 41);

    auto b = compute_bounds(sub);
    b.curves.push_back(simulate(*sub.model, sub.sim));
    char name[64];
    std::snprintf(name, sizeof name, "figure-%s-rho%.2f.%s", c.figure_model.c_str(), rho,
                  c.format == OutputFormat::csv ? "csv" : "json");
    const auto path = (dir / name).string();
    emit(path, curves_document(sub, b.curves, {{"rho", rho}, {"fit", *b.fit}}));
    log << path << '\n';
  }
  return 0;
}

inline void validate(const RunConfig& c) {
  if (c.command == Command::figure) return;
  if (!c.model) throw Error(Errc::invalid_argument, "config has no model");
  if (c.command != Command::verify && c.sim.x_grid.empty()) {
    throw Error(Errc::invalid_argument, "x_grid is empty");
  }
}

/// Runs one command. Exit status: 0 success, 1 invalid configuration,
/// 2 unstable model, 3 failed verification.
inline int run(RunConfig c, std::ostream& log = std::cerr) {
  try {
    validate(c);
    if (c.model && c.rho && c.command != Command::figure) set_load(*c.model, *c.rho);
    switch (c.command) {
      case Command::bound: return run_bound(c);
      case Command::simulate: return run_simulate(c);
      case Command::compare: return run_compare(c, log);
      case Command::verify: return run_verify(c, log);
      case Command::figure: return run_figure(c, log);
    }
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return e.code() == Errc::unstable ? 2 : 1;
  } catch (const nlohmann::json::exception& e) {
    log << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace tandem::cli
