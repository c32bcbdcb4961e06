#pragma once

#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tandem/error.hpp"

namespace tandem {

enum class CurveKind { polyexp_bound, ld_bound, kingman, ross, simulation };

inline const char* to_string(CurveKind k) {
  switch (k) {
    case CurveKind::polyexp_bound: return "polyexp-bound";
    case CurveKind::ld_bound: return "ld-bound";
    case CurveKind::kingman: return "kingman";
    case CurveKind::ross: return "ross";
    case CurveKind::simulation: return "simulation";
  }
  return "unknown";
}

inline CurveKind curve_kind_from_string(const std::string& s) {
  for (auto k : {CurveKind::polyexp_bound, CurveKind::ld_bound, CurveKind::kingman,
                 CurveKind::ross, CurveKind::simulation}) {
    if (s == to_string(k)) return k;
  }
  throw Error(Errc::invalid_argument, "unknown curve kind \"" + s + "\"");
}

struct CurvePoint {
  double x;
  double value;
  double std_error;  // zero for analytic curves
};

/// A tail curve x -> P(W > x), analytic or estimated.
struct CcdfCurve {
  CurveKind kind;
  std::vector<CurvePoint> points;

  std::vector<double> xs() const {
    std::vector<double> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(p.x);
    return out;
  }

  /// x strictly increasing, values in [0, 1].
  void validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (i > 0 && !(points[i].x > points[i - 1].x)) {
        throw Error(Errc::invalid_argument, "curve x grid not strictly increasing");
      }
      if (!(points[i].value >= 0.0 && points[i].value <= 1.0)) {
        throw Error(Errc::invalid_argument, "curve value outside [0, 1]");
      }
    }
  }
};

/// Shortest round-trip decimal form; stable across runs.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr const char* kCsvHeader = "x,value,stderr,kind";

inline void write_csv(std::ostream& os, std::span<const CcdfCurve> curves) {
  os << kCsvHeader << '\n';
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      os << format_double(p.x) << ',' << format_double(p.value) << ','
         << format_double(p.std_error) << ',' << to_string(c.kind) << '\n';
    }
  }
}

inline void to_json(nlohmann::json& j, const CcdfCurve& c) {
  auto pts = nlohmann::json::array();
  for (const auto& p : c.points) {
    pts.push_back({{"x", p.x}, {"value", p.value}, {"stderr", p.std_error}});
  }
  j = {{"kind", to_string(c.kind)}, {"points", pts}};
}

}  // namespace tandem
