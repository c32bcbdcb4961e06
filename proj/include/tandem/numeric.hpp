#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

namespace tandem {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double positive_part(double x) { return x > 0.0 ? x : 0.0; }

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out;
  if (n == 0) return out;
  if (n == 1) return {lo};
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(lo + (hi - lo) * static_cast<double>(i) /
                           static_cast<double>(n - 1));
  }
  out.back() = hi;
  return out;
}

/// Adaptive Gauss-Kronrod quadrature of `f` over [lo, hi] (hi may be +inf).
/// Interior `breaks` (kinks, jumps) split the range so every piece is smooth.
template <class F>
double integrate(F&& f, double lo, double hi,
                 std::span<const double> breaks = {}, double rel_tol = 1e-12) {
  if (!(hi > lo)) return 0.0;
  std::vector<double> cuts{lo};
  for (double b : breaks) {
    if (b > lo && b < hi) cuts.push_back(b);
  }
  std::sort(cuts.begin() + 1, cuts.end());
  cuts.push_back(hi);

  using boost::math::quadrature::gauss_kronrod;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (!(cuts[i + 1] > cuts[i])) continue;
    total += gauss_kronrod<double, 31>::integrate(f, cuts[i], cuts[i + 1], 15,
                                                  rel_tol);
  }
  return total;
}

/// Largest point of [lo, hi] at which the monotone predicate still holds,
/// assuming pred holds on (lo, r] and fails on (r, hi].
template <class Pred>
double bisect_boundary(Pred&& pred, double lo, double hi, double tol = 1e-13) {
  for (int it = 0; it < 400 && hi - lo > tol * std::max(1.0, std::abs(lo));
       ++it) {
    const double mid = 0.5 * (lo + hi);
    if (pred(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

struct Extremum {
  double x;
  double value;
};

/// Global minimum of a one-dimensional function: dense grid to locate the
/// basin, then Brent refinement between the neighbouring grid nodes.
template <class F>
Extremum minimize_scalar(F&& f, double lo, double hi, std::size_t grid = 200) {
  if (!(hi > lo)) return {lo, f(lo)};
  grid = std::max<std::size_t>(grid, 3);
  const auto xs = linspace(lo, hi, grid);
  std::size_t best = 0;
  double best_value = kInf;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double v = f(xs[i]);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  Extremum result{xs[best], best_value};
  const double a = xs[best == 0 ? 0 : best - 1];
  const double b = xs[std::min(best + 1, xs.size() - 1)];
  if (b > a) {
    auto [x, v] = boost::math::tools::brent_find_minima(
        f, a, b, std::numeric_limits<double>::digits / 2);
    if (v < result.value) result = {x, v};
  }
  return result;
}

template <class F>
Extremum maximize_scalar(F&& f, double lo, double hi, std::size_t grid = 200) {
  auto neg = [&](double x) { return -f(x); };
  const Extremum m = minimize_scalar(neg, lo, hi, grid);
  return {m.x, -m.value};
}

/// Running mean / standard error accumulator (Welford).
class MeanAccumulator {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }
  double stderr_of_mean() const {
    return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace tandem
