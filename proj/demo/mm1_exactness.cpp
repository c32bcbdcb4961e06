// M/M/1 with lambda = 0.5, mu = 1: the exponential-service bound is the exact
// waiting-time tail 0.5 e^{-0.5 x}. Compares it with a simulation.

#include <cmath>
#include <cstdio>

#include "tandem/polyexp.hpp"
#include "tandem/simulator.hpp"

int main() {
  using namespace tandem;
  const auto x = Distribution::exponential(0.5);
  const auto y = Distribution::exponential(1.0);

  SimConfig cfg;
  cfg.runs = 10000;
  cfg.path_len = 5000;
  cfg.x_grid = {0.0, 0.5, 1.0, 2.0, 5.0, 10.0};
  const auto sim = simulate(TandemSpec{Renewal{x}, {y}}, cfg);

  std::printf("%8s %12s %12s %12s %8s\n", "x", "exact", "bound", "simulated", "z");
  for (const auto& s : sim.points) {
    const double exact = 0.5 * std::exp(-0.5 * s.x);
    std::printf("%8.2f %12.6f %12.6f %12.6f %8.2f\n", s.x, exact, ross_bound(x, y, s.x), s.value,
                s.std_error > 0.0 ? (s.value - exact) / s.std_error : 0.0);
  }
}
