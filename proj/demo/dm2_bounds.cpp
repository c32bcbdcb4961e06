// Prints the fitted poly-exp bound, the union bound and a short simulation for
// deterministic arrivals into two Exponential(1) queues.
//
//   demo_dm2_bounds [rho]

#include <cstdio>
#include <cstdlib>

#include "tandem/polyexp.hpp"
#include "tandem/simulator.hpp"
#include "tandem/union_bounds.hpp"

int main(int argc, char** argv) {
  using namespace tandem;
  const double rho = argc > 1 ? std::atof(argv[1]) : 0.75;
  const auto x = Distribution::deterministic(1.0 / rho);
  const auto y = Distribution::exponential(1.0);

  const auto fit = fit_gim_mm_detailed(x, 1.0);
  const auto& p = fit.params;
  std::printf("rho=%.3f theta=%.6f a=%.6f A=%.6f B=%.6f C=%.6f D=%.6f\n", rho, p.theta, p.a,
              p.A, p.B, p.C, p.D_coef);

  TandemSpec spec{Renewal{x}, {y, y}};
  SimConfig cfg;
  cfg.runs = 2000;
  cfg.path_len = 2000;
  cfg.x_grid = linspace(0.0, std::ceil(10.0 / p.theta), 11);
  const auto sim = simulate(spec, cfg);

  std::printf("%10s %14s %14s %14s\n", "x", "polyexp", "union", "simulated");
  for (const auto& s : sim.points) {
    std::printf("%10.3f %14.6e %14.6e %14.6e\n", s.x, eval_bound(p, s.x),
                ld_bound(x, 1.0, s.x).value, s.value);
  }
}
