// Linear Landau damping with and without scaling adaptivity; prints the fitted
// damping rate and where each run's potential energy recurs.
#include <algorithm>
#include <cstdio>
#include <vector>

#include "hvp/simulation.hpp"

int main() {
  for (bool adaptive : {false, true}) {
    auto opt = hvp::SimulationOptions::defaults_for(hvp::Scenario::landau_linear_1d);
    opt.grid.order = {64, 0};
    opt.adaptive = adaptive;
    hvp::Simulation sim(opt);
    std::vector<double> t, we;
    while (!sim.reached(40.0)) {
      sim.step(std::min(sim.stable_dt(), 40.0 - sim.state().t()));
      t.push_back(sim.state().t());
      we.push_back(sim.quantities().field_energy);
    }
    const auto rec = hvp::measure_recurrence(t, we);
    std::printf("%-12s rate %.4f  recurrence %s%.2f  final beta %.4f\n", adaptive ? "adaptive" : "fixed beta",
                hvp::fit_damping_rate(t, we, {0.0, 15.0}), rec ? "t=" : "none before t=", rec ? *rec : 40.0,
                sim.state().beta(0));
  }
}
