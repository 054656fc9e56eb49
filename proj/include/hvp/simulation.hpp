#ifndef HVP_SIMULATION_HPP
#define HVP_SIMULATION_HPP

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hvp/adaptivity.hpp"
#include "hvp/core_state.hpp"
#include "hvp/diagnostics.hpp"
#include "hvp/dynamics.hpp"
#include "hvp/projection.hpp"
#include "hvp/scenarios.hpp"

namespace hvp {

struct SimulationOptions {
  ScenarioSpec scenario = default_scenario(Scenario::landau_linear_1d);
  GridConfig grid = GridConfig::one_d(4.0 * std::numbers::pi, 32, 128);
  bool adaptive = true;
  AdaptivityParams adaptivity{};
  std::array<std::optional<double>, 2> initial_beta{}; // unset: argmin (adaptive) or scenario reference
  ProjectionConfig projection{};
  double cfl = 0.8;
  double fixed_dt = 0.0; // > 0 overrides the CFL controller
  double neutrality_tol = 1e-10;
  double tail_warn = 1e-6;

  // Scenario defaults for every grid and time parameter.
  static SimulationOptions defaults_for(Scenario s) {
    SimulationOptions o;
    o.scenario = default_scenario(s);
    const double l = o.scenario.default_length();
    o.grid = o.scenario.dims == 1
                 ? GridConfig::one_d(l, o.scenario.default_nx[0], o.scenario.default_order[0])
                 : GridConfig::two_d({l, l}, o.scenario.default_nx, o.scenario.default_order);
    return o;
  }

  // Modes that give up mass conservation would trip the neutrality guard by design.
  bool conserves_mass() const {
    return projection.mode == ConservationMode::full || projection.mode == ConservationMode::moments_only;
  }
};

// Step driver: RK4 step followed by per-dimension scaling adaptation.
class Simulation {
public:
  explicit Simulation(const SimulationOptions& opt)
      : opt_(opt), ctrl_(opt.adaptivity, opt.grid.dims), state_(initial_state()),
        stepper_(state_.grid(), effective_neutrality_tol()) {
    baseline_ = conserved_quantities(state_, stepper_.workspace().poisson());
  }

  const SimulationOptions& options() const noexcept { return opt_; }
  const SpectralState& state() const noexcept { return state_; }
  const AdaptivityController& controller() const noexcept { return ctrl_; }
  const ConservedQuantities& baseline() const noexcept { return baseline_; }
  const ProjectionStats& projection_stats() const noexcept { return stats_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  std::size_t steps() const noexcept { return steps_; }
  double last_dt() const noexcept { return last_dt_; }

  // Called after every adaptation attempt that changed a scaling factor.
  std::function<void(const AdaptReport&)> on_adapt;

  double stable_dt() {
    if (opt_.fixed_dt > 0.0) return opt_.fixed_dt;
    return compute_dt(state_, opt_.cfl, stepper_.workspace());
  }

  void step(double dt) {
    state_ = stepper_.step(state_, dt);
    last_dt_ = dt;
    ++steps_;
    if (!opt_.adaptive) return;
    for (int d = 0; d < state_.grid().dims; ++d) {
      auto result = adapt_scaling(state_, d, ctrl_, opt_.projection);
      if (result.report.changed) {
        stats_ += result.report.stats;
        state_ = std::move(result.state);
        if (on_adapt) on_adapt(result.report);
      }
    }
  }

  // Steps with the stable dt, shortened to land exactly on t_end.
  void advance_to(double t_end) {
    while (!reached(t_end)) step(std::min(stable_dt(), t_end - state_.t()));
  }

  bool reached(double t_end) const {
    return state_.t() >= t_end - 1e-12 * std::max(1.0, std::fabs(t_end));
  }

  ConservedQuantities quantities() { return conserved_quantities(state_, stepper_.workspace().poisson()); }

  std::array<double, 2> indicators() const {
    std::array<double, 2> f{0.0, 0.0};
    for (int d = 0; d < state_.grid().dims; ++d) f[static_cast<std::size_t>(d)] = frequency_indicator(state_, d);
    return f;
  }

  DiagnosticsRecord record() { return drift_record(state_, quantities(), baseline_, indicators()); }

private:
  double effective_neutrality_tol() const {
    return opt_.conserves_mass() ? opt_.neutrality_tol : std::numeric_limits<double>::infinity();
  }

  SpectralState initial_state() {
    opt_.scenario.validate();
    opt_.grid.validate();
    opt_.projection.validate();
    const int dims = opt_.grid.dims;
    Scaling beta{1.0, 1.0};
    auto expansion = [this](int d, double b, int n) { return velocity_expansion(opt_.scenario, d, b, n); };
    if (opt_.adaptive) {
      const auto init = init_scaling(expansion, opt_.grid, ctrl_);
      for (int d = 0; d < dims; ++d) {
        const auto ud = static_cast<std::size_t>(d);
        if (opt_.initial_beta[ud]) {
          const double b = *opt_.initial_beta[ud];
          ctrl_.place(d, b, 0, tail_ratio(expansion(d, b, opt_.grid.order[d])));
          beta[ud] = b;
        } else {
          beta[ud] = init.beta[ud];
        }
      }
    } else {
      for (int d = 0; d < dims; ++d) {
        const auto ud = static_cast<std::size_t>(d);
        beta[ud] = opt_.initial_beta[ud].value_or(opt_.scenario.reference_beta[ud]);
      }
    }
    auto built = build_initial_state(opt_.scenario, opt_.grid, beta, opt_.tail_warn);
    warnings_ = built.warnings;
    if (!opt_.conserves_mass())
      warnings_.push_back("projection mode " + to_string(opt_.projection.mode) +
                          " does not conserve mass; charge-neutrality guard disabled");
    return std::move(built.state);
  }

  SimulationOptions opt_;
  AdaptivityController ctrl_;
  std::vector<std::string> warnings_;
  SpectralState state_;
  Rk4Stepper stepper_;
  ConservedQuantities baseline_;
  ProjectionStats stats_;
  std::size_t steps_ = 0;
  double last_dt_ = 0.0;
};

} // namespace hvp

#endif // HVP_SIMULATION_HPP
