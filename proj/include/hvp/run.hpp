#ifndef HVP_RUN_HPP
#define HVP_RUN_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hvp/config.hpp"
#include "hvp/diagnostics.hpp"
#include "hvp/output.hpp"
#include "hvp/simulation.hpp"

namespace hvp {

enum class ExitCode : int { success = 0, config = 2, instability = 3, io = 4 };

namespace detail {

inline std::string snapshot_stem(std::size_t index, const std::string& plane) {
  std::ostringstream s;
  s << "snapshot_" << std::setw(3) << std::setfill('0') << index;
  if (!plane.empty()) s << "_" << plane;
  return s.str();
}

inline void write_snapshots(const SpectralState& state, const VelocityGrid& vg, const std::filesystem::path& dir,
                            std::size_t index, const std::string& tag = "") {
  const auto cuts = reconstruct_snapshot(state, vg);
  for (const auto& cut : cuts) {
    const std::string plane = cuts.size() == 1 ? tag : (tag.empty() ? cut.plane : tag + "_" + cut.plane);
    write_snapshot(cut, dir / snapshot_stem(index, plane));
  }
}

inline void write_summary(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& rows) {
  auto f = open_for_write(path);
  f << "key,value\n";
  for (const auto& [k, v] : rows) f << k << "," << v << "\n";
  if (!f) throw io_error("failed writing '" + path.string() + "'");
}

} // namespace detail

// Driver loop: step, adapt, record, snapshot. Returns the process exit code.
inline ExitCode run(const RunConfig& rc, std::ostream& log) {
  namespace fs = std::filesystem;
  using detail::format_number;
  const fs::path dir = rc.output.dir;
  try {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create output directory '" + dir.string() + "': " + ec.message());
    {
      auto f = detail::open_for_write(dir / "manifest.txt");
      f << to_text(manifest(rc));
      if (!f) throw io_error("failed writing manifest");
    }

    std::unique_ptr<Simulation> sim;
    try {
      sim = std::make_unique<Simulation>(rc.sim);
    } catch (const config_error& e) {
      log << "error: " << e.what() << "\n";
      return ExitCode::config;
    }
    for (const auto& w : sim->warnings()) log << "warning: " << w << "\n";
    const int dims = rc.sim.grid.dims;
    const Scaling beta0 = sim->state().beta();

    TimeseriesWriter csv(dir / "timeseries.csv", dims);
    const auto start = std::chrono::steady_clock::now();
    auto wall = [&] {
      if (!rc.output.record_wall_time) return 0.0;
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    std::vector<double> ts, we;
    auto emit = [&] {
      const auto r = sim->record();
      csv.write(r, sim->projection_stats().events(), wall());
      ts.push_back(r.t);
      we.push_back(r.field_energy);
    };

    const auto& snaps = rc.output.snapshot_times;
    std::size_t next_snap = 0;
    auto flush_snapshots = [&] {
      while (next_snap < snaps.size() && sim->reached(snaps[next_snap])) {
        detail::write_snapshots(sim->state(), rc.output.v_grid, dir, next_snap);
        ++next_snap;
      }
    };

    emit();
    flush_snapshots();
    double next_record = rc.record_interval;
    try {
      while (!sim->reached(rc.t_final)) {
        double target = rc.t_final;
        if (next_snap < snaps.size()) target = std::min(target, snaps[next_snap]);
        const double stable = sim->stable_dt();
        const double dt = std::min(stable, target - sim->state().t());
        try {
          sim->step(dt);
        } catch (const instability_error& e) {
          log << "instability at step " << sim->steps() + 1 << ", t = " << format_number(sim->state().t())
              << ": " << e.what() << "\n"
              << "  dt = " << format_number(dt) << ", cfl = " << format_number(rc.sim.cfl)
              << ", beta_1 = " << format_number(sim->state().beta(0)) << "\n";
          detail::write_snapshots(sim->state(), rc.output.v_grid, dir, snaps.size(), "last_good");
          write_state_dump(sim->state(), dir / "state_last_good");
          return ExitCode::instability;
        }
        const bool done = sim->reached(rc.t_final);
        if (rc.record_interval == 0.0 || done || sim->reached(next_record)) {
          emit();
          while (rc.record_interval > 0.0 && sim->reached(next_record)) next_record += rc.record_interval;
        }
        flush_snapshots();
      }
    } catch (const neutrality_error& e) {
      log << "charge neutrality lost at t = " << format_number(sim->state().t()) << ": " << e.what() << "\n";
      write_state_dump(sim->state(), dir / "state_last_good");
      return ExitCode::instability;
    } catch (const stability_error& e) {
      log << "change of scaling failed at t = " << format_number(sim->state().t()) << ": " << e.what() << "\n";
      write_state_dump(sim->state(), dir / "state_last_good");
      return ExitCode::instability;
    }

    std::vector<std::pair<std::string, std::string>> summary;
    summary.emplace_back("steps", std::to_string(sim->steps()));
    summary.emplace_back("t_final", format_number(sim->state().t()));
    for (int d = 0; d < dims; ++d) {
      summary.emplace_back("beta_initial_" + std::to_string(d + 1), format_number(beta0[static_cast<std::size_t>(d)]));
      summary.emplace_back("beta_final_" + std::to_string(d + 1), format_number(sim->state().beta(d)));
    }
    const auto& st = sim->projection_stats();
    summary.emplace_back("case3_events", std::to_string(st.events()));
    summary.emplace_back("slices_regular", std::to_string(st.regular));
    summary.emplace_back("slices_null_direction", std::to_string(st.null_direction));
    const double nan = std::numeric_limits<double>::quiet_NaN();
    double rate = nan;
    try {
      rate = fit_damping_rate(ts, we, rc.fit_window);
    } catch (const config_error&) {
    }
    summary.emplace_back("damping_rate", format_number(rate));
    const double k = rc.sim.scenario.wavenumber;
    const int order = rc.sim.grid.order[0];
    const double predicted = recurrence_time_estimate(order, beta0[0], k);
    const auto measured = measure_recurrence(ts, we, rc.recurrence_factor);
    summary.emplace_back("recurrence_time_predicted", format_number(predicted));
    summary.emplace_back("recurrence_time_measured", format_number(measured.value_or(nan)));
    summary.emplace_back("recurrence_constant_fitted",
                         format_number(measured ? *measured * k / (std::sqrt(double(order)) * beta0[0]) : nan));
    detail::write_summary(dir / "summary.csv", summary);
    return ExitCode::success;
  } catch (const io_error& e) {
    log << "i/o error: " << e.what() << "\n";
    return ExitCode::io;
  }
}

} // namespace hvp

#endif // HVP_RUN_HPP
