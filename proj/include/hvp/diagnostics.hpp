#ifndef HVP_DIAGNOSTICS_HPP
#define HVP_DIAGNOSTICS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hvp/core_state.hpp"
#include "hvp/errors.hpp"
#include "hvp/fourier.hpp"
#include "hvp/hermite.hpp"

namespace hvp {

// Recursive halving keeps the summation tree fixed for a given length.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct ConservedQuantities {
  double mass = 0.0;
  std::array<double, 2> momentum{0.0, 0.0};
  double field_energy = 0.0;
  double kinetic_energy = 0.0;
  double l2_norm = 0.0;

  double energy() const noexcept { return field_energy + kinetic_energy; }
};

// Pointwise (rho, rho u_1, rho u_2, energy density) at every collocation point.
struct MomentFields {
  std::vector<double> density;
  std::array<std::vector<double>, 2> momentum;
  std::vector<double> energy;
};

inline MomentFields moment_fields(const SpectralState& state) {
  const auto& g = state.grid();
  const std::size_t s = g.spatial_size();
  MomentFields out{std::vector<double>(s, 0.0), {std::vector<double>(s, 0.0), std::vector<double>(g.dims == 2 ? s : 0, 0.0)},
                   std::vector<double>(s, 0.0)};
  const auto f = state.coeffs();
  if (g.dims == 1) {
    const MomentMatrix m(state.beta(0), g.order[0]);
    for (int k = 0; k <= g.order[0]; ++k) {
      const auto& r = m.row(k);
      const double* row = f.data() + static_cast<std::size_t>(k) * s;
      for (std::size_t j = 0; j < s; ++j) {
        out.density[j] += r[0] * row[j];
        out.momentum[0][j] += r[1] * row[j];
        out.energy[j] += r[2] * row[j];
      }
    }
    return out;
  }
  const MomentMatrix m1(state.beta(0), g.order[0]);
  const MomentMatrix m2(state.beta(1), g.order[1]);
  for (int k1 = 0; k1 <= g.order[0]; ++k1)
    for (int k2 = 0; k2 <= g.order[1]; ++k2) {
      const auto& a = m1.row(k1);
      const auto& b = m2.row(k2);
      // density I0 I0, momentum I1 I0 / I0 I1, energy I2 I0 + I0 I2
      const double w_rho = a[0] * b[0];
      const double w_j1 = a[1] * b[0];
      const double w_j2 = a[0] * b[1];
      const double w_e = a[2] * b[0] + a[0] * b[2];
      if (w_rho == 0.0 && w_j1 == 0.0 && w_j2 == 0.0 && w_e == 0.0) continue;
      const double* row = f.data() + (static_cast<std::size_t>(k1) * g.modes(1) + static_cast<std::size_t>(k2)) * s;
      for (std::size_t j = 0; j < s; ++j) {
        out.density[j] += w_rho * row[j];
        out.momentum[0][j] += w_j1 * row[j];
        out.momentum[1][j] += w_j2 * row[j];
        out.energy[j] += w_e * row[j];
      }
    }
  return out;
}

inline ConservedQuantities conserved_quantities(const SpectralState& state, PoissonSolver& poisson) {
  const auto& g = state.grid();
  const double w = g.cell_volume();
  const auto mf = moment_fields(state);
  ConservedQuantities q;
  q.mass = w * pairwise_sum(mf.density);
  for (int d = 0; d < g.dims; ++d) q.momentum[static_cast<std::size_t>(d)] = w * pairwise_sum(mf.momentum[static_cast<std::size_t>(d)]);
  q.kinetic_energy = 0.5 * w * pairwise_sum(mf.energy);
  q.l2_norm = discrete_l2_norm(state);

  const bool empty = std::all_of(mf.density.begin(), mf.density.end(), [](double x) { return x == 0.0; });
  if (!empty) {
    std::array<std::vector<double>, 2> e{std::vector<double>(g.spatial_size()), std::vector<double>(g.dims == 2 ? g.spatial_size() : 0)};
    poisson.solve(mf.density, {std::span<double>(e[0]), std::span<double>(e[1])});
    std::vector<double> sq(g.spatial_size(), 0.0);
    for (int d = 0; d < g.dims; ++d)
      for (std::size_t j = 0; j < sq.size(); ++j) sq[j] += e[static_cast<std::size_t>(d)][j] * e[static_cast<std::size_t>(d)][j];
    q.field_energy = 0.5 * w * pairwise_sum(sq);
  }
  return q;
}

inline ConservedQuantities conserved_quantities(const SpectralState& state, double neutrality_tol = 1e-10) {
  PoissonSolver poisson(state.grid(), neutrality_tol);
  return conserved_quantities(state, poisson);
}

namespace detail {

inline double relative_change(double now, double base) {
  const double diff = std::fabs(now - base);
  return base == 0.0 ? diff : diff / std::fabs(base);
}

} // namespace detail

// Drifts against the t = 0 baseline: relative for mass, energy, norm; absolute for momentum.
inline DiagnosticsRecord drift_record(const SpectralState& state, const ConservedQuantities& now,
                                      const ConservedQuantities& baseline, std::array<double, 2> indicator = {0.0, 0.0}) {
  DiagnosticsRecord r;
  r.t = state.t();
  r.beta = state.beta();
  r.field_energy = now.field_energy;
  r.kinetic_energy = now.kinetic_energy;
  r.mass_rel_err = detail::relative_change(now.mass, baseline.mass);
  for (std::size_t d = 0; d < 2; ++d) r.momentum_abs_err[d] = std::fabs(now.momentum[d] - baseline.momentum[d]);
  r.energy_rel_err = detail::relative_change(now.energy(), baseline.energy());
  r.l2_rel_err = detail::relative_change(now.l2_norm, baseline.l2_norm);
  r.indicator = indicator;
  return r;
}

inline DiagnosticsRecord drift_record(const SpectralState& state, const ConservedQuantities& baseline,
                                      std::array<double, 2> indicator = {0.0, 0.0}) {
  return drift_record(state, conserved_quantities(state), baseline, indicator);
}

// Samples i with w[i-1] <= w[i] >= w[i+1].
inline std::vector<std::size_t> local_maxima(std::span<const double> w) {
  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < w.size(); ++i)
    if (w[i] >= w[i - 1] && w[i] >= w[i + 1]) peaks.push_back(i);
  return peaks;
}

struct TimeWindow {
  double begin = 0.0;
  double end = 0.0;
};

// Least-squares slope of log sqrt(W_E) through the envelope peaks inside the window.
inline double fit_damping_rate(std::span<const double> t, std::span<const double> field_energy, TimeWindow window) {
  if (t.size() != field_energy.size()) throw config_error("damping fit: series lengths differ");
  std::vector<double> tw, ww;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= window.begin && t[i] <= window.end) {
      tw.push_back(t[i]);
      ww.push_back(field_energy[i]);
    }
  if (tw.size() < 10) throw config_error("damping fit needs at least 10 samples in the window");
  std::vector<double> x, y;
  for (auto i : local_maxima(ww)) {
    if (!(ww[i] > 0.0)) throw config_error("damping fit needs positive field energy at the peaks");
    x.push_back(tw[i]);
    y.push_back(0.5 * std::log(ww[i]));
  }
  if (x.size() < 3)
    throw config_error("damping fit found " + std::to_string(x.size()) + " peaks, needs at least 3");
  const double n = double(x.size());
  const double mx = pairwise_sum(x) / n;
  const double my = pairwise_sum(y) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

// Reference recurrence time pi sqrt(N) beta / k of a Hermite-truncated free-streaming solution.
inline double recurrence_time_estimate(int order, double beta, double k) {
  if (order <= 0 || !(beta > 0.0) || !(k > 0.0)) throw config_error("recurrence estimate needs positive inputs");
  return std::numbers::pi * std::sqrt(double(order)) * beta / k;
}

// First envelope peak exceeding `factor` times the lowest earlier peak.
inline std::optional<double> measure_recurrence(std::span<const double> t, std::span<const double> field_energy,
                                                double factor = 10.0) {
  if (t.size() != field_energy.size()) throw config_error("recurrence: series lengths differ");
  std::optional<double> floor;
  for (auto i : local_maxima(field_energy)) {
    const double w = field_energy[i];
    if (floor && w > factor * *floor) return t[i];
    floor = floor ? std::min(*floor, w) : w;
  }
  return std::nullopt;
}

} // namespace hvp

#endif // HVP_DIAGNOSTICS_HPP
