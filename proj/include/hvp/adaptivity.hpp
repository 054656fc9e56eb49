#ifndef HVP_ADAPTIVITY_HPP
#define HVP_ADAPTIVITY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hvp/core_state.hpp"
#include "hvp/errors.hpp"
#include "hvp/projection.hpp"

namespace hvp {

struct AdaptivityParams {
  double q0 = 0.999;
  double beta_min = 0.1;
  double beta_max = 30.0;
  double eta_l = 0.9992;
  double eta_h = 1.0008;
  double floor = 1e-13;
  int max_iterations = 10000;

  void validate() const {
    if (!(q0 > 0.0 && q0 < 1.0)) throw config_error("adaptivity.q0 must lie in (0, 1)");
    if (!(beta_min > 0.0) || !(beta_min < beta_max) || !std::isfinite(beta_max))
      throw config_error("adaptivity requires 0 < beta_min < beta_max");
    if (!(eta_l < 1.0) || !(eta_l > 0.0)) throw config_error("adaptivity.eta_l must lie in (0, 1)");
    if (!(eta_h > 1.0) || !std::isfinite(eta_h)) throw config_error("adaptivity.eta_h must exceed 1");
    if (!(floor > 0.0)) throw config_error("adaptivity.f0_floor must be positive");
    if (max_iterations < 1) throw config_error("line-search iteration cap must be positive");
  }
};

// Number of trailing modes that make up the high-frequency tail.
inline int tail_modes(int order) { return std::max(order / 3, 2); }

namespace detail {

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

} // namespace detail

// Tail fraction of a single velocity slice.
inline double tail_ratio(std::span<const double> coeffs) {
  const int order = static_cast<int>(coeffs.size()) - 1;
  const double scale = detail::max_abs(coeffs);
  if (scale == 0.0) return 0.0;
  const std::size_t first_tail = static_cast<std::size_t>(order - tail_modes(order) + 1);
  double tail = 0.0, total = 0.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    const double r = coeffs[k] / scale;
    total += r * r;
    if (k >= first_tail) tail += r * r;
  }
  return std::sqrt(tail / total);
}

// Share of the squared coefficient mass carried by the top modes along one velocity axis.
inline double frequency_indicator(const SpectralState& state, int dim) {
  const auto view = detail::axis_view(state.grid(), dim);
  const auto f = state.coeffs();
  const double scale = detail::max_abs(f);
  if (scale == 0.0) return 0.0;
  const int order = state.grid().order[dim];
  const std::size_t first_tail = static_cast<std::size_t>(order - tail_modes(order) + 1);
  double tail = 0.0, total = 0.0;
  for (std::size_t o = 0; o < view.outer; ++o)
    for (std::size_t k = 0; k < view.modes; ++k) {
      const double* row = f.data() + (o * view.modes + k) * view.inner;
      double part = 0.0;
      for (std::size_t c = 0; c < view.inner; ++c) {
        const double r = row[c] / scale;
        part += r * r;
      }
      total += part;
      if (k >= first_tail) tail += part;
    }
  return std::sqrt(tail / total);
}

// Admissible scalings anchor * q0^m inside [beta_min, beta_max].
class ScalingSet {
public:
  ScalingSet() = default;
  ScalingSet(double anchor, const AdaptivityParams& p) : anchor_(anchor), q0_(p.q0) {
    const double lq = std::log(p.q0);
    lo_ = static_cast<long>(std::ceil(std::log(p.beta_max / anchor) / lq)) - 1;
    hi_ = static_cast<long>(std::floor(std::log(p.beta_min / anchor) / lq)) + 1;
    while (lo_ <= hi_ && beta(lo_) > p.beta_max) ++lo_;
    while (hi_ >= lo_ && beta(hi_) < p.beta_min) --hi_;
    if (lo_ > hi_) throw config_error("admissible scaling set is empty for the given bounds");
  }

  double anchor() const noexcept { return anchor_; }
  long lowest_exponent() const noexcept { return lo_; }
  long highest_exponent() const noexcept { return hi_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(hi_ - lo_ + 1); }
  bool contains(long m) const noexcept { return m >= lo_ && m <= hi_; }
  double beta(long m) const { return anchor_ * std::pow(q0_, static_cast<double>(m)); }

private:
  double anchor_ = 1.0;
  double q0_ = 0.999;
  long lo_ = 0;
  long hi_ = 0;
};

// Per-dimension position on the admissible set and the reference indicator.
class AdaptivityController {
public:
  AdaptivityController(AdaptivityParams params, int dims) : params_(params), dims_(dims) {
    params_.validate();
    if (dims != 1 && dims != 2) throw config_error("controller dimension must be 1 or 2");
    for (int d = 0; d < dims; ++d) sets_[static_cast<std::size_t>(d)] = ScalingSet(1.0, params_);
  }

  const AdaptivityParams& params() const noexcept { return params_; }
  int dims() const noexcept { return dims_; }

  // Places dimension `dim` at anchor * q0^m; the anchor itself need not be admissible-grid aligned.
  void place(int dim, double anchor, long exponent, double reference) {
    auto& set = sets_.at(static_cast<std::size_t>(dim));
    set = ScalingSet(anchor, params_);
    if (!set.contains(exponent)) throw config_error("initial scaling outside [beta_min, beta_max]");
    exponent_[static_cast<std::size_t>(dim)] = exponent;
    reference_[static_cast<std::size_t>(dim)] = reference;
  }

  const ScalingSet& set(int dim) const { return sets_.at(static_cast<std::size_t>(dim)); }
  long exponent(int dim) const { return exponent_.at(static_cast<std::size_t>(dim)); }
  double beta(int dim) const { return set(dim).beta(exponent(dim)); }
  double reference(int dim) const { return reference_.at(static_cast<std::size_t>(dim)); }

  void move(int dim, long exponent, double reference) {
    if (!set(dim).contains(exponent)) throw config_error("scaling exponent outside admissible set");
    exponent_[static_cast<std::size_t>(dim)] = exponent;
    reference_[static_cast<std::size_t>(dim)] = reference;
  }

  // Indicator values that leave the scaling alone.
  bool accepts(int dim, double indicator) const {
    if (indicator <= params_.floor) return true;
    const double ref = reference(dim);
    return indicator >= params_.eta_l * ref && indicator <= params_.eta_h * ref;
  }

private:
  AdaptivityParams params_;
  int dims_;
  std::array<ScalingSet, 2> sets_{};
  std::array<long, 2> exponent_{0, 0};
  std::array<double, 2> reference_{0.0, 0.0};
};

// Velocity expansion of one factor of a separable initial condition: (dim, beta, order) -> N+1 coefficients.
template <class F>
concept VelocityExpansion = requires(const F& f, int dim, double beta, int order) {
  { f(dim, beta, order) } -> std::convertible_to<std::vector<double>>;
};

namespace detail {

// Index of the minimum; an exact tie spanning a contiguous run resolves to its middle.
inline std::size_t tie_broken_argmin(std::span<const double> values) {
  const auto first = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  std::size_t run_end = first;
  while (run_end + 1 < values.size() && values[run_end + 1] == values[first]) ++run_end;
  return first + (run_end - first) / 2;
}

} // namespace detail

struct InitialScaling {
  Scaling beta{1.0, 1.0};
  std::array<double, 2> indicator{0.0, 0.0};
  std::array<long, 2> exponent{0, 0};
};

// Minimises the indicator of each velocity factor over the admissible set and anchors the controller.
template <VelocityExpansion F0>
InitialScaling init_scaling(const F0& f0, const GridConfig& grid, AdaptivityController& ctrl) {
  if (ctrl.dims() != grid.dims) throw config_error("controller and grid dimensions differ");
  InitialScaling out;
  for (int d = 0; d < grid.dims; ++d) {
    const ScalingSet set(1.0, ctrl.params());
    if (set.size() == 0) throw config_error("admissible scaling set is empty");
    std::vector<double> values;
    values.reserve(set.size());
    for (long m = set.lowest_exponent(); m <= set.highest_exponent(); ++m)
      values.push_back(tail_ratio(f0(d, set.beta(m), grid.order[d])));
    const std::size_t best = detail::tie_broken_argmin(values);
    const long m = set.lowest_exponent() + static_cast<long>(best);
    ctrl.place(d, 1.0, m, values[best]);
    out.beta[static_cast<std::size_t>(d)] = set.beta(m);
    out.indicator[static_cast<std::size_t>(d)] = values[best];
    out.exponent[static_cast<std::size_t>(d)] = m;
  }
  return out;
}

struct AdaptReport {
  int dim = 0;
  bool changed = false;
  double indicator_before = 0.0;
  double indicator_after = 0.0;
  double beta_before = 1.0;
  double beta_after = 1.0;
  int iterations = 0;
  ProjectionStats stats;
};

struct AdaptResult {
  SpectralState state;
  AdaptReport report;
};

// Bidirectional line search over the admissible set for one velocity dimension.
// The controller and state are updated together or not at all.
// Stepping back onto the exponent just left counts as a local minimum: a projection
// round trip is not the identity, so a back-and-forth walk would keep shaving the
// indicator without moving along the set.
inline AdaptResult adapt_scaling(const SpectralState& state, int dim, AdaptivityController& ctrl,
                                 const ProjectionConfig& projection) {
  AdaptReport report;
  report.dim = dim;
  report.beta_before = state.beta(dim);
  report.beta_after = report.beta_before;
  const double start = frequency_indicator(state, dim);
  report.indicator_before = start;
  report.indicator_after = start;
  if (std::fabs(state.beta(dim) - ctrl.beta(dim)) > 1e-12 * ctrl.beta(dim))
    throw config_error("state scaling does not match the controller");
  if (ctrl.accepts(dim, start)) return {state, report};

  const ScalingSet& set = ctrl.set(dim);
  long m = ctrl.exponent(dim);
  SpectralState current = state;
  double indicator = start;
  ProjectionStats stats;
  int iter = 0;
  std::optional<long> came_from;
  while (true) {
    if (++iter > ctrl.params().max_iterations)
      throw config_error("scaling line search exceeded " + std::to_string(ctrl.params().max_iterations) +
                         " iterations");
    long best_m = m;
    double best = indicator;
    std::optional<ProjectedState> best_state;
    for (long cand : {m + 1, m - 1}) {
      if (!set.contains(cand)) continue;
      auto projected = project_state(current, dim, set.beta(cand), projection);
      const double value = frequency_indicator(projected.state, dim);
      if (value < best) {
        best = value;
        best_m = cand;
        best_state.emplace(std::move(projected));
      }
    }
    if (!best_state || best_m == came_from) break;
    came_from = m;
    current = std::move(best_state->state);
    stats += best_state->stats;
    m = best_m;
    indicator = best;
    if (ctrl.accepts(dim, indicator)) break;
  }
  report.iterations = iter;
  if (m != ctrl.exponent(dim)) {
    ctrl.move(dim, m, indicator);
    report.changed = true;
    report.beta_after = current.beta(dim);
    report.indicator_after = indicator;
    report.stats = stats;
  }
  return {std::move(current), report};
}

} // namespace hvp

#endif // HVP_ADAPTIVITY_HPP
