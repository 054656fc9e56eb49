#ifndef HVP_SCENARIOS_HPP
#define HVP_SCENARIOS_HPP

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "hvp/core_state.hpp"
#include "hvp/errors.hpp"
#include "hvp/fourier.hpp"
#include "hvp/hermite.hpp"

namespace hvp {

enum class Scenario {
  landau_linear_1d,
  landau_nonlinear_1d,
  two_stream_1d,
  bump_on_tail_1d,
  landau_linear_2d,
  two_stream_2d,
  bump_on_tail_2d,
};

inline const std::array<Scenario, 7>& all_scenarios() {
  static const std::array<Scenario, 7> all{Scenario::landau_linear_1d, Scenario::landau_nonlinear_1d,
                                           Scenario::two_stream_1d,    Scenario::bump_on_tail_1d,
                                           Scenario::landau_linear_2d, Scenario::two_stream_2d,
                                           Scenario::bump_on_tail_2d};
  return all;
}

inline std::string to_string(Scenario s) {
  switch (s) {
  case Scenario::landau_linear_1d: return "landau_linear_1d";
  case Scenario::landau_nonlinear_1d: return "landau_nonlinear_1d";
  case Scenario::two_stream_1d: return "two_stream_1d";
  case Scenario::bump_on_tail_1d: return "bump_on_tail_1d";
  case Scenario::landau_linear_2d: return "landau_linear_2d";
  case Scenario::two_stream_2d: return "two_stream_2d";
  case Scenario::bump_on_tail_2d: return "bump_on_tail_2d";
  }
  return "";
}

inline Scenario parse_scenario(const std::string& name) {
  for (auto s : all_scenarios())
    if (to_string(s) == name) return s;
  throw config_error("unknown scenario '" + name + "'");
}

inline std::string describe(Scenario s) {
  switch (s) {
  case Scenario::landau_linear_1d: return "1D1V Maxwellian with a small cosine density perturbation";
  case Scenario::landau_nonlinear_1d: return "1D1V Maxwellian with a large cosine density perturbation";
  case Scenario::two_stream_1d: return "1D1V counter-streaming Gaussian beams";
  case Scenario::bump_on_tail_1d: return "1D1V bulk Maxwellian with a fast beam";
  case Scenario::landau_linear_2d: return "2D2V isotropic Maxwellian, perturbed along both axes";
  case Scenario::two_stream_2d: return "2D2V anisotropic counter-streaming beams";
  case Scenario::bump_on_tail_2d: return "2D2V weakly anisotropic bump-on-tail";
  }
  return "";
}

// weight / sqrt(2 pi variance) * exp(-(v - mean)^2 / (2 variance))
struct GaussianComponent {
  double weight = 1.0;
  double mean = 0.0;
  double variance = 1.0;
};

// f0 = (1 + alpha sum_d cos(k x_d)) prod_d g_d(v_d) with each g_d a Gaussian mixture.
struct ScenarioSpec {
  Scenario name = Scenario::landau_linear_1d;
  int dims = 1;
  double alpha = 0.01;
  double wavenumber = 0.5;
  std::array<std::vector<GaussianComponent>, 2> factors;
  std::array<int, 2> default_nx{32, 0};
  std::array<int, 2> default_order{128, 0};
  Scaling reference_beta{1.0, 1.0}; // fixed scaling of the non-adaptive runs
  double default_t_final = 40.0;

  double default_length() const { return 2.0 * std::numbers::pi / wavenumber; }

  // Components numbered across dimensions: dimension 1 first, then dimension 2.
  std::size_t component_count() const { return factors[0].size() + factors[1].size(); }
  GaussianComponent& component(std::size_t i) {
    return i < factors[0].size() ? factors[0][i] : factors[1].at(i - factors[0].size());
  }
  const GaussianComponent& component(std::size_t i) const {
    return i < factors[0].size() ? factors[0][i] : factors[1].at(i - factors[0].size());
  }

  double factor_mass(int d) const {
    double m = 0.0;
    for (const auto& c : factors[static_cast<std::size_t>(d)]) m += c.weight;
    return m;
  }

  void validate() const {
    if (dims != 1 && dims != 2) throw config_error("scenario dimension must be 1 or 2");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw config_error("scenario.alpha must be >= 0");
    if (!(wavenumber > 0.0) || !std::isfinite(wavenumber)) throw config_error("scenario.k must be positive");
    for (int d = 0; d < dims; ++d) {
      if (factors[static_cast<std::size_t>(d)].empty()) throw config_error("scenario factor has no components");
      for (const auto& c : factors[static_cast<std::size_t>(d)]) {
        if (!(c.weight > 0.0) || !std::isfinite(c.weight)) throw config_error("mixture weights must be positive");
        if (!(c.variance > 0.0) || !std::isfinite(c.variance))
          throw config_error("mixture temperatures must be positive");
        if (!std::isfinite(c.mean)) throw config_error("mixture drift must be finite");
      }
    }
  }
};

inline ScenarioSpec default_scenario(Scenario s) {
  ScenarioSpec spec;
  spec.name = s;
  const GaussianComponent unit{1.0, 0.0, 1.0};
  switch (s) {
  case Scenario::landau_linear_1d:
    spec.alpha = 0.01;
    spec.wavenumber = 0.5;
    spec.factors[0] = {unit};
    spec.default_nx = {32, 0};
    break;
  case Scenario::landau_nonlinear_1d:
    spec.alpha = 0.5;
    spec.wavenumber = 0.5;
    spec.factors[0] = {unit};
    spec.default_nx = {256, 0};
    break;
  case Scenario::two_stream_1d:
    spec.alpha = 0.001;
    spec.wavenumber = 0.5;
    spec.factors[0] = {{0.5, 1.0, 0.25}, {0.5, -1.0, 0.25}};
    spec.default_nx = {192, 0};
    spec.reference_beta = {2.0, 1.0};
    spec.default_t_final = 50.0;
    break;
  case Scenario::bump_on_tail_1d:
    spec.alpha = 0.03;
    spec.wavenumber = 0.3;
    spec.factors[0] = {{0.9, 0.0, 1.0}, {0.1, 4.5, 0.25}};
    spec.default_nx = {256, 0};
    break;
  case Scenario::landau_linear_2d:
    spec.dims = 2;
    spec.alpha = 0.001;
    spec.wavenumber = 0.5;
    spec.factors = {std::vector<GaussianComponent>{unit}, std::vector<GaussianComponent>{unit}};
    spec.default_nx = {20, 20};
    spec.default_order = {32, 32};
    break;
  case Scenario::two_stream_2d:
    spec.dims = 2;
    spec.alpha = 0.05;
    spec.wavenumber = 0.15;
    spec.factors = {std::vector<GaussianComponent>{{0.5, 2.5, 1.0}, {0.5, -2.5, 1.0}},
                    std::vector<GaussianComponent>{{0.5, 3.5, 2.0}, {0.5, -3.5, 2.0}}};
    spec.default_nx = {96, 96};
    spec.default_order = {32, 32};
    spec.reference_beta = {1.0, 1.0 / std::numbers::sqrt2};
    break;
  case Scenario::bump_on_tail_2d:
    spec.dims = 2;
    spec.alpha = 0.05;
    spec.wavenumber = 0.3;
    spec.factors = {std::vector<GaussianComponent>{{0.9, 0.0, 1.0}, {0.1, 4.5, 0.25}},
                    std::vector<GaussianComponent>{{0.85, 0.0, 1.0}, {0.1, 4.5, 0.25}, {0.05, -4.5, 0.25}}};
    spec.default_nx = {64, 64};
    spec.default_order = {32, 32};
    break;
  }
  return spec;
}

// Exact overlaps a_k = int H_k^beta(v) g(v) dv of one Gaussian, by the three-term recurrence
//   sqrt((k+1)/2) (beta + 1/(theta beta)) a_{k+1} = (u/theta) a_k + sqrt(k/2) (beta - 1/(theta beta)) a_{k-1}.
inline std::vector<double> gaussian_expansion(const GaussianComponent& c, double beta, int order) {
  if (!(beta > 0.0)) throw config_error("expansion needs beta > 0");
  std::vector<double> a(static_cast<std::size_t>(order) + 1, 0.0);
  const double theta = c.variance;
  const double u = c.mean;
  const double amp = c.weight / std::sqrt(2.0 * std::numbers::pi * theta);
  const double curv = beta * beta + 1.0 / theta;
  a[0] = std::sqrt(beta) * detail::inv_pi_quarter * amp * std::sqrt(2.0 * std::numbers::pi / curv) *
         std::exp(-0.5 * u * u * beta * beta / (1.0 + beta * beta * theta));
  const double inv_tb = 1.0 / (theta * beta);
  const double plus = beta + inv_tb;
  const double minus = beta - inv_tb;
  const double drift = u / theta;
  for (int k = 0; k < order; ++k) {
    const double prev = k > 0 ? a[static_cast<std::size_t>(k) - 1] : 0.0;
    a[static_cast<std::size_t>(k) + 1] =
        (drift * a[static_cast<std::size_t>(k)] + std::sqrt(0.5 * k) * minus * prev) / (std::sqrt(0.5 * (k + 1)) * plus);
  }
  return a;
}

// Expansion of the velocity factor g_dim at scaling beta.
inline std::vector<double> velocity_expansion(const ScenarioSpec& spec, int dim, double beta, int order) {
  std::vector<double> sum(static_cast<std::size_t>(order) + 1, 0.0);
  for (const auto& c : spec.factors.at(static_cast<std::size_t>(dim))) {
    const auto a = gaussian_expansion(c, beta, order);
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += a[k];
  }
  return sum;
}

// Exact squared L2 norm of a velocity factor.
inline double factor_norm_squared(const ScenarioSpec& spec, int dim) {
  double s = 0.0;
  for (const auto& a : spec.factors.at(static_cast<std::size_t>(dim)))
    for (const auto& b : spec.factors.at(static_cast<std::size_t>(dim))) {
      const double var = a.variance + b.variance;
      const double du = a.mean - b.mean;
      s += a.weight * b.weight / std::sqrt(2.0 * std::numbers::pi * var) * std::exp(-0.5 * du * du / var);
    }
  return s;
}

// (1 + alpha sum_d cos(k x_d)) at the collocation points.
inline std::vector<double> spatial_modulation(const ScenarioSpec& spec, const GridConfig& grid) {
  std::vector<double> s(grid.spatial_size());
  const double k = spec.wavenumber;
  if (grid.dims == 1) {
    const double dx = grid.length[0] / grid.nx[0];
    for (int j = 0; j < grid.nx[0]; ++j) s[static_cast<std::size_t>(j)] = 1.0 + spec.alpha * std::cos(k * dx * j);
    return s;
  }
  const double dx = grid.length[0] / grid.nx[0];
  const double dy = grid.length[1] / grid.nx[1];
  for (int i = 0; i < grid.nx[0]; ++i)
    for (int j = 0; j < grid.nx[1]; ++j)
      s[static_cast<std::size_t>(i) * static_cast<std::size_t>(grid.nx[1]) + static_cast<std::size_t>(j)] =
          1.0 + spec.alpha * std::cos(k * dx * i) + spec.alpha * std::cos(k * dy * j);
  return s;
}

struct ScenarioBuild {
  SpectralState state;
  double analytic_rho0 = 1.0;
  std::array<double, 2> truncation_tail{0.0, 0.0}; // relative L2 tail of each velocity factor
  std::vector<std::string> warnings;
};

// Builds the tensor for `spec` on `grid` (grid.rho0 is replaced by the discrete mean density).
inline ScenarioBuild build_initial_state(const ScenarioSpec& spec, GridConfig grid, Scaling beta,
                                         double tail_warn = 1e-6) {
  spec.validate();
  if (spec.dims != grid.dims)
    throw config_error("scenario " + to_string(spec.name) + " is " + std::to_string(spec.dims) +
                       "D but the grid is " + std::to_string(grid.dims) + "D");
  grid.validate();
  for (int d = 0; d < grid.dims; ++d) {
    const double periods = grid.length[d] * spec.wavenumber / (2.0 * std::numbers::pi);
    if (std::fabs(periods - std::round(periods)) > 1e-9 || std::round(periods) < 1.0)
      throw config_error("domain length must hold an integer number of perturbation wavelengths");
  }
  std::array<std::vector<double>, 2> factor;
  std::array<double, 2> tail{0.0, 0.0};
  std::vector<std::string> warnings;
  double discrete_mass = 1.0;
  double analytic = 1.0;
  for (int d = 0; d < grid.dims; ++d) {
    const auto ud = static_cast<std::size_t>(d);
    factor[ud] = velocity_expansion(spec, d, beta[ud], grid.order[d]);
    const double exact = factor_norm_squared(spec, d);
    const double kept = sum_squares(factor[ud]);
    tail[ud] = std::sqrt(std::max(0.0, exact - kept) / exact);
    if (tail[ud] > tail_warn)
      warnings.push_back("velocity factor " + std::to_string(d + 1) + " truncation tail " + std::to_string(tail[ud]) +
                         " exceeds " + std::to_string(tail_warn));
    discrete_mass *= macroscopic_moments(factor[ud], MomentMatrix(beta[ud], grid.order[d]))[0];
    analytic *= spec.factor_mass(d);
  }
  const auto mod = spatial_modulation(spec, grid);
  const auto s = mod.size();
  double mean_mod = 0.0;
  for (double m : mod) mean_mod += m;
  mean_mod /= double(s);
  grid.rho0 = discrete_mass * mean_mod;
  if (std::fabs(grid.rho0 - analytic) > 1e-10 * analytic)
    warnings.push_back("discrete mean density " + std::to_string(grid.rho0) + " differs from analytic " +
                       std::to_string(analytic) + "; using the discrete value as background");

  std::vector<double> coeffs(grid.size());
  if (grid.dims == 1) {
    for (std::size_t k = 0; k < factor[0].size(); ++k)
      for (std::size_t j = 0; j < s; ++j) coeffs[k * s + j] = factor[0][k] * mod[j];
  } else {
    const std::size_t m2 = factor[1].size();
    for (std::size_t k1 = 0; k1 < factor[0].size(); ++k1)
      for (std::size_t k2 = 0; k2 < m2; ++k2) {
        const double a = factor[0][k1] * factor[1][k2];
        double* out = coeffs.data() + (k1 * m2 + k2) * s;
        for (std::size_t j = 0; j < s; ++j) out[j] = a * mod[j];
      }
  }
  return {SpectralState(grid, beta, std::move(coeffs), 0.0), analytic, tail, std::move(warnings)};
}

} // namespace hvp

#endif // HVP_SCENARIOS_HPP
