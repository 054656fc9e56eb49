#ifndef HVP_CORE_STATE_HPP
#define HVP_CORE_STATE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hvp/errors.hpp"

namespace hvp {

// Phase-space discretisation. Spatial and velocity dimension are equal.
struct GridConfig {
  int dims = 1;
  std::array<double, 2> length{0.0, 0.0};
  std::array<int, 2> nx{0, 0};    // Fourier collocation points per spatial axis
  std::array<int, 2> order{0, 0}; // Hermite order N per velocity axis (N+1 modes)
  double rho0 = 1.0;

  static GridConfig one_d(double length, int nx, int order, double rho0 = 1.0) {
    GridConfig g;
    g.dims = 1;
    g.length = {length, 0.0};
    g.nx = {nx, 0};
    g.order = {order, 0};
    g.rho0 = rho0;
    return g;
  }

  static GridConfig two_d(std::array<double, 2> length, std::array<int, 2> nx,
                          std::array<int, 2> order, double rho0 = 1.0) {
    GridConfig g;
    g.dims = 2;
    g.length = length;
    g.nx = nx;
    g.order = order;
    g.rho0 = rho0;
    return g;
  }

  void validate() const {
    if (dims != 1 && dims != 2)
      throw config_error("grid dimension must be 1 or 2, got " + std::to_string(dims));
    for (int d = 0; d < dims; ++d) {
      if (order[d] < 2) throw config_error("Hermite order must be >= 2");
      if (order[d] % 2 != 0)
        throw config_error("odd Hermite order " + std::to_string(order[d]) +
                           " (conservation requires an even order)");
      if (nx[d] < 2) throw config_error("Fourier order must be >= 2");
      if (nx[d] % 2 != 0)
        throw config_error("odd Fourier order " + std::to_string(nx[d]));
      if (!(length[d] > 0.0) || !std::isfinite(length[d]))
        throw config_error("domain length must be positive and finite");
    }
    if (!(rho0 > 0.0) || !std::isfinite(rho0))
      throw config_error("background density must be positive and finite");
  }

  // Hermite modes along one velocity axis.
  std::size_t modes(int d) const { return static_cast<std::size_t>(order[d]) + 1; }

  std::size_t velocity_size() const { return dims == 1 ? modes(0) : modes(0) * modes(1); }

  std::size_t spatial_size() const {
    return dims == 1 ? static_cast<std::size_t>(nx[0])
                     : static_cast<std::size_t>(nx[0]) * static_cast<std::size_t>(nx[1]);
  }

  std::size_t size() const { return velocity_size() * spatial_size(); }

  // Quadrature weight of one collocation point.
  double cell_volume() const {
    double w = 1.0;
    for (int d = 0; d < dims; ++d) w *= length[d] / nx[d];
    return w;
  }

  double domain_volume() const {
    double v = 1.0;
    for (int d = 0; d < dims; ++d) v *= length[d];
    return v;
  }

  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

// Per-axis scaling factors; unused trailing entries stay at 1.
using Scaling = std::array<double, 2>;

// Coefficients laid out velocity-major: index ((k1 * (N2+1) + k2) * Nx + j1) * Ny + j2,
// which in 1D reduces to k * Nx + j. Every velocity mode owns a contiguous spatial block.
class SpectralState {
public:
  SpectralState(GridConfig grid, Scaling beta, std::vector<double> coeffs, double t = 0.0)
      : grid_(std::move(grid)), beta_(beta), coeffs_(std::move(coeffs)), t_(t) {
    grid_.validate();
    if (coeffs_.size() != grid_.size())
      throw config_error("coefficient tensor has " + std::to_string(coeffs_.size()) +
                         " entries, grid expects " + std::to_string(grid_.size()));
    for (int d = 0; d < grid_.dims; ++d)
      if (!(beta_[d] > 0.0) || !std::isfinite(beta_[d]))
        throw config_error("scaling factor must be positive and finite");
    for (int d = grid_.dims; d < 2; ++d) beta_[d] = 1.0;
    if (!std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return std::isfinite(c); }))
      throw config_error("non-finite coefficient in state");
    if (!std::isfinite(t_)) throw config_error("non-finite state time");
  }

  const GridConfig& grid() const noexcept { return grid_; }
  const Scaling& beta() const noexcept { return beta_; }
  double beta(int d) const { return beta_.at(static_cast<std::size_t>(d)); }
  std::span<const double> coeffs() const noexcept { return coeffs_; }
  double t() const noexcept { return t_; }

  std::size_t index(int k, int j) const {
    return static_cast<std::size_t>(k) * grid_.spatial_size() + static_cast<std::size_t>(j);
  }
  std::size_t index(int k1, int k2, int j1, int j2) const {
    const std::size_t vel = static_cast<std::size_t>(k1) * grid_.modes(1) + static_cast<std::size_t>(k2);
    return (vel * static_cast<std::size_t>(grid_.nx[0]) + static_cast<std::size_t>(j1)) *
               static_cast<std::size_t>(grid_.nx[1]) +
           static_cast<std::size_t>(j2);
  }

  SpectralState with_coeffs(std::vector<double> coeffs, double t) const {
    return SpectralState(grid_, beta_, std::move(coeffs), t);
  }
  SpectralState with_coeffs(std::vector<double> coeffs) const { return with_coeffs(std::move(coeffs), t_); }
  SpectralState with_scaling(Scaling beta, std::vector<double> coeffs) const {
    return SpectralState(grid_, beta, std::move(coeffs), t_);
  }

private:
  GridConfig grid_;
  Scaling beta_;
  std::vector<double> coeffs_;
  double t_;
};

inline SpectralState new_state(const GridConfig& grid, Scaling beta, std::vector<double> coeffs) {
  return SpectralState(grid, beta, std::move(coeffs), 0.0);
}

// Sum of squares with a running max-abs rescale, robust against overflow and underflow.
inline double sum_squares(std::span<const double> values) {
  double scale = 0.0;
  double acc = 1.0;
  for (double v : values) {
    const double a = std::fabs(v);
    if (a == 0.0) continue;
    if (a > scale) {
      const double r = scale / a;
      acc = 1.0 + acc * r * r;
      scale = a;
    } else {
      const double r = a / scale;
      acc += r * r;
    }
  }
  return scale == 0.0 ? 0.0 : scale * scale * acc;
}

// ||f|| over phase space; the velocity basis is orthonormal and collocation is exact in x.
inline double discrete_l2_norm(const SpectralState& state) {
  const double s = state.grid().cell_volume() * sum_squares(state.coeffs());
  if (!std::isfinite(s)) throw instability_error("non-finite L2 norm");
  return std::sqrt(s);
}

struct DiagnosticsRecord {
  double t = 0.0;
  Scaling beta{1.0, 1.0};
  double field_energy = 0.0;
  double kinetic_energy = 0.0;
  double mass_rel_err = 0.0;
  std::array<double, 2> momentum_abs_err{0.0, 0.0};
  double energy_rel_err = 0.0;
  double l2_rel_err = 0.0;
  std::array<double, 2> indicator{0.0, 0.0};
};

} // namespace hvp

#endif // HVP_CORE_STATE_HPP
