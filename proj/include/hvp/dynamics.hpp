#ifndef HVP_DYNAMICS_HPP
#define HVP_DYNAMICS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "hvp/core_state.hpp"
#include "hvp/errors.hpp"
#include "hvp/fourier.hpp"
#include "hvp/hermite.hpp"

namespace hvp {

enum class FieldMode {
  self_consistent, // E from the current density at every evaluation
  frozen,          // E fixed by freeze_field
  off,             // E = 0
};

// Scratch for one grid: batched transforms, density and field buffers.
class RhsWorkspace {
public:
  explicit RhsWorkspace(const GridConfig& grid, double neutrality_tol = 1e-10)
      : grid_(grid), poisson_(grid, neutrality_tol),
        flux_(grid.dims, {grid.nx[0], grid.nx[1]}, grid.velocity_size()),
        rho_(grid.spatial_size()), field_{std::vector<double>(grid.spatial_size()),
                                          std::vector<double>(grid.dims == 2 ? grid.spatial_size() : 0)} {
    if (grid.dims == 2) flux2_.emplace_back(2, std::array<int, 2>{grid.nx[0], grid.nx[1]}, grid.velocity_size());
    for (int d = 0; d < grid.dims; ++d) {
      ladder_[static_cast<std::size_t>(d)].resize(grid.modes(d) + 1);
      for (std::size_t k = 0; k <= grid.modes(d); ++k)
        ladder_[static_cast<std::size_t>(d)][k] = std::sqrt(0.5 * double(k));
    }
  }

  const GridConfig& grid() const noexcept { return grid_; }
  PoissonSolver& poisson() noexcept { return poisson_; }

  FieldMode field_mode() const noexcept { return mode_; }
  void use_self_consistent_field() { mode_ = FieldMode::self_consistent; }
  void disable_field() { mode_ = FieldMode::off; }
  void freeze_field(std::span<const double> e1, std::span<const double> e2 = {}) {
    if (e1.size() != grid_.spatial_size() || (grid_.dims == 2 && e2.size() != grid_.spatial_size()))
      throw config_error("frozen field has wrong length");
    std::copy(e1.begin(), e1.end(), field_[0].begin());
    if (grid_.dims == 2) std::copy(e2.begin(), e2.end(), field_[1].begin());
    mode_ = FieldMode::frozen;
  }

  // Density at collocation points of a coefficient tensor.
  std::span<const double> density(const Scaling& beta, std::span<const double> coeffs) {
    std::fill(rho_.begin(), rho_.end(), 0.0);
    const std::size_t s = grid_.spatial_size();
    if (grid_.dims == 1) {
      const MomentMatrix m(beta[0], grid_.order[0]);
      for (int k = 0; k <= grid_.order[0]; k += 2) {
        const double w = m(k, 0);
        const double* f = coeffs.data() + static_cast<std::size_t>(k) * s;
        for (std::size_t j = 0; j < s; ++j) rho_[j] += w * f[j];
      }
      return rho_;
    }
    const MomentMatrix m1(beta[0], grid_.order[0]);
    const MomentMatrix m2(beta[1], grid_.order[1]);
    for (int k1 = 0; k1 <= grid_.order[0]; k1 += 2)
      for (int k2 = 0; k2 <= grid_.order[1]; k2 += 2) {
        const double w = m1(k1, 0) * m2(k2, 0);
        const double* f = coeffs.data() + (static_cast<std::size_t>(k1) * grid_.modes(1) + static_cast<std::size_t>(k2)) * s;
        for (std::size_t j = 0; j < s; ++j) rho_[j] += w * f[j];
      }
    return rho_;
  }

  // Field buffers after the last evaluation.
  std::span<const double> field(int d) const { return field_[static_cast<std::size_t>(d)]; }

  void update_field(const Scaling& beta, std::span<const double> coeffs) {
    if (mode_ == FieldMode::frozen) return;
    if (mode_ == FieldMode::off) {
      for (auto& e : field_) std::fill(e.begin(), e.end(), 0.0);
      return;
    }
    density(beta, coeffs);
    poisson_.solve(rho_, {std::span<double>(field_[0]), std::span<double>(field_[1])});
  }

  double field_max() const {
    double m = 0.0;
    for (int d = 0; d < grid_.dims; ++d)
      for (double e : field_[static_cast<std::size_t>(d)]) m = std::max(m, std::fabs(e));
    return m;
  }

  // Time derivative of `in` into `out`; both hold grid().size() coefficients.
  void evaluate(const Scaling& beta, std::span<const double> in, std::span<double> out) {
    if (in.size() != grid_.size() || out.size() != grid_.size())
      throw config_error("rhs: tensor size does not match workspace grid");
    update_field(beta, in);
    if (grid_.dims == 1)
      evaluate_1d(beta[0], in, out);
    else
      evaluate_2d(beta, in, out);
  }

private:
  void evaluate_1d(double beta, std::span<const double> in, std::span<double> out) {
    const int order = grid_.order[0];
    const std::size_t s = grid_.spatial_size();
    const auto& a = ladder_[0];
    auto flux = flux_.real();
    const double inv_beta = 1.0 / beta;
    const double* e = field_[0].data();
    for (int k = 0; k <= order; ++k) {
      const std::size_t uk = static_cast<std::size_t>(k);
      const double* lo = k > 0 ? in.data() + (uk - 1) * s : nullptr;
      const double* hi = k < order ? in.data() + (uk + 1) * s : nullptr;
      const double alo = a[uk];
      const double ahi = a[uk + 1];
      double* fl = flux.data() + uk * s;
      double* o = out.data() + uk * s;
      for (std::size_t j = 0; j < s; ++j) {
        const double down = lo ? lo[j] : 0.0;
        const double up = hi ? hi[j] : 0.0;
        fl[j] = inv_beta * (alo * down + ahi * up);
        o[j] = e[j] * beta * (ahi * up - alo * down);
      }
    }
    flux_.forward();
    auto spec = flux_.spectrum();
    const std::size_t h = flux_.complex_size();
    const int n = grid_.nx[0];
    const double norm = 1.0 / double(s);
    for (std::size_t b = 0; b < flux_.count(); ++b)
      for (std::size_t i = 0; i < h; ++i) {
        const double kappa = wavenumber(static_cast<int>(i), n, grid_.length[0]) * norm;
        spec[b * h + i] *= cplx(0.0, kappa);
      }
    flux_.inverse();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= flux[i];
  }

  void evaluate_2d(const Scaling& beta, std::span<const double> in, std::span<double> out) {
    const int n1 = grid_.order[0];
    const int n2 = grid_.order[1];
    const std::size_t m2 = grid_.modes(1);
    const std::size_t s = grid_.spatial_size();
    const auto& a1 = ladder_[0];
    const auto& a2 = ladder_[1];
    auto flux1 = flux_.real();
    auto flux2 = flux2_.front().real();
    const double* e1 = field_[0].data();
    const double* e2 = field_[1].data();
    const double ib1 = 1.0 / beta[0];
    const double ib2 = 1.0 / beta[1];
    for (int k1 = 0; k1 <= n1; ++k1)
      for (int k2 = 0; k2 <= n2; ++k2) {
        const std::size_t u1 = static_cast<std::size_t>(k1);
        const std::size_t u2 = static_cast<std::size_t>(k2);
        const std::size_t blk = (u1 * m2 + u2) * s;
        const double* lo1 = k1 > 0 ? in.data() + blk - m2 * s : nullptr;
        const double* hi1 = k1 < n1 ? in.data() + blk + m2 * s : nullptr;
        const double* lo2 = k2 > 0 ? in.data() + blk - s : nullptr;
        const double* hi2 = k2 < n2 ? in.data() + blk + s : nullptr;
        double* f1 = flux1.data() + blk;
        double* f2 = flux2.data() + blk;
        double* o = out.data() + blk;
        for (std::size_t j = 0; j < s; ++j) {
          const double d1 = lo1 ? lo1[j] : 0.0;
          const double u1v = hi1 ? hi1[j] : 0.0;
          const double d2 = lo2 ? lo2[j] : 0.0;
          const double u2v = hi2 ? hi2[j] : 0.0;
          f1[j] = ib1 * (a1[u1] * d1 + a1[u1 + 1] * u1v);
          f2[j] = ib2 * (a2[u2] * d2 + a2[u2 + 1] * u2v);
          o[j] = e1[j] * beta[0] * (a1[u1 + 1] * u1v - a1[u1] * d1) +
                 e2[j] * beta[1] * (a2[u2 + 1] * u2v - a2[u2] * d2);
        }
      }
    flux_.forward();
    flux2_.front().forward();
    auto spec1 = flux_.spectrum();
    auto spec2 = flux2_.front().spectrum();
    const std::size_t h = flux_.complex_size();
    const int nx = grid_.nx[0];
    const int ny = grid_.nx[1];
    const std::size_t hy = static_cast<std::size_t>(ny) / 2 + 1;
    const double norm = 1.0 / double(s);
    for (std::size_t b = 0; b < flux_.count(); ++b)
      for (std::size_t i = 0; i < h; ++i) {
        const double kx = wavenumber(static_cast<int>(i / hy), nx, grid_.length[0]) * norm;
        const double ky = wavenumber(static_cast<int>(i % hy), ny, grid_.length[1]) * norm;
        spec1[b * h + i] = cplx(0.0, kx) * spec1[b * h + i] + cplx(0.0, ky) * spec2[b * h + i];
      }
    flux_.inverse();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= flux1[i];
  }

  GridConfig grid_;
  PoissonSolver poisson_;
  BatchTransform flux_;
  std::vector<BatchTransform> flux2_;
  std::vector<double> rho_;
  std::array<std::vector<double>, 2> field_;
  std::array<std::vector<double>, 2> ladder_;
  FieldMode mode_ = FieldMode::self_consistent;
};

inline std::vector<double> rhs(const SpectralState& state, RhsWorkspace& ws) {
  if (!(ws.grid() == state.grid())) throw config_error("rhs: workspace bound to a different grid");
  std::vector<double> out(state.coeffs().size());
  ws.evaluate(state.beta(), state.coeffs(), out);
  return out;
}

// Classical four-stage Runge-Kutta with persistent stage storage.
class Rk4Stepper {
public:
  explicit Rk4Stepper(const GridConfig& grid, double neutrality_tol = 1e-10)
      : ws_(grid, neutrality_tol), stage_(4, std::vector<double>(grid.size())), tmp_(grid.size()) {}

  RhsWorkspace& workspace() noexcept { return ws_; }

  SpectralState step(const SpectralState& state, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw config_error("time step must be positive");
    const auto f = state.coeffs();
    const auto& beta = state.beta();
    const std::size_t n = f.size();
    static constexpr std::array<double, 3> offsets{0.5, 0.5, 1.0};
    eval_stage(0, beta, f);
    for (int s = 1; s < 4; ++s) {
      const double c = offsets[static_cast<std::size_t>(s) - 1] * dt;
      const auto& prev = stage_[static_cast<std::size_t>(s) - 1];
      for (std::size_t i = 0; i < n; ++i) tmp_[i] = f[i] + c * prev[i];
      eval_stage(s, beta, tmp_);
    }
    std::vector<double> next(n);
    const double w = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i)
      next[i] = f[i] + w * (stage_[0][i] + 2.0 * stage_[1][i] + 2.0 * stage_[2][i] + stage_[3][i]);
    return state.with_coeffs(std::move(next), state.t() + dt);
  }

private:
  void eval_stage(int s, const Scaling& beta, std::span<const double> in) {
    auto& out = stage_[static_cast<std::size_t>(s)];
    ws_.evaluate(beta, in, out);
    for (double v : out)
      if (!std::isfinite(v))
        throw instability_error("non-finite derivative in RK4 stage " + std::to_string(s + 1), s + 1);
  }

  RhsWorkspace ws_;
  std::vector<std::vector<double>> stage_;
  std::vector<double> tmp_;
};

inline SpectralState rk4_step(const SpectralState& state, double dt) {
  Rk4Stepper stepper(state.grid());
  return stepper.step(state, dt);
}

// Advective bound (largest Hermite velocity times largest wavenumber) plus the field ladder term.
inline double compute_dt(const GridConfig& grid, const Scaling& beta, double cfl, double field_max) {
  if (!(cfl > 0.0) || cfl > 1.0) throw config_error("cfl must lie in (0, 1]");
  double rate = 0.0;
  for (int d = 0; d < grid.dims; ++d) {
    const double n = grid.order[d];
    const double b = beta[static_cast<std::size_t>(d)];
    const double v_max = std::sqrt(2.0 * n + 1.0) / b;
    rate += v_max * std::numbers::pi * grid.nx[d] / grid.length[d] + b * std::sqrt((n + 1.0) / 2.0) * field_max;
  }
  return cfl / rate;
}

inline double compute_dt(const SpectralState& state, double cfl, RhsWorkspace& ws) {
  ws.update_field(state.beta(), state.coeffs());
  return compute_dt(state.grid(), state.beta(), cfl, ws.field_max());
}

inline double compute_dt(const SpectralState& state, double cfl) {
  RhsWorkspace ws(state.grid());
  return compute_dt(state, cfl, ws);
}

} // namespace hvp

#endif // HVP_DYNAMICS_HPP
