#ifndef HVP_FOURIER_HPP
#define HVP_FOURIER_HPP

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hvp/core_state.hpp"
#include "hvp/errors.hpp"

namespace hvp {

using cplx = std::complex<double>;

namespace detail {

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const noexcept { fftw_destroy_plan(p); }
};
using FftwPlan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

inline fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

// Signed mode number of FFT slot i.
inline int signed_mode(int i, int n) { return i <= n / 2 ? i : i - n; }

} // namespace detail

// Angular wavenumber of FFT slot i with the Nyquist slot zeroed.
inline double wavenumber(int i, int n, double length) {
  if (2 * i == n) return 0.0;
  return 2.0 * std::numbers::pi * detail::signed_mode(i, n) / length;
}

// r2c / c2r transforms of `count` contiguous real blocks sharing one 1D or 2D shape.
// Unnormalised in both directions; the inverse consumes its complex input.
class BatchTransform {
public:
  BatchTransform(int dims, std::array<int, 2> shape, std::size_t count)
      : dims_(dims), shape_(shape), count_(count) {
    if (dims != 1 && dims != 2) throw config_error("transform dimension must be 1 or 2");
    real_size_ = dims == 1 ? static_cast<std::size_t>(shape[0])
                           : static_cast<std::size_t>(shape[0]) * static_cast<std::size_t>(shape[1]);
    const int last = dims == 1 ? shape[0] : shape[1];
    complex_size_ = real_size_ / static_cast<std::size_t>(last) * (static_cast<std::size_t>(last) / 2 + 1);
    real_.assign(real_size_ * count_, 0.0);
    spec_.assign(complex_size_ * count_, cplx{});
    int n[2] = {shape[0], shape[1]};
    forward_.reset(fftw_plan_many_dft_r2c(dims, n, static_cast<int>(count_), real_.data(), nullptr, 1,
                                          static_cast<int>(real_size_), detail::as_fftw(spec_.data()), nullptr, 1,
                                          static_cast<int>(complex_size_), FFTW_ESTIMATE));
    inverse_.reset(fftw_plan_many_dft_c2r(dims, n, static_cast<int>(count_), detail::as_fftw(spec_.data()),
                                          nullptr, 1, static_cast<int>(complex_size_), real_.data(), nullptr, 1,
                                          static_cast<int>(real_size_), FFTW_ESTIMATE));
    if (!forward_ || !inverse_) throw config_error("FFTW plan creation failed");
  }

  BatchTransform(const BatchTransform&) = delete;
  BatchTransform& operator=(const BatchTransform&) = delete;
  BatchTransform(BatchTransform&&) noexcept = default;
  BatchTransform& operator=(BatchTransform&&) noexcept = default;

  std::span<double> real() noexcept { return real_; }
  std::span<cplx> spectrum() noexcept { return spec_; }
  std::size_t real_size() const noexcept { return real_size_; }
  std::size_t complex_size() const noexcept { return complex_size_; }
  std::size_t count() const noexcept { return count_; }

  void forward() { fftw_execute(forward_.get()); }
  void inverse() { fftw_execute(inverse_.get()); }

private:
  int dims_;
  std::array<int, 2> shape_;
  std::size_t count_;
  std::size_t real_size_ = 0;
  std::size_t complex_size_ = 0;
  std::vector<double> real_;
  std::vector<cplx> spec_;
  detail::FftwPlan forward_;
  detail::FftwPlan inverse_;
};

// Full complex spectrum in FFT slot order; mode l sits in slot l mod n.
class FourierField {
public:
  FourierField(int dims, std::array<int, 2> n, std::array<double, 2> length, std::vector<cplx> modes)
      : dims_(dims), n_(n), length_(length), modes_(std::move(modes)) {}

  int dims() const noexcept { return dims_; }
  int size(int d) const { return n_[static_cast<std::size_t>(d)]; }
  double length(int d) const { return length_[static_cast<std::size_t>(d)]; }
  std::span<const cplx> data() const noexcept { return modes_; }

  cplx mode(int l) const { return modes_[slot(l, n_[0])]; }
  cplx mode(int l1, int l2) const {
    return modes_[slot(l1, n_[0]) * static_cast<std::size_t>(n_[1]) + slot(l2, n_[1])];
  }

private:
  static std::size_t slot(int l, int n) {
    if (l < -n / 2 || l > n / 2) throw config_error("mode index out of range");
    return static_cast<std::size_t>(((l % n) + n) % n);
  }

  int dims_;
  std::array<int, 2> n_;
  std::array<double, 2> length_;
  std::vector<cplx> modes_;
};

namespace detail {

inline void check_length(std::size_t size, int n) {
  if (n <= 0) throw config_error("empty transform");
  if (n % 2 != 0) throw config_error("transform length must be even, got " + std::to_string(n));
  if (size != static_cast<std::size_t>(n)) throw config_error("transform length mismatch");
}

} // namespace detail

// Mode l = (1/n) sum_j values_j exp(-2 pi i l j / n).
inline FourierField dft_forward(std::span<const double> values, double length) {
  const int n = static_cast<int>(values.size());
  detail::check_length(values.size(), n);
  BatchTransform tr(1, {n, 0}, 1);
  std::copy(values.begin(), values.end(), tr.real().begin());
  tr.forward();
  std::vector<cplx> modes(static_cast<std::size_t>(n));
  const auto half = tr.spectrum();
  for (int i = 0; i <= n / 2; ++i) modes[static_cast<std::size_t>(i)] = half[static_cast<std::size_t>(i)] / double(n);
  for (int i = n / 2 + 1; i < n; ++i)
    modes[static_cast<std::size_t>(i)] = std::conj(modes[static_cast<std::size_t>(n - i)]);
  return FourierField(1, {n, 0}, {length, 0.0}, std::move(modes));
}

inline FourierField dft_forward(std::span<const double> values, std::array<int, 2> n, std::array<double, 2> length) {
  detail::check_length(static_cast<std::size_t>(n[0]), n[0]);
  detail::check_length(static_cast<std::size_t>(n[1]), n[1]);
  if (values.size() != static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]))
    throw config_error("transform length mismatch");
  BatchTransform tr(2, n, 1);
  std::copy(values.begin(), values.end(), tr.real().begin());
  tr.forward();
  const std::size_t n1 = static_cast<std::size_t>(n[1]);
  const std::size_t h = n1 / 2 + 1;
  const double scale = 1.0 / (double(n[0]) * double(n[1]));
  std::vector<cplx> modes(static_cast<std::size_t>(n[0]) * n1);
  const auto half = tr.spectrum();
  for (std::size_t i = 0; i < static_cast<std::size_t>(n[0]); ++i) {
    for (std::size_t j = 0; j < h; ++j) modes[i * n1 + j] = half[i * h + j] * scale;
  }
  for (std::size_t i = 0; i < static_cast<std::size_t>(n[0]); ++i) {
    const std::size_t mi = (static_cast<std::size_t>(n[0]) - i) % static_cast<std::size_t>(n[0]);
    for (std::size_t j = h; j < n1; ++j) modes[i * n1 + j] = std::conj(modes[mi * n1 + (n1 - j)]);
  }
  return FourierField(2, n, length, std::move(modes));
}

// Real part of the inverse sum; assumes conjugate-symmetric modes.
inline std::vector<double> dft_inverse(const FourierField& field) {
  const auto modes = field.data();
  if (field.dims() == 1) {
    const int n = field.size(0);
    BatchTransform tr(1, {n, 0}, 1);
    auto half = tr.spectrum();
    for (int i = 0; i <= n / 2; ++i) half[static_cast<std::size_t>(i)] = modes[static_cast<std::size_t>(i)];
    tr.inverse();
    return {tr.real().begin(), tr.real().end()};
  }
  const std::array<int, 2> n{field.size(0), field.size(1)};
  BatchTransform tr(2, n, 1);
  const std::size_t n1 = static_cast<std::size_t>(n[1]);
  const std::size_t h = n1 / 2 + 1;
  auto half = tr.spectrum();
  for (std::size_t i = 0; i < static_cast<std::size_t>(n[0]); ++i)
    for (std::size_t j = 0; j < h; ++j) half[i * h + j] = modes[i * n1 + j];
  tr.inverse();
  return {tr.real().begin(), tr.real().end()};
}

// Physical field E = -grad(phi) with -lap(phi) = rho0 - rho on the periodic box.
// The Nyquist wavenumber is treated as zero, so that mode carries no field.
class PoissonSolver {
public:
  explicit PoissonSolver(const GridConfig& grid, double neutrality_tol = 1e-10)
      : grid_(grid), neutrality_tol_(neutrality_tol),
        tr_(grid.dims, {grid.nx[0], grid.nx[1]}, 1), work_(tr_.complex_size()) {
    grid_.validate();
  }

  double neutrality_tolerance() const noexcept { return neutrality_tol_; }
  void set_neutrality_tolerance(double tol) { neutrality_tol_ = tol; }

  // Writes E components (one per spatial axis) into `field[d]`.
  void solve(std::span<const double> rho, std::array<std::span<double>, 2> field) {
    const std::size_t s = grid_.spatial_size();
    if (rho.size() != s) throw config_error("density has wrong length");
    std::copy(rho.begin(), rho.end(), tr_.real().begin());
    tr_.forward();
    auto spec = tr_.spectrum();
    const double mean = spec[0].real() / double(s);
    last_mean_offset_ = mean - grid_.rho0;
    if (std::fabs(last_mean_offset_) > neutrality_tol_ * std::fabs(grid_.rho0))
      throw neutrality_error("charge neutrality violated: mean density " + std::to_string(mean) +
                             " vs background " + std::to_string(grid_.rho0));
    const double norm = 1.0 / double(s);
    if (grid_.dims == 1) {
      const int n = grid_.nx[0];
      for (int i = 0; i <= n / 2; ++i) {
        const double kappa = wavenumber(i, n, grid_.length[0]);
        // E_l = i rho_l / kappa_l
        const cplx r = spec[static_cast<std::size_t>(i)] * norm;
        spec[static_cast<std::size_t>(i)] = kappa == 0.0 ? cplx{} : cplx(0.0, 1.0) * r / kappa;
      }
      tr_.inverse();
      std::copy(tr_.real().begin(), tr_.real().end(), field[0].begin());
      return;
    }
    const int n0 = grid_.nx[0];
    const int n1 = grid_.nx[1];
    const std::size_t h = static_cast<std::size_t>(n1) / 2 + 1;
    for (int i = 0; i < n0; ++i) {
      const double k0 = wavenumber(i, n0, grid_.length[0]);
      for (std::size_t j = 0; j < h; ++j) {
        const double k1 = wavenumber(static_cast<int>(j), n1, grid_.length[1]);
        const double k2 = k0 * k0 + k1 * k1;
        const std::size_t at = static_cast<std::size_t>(i) * h + j;
        const cplx r = spec[at] * norm;
        // phi = -rho / |k|^2 for nonzero modes, E = -i k phi
        const cplx phi_over_k = k2 == 0.0 ? cplx{} : r / k2;
        work_[at] = cplx(0.0, k1) * phi_over_k;
        spec[at] = cplx(0.0, k0) * phi_over_k;
      }
    }
    tr_.inverse();
    std::copy(tr_.real().begin(), tr_.real().end(), field[0].begin());
    std::copy(work_.begin(), work_.end(), spec.begin());
    tr_.inverse();
    std::copy(tr_.real().begin(), tr_.real().end(), field[1].begin());
  }

  double last_mean_offset() const noexcept { return last_mean_offset_; }

private:
  GridConfig grid_;
  double neutrality_tol_;
  BatchTransform tr_;
  std::vector<cplx> work_;
  double last_mean_offset_ = 0.0;
};

struct ElectricField {
  std::array<std::vector<double>, 2> component;
};

inline ElectricField solve_electric_field(std::span<const double> rho, const GridConfig& grid,
                                          double neutrality_tol = 1e-10) {
  if (rho.empty()) throw config_error("empty density");
  PoissonSolver solver(grid, neutrality_tol);
  ElectricField e;
  e.component[0].assign(grid.spatial_size(), 0.0);
  if (grid.dims == 2) e.component[1].assign(grid.spatial_size(), 0.0);
  solver.solve(rho, {std::span<double>(e.component[0]), std::span<double>(e.component[1])});
  return e;
}

} // namespace hvp

#endif // HVP_FOURIER_HPP
