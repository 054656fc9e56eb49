#ifndef HVP_HERMITE_HPP
#define HVP_HERMITE_HPP

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hvp/errors.hpp"

namespace hvp {

namespace detail {

inline const double inv_pi_quarter = 1.0 / std::sqrt(std::sqrt(std::numbers::pi));
inline const double pi_quarter = std::sqrt(std::sqrt(std::numbers::pi));

// Running renormalisation bound for the scaled recurrence.
constexpr double rescale_at = 1e150;

} // namespace detail

// H_k^beta(v) = sqrt(beta) H_k^1(beta v) for k = 0..order, written to out[0..order].
// The polynomial part is carried with a separate log scale so the product with
// exp(-y^2/2) stays finite for any k and v.
inline void eval_basis_all(int order, double beta, double v, std::span<double> out) {
  if (order < 0 || out.size() < static_cast<std::size_t>(order) + 1)
    throw config_error("eval_basis_all: output too short");
  const double y = beta * v;
  const double prefactor = std::sqrt(beta);
  const double gauss_log = -0.5 * y * y;
  double log_scale = 0.0;
  double prev = 0.0;
  double cur = detail::inv_pi_quarter;
  out[0] = prefactor * cur * std::exp(gauss_log);
  for (int k = 0; k < order; ++k) {
    const double next = y * std::sqrt(2.0 / (k + 1)) * cur - std::sqrt(static_cast<double>(k) / (k + 1)) * prev;
    prev = cur;
    cur = next;
    if (std::fabs(cur) > detail::rescale_at) {
      cur /= detail::rescale_at;
      prev /= detail::rescale_at;
      log_scale += std::log(detail::rescale_at);
    }
    out[static_cast<std::size_t>(k) + 1] =
        cur == 0.0 ? 0.0 : std::copysign(prefactor * std::exp(std::log(std::fabs(cur)) + log_scale + gauss_log), cur);
  }
}

inline double eval_basis(int k, double beta, double v) {
  if (k < 0) throw config_error("eval_basis: negative index");
  std::vector<double> values(static_cast<std::size_t>(k) + 1);
  eval_basis_all(k, beta, v, values);
  return values.back();
}

// c_k = sqrt((k-1)!!/k!!) via c_k = c_{k-2} sqrt((k-1)/k).
inline std::vector<double> double_factorial_ratios(int order) {
  std::vector<double> c(static_cast<std::size_t>(order) + 1);
  c[0] = 1.0;
  if (order >= 1) c[1] = 1.0;
  for (int k = 2; k <= order; ++k)
    c[static_cast<std::size_t>(k)] = c[static_cast<std::size_t>(k) - 2] * std::sqrt(static_cast<double>(k - 1) / k);
  return c;
}

// Columns hold the density, momentum and energy-density moments of each basis function.
class MomentMatrix {
public:
  MomentMatrix(double beta, int order) : beta_(beta), order_(order), entries_(static_cast<std::size_t>(order) + 1) {
    if (order < 2 || order % 2 != 0)
      throw config_error("moment matrix requires an even order >= 2, got " + std::to_string(order));
    if (!(beta > 0.0) || !std::isfinite(beta)) throw config_error("moment matrix requires beta > 0");
    const auto c = double_factorial_ratios(order);
    const double p = detail::pi_quarter;
    const double b_half = 1.0 / std::sqrt(beta);
    const double b_3half = b_half / beta;
    const double b_5half = b_3half / beta;
    for (int k = 0; k <= order; ++k) {
      auto& row = entries_[static_cast<std::size_t>(k)];
      const double ck = c[static_cast<std::size_t>(k)];
      if (k % 2 == 0) {
        row[0] = std::numbers::sqrt2 * p * b_half * ck;
        row[1] = 0.0;
        row[2] = row[0] / (beta * beta) + 2.0 * std::numbers::sqrt2 * p * b_5half * k * ck;
      } else {
        row[0] = 0.0;
        row[1] = 2.0 * p * b_3half / ck;
        row[2] = 0.0;
      }
    }
  }

  double beta() const noexcept { return beta_; }
  int order() const noexcept { return order_; }
  double operator()(int k, int r) const {
    return entries_[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)];
  }
  const std::array<double, 3>& row(int k) const { return entries_[static_cast<std::size_t>(k)]; }

  // I^T I; odd-even structure makes entries (0,1) and (1,2) vanish.
  std::array<std::array<double, 3>, 3> gram() const {
    std::array<std::array<double, 3>, 3> g{};
    for (const auto& row : entries_)
      for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s) g[r][s] += row[r] * row[s];
    return g;
  }

private:
  double beta_;
  int order_;
  std::vector<std::array<double, 3>> entries_;
};

inline MomentMatrix moment_matrix(double beta, int order) { return MomentMatrix(beta, order); }

// (rho, rho u, energy density) of one velocity slice.
inline std::array<double, 3> macroscopic_moments(std::span<const double> coeffs, const MomentMatrix& m) {
  if (coeffs.size() != static_cast<std::size_t>(m.order()) + 1)
    throw config_error("macroscopic_moments: slice length " + std::to_string(coeffs.size()) +
                       " does not match order " + std::to_string(m.order()));
  std::array<double, 3> out{0.0, 0.0, 0.0};
  for (int k = 0; k <= m.order(); k += 2) {
    const double f = coeffs[static_cast<std::size_t>(k)];
    out[0] += m(k, 0) * f;
    out[2] += m(k, 2) * f;
  }
  for (int k = 1; k <= m.order(); k += 2) out[1] += m(k, 1) * coeffs[static_cast<std::size_t>(k)];
  return out;
}

// Direction with vanishing moments for every beta.
inline std::vector<double> null_vector_u0(int order) {
  if (order < 4) throw config_error("null vector needs order >= 4, got " + std::to_string(order));
  std::vector<double> u(static_cast<std::size_t>(order) + 1, 0.0);
  u[0] = std::sqrt(3.0) / (2.0 * std::numbers::sqrt2);
  u[2] = -std::sqrt(3.0);
  u[4] = 1.0;
  return u;
}

} // namespace hvp

#endif // HVP_HERMITE_HPP
