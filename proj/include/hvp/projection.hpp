#ifndef HVP_PROJECTION_HPP
#define HVP_PROJECTION_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hvp/core_state.hpp"
#include "hvp/errors.hpp"
#include "hvp/hermite.hpp"

namespace hvp {

enum class ConservationMode {
  full,         // moments and L2 norm
  moments_only, // mass, momentum, energy; L2 relaxed
  l2_only,      // rescaled L2 re-expansion
  raw_l2,       // plain L2 re-expansion
};

inline std::string to_string(ConservationMode m) {
  switch (m) {
  case ConservationMode::full: return "full";
  case ConservationMode::moments_only: return "moments_only";
  case ConservationMode::l2_only: return "l2_only";
  case ConservationMode::raw_l2: return "raw_l2";
  }
  return "full";
}

inline ConservationMode parse_conservation_mode(const std::string& s) {
  if (s == "full") return ConservationMode::full;
  if (s == "moments_only") return ConservationMode::moments_only;
  if (s == "l2_only") return ConservationMode::l2_only;
  if (s == "raw_l2") return ConservationMode::raw_l2;
  throw config_error("unknown projection mode '" + s + "' (full, moments_only, l2_only, raw_l2)");
}

struct ProjectionConfig {
  int substeps = 10;
  double null_threshold = 1e-14;
  ConservationMode mode = ConservationMode::full;

  void validate() const {
    if (substeps < 1) throw config_error("projection substeps must be >= 1");
    if (!(null_threshold >= 0.0)) throw config_error("null threshold must be non-negative");
  }
};

enum class ProjectionCase {
  regular,        // moments and norm matched along the projected residual
  null_direction, // residual vanished; norm restored along the fixed null vector
  inconsistent,   // moment norm exceeds the source norm; L2 constraint dropped
  l2_fallback,    // l2_only with a vanishing re-expansion
  bypass,         // non-conservative mode
};

struct ProjectionStats {
  std::size_t regular = 0;
  std::size_t null_direction = 0;
  std::size_t inconsistent = 0;
  std::size_t l2_fallback = 0;

  void add(ProjectionCase c) {
    switch (c) {
    case ProjectionCase::regular: ++regular; break;
    case ProjectionCase::null_direction: ++null_direction; break;
    case ProjectionCase::inconsistent: ++inconsistent; break;
    case ProjectionCase::l2_fallback: ++l2_fallback; break;
    case ProjectionCase::bypass: break;
    }
  }
  ProjectionStats& operator+=(const ProjectionStats& o) {
    regular += o.regular;
    null_direction += o.null_direction;
    inconsistent += o.inconsistent;
    l2_fallback += o.l2_fallback;
    return *this;
  }
  // Slices where a constraint could not be honoured.
  std::size_t events() const noexcept { return inconsistent + l2_fallback; }
};

// Skew-symmetric generator of the rescaling flow: L(j+2, j) = -L(j, j+2) = sqrt((j+1)(j+2)).
class SkewLadder {
public:
  explicit SkewLadder(int order) : order_(order), band_(order >= 1 ? static_cast<std::size_t>(order) - 1 : 0) {
    if (order < 2) throw config_error("skew ladder needs order >= 2");
    for (std::size_t j = 0; j < band_.size(); ++j) band_[j] = std::sqrt(double(j + 1) * double(j + 2));
  }

  int order() const noexcept { return order_; }

  double entry(int i, int j) const {
    if (i < 0 || j < 0 || i > order_ || j > order_) throw config_error("skew ladder index out of range");
    if (i == j + 2) return band_[static_cast<std::size_t>(j)];
    if (j == i + 2) return -band_[static_cast<std::size_t>(i)];
    return 0.0;
  }

  // out = scale * L * in, applied to every column of a (order+1) x inner row-major block.
  void apply(const double* in, double* out, std::size_t inner, double scale) const {
    const std::size_t n = static_cast<std::size_t>(order_) + 1;
    for (std::size_t l = 0; l < n; ++l) {
      double* o = out + l * inner;
      const double down = l >= 2 ? scale * band_[l - 2] : 0.0;
      const double up = l + 2 < n ? -scale * band_[l] : 0.0;
      const double* lo = l >= 2 ? in + (l - 2) * inner : nullptr;
      const double* hi = l + 2 < n ? in + (l + 2) * inner : nullptr;
      if (lo && hi)
        for (std::size_t c = 0; c < inner; ++c) o[c] = down * lo[c] + up * hi[c];
      else if (lo)
        for (std::size_t c = 0; c < inner; ++c) o[c] = down * lo[c];
      else if (hi)
        for (std::size_t c = 0; c < inner; ++c) o[c] = up * hi[c];
      else
        for (std::size_t c = 0; c < inner; ++c) o[c] = 0.0;
    }
  }

private:
  int order_;
  std::vector<double> band_;
};

inline SkewLadder skew_ladder_matrix(int order) { return SkewLadder(order); }

// Largest order for which RK4 with step ds stays inside its imaginary-axis stability interval.
inline int max_stable_order(double ds, double mu) {
  if (mu == 0.0) return std::numeric_limits<int>::max();
  return static_cast<int>(std::floor(std::numbers::sqrt2 / (ds * std::fabs(mu))));
}

namespace detail {

inline double flow_rate(double beta, double beta_prime) {
  if (!(beta > 0.0) || !(beta_prime > 0.0) || !std::isfinite(beta) || !std::isfinite(beta_prime))
    throw config_error("scaling factors must be positive and finite");
  return 0.5 * std::log(beta_prime / beta);
}

inline void check_stability(int order, double mu, const ProjectionConfig& cfg) {
  const double ds = 1.0 / cfg.substeps;
  if (ds * std::fabs(mu) * 2.0 * order > 2.0 * std::numbers::sqrt2)
    throw stability_error("rescaling flow unstable for order " + std::to_string(order) + " with " +
                              std::to_string(cfg.substeps) + " substeps; largest stable order is " +
                              std::to_string(max_stable_order(ds, mu)),
                          max_stable_order(ds, mu));
}

// RK4 on h' = mu L h from s = 0 to 1 for every column of the block, in place.
// For a linear autonomous system the four stages collapse to the degree-4 Taylor polynomial.
inline void integrate_flow(const SkewLadder& ladder, double mu, int substeps, double* block, std::size_t inner,
                           std::vector<double>& acc, std::vector<double>& tmp) {
  if (mu == 0.0) return;
  const std::size_t n = (static_cast<std::size_t>(ladder.order()) + 1) * inner;
  acc.resize(n);
  tmp.resize(n);
  const double a = mu / substeps;
  for (int step = 0; step < substeps; ++step) {
    // acc = h + A/2 (h + A/3 (h + A/4 h))
    ladder.apply(block, acc.data(), inner, a / 4.0);
    for (std::size_t i = 0; i < n; ++i) acc[i] += block[i];
    ladder.apply(acc.data(), tmp.data(), inner, a / 3.0);
    for (std::size_t i = 0; i < n; ++i) tmp[i] += block[i];
    ladder.apply(tmp.data(), acc.data(), inner, a / 2.0);
    for (std::size_t i = 0; i < n; ++i) acc[i] += block[i];
    ladder.apply(acc.data(), tmp.data(), inner, a);
    for (std::size_t i = 0; i < n; ++i) block[i] += tmp[i];
  }
}

// Orthonormal factor Q R of the three moment columns of I (reorthogonalised Gram-Schmidt).
// Columns 0 and 2 live on even rows, column 1 on odd rows.
struct MomentFactor {
  std::vector<std::array<double, 3>> q;
  double r00 = 0.0, r02 = 0.0, r11 = 0.0, r22 = 0.0;

  explicit MomentFactor(const MomentMatrix& m) : q(static_cast<std::size_t>(m.order()) + 1) {
    const int n = m.order();
    auto norm_of = [&](int col) {
      std::vector<double> v(static_cast<std::size_t>(n) + 1);
      for (int k = 0; k <= n; ++k) v[static_cast<std::size_t>(k)] = q[static_cast<std::size_t>(k)][static_cast<std::size_t>(col)];
      return std::sqrt(sum_squares(v));
    };
    for (int k = 0; k <= n; ++k) q[static_cast<std::size_t>(k)] = m.row(k);
    r00 = norm_of(0);
    r11 = norm_of(1);
    for (auto& row : q) {
      row[0] /= r00;
      row[1] /= r11;
    }
    for (int pass = 0; pass < 2; ++pass) {
      double dot = 0.0;
      for (const auto& row : q) dot += row[0] * row[2];
      for (auto& row : q) row[2] -= dot * row[0];
      r02 += dot;
    }
    r22 = norm_of(2);
    for (auto& row : q) row[2] /= r22;
    if (!(r00 > 0.0 && r11 > 0.0 && r22 > 0.0) || !std::isfinite(r00 * r11 * r22))
      throw config_error("moment Gram matrix is singular");
  }

  // z with Q z the minimum-norm vector whose moments are m, i.e. z = R^{-T} m.
  std::array<double, 3> solve_transpose(const std::array<double, 3>& m) const {
    const double z0 = m[0] / r00;
    const double z1 = m[1] / r11;
    const double z2 = (m[2] - r02 * z0) / r22;
    return {z0, z1, z2};
  }
};

struct BlockScratch {
  std::vector<double> acc, tmp;
  std::vector<double> m0, m1, m2, t0, t1, t2, norm_src, norm_res;
  void resize(std::size_t inner) {
    for (auto* v : {&m0, &m1, &m2, &t0, &t1, &t2, &norm_src, &norm_res}) v->assign(inner, 0.0);
  }
};

inline void add_squares(const double* row, std::vector<double>& acc, std::size_t inner) {
  for (std::size_t c = 0; c < inner; ++c) acc[c] += row[c] * row[c];
}

// Residual of f~ after removing its component in span(Q), in place; t receives Q^T f~.
inline void remove_moment_part(const MomentFactor& dst, double* ft, std::size_t modes, std::size_t inner,
                               BlockScratch& s) {
  for (auto* v : {&s.t0, &s.t1, &s.t2}) std::fill(v->begin(), v->end(), 0.0);
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<double> d0(inner, 0.0), d1(inner, 0.0), d2(inner, 0.0);
    for (std::size_t k = 0; k < modes; ++k) {
      const auto& q = dst.q[k];
      const double* row = ft + k * inner;
      if (k % 2 == 0)
        for (std::size_t c = 0; c < inner; ++c) {
          d0[c] += q[0] * row[c];
          d2[c] += q[2] * row[c];
        }
      else
        for (std::size_t c = 0; c < inner; ++c) d1[c] += q[1] * row[c];
    }
    for (std::size_t k = 0; k < modes; ++k) {
      const auto& q = dst.q[k];
      double* row = ft + k * inner;
      if (k % 2 == 0)
        for (std::size_t c = 0; c < inner; ++c) row[c] -= q[0] * d0[c] + q[2] * d2[c];
      else
        for (std::size_t c = 0; c < inner; ++c) row[c] -= q[1] * d1[c];
    }
    for (std::size_t c = 0; c < inner; ++c) {
      s.t0[c] += d0[c];
      s.t1[c] += d1[c];
      s.t2[c] += d2[c];
    }
  }
}

// Replaces the columns of `ft` (re-expanded at beta') by their corrected values.
// `f` holds the source columns at beta. Records one case per column.
inline void correct_block(const double* f, double* ft, std::size_t modes, std::size_t inner, const MomentMatrix& src,
                          const MomentFactor& dst, const ProjectionConfig& cfg, BlockScratch& s,
                          std::vector<ProjectionCase>& cases) {
  s.resize(inner);
  cases.assign(inner, ProjectionCase::bypass);
  for (std::size_t k = 0; k < modes; ++k) add_squares(f + k * inner, s.norm_src, inner);

  if (cfg.mode == ConservationMode::raw_l2) return;
  if (cfg.mode == ConservationMode::l2_only) {
    std::vector<double> norm_t(inner, 0.0);
    for (std::size_t k = 0; k < modes; ++k) add_squares(ft + k * inner, norm_t, inner);
    std::vector<double> scale(inner, 1.0);
    for (std::size_t c = 0; c < inner; ++c) {
      if (norm_t[c] == 0.0) {
        if (s.norm_src[c] > 0.0) cases[c] = ProjectionCase::l2_fallback;
        continue;
      }
      scale[c] = std::sqrt(s.norm_src[c] / norm_t[c]);
    }
    for (std::size_t k = 0; k < modes; ++k)
      for (std::size_t c = 0; c < inner; ++c) ft[k * inner + c] *= scale[c];
    return;
  }

  for (std::size_t k = 0; k < modes; ++k) {
    const auto& r = src.row(static_cast<int>(k));
    const double* row = f + k * inner;
    if (k % 2 == 0)
      for (std::size_t c = 0; c < inner; ++c) {
        s.m0[c] += r[0] * row[c];
        s.m2[c] += r[2] * row[c];
      }
    else
      for (std::size_t c = 0; c < inner; ++c) s.m1[c] += r[1] * row[c];
  }
  remove_moment_part(dst, ft, modes, inner, s);
  for (std::size_t k = 0; k < modes; ++k) add_squares(ft + k * inner, s.norm_res, inner);

  std::vector<std::array<double, 3>> z(inner);
  std::vector<double> alpha(inner, 1.0);
  std::vector<char> along_null(inner, 0);
  for (std::size_t c = 0; c < inner; ++c) {
    z[c] = dst.solve_transpose({s.m0[c], s.m1[c], s.m2[c]});
    const double h0_sq = z[c][0] * z[c][0] + z[c][1] * z[c][1] + z[c][2] * z[c][2];
    if (cfg.mode == ConservationMode::moments_only) continue;
    const double res = std::sqrt(s.norm_res[c]);
    if (h0_sq <= s.norm_src[c]) {
      const double gap = std::sqrt(s.norm_src[c] - h0_sq);
      if (res >= cfg.null_threshold) {
        alpha[c] = gap / res;
        cases[c] = ProjectionCase::regular;
      } else {
        alpha[c] = gap;
        along_null[c] = 1;
        cases[c] = ProjectionCase::null_direction;
      }
    } else {
      cases[c] = ProjectionCase::inconsistent;
    }
  }
  const bool any_null = std::any_of(along_null.begin(), along_null.end(), [](char b) { return b != 0; });
  std::vector<double> u0;
  double u0_norm = 1.0;
  if (any_null) {
    u0 = null_vector_u0(static_cast<int>(modes) - 1);
    u0_norm = std::sqrt(sum_squares(u0));
  }
  for (std::size_t k = 0; k < modes; ++k) {
    const auto& q = dst.q[k];
    double* row = ft + k * inner;
    for (std::size_t c = 0; c < inner; ++c) {
      const double h0 = q[0] * z[c][0] + q[1] * z[c][1] + q[2] * z[c][2];
      const double dir = along_null[c] ? u0[k] / u0_norm : row[c];
      row[c] = h0 + alpha[c] * dir;
    }
  }
}

// Tensor viewed as [outer][modes along dim][inner], all row-major.
struct AxisView {
  std::size_t outer, modes, inner;
};

inline AxisView axis_view(const GridConfig& grid, int dim) {
  if (dim < 0 || dim >= grid.dims) throw config_error("velocity dimension out of range");
  const std::size_t s = grid.spatial_size();
  if (grid.dims == 1) return {1, grid.modes(0), s};
  if (dim == 0) return {1, grid.modes(0), grid.modes(1) * s};
  return {grid.modes(0), grid.modes(1), s};
}

} // namespace detail

// L2 re-expansion of one velocity slice from beta to beta' by the rescaling flow.
inline std::vector<double> l2_project_ode(std::span<const double> coeffs, double beta, double beta_prime,
                                          const ProjectionConfig& cfg) {
  cfg.validate();
  const int order = static_cast<int>(coeffs.size()) - 1;
  const double mu = detail::flow_rate(beta, beta_prime);
  std::vector<double> out(coeffs.begin(), coeffs.end());
  if (mu == 0.0) return out;
  detail::check_stability(order, mu, cfg);
  const SkewLadder ladder(order);
  std::vector<double> acc, tmp;
  detail::integrate_flow(ladder, mu, cfg.substeps, out.data(), 1, acc, tmp);
  return out;
}

struct Correction {
  std::vector<double> coeffs;
  ProjectionCase kind = ProjectionCase::bypass;
};

// Closest vector to f~ that carries the source moments and L2 norm (per the conservation mode).
inline Correction conservative_correct(std::span<const double> f_tilde, std::span<const double> f_beta,
                                       const MomentMatrix& src, const MomentMatrix& dst, const ProjectionConfig& cfg) {
  const std::size_t n = static_cast<std::size_t>(dst.order()) + 1;
  if (f_tilde.size() != n || f_beta.size() != n || src.order() != dst.order())
    throw config_error("conservative_correct: length mismatch");
  const detail::MomentFactor factor(dst);
  detail::BlockScratch scratch;
  std::vector<ProjectionCase> cases;
  Correction out{{f_tilde.begin(), f_tilde.end()}, ProjectionCase::bypass};
  detail::correct_block(f_beta.data(), out.coeffs.data(), n, 1, src, factor, cfg, scratch, cases);
  out.kind = cases.front();
  return out;
}

struct ProjectedState {
  SpectralState state;
  ProjectionStats stats;
};

// Change of scaling along one velocity dimension, slice by slice.
inline ProjectedState project_state(const SpectralState& state, int dim, double beta_prime,
                                    const ProjectionConfig& cfg) {
  cfg.validate();
  const auto& grid = state.grid();
  const auto view = detail::axis_view(grid, dim);
  const int order = grid.order[dim];
  const double beta = state.beta(dim);
  const double mu = detail::flow_rate(beta, beta_prime);
  Scaling next_beta = state.beta();
  next_beta[static_cast<std::size_t>(dim)] = beta_prime;
  std::vector<double> out(state.coeffs().begin(), state.coeffs().end());
  if (mu == 0.0) return {state.with_scaling(next_beta, std::move(out)), {}};
  detail::check_stability(order, mu, cfg);

  const SkewLadder ladder(order);
  const MomentMatrix src(beta, order);
  const MomentMatrix dst(beta_prime, order);
  const detail::MomentFactor factor(dst);
  const std::size_t block = view.modes * view.inner;
  ProjectionStats stats;
  detail::BlockScratch scratch;
  std::vector<ProjectionCase> cases;
  for (std::size_t o = 0; o < view.outer; ++o) {
    const double* f = state.coeffs().data() + o * block;
    double* ft = out.data() + o * block;
    detail::integrate_flow(ladder, mu, cfg.substeps, ft, view.inner, scratch.acc, scratch.tmp);
    detail::correct_block(f, ft, view.modes, view.inner, src, factor, cfg, scratch, cases);
    for (auto c : cases) stats.add(c);
  }
  for (double v : out)
    if (!std::isfinite(v)) throw instability_error("non-finite coefficient after change of scaling");
  return {state.with_scaling(next_beta, std::move(out)), stats};
}

// Eigenvalues (ascending) of D_q G^{-1} D_q G with G the unit-scaling Gram matrix and q = beta'/beta.
// The odd moment decouples with eigenvalue q^3; the even pair gives a 2x2 problem.
inline std::array<double, 3> consistency_spectrum(double beta, double beta_prime, const MomentMatrix& unit) {
  if (!(beta > 0.0) || !(beta_prime > 0.0)) throw config_error("scaling factors must be positive");
  const double q = beta_prime / beta;
  const auto g = unit.gram();
  const double d0 = std::sqrt(q);
  const double d2 = q * q * std::sqrt(q);
  const double det_g = g[0][0] * g[2][2] - g[0][2] * g[0][2];
  // G2^{-1} = [g22 -g02; -g02 g00] / det
  const double i00 = g[2][2] / det_g, i02 = -g[0][2] / det_g, i22 = g[0][0] / det_g;
  // B = D G^{-1} D G restricted to the even pair
  const double a00 = d0 * i00 * d0, a02 = d0 * i02 * d2, a20 = d2 * i02 * d0, a22 = d2 * i22 * d2;
  const double b00 = a00 * g[0][0] + a02 * g[0][2];
  const double b22 = a20 * g[0][2] + a22 * g[2][2];
  const double trace = b00 + b22;
  const double det = std::pow(q, 6.0);
  const double disc = std::sqrt(std::max(0.0, trace * trace - 4.0 * det));
  const double big = 0.5 * (trace + disc);
  std::array<double, 3> ev{det / big, q * q * q, big};
  std::sort(ev.begin(), ev.end());
  return ev;
}

} // namespace hvp

#endif // HVP_PROJECTION_HPP
