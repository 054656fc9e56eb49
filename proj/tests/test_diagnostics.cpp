#include <gtest/gtest.h>

#include <cmath>
#include <array>
#include <limits>
#include <numbers>
#include <random>

#include "hvp/diagnostics.hpp"
#include "hvp/dynamics.hpp"
#include "hvp/projection.hpp"
#include "hvp/scenarios.hpp"
#include "oracles.hpp"

using namespace hvp;

namespace {

const double pi = std::numbers::pi;
const double inf = std::numeric_limits<double>::infinity();

SpectralState landau(double alpha, int nx, int order, double beta = 1.0) {
  auto spec = default_scenario(Scenario::landau_linear_1d);
  spec.alpha = alpha;
  return build_initial_state(spec, GridConfig::one_d(spec.default_length(), nx, order), {beta, 1.0}).state;
}

} // namespace

TEST(Conserved, UnitMaxwellian) {
  const auto s = landau(0.0, 16, 16);
  EXPECT_NEAR(s.grid().length[0], 4.0 * pi, 1e-15);
  const auto q = conserved_quantities(s);
  EXPECT_NEAR(q.mass, 4.0 * pi, 1e-13);
  EXPECT_NEAR(q.momentum[0], 0.0, 1e-15);
  EXPECT_NEAR(q.kinetic_energy, 2.0 * pi, 1e-13);
  EXPECT_NEAR(q.field_energy, 0.0, 1e-28);
}

TEST(Conserved, ZeroState) {
  const auto grid = GridConfig::one_d(2.0 * pi, 8, 8);
  const auto q = conserved_quantities(new_state(grid, {1.0, 1.0}, std::vector<double>(grid.size(), 0.0)));
  EXPECT_EQ(q.mass, 0.0);
  EXPECT_EQ(q.momentum[0], 0.0);
  EXPECT_EQ(q.kinetic_energy, 0.0);
  EXPECT_EQ(q.field_energy, 0.0);
  EXPECT_EQ(q.l2_norm, 0.0);
}

TEST(Conserved, LinearLandauFieldEnergy) {
  const double alpha = 0.01, k = 0.5;
  const auto s = landau(alpha, 32, 32);
  const double length = s.grid().length[0];
  // Trapezoid quadrature of the analytic field -(alpha/k) sin(kx) on a fine grid.
  const int fine = 4096;
  double acc = 0.0;
  for (int j = 0; j < fine; ++j) {
    const double e = -(alpha / k) * std::sin(k * j * length / fine);
    acc += e * e;
  }
  const double reference = 0.5 * acc * length / fine;
  const auto q = conserved_quantities(s);
  EXPECT_NEAR(q.field_energy, reference, 1e-15);
  EXPECT_NEAR(q.field_energy, 0.5 * alpha * alpha / (k * k) * (length / 2.0), 1e-15);
  EXPECT_NEAR(q.field_energy, 4.0 * pi * 1e-4, 1e-15);
}

TEST(Conserved, KineticEnergyMatchesFineVelocityQuadrature) {
  std::mt19937_64 rng(61);
  for (int order : {16, 64}) {
    const double beta = 1.3;
    auto s = landau(0.2, 8, order, beta);
    // Perturb every coefficient so that all modes contribute.
    auto c = std::vector<double>(s.coeffs().begin(), s.coeffs().end());
    for (auto& x : c) x += 1e-3 * oracle::random_vector(1, rng)[0];
    s = SpectralState(s.grid(), s.beta(), c);
    const auto q = conserved_quantities(s, inf);
    const int nv = 6000;
    const double vmax = 40.0 / beta;
    const double dv = 2.0 * vmax / nv;
    long double wk = 0.0L, mass = 0.0L;
    for (int i = 0; i < nv; ++i) {
      const double v = -vmax + i * dv;
      const auto h = oracle::scaled_basis(order, beta, v);
      for (int j = 0; j < 8; ++j) {
        long double f = 0.0L;
        for (int k = 0; k <= order; ++k) f += c[s.index(k, j)] * h[static_cast<std::size_t>(k)];
        wk += 0.5L * v * v * f;
        mass += f;
      }
    }
    const double dx = s.grid().length[0] / 8.0;
    EXPECT_NEAR(q.kinetic_energy, static_cast<double>(wk * dv * dx), 1e-8 * std::fabs(q.kinetic_energy));
    EXPECT_NEAR(q.mass, static_cast<double>(mass * dv * dx), 1e-8 * std::fabs(q.mass));
  }
}

TEST(Conserved, MassAndMomentumAreLinear) {
  std::mt19937_64 rng(62);
  const auto grid = GridConfig::two_d({2.0, 3.0}, {4, 6}, {6, 4});
  const auto f = oracle::random_vector(grid.size(), rng);
  const auto g = oracle::random_vector(grid.size(), rng);
  std::vector<double> h(f.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = 2.0 * f[i] - 0.5 * g[i];
  const Scaling b{1.1, 0.7};
  const auto qf = conserved_quantities(new_state(grid, b, f), inf);
  const auto qg = conserved_quantities(new_state(grid, b, g), inf);
  const auto qh = conserved_quantities(new_state(grid, b, h), inf);
  EXPECT_NEAR(qh.mass, 2.0 * qf.mass - 0.5 * qg.mass, 1e-12);
  for (int d = 0; d < 2; ++d)
    EXPECT_NEAR(qh.momentum[static_cast<std::size_t>(d)],
                2.0 * qf.momentum[static_cast<std::size_t>(d)] - 0.5 * qg.momentum[static_cast<std::size_t>(d)], 1e-12);
  EXPECT_NEAR(qh.kinetic_energy, 2.0 * qf.kinetic_energy - 0.5 * qg.kinetic_energy, 1e-12);
}

TEST(Drift, ZeroAtBaselineAndAfterProjection) {
  const auto s = landau(0.01, 32, 64);
  const auto base = conserved_quantities(s);
  const auto r0 = drift_record(s, base, std::array<double, 2>{0.25, 0.0});
  EXPECT_EQ(r0.mass_rel_err, 0.0);
  EXPECT_EQ(r0.momentum_abs_err[0], 0.0);
  EXPECT_EQ(r0.energy_rel_err, 0.0);
  EXPECT_EQ(r0.l2_rel_err, 0.0);
  EXPECT_EQ(r0.indicator[0], 0.25);
  EXPECT_EQ(r0.t, 0.0);
  EXPECT_GE(r0.field_energy, 0.0);
  EXPECT_GE(r0.kinetic_energy, 0.0);

  const auto p = project_state(s, 0, 0.999, {});
  const auto r1 = drift_record(p.state, base);
  EXPECT_LE(r1.mass_rel_err, 1e-12);
  EXPECT_LE(r1.momentum_abs_err[0], 1e-12);
  EXPECT_LE(r1.energy_rel_err, 1e-12);
  EXPECT_LE(r1.l2_rel_err, 1e-12);
  EXPECT_EQ(r1.beta[0], 0.999);
}

TEST(Drift, RawReexpansionLosesMassFullDoesNot) {
  // Slowly decaying spectrum: the truncated flow leaks into the moment directions.
  std::mt19937_64 rng(63);
  const auto grid = GridConfig::one_d(4.0 * pi, 16, 32);
  auto c = oracle::random_vector(grid.size(), rng);
  for (int j = 0; j < 16; ++j)
    for (int k = 0; k <= 32; ++k) c[static_cast<std::size_t>(k * 16 + j)] *= 0.1 / (1.0 + k);
  for (int j = 0; j < 16; ++j) c[static_cast<std::size_t>(j)] += 2.0;
  const auto start = new_state(grid, {1.0, 1.0}, c);
  ASSERT_EQ(start.index(1, 0), 16u);
  auto drift_after = [&](ConservationMode mode) {
    auto s = start;
    const auto base = conserved_quantities(s, inf);
    Rk4Stepper stepper(s.grid(), inf);
    ProjectionConfig cfg;
    cfg.mode = mode;
    for (int i = 0; i < 1000; ++i) {
      s = stepper.step(s, 2e-3);
      const double target = s.beta(0) * (i % 3 == 2 ? 1.0 / 0.999 : 0.999);
      s = project_state(s, 0, target, cfg).state;
    }
    return drift_record(s, conserved_quantities(s, inf), base);
  };
  const auto full = drift_after(ConservationMode::full);
  const auto raw = drift_after(ConservationMode::raw_l2);
  EXPECT_GT(raw.mass_rel_err, full.mass_rel_err);
  EXPECT_GT(raw.mass_rel_err, 1e-10);
  EXPECT_LE(full.mass_rel_err, 1e-12);
}

TEST(DampingFit, SyntheticDecay) {
  const double gamma = 0.1533, omega = 1.4156;
  std::vector<double> t, w;
  for (int i = 0; i <= 6000; ++i) {
    t.push_back(i * 0.005);
    w.push_back(std::exp(-2.0 * gamma * t.back()) * std::pow(std::cos(omega * t.back()), 2));
  }
  EXPECT_NEAR(fit_damping_rate(t, w, {0.0, 30.0}), -gamma, 1e-3);
  EXPECT_NEAR(fit_damping_rate(t, w, {5.0, 20.0}), -gamma, 1e-3);
}

TEST(DampingFit, ConstantSeriesAndErrors) {
  std::vector<double> t, w, down;
  for (int i = 0; i < 50; ++i) {
    t.push_back(i * 0.1);
    w.push_back(0.3);
    down.push_back(std::exp(-double(i)));
  }
  EXPECT_NEAR(fit_damping_rate(t, w, {0.0, 5.0}), 0.0, 1e-15);
  EXPECT_THROW(fit_damping_rate(t, down, {0.0, 5.0}), config_error);
  EXPECT_THROW(fit_damping_rate(t, w, {0.0, 0.5}), config_error);
  EXPECT_THROW(fit_damping_rate(std::vector<double>(3), w, {0.0, 5.0}), config_error);
}

TEST(Recurrence, Estimates) {
  EXPECT_NEAR(recurrence_time_estimate(64, 1.0, 0.5), 16.0 * pi, 1e-12);
  EXPECT_NEAR(recurrence_time_estimate(256, 1.0, 0.5) / recurrence_time_estimate(64, 1.0, 0.5), 2.0, 1e-15);
  EXPECT_NEAR(recurrence_time_estimate(128, 1.0, 0.5) / recurrence_time_estimate(64, 1.0, 0.5), std::sqrt(2.0), 1e-15);
  EXPECT_THROW(recurrence_time_estimate(0, 1.0, 0.5), config_error);
}

TEST(Recurrence, DetectsRevival) {
  std::vector<double> t, w, clean;
  for (int i = 0; i <= 8000; ++i) {
    const double ti = i * 0.005;
    t.push_back(ti);
    const double osc = std::pow(std::cos(1.4 * ti), 2);
    clean.push_back(std::exp(-0.6 * ti) * osc);
    w.push_back(clean.back() + 1e-2 * std::exp(-(ti - 20.0) * (ti - 20.0)) * osc);
  }
  const auto found = measure_recurrence(t, w);
  ASSERT_TRUE(found.has_value());
  EXPECT_GT(*found, 17.0);
  EXPECT_LT(*found, 20.5);
  EXPECT_FALSE(measure_recurrence(t, clean).has_value());
}
