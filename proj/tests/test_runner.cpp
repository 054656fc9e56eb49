#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "hvp/config.hpp"
#include "hvp/diagnostics.hpp"
#include "hvp/output.hpp"
#include "hvp/run.hpp"
#include "oracles.hpp"

using namespace hvp;
namespace fs = std::filesystem;

namespace {

fs::path scratch_root() { return fs::temp_directory_path() / ("hvp_test_" + std::to_string(::getpid())); }

class ScratchCleanup : public ::testing::Environment {
public:
  void TearDown() override { fs::remove_all(scratch_root()); }
};

const auto* const cleanup = ::testing::AddGlobalTestEnvironment(new ScratchCleanup);

fs::path scratch(const std::string& name) {
  auto p = scratch_root() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream f(p);
  std::string line;
  while (std::getline(f, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  ADD_FAILURE() << "missing column " << name;
  return 0;
}

KeyValueConfig small_run(const fs::path& dir, bool adaptive, double t_final) {
  auto kv = KeyValueConfig::parse("scenario.name = landau_linear_1d\n"
                                  "grid.n = 32\n"
                                  "grid.nx = 16\n");
  kv.set("adaptivity.enabled", adaptive ? "true" : "false");
  kv.set("time.t_final", detail::format_number(t_final));
  kv.set("output.dir", dir.string());
  return kv;
}

ExitCode run_quiet(const KeyValueConfig& kv) {
  std::ostringstream log;
  return run(resolve_config(kv), log);
}

std::map<std::string, std::string> read_sidecar(const fs::path& p) {
  std::map<std::string, std::string> m;
  std::ifstream f(p);
  std::string line;
  while (std::getline(f, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return m;
}

} // namespace

TEST(Config, ParseErrorsAreCollected) {
  try {
    KeyValueConfig::parse("scenario.name = landau_linear_1d\nnot a pair\nnosection = 3\nscenario.name = x\n");
    FAIL() << "expected config_errors";
  } catch (const config_errors& e) {
    EXPECT_EQ(e.problems().size(), 3u);
  }
}

TEST(Config, ResolveListsEveryProblem) {
  auto kv = KeyValueConfig::parse("scenario.name = landau_linear_1d\n"
                                  "grid.n = 7\n"
                                  "time.cfl = 2\n"
                                  "adaptivity.q0 = 1.5\n"
                                  "grid.length = 5\n"
                                  "grid.bogus = 1\n"
                                  "time.t_final = abc\n");
  try {
    resolve_config(kv);
    FAIL() << "expected config_errors";
  } catch (const config_errors& e) {
    const std::string all = e.what();
    EXPECT_GE(e.problems().size(), 6u) << all;
    for (const char* key : {"grid.bogus", "time.cfl", "q0", "grid.length", "time.t_final"})
      EXPECT_NE(all.find(key), std::string::npos) << key << " not reported in:\n" << all;
  }
  EXPECT_THROW(resolve_config(KeyValueConfig::parse("grid.n = 8\n")), config_errors);
  EXPECT_THROW(resolve_config(KeyValueConfig::parse("scenario.name = nope\n")), config_errors);
}

TEST(Config, ScenarioDefaultsAndOverrides) {
  const auto rc = resolve_config(KeyValueConfig::parse("scenario.name = two_stream_1d\n"));
  EXPECT_EQ(rc.sim.grid.nx[0], 192);
  EXPECT_NEAR(rc.sim.grid.length[0], 4.0 * std::numbers::pi, 1e-15);
  EXPECT_EQ(rc.sim.scenario.factors[0][0].variance, 0.25);
  EXPECT_EQ(rc.t_final, 50.0);
  EXPECT_EQ(rc.sim.cfl, 0.8);
  EXPECT_EQ(rc.threads, 1);

  auto kv = KeyValueConfig::parse("scenario.name = two_stream_1d\n");
  kv.override_with("scenario.u1 = 1.5");
  kv.override_with("grid.beta1=2");
  kv.override_with("adaptivity.enabled=false");
  kv.override_with("output.snapshot_times = 10, 5");
  const auto o = resolve_config(kv);
  EXPECT_EQ(o.sim.scenario.factors[0][0].mean, 1.5);
  ASSERT_TRUE(o.sim.initial_beta[0].has_value());
  EXPECT_EQ(*o.sim.initial_beta[0], 2.0);
  EXPECT_FALSE(o.sim.adaptive);
  EXPECT_EQ(o.output.snapshot_times, (std::vector<double>{5.0, 10.0}));
  EXPECT_THROW(kv.override_with("no_equals_sign"), config_error);
}

TEST(Config, ManifestRoundTrip) {
  auto kv = KeyValueConfig::parse("scenario.name = bump_on_tail_2d\n"
                                  "grid.n = 16\n"
                                  "grid.nx = 8\n"
                                  "grid.ny = 8\n"
                                  "scenario.alpha = 0.0123456789012345\n"
                                  "output.snapshot_times = 1,2.5\n"
                                  "adaptivity.q0 = 0.9985\n");
  const auto rc = resolve_config(kv);
  const auto text = to_text(manifest(rc));
  const auto again = resolve_config(KeyValueConfig::parse(text));
  EXPECT_EQ(to_text(manifest(again)), text);
  EXPECT_EQ(again.sim.scenario.alpha, 0.0123456789012345);
  EXPECT_EQ(again.sim.adaptivity.q0, 0.9985);
  EXPECT_EQ(again.sim.grid.order[1], 16);
}

TEST(Run, AdaptiveTimeseries) {
  const auto dir = scratch("adaptive");
  ASSERT_EQ(run_quiet(small_run(dir, true, 2.0)), ExitCode::success);
  for (const char* f : {"manifest.txt", "timeseries.csv", "summary.csv"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto rows = read_csv(dir / "timeseries.csv");
  ASSERT_GT(rows.size(), 3u);
  EXPECT_EQ(rows[0].size(), 11u);
  const auto tcol = column(rows[0], "t");
  const auto bcol = column(rows[0], "beta_1");
  EXPECT_EQ(std::stod(rows[1][tcol]), 0.0);
  EXPECT_EQ(std::stod(rows[1][bcol]), 1.0);
  for (std::size_t i = 2; i < rows.size(); ++i) EXPECT_GT(std::stod(rows[i][tcol]), std::stod(rows[i - 1][tcol]));
  EXPECT_NEAR(std::stod(rows.back()[tcol]), 2.0, 1e-12);
}

TEST(Run, NonAdaptiveScalingIsConstant) {
  const auto dir = scratch("fixed");
  ASSERT_EQ(run_quiet(small_run(dir, false, 2.0)), ExitCode::success);
  const auto rows = read_csv(dir / "timeseries.csv");
  const auto bcol = column(rows[0], "beta_1");
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][bcol], "1");
}

TEST(Run, ZeroDurationWritesInitialRecord) {
  const auto dir = scratch("zero");
  ASSERT_EQ(run_quiet(small_run(dir, true, 0.0)), ExitCode::success);
  const auto rows = read_csv(dir / "timeseries.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][0], "t");
  EXPECT_EQ(std::stod(rows[1][0]), 0.0);
}

TEST(Run, OutputIsReproducible) {
  const auto a = scratch("repro_a");
  const auto b = scratch("repro_b");
  auto ka = small_run(a, true, 3.0);
  auto kb = small_run(b, true, 3.0);
  ka.set("output.snapshot_times", "1.5");
  kb.set("output.snapshot_times", "1.5");
  ASSERT_EQ(run_quiet(ka), ExitCode::success);
  ASSERT_EQ(run_quiet(kb), ExitCode::success);
  EXPECT_EQ(slurp(a / "timeseries.csv"), slurp(b / "timeseries.csv"));
  EXPECT_EQ(slurp(a / "snapshot_000.bin"), slurp(b / "snapshot_000.bin"));
  EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
}

TEST(Run, ManifestReproducesConfig) {
  const auto dir = scratch("manifest");
  auto kv = small_run(dir, true, 0.5);
  ASSERT_EQ(run_quiet(kv), ExitCode::success);
  const auto reloaded = resolve_config(KeyValueConfig::load((dir / "manifest.txt").string()));
  EXPECT_EQ(to_text(manifest(reloaded)), slurp(dir / "manifest.txt"));
}

TEST(Run, SnapshotSidecarDescribesBinary) {
  const auto dir = scratch("snap");
  auto kv = small_run(dir, false, 1.0);
  kv.set("output.snapshot_times", "0,1");
  kv.set("output.v_grid", "-6:6:97");
  ASSERT_EQ(run_quiet(kv), ExitCode::success);
  for (const char* stem : {"snapshot_000", "snapshot_001"}) {
    const auto side = read_sidecar(dir / (std::string(stem) + ".txt"));
    EXPECT_EQ(side.at("format"), "float64-le");
    EXPECT_EQ(side.at("shape"), "16,97");
    EXPECT_EQ(fs::file_size(dir / (std::string(stem) + ".bin")), 16u * 97u * 8u);
  }
  EXPECT_EQ(read_sidecar(dir / "snapshot_001.txt").at("t"), "1");
}

TEST(Snapshot, SingleCoefficientIsGroundState) {
  const auto grid = GridConfig::one_d(4.0 * std::numbers::pi, 8, 6);
  std::vector<double> c(grid.size(), 0.0);
  c[3] = 1.0;
  const auto s = new_state(grid, {1.7, 1.0}, c);
  const VelocityGrid vg{-5.0, 5.0, 41};
  const auto snap = reconstruct_snapshot(s, vg).at(0);
  const auto v = velocity_samples(vg);
  for (std::size_t m = 0; m < v.size(); ++m) {
    EXPECT_NEAR(snap.values[3 * 41 + m], static_cast<double>(oracle::scaled_basis(0, 1.7, v[m])[0]), 1e-15);
    EXPECT_EQ(snap.values[2 * 41 + m], 0.0);
  }
}

TEST(Snapshot, MaxwellianPointwise) {
  auto spec = default_scenario(Scenario::landau_linear_1d);
  spec.alpha = 0.3;
  const auto s = build_initial_state(spec, GridConfig::one_d(spec.default_length(), 16, 64), {1.0, 1.0}).state;
  const VelocityGrid vg{-8.0, 8.0, 161};
  const auto snap = reconstruct_snapshot(s, vg).at(0);
  const auto v = velocity_samples(vg);
  const double dx = spec.default_length() / 16.0;
  double worst = 0.0;
  for (std::size_t j = 0; j < 16; ++j)
    for (std::size_t m = 0; m < v.size(); ++m) {
      const double exact = (1.0 + 0.3 * std::cos(0.5 * dx * double(j))) * std::exp(-0.5 * v[m] * v[m]) /
                           std::sqrt(2.0 * std::numbers::pi);
      worst = std::max(worst, std::fabs(snap.values[j * v.size() + m] - exact));
    }
  EXPECT_LE(worst, 1e-10);
  // Velocity integral of the cut times dx recovers the mass.
  const double dv = v[1] - v[0];
  double mass = 0.0;
  for (double x : snap.values) mass += x * dv * dx;
  EXPECT_NEAR(mass, conserved_quantities(s).mass, 1e-8);
}

TEST(Snapshot, TwoDimensionalCuts) {
  auto spec = default_scenario(Scenario::landau_linear_2d);
  spec.alpha = 0.0;
  const double length = spec.default_length();
  const auto s = build_initial_state(spec, GridConfig::two_d({length, length}, {4, 6}, {16, 16}), {1.0, 1.0}).state;
  const auto cuts = reconstruct_snapshot(s, {-4.0, 4.0, 17});
  ASSERT_EQ(cuts.size(), 2u);
  EXPECT_EQ(cuts[0].rows, 4u);
  EXPECT_EQ(cuts[1].rows, 6u);
  const double g0 = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (const auto& cut : cuts) {
    const auto v = velocity_samples(cut.v_grid);
    for (std::size_t r = 0; r < cut.rows; ++r)
      for (std::size_t m = 0; m < v.size(); ++m)
        EXPECT_NEAR(cut.values[r * v.size() + m], g0 * g0 * std::exp(-0.5 * v[m] * v[m]), 1e-10);
  }
}

TEST(StateDump, RoundTripIsBitExact) {
  const auto dir = scratch("dump");
  std::mt19937_64 rng(91);
  const auto grid = GridConfig::two_d({2.0, 3.0}, {4, 6}, {6, 4});
  const SpectralState s(grid, {1.0 / 3.0, std::numbers::pi}, oracle::random_vector(grid.size(), rng), 0.1 + 0.2);
  write_state_dump(s, dir / "state");
  const auto back = read_state_dump(dir / "state");
  EXPECT_EQ(back.t(), s.t());
  EXPECT_EQ(back.beta(0), s.beta(0));
  EXPECT_EQ(back.beta(1), s.beta(1));
  EXPECT_EQ(back.grid().length[0], 2.0);
  EXPECT_EQ(back.grid().nx[1], 6);
  EXPECT_EQ(back.grid().order[1], 4);
  ASSERT_EQ(back.coeffs().size(), s.coeffs().size());
  for (std::size_t i = 0; i < s.coeffs().size(); ++i) EXPECT_EQ(back.coeffs()[i], s.coeffs()[i]);
}

TEST(ExitCodes, ThroughRun) {
  const auto ok = scratch("codes_ok");
  EXPECT_EQ(run_quiet(small_run(ok, false, 0.1)), ExitCode::success);

  const auto bad = scratch("codes_unstable");
  auto kv = small_run(bad, false, 1000.0);
  kv.set("time.dt", "5");
  std::ostringstream log;
  EXPECT_EQ(run(resolve_config(kv), log), ExitCode::instability);
  // Either the stage check or the neutrality guard trips first; both report the time.
  EXPECT_NE(log.str().find("at t = "), std::string::npos) << log.str();
  EXPECT_TRUE(fs::exists(bad / "state_last_good.bin"));

  const auto blocker = scratch("codes_io") / "file";
  std::ofstream(blocker) << "x";
  EXPECT_EQ(run_quiet(small_run(blocker / "out", false, 0.1)), ExitCode::io);
}

TEST(ExitCodes, ThroughCommandLine) {
  const auto dir = scratch("cli");
  const std::string cli = HVP_CLI_PATH;
  auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  std::ofstream(dir / "good.cfg") << "scenario.name = landau_linear_1d\ngrid.n = 16\ngrid.nx = 8\ntime.t_final = 0.2\n";
  std::ofstream(dir / "bad.cfg") << "scenario.name = landau_linear_1d\ngrid.n = 7\ntime.cfl = 3\n";
  EXPECT_EQ(status(cli + " run --config " + (dir / "good.cfg").string() + " --out " + (dir / "out").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "timeseries.csv"));
  EXPECT_EQ(status(cli + " run --config " + (dir / "bad.cfg").string()), 2);
  EXPECT_EQ(status(cli + " run --config " + (dir / "good.cfg").string() + " --override time.dt=5 --override "
                   "time.t_final=1000 --override adaptivity.enabled=false --out " + (dir / "boom").string()),
            3);
  EXPECT_EQ(status(cli + " run --config " + (dir / "missing.cfg").string()), 4);
  EXPECT_EQ(status(cli + " list-scenarios"), 0);
  EXPECT_EQ(status(cli + " print-defaults two_stream_2d"), 0);
  EXPECT_EQ(status(cli + " --no-such-flag"), 2);
}
