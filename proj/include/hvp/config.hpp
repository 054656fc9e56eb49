#ifndef HVP_CONFIG_HPP
#define HVP_CONFIG_HPP

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hvp/diagnostics.hpp"
#include "hvp/errors.hpp"
#include "hvp/simulation.hpp"

namespace hvp {

inline constexpr int schema_version = 1;

// Every problem found while reading a configuration, reported together.
class config_errors : public config_error {
public:
  explicit config_errors(std::vector<std::string> problems)
      : config_error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s;
    for (const auto& x : p) s += (s.empty() ? "" : "\n") + x;
    return s;
  }
  std::vector<std::string> problems_;
};

// Flat `section.key = value` pairs; '#' starts a comment.
class KeyValueConfig {
public:
  static KeyValueConfig parse(const std::string& text, const std::string& origin = "config") {
    KeyValueConfig cfg;
    std::vector<std::string> problems;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        problems.push_back(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        continue;
      }
      const auto key = trim(line.substr(0, eq));
      const auto value = trim(line.substr(eq + 1));
      if (key.empty() || key.find('.') == std::string::npos) {
        problems.push_back(origin + ":" + std::to_string(lineno) + ": key '" + key + "' must be 'section.key'");
        continue;
      }
      if (cfg.values_.count(key)) {
        problems.push_back(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        continue;
      }
      cfg.values_[key] = value;
    }
    if (!problems.empty()) throw config_errors(problems);
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
  }

  // `key=value` command-line override; replaces any existing entry.
  void override_with(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw config_errors({"override '" + assignment + "' is not key=value"});
    values_[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  std::optional<std::string> get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

private:
  std::map<std::string, std::string> values_;
};

struct VelocityGrid {
  double v_min = -8.0;
  double v_max = 8.0;
  int points = 256;
};

struct OutputOptions {
  std::string dir = "out";
  std::vector<double> snapshot_times;
  VelocityGrid v_grid{};
  bool record_wall_time = false;
};

struct RunConfig {
  SimulationOptions sim;
  OutputOptions output;
  double t_final = 40.0;
  double record_interval = 0.0; // 0 records every step
  int threads = 1;
  TimeWindow fit_window{0.0, 15.0};
  double recurrence_factor = 10.0;
};

namespace detail {

// Exact text form of a double.
inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : std::to_string(v);
}

class Reader {
public:
  Reader(const KeyValueConfig& cfg, std::vector<std::string>& problems) : cfg_(cfg), problems_(problems) {}

  std::optional<std::string> raw(const std::string& key) {
    used_.push_back(key);
    return cfg_.get(key);
  }

  void number(const std::string& key, double& target) {
    if (auto v = raw(key)) {
      if (auto x = parse_double(*v)) target = *x;
      else problems_.push_back(key + ": '" + *v + "' is not a number");
    }
  }

  void integer(const std::string& key, int& target) {
    if (auto v = raw(key)) {
      int x = 0;
      auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), x);
      if (ec != std::errc() || p != v->data() + v->size()) problems_.push_back(key + ": '" + *v + "' is not an integer");
      else target = x;
    }
  }

  void boolean(const std::string& key, bool& target) {
    if (auto v = raw(key)) {
      if (*v == "true" || *v == "on" || *v == "1") target = true;
      else if (*v == "false" || *v == "off" || *v == "0") target = false;
      else problems_.push_back(key + ": '" + *v + "' is not a boolean");
    }
  }

  void text(const std::string& key, std::string& target) {
    if (auto v = raw(key)) target = *v;
  }

  // Numbers separated by `sep`.
  std::optional<std::vector<double>> list(const std::string& key, char sep) {
    auto v = raw(key);
    if (!v) return std::nullopt;
    std::vector<double> out;
    if (v->empty()) return out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, sep)) {
      auto x = parse_double(KeyValueConfig::trim(item));
      if (!x) {
        problems_.push_back(key + ": '" + item + "' is not a number");
        return std::nullopt;
      }
      out.push_back(*x);
    }
    return out;
  }

  void report_unknown() {
    for (const auto& [k, v] : cfg_.values())
      if (std::find(used_.begin(), used_.end(), k) == used_.end()) problems_.push_back(k + ": unknown key");
  }

  static std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return std::nullopt;
    return x;
  }

private:
  const KeyValueConfig& cfg_;
  std::vector<std::string>& problems_;
  std::vector<std::string> used_;
};

template <class F>
void collect(std::vector<std::string>& problems, F&& check) {
  try {
    check();
  } catch (const config_error& e) {
    problems.push_back(e.what());
  }
}

} // namespace detail

// Applies scenario defaults, then every key; throws config_errors listing all problems.
inline RunConfig resolve_config(const KeyValueConfig& cfg) {
  std::vector<std::string> problems;
  detail::Reader r(cfg, problems);
  r.raw("schema.version");
  auto name = r.raw("scenario.name");
  if (!name) throw config_errors({"scenario.name: required"});
  Scenario scenario{};
  try {
    scenario = parse_scenario(*name);
  } catch (const config_error& e) {
    throw config_errors({std::string("scenario.name: ") + e.what()});
  }

  RunConfig rc;
  rc.sim = SimulationOptions::defaults_for(scenario);
  auto& spec = rc.sim.scenario;
  rc.t_final = spec.default_t_final;
  const int dims = spec.dims;

  r.number("scenario.alpha", spec.alpha);
  r.number("scenario.k", spec.wavenumber);
  for (std::size_t i = 0; i < spec.component_count(); ++i) {
    const auto n = std::to_string(i + 1);
    r.number("scenario.rho" + n, spec.component(i).weight);
    r.number("scenario.u" + n, spec.component(i).mean);
    r.number("scenario.theta" + n, spec.component(i).variance);
  }

  auto& g = rc.sim.grid;
  int order_all = 0;
  r.integer("grid.n", order_all);
  if (order_all != 0) g.order = {order_all, dims == 2 ? order_all : 0};
  r.integer("grid.n1", g.order[0]);
  r.integer("grid.nx", g.nx[0]);
  double length = spec.default_length();
  r.number("grid.length", length);
  g.length = {length, dims == 2 ? length : 0.0};
  if (dims == 2) {
    r.integer("grid.n2", g.order[1]);
    r.integer("grid.ny", g.nx[1]);
  }
  for (int d = 0; d < dims; ++d) {
    const std::string key = "grid.beta" + std::to_string(d + 1);
    if (auto v = r.raw(key); v && *v != "auto") {
      if (auto x = detail::Reader::parse_double(*v)) rc.sim.initial_beta[static_cast<std::size_t>(d)] = *x;
      else problems.push_back(key + ": '" + *v + "' is neither a number nor 'auto'");
    }
  }
  r.number("grid.neutrality_tol", rc.sim.neutrality_tol);
  r.number("grid.tail_warn", rc.sim.tail_warn);

  auto& a = rc.sim.adaptivity;
  r.boolean("adaptivity.enabled", rc.sim.adaptive);
  r.number("adaptivity.q0", a.q0);
  r.number("adaptivity.beta_min", a.beta_min);
  r.number("adaptivity.beta_max", a.beta_max);
  r.number("adaptivity.eta_l", a.eta_l);
  r.number("adaptivity.eta_h", a.eta_h);
  r.number("adaptivity.f0_floor", a.floor);
  r.integer("adaptivity.max_iterations", a.max_iterations);

  auto& p = rc.sim.projection;
  r.integer("projection.n_b", p.substeps);
  r.number("projection.null_threshold", p.null_threshold);
  if (auto m = r.raw("projection.mode")) detail::collect(problems, [&] { p.mode = parse_conservation_mode(*m); });

  r.number("time.cfl", rc.sim.cfl);
  r.number("time.dt", rc.sim.fixed_dt);
  r.number("time.t_final", rc.t_final);
  r.number("time.record_interval", rc.record_interval);

  r.text("output.dir", rc.output.dir);
  if (auto times = r.list("output.snapshot_times", ',')) rc.output.snapshot_times = *times;
  if (auto vg = r.list("output.v_grid", ':')) {
    if (vg->size() != 3 || (*vg)[2] != std::floor((*vg)[2]))
      problems.push_back("output.v_grid: expected 'v_min:v_max:points'");
    else
      rc.output.v_grid = {(*vg)[0], (*vg)[1], static_cast<int>((*vg)[2])};
  }
  r.boolean("output.record_wall_time", rc.output.record_wall_time);
  r.integer("parallel.threads", rc.threads);
  if (auto w = r.list("diagnostics.fit_window", ':')) {
    if (w->size() != 2) problems.push_back("diagnostics.fit_window: expected 'begin:end'");
    else rc.fit_window = {(*w)[0], (*w)[1]};
  }
  r.number("diagnostics.recurrence_factor", rc.recurrence_factor);
  r.report_unknown();

  if (auto v = cfg.get("schema.version"); v && *v != std::to_string(schema_version))
    problems.push_back("schema.version: unsupported value '" + *v + "'");
  detail::collect(problems, [&] { spec.validate(); });
  detail::collect(problems, [&] { g.validate(); });
  if (rc.sim.adaptive) detail::collect(problems, [&] { a.validate(); });
  detail::collect(problems, [&] { p.validate(); });
  for (int d = 0; d < dims; ++d) {
    const auto& b = rc.sim.initial_beta[static_cast<std::size_t>(d)];
    if (b && !(*b > 0.0)) problems.push_back("grid.beta" + std::to_string(d + 1) + ": must be positive");
    if (b && rc.sim.adaptive && (*b < a.beta_min || *b > a.beta_max))
      problems.push_back("grid.beta" + std::to_string(d + 1) + ": outside [beta_min, beta_max]");
  }
  for (int d = 0; d < dims && g.length[d] > 0.0 && spec.wavenumber > 0.0; ++d) {
    const double periods = g.length[d] * spec.wavenumber / (2.0 * std::numbers::pi);
    if (std::fabs(periods - std::round(periods)) > 1e-9 || std::round(periods) < 1.0)
      problems.push_back("grid.length: must hold an integer number of wavelengths 2 pi / scenario.k");
  }
  if (!(rc.sim.cfl > 0.0 && rc.sim.cfl <= 1.0)) problems.push_back("time.cfl: must lie in (0, 1]");
  if (!(rc.sim.fixed_dt >= 0.0)) problems.push_back("time.dt: must be >= 0 (0 selects the CFL step)");
  if (!(rc.t_final >= 0.0) || !std::isfinite(rc.t_final)) problems.push_back("time.t_final: must be >= 0");
  if (!(rc.record_interval >= 0.0)) problems.push_back("time.record_interval: must be >= 0");
  if (!(rc.sim.neutrality_tol > 0.0)) problems.push_back("grid.neutrality_tol: must be positive");
  if (rc.output.dir.empty()) problems.push_back("output.dir: must not be empty");
  if (!(rc.output.v_grid.v_min < rc.output.v_grid.v_max) || !std::isfinite(rc.output.v_grid.v_max) ||
      !std::isfinite(rc.output.v_grid.v_min) || rc.output.v_grid.points < 2)
    problems.push_back("output.v_grid: need finite v_min < v_max and at least 2 points");
  for (double t : rc.output.snapshot_times)
    if (!(t >= 0.0) || t > rc.t_final) problems.push_back("output.snapshot_times: " + detail::format_number(t) +
                                                          " outside [0, t_final]");
  if (rc.threads < 1) problems.push_back("parallel.threads: must be >= 1");
  if (!(rc.fit_window.begin < rc.fit_window.end)) problems.push_back("diagnostics.fit_window: begin must precede end");
  if (!(rc.recurrence_factor > 1.0)) problems.push_back("diagnostics.recurrence_factor: must exceed 1");

  if (!problems.empty()) throw config_errors(problems);
  std::sort(rc.output.snapshot_times.begin(), rc.output.snapshot_times.end());
  return rc;
}

// Fully resolved key set; loading it reproduces `rc`.
inline KeyValueConfig manifest(const RunConfig& rc) {
  using detail::format_number;
  KeyValueConfig m;
  const auto& s = rc.sim;
  const int dims = s.scenario.dims;
  m.set("schema.version", std::to_string(schema_version));
  m.set("scenario.name", to_string(s.scenario.name));
  m.set("scenario.alpha", format_number(s.scenario.alpha));
  m.set("scenario.k", format_number(s.scenario.wavenumber));
  for (std::size_t i = 0; i < s.scenario.component_count(); ++i) {
    const auto n = std::to_string(i + 1);
    m.set("scenario.rho" + n, format_number(s.scenario.component(i).weight));
    m.set("scenario.u" + n, format_number(s.scenario.component(i).mean));
    m.set("scenario.theta" + n, format_number(s.scenario.component(i).variance));
  }
  m.set("grid.n1", std::to_string(s.grid.order[0]));
  m.set("grid.nx", std::to_string(s.grid.nx[0]));
  m.set("grid.length", format_number(s.grid.length[0]));
  if (dims == 2) {
    m.set("grid.n2", std::to_string(s.grid.order[1]));
    m.set("grid.ny", std::to_string(s.grid.nx[1]));
  }
  for (int d = 0; d < dims; ++d) {
    const auto& b = s.initial_beta[static_cast<std::size_t>(d)];
    m.set("grid.beta" + std::to_string(d + 1), b ? format_number(*b) : "auto");
  }
  m.set("grid.neutrality_tol", format_number(s.neutrality_tol));
  m.set("grid.tail_warn", format_number(s.tail_warn));
  m.set("adaptivity.enabled", s.adaptive ? "true" : "false");
  m.set("adaptivity.q0", format_number(s.adaptivity.q0));
  m.set("adaptivity.beta_min", format_number(s.adaptivity.beta_min));
  m.set("adaptivity.beta_max", format_number(s.adaptivity.beta_max));
  m.set("adaptivity.eta_l", format_number(s.adaptivity.eta_l));
  m.set("adaptivity.eta_h", format_number(s.adaptivity.eta_h));
  m.set("adaptivity.f0_floor", format_number(s.adaptivity.floor));
  m.set("adaptivity.max_iterations", std::to_string(s.adaptivity.max_iterations));
  m.set("projection.n_b", std::to_string(s.projection.substeps));
  m.set("projection.null_threshold", format_number(s.projection.null_threshold));
  m.set("projection.mode", to_string(s.projection.mode));
  m.set("time.cfl", format_number(s.cfl));
  m.set("time.dt", format_number(s.fixed_dt));
  m.set("time.t_final", format_number(rc.t_final));
  m.set("time.record_interval", format_number(rc.record_interval));
  m.set("output.dir", rc.output.dir);
  std::string times;
  for (double t : rc.output.snapshot_times) times += (times.empty() ? "" : ",") + format_number(t);
  m.set("output.snapshot_times", times);
  m.set("output.v_grid", format_number(rc.output.v_grid.v_min) + ":" + format_number(rc.output.v_grid.v_max) + ":" +
                             std::to_string(rc.output.v_grid.points));
  m.set("output.record_wall_time", rc.output.record_wall_time ? "true" : "false");
  m.set("parallel.threads", std::to_string(rc.threads));
  m.set("diagnostics.fit_window", format_number(rc.fit_window.begin) + ":" + format_number(rc.fit_window.end));
  m.set("diagnostics.recurrence_factor", format_number(rc.recurrence_factor));
  return m;
}

inline std::string to_text(const KeyValueConfig& cfg) {
  std::string s;
  for (const auto& [k, v] : cfg.values()) s += k + " = " + v + "\n";
  return s;
}

} // namespace hvp

#endif // HVP_CONFIG_HPP
