#ifndef HVP_OUTPUT_HPP
#define HVP_OUTPUT_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hvp/config.hpp"
#include "hvp/core_state.hpp"
#include "hvp/errors.hpp"
#include "hvp/hermite.hpp"

namespace hvp {

namespace detail {

inline void write_f64_le(std::ostream& out, std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  } else {
    for (double v : values) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      char bytes[8];
      for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
      out.write(bytes, 8);
    }
  }
}

inline std::vector<double> read_f64_le(std::istream& in, std::size_t count) {
  std::vector<double> values(count);
  std::vector<unsigned char> bytes(count * 8);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) throw io_error("binary file shorter than its sidecar says");
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + static_cast<std::size_t>(b)]) << (8 * b);
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

inline std::ofstream open_for_write(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(path, mode | std::ios::trunc);
  if (!f) throw io_error("cannot write '" + path.string() + "'");
  return f;
}

inline std::string join_numbers(std::span<const double> v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ",") + format_number(x);
  return s;
}

} // namespace detail

// Phase-space cut f(row coordinate, v) on a uniform velocity grid.
struct Snapshot {
  std::string plane;       // e.g. "x1-v1"
  std::string fixed;       // coordinates held constant in 2D cuts
  std::size_t rows = 0;    // spatial collocation points
  std::size_t cols = 0;    // velocity samples
  double length = 0.0;     // spatial period of the row axis
  VelocityGrid v_grid;
  double t = 0.0;
  Scaling beta{1.0, 1.0};
  int dims = 1;
  std::vector<double> values; // row-major rows x cols
};

inline std::vector<double> velocity_samples(const VelocityGrid& g) {
  std::vector<double> v(static_cast<std::size_t>(g.points));
  const double h = (g.v_max - g.v_min) / (g.points - 1);
  for (int m = 0; m < g.points; ++m) v[static_cast<std::size_t>(m)] = g.v_min + h * m;
  return v;
}

// Basis table B[m * (order+1) + k] = H_k^beta(v_m).
inline std::vector<double> basis_table(int order, double beta, std::span<const double> v) {
  const std::size_t n = static_cast<std::size_t>(order) + 1;
  std::vector<double> table(v.size() * n);
  for (std::size_t m = 0; m < v.size(); ++m) eval_basis_all(order, beta, v[m], std::span<double>(table).subspan(m * n, n));
  return table;
}

// 1D: f(x, v). 2D: the cuts f(v1, 0, x, L/2) and f(0, v2, L/2, y).
inline std::vector<Snapshot> reconstruct_snapshot(const SpectralState& state, const VelocityGrid& vg) {
  const auto& g = state.grid();
  const auto v = velocity_samples(vg);
  const auto f = state.coeffs();
  const std::size_t nv = v.size();
  std::vector<Snapshot> out;
  if (g.dims == 1) {
    const std::size_t s = g.spatial_size();
    const std::size_t n = g.modes(0);
    const auto table = basis_table(g.order[0], state.beta(0), v);
    Snapshot snap{"x1-v1", "", s, nv, g.length[0], vg, state.t(), state.beta(), 1, std::vector<double>(s * nv, 0.0)};
    for (std::size_t j = 0; j < s; ++j)
      for (std::size_t m = 0; m < nv; ++m) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += f[k * s + j] * table[m * n + k];
        snap.values[j * nv + m] = acc;
      }
    out.push_back(std::move(snap));
    return out;
  }
  const std::size_t nx = static_cast<std::size_t>(g.nx[0]);
  const std::size_t ny = static_cast<std::size_t>(g.nx[1]);
  const std::size_t n1 = g.modes(0);
  const std::size_t n2 = g.modes(1);
  const std::size_t s = g.spatial_size();
  std::vector<double> at_zero1(n1), at_zero2(n2);
  eval_basis_all(g.order[0], state.beta(0), 0.0, at_zero1);
  eval_basis_all(g.order[1], state.beta(1), 0.0, at_zero2);
  const auto table1 = basis_table(g.order[0], state.beta(0), v);
  const auto table2 = basis_table(g.order[1], state.beta(1), v);

  Snapshot cut1{"x1-v1", "v2=0,x2=L/2", nx, nv, g.length[0], vg, state.t(), state.beta(), 2, std::vector<double>(nx * nv, 0.0)};
  const std::size_t jy = ny / 2;
  for (std::size_t jx = 0; jx < nx; ++jx) {
    // reduce over k2 at v2 = 0 first
    std::vector<double> red(n1, 0.0);
    for (std::size_t k1 = 0; k1 < n1; ++k1)
      for (std::size_t k2 = 0; k2 < n2; ++k2) red[k1] += f[(k1 * n2 + k2) * s + jx * ny + jy] * at_zero2[k2];
    for (std::size_t m = 0; m < nv; ++m) {
      double acc = 0.0;
      for (std::size_t k1 = 0; k1 < n1; ++k1) acc += red[k1] * table1[m * n1 + k1];
      cut1.values[jx * nv + m] = acc;
    }
  }
  out.push_back(std::move(cut1));

  Snapshot cut2{"x2-v2", "v1=0,x1=L/2", ny, nv, g.length[1], vg, state.t(), state.beta(), 2, std::vector<double>(ny * nv, 0.0)};
  const std::size_t jx = nx / 2;
  for (std::size_t j = 0; j < ny; ++j) {
    std::vector<double> red(n2, 0.0);
    for (std::size_t k1 = 0; k1 < n1; ++k1)
      for (std::size_t k2 = 0; k2 < n2; ++k2) red[k2] += f[(k1 * n2 + k2) * s + jx * ny + j] * at_zero1[k1];
    for (std::size_t m = 0; m < nv; ++m) {
      double acc = 0.0;
      for (std::size_t k2 = 0; k2 < n2; ++k2) acc += red[k2] * table2[m * n2 + k2];
      cut2.values[j * nv + m] = acc;
    }
  }
  out.push_back(std::move(cut2));
  return out;
}

// Writes `<stem>.bin` and the text sidecar `<stem>.txt`.
inline void write_snapshot(const Snapshot& snap, const std::filesystem::path& stem) {
  auto bin = detail::open_for_write(stem.string() + ".bin", std::ios::binary);
  detail::write_f64_le(bin, snap.values);
  if (!bin) throw io_error("failed writing '" + stem.string() + ".bin'");
  auto txt = detail::open_for_write(stem.string() + ".txt");
  using detail::format_number;
  txt << "format = float64-le\n"
      << "layout = row-major\n"
      << "shape = " << snap.rows << "," << snap.cols << "\n"
      << "plane = " << snap.plane << "\n";
  if (!snap.fixed.empty()) txt << "fixed = " << snap.fixed << "\n";
  txt << "rows = collocation x_j = j*L/" << snap.rows << ", L = " << format_number(snap.length) << "\n"
      << "cols = uniform v from " << format_number(snap.v_grid.v_min) << " to " << format_number(snap.v_grid.v_max)
      << " inclusive, " << snap.cols << " points\n"
      << "t = " << format_number(snap.t) << "\n"
      << "beta = " << detail::join_numbers(std::span<const double>(snap.beta.data(), static_cast<std::size_t>(snap.dims)))
      << "\n";
  if (!txt) throw io_error("failed writing '" + stem.string() + ".txt'");
}

// Raw coefficient tensor plus the grid needed to rebuild the state exactly.
inline void write_state_dump(const SpectralState& state, const std::filesystem::path& stem) {
  auto bin = detail::open_for_write(stem.string() + ".bin", std::ios::binary);
  detail::write_f64_le(bin, state.coeffs());
  if (!bin) throw io_error("failed writing '" + stem.string() + ".bin'");
  const auto& g = state.grid();
  const auto dims = static_cast<std::size_t>(g.dims);
  KeyValueConfig side;
  using detail::format_number;
  side.set("state.dims", std::to_string(g.dims));
  std::string order, nx;
  for (std::size_t d = 0; d < dims; ++d) {
    order += (d ? "," : "") + std::to_string(g.order[d]);
    nx += (d ? "," : "") + std::to_string(g.nx[d]);
  }
  side.set("state.order", order);
  side.set("state.nx", nx);
  side.set("state.length", detail::join_numbers(std::span<const double>(g.length.data(), dims)));
  side.set("state.rho0", format_number(g.rho0));
  side.set("state.beta", detail::join_numbers(std::span<const double>(state.beta().data(), dims)));
  side.set("state.t", format_number(state.t()));
  side.set("state.layout", "velocity-major float64-le");
  auto txt = detail::open_for_write(stem.string() + ".txt");
  txt << to_text(side);
  if (!txt) throw io_error("failed writing '" + stem.string() + ".txt'");
}

inline SpectralState read_state_dump(const std::filesystem::path& stem) {
  const auto side = KeyValueConfig::load(stem.string() + ".txt");
  auto field = [&](const std::string& key) {
    auto v = side.get(key);
    if (!v) throw io_error("state sidecar lacks " + key);
    return *v;
  };
  auto numbers = [&](const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(field(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto x = detail::Reader::parse_double(item);
      if (!x) throw io_error("bad number in state sidecar: " + item);
      out.push_back(*x);
    }
    return out;
  };
  GridConfig g;
  g.dims = std::stoi(field("state.dims"));
  const auto order = numbers("state.order");
  const auto nx = numbers("state.nx");
  const auto length = numbers("state.length");
  const auto beta = numbers("state.beta");
  if (g.dims < 1 || g.dims > 2 || order.size() != static_cast<std::size_t>(g.dims) || nx.size() != order.size() ||
      length.size() != order.size() || beta.size() != order.size())
    throw io_error("inconsistent state sidecar");
  Scaling b{1.0, 1.0};
  for (std::size_t d = 0; d < order.size(); ++d) {
    g.order[d] = static_cast<int>(order[d]);
    g.nx[d] = static_cast<int>(nx[d]);
    g.length[d] = length[d];
    b[d] = beta[d];
  }
  g.rho0 = numbers("state.rho0").at(0);
  const double t = numbers("state.t").at(0);
  std::ifstream bin(stem.string() + ".bin", std::ios::binary);
  if (!bin) throw io_error("cannot read '" + stem.string() + ".bin'");
  return SpectralState(g, b, detail::read_f64_le(bin, g.size()), t);
}

// Appends one CSV row per record, flushing as it goes.
class TimeseriesWriter {
public:
  TimeseriesWriter(const std::filesystem::path& path, int dims) : dims_(dims), out_(detail::open_for_write(path)) {
    out_ << header(dims) << "\n";
    out_.flush();
  }

  static std::string header(int dims) {
    std::string h = "t,beta_1";
    if (dims == 2) h += ",beta_2";
    h += ",W_E,W_K,indicator_1";
    if (dims == 2) h += ",indicator_2";
    h += ",mass_rel_err,momentum_err_1";
    if (dims == 2) h += ",momentum_err_2";
    h += ",energy_rel_err,l2_rel_err,case3_events,wall_seconds_cumulative";
    return h;
  }

  void write(const DiagnosticsRecord& r, std::size_t case3_events, double wall_seconds) {
    using detail::format_number;
    std::string row = format_number(r.t) + "," + format_number(r.beta[0]);
    if (dims_ == 2) row += "," + format_number(r.beta[1]);
    row += "," + format_number(r.field_energy) + "," + format_number(r.kinetic_energy) + "," + format_number(r.indicator[0]);
    if (dims_ == 2) row += "," + format_number(r.indicator[1]);
    row += "," + format_number(r.mass_rel_err) + "," + format_number(r.momentum_abs_err[0]);
    if (dims_ == 2) row += "," + format_number(r.momentum_abs_err[1]);
    row += "," + format_number(r.energy_rel_err) + "," + format_number(r.l2_rel_err) + "," + std::to_string(case3_events) +
           "," + format_number(wall_seconds);
    out_ << row << "\n";
    out_.flush();
    if (!out_) throw io_error("failed writing timeseries row");
  }

private:
  int dims_;
  std::ofstream out_;
};

} // namespace hvp

#endif // HVP_OUTPUT_HPP
