#ifndef MCSBD_IO_HPP_
#define MCSBD_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcsbd/model.hpp"
#include "mcsbd/recover.hpp"

namespace mcsbd::io {

/*
 * Binary layouts (all integers and doubles little-endian):
 *
 *   MCSBD1   "MCSBD1" u32 n, u32 p, u8 kind, payload
 *     kind 0 (signal set):   p x n f64, channel-major
 *     kind 1 (ground truth): f64 theta, u64 seed, n f64 kernel, p x n f64 signals
 *
 *   MCSBD2   "MCSBD2" u32 n1, u32 n2, u32 p, p x n1 x n2 f64, row-major per frame
 */
enum class SetKind : std::uint8_t { signals = 0, ground_truth = 1 };

inline constexpr char kMagic1D[6] = {'M', 'C', 'S', 'B', 'D', '1'};
inline constexpr char kMagic2D[6] = {'M', 'C', 'S', 'B', 'D', '2'};

namespace detail {

template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is, const std::filesystem::path& path) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw IoError("truncated file: " + path.string());
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline std::ofstream open_out(const std::filesystem::path& path, bool binary) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  return os;
}

inline std::ifstream open_in(const std::filesystem::path& path, bool binary) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) throw IoError("cannot open for reading: " + path.string());
  return is;
}

inline void check_magic(std::istream& is, const char (&magic)[6], const std::filesystem::path& path) {
  char got[6];
  if (!is.read(got, 6) || std::memcmp(got, magic, 6) != 0) {
    throw IoError("bad magic (expected " + std::string(magic, 6) + "): " + path.string());
  }
}

inline std::uint32_t narrow32(std::size_t v) {
  if (v > 0xFFFFFFFFull) throw IoError("dimension does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

inline void put_field(std::ostream& os, const SignalVec& v) {
  for (double x : v) put_le<double>(os, x);
}

inline SignalVec get_field(std::istream& is, std::size_t n, const std::filesystem::path& path) {
  std::vector<double> data(n);
  for (auto& x : data) x = get_le<double>(is, path);
  return SignalVec(std::move(data));
}

inline void expect_eof(std::istream& is, const std::filesystem::path& path) {
  if (is.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in " + path.string());
}

}  // namespace detail

inline void write_signal_set(const std::filesystem::path& path, const std::vector<SignalVec>& channels) {
  if (channels.empty()) throw IoError("refusing to write an empty signal set: " + path.string());
  auto os = detail::open_out(path, true);
  os.write(kMagic1D, 6);
  detail::put_le<std::uint32_t>(os, detail::narrow32(channels.front().size()));
  detail::put_le<std::uint32_t>(os, detail::narrow32(channels.size()));
  detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(SetKind::signals));
  for (const auto& c : channels) {
    if (c.size() != channels.front().size()) throw DimensionError("signal set channels differ in length");
    detail::put_field(os, c);
  }
  if (!os) throw IoError("write failed: " + path.string());
}

inline std::vector<SignalVec> read_signal_set(const std::filesystem::path& path) {
  auto is = detail::open_in(path, true);
  detail::check_magic(is, kMagic1D, path);
  const auto n = detail::get_le<std::uint32_t>(is, path);
  const auto p = detail::get_le<std::uint32_t>(is, path);
  const auto kind = detail::get_le<std::uint8_t>(is, path);
  if (kind != static_cast<std::uint8_t>(SetKind::signals)) {
    throw IoError("expected a signal set (kind 0) in " + path.string());
  }
  if (n == 0 || p == 0) throw IoError("empty signal set in " + path.string());
  std::vector<SignalVec> out;
  for (std::uint32_t i = 0; i < p; ++i) out.push_back(detail::get_field(is, n, path));
  detail::expect_eof(is, path);
  return out;
}

inline void write_observations(const std::filesystem::path& path, const ObservationSet<1>& obs) {
  write_signal_set(path, obs.channels);
}

inline ObservationSet<1> read_observations(const std::filesystem::path& path) {
  return ObservationSet<1>(read_signal_set(path));
}

inline void write_ground_truth(const std::filesystem::path& path, const GroundTruth<1>& truth) {
  auto os = detail::open_out(path, true);
  os.write(kMagic1D, 6);
  detail::put_le<std::uint32_t>(os, detail::narrow32(truth.kernel.size()));
  detail::put_le<std::uint32_t>(os, detail::narrow32(truth.signals.size()));
  detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(SetKind::ground_truth));
  detail::put_le<double>(os, truth.theta);
  detail::put_le<std::uint64_t>(os, truth.seed);
  detail::put_field(os, truth.kernel);
  for (const auto& x : truth.signals) {
    if (x.size() != truth.kernel.size()) throw DimensionError("ground truth signal length mismatch");
    detail::put_field(os, x);
  }
  if (!os) throw IoError("write failed: " + path.string());
}

inline GroundTruth<1> read_ground_truth(const std::filesystem::path& path) {
  auto is = detail::open_in(path, true);
  detail::check_magic(is, kMagic1D, path);
  const auto n = detail::get_le<std::uint32_t>(is, path);
  const auto p = detail::get_le<std::uint32_t>(is, path);
  const auto kind = detail::get_le<std::uint8_t>(is, path);
  if (kind != static_cast<std::uint8_t>(SetKind::ground_truth)) {
    throw IoError("expected ground truth (kind 1) in " + path.string());
  }
  if (n == 0) throw IoError("empty ground truth in " + path.string());
  GroundTruth<1> truth;
  truth.theta = detail::get_le<double>(is, path);
  truth.seed = detail::get_le<std::uint64_t>(is, path);
  truth.kernel = detail::get_field(is, n, path);
  for (std::uint32_t i = 0; i < p; ++i) truth.signals.push_back(detail::get_field(is, n, path));
  detail::expect_eof(is, path);
  return truth;
}

inline void write_frames(const std::filesystem::path& path, const std::vector<SignalGrid>& frames) {
  if (frames.empty()) throw IoError("refusing to write an empty frame stack: " + path.string());
  const auto shape = frames.front().shape();
  auto os = detail::open_out(path, true);
  os.write(kMagic2D, 6);
  detail::put_le<std::uint32_t>(os, detail::narrow32(shape[0]));
  detail::put_le<std::uint32_t>(os, detail::narrow32(shape[1]));
  detail::put_le<std::uint32_t>(os, detail::narrow32(frames.size()));
  for (const auto& f : frames) {
    if (f.shape() != shape) throw DimensionError("frame stack frames differ in shape");
    for (double x : f) detail::put_le<double>(os, x);
  }
  if (!os) throw IoError("write failed: " + path.string());
}

inline std::vector<SignalGrid> read_frames(const std::filesystem::path& path) {
  auto is = detail::open_in(path, true);
  detail::check_magic(is, kMagic2D, path);
  const auto n1 = detail::get_le<std::uint32_t>(is, path);
  const auto n2 = detail::get_le<std::uint32_t>(is, path);
  const auto p = detail::get_le<std::uint32_t>(is, path);
  if (n1 == 0 || n2 == 0 || p == 0) throw IoError("empty frame stack in " + path.string());
  std::vector<SignalGrid> out;
  for (std::uint32_t f = 0; f < p; ++f) {
    std::vector<double> data(static_cast<std::size_t>(n1) * n2);
    for (auto& x : data) x = detail::get_le<double>(is, path);
    out.emplace_back(Shape<2>{n1, n2}, std::move(data));
  }
  detail::expect_eof(is, path);
  return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("not a number '" + s + "' in " + path.string());
  }
}

inline bool is_numeric_row(const std::vector<std::string>& cells) {
  if (cells.empty()) return false;
  char* end = nullptr;
  std::strtod(cells.front().c_str(), &end);
  return end != cells.front().c_str();
}

}  // namespace detail

/// One channel per column, one sample per row, header "c0,c1,...".
inline void write_channels_csv(const std::filesystem::path& path, const std::vector<SignalVec>& channels,
                               const std::vector<std::string>& names = {}) {
  if (channels.empty()) throw IoError("refusing to write an empty CSV: " + path.string());
  auto os = detail::open_out(path, false);
  for (std::size_t c = 0; c < channels.size(); ++c) {
    os << (c ? "," : "") << (c < names.size() ? names[c] : "c" + std::to_string(c));
  }
  os << '\n';
  os.precision(17);
  for (std::size_t i = 0; i < channels.front().size(); ++i) {
    for (std::size_t c = 0; c < channels.size(); ++c) os << (c ? "," : "") << channels[c][i];
    os << '\n';
  }
  if (!os) throw IoError("write failed: " + path.string());
}

/// Reads a column-per-channel CSV; an optional non-numeric header row and
/// '#' comment lines are skipped.
inline std::vector<SignalVec> read_channels_csv(const std::filesystem::path& path) {
  auto is = detail::open_in(path, false);
  std::vector<std::vector<double>> columns;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto cells = detail::split(line);
    if (!detail::is_numeric_row(cells)) {
      if (columns.empty()) continue;  // header
      throw IoError("non-numeric row in " + path.string());
    }
    if (columns.empty()) columns.resize(cells.size());
    if (cells.size() != columns.size()) throw IoError("ragged CSV row in " + path.string());
    for (std::size_t c = 0; c < cells.size(); ++c) columns[c].push_back(detail::parse_double(cells[c], path));
  }
  if (columns.empty() || columns.front().empty()) throw IoError("no data in " + path.string());
  std::vector<SignalVec> out;
  for (auto& col : columns) out.emplace_back(std::move(col));
  return out;
}

/// Frames as plain CSV grids: rows of comma-separated values, frames
/// separated by blank lines.
inline std::vector<SignalGrid> read_frames_csv(const std::filesystem::path& path) {
  auto is = detail::open_in(path, false);
  std::vector<SignalGrid> frames;
  std::vector<std::vector<double>> rows;
  auto flush = [&] {
    if (rows.empty()) return;
    const std::size_t n2 = rows.front().size();
    std::vector<double> data;
    for (const auto& r : rows) {
      if (r.size() != n2) throw IoError("ragged grid row in " + path.string());
      data.insert(data.end(), r.begin(), r.end());
    }
    frames.emplace_back(Shape<2>{rows.size(), n2}, std::move(data));
    rows.clear();
  };
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '#') continue;
    if (line.find_first_not_of(" \t") == std::string::npos) {
      flush();
      continue;
    }
    std::vector<double> row;
    for (const auto& cell : detail::split(line)) row.push_back(detail::parse_double(cell, path));
    rows.push_back(std::move(row));
  }
  flush();
  if (frames.empty()) throw IoError("no frames in " + path.string());
  for (const auto& f : frames) {
    if (f.shape() != frames.front().shape()) throw IoError("frames differ in shape in " + path.string());
  }
  return frames;
}

inline void write_frames_csv(const std::filesystem::path& path, const std::vector<SignalGrid>& frames) {
  auto os = detail::open_out(path, false);
  os.precision(17);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (f) os << '\n';
    for (std::size_t i = 0; i < frames[f].extent(0); ++i) {
      for (std::size_t j = 0; j < frames[f].extent(1); ++j) os << (j ? "," : "") << frames[f](i, j);
      os << '\n';
    }
  }
}

/// Loads observations from either format, chosen by extension (.csv) or magic.
inline ObservationSet<1> load_observations(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return ObservationSet<1>(read_channels_csv(path));
  return read_observations(path);
}

inline std::vector<SignalGrid> load_frames(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return read_frames_csv(path);
  return read_frames(path);
}

// ---------------------------------------------------------------------------
// Recovery results: metrics.json plus binary signal files.
// ---------------------------------------------------------------------------

struct SolveSummary {
  std::string loss;
  double mu = 0.0;
  double theta = 0.0;
  std::size_t phase1_iters = 0;
  std::string phase1_stop;
  std::size_t phase2_iters = 0;
  double final_zeta = 0.0;
  std::optional<double> rho_acc;
  std::optional<double> shift_dist;
  std::optional<bool> success;
};

inline nlohmann::json to_json(const SolveSummary& s) {
  nlohmann::json j;
  j["loss"] = s.loss;
  j["mu"] = s.mu;
  j["theta"] = s.theta;
  j["phase1_iters"] = s.phase1_iters;
  j["phase1_stop"] = s.phase1_stop;
  j["phase2_iters"] = s.phase2_iters;
  j["final_zeta"] = s.final_zeta;
  if (s.rho_acc) j["rho_acc"] = *s.rho_acc;
  if (s.shift_dist) j["shift_dist"] = *s.shift_dist;
  if (s.success) j["success"] = *s.success;
  return j;
}

template <std::size_t Rank>
nlohmann::json metrics_json(const RecoveryResult<Rank>& r) {
  return {{"rho_acc", r.rho_acc}, {"shift_dist", r.shift_dist}, {"success", r.success}};
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto os = detail::open_out(path, false);
  os << j.dump(2) << '\n';
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace mcsbd::io

#endif  // MCSBD_IO_HPP_
