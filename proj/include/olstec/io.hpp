#pragma once

// File formats.
//
// TNS3 / MSK3 binary tensors, all integers and reals little-endian:
//   bytes 0..3   magic "TNS3" (values) or "MSK3" (mask)
//   u32          version = 1
//   u32 L, u32 W, u32 T
//   payload      T slices in time order, each L x W row-major;
//                TNS3: IEEE-754 binary64 per entry, MSK3: one byte in {0, 1}.
// The payload length must match the header exactly.
//
// Results CSV: header `t,residual,running_avg,elapsed_ms,algo,variant`, reals
// printed with 17 significant digits so they re-read bit-exactly.

#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "olstec/error.hpp"
#include "olstec/matrix.hpp"
#include "olstec/random.hpp"
#include "olstec/synth.hpp"

namespace olstec::io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

inline constexpr std::array<char, 4> kTensorMagic{'T', 'N', 'S', '3'};
inline constexpr std::array<char, 4> kMaskMagic{'M', 'S', 'K', '3'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 20;

struct TensorShape {
  std::size_t rows = 0;   // L
  std::size_t cols = 0;   // W
  std::size_t steps = 0;  // T
  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

inline double get_f64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(path.string() + ": write failed");
}

inline std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw FormatError(std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

template <typename T>
TensorShape common_shape(std::span<const Matrix<T>> slices) {
  if (slices.empty()) return {};
  TensorShape s{slices.front().rows(), slices.front().cols(), slices.size()};
  for (const auto& m : slices)
    if (!m.same_shape(s.rows, s.cols)) throw DimensionError("write: slices differ in shape");
  return s;
}

inline std::string header(const std::array<char, 4>& magic, const TensorShape& s) {
  std::string out(magic.begin(), magic.end());
  put_u32(out, kFormatVersion);
  put_u32(out, checked_u32(s.rows, "L"));
  put_u32(out, checked_u32(s.cols, "W"));
  put_u32(out, checked_u32(s.steps, "T"));
  return out;
}

inline TensorShape parse_header(const std::string& bytes, const std::array<char, 4>& magic,
                                std::size_t entry_bytes, const std::string& origin) {
  if (bytes.size() < kHeaderBytes) {
    throw FormatError(origin + ": file shorter than the " + std::to_string(kHeaderBytes) +
                      "-byte header");
  }
  if (std::memcmp(bytes.data(), magic.data(), 4) != 0) {
    throw FormatError(origin + ": bad magic, expected \"" + std::string(magic.begin(), magic.end()) +
                      "\"");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t version = get_u32(p + 4);
  if (version != kFormatVersion)
    throw FormatError(origin + ": unsupported version " + std::to_string(version));
  TensorShape s{get_u32(p + 8), get_u32(p + 12), get_u32(p + 16)};
  const std::size_t expected = s.rows * s.cols * s.steps * entry_bytes;
  const std::size_t actual = bytes.size() - kHeaderBytes;
  if (actual != expected) {
    throw FormatError(origin + ": header declares " + std::to_string(s.rows) + "x" +
                      std::to_string(s.cols) + "x" + std::to_string(s.steps) + " (" +
                      std::to_string(expected) + " payload bytes) but payload has " +
                      std::to_string(actual) + " bytes");
  }
  return s;
}

} // namespace detail

/// Serializes slices to an in-memory TNS3 image.
inline std::string encode_tensor(std::span<const RealMatrix> slices) {
  const TensorShape s = detail::common_shape(slices);
  std::string out = detail::header(kTensorMagic, s);
  out.reserve(kHeaderBytes + s.rows * s.cols * s.steps * 8);
  for (const auto& m : slices)
    for (double v : m.values()) {
      if (!std::isfinite(v)) throw FormatError("write_tensor: non-finite value");
      detail::put_f64(out, v);
    }
  return out;
}

inline std::vector<RealMatrix> decode_tensor(const std::string& bytes,
                                             const std::string& origin = "<memory>") {
  const TensorShape s = detail::parse_header(bytes, kTensorMagic, 8, origin);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + kHeaderBytes;
  std::vector<RealMatrix> slices;
  slices.reserve(s.steps);
  for (std::size_t t = 0; t < s.steps; ++t) {
    RealMatrix m(s.rows, s.cols);
    for (double& v : m.values()) {
      v = detail::get_f64(p);
      p += 8;
      if (!std::isfinite(v)) {
        throw FormatError(origin + ": non-finite value in slice " + std::to_string(t + 1));
      }
    }
    slices.push_back(std::move(m));
  }
  return slices;
}

inline std::string encode_mask(std::span<const MaskMatrix> masks) {
  const TensorShape s = detail::common_shape(masks);
  std::string out = detail::header(kMaskMagic, s);
  for (const auto& m : masks)
    for (auto v : m.values()) out.push_back(v ? '\1' : '\0');
  return out;
}

inline std::vector<MaskMatrix> decode_mask(const std::string& bytes,
                                           const std::string& origin = "<memory>") {
  const TensorShape s = detail::parse_header(bytes, kMaskMagic, 1, origin);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + kHeaderBytes;
  std::vector<MaskMatrix> masks;
  masks.reserve(s.steps);
  for (std::size_t t = 0; t < s.steps; ++t) {
    MaskMatrix m(s.rows, s.cols);
    for (auto& v : m.values()) {
      if (*p > 1) {
        throw FormatError(origin + ": mask byte " + std::to_string(*p) + " in slice " +
                          std::to_string(t + 1) + " is not 0 or 1");
      }
      v = *p++;
    }
    masks.push_back(std::move(m));
  }
  return masks;
}

inline void write_tensor(const std::filesystem::path& path, std::span<const RealMatrix> slices) {
  detail::write_file(path, encode_tensor(slices));
}

inline std::vector<RealMatrix> read_tensor(const std::filesystem::path& path) {
  return decode_tensor(detail::read_file(path), path.string());
}

inline void write_mask(const std::filesystem::path& path, std::span<const MaskMatrix> masks) {
  detail::write_file(path, encode_mask(masks));
}

inline std::vector<MaskMatrix> read_mask(const std::filesystem::path& path) {
  return decode_mask(detail::read_file(path), path.string());
}

/// i.i.d. Bernoulli(ratio) per entry per slice, reproducible from `seed`.
inline std::vector<MaskMatrix> generate_mask(const TensorShape& shape, double ratio,
                                             std::uint64_t seed) {
  olstec::detail::require_config(ratio > 0.0 && ratio <= 1.0,
                                 "generate_mask: ratio must lie in (0, 1]");
  Rng rng(seed);
  std::vector<MaskMatrix> masks;
  masks.reserve(shape.steps);
  for (std::size_t t = 0; t < shape.steps; ++t)
    masks.push_back(bernoulli_mask(shape.rows, shape.cols, ratio, rng));
  return masks;
}

// ---- text helpers -----------------------------------------------------------

/// Shortest-safe decimal text: 17 significant digits.
inline std::string format_real(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return {buf.data(), res.ptr};
}

inline double parse_real(std::string_view text, const std::string& origin) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw FormatError(origin + ": cannot parse number \"" + std::string(text) + "\"");
  }
  return v;
}

/// Plain numeric grid, one matrix row per line; fields separated by commas,
/// semicolons, tabs or spaces. Blank lines and lines starting with '#' are skipped.
inline RealMatrix parse_csv_grid(const std::string& text, const std::string& origin) {
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') {
      if (end == text.size()) break;
      continue;
    }
    std::size_t fields = 0;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && line[j] != ',' && line[j] != ';' && line[j] != ' ' && line[j] != '\t') ++j;
      values.push_back(parse_real(line.substr(i, j - i), origin + ":" + std::to_string(line_no)));
      ++fields;
      i = j;
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      if (i < line.size() && (line[i] == ',' || line[i] == ';')) ++i;
    }
    if (rows == 0) cols = fields;
    if (fields != cols) {
      throw FormatError(origin + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(cols) + " fields, found " + std::to_string(fields));
    }
    ++rows;
    if (end == text.size()) break;
  }
  if (rows == 0) throw FormatError(origin + ": no numeric rows");
  RealMatrix m(rows, cols);
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) throw FormatError(origin + ": non-finite value");
    m.values()[k] = values[k];
  }
  return m;
}

inline RealMatrix read_csv_slice(const std::filesystem::path& path) {
  return parse_csv_grid(detail::read_file(path), path.string());
}

inline void write_csv_slice(const std::filesystem::path& path, const RealMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out.push_back(',');
      out += format_real(m(i, j));
    }
    out.push_back('\n');
  }
  detail::write_file(path, out);
}

/// Reads one CSV grid per slice, in the given order, and checks they agree in shape.
inline std::vector<RealMatrix> import_csv_slices(std::span<const std::filesystem::path> paths) {
  std::vector<RealMatrix> slices;
  slices.reserve(paths.size());
  for (const auto& p : paths) {
    slices.push_back(read_csv_slice(p));
    if (!slices.back().same_shape(slices.front())) {
      throw FormatError(p.string() + ": slice shape differs from " + paths.front().string());
    }
  }
  return slices;
}

// ---- results CSV ------------------------------------------------------------

inline constexpr std::string_view kResultsHeader = "t,residual,running_avg,elapsed_ms,algo,variant";

struct ResultRow {
  std::size_t t = 0;
  std::optional<double> residual;  // written as "nan" when undefined
  double running_avg = 0.0;
  double elapsed_ms = 0.0;
  std::string algo;
  std::string variant;
};

inline std::string encode_results(std::span<const ResultRow> rows) {
  std::string out(kResultsHeader);
  out.push_back('\n');
  for (const auto& r : rows) {
    out += std::to_string(r.t);
    out.push_back(',');
    out += r.residual ? format_real(*r.residual) : std::string("nan");
    out.push_back(',');
    out += format_real(r.running_avg);
    out.push_back(',');
    out += format_real(r.elapsed_ms);
    out.push_back(',');
    out += r.algo;
    out.push_back(',');
    out += r.variant;
    out.push_back('\n');
  }
  return out;
}

inline void write_results_csv(const std::filesystem::path& path, std::span<const ResultRow> rows) {
  detail::write_file(path, encode_results(rows));
}

inline std::vector<ResultRow> decode_results(const std::string& text, const std::string& origin) {
  std::vector<ResultRow> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kResultsHeader) throw FormatError(origin + ": unexpected results header");
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> f;
    std::size_t i = 0;
    while (true) {
      const std::size_t j = line.find(',', i);
      f.push_back(line.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i));
      if (j == std::string_view::npos) break;
      i = j + 1;
    }
    const std::string where = origin + ":" + std::to_string(line_no);
    if (f.size() != 6) throw FormatError(where + ": expected 6 fields");
    ResultRow r;
    r.t = static_cast<std::size_t>(parse_real(f[0], where));
    const double res = parse_real(f[1], where);
    if (!std::isnan(res)) r.residual = res;
    r.running_avg = parse_real(f[2], where);
    r.elapsed_ms = parse_real(f[3], where);
    r.algo = std::string(f[4]);
    r.variant = std::string(f[5]);
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw FormatError(origin + ": empty results file");
  return rows;
}

inline std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  return decode_results(detail::read_file(path), path.string());
}

} // namespace olstec::io
