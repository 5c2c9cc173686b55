// Copyright 2026 The tgrasta Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// \file io.hpp
///
/// File formats used by the command-line driver: PGM frames, RFC 4180 CSV,
/// plain-text subspaces and flat key = value configuration files. Numbers
/// are written with std::to_chars, so output never depends on the locale.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "tgrasta/error.hpp"
#include "tgrasta/imaging.hpp"
#include "tgrasta/subspace.hpp"

namespace tgrasta::io {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Numbers

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double v) {
  require(std::isfinite(v), ErrorCode::NonFinite, "cannot format a non-finite value");
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  require(res.ec == std::errc() && res.ptr == last && std::isfinite(v), ErrorCode::ParseError,
          "expected a finite number for " + std::string(what) + ", got '" + std::string(s) + "'");
  return v;
}

inline long long parse_integer(std::string_view s, std::string_view what) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size(), ErrorCode::ParseError,
          "expected an integer for " + std::string(what) + ", got '" + std::string(s) + "'");
  return v;
}

// ---------------------------------------------------------------------------
// PGM

namespace detail {

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::string_view bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }

  // Skips whitespace and '#' comments, then reads one token.
  std::string_view token(std::string_view what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_]) && bytes_[pos_] != '#') ++pos_;
    require(pos_ > start, ErrorCode::ParseError,
            "PGM: expected " + std::string(what) + " at byte " + std::to_string(start));
    return bytes_.substr(start, pos_ - start);
  }

  long long number(std::string_view what) {
    const std::size_t start = pos_;
    const std::string_view tok = token(what);
    long long v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    require(res.ec == std::errc() && res.ptr == tok.data() + tok.size(), ErrorCode::ParseError,
            "PGM: malformed " + std::string(what) + " '" + std::string(tok) + "' near byte " +
                std::to_string(start));
    return v;
  }

  // Binary payloads start after exactly one whitespace byte.
  void single_space() {
    require(pos_ < bytes_.size() && is_space(bytes_[pos_]), ErrorCode::ParseError,
            "PGM: expected one whitespace byte before the payload at byte " +
                std::to_string(pos_));
    ++pos_;
  }

 private:
  static bool is_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Decodes P2 (ASCII) or P5 (binary, 16-bit big-endian when maxval > 255).
inline Image parse_pgm(std::string_view bytes) {
  require(bytes.size() >= 2, ErrorCode::ParseError, "PGM: file shorter than its magic number");
  const std::string_view magic = bytes.substr(0, 2);
  if (magic != "P2" && magic != "P5") {
    raise(ErrorCode::UnsupportedFormat,
          "only P2 and P5 graymaps are supported, found magic '" + std::string(magic) + "'");
  }
  detail::PgmHeaderReader r(bytes.substr(2));
  const long long width = r.number("width");
  const long long height = r.number("height");
  const long long maxval = r.number("maxval");
  require(width > 0 && height > 0 && width <= (1 << 20) && height <= (1 << 20),
          ErrorCode::ParseError, "PGM: invalid dimensions " + std::to_string(width) + "x" +
                                     std::to_string(height));
  require(maxval >= 1 && maxval <= 65535, ErrorCode::ParseError,
          "PGM: maxval " + std::to_string(maxval) + " outside [1, 65535]");

  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const double scale = 1.0 / static_cast<double>(maxval);
  std::vector<double> data(count);
  auto store = [&](std::size_t i, long long v, std::size_t at) {
    require(v >= 0 && v <= maxval, ErrorCode::ParseError,
            "PGM: sample " + std::to_string(v) + " exceeds maxval at byte " + std::to_string(at));
    data[i] = static_cast<double>(v) * scale;
  };

  if (magic == "P2") {
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t at = r.offset() + 2;
      store(i, r.number("sample"), at);
    }
  } else {
    r.single_space();
    const std::size_t start = r.offset() + 2;
    const std::size_t bytes_per = maxval > 255 ? 2 : 1;
    const std::size_t expected = count * bytes_per;
    const std::size_t available = bytes.size() - std::min(start, bytes.size());
    require(available >= expected, ErrorCode::ParseError,
            "PGM: truncated payload at byte " + std::to_string(start) + ": expected " +
                std::to_string(expected) + " bytes, found " + std::to_string(available));
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + start);
    for (std::size_t i = 0; i < count; ++i) {
      const long long v =
          bytes_per == 2 ? (static_cast<long long>(p[2 * i]) << 8) | p[2 * i + 1] : p[i];
      store(i, v, start + i * bytes_per);
    }
  }
  return Image(static_cast<int>(width), static_cast<int>(height), std::move(data));
}

inline Image read_pgm(const std::filesystem::path& path) {
  try {
    return parse_pgm(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IoError) throw;
    raise(e.code(), path.string() + ": " + e.what());
  }
}

/// Binary P5 with samples round(v * maxval).
inline std::string encode_pgm(const Image& image, int maxval = 255) {
  require(maxval >= 1 && maxval <= 65535, ErrorCode::InvalidArgument,
          "PGM maxval must lie in [1, 65535]");
  std::string out = "P5\n" + std::to_string(image.width()) + " " +
                    std::to_string(image.height()) + "\n" + std::to_string(maxval) + "\n";
  const std::size_t header = out.size();
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  out.resize(header + image.size() * bytes_per);
  std::size_t i = header;
  for (double v : image.data()) {
    const auto q = static_cast<unsigned>(std::lround(v * maxval));
    if (bytes_per == 2) out[i++] = static_cast<char>(q >> 8);
    out[i++] = static_cast<char>(q & 0xFF);
  }
  return out;
}

inline void write_pgm(const Image& image, const std::filesystem::path& path, int maxval = 255) {
  write_file(path, encode_pgm(image, maxval));
}

/// Regular files ending in .pgm, sorted by file name.
inline std::vector<std::filesystem::path> list_pgm_files(const std::filesystem::path& dir) {
  std::error_code ec;
  require(std::filesystem::is_directory(dir, ec), ErrorCode::IoError,
          "'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
  return files;
}

/// Maps a signed vector into [0, 1] for viewing: mid-gray at zero, scaled by
/// the largest magnitude.
inline Image signed_to_image(const Eigen::VectorXd& v, int width, int height) {
  const double peak = v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0;
  std::vector<double> data(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    data[static_cast<std::size_t>(i)] = peak > 0.0 ? 0.5 + 0.5 * v[i] / peak : 0.5;
  }
  return Image(width, height, std::move(data));
}

/// Undoes the unit-norm scaling of a warped vector and clamps to [0, 1].
inline Image unnormalized_to_image(const Eigen::VectorXd& v, double norm, int width, int height) {
  std::vector<double> data(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    data[static_cast<std::size_t>(i)] = std::clamp(v[i] * norm, 0.0, 1.0);
  }
  return Image(width, height, std::move(data));
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    row(header);
  }

  void row(const std::vector<std::string>& fields) {
    require(fields.size() == columns_, ErrorCode::DimensionMismatch,
            "CSV row has " + std::to_string(fields.size()) + " fields, header has " +
                std::to_string(columns_));
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) text_ += ',';
      text_ += csv_escape(fields[i]);
    }
    text_ += '\n';
  }

  const std::string& str() const noexcept { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

using CsvTable = std::vector<std::vector<std::string>>;

/// RFC 4180 parsing; accepts \n or \r\n line ends and a missing final
/// newline.
inline CsvTable parse_csv(std::string_view text) {
  CsvTable rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t i = 0;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          i += 2;
          continue;
        }
        quoted = false;
      } else {
        field += c;
      }
      ++i;
      continue;
    }
    if (c == '"') {
      require(!field_started, ErrorCode::ParseError,
              "CSV: stray quote inside an unquoted field at byte " + std::to_string(i));
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n' || c == '\r') {
      end_row();
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      field += c;
      field_started = true;
    }
    ++i;
  }
  require(!quoted, ErrorCode::ParseError, "CSV: unterminated quoted field");
  if (field_started || !row.empty()) end_row();
  return rows;
}

/// Column lookup on a parsed table whose first row is the header.
inline std::size_t csv_column(const CsvTable& table, std::string_view name) {
  require(!table.empty(), ErrorCode::ParseError, "CSV: missing header row");
  const auto& header = table.front();
  const auto it = std::find(header.begin(), header.end(), name);
  require(it != header.end(), ErrorCode::ParseError,
          "CSV: missing column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

// ---------------------------------------------------------------------------
// Transform tables: id, group, then the group's parameter columns.

struct TransformRow {
  std::string id;
  TransformParams tau;
};

inline std::vector<std::string> transform_header(TransformGroup group,
                                                 std::string_view id_column) {
  std::vector<std::string> h{std::string(id_column), "group"};
  for (auto& name : param_names(group)) h.push_back(name);
  return h;
}

inline std::vector<std::string> transform_fields(std::string_view id,
                                                 const TransformParams& tau) {
  std::vector<std::string> f{std::string(id), std::string(group_name(tau.group()))};
  for (Eigen::Index k = 0; k < tau.p(); ++k) f.push_back(format_double(tau.params()[k]));
  return f;
}

/// Reads a table written with transform_header; the id column is the first.
inline std::vector<TransformRow> parse_transforms(std::string_view text) {
  const CsvTable table = parse_csv(text);
  require(!table.empty(), ErrorCode::ParseError, "transform CSV is empty");
  const std::size_t group_col = csv_column(table, "group");
  std::vector<TransformRow> rows;
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto& row = table[r];
    if (row.size() == 1 && row[0].empty()) continue;
    require(row.size() == table.front().size(), ErrorCode::ParseError,
            "transform CSV row " + std::to_string(r + 1) + " has the wrong field count");
    const TransformGroup group = parse_group(row[group_col]);
    Eigen::VectorXd p(param_count(group));
    const auto names = param_names(group);
    for (std::size_t k = 0; k < names.size(); ++k) {
      p[static_cast<Eigen::Index>(k)] =
          parse_double(row[csv_column(table, names[k])], names[k]);
    }
    rows.push_back({row[0], TransformParams(group, p)});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Subspace text file: a line "n d", then n lines of d numbers.

inline std::string encode_subspace(const Subspace& u) {
  const Eigen::MatrixXd& b = u.basis();
  std::string out = std::to_string(b.rows()) + " " + std::to_string(b.cols()) + "\n";
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      if (j) out += ' ';
      out += format_double(b(i, j));
    }
    out += '\n';
  }
  return out;
}

inline Subspace parse_subspace(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string tok;
  auto next = [&](const char* what) {
    require(static_cast<bool>(in >> tok), ErrorCode::ParseError,
            std::string("subspace file: missing ") + what);
    return tok;
  };
  const long long n = parse_integer(next("row count"), "row count");
  const long long d = parse_integer(next("column count"), "column count");
  require(n > 0 && d > 0, ErrorCode::ParseError, "subspace file: non-positive dimensions");
  Eigen::MatrixXd b(n, d);
  for (long long i = 0; i < n; ++i) {
    for (long long j = 0; j < d; ++j) b(i, j) = parse_double(next("entry"), "subspace entry");
  }
  require(!(in >> tok), ErrorCode::ParseError, "subspace file: trailing data");
  // Round-tripped bases are orthonormal to rounding; tidy up before the
  // strict check in the constructor.
  return Subspace(orthonormalize(b));
}

// ---------------------------------------------------------------------------
// key = value configuration

using Config = std::map<std::string, std::string>;

/// One `key = value` per line; '#' starts a comment; blank lines ignored.
inline Config parse_config(std::string_view text) {
  Config cfg;
  std::size_t line_no = 0, pos = 0;
  auto trim = [](std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return std::string_view{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string_view::npos, ErrorCode::ParseError,
            "config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    require(!key.empty(), ErrorCode::ParseError,
            "config line " + std::to_string(line_no) + ": empty key");
    require(cfg.emplace(key, value).second, ErrorCode::ParseError,
            "config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }
  return cfg;
}

}  // namespace tgrasta::io
