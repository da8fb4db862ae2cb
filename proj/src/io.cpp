#include "ise/io.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "ise/error.hpp"

namespace ise {

std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string format_double(double v) {
  if (!std::isfinite(v)) return {};
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) return {};
  return std::string(buf.data(), ptr);
}

double parse_double(std::string_view s, std::string_view what) {
  std::string t = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
    throw DataError("cannot parse " + std::string(what) + " from '" + t + "'");
  }
  return v;
}

std::vector<CsvRecord> read_csv(std::istream& in, bool skip_comments) {
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<CsvRecord> out;
  std::size_t i = 0;
  std::size_t line = 1;
  const std::size_t n = data.size();
  while (i < n) {
    CsvRecord rec;
    rec.line = line;
    if (skip_comments && data[i] == '#') {
      while (i < n && data[i] != '\n') ++i;
      ++i;
      ++line;
      continue;
    }
    std::string field;
    bool in_quotes = false;
    bool record_done = false;
    while (i < n && !record_done) {
      char c = data[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < n && data[i + 1] == '"') {
            field.push_back('"');
            i += 2;
            continue;
          }
          in_quotes = false;
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
        }
        ++i;
        continue;
      }
      switch (c) {
        case '"':
          in_quotes = true;
          break;
        case ',':
          rec.fields.push_back(std::move(field));
          field.clear();
          break;
        case '\r':
          break;
        case '\n':
          ++line;
          record_done = true;
          break;
        default:
          field.push_back(c);
      }
      ++i;
    }
    if (in_quotes) {
      throw DataError("unterminated quoted CSV field starting on line " + std::to_string(rec.line));
    }
    rec.fields.push_back(std::move(field));
    // A blank line yields one empty field; skip it.
    if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;
    out.push_back(std::move(rec));
  }
  return out;
}

CsvTable CsvTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return parse(in, path);
}

CsvTable CsvTable::parse(std::istream& in, const std::filesystem::path& origin) {
  const auto& path = origin;
  auto records = read_csv(in, /*skip_comments=*/true);
  CsvTable t;
  t.path_ = path;
  if (records.empty()) throw DataError(path.string() + ": missing CSV header");
  t.header_ = std::move(records.front().fields);
  t.rows_.assign(std::make_move_iterator(records.begin() + 1),
                 std::make_move_iterator(records.end()));
  for (const auto& r : t.rows_) {
    if (r.fields.size() != t.header_.size()) {
      throw DataError(path.string() + ":" + std::to_string(r.line) + ": expected " +
                      std::to_string(t.header_.size()) + " fields, found " +
                      std::to_string(r.fields.size()));
    }
  }
  return t;
}

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t CsvTable::require_column(std::string_view name) const {
  auto c = column(name);
  if (!c) throw DataError(path_.string() + ": missing column '" + std::string(name) + "'");
  return *c;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
      out << f;
      continue;
    }
    out << '"';
    for (char c : f) {
      if (c == '"') out << '"';
      out << c;
    }
    out << '"';
  }
  out << '\n';
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace ise
