#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ise {

// Text helpers shared by the corpus and lexical modules.
std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

/// Shortest round-trip decimal representation. NaN/inf render as "".
std::string format_double(double v);

/// Parses a decimal; throws DataError on garbage or trailing characters.
double parse_double(std::string_view s, std::string_view what);

struct CsvRecord {
  std::size_t line = 0;  // 1-based line on which the record starts
  std::vector<std::string> fields;
};

/// RFC 4180 reader: quoted fields may contain commas, doubled quotes and
/// newlines. When `skip_comments` is set, records whose first byte is '#'
/// are skipped (artifact CSVs carry a leading "# config_hash: ..." line).
std::vector<CsvRecord> read_csv(std::istream& in, bool skip_comments = false);

class CsvTable {
 public:
  static CsvTable load(const std::filesystem::path& path);
  /// `origin` only labels error messages.
  static CsvTable parse(std::istream& in, const std::filesystem::path& origin);

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<CsvRecord>& rows() const { return rows_; }
  std::optional<std::size_t> column(std::string_view name) const;
  std::size_t require_column(std::string_view name) const;

 private:
  std::filesystem::path path_;
  std::vector<std::string> header_;
  std::vector<CsvRecord> rows_;
};

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

std::string read_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and renames into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace ise
