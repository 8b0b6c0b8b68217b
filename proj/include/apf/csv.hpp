#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace apf::csv {

/// Split one CSV line. Double-quoted fields may contain commas; "" escapes a quote.
std::vector<std::string> split_line(std::string_view line);

/// A parsed CSV table: the header row plus data rows (1-based source line numbers kept).
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;

    /// Index of a named column, if present.
    std::optional<std::size_t> find(std::string_view name) const;
    /// Index of a named column; throws ConfigError naming the column when absent.
    std::size_t require(std::string_view name) const;
};

/// Read a header plus rows. Blank lines are skipped.
Table read(std::istream& in);
Table read_file(const std::string& path);

/// Shortest decimal representation that round-trips through strtod.
std::string format_double(double value);

double parse_double(std::string_view field);
long long parse_int(std::string_view field);

}  // namespace apf::csv
