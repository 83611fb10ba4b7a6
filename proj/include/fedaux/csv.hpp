#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace fedaux::csv {

/// Shortest representation that parses back to the same double; "nan",
/// "inf" and "-inf" for non-finite values.
std::string format_double(double v);
double parse_double(const std::string& s);
std::uint64_t parse_u64(const std::string& s);

/// RFC-4180 quoting: fields containing ',', '"', CR or LF are quoted and
/// inner quotes doubled.
std::string quote(const std::string& field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; DataError when absent.
    std::size_t column(const std::string& name) const;
};

/// Reads a CSV file with a header row. Quoted fields may not span lines.
Table read_table(const std::filesystem::path& path);

}  // namespace fedaux::csv
