#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fedaux/data.hpp"
#include "fedaux/errors.hpp"

namespace fedaux::data {

std::vector<int> Dataset::main_labels() const {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.main_label);
    return out;
}

std::vector<std::string> split_csv_record(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(std::move(cur));
    return cells;
}

namespace {

double parse_number(const std::string& cell, std::size_t line, const std::string& source, const std::string& column) {
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && last[-1] == ' ') --last;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || first == last || !std::isfinite(v))
        throw DataError(source + ":" + std::to_string(line) + ": column '" + column + "' is not a finite number: '" +
                        cell + "'");
    return v;
}

}  // namespace

RawFlows parse_flows(std::istream& in, const std::string& source, const CsvSchema& schema) {
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        return true;
    };
    if (!next_line()) throw DataError(source + ": empty file (header row required)");

    const auto header = split_csv_record(line);
    if (header.size() < 4 || header[0] != "label" || header[1] != "duration" || header[2] != "bandwidth")
        throw DataError(source + ":1: header must be label,duration,bandwidth,f_0,...");
    const std::size_t n_features = header.size() - 3;
    for (std::size_t j = 0; j < n_features; ++j) {
        if (header[3 + j] != "f_" + std::to_string(j))
            throw DataError(source + ":1: expected column 'f_" + std::to_string(j) + "', found '" + header[3 + j] + "'");
    }

    struct Row {
        std::string label;
        std::vector<double> features;
    };
    std::vector<Row> rows;
    std::vector<std::size_t> row_lines;
    RawFlows out;
    const std::set<std::string> allowed(schema.class_names.begin(), schema.class_names.end());
    while (next_line()) {
        if (line.empty()) continue;
        auto cells = split_csv_record(line);
        if (cells.size() != header.size())
            throw DataError(source + ":" + std::to_string(line_no) + ": ragged row with " + std::to_string(cells.size()) +
                            " cells, header has " + std::to_string(header.size()));
        if (cells[0].empty()) throw DataError(source + ":" + std::to_string(line_no) + ": empty label");
        if (!allowed.empty() && !allowed.contains(cells[0]))
            throw DataError(source + ":" + std::to_string(line_no) + ": unknown label '" + cells[0] + "'");
        Row r{std::move(cells[0]), {}};
        out.duration.push_back(parse_number(cells[1], line_no, source, "duration"));
        out.bandwidth.push_back(parse_number(cells[2], line_no, source, "bandwidth"));
        r.features.reserve(n_features);
        for (std::size_t j = 0; j < n_features; ++j)
            r.features.push_back(parse_number(cells[3 + j], line_no, source, header[3 + j]));
        rows.push_back(std::move(r));
        row_lines.push_back(line_no);
    }
    if (rows.empty()) throw DataError(source + ": no data rows");

    std::vector<std::string> names = schema.class_names;
    if (names.empty()) {
        std::set<std::string> seen;
        for (const auto& r : rows) seen.insert(r.label);
        names.assign(seen.begin(), seen.end());
    } else {
        std::sort(names.begin(), names.end());
        names.erase(std::unique(names.begin(), names.end()), names.end());
    }
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = static_cast<int>(i);

    out.dataset.feature_length = n_features;
    out.dataset.class_names = std::move(names);
    out.dataset.samples.reserve(rows.size());
    for (auto& r : rows) out.dataset.samples.push_back(FlowSample{std::move(r.features), index.at(r.label), {}});
    return out;
}

RawFlows load_flows(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open flow file '" + path.string() + "'");
    return parse_flows(in, path.string(), schema);
}

QuantileBins QuantileBins::fit(std::span<const double> train_values, std::size_t n_bins) {
    if (n_bins < 2) throw ConfigError("quantile binning needs at least 2 bins");
    if (train_values.size() < n_bins)
        throw ConfigError("cannot fit " + std::to_string(n_bins) + " bins on " + std::to_string(train_values.size()) +
                          " training values");
    std::vector<double> sorted(train_values.begin(), train_values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    std::vector<double> b;
    bool degenerate = false;
    for (std::size_t k = 1; k < n_bins; ++k) {
        // Target cut at rank r. A run of ties around sorted[r] goes wholly to
        // the side that keeps the cut closest to r.
        const std::size_t r = k * n / n_bins;
        const auto lo = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), sorted[r]) - sorted.begin());
        const auto hi = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), sorted[r]) - sorted.begin());
        const bool up = hi < n && hi - r < r - lo;
        const std::size_t cut = up ? hi : lo;
        if (cut == 0 || (!b.empty() && (up ? sorted[hi] : sorted[r]) <= b.back())) degenerate = true;
        b.push_back(up ? sorted[hi] : sorted[r]);
    }
    // Any collapsed boundary leaves a bin empty on the training data.
    if (degenerate)
        throw ConfigError("column has too many tied values for " + std::to_string(n_bins) +
                          " quantile bins; use fewer bins");
    return QuantileBins(std::move(b));
}

int QuantileBins::assign(double v) const noexcept {
    return static_cast<int>(std::upper_bound(boundaries_.begin(), boundaries_.end(), v) - boundaries_.begin());
}

}  // namespace fedaux::data
