#pragma once

// Comma-separated input with a header row; every referenced cell must parse
// as a finite decimal number.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "sample.hpp"

namespace monotest {

/// Selected columns of a CSV file, in the order requested.
struct CsvColumns {
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;

    std::size_t rows() const noexcept { return values.empty() ? 0 : values.front().size(); }
    const std::vector<double>& operator[](std::size_t c) const { return values[c]; }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_cell(std::string_view cell, std::size_t row, std::string_view column) {
    auto where = [&] { return "row " + std::to_string(row) + ", column '" + std::string(column) + "'"; };
    if (cell.empty()) fail(ErrorKind::data, where() + ": empty cell");
    std::string_view s = cell;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        fail(ErrorKind::data, where() + ": not a number ('" + std::string(cell) + "')");
    if (!std::isfinite(v)) fail(ErrorKind::data, where() + ": value is not finite");
    return v;
}

} // namespace detail

/// Reads the named columns. Rows are numbered as data rows starting at 1.
inline CsvColumns read_csv(std::istream& in, const std::vector<std::string>& columns) {
    std::string line;
    if (!std::getline(in, line)) detail::fail(ErrorKind::data, "missing header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = detail::split_commas(line);
    std::vector<std::size_t> index;
    for (const auto& name : columns) {
        std::size_t found = header.size();
        for (std::size_t c = 0; c < header.size(); ++c)
            if (header[c] == name) {
                found = c;
                break;
            }
        if (found == header.size()) detail::fail(ErrorKind::data, "missing column '" + name + "'");
        index.push_back(found);
    }

    CsvColumns out;
    out.names = columns;
    out.values.assign(columns.size(), {});
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row;
        const auto cells = detail::split_commas(line);
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (index[c] >= cells.size())
                detail::fail(ErrorKind::data, "row " + std::to_string(row) + ", column '" + columns[c] + "': missing cell");
            out.values[c].push_back(detail::parse_cell(cells[index[c]], row, columns[c]));
        }
    }
    if (row < 2) detail::fail(ErrorKind::data, "need at least two data rows, found " + std::to_string(row));
    return out;
}

inline CsvColumns read_csv(const std::string& path, const std::vector<std::string>& columns) {
    std::ifstream in(path);
    if (!in) detail::fail(ErrorKind::data, "cannot open '" + path + "'");
    return read_csv(in, columns);
}

inline Eigen::MatrixXd columns_matrix(const CsvColumns& t, std::size_t first, std::size_t count) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(count));
    for (std::size_t c = 0; c < count; ++c)
        for (std::size_t i = 0; i < t.rows(); ++i)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = t.values[first + c][i];
    return m;
}

inline Sample load_csv(const std::string& path, const std::string& x_col, const std::string& y_col,
                       const std::vector<std::string>& z_cols = {}) {
    std::vector<std::string> cols{x_col, y_col};
    cols.insert(cols.end(), z_cols.begin(), z_cols.end());
    const auto t = read_csv(path, cols);
    return Sample(t.values[0], t.values[1], z_cols.empty() ? Eigen::MatrixXd() : columns_matrix(t, 2, z_cols.size()));
}

/// Writes columns with 17 significant digits so that reading back is exact.
inline void write_csv(std::ostream& os, const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& columns) {
    detail::require(names.size() == columns.size(), "write_csv: one name per column");
    for (std::size_t c = 0; c < names.size(); ++c) os << (c ? "," : "") << names[c];
    os << '\n';
    const std::size_t n = columns.empty() ? 0 : columns.front().size();
    char buf[40];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", columns[c][i]);
            os << (c ? "," : "") << buf;
        }
        os << '\n';
    }
}

inline void write_sample_csv(const std::string& path, const Sample& s) {
    std::ofstream out(path);
    if (!out) detail::fail(ErrorKind::data, "cannot write '" + path + "'");
    write_csv(out, {"x", "y"}, {s.x, s.y});
}

} // namespace monotest
