#pragma once

// Numeric CSV ingestion: comma separated, optional single header row,
// decimal point only. Parsing goes through std::from_chars, so the active
// locale never changes how a cell is read.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rkhs_sparse/error.hpp"
#include "rkhs_sparse/kernel.hpp"

namespace rkhs_sparse {

struct Dataset {
    Matrix X;
    Vector y;
    std::vector<std::string> column_names;  // predictors, file order
    std::string response_name;
};

namespace csv {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return cells;
}

/// Finite decimal number occupying the whole cell, or nullopt.
inline std::optional<double> parse_number(std::string_view cell) {
    if (!cell.empty() && cell.front() == '+') {
        cell.remove_prefix(1);
    }
    if (cell.empty()) {
        return std::nullopt;
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

inline bool is_positive_integer(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace csv

/// Loads a numeric table and splits off the response column. `response` is a
/// header name or a 1-based column index; empty selects the last column.
/// A first row with no numeric cell is taken as the header.
inline Dataset load_csv(const std::string& path, std::string_view response = {}) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("cannot open input file '" + path + "'");
    }

    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        lines.push_back(std::move(line));
    }
    while (!lines.empty() && csv::trim(lines.back()).empty()) {
        lines.pop_back();
    }
    if (lines.empty()) {
        throw InvalidArgument("input file '" + path + "' is empty");
    }

    const auto first = csv::split_line(lines.front());
    const std::size_t cols = first.size();
    const bool has_header = std::none_of(first.begin(), first.end(),
                                         [](std::string_view c) { return csv::parse_number(c).has_value(); });
    std::vector<std::string> names;
    for (std::size_t c = 0; c < cols; ++c) {
        names.push_back(has_header ? std::string(first[c]) : "x" + std::to_string(c + 1));
    }

    const std::size_t data_start = has_header ? 1 : 0;
    const std::size_t rows = lines.size() - data_start;
    if (rows < 2) {
        throw InvalidArgument("input file '" + path + "' needs at least 2 data rows");
    }
    if (cols < 2) {
        throw InvalidArgument("input file '" + path + "' needs a response and at least one predictor column");
    }

    std::size_t resp = cols - 1;
    if (!response.empty()) {
        if (csv::is_positive_integer(response)) {
            std::size_t idx = 0;
            std::from_chars(response.data(), response.data() + response.size(), idx);
            if (idx < 1 || idx > cols) {
                throw InvalidArgument("response column " + std::string(response) + " outside 1.." +
                                      std::to_string(cols));
            }
            resp = idx - 1;
        } else {
            const auto it = std::find(names.begin(), names.end(), response);
            if (!has_header || it == names.end()) {
                throw InvalidArgument("response column '" + std::string(response) + "' not found");
            }
            resp = static_cast<std::size_t>(it - names.begin());
        }
    }

    Matrix table(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t line_no = data_start + r + 1;
        const auto cells = csv::split_line(lines[data_start + r]);
        if (cells.size() != cols) {
            throw InvalidArgument("row " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                                  " cells, found " + std::to_string(cells.size()));
        }
        for (std::size_t c = 0; c < cols; ++c) {
            const auto value = csv::parse_number(cells[c]);
            if (!value) {
                throw InvalidArgument("row " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                                      ": non-numeric cell '" + std::string(cells[c]) + "'");
            }
            table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *value;
        }
    }

    Dataset d;
    d.y = table.col(static_cast<Eigen::Index>(resp));
    d.X.resize(table.rows(), table.cols() - 1);
    Eigen::Index out_col = 0;
    for (std::size_t c = 0; c < cols; ++c) {
        if (c == resp) {
            continue;
        }
        d.X.col(out_col++) = table.col(static_cast<Eigen::Index>(c));
        d.column_names.push_back(names[c]);
    }
    d.response_name = names[resp];
    return d;
}

}  // namespace rkhs_sparse
