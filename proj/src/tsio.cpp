#include "tsreject/tsio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tsreject::tsio {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back("");
    return cells;
}

double parse_cell(const std::string& cell, size_t file_row, size_t column) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw DataError("non-numeric cell '" + cell + "' at row " + std::to_string(file_row) +
                        ", column " + std::to_string(column + 1));
    }
    if (!std::isfinite(value)) {
        throw DataError("non-finite value at row " + std::to_string(file_row) + ", column " +
                        std::to_string(column + 1));
    }
    return value;
}

std::array<Index, 3> split_counts(Index total, const std::array<double, 3>& ratios) {
    double sum = 0.0;
    for (double r : ratios) {
        if (r < 0.0) throw std::invalid_argument("split ratios must be nonnegative");
        sum += r;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("split ratios must sum to 1, got " + std::to_string(sum));
    }
    const auto n_val = static_cast<Index>(std::floor(ratios[1] * static_cast<double>(total) + 1e-9));
    const auto n_test = static_cast<Index>(std::floor(ratios[2] * static_cast<double>(total) + 1e-9));
    const Index n_train = total - n_val - n_test;
    if (n_train <= 0) throw DataError("empty train split");
    if (n_val <= 0) throw DataError("empty validation split");
    if (n_test <= 0) throw DataError("empty test split");
    return {n_train, n_val, n_test};
}

}  // namespace

RawSeries load_csv(const std::string& path, bool has_header) {
    std::ifstream file(path);
    if (!file) throw DataError("cannot open file: " + path);

    RawSeries series;
    std::vector<std::vector<double>> rows;
    std::string line;
    size_t file_row = 0;
    size_t n_columns = 0;

    while (std::getline(file, line)) {
        ++file_row;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (file_row == 1) {
            if (cells.size() < 2) {
                throw DataError("file " + path + " has fewer than 2 columns");
            }
            n_columns = cells.size();
            if (has_header) {
                series.variable_names.assign(cells.begin() + 1, cells.end());
                continue;
            }
        }
        if (cells.size() != n_columns) {
            throw DataError("row " + std::to_string(file_row) + " has " +
                            std::to_string(cells.size()) + " columns, expected " +
                            std::to_string(n_columns));
        }
        series.timestamps.push_back(cells[0]);
        std::vector<double> values(n_columns - 1);
        for (size_t c = 1; c < n_columns; ++c) {
            values[c - 1] = parse_cell(cells[c], file_row, c);
        }
        rows.push_back(std::move(values));
    }

    if (rows.empty()) throw DataError("file " + path + " contains no data rows");
    if (series.variable_names.empty()) {
        for (size_t c = 0; c + 1 < n_columns; ++c) {
            series.variable_names.push_back("var" + std::to_string(c));
        }
    }

    series.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(n_columns - 1));
    for (size_t r = 0; r < rows.size(); ++r) {
        for (size_t c = 0; c + 1 < n_columns; ++c) {
            series.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
        }
    }
    return series;
}

NormalizationStats fit_normalization(const RawSeries& series, RowSpan train_span) {
    if (train_span.begin < 0 || train_span.end > series.rows() ||
        train_span.begin >= train_span.end) {
        throw std::invalid_argument("fit_normalization: empty or out-of-bounds train span");
    }
    const Index len = train_span.length();
    if (len < 2) {
        throw std::invalid_argument("fit_normalization: train span of length 1 has no variance");
    }

    const auto block = series.values.middleRows(train_span.begin, len);
    NormalizationStats stats;
    stats.mean = block.colwise().mean();
    stats.std.resize(series.cols());
    for (Index c = 0; c < series.cols(); ++c) {
        const double ss = (block.col(c).array() - stats.mean(c)).square().sum();
        stats.std(c) = std::sqrt(ss / static_cast<double>(len - 1));
        if (stats.std(c) < 1e-300) {
            warn("column " + std::to_string(c) + " (" +
                 (c < static_cast<Index>(series.variable_names.size())
                      ? series.variable_names[static_cast<size_t>(c)]
                      : std::string("?")) +
                 ") has zero variance on the train span; std set to 1");
            stats.std(c) = 1.0;
            stats.degenerate_columns.push_back(c);
        }
    }
    return stats;
}

Matrix normalize(const Matrix& values, const NormalizationStats& stats) {
    if (values.cols() != stats.dim()) {
        throw std::invalid_argument("normalize: column count mismatch");
    }
    return (values.rowwise() - stats.mean.transpose()).array().rowwise() /
           stats.std.transpose().array();
}

Matrix denormalize(const Matrix& values, const NormalizationStats& stats) {
    if (values.cols() != stats.dim()) {
        throw std::invalid_argument("denormalize: column count mismatch");
    }
    return (values.array().rowwise() * stats.std.transpose().array()).matrix().rowwise() +
           stats.mean.transpose();
}

std::vector<WindowPair> make_windows(const Matrix& values, Index lookback, Index horizon,
                                     Index stride) {
    if (lookback < 1 || horizon < 1 || stride < 1) {
        throw std::invalid_argument("make_windows: lookback, horizon, and stride must be >= 1");
    }
    const Index total = values.rows();
    if (total < lookback + horizon) {
        throw DataError("series too short for windowing: " + std::to_string(total) +
                        " rows < lookback " + std::to_string(lookback) + " + horizon " +
                        std::to_string(horizon));
    }
    const Index count = (total - lookback - horizon) / stride + 1;
    std::vector<WindowPair> windows;
    windows.reserve(static_cast<size_t>(count));
    for (Index i = 0; i < count; ++i) {
        const Index origin = i * stride;
        WindowPair w;
        w.input = values.middleRows(origin, lookback);
        w.target = values.middleRows(origin + lookback, horizon);
        w.origin_index = origin;
        windows.push_back(std::move(w));
    }
    return windows;
}

DatasetSplit split_dataset(std::vector<WindowPair> windows,
                           const std::array<double, 3>& ratios) {
    std::stable_sort(windows.begin(), windows.end(),
                     [](const WindowPair& a, const WindowPair& b) {
                         return a.origin_index < b.origin_index;
                     });
    const auto counts = split_counts(static_cast<Index>(windows.size()), ratios);

    DatasetSplit split;
    auto it = windows.begin();
    split.train.assign(std::make_move_iterator(it), std::make_move_iterator(it + counts[0]));
    it += counts[0];
    split.validation.assign(std::make_move_iterator(it), std::make_move_iterator(it + counts[1]));
    it += counts[1];
    split.test.assign(std::make_move_iterator(it), std::make_move_iterator(windows.end()));
    return split;
}

RowSpan train_row_span(Index total_windows, const std::array<double, 3>& ratios,
                       Index lookback, Index horizon, Index stride) {
    const auto counts = split_counts(total_windows, ratios);
    const Index last_train_origin = (counts[0] - 1) * stride;
    return RowSpan{0, last_train_origin + lookback + horizon};
}

}  // namespace tsreject::tsio
