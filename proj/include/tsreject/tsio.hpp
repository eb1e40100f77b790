#ifndef TSREJECT_TSIO_HPP
#define TSREJECT_TSIO_HPP

#include <array>
#include <string>
#include <vector>

#include "tsreject/common.hpp"

namespace tsreject::tsio {

/**
 * Timestamped multivariate observation matrix (T rows, N variables).
 * Timestamps are opaque labels kept in file order; values are guaranteed
 * finite after ingestion.
 */
struct RawSeries {
    std::vector<std::string> timestamps;
    Matrix values;
    std::vector<std::string> variable_names;

    Index rows() const { return values.rows(); }
    Index cols() const { return values.cols(); }
};

/// Per-variable z-score parameters fitted on the train span only.
struct NormalizationStats {
    Vector mean;
    Vector std;
    std::vector<Index> degenerate_columns;  // std coerced to 1

    Index dim() const { return mean.size(); }
};

/// Supervised example: lookback rows immediately followed by horizon rows.
struct WindowPair {
    Matrix input;        // L x N
    Matrix target;       // S x N
    Index origin_index;  // position of the first input row in the source series
};

/// Chronological train/validation/test partition of windows.
struct DatasetSplit {
    std::vector<WindowPair> train;
    std::vector<WindowPair> validation;
    std::vector<WindowPair> test;
    NormalizationStats norm_stats;
};

/// Half-open row range [begin, end) into a RawSeries.
struct RowSpan {
    Index begin = 0;
    Index end = 0;

    Index length() const { return end - begin; }
};

/**
 * Load an ETT-style CSV: first column a time label, remaining columns
 * decimal numbers. Rejects non-numeric cells (reporting row and column),
 * files with fewer than 2 columns, and non-finite values.
 */
RawSeries load_csv(const std::string& path, bool has_header);

/**
 * Per-variable mean and standard deviation (denominator span length - 1)
 * over the given row span. Zero-variance columns get std := 1 and a
 * warning; they are listed in degenerate_columns.
 */
NormalizationStats fit_normalization(const RawSeries& series, RowSpan train_span);

/// Apply z-scoring column-wise.
Matrix normalize(const Matrix& values, const NormalizationStats& stats);

/// Invert z-scoring column-wise.
Matrix denormalize(const Matrix& values, const NormalizationStats& stats);

/**
 * Slice the series into (input L x N, target S x N) pairs at origins
 * 0, stride, 2*stride, ...; count = floor((T - L - S)/stride) + 1.
 * Throws DataError when T < L + S.
 */
std::vector<WindowPair> make_windows(const Matrix& values, Index lookback, Index horizon,
                                     Index stride);

/**
 * Chronological partition: validation and test get floor(ratio * total)
 * windows each, train takes the remainder. Ratios must be nonnegative and
 * sum to 1 within 1e-9; every split must end up non-empty.
 */
DatasetSplit split_dataset(std::vector<WindowPair> windows,
                           const std::array<double, 3>& ratios);

/// Raw rows covered by the train windows of a split with the given counts:
/// [0, last train origin + L + S). Used to fit normalization leak-free.
RowSpan train_row_span(Index total_windows, const std::array<double, 3>& ratios,
                       Index lookback, Index horizon, Index stride);

}  // namespace tsreject::tsio

#endif  // TSREJECT_TSIO_HPP
