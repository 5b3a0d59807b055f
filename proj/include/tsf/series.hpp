#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "tsf/errors.hpp"

namespace tsf {

/// A raw multivariate series: T rows of C channels, chronological order.
struct MultivariateSeries {
    Eigen::MatrixXd values;                  // T x C
    std::vector<std::string> channel_names;  // size C
    std::string granularity;                 // free-text label, e.g. "1hour"
    std::vector<std::string> timestamps;     // empty, or one per row

    Eigen::Index length() const { return values.rows(); }
    Eigen::Index channels() const { return values.cols(); }

    // Contiguous sub-series [begin, begin+len), keeping names and timestamps.
    MultivariateSeries slice(Eigen::Index begin, Eigen::Index len) const;
};

struct CsvOptions {
    std::string date_column = "date";
    // Replace missing/blank cells with the previous row's value instead of
    // rejecting the file. Off by default: imputation distorts ACF estimates.
    bool forward_fill = false;
};

/// Load a CSV with a header row. The date column (first column by
/// convention) is kept as timestamps; every other column must parse as a
/// finite real and becomes a channel, in file order.
MultivariateSeries load_csv(const std::string& path, const CsvOptions& opts = {});

/// Write the same CSV layout load_csv ingests (date column first).
void save_csv(const MultivariateSeries& series, const std::string& path);

/// Chronological train/val/test split. Fractions use floor rounding with the
/// remainder assigned to test; explicit row counts (the ETT preset) override
/// the fractions and may leave a tail of the series unused.
struct SplitSpec {
    double train_fraction = 0.7;
    double val_fraction = 0.1;
    double test_fraction = 0.2;
    std::optional<std::array<Eigen::Index, 3>> explicit_lengths;

    static SplitSpec fractions(double train, double val, double test);
    // The 12/4/4-month split convention used by the ETT benchmarks.
    static SplitSpec ett_months(Eigen::Index rows_per_month);
};

struct Split {
    MultivariateSeries train;
    MultivariateSeries val;
    MultivariateSeries test;
};

/// min_segment is the smallest usable segment length (callers pass L+H).
/// Throws DataError (SegmentTooShort) when any segment falls below it.
Split split(const MultivariateSeries& series, const SplitSpec& spec,
            Eigen::Index min_segment = 1);

/// Per-channel z-score statistics, fit on the train split only.
/// std uses the population convention (divide by T).
struct NormalizationStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;
};

NormalizationStats fit_normalizer(const MultivariateSeries& train);
MultivariateSeries apply_normalizer(const NormalizationStats& stats,
                                    const MultivariateSeries& series);
MultivariateSeries invert_normalizer(const NormalizationStats& stats,
                                     const MultivariateSeries& series);

}  // namespace tsf
