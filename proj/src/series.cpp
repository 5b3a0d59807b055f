#include "tsf/series.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace tsf {

MultivariateSeries MultivariateSeries::slice(Eigen::Index begin, Eigen::Index len) const {
    if (begin < 0 || len < 0 || begin + len > length()) {
        throw DataError("slice out of range: begin=" + std::to_string(begin) +
                        " len=" + std::to_string(len) + " T=" + std::to_string(length()));
    }
    MultivariateSeries out;
    out.values = values.middleRows(begin, len);
    out.channel_names = channel_names;
    out.granularity = granularity;
    if (!timestamps.empty()) {
        out.timestamps.assign(timestamps.begin() + begin, timestamps.begin() + begin + len);
    }
    return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    while (begin < end && (*begin == ' ' || *begin == '\t' || *begin == '\r')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
    if (begin == end) return false;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace

MultivariateSeries load_csv(const std::string& path, const CsvOptions& opts) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_line(line);
    if (header.empty()) throw DataError("empty header row: " + path);

    // The date column is identified by name, falling back to column 0.
    Eigen::Index date_col = 0;
    bool have_date = false;
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(header.size()); ++j) {
        if (header[j] == opts.date_column) {
            date_col = j;
            have_date = true;
            break;
        }
    }
    if (!have_date) {
        double probe;
        have_date = !parse_double(header[0], probe);
        date_col = 0;
        if (!have_date) throw DataError("no date column '" + opts.date_column + "' in " + path);
    }

    const Eigen::Index cols = static_cast<Eigen::Index>(header.size());
    const Eigen::Index channels = cols - 1;
    if (channels < 1) throw DataError("zero channels in " + path);

    MultivariateSeries series;
    for (Eigen::Index j = 0; j < cols; ++j) {
        if (j != date_col) series.channel_names.push_back(header[j]);
    }

    std::vector<double> data;
    std::vector<double> previous(channels, 0.0);
    bool have_previous = false;
    Eigen::Index row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_line(line);
        if (static_cast<Eigen::Index>(fields.size()) != cols) {
            throw DataError("row " + std::to_string(row + 2) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(cols) + " in " + path);
        }
        Eigen::Index c = 0;
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (j == date_col) {
                series.timestamps.push_back(fields[j]);
                continue;
            }
            double v;
            const bool ok = parse_double(fields[j], v) && std::isfinite(v);
            if (!ok) {
                if (opts.forward_fill && have_previous) {
                    v = previous[c];
                } else {
                    throw DataError("non-finite value at row " + std::to_string(row + 2) +
                                    ", column '" + header[j] + "' in " + path);
                }
            }
            previous[c] = v;
            data.push_back(v);
            ++c;
        }
        have_previous = true;
        ++row;
    }
    if (row == 0) throw DataError("no data rows in " + path);

    series.values.resize(row, channels);
    for (Eigen::Index i = 0; i < row; ++i)
        for (Eigen::Index c = 0; c < channels; ++c)
            series.values(i, c) = data[static_cast<std::size_t>(i * channels + c)];
    return series;
}

void save_csv(const MultivariateSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "date";
    for (const auto& name : series.channel_names) out << ',' << name;
    out << '\n';
    out << std::setprecision(17);
    for (Eigen::Index i = 0; i < series.length(); ++i) {
        if (!series.timestamps.empty()) {
            out << series.timestamps[static_cast<std::size_t>(i)];
        } else {
            out << i;
        }
        for (Eigen::Index c = 0; c < series.channels(); ++c) out << ',' << series.values(i, c);
        out << '\n';
    }
}

SplitSpec SplitSpec::fractions(double train, double val, double test) {
    SplitSpec spec;
    spec.train_fraction = train;
    spec.val_fraction = val;
    spec.test_fraction = test;
    return spec;
}

SplitSpec SplitSpec::ett_months(Eigen::Index rows_per_month) {
    SplitSpec spec;
    spec.explicit_lengths = {12 * rows_per_month, 4 * rows_per_month, 4 * rows_per_month};
    return spec;
}

Split split(const MultivariateSeries& series, const SplitSpec& spec, Eigen::Index min_segment) {
    const Eigen::Index total = series.length();
    Eigen::Index n_train, n_val, n_test;
    if (spec.explicit_lengths) {
        n_train = (*spec.explicit_lengths)[0];
        n_val = (*spec.explicit_lengths)[1];
        n_test = (*spec.explicit_lengths)[2];
        if (n_train + n_val + n_test > total) {
            throw DataError("explicit split lengths exceed series length " + std::to_string(total));
        }
    } else {
        const double sum = spec.train_fraction + spec.val_fraction + spec.test_fraction;
        if (spec.train_fraction <= 0 || spec.val_fraction <= 0 || spec.test_fraction <= 0 ||
            std::abs(sum - 1.0) > 1e-9) {
            throw ConfigError("split fractions must be positive and sum to 1");
        }
        n_train = static_cast<Eigen::Index>(std::floor(spec.train_fraction * total));
        n_val = static_cast<Eigen::Index>(std::floor(spec.val_fraction * total));
        n_test = total - n_train - n_val;  // remainder goes to test
    }
    if (n_train < min_segment || n_val < min_segment || n_test < min_segment) {
        throw DataError("SegmentTooShort: split lengths (" + std::to_string(n_train) + "," +
                        std::to_string(n_val) + "," + std::to_string(n_test) +
                        ") below minimum segment length " + std::to_string(min_segment));
    }
    Split out;
    out.train = series.slice(0, n_train);
    out.val = series.slice(n_train, n_val);
    out.test = series.slice(n_train + n_val, n_test);
    return out;
}

NormalizationStats fit_normalizer(const MultivariateSeries& train) {
    const Eigen::Index t = train.length();
    const Eigen::Index c = train.channels();
    if (t < 1) throw DataError("cannot fit normalizer on empty series");
    NormalizationStats stats;
    stats.mean = train.values.colwise().mean();
    stats.std.resize(c);
    for (Eigen::Index j = 0; j < c; ++j) {
        const double var =
            (train.values.col(j).array() - stats.mean(j)).square().sum() / static_cast<double>(t);
        stats.std(j) = std::sqrt(var);
        if (!(stats.std(j) > 0.0)) {
            const std::string name = j < static_cast<Eigen::Index>(train.channel_names.size())
                                         ? train.channel_names[static_cast<std::size_t>(j)]
                                         : std::to_string(j);
            throw DataError("zero-variance channel '" + name + "' in train split");
        }
    }
    return stats;
}

MultivariateSeries apply_normalizer(const NormalizationStats& stats,
                                    const MultivariateSeries& series) {
    if (stats.mean.size() != series.channels()) {
        throw DataError("normalizer channel count mismatch");
    }
    MultivariateSeries out = series;
    out.values = (series.values.rowwise() - stats.mean.transpose()).array().rowwise() /
                 stats.std.transpose().array();
    return out;
}

MultivariateSeries invert_normalizer(const NormalizationStats& stats,
                                     const MultivariateSeries& series) {
    if (stats.mean.size() != series.channels()) {
        throw DataError("normalizer channel count mismatch");
    }
    MultivariateSeries out = series;
    out.values =
        (series.values.array().rowwise() * stats.std.transpose().array()).rowwise() +
        stats.mean.transpose().array();
    return out;
}

}  // namespace tsf
