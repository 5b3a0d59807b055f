#include "tsf/acf.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>

#include <json.hpp>

namespace tsf {

namespace {

double centered_lag_sum(const Eigen::VectorXd& a, double mean_a, const Eigen::VectorXd& b,
                        double mean_b, int lag) {
    // sum over t of (a_t - mean_a)(b_{t+lag} - mean_b), normalized by 1/(T-|lag|)
    const Eigen::Index t_len = a.size();
    const int abs_lag = lag >= 0 ? lag : -lag;
    const Eigen::Index n = t_len - abs_lag;
    double sum;
    if (lag >= 0) {
        sum = (a.head(n).array() - mean_a).matrix().dot((b.tail(n).array() - mean_b).matrix());
    } else {
        sum = (a.tail(n).array() - mean_a).matrix().dot((b.head(n).array() - mean_b).matrix());
    }
    return sum / static_cast<double>(n);
}

double variance_or_throw(const Eigen::VectorXd& x, double mean) {
    const double var = (x.array() - mean).square().sum() / static_cast<double>(x.size());
    if (!(var > 0.0)) throw DataError("ZeroVariance: series has no variation");
    return var;
}

}  // namespace

Eigen::VectorXd estimate_acf(const Eigen::VectorXd& x, int max_lag) {
    const Eigen::Index t_len = x.size();
    if (max_lag < 0) throw ConfigError("max_lag must be >= 0");
    if (t_len < max_lag + 2) {
        throw DataError("series length " + std::to_string(t_len) + " too short for max_lag " +
                        std::to_string(max_lag));
    }
    const double mean = x.mean();
    const double gamma0 = variance_or_throw(x, mean);
    Eigen::VectorXd rho(max_lag + 1);
    rho(0) = 1.0;
    for (int tau = 1; tau <= max_lag; ++tau) {
        rho(tau) = centered_lag_sum(x, mean, x, mean, tau) / gamma0;
    }
    return rho;
}

Eigen::VectorXd estimate_cross_corr(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                                    int lag_min, int lag_max) {
    if (x1.size() != x2.size()) throw DataError("cross-correlation length mismatch");
    if (lag_min > lag_max) throw ConfigError("lag_min > lag_max");
    const Eigen::Index t_len = x1.size();
    const int widest = std::max(std::abs(lag_min), std::abs(lag_max));
    if (t_len < widest + 2) {
        throw DataError("series length " + std::to_string(t_len) + " too short for lag " +
                        std::to_string(widest));
    }
    const double mean1 = x1.mean();
    const double mean2 = x2.mean();
    const double scale = std::sqrt(variance_or_throw(x1, mean1) * variance_or_throw(x2, mean2));
    Eigen::VectorXd rho(lag_max - lag_min + 1);
    for (int lag = lag_min; lag <= lag_max; ++lag) {
        rho(lag - lag_min) = centered_lag_sum(x1, mean1, x2, mean2, lag) / scale;
    }
    return rho;
}

AcfProfile estimate_profile(const MultivariateSeries& series, int max_lag) {
    AcfProfile profile;
    profile.max_lag = max_lag;
    profile.channel_names = series.channel_names;
    profile.rho.reserve(static_cast<std::size_t>(series.channels()));
    for (Eigen::Index c = 0; c < series.channels(); ++c) {
        profile.rho.push_back(estimate_acf(series.values.col(c), max_lag));
    }
    return profile;
}

CorrelationBlocks build_blocks(const MultivariateSeries& segment, Eigen::Index lookback,
                               Eigen::Index horizon) {
    const Eigen::Index channels = segment.channels();
    const int lag_min = -static_cast<int>(lookback - 1);
    const int lag_max = static_cast<int>(lookback + horizon - 1);
    if (segment.length() < lag_max + 2) {
        throw DataError("segment too short for correlation lags up to " + std::to_string(lag_max));
    }

    CorrelationBlocks blocks;
    blocks.L = lookback;
    blocks.H = horizon;
    blocks.C = channels;
    blocks.R.assign(channels, std::vector<Eigen::MatrixXd>(channels));
    blocks.Rprime.assign(channels, std::vector<Eigen::MatrixXd>(channels));

    for (Eigen::Index c1 = 0; c1 < channels; ++c1) {
        for (Eigen::Index c2 = 0; c2 < channels; ++c2) {
            const Eigen::VectorXd rho = estimate_cross_corr(
                segment.values.col(c1), segment.values.col(c2), lag_min, lag_max);
            const auto at = [&](int lag) { return rho(lag - lag_min); };

            Eigen::MatrixXd r(lookback, lookback);
            for (Eigen::Index i = 0; i < lookback; ++i)
                for (Eigen::Index j = 0; j < lookback; ++j)
                    r(i, j) = at(static_cast<int>(i - j));
            Eigen::MatrixXd rp(lookback, horizon);
            for (Eigen::Index i = 0; i < lookback; ++i)
                for (Eigen::Index j = 0; j < horizon; ++j)
                    rp(i, j) = at(static_cast<int>(i + j + 1));
            blocks.R[c1][c2] = std::move(r);
            blocks.Rprime[c1][c2] = std::move(rp);
        }
    }
    return blocks;
}

CorrelationBlocks build_blocks(const WindowedDataset& dataset) {
    const Eigen::Index channels = dataset.C();
    const Eigen::Index lookback = dataset.L();
    const Eigen::Index horizon = dataset.H();

    CorrelationBlocks blocks;
    blocks.L = lookback;
    blocks.H = horizon;
    blocks.C = channels;
    blocks.R.assign(channels, std::vector<Eigen::MatrixXd>(channels));
    blocks.Rprime.assign(channels, std::vector<Eigen::MatrixXd>(channels));

    std::vector<Eigen::MatrixXd> a(static_cast<std::size_t>(channels));
    std::vector<Eigen::MatrixXd> b(static_cast<std::size_t>(channels));
    double scale = 0.0;
    for (Eigen::Index c = 0; c < channels; ++c) {
        a[static_cast<std::size_t>(c)] = dataset.channel_A(c);
        b[static_cast<std::size_t>(c)] = dataset.channel_B(c);
        const auto& ac = a[static_cast<std::size_t>(c)];
        scale += (ac.transpose() * ac).diagonal().mean();
    }
    scale /= static_cast<double>(channels);
    if (!(scale > 0.0)) throw DataError("ZeroVariance: windowed data has no energy");

    for (Eigen::Index c1 = 0; c1 < channels; ++c1) {
        for (Eigen::Index c2 = 0; c2 < channels; ++c2) {
            const Eigen::MatrixXd gram = a[static_cast<std::size_t>(c1)].transpose() *
                                         a[static_cast<std::size_t>(c2)] / scale;
            const Eigen::MatrixXd cross = a[static_cast<std::size_t>(c1)].transpose() *
                                          b[static_cast<std::size_t>(c2)] / scale;
            // Reverse the window axis to match the block layout.
            blocks.R[c1][c2] = gram.reverse();
            blocks.Rprime[c1][c2] = cross.colwise().reverse();
        }
    }
    return blocks;
}

int default_max_lag(Eigen::Index train_len, Eigen::Index test_len) {
    const Eigen::Index quarter = std::min(train_len, test_len) / 4;
    return static_cast<int>(std::min<Eigen::Index>(quarter, 1000));
}

DriftReport drift_report(const MultivariateSeries& train, const MultivariateSeries& test,
                         int max_lag) {
    if (train.channels() != test.channels()) throw DataError("channel count mismatch");
    if (max_lag < 0) max_lag = default_max_lag(train.length(), test.length());

    const AcfProfile train_profile = estimate_profile(train, max_lag);
    const AcfProfile test_profile = estimate_profile(test, max_lag);

    DriftReport report;
    report.max_lag = max_lag;
    const Eigen::Index channels = train.channels();
    Eigen::VectorXd mean_train = Eigen::VectorXd::Zero(max_lag + 1);
    Eigen::VectorXd mean_test = Eigen::VectorXd::Zero(max_lag + 1);
    for (Eigen::Index c = 0; c < channels; ++c) {
        const auto& rho_tr = train_profile.rho[static_cast<std::size_t>(c)];
        const auto& rho_te = test_profile.rho[static_cast<std::size_t>(c)];
        DriftReport::ChannelDiff entry;
        entry.channel = c;
        entry.name = c < static_cast<Eigen::Index>(train.channel_names.size())
                         ? train.channel_names[static_cast<std::size_t>(c)]
                         : "ch" + std::to_string(c);
        entry.diff = (rho_tr - rho_te).squaredNorm();
        report.channels.push_back(std::move(entry));
        mean_train += rho_tr;
        mean_test += rho_te;
    }
    mean_train /= static_cast<double>(channels);
    mean_test /= static_cast<double>(channels);
    report.sum_diff = (mean_train - mean_test).squaredNorm();

    std::stable_sort(report.channels.begin(), report.channels.end(),
                     [](const auto& lhs, const auto& rhs) { return lhs.diff > rhs.diff; });
    return report;
}

std::string to_json(const DriftReport& report) {
    nlohmann::json j;
    j["channels"] = nlohmann::json::array();
    for (const auto& entry : report.channels) {
        j["channels"].push_back({{"name", entry.name}, {"diff", entry.diff}});
    }
    j["sum_diff"] = report.sum_diff;
    j["max_lag"] = report.max_lag;
    return j.dump(2);
}

void export_acf_csv(const MultivariateSeries& train, const MultivariateSeries& test, int max_lag,
                    const std::string& path) {
    if (max_lag < 0) max_lag = default_max_lag(train.length(), test.length());
    const AcfProfile train_profile = estimate_profile(train, max_lag);
    const AcfProfile test_profile = estimate_profile(test, max_lag);

    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "lag";
    for (Eigen::Index c = 0; c < train.channels(); ++c) {
        const std::string name = c < static_cast<Eigen::Index>(train.channel_names.size())
                                     ? train.channel_names[static_cast<std::size_t>(c)]
                                     : "ch" + std::to_string(c);
        out << ',' << name << "_train," << name << "_test";
    }
    out << '\n' << std::setprecision(12);
    for (int tau = 0; tau <= max_lag; ++tau) {
        out << tau;
        for (Eigen::Index c = 0; c < train.channels(); ++c) {
            out << ',' << train_profile.rho[static_cast<std::size_t>(c)](tau) << ','
                << test_profile.rho[static_cast<std::size_t>(c)](tau);
        }
        out << '\n';
    }
}

}  // namespace tsf
