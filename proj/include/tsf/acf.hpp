#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "tsf/series.hpp"
#include "tsf/window.hpp"

namespace tsf {

/// Lag-domain autocorrelation estimate:
///   gamma(tau) = 1/(T-tau) * sum_{t=1}^{T-tau} (x_t - mean)(x_{t+tau} - mean)
///   rho(tau)   = gamma(tau) / gamma(0)
/// Returns rho(0..max_lag); rho(0) == 1.
Eigen::VectorXd estimate_acf(const Eigen::VectorXd& x, int max_lag);

/// Cross-correlation rho_{12}(tau) = corr(x1(t), x2(t+tau)), estimated with
/// the same per-series centering and 1/(T-|tau|) normalization. The result
/// covers lag_min..lag_max inclusive; rho_{12}(tau) == rho_{21}(-tau).
Eigen::VectorXd estimate_cross_corr(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                                    int lag_min, int lag_max);

struct AcfProfile {
    std::vector<Eigen::VectorXd> rho;  // one curve per channel, length max_lag+1
    int max_lag = 0;
    std::vector<std::string> channel_names;
};

AcfProfile estimate_profile(const MultivariateSeries& series, int max_lag);

/// Correlation blocks of the linear-model normal equations, stored in the
/// reversed-window layout (input ordered newest to oldest):
///   R[c1][c2](i,j)      = rho_{c1,c2}(i-j)          (L x L)
///   Rprime[c1][c2](i,j) = rho_{c1,c2}(i+j+1)        (L x H)
/// The solver undoes the reversal so its coefficients always act on windows
/// in chronological order.
struct CorrelationBlocks {
    Eigen::Index L = 0, H = 0, C = 0;
    std::vector<std::vector<Eigen::MatrixXd>> R;
    std::vector<std::vector<Eigen::MatrixXd>> Rprime;
};

/// Estimator route: fills the blocks from lag-domain ACF/CCF estimates over
/// the segment. Agrees with the Gram route asymptotically.
CorrelationBlocks build_blocks(const MultivariateSeries& segment, Eigen::Index lookback,
                               Eigen::Index horizon);

/// Gram route: rearranges A^(c1)^T A^(c2) and A^(c1)^T B^(c2) of the windowed
/// data into the same layout (one global variance scale, so solutions are
/// unchanged). Solving with these blocks reproduces the least-squares
/// solution exactly.
CorrelationBlocks build_blocks(const WindowedDataset& dataset);

struct DriftReport {
    struct ChannelDiff {
        std::string name;
        Eigen::Index channel = 0;
        double diff = 0.0;
    };
    std::vector<ChannelDiff> channels;  // sorted descending by diff
    double sum_diff = 0.0;
    int max_lag = 0;
};

/// Default lag bound: min(train/4, test/4, 1000).
int default_max_lag(Eigen::Index train_len, Eigen::Index test_len);

/// Train/test ACF drift. Diff_c sums squared per-lag ACF gaps for channel c;
/// sum_diff applies the same sum to the channel-mean ACF curves. Pass
/// max_lag < 0 to use the default rule.
DriftReport drift_report(const MultivariateSeries& train, const MultivariateSeries& test,
                         int max_lag = -1);

std::string to_json(const DriftReport& report);

/// Per-channel train and test ACF curves as CSV (lag, <ch>_train, <ch>_test, ...).
void export_acf_csv(const MultivariateSeries& train, const MultivariateSeries& test, int max_lag,
                    const std::string& path);

}  // namespace tsf
