#pragma once

#include <string>

#include "tsf/models.hpp"
#include "tsf/solver.hpp"
#include "tsf/window.hpp"

namespace tsf {

enum class Metric { MSE, MAE };

/// The four risk statistics for one (dataset, strategy) pair, as squared
/// Frobenius totals over the stacked designs:
///   train_error = ||A_tr W_tr - B_tr||^2   with W_tr optimal on train
///   test_error  = ||A_te W_te - B_te||^2   with W_te optimal on test
///   gen_error   = ||A_te W_tr - B_te||^2
///   w_diff      = ||A_te (W_tr - W_te)||^2
/// At exact minimizers gen_error = w_diff + test_error (the test residual is
/// orthogonal to the column space), recorded as pythagorean_residual.
struct RiskReport {
    Strategy strategy = Strategy::CD;
    double train_error = 0.0;
    double test_error = 0.0;
    double gen_error = 0.0;
    double w_diff = 0.0;
    double w_diff_mahalanobis = 0.0;  // trace form through the test Gram matrix
    double pythagorean_residual = 0.0;  // |gen - (w_diff + test)| / max(gen, tiny)
    double cond_train = 0.0;
    double cond_test = 0.0;
    bool test_rank_deficient = false;
};

RiskReport risk_decompose(const DesignMatrices& train, const DesignMatrices& test,
                          Strategy strategy, const SolveConfig& cfg = {});

std::string to_json(const RiskReport& report, const std::string& dataset, Eigen::Index lookback,
                    Eigen::Index horizon);

/// Mean error over all samples, horizon steps, and channels (normalized space).
double evaluate(const LinearCoefficients& coeffs, const WindowedDataset& data, Metric metric);
double evaluate(const TrainedModel& model, const WindowedDataset& data, Metric metric);

struct BaselineMetrics {
    double mse = 0.0;
    double mae = 0.0;
};

/// Repeat each channel's last look-back value across the horizon.
BaselineMetrics persistence_baseline(const WindowedDataset& data);

}  // namespace tsf
