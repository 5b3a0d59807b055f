#include "tsf/diagnostics.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

namespace tsf {

RiskReport risk_decompose(const DesignMatrices& train, const DesignMatrices& test,
                          Strategy strategy, const SolveConfig& cfg) {
    if (train.L != test.L || train.H != test.H || train.C != test.C) {
        throw DataError("risk_decompose: train/test design shape mismatch");
    }
    const bool ci = strategy == Strategy::CI;
    if (strategy != Strategy::CD && !ci) throw ConfigError("risk_decompose expects CD or CI");
    const Eigen::MatrixXd& a_tr = ci ? train.A_ci : train.A_cd;
    const Eigen::MatrixXd& b_tr = ci ? train.B_ci : train.B_cd;
    const Eigen::MatrixXd& a_te = ci ? test.A_ci : test.A_cd;
    const Eigen::MatrixXd& b_te = ci ? test.B_ci : test.B_cd;

    SolveInfo info_train, info_test;
    const Eigen::MatrixXd w_train = least_squares(a_tr, b_tr, cfg, &info_train);
    const Eigen::MatrixXd w_test = least_squares(a_te, b_te, cfg, &info_test);

    RiskReport report;
    report.strategy = strategy;
    report.cond_train = info_train.condition;
    report.cond_test = info_test.condition;
    report.test_rank_deficient = info_test.rank_deficient;
    report.train_error = (a_tr * w_train - b_tr).squaredNorm();
    report.test_error = (a_te * w_test - b_te).squaredNorm();
    report.gen_error = (a_te * w_train - b_te).squaredNorm();

    const Eigen::MatrixXd delta = w_train - w_test;
    report.w_diff = (a_te * delta).squaredNorm();
    const Eigen::MatrixXd test_gram = a_te.transpose() * a_te;
    report.w_diff_mahalanobis = (delta.transpose() * test_gram * delta).trace();

    const double tiny = std::numeric_limits<double>::min();
    report.pythagorean_residual = std::abs(report.gen_error - (report.w_diff + report.test_error)) /
                                  std::max(report.gen_error, tiny);
    return report;
}

std::string to_json(const RiskReport& report, const std::string& dataset, Eigen::Index lookback,
                    Eigen::Index horizon) {
    nlohmann::json j;
    j["dataset"] = dataset;
    j["L"] = lookback;
    j["H"] = horizon;
    j["strategy"] = to_string(report.strategy);
    j["train_error"] = report.train_error;
    j["test_error"] = report.test_error;
    j["gen_error"] = report.gen_error;
    j["w_diff"] = report.w_diff;
    j["pythagorean_residual"] = report.pythagorean_residual;
    j["cond_train"] = std::isfinite(report.cond_train) ? nlohmann::json(report.cond_train)
                                                       : nlohmann::json("inf");
    j["cond_test"] = std::isfinite(report.cond_test) ? nlohmann::json(report.cond_test)
                                                     : nlohmann::json("inf");
    return j.dump(2);
}

namespace {

template <typename PredictFn>
double mean_error(const WindowedDataset& data, Metric metric, PredictFn&& predict_fn) {
    if (data.N() < 1) throw DataError("evaluate: empty dataset");
    double accum = 0.0;
    for (Eigen::Index i = 0; i < data.N(); ++i) {
        const Eigen::MatrixXd diff = predict_fn(data.sample_x(i)) - data.sample_y(i);
        accum += metric == Metric::MSE ? diff.squaredNorm() : diff.cwiseAbs().sum();
    }
    return accum / (static_cast<double>(data.N()) * static_cast<double>(data.H()) *
                    static_cast<double>(data.C()));
}

}  // namespace

double evaluate(const LinearCoefficients& coeffs, const WindowedDataset& data, Metric metric) {
    return mean_error(data, metric,
                      [&](const Eigen::MatrixXd& window) { return predict(coeffs, window); });
}

double evaluate(const TrainedModel& model, const WindowedDataset& data, Metric metric) {
    return mean_error(data, metric,
                      [&](const Eigen::MatrixXd& window) { return model.predict(window); });
}

BaselineMetrics persistence_baseline(const WindowedDataset& data) {
    if (data.N() < 1) throw DataError("persistence_baseline: empty dataset");
    double sq = 0.0;
    double abs = 0.0;
    for (Eigen::Index i = 0; i < data.N(); ++i) {
        const Eigen::MatrixXd x = data.sample_x(i);
        const Eigen::MatrixXd y = data.sample_y(i);
        const Eigen::MatrixXd diff = y.rowwise() - x.row(data.L() - 1);
        sq += diff.squaredNorm();
        abs += diff.cwiseAbs().sum();
    }
    const double count = static_cast<double>(data.N()) * static_cast<double>(data.H()) *
                         static_cast<double>(data.C());
    return {sq / count, abs / count};
}

}  // namespace tsf
