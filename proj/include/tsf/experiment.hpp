#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tsf/acf.hpp"
#include "tsf/diagnostics.hpp"
#include "tsf/models.hpp"
#include "tsf/series.hpp"
#include "tsf/solver.hpp"
#include "tsf/synth.hpp"

namespace tsf {

/// Compact generator description for synthetic runs. phi_per_channel lists
/// one coefficient vector per channel; a single entry is shared by all.
struct SynthConfig {
    Eigen::Index channels = 2;
    Eigen::Index length = 20000;
    std::vector<std::vector<double>> phi_per_channel = {{0.8}};
    double noise_std = 1.0;
    std::optional<DriftSpec> drift;
};

enum class SweepAxis { None, Lambda, Lookback, Rank };

struct ExperimentConfig {
    std::string dataset_path;            // CSV input; empty when synth is set
    std::optional<SynthConfig> synth;
    std::string dataset_name;            // defaults to the file stem or "synth"
    std::string date_column = "date";
    bool forward_fill = false;

    Eigen::Index lookback = 96;
    Eigen::Index horizon = 48;
    std::vector<Strategy> strategies = {Strategy::CD, Strategy::CI};

    Architecture model = Architecture::Linear;
    LossKind loss = LossKind::L2;
    int hidden_units = 256;
    int rank_rate = 1;
    double lambda = 1e-2;
    bool linear_bias = false;
    bool closed_form = false;      // solve instead of gradient training
    std::string route = "ols";    // closed-form route: "ols" | "yw"

    TrainConfig train = TrainConfig::defaults_for(Architecture::Linear);
    bool learning_rate_set = false;  // an explicit rate wins over model defaults

    std::string split = "fractions";  // "fractions" | "ett"
    double train_fraction = 0.7, val_fraction = 0.1, test_fraction = 0.2;
    Eigen::Index rows_per_month = 0;  // 0 = infer from timestamps for "ett"

    SweepAxis sweep = SweepAxis::None;
    std::vector<double> grid;      // sweep values (lambda) or integer axes

    int max_lag = -1;              // drift report bound; -1 = default rule
    bool with_drift_report = true;
    bool with_risk_report = true;

    std::string out_dir;           // empty = no artifacts written
    std::uint64_t seed = 0;
    int workers = 1;
    double max_memory_gb = 8.0;
};

/// Flat key = value file; '#' starts a comment. Unknown keys are rejected.
ExperimentConfig load_config(const std::string& path);
void apply_config_file(ExperimentConfig& config, const std::string& path);
void apply_config_line(ExperimentConfig& config, const std::string& key,
                       const std::string& value);

/// Ingest + split + normalize, shared by every subcommand.
struct PreparedData {
    std::string name;
    MultivariateSeries raw;
    NormalizationStats stats;
    MultivariateSeries train, val, test;  // normalized with train statistics
};

PreparedData prepare_data(const ExperimentConfig& config);

struct ResultRow {
    std::string dataset;
    std::string model;
    std::string strategy;
    Eigen::Index lookback = 0;
    Eigen::Index horizon = 0;
    std::string sweep;      // "", "lambda", "lookback", "rank"
    double sweep_value = 0.0;
    double mse = 0.0;
    double mae = 0.0;
    double train_mse = 0.0;
    double val_mse = 0.0;
};

struct ResultTable {
    std::vector<ResultRow> rows;

    std::string to_csv() const;
    std::string to_json() const;
    static ResultTable from_csv(const std::string& text);
    static ResultTable from_json(const std::string& text);
};

/// 100 * (CD - CI) / CD from a pair of raw metric values.
double improvement_percent(double cd_value, double ci_value);

struct StrategySummary {
    struct PerModel {
        int significant_improvement = 0;  // > +10%
        int significant_drop = 0;         // < -10%
        int total = 0;
        double mean_improvement = 0.0;
    };
    std::map<std::string, PerModel> mse;
    std::map<std::string, PerModel> mae;
};

/// Pairs CD/CI rows per (dataset, model, horizon, sweep point).
/// Throws DataError when a CD row has no CI partner or vice versa.
StrategySummary compare_strategies(const ResultTable& table);
std::string to_json(const StrategySummary& summary);

/// Execute one experiment configuration end to end: ingest, split,
/// normalize, drift + risk reports, one forecaster per strategy (and sweep
/// point), metrics on the test split. Artifacts land under config.out_dir
/// when set.
ResultTable run(const ExperimentConfig& config);

/// Bytes the run would need for its largest dense objects; infeasible
/// combinations are refused before any allocation.
std::size_t projected_bytes(const ExperimentConfig& config, Eigen::Index n_train,
                            Eigen::Index channels);

}  // namespace tsf
