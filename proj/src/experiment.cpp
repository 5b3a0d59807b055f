#include "tsf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace tsf {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_number(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value '" + value + "' for key '" + key + "'");
    }
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("bad boolean value '" + value + "' for key '" + key + "'");
}

DriftSpec parse_drift(const std::string& text) {
    // shift:t0:phi1[,phi2...] | trend:t0:slope | anomaly:t0:magnitude:width
    const auto parts = split_list(text, ':');
    if (parts.size() < 3) throw ConfigError("bad drift spec '" + text + "'");
    DriftSpec drift;
    drift.at = static_cast<Eigen::Index>(parse_number(parts[1], "drift t0"));
    drift.target_channels = {0};
    if (parts[0] == "shift") {
        drift.kind = DriftSpec::Kind::CoefficientShift;
        for (const auto& phi : split_list(parts[2], ','))
            drift.new_coefficients.push_back(parse_number(phi, "drift phi"));
    } else if (parts[0] == "trend") {
        drift.kind = DriftSpec::Kind::TrendBreak;
        drift.slope = parse_number(parts[2], "drift slope");
    } else if (parts[0] == "anomaly") {
        if (parts.size() < 4) throw ConfigError("anomaly drift needs magnitude and width");
        drift.kind = DriftSpec::Kind::Anomaly;
        drift.magnitude = parse_number(parts[2], "drift magnitude");
        drift.width = static_cast<Eigen::Index>(parse_number(parts[3], "drift width"));
    } else {
        throw ConfigError("unknown drift kind '" + parts[0] + "'");
    }
    return drift;
}

std::string format_value(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.10g", v);
    return buffer;
}

}  // namespace

void apply_config_line(ExperimentConfig& config, const std::string& key,
                       const std::string& value) {
    if (key == "dataset") config.dataset_path = value;
    else if (key == "dataset_name") config.dataset_name = value;
    else if (key == "date_column") config.date_column = value;
    else if (key == "forward_fill") config.forward_fill = parse_bool(value, key);
    else if (key == "lookback") config.lookback = static_cast<Eigen::Index>(parse_number(value, key));
    else if (key == "horizon") config.horizon = static_cast<Eigen::Index>(parse_number(value, key));
    else if (key == "strategy" || key == "strategies") {
        config.strategies.clear();
        for (const auto& name : split_list(value, ','))
            config.strategies.push_back(strategy_from_string(name));
        if (config.strategies.empty()) throw ConfigError("at least one strategy is required");
    } else if (key == "model") {
        config.model = architecture_from_string(value);
        if (!config.learning_rate_set) {
            config.train.learning_rate = TrainConfig::defaults_for(config.model).learning_rate;
        }
    } else if (key == "loss") config.loss = loss_from_string(value);
    else if (key == "hidden_units") config.hidden_units = static_cast<int>(parse_number(value, key));
    else if (key == "rank_rate") config.rank_rate = static_cast<int>(parse_number(value, key));
    else if (key == "lambda") config.lambda = parse_number(value, key);
    else if (key == "linear_bias") config.linear_bias = parse_bool(value, key);
    else if (key == "closed_form") config.closed_form = parse_bool(value, key);
    else if (key == "route") {
        if (value != "ols" && value != "yw") throw ConfigError("route must be ols|yw");
        config.route = value;
    }
    else if (key == "learning_rate") {
        config.train.learning_rate = parse_number(value, key);
        config.learning_rate_set = true;
    }
    else if (key == "epochs") config.train.epochs = static_cast<int>(parse_number(value, key));
    else if (key == "batch_size") config.train.batch_size = static_cast<int>(parse_number(value, key));
    else if (key == "patience") config.train.early_stop_patience = static_cast<int>(parse_number(value, key));
    else if (key == "weight_decay") config.train.weight_decay = parse_number(value, key);
    else if (key == "plain_sgd") config.train.plain_sgd = parse_bool(value, key);
    else if (key == "split") {
        if (value != "fractions" && value != "ett") throw ConfigError("split must be fractions|ett");
        config.split = value;
    } else if (key == "fractions") {
        const auto parts = split_list(value, ',');
        if (parts.size() != 3) throw ConfigError("fractions needs three comma-separated values");
        config.train_fraction = parse_number(parts[0], key);
        config.val_fraction = parse_number(parts[1], key);
        config.test_fraction = parse_number(parts[2], key);
    } else if (key == "rows_per_month") {
        config.rows_per_month = static_cast<Eigen::Index>(parse_number(value, key));
    } else if (key == "sweep") {
        if (value == "lambda") config.sweep = SweepAxis::Lambda;
        else if (value == "lookback") config.sweep = SweepAxis::Lookback;
        else if (value == "rank") config.sweep = SweepAxis::Rank;
        else if (value == "none") config.sweep = SweepAxis::None;
        else throw ConfigError("sweep must be lambda|lookback|rank|none");
    } else if (key == "grid") {
        config.grid.clear();
        for (const auto& v : split_list(value, ',')) config.grid.push_back(parse_number(v, key));
    } else if (key == "max_lag") config.max_lag = static_cast<int>(parse_number(value, key));
    else if (key == "drift_report") config.with_drift_report = parse_bool(value, key);
    else if (key == "risk_report") config.with_risk_report = parse_bool(value, key);
    else if (key == "out") config.out_dir = value;
    else if (key == "seed") {
        config.seed = static_cast<std::uint64_t>(parse_number(value, key));
        config.train.seed = config.seed;
    } else if (key == "workers") config.workers = static_cast<int>(parse_number(value, key));
    else if (key == "max_memory_gb") config.max_memory_gb = parse_number(value, key);
    else if (key == "synth_channels") {
        if (!config.synth) config.synth.emplace();
        config.synth->channels = static_cast<Eigen::Index>(parse_number(value, key));
    } else if (key == "synth_length") {
        if (!config.synth) config.synth.emplace();
        config.synth->length = static_cast<Eigen::Index>(parse_number(value, key));
    } else if (key == "synth_phi") {
        // semicolon separates channels, comma separates lags
        if (!config.synth) config.synth.emplace();
        config.synth->phi_per_channel.clear();
        for (const auto& group : split_list(value, ';')) {
            std::vector<double> phi;
            for (const auto& v : split_list(group, ',')) phi.push_back(parse_number(v, key));
            config.synth->phi_per_channel.push_back(std::move(phi));
        }
    } else if (key == "synth_noise_std") {
        if (!config.synth) config.synth.emplace();
        config.synth->noise_std = parse_number(value, key);
    } else if (key == "synth_drift") {
        if (!config.synth) config.synth.emplace();
        config.synth->drift = parse_drift(value);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

void apply_config_file(ExperimentConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + " of " + path +
                              " is not 'key = value'");
        }
        apply_config_line(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

ExperimentConfig load_config(const std::string& path) {
    ExperimentConfig config;
    apply_config_file(config, path);
    return config;
}

std::string ResultTable::to_csv() const {
    std::stringstream out;
    out << "dataset,model,strategy,L,H,sweep,sweep_value,mse,mae,train_mse,val_mse\n";
    out << std::setprecision(12);
    for (const auto& row : rows) {
        out << row.dataset << ',' << row.model << ',' << row.strategy << ',' << row.lookback
            << ',' << row.horizon << ',' << row.sweep << ',' << format_value(row.sweep_value)
            << ',' << row.mse << ',' << row.mae << ',' << row.train_mse << ',' << row.val_mse
            << '\n';
    }
    return out.str();
}

ResultTable ResultTable::from_csv(const std::string& text) {
    ResultTable table;
    std::stringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty results CSV");
    const auto split_raw = [](const std::string& row_text) {
        std::vector<std::string> cells;
        std::stringstream ss(row_text);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!row_text.empty() && row_text.back() == ',') cells.emplace_back();
        return cells;
    };
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split_raw(line);
        if (cells.size() != 11) throw DataError("results CSV row has " +
                                                std::to_string(cells.size()) + " fields");
        ResultRow row;
        row.dataset = cells[0];
        row.model = cells[1];
        row.strategy = cells[2];
        row.lookback = static_cast<Eigen::Index>(std::stoll(cells[3]));
        row.horizon = static_cast<Eigen::Index>(std::stoll(cells[4]));
        row.sweep = cells[5];
        row.sweep_value = std::stod(cells[6]);
        row.mse = std::stod(cells[7]);
        row.mae = std::stod(cells[8]);
        row.train_mse = std::stod(cells[9]);
        row.val_mse = std::stod(cells[10]);
        table.rows.push_back(std::move(row));
    }
    return table;
}

namespace {

nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double json_number(const nlohmann::json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

std::string ResultTable::to_json() const {
    nlohmann::json j;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : rows) {
        j["rows"].push_back({{"dataset", row.dataset},
                             {"model", row.model},
                             {"strategy", row.strategy},
                             {"L", row.lookback},
                             {"H", row.horizon},
                             {"sweep", row.sweep},
                             {"sweep_value", number_or_null(row.sweep_value)},
                             {"mse", number_or_null(row.mse)},
                             {"mae", number_or_null(row.mae)},
                             {"train_mse", number_or_null(row.train_mse)},
                             {"val_mse", number_or_null(row.val_mse)}});
    }
    return j.dump(2);
}

ResultTable ResultTable::from_json(const std::string& text) {
    ResultTable table;
    const auto j = nlohmann::json::parse(text);
    for (const auto& item : j.at("rows")) {
        ResultRow row;
        row.dataset = item.at("dataset").get<std::string>();
        row.model = item.at("model").get<std::string>();
        row.strategy = item.at("strategy").get<std::string>();
        row.lookback = item.at("L").get<Eigen::Index>();
        row.horizon = item.at("H").get<Eigen::Index>();
        row.sweep = item.at("sweep").get<std::string>();
        row.sweep_value = json_number(item.at("sweep_value"));
        row.mse = json_number(item.at("mse"));
        row.mae = json_number(item.at("mae"));
        row.train_mse = json_number(item.at("train_mse"));
        row.val_mse = json_number(item.at("val_mse"));
        table.rows.push_back(std::move(row));
    }
    return table;
}

double improvement_percent(double cd_value, double ci_value) {
    if (!(cd_value != 0.0)) throw DataError("improvement undefined for zero CD value");
    return 100.0 * (cd_value - ci_value) / cd_value;
}

StrategySummary compare_strategies(const ResultTable& table) {
    struct Pair {
        const ResultRow* cd = nullptr;
        const ResultRow* ci = nullptr;
    };
    std::map<std::string, Pair> pairs;
    for (const auto& row : table.rows) {
        if (row.strategy != "cd" && row.strategy != "ci") continue;
        const std::string key = row.dataset + '|' + row.model + '|' +
                                std::to_string(row.lookback) + '|' +
                                std::to_string(row.horizon) + '|' + row.sweep + '|' +
                                format_value(row.sweep_value);
        auto& pair = pairs[key];
        if (row.strategy == "cd") pair.cd = &row;
        else pair.ci = &row;
    }

    StrategySummary summary;
    for (const auto& [key, pair] : pairs) {
        if (!pair.cd || !pair.ci) {
            throw DataError("unmatched CD/CI rows for key " + key);
        }
        const double mse_improvement = improvement_percent(pair.cd->mse, pair.ci->mse);
        const double mae_improvement = improvement_percent(pair.cd->mae, pair.ci->mae);
        auto& mse_bucket = summary.mse[pair.cd->model];
        auto& mae_bucket = summary.mae[pair.cd->model];
        mse_bucket.total += 1;
        mse_bucket.mean_improvement += mse_improvement;
        if (mse_improvement > 10.0) mse_bucket.significant_improvement += 1;
        if (mse_improvement < -10.0) mse_bucket.significant_drop += 1;
        mae_bucket.total += 1;
        mae_bucket.mean_improvement += mae_improvement;
        if (mae_improvement > 10.0) mae_bucket.significant_improvement += 1;
        if (mae_improvement < -10.0) mae_bucket.significant_drop += 1;
    }
    for (auto* buckets : {&summary.mse, &summary.mae}) {
        for (auto& [model, bucket] : *buckets) {
            if (bucket.total > 0) bucket.mean_improvement /= bucket.total;
        }
    }
    return summary;
}

std::string to_json(const StrategySummary& summary) {
    nlohmann::json j;
    const auto emit = [](const std::map<std::string, StrategySummary::PerModel>& buckets) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [model, bucket] : buckets) {
            out[model] = {{"significant_improvement", bucket.significant_improvement},
                          {"significant_drop", bucket.significant_drop},
                          {"total", bucket.total},
                          {"mean_improvement", bucket.mean_improvement}};
        }
        return out;
    };
    j["mse"] = emit(summary.mse);
    j["mae"] = emit(summary.mae);
    return j.dump(2);
}

std::size_t projected_bytes(const ExperimentConfig& config, Eigen::Index n_train,
                            Eigen::Index channels) {
    const auto lookback = static_cast<std::size_t>(config.lookback);
    const auto horizon = static_cast<std::size_t>(config.horizon);
    const auto n = static_cast<std::size_t>(std::max<Eigen::Index>(n_train, 1));
    const auto c = static_cast<std::size_t>(channels);

    std::size_t cells = 0;
    const bool needs_stack = config.closed_form || config.with_risk_report;
    if (needs_stack) {
        const std::size_t design = 2 * n * (lookback + horizon) * c;  // cd + ci copies
        const std::size_t gram = lookback * c * lookback * c * 3;     // gram + eigs workspace
        cells = std::max(cells, design + gram);
    }
    bool trains_cd = !config.closed_form;
    if (trains_cd) {
        std::size_t in = lookback * c, out = horizon * c;
        std::size_t params;
        if (config.model == Architecture::Mlp) {
            params = (in + out) * static_cast<std::size_t>(config.hidden_units);
        } else {
            params = in * out;
        }
        cells = std::max(cells, params * 4);  // params, grads, and two Adam moments
    }
    return cells * sizeof(double);
}

namespace {

Eigen::Index infer_rows_per_month(const MultivariateSeries& series) {
    if (series.timestamps.size() < 2) {
        throw ConfigError("ett split needs timestamps or an explicit rows_per_month");
    }
    const auto parse = [](const std::string& text) -> std::optional<std::time_t> {
        std::tm tm = {};
        int year, month, day, hour = 0, minute = 0, second = 0;
        const int got = std::sscanf(text.c_str(), "%d-%d-%d %d:%d:%d", &year, &month, &day,
                                    &hour, &minute, &second);
        if (got < 3) return std::nullopt;
        tm.tm_year = year - 1900;
        tm.tm_mon = month - 1;
        tm.tm_mday = day;
        tm.tm_hour = hour;
        tm.tm_min = minute;
        tm.tm_sec = second;
        return timegm(&tm);
    };
    const auto first = parse(series.timestamps[0]);
    const auto second = parse(series.timestamps[1]);
    if (!first || !second || *second <= *first) {
        throw ConfigError("cannot infer sampling interval; pass rows_per_month explicitly");
    }
    const double minutes = static_cast<double>(*second - *first) / 60.0;
    return static_cast<Eigen::Index>(std::llround(30.0 * 24.0 * 60.0 / minutes));
}

MultivariateSeries make_synth(const SynthConfig& synth, std::uint64_t seed) {
    if (synth.phi_per_channel.empty()) throw ConfigError("synth needs phi coefficients");
    std::vector<ArSpec> specs;
    for (Eigen::Index c = 0; c < synth.channels; ++c) {
        ArSpec spec;
        const auto& groups = synth.phi_per_channel;
        spec.coefficients = groups[static_cast<std::size_t>(c) % groups.size()];
        spec.noise_std = synth.noise_std;
        spec.length = synth.length;
        spec.seed = seed;
        specs.push_back(std::move(spec));
    }
    auto series = gen_multichannel(specs, synth.drift);
    series.granularity = "synthetic";
    return series;
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& config) {
    PreparedData prepared;
    if (config.synth) {
        prepared.raw = make_synth(*config.synth, config.seed);
        prepared.name = config.dataset_name.empty() ? "synth" : config.dataset_name;
    } else if (!config.dataset_path.empty()) {
        CsvOptions opts;
        opts.date_column = config.date_column;
        opts.forward_fill = config.forward_fill;
        prepared.raw = load_csv(config.dataset_path, opts);
        prepared.name = config.dataset_name.empty()
                            ? std::filesystem::path(config.dataset_path).stem().string()
                            : config.dataset_name;
    } else {
        throw ConfigError("no dataset: set dataset=<csv> or synth_* keys");
    }

    SplitSpec spec;
    if (config.split == "ett") {
        const Eigen::Index rows = config.rows_per_month > 0 ? config.rows_per_month
                                                            : infer_rows_per_month(prepared.raw);
        spec = SplitSpec::ett_months(rows);
    } else {
        spec = SplitSpec::fractions(config.train_fraction, config.val_fraction,
                                    config.test_fraction);
    }
    const auto parts = split(prepared.raw, spec, config.lookback + config.horizon);
    prepared.stats = fit_normalizer(parts.train);
    prepared.train = apply_normalizer(prepared.stats, parts.train);
    prepared.val = apply_normalizer(prepared.stats, parts.val);
    prepared.test = apply_normalizer(prepared.stats, parts.test);
    return prepared;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << text;
}

struct RunPoint {
    Strategy strategy;
    std::string sweep;        // "", "lambda", "lookback", "rank"
    double sweep_value = std::numeric_limits<double>::quiet_NaN();
    Eigen::Index lookback;    // effective look-back for this point
    double lambda;            // effective PRReg strength
    int rank_rate;
};

// Ground truth and forecast for the first test window, one step per line.
template <typename PredictFn>
void write_forecast_csv(const std::string& path, const WindowedDataset& test_windows,
                        PredictFn&& predict_fn, const std::vector<std::string>& names) {
    const Eigen::MatrixXd actual = test_windows.sample_y(0);
    const Eigen::MatrixXd forecast = predict_fn(test_windows.sample_x(0));
    std::stringstream out;
    out << "step";
    for (Eigen::Index c = 0; c < test_windows.C(); ++c) {
        const std::string name = c < static_cast<Eigen::Index>(names.size())
                                     ? names[static_cast<std::size_t>(c)]
                                     : "ch" + std::to_string(c);
        out << ',' << name << "_actual," << name << "_forecast";
    }
    out << '\n' << std::setprecision(12);
    for (Eigen::Index h = 0; h < test_windows.H(); ++h) {
        out << h;
        for (Eigen::Index c = 0; c < test_windows.C(); ++c)
            out << ',' << actual(h, c) << ',' << forecast(h, c);
        out << '\n';
    }
    write_text(path, out.str());
}

ResultRow run_point(const ExperimentConfig& config, const PreparedData& prepared,
                    const RunPoint& point) {
    const Eigen::Index lookback = point.lookback;
    const auto train_windows = make_windows(prepared.train, lookback, config.horizon);
    const auto val_windows = prepared.val.length() >= lookback + config.horizon
                                 ? std::optional(make_windows(prepared.val, lookback,
                                                              config.horizon))
                                 : std::nullopt;
    const auto test_windows = make_windows(prepared.test, lookback, config.horizon);

    ResultRow row;
    row.dataset = prepared.name;
    row.model = config.closed_form ? (config.route == "yw" ? "linear-yw" : "linear-cf")
                                   : to_string(config.model);
    row.strategy = to_string(point.strategy);
    row.lookback = lookback;
    row.horizon = config.horizon;
    row.sweep = point.sweep;
    row.sweep_value = point.sweep_value;

    std::string artifact_dir;
    if (!config.out_dir.empty()) {
        std::string leaf = row.model + "_" + row.strategy;
        if (!point.sweep.empty()) leaf += "__" + point.sweep + "_" + format_value(point.sweep_value);
        artifact_dir = (std::filesystem::path(config.out_dir) / "runs" / leaf).string();
        std::filesystem::create_directories(artifact_dir);
    }

    if (config.closed_form) {
        if (point.strategy == Strategy::PRReg) {
            throw ConfigError("PRReg has no closed form here; use gradient training");
        }
        const auto design = stack(train_windows);
        SolveInfo info;
        LinearCoefficients coeffs;
        if (config.route == "yw") {
            const auto blocks = build_blocks(prepared.train, lookback, config.horizon);
            coeffs = point.strategy == Strategy::CD ? yule_walker_cd(blocks, {}, &info)
                                                    : yule_walker_ci(blocks, {}, &info);
        } else {
            coeffs = point.strategy == Strategy::CD ? ols_cd(design, {}, &info)
                                                    : ols_ci(design, {}, &info);
        }
        row.mse = evaluate(coeffs, test_windows, Metric::MSE);
        row.mae = evaluate(coeffs, test_windows, Metric::MAE);
        row.train_mse = design_mse(coeffs, design);
        row.val_mse = val_windows ? evaluate(coeffs, *val_windows, Metric::MSE)
                                  : std::numeric_limits<double>::quiet_NaN();
        if (!artifact_dir.empty()) {
            save_coefficients(coeffs, &prepared.stats,
                              (std::filesystem::path(artifact_dir) / "coefficients.txt").string());
            write_forecast_csv(
                (std::filesystem::path(artifact_dir) / "predictions.csv").string(),
                test_windows,
                [&](const Eigen::MatrixXd& window) { return predict(coeffs, window); },
                prepared.raw.channel_names);
        }
    } else {
        ModelSpec spec;
        spec.architecture = config.model;
        spec.strategy = point.strategy;
        spec.loss = config.loss;
        spec.hidden_units = config.hidden_units;
        spec.rank_reduction_rate = point.rank_rate;
        spec.lambda = point.strategy == Strategy::PRReg ? point.lambda : 0.0;
        spec.linear_bias = config.linear_bias;

        auto model = train(spec, train_windows, val_windows ? &*val_windows : nullptr,
                           config.train);
        model.normalization = prepared.stats;
        row.mse = evaluate(model, test_windows, Metric::MSE);
        row.mae = evaluate(model, test_windows, Metric::MAE);
        row.train_mse = evaluate(model, train_windows, Metric::MSE);
        row.val_mse = val_windows ? evaluate(model, *val_windows, Metric::MSE)
                                  : std::numeric_limits<double>::quiet_NaN();
        if (!artifact_dir.empty()) {
            save_checkpoint(model, (std::filesystem::path(artifact_dir) / "checkpoint.txt").string());
            save_history(model, (std::filesystem::path(artifact_dir) / "history.csv").string());
            write_forecast_csv(
                (std::filesystem::path(artifact_dir) / "predictions.csv").string(),
                test_windows,
                [&](const Eigen::MatrixXd& window) { return model.predict(window); },
                prepared.raw.channel_names);
        }
    }

    if (!artifact_dir.empty()) {
        nlohmann::json metrics;
        metrics["dataset"] = row.dataset;
        metrics["model"] = row.model;
        metrics["strategy"] = row.strategy;
        metrics["L"] = row.lookback;
        metrics["H"] = row.horizon;
        metrics["sweep"] = row.sweep;
        metrics["sweep_value"] = number_or_null(row.sweep_value);
        metrics["mse"] = number_or_null(row.mse);
        metrics["mae"] = number_or_null(row.mae);
        metrics["train_mse"] = number_or_null(row.train_mse);
        metrics["val_mse"] = number_or_null(row.val_mse);
        if (point.strategy == Strategy::PRReg) metrics["lambda"] = point.lambda;
        write_text(std::filesystem::path(artifact_dir) / "metrics.json", metrics.dump(2));
    }
    return row;
}

std::vector<RunPoint> plan_points(const ExperimentConfig& config) {
    std::vector<RunPoint> points;
    const auto base_point = [&](Strategy strategy) {
        RunPoint point;
        point.strategy = strategy;
        point.lookback = config.lookback;
        point.lambda = config.lambda;
        point.rank_rate = config.rank_rate;
        if (strategy == Strategy::PRReg) {
            point.sweep = "lambda";
            point.sweep_value = config.lambda;
        }
        return point;
    };

    switch (config.sweep) {
        case SweepAxis::None: {
            for (const Strategy strategy : config.strategies) points.push_back(base_point(strategy));
            break;
        }
        case SweepAxis::Lambda: {
            if (config.grid.empty()) throw ConfigError("lambda sweep needs a grid");
            // non-PRReg strategies once as references, PRReg per grid point
            for (const Strategy strategy : config.strategies) {
                if (strategy != Strategy::PRReg) points.push_back(base_point(strategy));
            }
            for (const double lambda : config.grid) {
                RunPoint point = base_point(Strategy::PRReg);
                point.sweep = "lambda";
                point.sweep_value = lambda;
                point.lambda = lambda;
                points.push_back(point);
            }
            break;
        }
        case SweepAxis::Lookback: {
            if (config.grid.empty()) throw ConfigError("lookback sweep needs a grid");
            for (const double value : config.grid) {
                for (const Strategy strategy : config.strategies) {
                    RunPoint point = base_point(strategy);
                    point.sweep = "lookback";
                    point.sweep_value = value;
                    point.lookback = static_cast<Eigen::Index>(value);
                    points.push_back(point);
                }
            }
            break;
        }
        case SweepAxis::Rank: {
            if (config.grid.empty()) throw ConfigError("rank sweep needs a grid");
            if (config.model != Architecture::LowRankLinear) {
                throw ConfigError("rank sweep requires model=lowrank");
            }
            for (const double value : config.grid) {
                for (const Strategy strategy : config.strategies) {
                    RunPoint point = base_point(strategy);
                    point.sweep = "rank";
                    point.sweep_value = value;
                    point.rank_rate = static_cast<int>(value);
                    points.push_back(point);
                }
            }
            break;
        }
    }
    return points;
}

}  // namespace

ResultTable run(const ExperimentConfig& config) {
    if (config.strategies.empty()) throw ConfigError("at least one strategy is required");
    if (config.lookback < 1 || config.horizon < 1) throw ConfigError("lookback/horizon must be >= 1");

    // a lookback sweep replaces the configured window; plan for its largest
    ExperimentConfig guard_cfg = config;
    if (config.sweep == SweepAxis::Lookback && !config.grid.empty()) {
        guard_cfg.lookback = static_cast<Eigen::Index>(
            *std::max_element(config.grid.begin(), config.grid.end()));
    }

    const PreparedData prepared = prepare_data(guard_cfg);

    const Eigen::Index n_train =
        prepared.train.length() - guard_cfg.lookback - guard_cfg.horizon + 1;
    const std::size_t projected =
        projected_bytes(guard_cfg, n_train, prepared.raw.channels());
    const std::size_t limit =
        static_cast<std::size_t>(config.max_memory_gb * 1024.0 * 1024.0 * 1024.0);
    if (projected > limit) {
        throw ConfigError("infeasible configuration: projected " +
                          std::to_string(projected / (1024 * 1024)) + " MiB exceeds the " +
                          std::to_string(limit / (1024 * 1024)) +
                          " MiB budget (dense CD on wide datasets; see the feasibility note "
                          "in the README)");
    }

    const bool with_artifacts = !config.out_dir.empty();
    if (with_artifacts) std::filesystem::create_directories(config.out_dir);

    if (config.with_drift_report) {
        const auto report = drift_report(prepared.train, prepared.test, config.max_lag);
        if (with_artifacts) {
            const std::filesystem::path out(config.out_dir);
            write_text(out / "drift_report.json", to_json(report));
            std::stringstream bars;
            bars << "rank,channel,name,diff,sum_diff\n" << std::setprecision(12);
            for (std::size_t rank = 0; rank < report.channels.size(); ++rank) {
                const auto& entry = report.channels[rank];
                bars << rank << ',' << entry.channel << ',' << entry.name << ',' << entry.diff
                     << ',' << report.sum_diff << '\n';
            }
            write_text(out / "acf_diff_bars.csv", bars.str());
            export_acf_csv(prepared.train, prepared.test, report.max_lag,
                           (out / "acf_curves.csv").string());
        }
    }

    if (config.with_risk_report) {
        const auto train_design = stack(make_windows(prepared.train, config.lookback, config.horizon));
        const auto test_design = stack(make_windows(prepared.test, config.lookback, config.horizon));
        const auto cd = risk_decompose(train_design, test_design, Strategy::CD);
        const auto ci = risk_decompose(train_design, test_design, Strategy::CI);
        if (with_artifacts) {
            const std::filesystem::path out(config.out_dir);
            write_text(out / "risk_cd.json",
                       to_json(cd, prepared.name, config.lookback, config.horizon));
            write_text(out / "risk_ci.json",
                       to_json(ci, prepared.name, config.lookback, config.horizon));
            std::stringstream bars;
            bars << "strategy,train_error,test_error,w_diff,gen_error\n" << std::setprecision(12);
            bars << "cd," << cd.train_error << ',' << cd.test_error << ',' << cd.w_diff << ','
                 << cd.gen_error << '\n';
            bars << "ci," << ci.train_error << ',' << ci.test_error << ',' << ci.w_diff << ','
                 << ci.gen_error << '\n';
            write_text(out / "risk_bars.csv", bars.str());
        }
    }

    const std::vector<RunPoint> points = plan_points(config);
    std::vector<ResultRow> rows(points.size());
    std::vector<std::exception_ptr> failures(points.size());

    const int workers = std::max(1, std::min<int>(config.workers,
                                                  static_cast<int>(points.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < points.size(); ++i) rows[i] = run_point(config, prepared, points[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < points.size();
                     i = next.fetch_add(1)) {
                    try {
                        rows[i] = run_point(config, prepared, points[i]);
                    } catch (...) {
                        failures[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& thread : pool) thread.join();
        for (const auto& failure : failures) {
            if (failure) std::rethrow_exception(failure);
        }
    }

    ResultTable table;
    table.rows = std::move(rows);

    if (with_artifacts) {
        const std::filesystem::path out(config.out_dir);
        write_text(out / "results.csv", table.to_csv());
        write_text(out / "results.json", table.to_json());
        if (config.sweep != SweepAxis::None) {
            std::stringstream curve;
            curve << "strategy,sweep,sweep_value,mse,mae\n" << std::setprecision(12);
            for (const auto& row : table.rows) {
                if (row.sweep.empty()) continue;
                curve << row.strategy << ',' << row.sweep << ','
                      << format_value(row.sweep_value) << ',' << row.mse << ',' << row.mae
                      << '\n';
            }
            write_text(out / "sweep_curve.csv", curve.str());
        }
    }
    return table;
}

}  // namespace tsf
