// tsbench: command-line harness for the CD / CI / PRReg forecasting
// experiments. Subcommands: ingest-check, acf-diff, solve, train, risk,
// sweep, report. Exit codes: 0 success, 2 config error, 3 data error,
// 4 numerical failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsf/experiment.hpp"

namespace {

struct CliState {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;  // key, value in flag order
};

// Every flag maps onto a config key; flags always win over the config file.
void add_common_options(CLI::App* cmd, CliState& state) {
    cmd->add_option("--config", state.config_path, "flat key = value config file");
    const auto bind = [cmd, &state](const std::string& flag, const std::string& key,
                                    const std::string& help) {
        cmd->add_option_function<std::string>(
            flag, [&state, key](const std::string& value) { state.overrides.emplace_back(key, value); },
            help);
    };
    const auto bind_flag = [cmd, &state](const std::string& flag, const std::string& key,
                                         const std::string& help) {
        cmd->add_flag_function(
            flag,
            [&state, key](std::int64_t count) {
                if (count > 0) state.overrides.emplace_back(key, "true");
            },
            help);
    };

    bind("--dataset", "dataset", "CSV dataset path");
    bind("--dataset-name", "dataset_name", "label used in reports");
    bind("--date-column", "date_column", "name of the date column (default: date)");
    bind_flag("--forward-fill", "forward_fill", "impute missing cells from the previous row");
    bind("--lookback", "lookback", "look-back window length L");
    bind("--horizon", "horizon", "forecast horizon H");
    bind("--strategy", "strategy", "comma list of cd,ci,prreg");
    bind("--model", "model", "linear | mlp | lowrank");
    bind("--loss", "loss", "l2 | l1");
    bind("--lambda", "lambda", "PRReg regularization strength");
    bind("--hidden-units", "hidden_units", "MLP hidden width");
    bind("--rank-rate", "rank_rate", "low-rank reduction rate");
    bind_flag("--linear-bias", "linear_bias", "add a bias to the linear model");
    bind_flag("--closed-form", "closed_form", "solve by least squares instead of training");
    bind("--route", "route", "closed-form route: ols | yw (Yule-Walker)");
    bind("--learning-rate", "learning_rate", "optimizer step size");
    bind("--epochs", "epochs", "training epochs");
    bind("--batch-size", "batch_size", "minibatch size");
    bind("--patience", "patience", "early-stop patience on validation loss");
    bind("--weight-decay", "weight_decay", "decoupled L2 decay for CD/CI training");
    bind_flag("--plain-sgd", "plain_sgd", "plain gradient descent instead of Adam");
    bind("--split", "split", "fractions | ett");
    bind("--fractions", "fractions", "train,val,test fractions (default 0.7,0.1,0.2)");
    bind("--rows-per-month", "rows_per_month", "rows per month for the ett split");
    bind("--sweep", "sweep", "lambda | lookback | rank");
    bind("--grid", "grid", "comma list of sweep values");
    bind("--max-lag", "max_lag", "ACF drift lag bound (default: min(len/4, 1000))");
    bind("--seed", "seed", "global seed");
    bind("--out", "out", "output directory for artifacts");
    bind("--workers", "workers", "sweep worker pool size");
    bind("--max-memory-gb", "max_memory_gb", "dense-memory budget before refusing");
    bind("--synth-channels", "synth_channels", "synthetic channel count");
    bind("--synth-length", "synth_length", "synthetic series length");
    bind("--synth-phi", "synth_phi", "AR coefficients, ';' per channel, ',' per lag");
    bind("--synth-noise-std", "synth_noise_std", "synthetic noise std");
    bind("--synth-drift", "synth_drift", "shift:t0:phi | trend:t0:slope | anomaly:t0:mag:width");
}

tsf::ExperimentConfig resolve_config(const CliState& state) {
    tsf::ExperimentConfig config;
    if (!state.config_path.empty()) tsf::apply_config_file(config, state.config_path);
    for (const auto& [key, value] : state.overrides) tsf::apply_config_line(config, key, value);
    return config;
}

void write_or_print(const std::string& out_dir, const std::string& filename,
                    const std::string& text) {
    if (out_dir.empty()) {
        std::cout << text << '\n';
    } else {
        std::filesystem::create_directories(out_dir);
        std::ofstream out(std::filesystem::path(out_dir) / filename);
        out << text;
        std::cout << (std::filesystem::path(out_dir) / filename).string() << '\n';
    }
}

int cmd_ingest_check(const CliState& state) {
    const auto config = resolve_config(state);
    if (config.dataset_path.empty()) throw tsf::ConfigError("ingest-check needs --dataset");
    tsf::CsvOptions opts;
    opts.date_column = config.date_column;
    opts.forward_fill = config.forward_fill;
    const auto series = tsf::load_csv(config.dataset_path, opts);
    nlohmann::json j;
    j["path"] = config.dataset_path;
    j["timesteps"] = series.length();
    j["channels"] = series.channels();
    j["channel_names"] = series.channel_names;
    j["has_timestamps"] = !series.timestamps.empty();
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_acf_diff(const CliState& state) {
    const auto config = resolve_config(state);
    const auto prepared = tsf::prepare_data(config);
    const auto report = tsf::drift_report(prepared.train, prepared.test, config.max_lag);
    write_or_print(config.out_dir, "drift_report.json", tsf::to_json(report));
    if (!config.out_dir.empty()) {
        tsf::export_acf_csv(prepared.train, prepared.test, report.max_lag,
                            (std::filesystem::path(config.out_dir) / "acf_curves.csv").string());
    }
    return 0;
}

int cmd_risk(const CliState& state) {
    const auto config = resolve_config(state);
    const auto prepared = tsf::prepare_data(config);
    const auto train_design =
        tsf::stack(tsf::make_windows(prepared.train, config.lookback, config.horizon));
    const auto test_design =
        tsf::stack(tsf::make_windows(prepared.test, config.lookback, config.horizon));
    nlohmann::json both = nlohmann::json::array();
    for (const tsf::Strategy strategy : {tsf::Strategy::CD, tsf::Strategy::CI}) {
        const auto report = tsf::risk_decompose(train_design, test_design, strategy);
        const auto text =
            tsf::to_json(report, prepared.name, config.lookback, config.horizon);
        both.push_back(nlohmann::json::parse(text));
        if (!config.out_dir.empty()) {
            write_or_print(config.out_dir,
                           std::string("risk_") + tsf::to_string(strategy) + ".json", text);
        }
    }
    if (config.out_dir.empty()) std::cout << both.dump(2) << '\n';
    return 0;
}

int cmd_run_table(const CliState& state, bool closed_form, bool needs_sweep) {
    auto config = resolve_config(state);
    config.closed_form = closed_form;
    if (needs_sweep && config.sweep == tsf::SweepAxis::None) {
        throw tsf::ConfigError("sweep needs --sweep lambda|lookback|rank and --grid");
    }
    if (!needs_sweep) config.sweep = tsf::SweepAxis::None;
    const auto table = tsf::run(config);
    std::cout << table.to_csv();
    return 0;
}

int cmd_report(const CliState& state, const std::string& results_path) {
    std::ifstream in(results_path);
    if (!in) throw tsf::DataError("cannot open results file: " + results_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const auto table = results_path.size() > 4 &&
                               results_path.substr(results_path.size() - 4) == ".csv"
                           ? tsf::ResultTable::from_csv(buffer.str())
                           : tsf::ResultTable::from_json(buffer.str());
    const auto summary = tsf::compare_strategies(table);
    const auto text = tsf::to_json(summary);
    const auto config = resolve_config(state);
    write_or_print(config.out_dir, "summary.json", text);
    if (!config.out_dir.empty()) std::cout << text << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"benchmark harness for channel-dependent vs channel-independent forecasting"};
    app.require_subcommand(1);

    CliState state;
    std::string results_path;

    auto* ingest = app.add_subcommand("ingest-check", "validate a CSV dataset and print stats");
    add_common_options(ingest, state);
    auto* acf = app.add_subcommand("acf-diff", "train/test ACF drift report");
    add_common_options(acf, state);
    auto* solve = app.add_subcommand("solve", "closed-form least-squares fit per strategy");
    add_common_options(solve, state);
    auto* train = app.add_subcommand("train", "gradient training per strategy");
    add_common_options(train, state);
    auto* risk = app.add_subcommand("risk", "train/test/gen error and W-diff decomposition");
    add_common_options(risk, state);
    auto* sweep = app.add_subcommand("sweep", "lambda / lookback / rank sweeps");
    add_common_options(sweep, state);
    auto* report = app.add_subcommand("report", "CD-vs-CI summary from a results.json");
    add_common_options(report, state);
    report->add_option("--results", results_path, "path to results.json")->required();

    try {
        app.parse(argc, argv);
        if (app.got_subcommand(ingest)) return cmd_ingest_check(state);
        if (app.got_subcommand(acf)) return cmd_acf_diff(state);
        if (app.got_subcommand(solve)) return cmd_run_table(state, true, false);
        if (app.got_subcommand(train)) return cmd_run_table(state, false, false);
        if (app.got_subcommand(risk)) return cmd_risk(state);
        if (app.got_subcommand(sweep)) return cmd_run_table(state, false, true);
        if (app.got_subcommand(report)) return cmd_report(state, results_path);
        return 2;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const tsf::ConfigError& e) {
        std::cerr << nlohmann::json{{"error", {{"type", "config"}, {"message", e.what()}}}}.dump()
                  << '\n';
        return 2;
    } catch (const tsf::DataError& e) {
        std::cerr << nlohmann::json{{"error", {{"type", "data"}, {"message", e.what()}}}}.dump()
                  << '\n';
        return 3;
    } catch (const tsf::NumericError& e) {
        std::cerr << nlohmann::json{{"error", {{"type", "numeric"}, {"message", e.what()}}}}.dump()
                  << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", {{"type", "internal"}, {"message", e.what()}}}}.dump()
                  << '\n';
        return 4;
    }
}
