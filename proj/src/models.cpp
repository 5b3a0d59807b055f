#include "tsf/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace tsf {

const char* to_string(Architecture arch) {
    switch (arch) {
        case Architecture::Linear: return "linear";
        case Architecture::Mlp: return "mlp";
        case Architecture::LowRankLinear: return "lowrank";
    }
    return "?";
}

const char* to_string(LossKind kind) { return kind == LossKind::L2 ? "l2" : "l1"; }

Architecture architecture_from_string(const std::string& name) {
    if (name == "linear") return Architecture::Linear;
    if (name == "mlp") return Architecture::Mlp;
    if (name == "lowrank") return Architecture::LowRankLinear;
    throw ConfigError("unknown architecture '" + name + "'");
}

LossKind loss_from_string(const std::string& name) {
    if (name == "l2" || name == "L2") return LossKind::L2;
    if (name == "l1" || name == "L1") return LossKind::L1;
    throw ConfigError("unknown loss '" + name + "'");
}

TrainConfig TrainConfig::defaults_for(Architecture arch) {
    TrainConfig cfg;
    cfg.learning_rate = (arch == Architecture::Mlp) ? 1e-3 : 5e-3;
    return cfg;
}

LossResult loss(LossKind kind, const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
        throw DataError("loss shape mismatch");
    }
    const double count = static_cast<double>(pred.size());
    LossResult result;
    const Eigen::MatrixXd diff = pred - target;
    if (kind == LossKind::L2) {
        result.value = diff.squaredNorm() / count;
        result.grad = 2.0 * diff / count;
    } else {
        result.value = diff.cwiseAbs().sum() / count;
        result.grad = diff.unaryExpr([](double d) {
            return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        }) / count;
    }
    return result;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> low_rank_factorize(Eigen::Index m, Eigen::Index n,
                                                               int rate, Rng* rng) {
    if (rate < 1) throw ConfigError("rank reduction rate must be >= 1");
    const Eigen::Index r = std::min(m, n) / rate;
    if (r < 1) {
        throw ConfigError("rank reduction rate " + std::to_string(rate) +
                          " leaves rank 0 for a " + std::to_string(m) + "x" + std::to_string(n) +
                          " layer");
    }
    Eigen::MatrixXd m1 = Eigen::MatrixXd::Zero(m, r);
    Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(r, n);
    if (rng) {
        const double k1 = 1.0 / std::sqrt(static_cast<double>(r));
        const double k2 = 1.0 / std::sqrt(static_cast<double>(n));
        for (Eigen::Index j = 0; j < r; ++j)
            for (Eigen::Index i = 0; i < m; ++i) m1(i, j) = rng->uniform(-k1, k1);
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < r; ++i) m2(i, j) = rng->uniform(-k2, k2);
    }
    return {std::move(m1), std::move(m2)};
}

namespace {

void fill_uniform(Eigen::MatrixXd& m, double bound, Rng& rng) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
}

void fill_uniform(Eigen::VectorXd& v, double bound, Rng& rng) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(-bound, bound);
}

Params init_params(const ModelSpec& spec, Eigen::Index in, Eigen::Index out, Rng& rng) {
    Params params;
    switch (spec.architecture) {
        case Architecture::Linear: {
            Eigen::MatrixXd w(out, in);
            fill_uniform(w, 1.0 / std::sqrt(static_cast<double>(in)), rng);
            params.weights.push_back(std::move(w));
            if (spec.linear_bias) {
                Eigen::VectorXd b(out);
                fill_uniform(b, 1.0 / std::sqrt(static_cast<double>(in)), rng);
                params.biases.push_back(std::move(b));
            }
            break;
        }
        case Architecture::Mlp: {
            if (spec.hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
            const Eigen::Index hidden = spec.hidden_units;
            Eigen::MatrixXd w1(hidden, in);
            Eigen::VectorXd b1(hidden);
            Eigen::MatrixXd w2(out, hidden);
            Eigen::VectorXd b2(out);
            const double k1 = 1.0 / std::sqrt(static_cast<double>(in));
            const double k2 = 1.0 / std::sqrt(static_cast<double>(hidden));
            fill_uniform(w1, k1, rng);
            fill_uniform(b1, k1, rng);
            fill_uniform(w2, k2, rng);
            fill_uniform(b2, k2, rng);
            params.weights.push_back(std::move(w1));
            params.weights.push_back(std::move(w2));
            params.biases.push_back(std::move(b1));
            params.biases.push_back(std::move(b2));
            break;
        }
        case Architecture::LowRankLinear: {
            auto [m1, m2] = low_rank_factorize(out, in, spec.rank_reduction_rate, &rng);
            params.weights.push_back(std::move(m1));
            params.weights.push_back(std::move(m2));
            break;
        }
    }
    return params;
}

struct ForwardCache {
    Eigen::MatrixXd pre;   // Mlp: W1 X + b1; LowRank: M2 X
    Eigen::MatrixXd act;   // Mlp: relu(pre)
};

// X is in x batch; returns out x batch.
Eigen::MatrixXd forward(const ModelSpec& spec, const Params& params, const Eigen::MatrixXd& x,
                        ForwardCache* cache) {
    switch (spec.architecture) {
        case Architecture::Linear: {
            Eigen::MatrixXd y = params.weights[0] * x;
            if (!params.biases.empty()) y.colwise() += params.biases[0];
            return y;
        }
        case Architecture::Mlp: {
            Eigen::MatrixXd pre = params.weights[0] * x;
            pre.colwise() += params.biases[0];
            Eigen::MatrixXd act = pre.cwiseMax(0.0);
            Eigen::MatrixXd y = params.weights[1] * act;
            y.colwise() += params.biases[1];
            if (cache) {
                cache->pre = std::move(pre);
                cache->act = std::move(act);
            }
            return y;
        }
        case Architecture::LowRankLinear: {
            Eigen::MatrixXd pre = params.weights[1] * x;
            Eigen::MatrixXd y = params.weights[0] * pre;
            if (cache) cache->pre = std::move(pre);
            return y;
        }
    }
    throw ConfigError("unreachable architecture");
}

Params backward(const ModelSpec& spec, const Params& params, const Eigen::MatrixXd& x,
                const ForwardCache& cache, const Eigen::MatrixXd& grad_out) {
    Params grads;
    switch (spec.architecture) {
        case Architecture::Linear: {
            grads.weights.push_back(grad_out * x.transpose());
            if (!params.biases.empty()) grads.biases.push_back(grad_out.rowwise().sum());
            break;
        }
        case Architecture::Mlp: {
            const Eigen::MatrixXd grad_w2 = grad_out * cache.act.transpose();
            const Eigen::VectorXd grad_b2 = grad_out.rowwise().sum();
            Eigen::MatrixXd grad_pre = params.weights[1].transpose() * grad_out;
            grad_pre = (cache.pre.array() > 0.0).select(grad_pre, 0.0);
            grads.weights.push_back(grad_pre * x.transpose());
            grads.weights.push_back(grad_w2);
            grads.biases.push_back(grad_pre.rowwise().sum());
            grads.biases.push_back(grad_b2);
            break;
        }
        case Architecture::LowRankLinear: {
            grads.weights.push_back(grad_out * cache.pre.transpose());
            grads.weights.push_back(params.weights[0].transpose() * grad_out * x.transpose());
            break;
        }
    }
    return grads;
}

struct AdamState {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    long step = 0;

    explicit AdamState(const Params& params) {
        for (const auto& w : params.weights) {
            mw.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
            vw.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        }
        for (const auto& b : params.biases) {
            mb.push_back(Eigen::VectorXd::Zero(b.size()));
            vb.push_back(Eigen::VectorXd::Zero(b.size()));
        }
    }
};

// Adam with decoupled weight decay. The decay is applied in proximal form
// w /= (1 + lr*decay), which matches the usual w -= lr*decay*w to first order
// and stays contractive for arbitrarily large decay.
void optimizer_step(Params& params, const Params& grads, AdamState& state,
                    const TrainConfig& cfg, double decay) {
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    ++state.step;
    const double correction1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
    const double correction2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
    const double shrink = 1.0 / (1.0 + cfg.learning_rate * decay);

    for (std::size_t i = 0; i < params.weights.size(); ++i) {
        auto& w = params.weights[i];
        const auto& g = grads.weights[i];
        if (cfg.plain_sgd) {
            w -= cfg.learning_rate * g;
        } else {
            state.mw[i] = kBeta1 * state.mw[i] + (1.0 - kBeta1) * g;
            state.vw[i] = kBeta2 * state.vw[i] + (1.0 - kBeta2) * g.cwiseProduct(g);
            w.array() -= cfg.learning_rate * (state.mw[i].array() / correction1) /
                         ((state.vw[i].array() / correction2).sqrt() + kEps);
        }
        if (decay > 0.0) w *= shrink;
    }
    for (std::size_t i = 0; i < params.biases.size(); ++i) {
        auto& b = params.biases[i];
        const auto& g = grads.biases[i];
        if (cfg.plain_sgd) {
            b -= cfg.learning_rate * g;
        } else {
            state.mb[i] = kBeta1 * state.mb[i] + (1.0 - kBeta1) * g;
            state.vb[i] = kBeta2 * state.vb[i] + (1.0 - kBeta2) * g.cwiseProduct(g);
            b.array() -= cfg.learning_rate * (state.mb[i].array() / correction1) /
                         ((state.vb[i].array() / correction2).sqrt() + kEps);
        }
    }
}

enum class SampleMode { CD, CI, PRReg };

struct SampleSpace {
    const WindowedDataset* data;
    SampleMode mode;

    Eigen::Index size() const {
        return mode == SampleMode::CI ? data->N() * data->C() : data->N();
    }

    void gather(const std::vector<Eigen::Index>& ids, Eigen::Index begin, Eigen::Index count,
                Eigen::MatrixXd& x, Eigen::MatrixXd& y) const {
        const Eigen::Index lookback = data->L();
        const Eigen::Index horizon = data->H();
        const Eigen::Index channels = data->C();
        for (Eigen::Index k = 0; k < count; ++k) {
            const Eigen::Index id = ids[static_cast<std::size_t>(begin + k)];
            switch (mode) {
                case SampleMode::CD:
                    x.col(k) = data->sample_x_flat(id);
                    y.col(k) = data->sample_y_flat(id);
                    break;
                case SampleMode::CI: {
                    const Eigen::Index i = id / channels;
                    const Eigen::Index c = id % channels;
                    x.col(k) = data->channel_x(i, c);
                    y.col(k) = data->channel_y(i, c);
                    break;
                }
                case SampleMode::PRReg: {
                    const Eigen::MatrixXd wx = data->sample_x(id);
                    const Eigen::MatrixXd wy = data->sample_y(id);
                    const Eigen::RowVectorXd last = wx.row(lookback - 1);
                    for (Eigen::Index c = 0; c < channels; ++c) {
                        x.col(k).segment(c * lookback, lookback) =
                            wx.col(c).array() - last(c);
                        y.col(k).segment(c * horizon, horizon) = wy.col(c).array() - last(c);
                    }
                    break;
                }
            }
        }
    }
};

double full_pass_loss(const ModelSpec& spec, const Params& params, const SampleSpace& space) {
    const Eigen::Index total = space.size();
    if (total == 0) return std::numeric_limits<double>::quiet_NaN();
    std::vector<Eigen::Index> ids(static_cast<std::size_t>(total));
    std::iota(ids.begin(), ids.end(), 0);
    const Eigen::Index in = spec.strategy == Strategy::CI ? space.data->L()
                                                          : space.data->L() * space.data->C();
    const Eigen::Index out = spec.strategy == Strategy::CI ? space.data->H()
                                                           : space.data->H() * space.data->C();
    const Eigen::Index chunk = 256;
    double accum = 0.0;
    double count = 0.0;
    for (Eigen::Index begin = 0; begin < total; begin += chunk) {
        const Eigen::Index n = std::min(chunk, total - begin);
        Eigen::MatrixXd x(in, n), y(out, n);
        space.gather(ids, begin, n, x, y);
        const Eigen::MatrixXd pred = forward(spec, params, x, nullptr);
        const LossResult batch = loss(spec.loss, pred, y);
        accum += batch.value * static_cast<double>(pred.size());
        count += static_cast<double>(pred.size());
    }
    return accum / count;
}

TrainedModel train_impl(const ModelSpec& spec, const WindowedDataset& train_data,
                        const WindowedDataset* val_data, const TrainConfig& cfg,
                        SampleMode mode) {
    if (train_data.N() < 1) throw DataError("empty training dataset");
    if (cfg.learning_rate <= 0.0) throw ConfigError("learning rate must be > 0");
    if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (spec.lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (spec.architecture == Architecture::LowRankLinear) {
        const int rate = spec.rank_reduction_rate;
        if (rate < 1 || rate > 512 || (rate & (rate - 1)) != 0) {
            throw ConfigError("rank reduction rate must be a power of two in [1, 512]");
        }
    }

    const Eigen::Index in = mode == SampleMode::CI ? train_data.L()
                                                   : train_data.L() * train_data.C();
    const Eigen::Index out = mode == SampleMode::CI ? train_data.H()
                                                    : train_data.H() * train_data.C();

    Rng rng(cfg.seed);
    TrainedModel model;
    model.spec = spec;
    model.config = cfg;
    model.L = train_data.L();
    model.H = train_data.H();
    model.C = train_data.C();
    model.params = init_params(spec, in, out, rng);

    AdamState state(model.params);
    const double decay = mode == SampleMode::PRReg ? spec.lambda : cfg.weight_decay;

    const SampleSpace train_space{&train_data, mode};
    SampleSpace val_space{val_data, mode};
    const bool have_val = val_data != nullptr && val_data->N() > 0;

    std::vector<Eigen::Index> ids(static_cast<std::size_t>(train_space.size()));
    std::iota(ids.begin(), ids.end(), 0);

    Params best_params;
    double best_val = std::numeric_limits<double>::infinity();
    int stale_epochs = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(ids);
        double accum = 0.0;
        double seen = 0.0;
        for (Eigen::Index begin = 0; begin < train_space.size(); begin += cfg.batch_size) {
            const Eigen::Index n = std::min<Eigen::Index>(cfg.batch_size,
                                                          train_space.size() - begin);
            Eigen::MatrixXd x(in, n), y(out, n);
            train_space.gather(ids, begin, n, x, y);
            ForwardCache cache;
            const Eigen::MatrixXd pred = forward(spec, model.params, x, &cache);
            const LossResult batch = loss(spec.loss, pred, y);
            if (!std::isfinite(batch.value)) {
                throw NumericError("divergence: non-finite loss at epoch " +
                                   std::to_string(epoch));
            }
            const Params grads = backward(spec, model.params, x, cache, batch.grad);
            optimizer_step(model.params, grads, state, cfg, decay);
            accum += batch.value * static_cast<double>(n);
            seen += static_cast<double>(n);
        }

        EpochStats stats;
        stats.train_loss = accum / seen;
        if (have_val) stats.val_loss = full_pass_loss(spec, model.params, val_space);
        model.history.push_back(stats);

        if (have_val && cfg.early_stop_patience > 0) {
            if (stats.val_loss < best_val) {
                best_val = stats.val_loss;
                best_params = model.params;
                stale_epochs = 0;
            } else if (++stale_epochs >= cfg.early_stop_patience) {
                break;
            }
        }
    }
    if (have_val && cfg.early_stop_patience > 0 && !best_params.weights.empty()) {
        model.params = std::move(best_params);
    }
    return model;
}

}  // namespace

TrainedModel train_cd(const ModelSpec& spec, const WindowedDataset& train_data,
                      const WindowedDataset* val_data, const TrainConfig& cfg) {
    if (spec.strategy != Strategy::CD) throw ConfigError("train_cd requires strategy CD");
    return train_impl(spec, train_data, val_data, cfg, SampleMode::CD);
}

TrainedModel train_ci(const ModelSpec& spec, const WindowedDataset& train_data,
                      const WindowedDataset* val_data, const TrainConfig& cfg) {
    if (spec.strategy != Strategy::CI) throw ConfigError("train_ci requires strategy CI");
    return train_impl(spec, train_data, val_data, cfg, SampleMode::CI);
}

TrainedModel train_prreg(const ModelSpec& spec, const WindowedDataset& train_data,
                         const WindowedDataset* val_data, const TrainConfig& cfg) {
    if (spec.strategy != Strategy::PRReg) throw ConfigError("train_prreg requires strategy PRReg");
    return train_impl(spec, train_data, val_data, cfg, SampleMode::PRReg);
}

TrainedModel train(const ModelSpec& spec, const WindowedDataset& train_data,
                   const WindowedDataset* val_data, const TrainConfig& cfg) {
    switch (spec.strategy) {
        case Strategy::CD: return train_cd(spec, train_data, val_data, cfg);
        case Strategy::CI: return train_ci(spec, train_data, val_data, cfg);
        case Strategy::PRReg: return train_prreg(spec, train_data, val_data, cfg);
    }
    throw ConfigError("unreachable strategy");
}

Eigen::MatrixXd TrainedModel::predict(const Eigen::MatrixXd& window) const {
    if (window.rows() != L) throw DataError("window length mismatch");
    const Eigen::Index channels = window.cols();
    Eigen::MatrixXd forecast(H, channels);
    if (spec.strategy == Strategy::CI) {
        const Eigen::MatrixXd out = forward(spec, params, window, nullptr);
        forecast = out;
    } else {
        if (channels != C) throw DataError("channel count mismatch");
        Eigen::VectorXd flat(L * channels);
        Eigen::RowVectorXd last = Eigen::RowVectorXd::Zero(channels);
        if (spec.strategy == Strategy::PRReg) last = window.row(L - 1);
        for (Eigen::Index c = 0; c < channels; ++c)
            flat.segment(c * L, L) = window.col(c).array() - last(c);
        const Eigen::VectorXd out = forward(spec, params, flat, nullptr);
        for (Eigen::Index c = 0; c < channels; ++c)
            forecast.col(c) = out.segment(c * H, H).array() + last(c);
    }
    return forecast;
}

Params initial_params(const ModelSpec& spec, Eigen::Index in, Eigen::Index out,
                      std::uint64_t seed) {
    Rng rng(seed);
    return init_params(spec, in, out, rng);
}

Eigen::VectorXd mlp_forward(const MlpParams& params, const Eigen::VectorXd& x) {
    return params.W2 * (params.W1 * x + params.b1).cwiseMax(0.0) + params.b2;
}

MlpParams mlp_backward(const MlpParams& params, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& grad_out) {
    const Eigen::VectorXd pre = params.W1 * x + params.b1;
    const Eigen::VectorXd act = pre.cwiseMax(0.0);
    MlpParams grads;
    grads.W2 = grad_out * act.transpose();
    grads.b2 = grad_out;
    Eigen::VectorXd grad_pre = params.W2.transpose() * grad_out;
    grad_pre = (pre.array() > 0.0).select(grad_pre, 0.0);
    grads.W1 = grad_pre * x.transpose();
    grads.b1 = grad_pre;
    return grads;
}

namespace {

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << m(i, j);
        }
        out << '\n';
    }
}

Eigen::MatrixXd read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols,
                            const std::string& path) {
    Eigen::MatrixXd m(rows, cols);
    std::string line, cell;
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw DataError("truncated checkpoint: " + path);
        std::stringstream ss(line);
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (!std::getline(ss, cell, ',')) throw DataError("short row in " + path);
            m(i, j) = std::stod(cell);
        }
    }
    return m;
}

}  // namespace

void save_checkpoint(const TrainedModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    nlohmann::json header;
    header["format"] = "tsf-checkpoint";
    header["spec"] = {{"architecture", to_string(model.spec.architecture)},
                      {"strategy", to_string(model.spec.strategy)},
                      {"loss", to_string(model.spec.loss)},
                      {"hidden_units", model.spec.hidden_units},
                      {"rank_reduction_rate", model.spec.rank_reduction_rate},
                      {"lambda", model.spec.lambda},
                      {"linear_bias", model.spec.linear_bias}};
    header["config"] = {{"learning_rate", model.config.learning_rate},
                        {"epochs", model.config.epochs},
                        {"batch_size", model.config.batch_size},
                        {"seed", model.config.seed},
                        {"weight_decay", model.config.weight_decay},
                        {"early_stop_patience", model.config.early_stop_patience},
                        {"plain_sgd", model.config.plain_sgd}};
    header["L"] = model.L;
    header["H"] = model.H;
    header["C"] = model.C;
    if (model.normalization) {
        header["normalization"] = {
            {"mean", std::vector<double>(model.normalization->mean.data(),
                                         model.normalization->mean.data() +
                                             model.normalization->mean.size())},
            {"std", std::vector<double>(model.normalization->std.data(),
                                        model.normalization->std.data() +
                                            model.normalization->std.size())}};
    }
    auto shape_list = nlohmann::json::array();
    for (const auto& w : model.params.weights) shape_list.push_back({w.rows(), w.cols()});
    header["weights"] = shape_list;
    auto bias_list = nlohmann::json::array();
    for (const auto& b : model.params.biases) bias_list.push_back(b.size());
    header["biases"] = bias_list;

    out << header.dump() << '\n' << std::setprecision(17);
    for (const auto& w : model.params.weights) write_matrix(out, w);
    for (const auto& b : model.params.biases) write_matrix(out, b.transpose());
}

TrainedModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty checkpoint: " + path);
    const nlohmann::json header = nlohmann::json::parse(line);
    if (header.value("format", "") != "tsf-checkpoint") {
        throw DataError("not a checkpoint file: " + path);
    }

    TrainedModel model;
    const auto& spec = header.at("spec");
    model.spec.architecture = architecture_from_string(spec.at("architecture").get<std::string>());
    model.spec.strategy = strategy_from_string(spec.at("strategy").get<std::string>());
    model.spec.loss = loss_from_string(spec.at("loss").get<std::string>());
    model.spec.hidden_units = spec.at("hidden_units").get<int>();
    model.spec.rank_reduction_rate = spec.at("rank_reduction_rate").get<int>();
    model.spec.lambda = spec.at("lambda").get<double>();
    model.spec.linear_bias = spec.at("linear_bias").get<bool>();
    const auto& cfg = header.at("config");
    model.config.learning_rate = cfg.at("learning_rate").get<double>();
    model.config.epochs = cfg.at("epochs").get<int>();
    model.config.batch_size = cfg.at("batch_size").get<int>();
    model.config.seed = cfg.at("seed").get<std::uint64_t>();
    model.config.weight_decay = cfg.at("weight_decay").get<double>();
    model.config.early_stop_patience = cfg.at("early_stop_patience").get<int>();
    model.config.plain_sgd = cfg.at("plain_sgd").get<bool>();
    model.L = header.at("L").get<Eigen::Index>();
    model.H = header.at("H").get<Eigen::Index>();
    model.C = header.at("C").get<Eigen::Index>();
    if (header.contains("normalization") && !header["normalization"].is_null()) {
        NormalizationStats ns;
        const auto mean = header["normalization"]["mean"].get<std::vector<double>>();
        const auto sd = header["normalization"]["std"].get<std::vector<double>>();
        ns.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(),
                                                    static_cast<Eigen::Index>(mean.size()));
        ns.std =
            Eigen::Map<const Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
        model.normalization = std::move(ns);
    }
    for (const auto& shape : header.at("weights")) {
        model.params.weights.push_back(
            read_matrix(in, shape[0].get<Eigen::Index>(), shape[1].get<Eigen::Index>(), path));
    }
    for (const auto& size : header.at("biases")) {
        model.params.biases.push_back(
            read_matrix(in, 1, size.get<Eigen::Index>(), path).transpose());
    }
    return model;
}

void save_history(const TrainedModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "epoch,train_loss,val_loss\n" << std::setprecision(12);
    for (std::size_t e = 0; e < model.history.size(); ++e) {
        out << e << ',' << model.history[e].train_loss << ',' << model.history[e].val_loss
            << '\n';
    }
}

}  // namespace tsf
