#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "tsf/rng.hpp"
#include "tsf/series.hpp"
#include "tsf/solver.hpp"
#include "tsf/window.hpp"

namespace tsf {

enum class Architecture { Linear, Mlp, LowRankLinear };
enum class LossKind { L2, L1 };

const char* to_string(Architecture arch);
const char* to_string(LossKind kind);
Architecture architecture_from_string(const std::string& name);
LossKind loss_from_string(const std::string& name);

struct ModelSpec {
    Architecture architecture = Architecture::Linear;
    Strategy strategy = Strategy::CI;
    LossKind loss = LossKind::L2;
    int hidden_units = 256;        // Mlp
    int rank_reduction_rate = 1;   // LowRankLinear
    double lambda = 0.0;           // PRReg weight-decay strength
    bool linear_bias = false;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 100;
    int batch_size = 32;
    std::uint64_t seed = 0;
    double weight_decay = 0.0;  // L2 regularization, decoupled from the gradient
    int early_stop_patience = 10;  // on val loss; <= 0 disables
    bool plain_sgd = false;        // plain gradient descent instead of Adam

    // lr 5e-3 for the linear architectures, 1e-3 otherwise.
    static TrainConfig defaults_for(Architecture arch);
};

/// Trainable parameters. Matrices receive weight decay; bias vectors do not.
struct Params {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = std::numeric_limits<double>::quiet_NaN();
};

struct TrainedModel {
    ModelSpec spec;
    TrainConfig config;
    Params params;
    std::vector<EpochStats> history;
    Eigen::Index L = 0, H = 0, C = 0;
    std::optional<NormalizationStats> normalization;

    /// Forecast one window (L x C) -> (H x C). PRReg models subtract the
    /// window's last values before the network and add them back after.
    Eigen::MatrixXd predict(const Eigen::MatrixXd& window) const;
};

TrainedModel train_cd(const ModelSpec& spec, const WindowedDataset& train,
                      const WindowedDataset* val, const TrainConfig& cfg);
TrainedModel train_ci(const ModelSpec& spec, const WindowedDataset& train,
                      const WindowedDataset* val, const TrainConfig& cfg);
TrainedModel train_prreg(const ModelSpec& spec, const WindowedDataset& train,
                         const WindowedDataset* val, const TrainConfig& cfg);

/// Dispatch on spec.strategy.
TrainedModel train(const ModelSpec& spec, const WindowedDataset& train, const WindowedDataset* val,
                   const TrainConfig& cfg);

// --- building blocks, exposed for direct use and testing ---

struct MlpParams {
    Eigen::MatrixXd W1;  // hidden x in
    Eigen::VectorXd b1;
    Eigen::MatrixXd W2;  // out x hidden
    Eigen::VectorXd b2;
};

/// W2 * relu(W1 x + b1) + b2
Eigen::VectorXd mlp_forward(const MlpParams& params, const Eigen::VectorXd& x);
MlpParams mlp_backward(const MlpParams& params, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& grad_out);

/// Factor an m x n layer as M1 (m x r) times M2 (r x n), r = floor(min(m,n)/rate).
/// With an rng the factors get the standard uniform fan-in init, else zeros.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> low_rank_factorize(Eigen::Index m, Eigen::Index n,
                                                               int rate, Rng* rng = nullptr);

struct LossResult {
    double value = 0.0;
    Eigen::MatrixXd grad;  // d value / d pred
};

/// L2 = mean squared error, L1 = mean absolute error (subgradient 0 at ties).
LossResult loss(LossKind kind, const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

/// Seeded initial parameters for the given architecture and dimensions,
/// identical to what training starts from with the same seed.
Params initial_params(const ModelSpec& spec, Eigen::Index in, Eigen::Index out,
                      std::uint64_t seed);

/// Checkpoints: one JSON header line, then named CSV parameter blocks.
void save_checkpoint(const TrainedModel& model, const std::string& path);
TrainedModel load_checkpoint(const std::string& path);
/// Per-epoch loss curve: epoch,train_loss,val_loss.
void save_history(const TrainedModel& model, const std::string& path);

}  // namespace tsf
