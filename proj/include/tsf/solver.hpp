#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "tsf/acf.hpp"
#include "tsf/series.hpp"
#include "tsf/window.hpp"

namespace tsf {

enum class Strategy { CD, CI, PRReg };

const char* to_string(Strategy strategy);
Strategy strategy_from_string(const std::string& name);

/// Linear forecaster coefficients in design-matrix orientation: predictions
/// are row_vector(x) * W. CD: W is LC x HC; CI: W is L x H and shared by all
/// channels. Rows are ordered chronologically (oldest window entry first).
struct LinearCoefficients {
    Strategy strategy = Strategy::CI;
    Eigen::MatrixXd W;
    Eigen::VectorXd bias;  // empty when disabled
    Eigen::Index L = 0, H = 0, C = 0;
};

enum class RankPolicy { MinimumNorm, Error };

struct SolveConfig {
    double ridge = 0.0;  // Tikhonov term added to the Gram matrix
    RankPolicy rank_policy = RankPolicy::MinimumNorm;
    bool with_bias = false;
};

struct SolveInfo {
    double condition = 0.0;        // condition number of the design matrix
    double normal_residual = 0.0;  // ||A^T A W - A^T B||_F / ||A^T B||_F
    bool used_svd = false;
    bool rank_deficient = false;
};

/// Least squares min ||A W - B||_F^2: Cholesky on the normal equations with
/// diagonal jitter escalation, falling back to an SVD minimum-norm solve when
/// the residual check fails. Shared by both strategies.
Eigen::MatrixXd least_squares(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const SolveConfig& cfg = {}, SolveInfo* info = nullptr);

LinearCoefficients ols_cd(const DesignMatrices& design, const SolveConfig& cfg = {},
                          SolveInfo* info = nullptr);
LinearCoefficients ols_ci(const DesignMatrices& design, const SolveConfig& cfg = {},
                          SolveInfo* info = nullptr);

/// Solves the blockwise correlation system [R] W = [R'] and returns W in
/// chronological orientation, directly comparable with ols_cd output.
LinearCoefficients yule_walker_cd(const CorrelationBlocks& blocks, const SolveConfig& cfg = {},
                                  SolveInfo* info = nullptr);

/// Solves (sum_c R_cc) W = sum_c R'_cc. The solution depends on the channel
/// ACFs only through their sum.
LinearCoefficients yule_walker_ci(const CorrelationBlocks& blocks, const SolveConfig& cfg = {},
                                  SolveInfo* info = nullptr);

/// Forecast one window (L x C) -> (H x C).
Eigen::MatrixXd predict(const LinearCoefficients& coeffs, const Eigen::MatrixXd& window);

/// Mean squared residual of the coefficients on their design matrices.
double design_mse(const LinearCoefficients& coeffs, const DesignMatrices& design);

/// Portable text format: one JSON header line (shapes, strategy, optional
/// normalization stats), then the matrix body as CSV rows, then the bias row
/// if present.
void save_coefficients(const LinearCoefficients& coeffs, const NormalizationStats* stats,
                       const std::string& path);
LinearCoefficients load_coefficients(const std::string& path,
                                     std::optional<NormalizationStats>* stats = nullptr);

}  // namespace tsf
