#include "tsf/solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace tsf {

const char* to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::CD: return "cd";
        case Strategy::CI: return "ci";
        case Strategy::PRReg: return "prreg";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "cd" || name == "CD") return Strategy::CD;
    if (name == "ci" || name == "CI") return Strategy::CI;
    if (name == "prreg" || name == "PRReg") return Strategy::PRReg;
    throw ConfigError("unknown strategy '" + name + "'");
}

namespace {

constexpr double kResidualTolerance = 1e-8;
// Gram systems with eigenvalue spread beyond this go to the SVD path, where
// the rank decision is made on the design matrix itself.
constexpr double kGramSpreadLimit = 1e-12;

double relative_residual(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& w,
                         const Eigen::MatrixXd& rhs) {
    const double scale = rhs.norm();
    if (scale == 0.0) return (gram * w).norm();
    return (gram * w - rhs).norm() / scale;
}

// Symmetric system solve used by both the normal equations and the
// Yule-Walker systems: Cholesky with escalating diagonal jitter, validated
// against the unjittered system.
bool cholesky_with_jitter(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& rhs,
                          Eigen::MatrixXd& w, double* residual_out) {
    const double scale = gram.diagonal().mean();
    const double jitters[] = {0.0, 1e-10, 1e-8, 1e-6};
    for (const double jitter : jitters) {
        Eigen::MatrixXd system = gram;
        if (jitter > 0.0) system.diagonal().array() += jitter * scale;
        Eigen::LLT<Eigen::MatrixXd> llt(system);
        if (llt.info() != Eigen::Success) continue;
        w = llt.solve(rhs);
        const double residual = relative_residual(gram, w, rhs);
        if (residual <= kResidualTolerance) {
            if (residual_out) *residual_out = residual;
            return true;
        }
    }
    return false;
}

}  // namespace

Eigen::MatrixXd least_squares(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const SolveConfig& cfg, SolveInfo* info) {
    if (a.rows() != b.rows()) throw DataError("least_squares row mismatch");
    if (a.rows() < 1) throw DataError("least_squares needs at least one row");
    if (!a.allFinite() || !b.allFinite()) throw NumericError("non-finite input to least_squares");

    Eigen::MatrixXd gram = a.transpose() * a;
    if (cfg.ridge > 0.0) gram.diagonal().array() += cfg.ridge;
    const Eigen::MatrixXd rhs = a.transpose() * b;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(gram, Eigen::EigenvaluesOnly);
    const double largest = eigs.eigenvalues().maxCoeff();
    const double smallest = eigs.eigenvalues().minCoeff();

    SolveInfo local;
    local.condition = (smallest > 0.0 && largest > 0.0)
                          ? std::sqrt(largest / smallest)
                          : std::numeric_limits<double>::infinity();

    Eigen::MatrixXd w;
    if (smallest > kGramSpreadLimit * largest &&
        cholesky_with_jitter(gram, rhs, w, &local.normal_residual)) {
        if (info) *info = local;
        return w;
    }

    // Minimum-norm solution through the SVD of A itself; the Gram route has
    // already lost half the significant digits when we get here.
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    local.used_svd = true;
    local.rank_deficient = svd.rank() < a.cols();
    if (local.rank_deficient && cfg.rank_policy == RankPolicy::Error) {
        throw NumericError("singular system: rank " + std::to_string(svd.rank()) + " < " +
                           std::to_string(a.cols()));
    }
    w = svd.solve(b);
    if (cfg.ridge > 0.0) {
        // Ridge is not expressible through the plain pseudo-inverse; refine on
        // the Gram system instead.
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
        if (ldlt.info() == Eigen::Success) w = ldlt.solve(rhs);
    }
    local.normal_residual = relative_residual(gram, w, rhs);
    if (info) *info = local;
    return w;
}

namespace {

LinearCoefficients solve_design(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                Strategy strategy, const DesignMatrices& design,
                                const SolveConfig& cfg, SolveInfo* info) {
    LinearCoefficients coeffs;
    coeffs.strategy = strategy;
    coeffs.L = design.L;
    coeffs.H = design.H;
    coeffs.C = design.C;
    if (cfg.with_bias) {
        Eigen::MatrixXd augmented(a.rows(), a.cols() + 1);
        augmented << a, Eigen::VectorXd::Ones(a.rows());
        const Eigen::MatrixXd w = least_squares(augmented, b, cfg, info);
        coeffs.W = w.topRows(a.cols());
        coeffs.bias = w.bottomRows(1).transpose();
    } else {
        coeffs.W = least_squares(a, b, cfg, info);
    }
    return coeffs;
}

}  // namespace

LinearCoefficients ols_cd(const DesignMatrices& design, const SolveConfig& cfg, SolveInfo* info) {
    return solve_design(design.A_cd, design.B_cd, Strategy::CD, design, cfg, info);
}

LinearCoefficients ols_ci(const DesignMatrices& design, const SolveConfig& cfg, SolveInfo* info) {
    return solve_design(design.A_ci, design.B_ci, Strategy::CI, design, cfg, info);
}

namespace {

// Solve the symmetric correlation system; minimum-norm fallback through the
// eigendecomposition when Cholesky cannot certify the solution.
Eigen::MatrixXd solve_symmetric(const Eigen::MatrixXd& system, const Eigen::MatrixXd& rhs,
                                const SolveConfig& cfg, SolveInfo* info) {
    SolveInfo local;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(system);
    const double largest = eigs.eigenvalues().cwiseAbs().maxCoeff();
    const double smallest = eigs.eigenvalues().minCoeff();
    local.condition = (smallest > 0.0 && largest > 0.0)
                          ? largest / smallest
                          : std::numeric_limits<double>::infinity();

    Eigen::MatrixXd system_r = system;
    if (cfg.ridge > 0.0) system_r.diagonal().array() += cfg.ridge;

    Eigen::MatrixXd w;
    if (smallest > kGramSpreadLimit * largest &&
        cholesky_with_jitter(system_r, rhs, w, &local.normal_residual)) {
        if (info) *info = local;
        return w;
    }

    local.used_svd = true;
    const double threshold =
        largest * static_cast<double>(system.rows()) * std::numeric_limits<double>::epsilon();
    Eigen::VectorXd inverted = eigs.eigenvalues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < inverted.size(); ++i) {
        if (std::abs(inverted(i)) > threshold) {
            inverted(i) = 1.0 / inverted(i);
            ++rank;
        } else {
            inverted(i) = 0.0;
        }
    }
    local.rank_deficient = rank < system.rows();
    if (local.rank_deficient && cfg.rank_policy == RankPolicy::Error) {
        throw NumericError("singular correlation system: condition " +
                           std::to_string(local.condition));
    }
    w = eigs.eigenvectors() * inverted.asDiagonal() * eigs.eigenvectors().transpose() * rhs;
    local.normal_residual = relative_residual(system_r, w, rhs);
    if (info) *info = local;
    return w;
}

}  // namespace

LinearCoefficients yule_walker_cd(const CorrelationBlocks& blocks, const SolveConfig& cfg,
                                  SolveInfo* info) {
    if (cfg.with_bias) throw ConfigError("Yule-Walker route assumes centered data (no bias)");
    const Eigen::Index lookback = blocks.L;
    const Eigen::Index horizon = blocks.H;
    const Eigen::Index channels = blocks.C;

    Eigen::MatrixXd system(lookback * channels, lookback * channels);
    Eigen::MatrixXd rhs(lookback * channels, horizon * channels);
    for (Eigen::Index c1 = 0; c1 < channels; ++c1) {
        for (Eigen::Index c2 = 0; c2 < channels; ++c2) {
            system.block(c1 * lookback, c2 * lookback, lookback, lookback) = blocks.R[c1][c2];
            rhs.block(c1 * lookback, c2 * horizon, lookback, horizon) = blocks.Rprime[c1][c2];
        }
    }

    const Eigen::MatrixXd reversed = solve_symmetric(system, rhs, cfg, info);

    LinearCoefficients coeffs;
    coeffs.strategy = Strategy::CD;
    coeffs.L = lookback;
    coeffs.H = horizon;
    coeffs.C = channels;
    coeffs.W.resize(lookback * channels, horizon * channels);
    for (Eigen::Index c = 0; c < channels; ++c) {
        coeffs.W.middleRows(c * lookback, lookback) =
            reversed.middleRows(c * lookback, lookback).colwise().reverse();
    }
    return coeffs;
}

LinearCoefficients yule_walker_ci(const CorrelationBlocks& blocks, const SolveConfig& cfg,
                                  SolveInfo* info) {
    if (cfg.with_bias) throw ConfigError("Yule-Walker route assumes centered data (no bias)");
    Eigen::MatrixXd system = Eigen::MatrixXd::Zero(blocks.L, blocks.L);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(blocks.L, blocks.H);
    for (Eigen::Index c = 0; c < blocks.C; ++c) {
        system += blocks.R[c][c];
        rhs += blocks.Rprime[c][c];
    }
    const Eigen::MatrixXd reversed = solve_symmetric(system, rhs, cfg, info);

    LinearCoefficients coeffs;
    coeffs.strategy = Strategy::CI;
    coeffs.L = blocks.L;
    coeffs.H = blocks.H;
    coeffs.C = blocks.C;
    coeffs.W = reversed.colwise().reverse();
    return coeffs;
}

Eigen::MatrixXd predict(const LinearCoefficients& coeffs, const Eigen::MatrixXd& window) {
    if (window.rows() != coeffs.L) throw DataError("window length mismatch");
    const Eigen::Index channels = window.cols();
    Eigen::MatrixXd forecast(coeffs.H, channels);
    if (coeffs.strategy == Strategy::CD) {
        if (channels != coeffs.C) throw DataError("channel count mismatch");
        Eigen::VectorXd flat(coeffs.L * channels);
        for (Eigen::Index c = 0; c < channels; ++c)
            flat.segment(c * coeffs.L, coeffs.L) = window.col(c);
        Eigen::VectorXd out = coeffs.W.transpose() * flat;
        if (coeffs.bias.size() > 0) out += coeffs.bias;
        for (Eigen::Index c = 0; c < channels; ++c)
            forecast.col(c) = out.segment(c * coeffs.H, coeffs.H);
    } else if (coeffs.strategy == Strategy::CI) {
        for (Eigen::Index c = 0; c < channels; ++c) {
            Eigen::VectorXd out = coeffs.W.transpose() * window.col(c);
            if (coeffs.bias.size() > 0) out += coeffs.bias;
            forecast.col(c) = out;
        }
    } else {
        throw ConfigError("predict: PRReg coefficients belong to the trained-model pipeline");
    }
    return forecast;
}

double design_mse(const LinearCoefficients& coeffs, const DesignMatrices& design) {
    const Eigen::MatrixXd& a = coeffs.strategy == Strategy::CI ? design.A_ci : design.A_cd;
    const Eigen::MatrixXd& b = coeffs.strategy == Strategy::CI ? design.B_ci : design.B_cd;
    Eigen::MatrixXd residual = a * coeffs.W - b;
    if (coeffs.bias.size() > 0) residual.rowwise() += coeffs.bias.transpose();
    return residual.squaredNorm() / static_cast<double>(residual.size());
}

void save_coefficients(const LinearCoefficients& coeffs, const NormalizationStats* stats,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    nlohmann::json header;
    header["format"] = "tsf-coefficients";
    header["strategy"] = to_string(coeffs.strategy);
    header["L"] = coeffs.L;
    header["H"] = coeffs.H;
    header["C"] = coeffs.C;
    header["rows"] = coeffs.W.rows();
    header["cols"] = coeffs.W.cols();
    header["has_bias"] = coeffs.bias.size() > 0;
    if (stats) {
        header["normalization"] = {
            {"mean", std::vector<double>(stats->mean.data(), stats->mean.data() + stats->mean.size())},
            {"std", std::vector<double>(stats->std.data(), stats->std.data() + stats->std.size())}};
    }
    out << header.dump() << '\n' << std::setprecision(17);
    for (Eigen::Index i = 0; i < coeffs.W.rows(); ++i) {
        for (Eigen::Index j = 0; j < coeffs.W.cols(); ++j) {
            if (j) out << ',';
            out << coeffs.W(i, j);
        }
        out << '\n';
    }
    if (coeffs.bias.size() > 0) {
        for (Eigen::Index j = 0; j < coeffs.bias.size(); ++j) {
            if (j) out << ',';
            out << coeffs.bias(j);
        }
        out << '\n';
    }
}

LinearCoefficients load_coefficients(const std::string& path,
                                     std::optional<NormalizationStats>* stats) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty coefficients file: " + path);
    const nlohmann::json header = nlohmann::json::parse(line);
    if (header.value("format", "") != "tsf-coefficients") {
        throw DataError("not a coefficients file: " + path);
    }

    LinearCoefficients coeffs;
    coeffs.strategy = strategy_from_string(header.at("strategy").get<std::string>());
    coeffs.L = header.at("L").get<Eigen::Index>();
    coeffs.H = header.at("H").get<Eigen::Index>();
    coeffs.C = header.at("C").get<Eigen::Index>();
    const Eigen::Index rows = header.at("rows").get<Eigen::Index>();
    const Eigen::Index cols = header.at("cols").get<Eigen::Index>();
    coeffs.W.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw DataError("truncated coefficients file: " + path);
        std::stringstream ss(line);
        std::string cell;
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (!std::getline(ss, cell, ',')) throw DataError("short row in " + path);
            coeffs.W(i, j) = std::stod(cell);
        }
    }
    if (header.value("has_bias", false)) {
        if (!std::getline(in, line)) throw DataError("missing bias row in " + path);
        std::stringstream ss(line);
        std::string cell;
        coeffs.bias.resize(cols);
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (!std::getline(ss, cell, ',')) throw DataError("short bias row in " + path);
            coeffs.bias(j) = std::stod(cell);
        }
    }
    if (stats) {
        stats->reset();
        if (header.contains("normalization") && !header["normalization"].is_null()) {
            NormalizationStats ns;
            const auto mean = header["normalization"]["mean"].get<std::vector<double>>();
            const auto sd = header["normalization"]["std"].get<std::vector<double>>();
            ns.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
            ns.std = Eigen::Map<const Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
            *stats = std::move(ns);
        }
    }
    return coeffs;
}

}  // namespace tsf
