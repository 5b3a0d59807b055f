#include "tsf/window.hpp"

namespace tsf {

WindowedDataset::WindowedDataset(Eigen::MatrixXd segment, Eigen::Index lookback,
                                 Eigen::Index horizon, Eigen::Index stride)
    : segment_(std::move(segment)), lookback_(lookback), horizon_(horizon), stride_(stride) {
    if (lookback_ < 1 || horizon_ < 1) throw ConfigError("window lengths must be >= 1");
    if (stride_ < 1) throw ConfigError("stride must be >= 1");
    const Eigen::Index usable = segment_.rows() - lookback_ - horizon_;
    if (usable < 0) {
        throw DataError("series too short for windows: T=" + std::to_string(segment_.rows()) +
                        " < L+H=" + std::to_string(lookback_ + horizon_));
    }
    count_ = usable / stride_ + 1;
}

void WindowedDataset::check_sample(Eigen::Index i) const {
    if (i < 0 || i >= count_) {
        throw DataError("sample index " + std::to_string(i) + " out of range [0," +
                        std::to_string(count_) + ")");
    }
}

Eigen::MatrixXd WindowedDataset::sample_x(Eigen::Index i) const {
    check_sample(i);
    return segment_.middleRows(i * stride_, lookback_);
}

Eigen::MatrixXd WindowedDataset::sample_y(Eigen::Index i) const {
    check_sample(i);
    return segment_.middleRows(i * stride_ + lookback_, horizon_);
}

Eigen::VectorXd WindowedDataset::sample_x_flat(Eigen::Index i) const {
    check_sample(i);
    Eigen::VectorXd flat(lookback_ * C());
    for (Eigen::Index c = 0; c < C(); ++c)
        flat.segment(c * lookback_, lookback_) = segment_.col(c).segment(i * stride_, lookback_);
    return flat;
}

Eigen::VectorXd WindowedDataset::sample_y_flat(Eigen::Index i) const {
    check_sample(i);
    Eigen::VectorXd flat(horizon_ * C());
    for (Eigen::Index c = 0; c < C(); ++c)
        flat.segment(c * horizon_, horizon_) =
            segment_.col(c).segment(i * stride_ + lookback_, horizon_);
    return flat;
}

Eigen::VectorXd WindowedDataset::channel_x(Eigen::Index i, Eigen::Index c) const {
    check_sample(i);
    return segment_.col(c).segment(i * stride_, lookback_);
}

Eigen::VectorXd WindowedDataset::channel_y(Eigen::Index i, Eigen::Index c) const {
    check_sample(i);
    return segment_.col(c).segment(i * stride_ + lookback_, horizon_);
}

Eigen::MatrixXd WindowedDataset::channel_A(Eigen::Index c) const {
    Eigen::MatrixXd a(count_, lookback_);
    for (Eigen::Index i = 0; i < count_; ++i)
        a.row(i) = segment_.col(c).segment(i * stride_, lookback_).transpose();
    return a;
}

Eigen::MatrixXd WindowedDataset::channel_B(Eigen::Index c) const {
    Eigen::MatrixXd b(count_, horizon_);
    for (Eigen::Index i = 0; i < count_; ++i)
        b.row(i) = segment_.col(c).segment(i * stride_ + lookback_, horizon_).transpose();
    return b;
}

WindowedDataset make_windows(const MultivariateSeries& series, Eigen::Index lookback,
                             Eigen::Index horizon, Eigen::Index stride) {
    return WindowedDataset(series.values, lookback, horizon, stride);
}

DesignMatrices stack(const WindowedDataset& dataset) {
    DesignMatrices design;
    design.L = dataset.L();
    design.H = dataset.H();
    design.C = dataset.C();
    design.N = dataset.N();
    design.A_cd.resize(design.N, design.L * design.C);
    design.B_cd.resize(design.N, design.H * design.C);
    design.A_ci.resize(design.N * design.C, design.L);
    design.B_ci.resize(design.N * design.C, design.H);
    for (Eigen::Index c = 0; c < design.C; ++c) {
        const Eigen::MatrixXd a = dataset.channel_A(c);
        const Eigen::MatrixXd b = dataset.channel_B(c);
        design.A_cd.middleCols(c * design.L, design.L) = a;
        design.B_cd.middleCols(c * design.H, design.H) = b;
        design.A_ci.middleRows(c * design.N, design.N) = a;
        design.B_ci.middleRows(c * design.N, design.N) = b;
    }
    return design;
}

SamplePairs unstack(const DesignMatrices& design) {
    SamplePairs pairs;
    pairs.X.reserve(static_cast<std::size_t>(design.N));
    pairs.Y.reserve(static_cast<std::size_t>(design.N));
    for (Eigen::Index i = 0; i < design.N; ++i) {
        Eigen::MatrixXd x(design.L, design.C);
        Eigen::MatrixXd y(design.H, design.C);
        for (Eigen::Index c = 0; c < design.C; ++c) {
            x.col(c) = design.A_cd.row(i).segment(c * design.L, design.L).transpose();
            y.col(c) = design.B_cd.row(i).segment(c * design.H, design.H).transpose();
        }
        pairs.X.push_back(std::move(x));
        pairs.Y.push_back(std::move(y));
    }
    return pairs;
}

std::size_t stacked_bytes(Eigen::Index n, Eigen::Index lookback, Eigen::Index horizon,
                          Eigen::Index channels) {
    const std::size_t cells = 2 * static_cast<std::size_t>(n) *
                              static_cast<std::size_t>(lookback + horizon) *
                              static_cast<std::size_t>(channels);
    return cells * sizeof(double);
}

}  // namespace tsf
