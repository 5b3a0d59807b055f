#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tsf/series.hpp"

namespace tsf {

/// Sliding windows over one contiguous segment. Sample i pairs a look-back
/// block X (L x C, segment rows [i, i+L)) with a horizon block Y (H x C,
/// rows [i+L, i+L+H)). Windows are views into the stored segment; the
/// per-channel matrices A^(c) (N x L) and B^(c) (N x H) with
/// A^(c)[i,l] = X^(i)[l,c] and B^(c)[i,h] = Y^(i)[h,c] are materialized on
/// demand so wide datasets never hold N copies of every window.
class WindowedDataset {
public:
    WindowedDataset() = default;
    WindowedDataset(Eigen::MatrixXd segment, Eigen::Index lookback, Eigen::Index horizon,
                    Eigen::Index stride = 1);

    Eigen::Index N() const { return count_; }
    Eigen::Index L() const { return lookback_; }
    Eigen::Index H() const { return horizon_; }
    Eigen::Index C() const { return segment_.cols(); }
    Eigen::Index stride() const { return stride_; }
    const Eigen::MatrixXd& segment() const { return segment_; }

    Eigen::MatrixXd sample_x(Eigen::Index i) const;  // L x C
    Eigen::MatrixXd sample_y(Eigen::Index i) const;  // H x C

    // Channel-blockwise flattening: entry c*L + l is X[l, c] (same for Y).
    Eigen::VectorXd sample_x_flat(Eigen::Index i) const;  // LC
    Eigen::VectorXd sample_y_flat(Eigen::Index i) const;  // HC

    Eigen::VectorXd channel_x(Eigen::Index i, Eigen::Index c) const;  // L
    Eigen::VectorXd channel_y(Eigen::Index i, Eigen::Index c) const;  // H

    Eigen::MatrixXd channel_A(Eigen::Index c) const;  // N x L
    Eigen::MatrixXd channel_B(Eigen::Index c) const;  // N x H

private:
    void check_sample(Eigen::Index i) const;

    Eigen::MatrixXd segment_;
    Eigen::Index lookback_ = 0;
    Eigen::Index horizon_ = 0;
    Eigen::Index stride_ = 1;
    Eigen::Index count_ = 0;
};

WindowedDataset make_windows(const MultivariateSeries& series, Eigen::Index lookback,
                             Eigen::Index horizon, Eigen::Index stride = 1);

/// Fully stacked design matrices for the closed-form solvers.
///   A_cd = [A^(1) | ... | A^(C)]  (N x LC),   B_cd likewise (N x HC)
///   A_ci = [A^(1); ...; A^(C)]    (NC x L),   B_ci likewise (NC x H)
struct DesignMatrices {
    Eigen::MatrixXd A_cd, B_cd;
    Eigen::MatrixXd A_ci, B_ci;
    Eigen::Index L = 0, H = 0, C = 0, N = 0;
};

DesignMatrices stack(const WindowedDataset& dataset);

/// Rebuilds the N sample pairs (X: L x C, Y: H x C) from stacked matrices;
/// the inverse of stack on the sample representation.
struct SamplePairs {
    std::vector<Eigen::MatrixXd> X;
    std::vector<Eigen::MatrixXd> Y;
};

SamplePairs unstack(const DesignMatrices& design);

/// Bytes needed to materialize the stacked design matrices.
std::size_t stacked_bytes(Eigen::Index n, Eigen::Index lookback, Eigen::Index horizon,
                          Eigen::Index channels);

}  // namespace tsf
