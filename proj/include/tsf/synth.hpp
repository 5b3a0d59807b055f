#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "tsf/rng.hpp"
#include "tsf/series.hpp"

namespace tsf {

/// One stationary AR(p) channel: x_t = phi_1 x_{t-1} + ... + phi_p x_{t-p} + eps_t.
struct ArSpec {
    std::vector<double> coefficients;  // phi_1..phi_p
    double noise_std = 1.0;
    Eigen::Index length = 0;
    std::uint64_t seed = 0;
};

struct DriftSpec {
    enum class Kind { CoefficientShift, TrendBreak, Anomaly };
    Kind kind = Kind::CoefficientShift;
    Eigen::Index at = 0;                   // t0
    std::vector<double> new_coefficients;  // CoefficientShift
    double slope = 0.0;                    // TrendBreak: adds slope*(t - t0) for t >= t0
    double magnitude = 0.0;                // Anomaly: adds magnitude on [t0, t0+width)
    Eigen::Index width = 0;
    std::vector<Eigen::Index> target_channels;  // empty = all channels
};

/// Largest eigenvalue magnitude of the AR companion matrix; < 1 iff stationary.
double spectral_radius(const std::vector<double>& coefficients);

/// Seeded AR(p) generation; a burn-in of 10*p samples is discarded.
/// Throws NumericError for non-stationary coefficients.
Eigen::VectorXd gen_ar(const ArSpec& spec);

/// Multi-channel generation with per-channel derived seeds (seed, channel).
/// Channels are independent unless shared_noise_mix in (0,1] blends a common
/// noise stream into every channel. Drift is applied to a copy, after
/// generation.
MultivariateSeries gen_multichannel(const std::vector<ArSpec>& specs,
                                    const std::optional<DriftSpec>& drift = std::nullopt,
                                    double shared_noise_mix = 0.0);

MultivariateSeries apply_drift(const MultivariateSeries& series, const DriftSpec& drift);

}  // namespace tsf
