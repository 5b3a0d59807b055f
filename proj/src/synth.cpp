#include "tsf/synth.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>

namespace tsf {

double spectral_radius(const std::vector<double>& coefficients) {
    const Eigen::Index p = static_cast<Eigen::Index>(coefficients.size());
    if (p == 0) return 0.0;
    if (p == 1) return std::abs(coefficients[0]);
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index j = 0; j < p; ++j) companion(0, j) = coefficients[static_cast<std::size_t>(j)];
    companion.block(1, 0, p - 1, p - 1).setIdentity();
    Eigen::EigenSolver<Eigen::MatrixXd> eigs(companion, /*computeEigenvectors=*/false);
    return eigs.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

void check_spec(const ArSpec& spec) {
    if (spec.length < 1) throw ConfigError("AR length must be >= 1");
    if (!(spec.noise_std > 0.0)) throw ConfigError("noise_std must be > 0");
    if (spectral_radius(spec.coefficients) >= 1.0) {
        throw NumericError("Unstable: AR companion spectral radius >= 1");
    }
}

// Advance an AR recursion by `steps`, drawing noise from rng. `state` holds the
// p most recent values, state[0] newest.
void run_ar(const std::vector<double>& phi, double noise_std, Eigen::Index steps, Rng& rng,
            std::vector<double>& state, double* out) {
    const std::size_t p = phi.size();
    for (Eigen::Index t = 0; t < steps; ++t) {
        double value = noise_std * rng.gaussian();
        for (std::size_t k = 0; k < p; ++k) value += phi[k] * state[k];
        if (p > 0) {
            std::rotate(state.rbegin(), state.rbegin() + 1, state.rend());
            state[0] = value;
        }
        if (out) out[t] = value;
    }
}

Eigen::VectorXd gen_ar_with_rng(const ArSpec& spec, Rng& rng) {
    check_spec(spec);
    const std::size_t p = spec.coefficients.size();
    std::vector<double> state(std::max<std::size_t>(p, 1), 0.0);

    const Eigen::Index burn_in = 10 * static_cast<Eigen::Index>(p);
    run_ar(spec.coefficients, spec.noise_std, burn_in, rng, state, nullptr);

    Eigen::VectorXd x(spec.length);
    run_ar(spec.coefficients, spec.noise_std, spec.length, rng, state, x.data());
    return x;
}

}  // namespace

Eigen::VectorXd gen_ar(const ArSpec& spec) {
    Rng rng(spec.seed);
    return gen_ar_with_rng(spec, rng);
}

MultivariateSeries gen_multichannel(const std::vector<ArSpec>& specs,
                                    const std::optional<DriftSpec>& drift,
                                    double shared_noise_mix) {
    if (specs.empty()) throw ConfigError("no channel specs");
    const Eigen::Index t_len = specs[0].length;
    for (const auto& spec : specs) {
        if (spec.length != t_len) throw ConfigError("channel lengths differ");
    }

    const bool shift = drift && drift->kind == DriftSpec::Kind::CoefficientShift;
    const Eigen::Index channels = static_cast<Eigen::Index>(specs.size());

    MultivariateSeries series;
    series.values.resize(t_len, channels);
    series.granularity = "synthetic";
    for (Eigen::Index c = 0; c < channels; ++c) {
        const ArSpec& spec = specs[static_cast<std::size_t>(c)];
        check_spec(spec);
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(c)));

        bool shift_this = false;
        if (shift) {
            shift_this = drift->target_channels.empty() ||
                         std::find(drift->target_channels.begin(), drift->target_channels.end(),
                                   c) != drift->target_channels.end();
        }
        if (!shift_this) {
            series.values.col(c) = gen_ar_with_rng(spec, rng);
        } else {
            if (drift->at < 0 || drift->at > t_len) throw ConfigError("drift t0 outside series");
            if (spectral_radius(drift->new_coefficients) >= 1.0) {
                throw NumericError("Unstable: shifted AR coefficients");
            }
            // Same noise stream throughout; the recursion switches
            // coefficients at t0 while keeping its state.
            const std::size_t p = spec.coefficients.size();
            const std::size_t p2 = drift->new_coefficients.size();
            std::vector<double> state(std::max({p, p2, std::size_t{1}}), 0.0);
            run_ar(spec.coefficients, spec.noise_std, 10 * static_cast<Eigen::Index>(p), rng,
                   state, nullptr);
            Eigen::VectorXd x(t_len);
            run_ar(spec.coefficients, spec.noise_std, drift->at, rng, state, x.data());
            run_ar(drift->new_coefficients, spec.noise_std, t_len - drift->at, rng, state,
                   x.data() + drift->at);
            series.values.col(c) = x;
        }
        series.channel_names.push_back("ch" + std::to_string(c));
    }

    if (shared_noise_mix > 0.0) {
        Rng shared(derive_seed(specs[0].seed, 0x5ea50full));
        const double own = std::sqrt(1.0 - shared_noise_mix * shared_noise_mix);
        for (Eigen::Index i = 0; i < t_len; ++i) {
            const double common = shared.gaussian();
            for (Eigen::Index c = 0; c < channels; ++c) {
                const double sigma = specs[static_cast<std::size_t>(c)].noise_std;
                series.values(i, c) =
                    own * series.values(i, c) + shared_noise_mix * sigma * common;
            }
        }
    }

    if (drift && !shift) return apply_drift(series, *drift);
    return series;
}

MultivariateSeries apply_drift(const MultivariateSeries& series, const DriftSpec& drift) {
    if (drift.kind == DriftSpec::Kind::CoefficientShift) {
        throw ConfigError("coefficient shift is applied during generation, not post hoc");
    }
    if (drift.at < 0 || drift.at >= series.length()) throw ConfigError("drift t0 outside series");

    MultivariateSeries out = series;
    std::vector<Eigen::Index> targets = drift.target_channels;
    if (targets.empty()) {
        for (Eigen::Index c = 0; c < series.channels(); ++c) targets.push_back(c);
    }
    for (const Eigen::Index c : targets) {
        if (c < 0 || c >= series.channels()) throw ConfigError("drift channel out of range");
        if (drift.kind == DriftSpec::Kind::TrendBreak) {
            for (Eigen::Index t = drift.at; t < series.length(); ++t)
                out.values(t, c) += drift.slope * static_cast<double>(t - drift.at);
        } else {  // Anomaly
            const Eigen::Index end = std::min(series.length(), drift.at + drift.width);
            for (Eigen::Index t = drift.at; t < end; ++t) out.values(t, c) += drift.magnitude;
        }
    }
    return out;
}

}  // namespace tsf
