#include <doctest.h>

#include <json.hpp>

#include "test_util.hpp"
#include "tsf/diagnostics.hpp"
#include "tsf/solver.hpp"
#include "tsf/synth.hpp"

using namespace tsf;

namespace {

DesignMatrices design_from(Eigen::Index t_len, Eigen::Index channels, Eigen::Index lookback,
                           Eigen::Index horizon, std::uint64_t seed) {
    const auto series = tsf::testing::random_series(t_len, channels, seed);
    return stack(make_windows(series, lookback, horizon));
}

DesignMatrices scalar_design(double a0, double a1, double b0, double b1) {
    DesignMatrices d;
    d.L = 1;
    d.H = 1;
    d.C = 1;
    d.N = 2;
    d.A_cd.resize(2, 1);
    d.A_cd << a0, a1;
    d.B_cd.resize(2, 1);
    d.B_cd << b0, b1;
    d.A_ci = d.A_cd;
    d.B_ci = d.B_cd;
    return d;
}

}  // namespace

TEST_CASE("identical train and test collapse the decomposition") {
    const auto design = design_from(150, 2, 3, 2, 301);
    const auto report = risk_decompose(design, design, Strategy::CD);
    CHECK(report.w_diff <= 1e-16 * report.test_error + 1e-18);
    CHECK(report.gen_error == doctest::Approx(report.test_error).epsilon(1e-10));
}

TEST_CASE("scalar instance matches hand arithmetic") {
    // W_tr = 2 from (A=[1,1]^T, B=[2,2]^T); W_te = 1; Diff_W = ||A (2-1)||^2 = 2
    const auto train = scalar_design(1.0, 1.0, 2.0, 2.0);
    const auto test = scalar_design(1.0, 1.0, 1.0, 1.0);
    const auto report = risk_decompose(train, test, Strategy::CD);
    CHECK(report.w_diff == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(report.train_error == doctest::Approx(0.0));
    CHECK(report.test_error == doctest::Approx(0.0));
    CHECK(report.gen_error == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("pythagorean identity holds at exact minimizers") {
    for (const std::uint64_t seed : {307ull, 311ull, 313ull}) {
        const auto train = design_from(220, 2, 4, 2, seed);
        const auto test = design_from(180, 2, 4, 2, seed + 1);

        // orthogonality oracle first: the optimal test residual is orthogonal
        // to the column space of the test design
        const auto w_test = ols_cd(test);
        const Eigen::MatrixXd residual = test.B_cd - test.A_cd * w_test.W;
        const double ortho = (test.A_cd.transpose() * residual).cwiseAbs().maxCoeff();
        CHECK(ortho <= 1e-8 * test.B_cd.norm());

        for (const Strategy strategy : {Strategy::CD, Strategy::CI}) {
            const auto report = risk_decompose(train, test, strategy);
            CHECK(report.cond_test < 1e10);
            CHECK(report.pythagorean_residual <= 1e-8);
            CHECK(report.w_diff ==
                  doctest::Approx(report.gen_error - report.test_error).epsilon(1e-8));
        }
    }
}

TEST_CASE("mahalanobis form agrees with the frobenius form") {
    const auto train = design_from(160, 2, 3, 2, 331);
    const auto test = design_from(140, 2, 3, 2, 337);
    for (const Strategy strategy : {Strategy::CD, Strategy::CI}) {
        const auto report = risk_decompose(train, test, strategy);
        CHECK(report.w_diff_mahalanobis ==
              doctest::Approx(report.w_diff).epsilon(1e-8));
    }
}

TEST_CASE("capacity ordering between CD and CI") {
    for (const std::uint64_t seed : {347ull, 349ull}) {
        const auto train = design_from(260, 3, 4, 2, seed);
        const auto test = design_from(200, 3, 4, 2, seed + 10);
        const auto cd = risk_decompose(train, test, Strategy::CD);
        const auto ci = risk_decompose(train, test, Strategy::CI);
        CHECK(cd.train_error <= ci.train_error + 1e-9);
        CHECK(cd.test_error <= ci.test_error + 1e-9);
    }
}

TEST_CASE("risk report serializes with the documented keys") {
    const auto train = design_from(120, 2, 3, 1, 353);
    const auto test = design_from(100, 2, 3, 1, 359);
    const auto report = risk_decompose(train, test, Strategy::CI);
    const auto j = nlohmann::json::parse(to_json(report, "synthetic", 3, 1));
    for (const char* key : {"dataset", "L", "H", "strategy", "train_error", "test_error",
                            "gen_error", "w_diff", "pythagorean_residual", "cond_train",
                            "cond_test"}) {
        CHECK(j.contains(key));
    }
    CHECK(j["strategy"] == "ci");
}

TEST_CASE("evaluate on perfect and constant-offset predictions") {
    // segment is constant -0.5: zero coefficients predict 0, so every error
    // is exactly 0.5
    MultivariateSeries series;
    series.values = Eigen::MatrixXd::Constant(20, 2, -0.5);
    series.channel_names = {"a", "b"};
    const auto data = make_windows(series, 3, 2);

    LinearCoefficients zero;
    zero.strategy = Strategy::CI;
    zero.L = 3;
    zero.H = 2;
    zero.C = 2;
    zero.W = Eigen::MatrixXd::Zero(3, 2);
    CHECK(evaluate(zero, data, Metric::MAE) == doctest::Approx(0.5));
    CHECK(evaluate(zero, data, Metric::MSE) == doctest::Approx(0.25));

    // coefficients that reproduce the constant exactly: last row 1
    LinearCoefficients copy_last = zero;
    copy_last.W(2, 0) = 1.0;
    copy_last.W(2, 1) = 1.0;
    CHECK(evaluate(copy_last, data, Metric::MSE) == doctest::Approx(0.0));
    CHECK(evaluate(copy_last, data, Metric::MAE) == doctest::Approx(0.0));
}

TEST_CASE("persistence baseline closed forms") {
    MultivariateSeries constant;
    constant.values = Eigen::MatrixXd::Constant(30, 2, 4.0);
    constant.channel_names = {"a", "b"};
    const auto const_metrics = persistence_baseline(make_windows(constant, 4, 3));
    CHECK(const_metrics.mse == doctest::Approx(0.0));
    CHECK(const_metrics.mae == doctest::Approx(0.0));

    // slope s ramp: |error at step h| = s*h, MAE = s (H+1)/2
    const double s = 0.25;
    const Eigen::Index horizon = 4;
    MultivariateSeries ramp;
    ramp.values.resize(40, 1);
    for (Eigen::Index t = 0; t < 40; ++t) ramp.values(t, 0) = s * static_cast<double>(t);
    ramp.channel_names = {"x"};
    const auto ramp_metrics = persistence_baseline(make_windows(ramp, 3, horizon));
    CHECK(ramp_metrics.mae ==
          doctest::Approx(s * static_cast<double>(horizon + 1) / 2.0).epsilon(1e-12));
    const double expected_mse =
        s * s * static_cast<double>((horizon + 1) * (2 * horizon + 1)) / 6.0;
    CHECK(ramp_metrics.mse == doctest::Approx(expected_mse).epsilon(1e-12));
}

TEST_CASE("rank-deficient test designs are flagged") {
    // tiny test segment: N < LC for CD
    const auto train = design_from(100, 2, 6, 2, 367);
    const auto series = tsf::testing::random_series(13, 2, 373);
    const auto test = stack(make_windows(series, 6, 2));
    REQUIRE(test.N < test.A_cd.cols());
    const auto report = risk_decompose(train, test, Strategy::CD);
    CHECK(report.test_rank_deficient);
    // the identity still holds for any exact minimizer
    CHECK(report.pythagorean_residual <= 1e-8);
}
