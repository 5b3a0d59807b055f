#include <doctest.h>

#include "test_util.hpp"
#include "tsf/window.hpp"

using namespace tsf;

namespace {

MultivariateSeries ramp_series(Eigen::Index t_len) {
    MultivariateSeries series;
    series.values.resize(t_len, 1);
    for (Eigen::Index t = 0; t < t_len; ++t) series.values(t, 0) = static_cast<double>(t + 1);
    series.channel_names = {"x"};
    return series;
}

}  // namespace

TEST_CASE("window count and sample extraction") {
    const auto series = ramp_series(10);
    const auto data = make_windows(series, 3, 2);
    CHECK(data.N() == 6);
    CHECK(data.L() == 3);
    CHECK(data.H() == 2);

    const Eigen::MatrixXd x0 = data.sample_x(0);
    const Eigen::MatrixXd y0 = data.sample_y(0);
    CHECK(x0(0, 0) == 1.0);
    CHECK(x0(1, 0) == 2.0);
    CHECK(x0(2, 0) == 3.0);
    CHECK(y0(0, 0) == 4.0);
    CHECK(y0(1, 0) == 5.0);
}

TEST_CASE("windows reject series shorter than L+H") {
    const auto series = ramp_series(4);
    CHECK_THROWS_AS(make_windows(series, 3, 2), DataError);
    CHECK_NOTHROW(make_windows(series, 3, 1));
}

TEST_CASE("channel matrices satisfy A[i,l] == X_i[l,c]") {
    const auto series = tsf::testing::random_series(30, 3, 17);
    const auto data = make_windows(series, 4, 3);
    for (Eigen::Index c = 0; c < data.C(); ++c) {
        const Eigen::MatrixXd a = data.channel_A(c);
        const Eigen::MatrixXd b = data.channel_B(c);
        for (Eigen::Index i = 0; i < data.N(); ++i) {
            const Eigen::MatrixXd x = data.sample_x(i);
            const Eigen::MatrixXd y = data.sample_y(i);
            for (Eigen::Index l = 0; l < data.L(); ++l) CHECK(a(i, l) == x(l, c));
            for (Eigen::Index h = 0; h < data.H(); ++h) CHECK(b(i, h) == y(h, c));
        }
    }
}

TEST_CASE("stack shapes and block order") {
    const auto series = tsf::testing::random_series(20, 2, 5);
    const auto data = make_windows(series, 2, 1);
    const auto design = stack(data);
    CHECK(design.A_cd.rows() == data.N());
    CHECK(design.A_cd.cols() == data.L() * data.C());
    CHECK(design.B_cd.cols() == data.H() * data.C());
    CHECK(design.A_ci.rows() == data.N() * data.C());
    CHECK(design.A_ci.cols() == data.L());
    CHECK(design.B_ci.cols() == data.H());

    // block c of A_cd's columns equals block c of A_ci's rows
    for (Eigen::Index c = 0; c < data.C(); ++c) {
        const Eigen::MatrixXd from_cd = design.A_cd.middleCols(c * data.L(), data.L());
        const Eigen::MatrixXd from_ci = design.A_ci.middleRows(c * data.N(), data.N());
        CHECK((from_cd - from_ci).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("single channel stacking is degenerate") {
    const auto series = tsf::testing::random_series(15, 1, 9);
    const auto data = make_windows(series, 3, 2);
    const auto design = stack(data);
    CHECK((design.A_cd - design.A_ci).cwiseAbs().maxCoeff() == 0.0);
    CHECK((design.A_cd - data.channel_A(0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((design.B_cd - design.B_ci).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("two-channel single-sample layout") {
    MultivariateSeries series;
    series.values.resize(3, 2);
    // channel 0: 1,2,3; channel 1: 10,20,30
    series.values << 1, 10, 2, 20, 3, 30;
    series.channel_names = {"a", "b"};
    const auto data = make_windows(series, 2, 1);
    REQUIRE(data.N() == 1);
    const auto design = stack(data);
    CHECK(design.A_cd.rows() == 1);
    CHECK(design.A_cd.cols() == 4);
    CHECK(design.A_cd(0, 0) == 1.0);
    CHECK(design.A_cd(0, 1) == 2.0);
    CHECK(design.A_cd(0, 2) == 10.0);
    CHECK(design.A_cd(0, 3) == 20.0);
    CHECK(design.A_ci.rows() == 2);
    CHECK(design.A_ci(0, 0) == 1.0);
    CHECK(design.A_ci(0, 1) == 2.0);
    CHECK(design.A_ci(1, 0) == 10.0);
    CHECK(design.A_ci(1, 1) == 20.0);
}

TEST_CASE("unstack inverts stack elementwise") {
    const auto series = tsf::testing::random_series(40, 3, 23);
    const auto data = make_windows(series, 5, 2);
    const auto pairs = unstack(stack(data));
    REQUIRE(static_cast<Eigen::Index>(pairs.X.size()) == data.N());
    for (Eigen::Index i = 0; i < data.N(); ++i) {
        CHECK((pairs.X[static_cast<std::size_t>(i)] - data.sample_x(i)).cwiseAbs().maxCoeff() ==
              0.0);
        CHECK((pairs.Y[static_cast<std::size_t>(i)] - data.sample_y(i)).cwiseAbs().maxCoeff() ==
              0.0);
    }
}

TEST_CASE("every element appears in the closed-form number of windows") {
    const auto series = tsf::testing::random_series(25, 2, 31);
    const Eigen::Index lookback = 4, horizon = 3;
    const auto data = make_windows(series, lookback, horizon);
    const Eigen::Index window = lookback + horizon;

    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(series.length(), series.channels());
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(series.length(), series.channels());
    for (Eigen::Index i = 0; i < data.N(); ++i) {
        sums.middleRows(i, lookback) += data.sample_x(i);
        sums.middleRows(i + lookback, horizon) += data.sample_y(i);
        counts.middleRows(i, window).array() += 1.0;
    }
    for (Eigen::Index t = 0; t < series.length(); ++t) {
        const Eigen::Index expected =
            std::min(t, data.N() - 1) - std::max<Eigen::Index>(0, t - window + 1) + 1;
        CHECK(counts(t, 0) == static_cast<double>(expected));
        for (Eigen::Index c = 0; c < series.channels(); ++c) {
            // reconstruction: accumulated / count returns the original value
            CHECK(sums(t, c) / counts(t, c) == doctest::Approx(series.values(t, c)));
        }
    }
}

TEST_CASE("stride skips windows") {
    const auto series = ramp_series(11);
    const auto data = make_windows(series, 3, 2, 2);
    CHECK(data.N() == 4);  // usable starts 0,2,4,6
    CHECK(data.sample_x(1)(0, 0) == 3.0);
}
