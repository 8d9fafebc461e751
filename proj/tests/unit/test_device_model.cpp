#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "camsim/device_model.hpp"
#include "camsim/errors.hpp"

using namespace camsim;
using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;

namespace {

RramParams unit_params() {
    RramParams p;
    p.state = {StateLabel::Custom, 1e5};
    p.a_p = p.a_n = 1.0;
    p.b_p = p.b_n = 5.0;
    return p;
}

}  // namespace

TEST_CASE("iv_current at the origin and the read-out point") {
    CHECK(iv_current(RramParams::calibrated(ResistiveState::lrs()), 0.0) == 0.0);
    CHECK(iv_current(RramParams::calibrated(ResistiveState::hrs()), 0.0) == 0.0);
    const auto lrs = RramParams::calibrated(ResistiveState::lrs());
    CHECK_THAT(iv_current(lrs, 0.2), WithinRel(0.2 / 112e3, 1e-9));
}

TEST_CASE("iv_current direct evaluation") {
    const double expected = (1.0 / 1e5) * (1.0 - std::exp(-2.0));
    CHECK_THAT(iv_current(unit_params(), 0.4), WithinRel(expected, 1e-12));
    CHECK_THAT(expected, WithinRel(8.6466e-6, 1e-4));
}

TEST_CASE("negative branch is exponential") {
    const auto p = unit_params();
    CHECK_THAT(iv_current(p, -0.4), WithinRel((1.0 / 1e5) * (1.0 - std::exp(2.0)), 1e-12));
}

TEST_CASE("small_signal_conductance") {
    const auto p = unit_params();
    CHECK_THAT(small_signal_conductance(p, 0.0), WithinRel(5e-5, 1e-12));
    CHECK_THAT(small_signal_conductance(p, 0.4), WithinRel(5e-5 * std::exp(-2.0), 1e-12));
    CHECK_THAT(5e-5 * std::exp(-2.0), WithinRel(6.767e-6, 1e-3));
}

TEST_CASE("calibrate_prefactor closed form and limit") {
    CHECK_THAT(calibrate_prefactor(5.0, 112e3), WithinRel(0.2 / (1.0 - std::exp(-1.0)), 1e-12));
    CHECK_THAT(calibrate_prefactor(5.0, 112e3), WithinRel(0.31639, 1e-4));
    CHECK_THAT(calibrate_prefactor(1e4, 112e3), WithinRel(0.2, 1e-9));
    CHECK_THROWS_AS(calibrate_prefactor(0.0, 1e5), ValidationError);
    CHECK_THROWS_AS(calibrate_prefactor(5.0, -1.0), ValidationError);
}

TEST_CASE("polarity, calibration and monotonicity properties") {
    for (double b : {0.5, 2.0, 5.0, 12.0}) {
        for (double rs : {1e3, 112e3, 218e3, 8.04e6}) {
            const auto p = RramParams::calibrated({StateLabel::Custom, rs}, b);
            CHECK_THAT(iv_current(p, 0.2) * rs, WithinRel(0.2, 1e-9));
            double prev = -std::numeric_limits<double>::infinity();
            for (int k = -1000; k <= 1000; ++k) {
                const double v = k * 1e-3;
                const double i = iv_current(p, v);
                if (v > 0) REQUIRE(i > 0);
                if (v < 0) REQUIRE(i < 0);
                REQUIRE(i > prev);
                prev = i;
            }
        }
    }
}

TEST_CASE("derivative matches central differences") {
    const auto p = RramParams::calibrated(ResistiveState::lrs());
    for (double v : {-1.0, -0.6, -0.25, -0.05, 0.05, 0.2, 0.5, 0.9}) {
        const double h = 1e-6;
        const double fd = (iv_current(p, v + h) - iv_current(p, v - h)) / (2 * h);
        CHECK_THAT(small_signal_conductance(p, v), WithinRel(fd, 1e-5));
    }
}

TEST_CASE("noiseless fit recovers the generating parameters") {
    RramParams truth;
    truth.state = {StateLabel::Custom, 218e3};
    truth.a_p = truth.a_n = 0.3164;
    truth.b_p = truth.b_n = 5.0;
    const auto sweep = synthesize_sweep(truth, -1.0, 1.0, 101);
    const auto fit = fit_iv_params(sweep, 218e3);
    CHECK_THAT(fit.params.b_p, WithinRel(5.0, 0.01));
    CHECK_THAT(fit.params.a_p, WithinRel(0.3164, 0.01));
    REQUIRE(fit.negative.has_value());
    CHECK_THAT(fit.params.b_n, WithinRel(5.0, 0.01));
    CHECK_FALSE(fit.boundary_hit());
}

TEST_CASE("fit under 2 % log-normal noise, median over seeds") {
    RramParams truth;
    truth.state = {StateLabel::Custom, 218e3};
    truth.a_p = truth.a_n = 0.3164;
    truth.b_p = truth.b_n = 5.0;
    std::vector<double> errs;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto sweep = synthesize_sweep(truth, -1.0, 1.0, 101, 0.02, seed);
        errs.push_back(std::abs(fit_iv_params(sweep, 218e3).params.b_p - 5.0) / 5.0);
    }
    std::nth_element(errs.begin(), errs.begin() + 50, errs.end());
    CHECK(errs[50] < 0.10);
}

TEST_CASE("ohmic sweep drives b toward its lower bound") {
    IvSweep sweep;
    for (int k = 1; k <= 40; ++k) {
        const double v = 0.025 * k;
        sweep.points.push_back({v, v / 1e5});
    }
    double prev = std::numeric_limits<double>::infinity();
    for (double b : {20.0, 10.0, 5.0, 2.0, 1.0, 0.5, 0.1, 0.01}) {
        const double sse = branch_log_sse(sweep, 1e5, b, true);
        CHECK(sse < prev);
        prev = sse;
    }
    const auto fit = fit_iv_params(sweep, 1e5);
    CHECK(fit.boundary_hit());
    CHECK_FALSE(fit.diagnostics.empty());
}

TEST_CASE("degenerate sweeps are rejected") {
    IvSweep empty;
    CHECK_THROWS(fit_iv_params(empty, 1e5));
    IvSweep zeros;
    for (int k = 0; k < 10; ++k) zeros.points.push_back({0.1 * k, 0.0});
    CHECK_THROWS(fit_iv_params(zeros, 1e5));
}

TEST_CASE("IV CSV round trip with header and comments") {
    std::istringstream in("# measured\nv,i\n0.1,1e-6\n0.2,2e-6\n\n-0.1,-1e-6\n");
    const auto s = read_iv_csv(in);
    REQUIRE(s.points.size() == 3);
    CHECK(s.points[1].v == 0.2);
    std::ostringstream out;
    write_iv_csv(out, s);
    std::istringstream back(out.str());
    const auto s2 = read_iv_csv(back);
    REQUIRE(s2.points.size() == 3);
    CHECK(s2.points[2].i == -1e-6);
}

TEST_CASE("model card round trip and unknown keys") {
    const auto p = RramParams::calibrated(ResistiveState::hrs(), 4.0, 2.5e-15);
    const auto card = to_model_card(p, 0.01);
    CHECK(from_model_card(card) == p);
    auto bad = card;
    bad["colour"] = "blue";
    CHECK_THROWS_AS(from_model_card(bad), ValidationError);
}

TEST_CASE("invalid parameters are rejected") {
    auto p = RramParams::calibrated(ResistiveState::lrs());
    p.b_n = -1.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    CHECK_THROWS_AS(iv_current(RramParams::calibrated(ResistiveState::lrs()), std::nan("")),
                    ValidationError);
}
