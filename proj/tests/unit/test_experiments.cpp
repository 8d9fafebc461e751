#include <catch_amalgamated.hpp>

#include <cmath>
#include <functional>

#include "camsim/errors.hpp"
#include "camsim/experiments.hpp"

using namespace camsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double bisect(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    while (hi - lo > 1e-12) {
        const double m = 0.5 * (lo + hi);
        const double fm = f(m);
        if ((fm > 0) == (flo > 0)) {
            lo = m;
            flo = fm;
        } else {
            hi = m;
        }
    }
    return 0.5 * (lo + hi);
}

// Shared across test cases; the suite is the slowest thing in this file.
const Table2Result& suite() {
    static const Table2Result r = run_table2_suite(ArrayConfig{});
    return r;
}

}  // namespace

TEST_CASE("process corners") {
    const auto all = CornerModel::all();
    REQUIRE(all.size() == 5);
    const char* order[] = {"ff", "fs", "tt", "sf", "ss"};
    for (int k = 0; k < 5; ++k) CHECK(all[k].name == order[k]);
    CHECK(CornerModel::named("tt").vth_scale == 1.0);
    CHECK(CornerModel::named("ff").vth_scale < 1.0);
    CHECK(CornerModel::named("ss").k_scale < 1.0);
    CHECK_THROWS_AS(CornerModel::named("xx"), ValidationError);

    const ArrayConfig base;
    const auto ss = apply_corner(base, CornerModel::named("ss"));
    CHECK_THAT(ss.cell.q2.vth, WithinRel(base.cell.q2.vth * 1.10, 1e-12));
    CHECK_THAT(ss.cell.q1.k, WithinRel(base.cell.q1.k * 0.90, 1e-12));
    CHECK(apply_corner(base, CornerModel::named("tt")) == base);
}

TEST_CASE("sweep plans") {
    SweepPlan plan;
    const auto pts = plan.points();
    REQUIRE(pts.size() == 36);
    CHECK(pts.front() == 1.0);
    CHECK_THAT(pts.back(), WithinAbs(1.35, 1e-12));

    plan.start = plan.stop = 1.18;
    REQUIRE(plan.points().size() == 1);
    CHECK(plan.points()[0] == 1.18);

    plan = SweepPlan{};
    plan.step = 0.0;
    CHECK_THROWS_AS(plan.validate(), ValidationError);
    plan = SweepPlan{};
    plan.stop = 0.5;
    CHECK_THROWS_AS(plan.validate(), ValidationError);
}

TEST_CASE("single-point sweep has its argmax at that point") {
    SweepPlan plan;
    plan.start = plan.stop = 1.18;
    const auto curve = sweep_vsec(plan, CornerModel::named("tt"), ArrayConfig{});
    REQUIRE(curve.points.size() == 1);
    REQUIRE(curve.argmax);
    CHECK(*curve.argmax == 1.18);
    CHECK(curve.unimodal);
}

TEST_CASE("unimodality") {
    CHECK(is_unimodal({1, 2, 3, 2, 1}, 0.0));
    CHECK(is_unimodal({1, 2, 2, 2, 1}, 0.0));
    CHECK(is_unimodal({3, 2, 1}, 0.0));
    CHECK_FALSE(is_unimodal({1, 3, 1, 3, 1}, 0.0));
    CHECK(is_unimodal({1, 3, 2.95, 3.0, 1}, 0.1));
}

TEST_CASE("suite patterns and gap cells") {
    const auto d = table2_data(64);
    const auto c = table2_cues(64);
    for (int k = 0; k < 4; ++k) {
        CHECK(miss_count(d[k], c[k]) == 0);
        CHECK(is_diagonal(k, k));
        CHECK_FALSE(is_worst_miss(k, k));
    }
    // every worst miss differs from the hit in exactly one row
    int n = 0;
    for (int cue = 0; cue < 4; ++cue) {
        for (int data = 0; data < 4; ++data) {
            if (!is_worst_miss(cue, data)) continue;
            ++n;
            CHECK(miss_count(d[data], c[cue]) == 1);
        }
    }
    CHECK(n == 4);
    CHECK(is_worst_miss(3, 1));
}

TEST_CASE("functional suite") {
    const auto& r = suite();
    INFO(r.misclassified.size() << " misclassified");
    CHECK(r.matches());
    for (int k = 0; k < 4; ++k) CHECK(r.decisions[k][k] == Decision::Hit);
    CHECK(r.decisions[3][1] == Decision::Miss);
    CHECK(r.gap.gap_v > 0.0);

    double min_hit = 1e9, max_miss = -1e9;
    for (int cue = 0; cue < 4; ++cue) {
        for (int data = 0; data < 4; ++data) {
            const double v = r.gap.ml_sample_v[cue][data];
            if (is_diagonal(cue, data)) min_hit = std::min(min_hit, v);
            if (is_worst_miss(cue, data)) max_miss = std::max(max_miss, v);
        }
    }
    CHECK_THAT(r.gap.gap_v, WithinAbs(min_hit - max_miss, 1e-15));
    CHECK(r.vref_car_v > max_miss);
    CHECK(r.vref_car_v < min_hit);
}

TEST_CASE("energy map sums the suite") {
    const auto& r = suite();
    const auto m = energy_map(r);
    double sum = 0.0;
    for (int cue = 0; cue < 4; ++cue) {
        for (int data = 0; data < 4; ++data) {
            CHECK(m.per_bit_j[cue][data] > 0.0);
            sum += r.energy[cue][data].total_j;
        }
    }
    CHECK_THAT(m.breakdown.total_j, WithinRel(sum, 1e-3));
    double parts = 0.0;
    for (const auto& [_, v] : m.breakdown.per_driver_j) parts += v;
    CHECK_THAT(parts, WithinRel(m.breakdown.total_j, 1e-3));
    CHECK(m.per_bit_j[m.worst[0]][m.worst[1]] >= m.per_bit_j[m.best[0]][m.best[1]]);
}

TEST_CASE("search timing") {
    const auto t = measure_search_timing(ArrayConfig{});
    REQUIRE(t.developing_delay_hrs_s);
    REQUIRE(t.developing_delay_lrs_s);
    for (double d : {*t.developing_delay_hrs_s, *t.developing_delay_lrs_s}) {
        CHECK(d > 50e-12);
        CHECK(d < 500e-12);
    }
    REQUIRE(t.search_delay_s);
    CHECK_THAT(*t.search_delay_s, WithinRel(t.pre_charge_s + *t.evaluate_s, 1e-12));

    // an all-hit search never crosses the threshold
    ArrayConfig cfg;
    cfg.warmup_searches = 0;
    const auto run = run_search_traced(parse_data_word(std::string(64, 'H'), 64),
                                       parse_cue_word(std::string(64, '1'), 64), cfg);
    const double t_en = run.schedule.marker("enable");
    CHECK_FALSE(measure_delay(run.trace, "ml", t.threshold_v, Direction::Falling, t_en));
}

TEST_CASE("write ESR sweep") {
    const CellConfig cell;
    const auto grid = default_esr_grid();
    REQUIRE(grid.size() == 25);
    CHECK_THAT(grid.front(), WithinRel(10.0, 1e-12));
    CHECK_THAT(grid.back(), WithinRel(1e5, 1e-12));

    const auto fwd = write_esr_sweep(WriteDirection::Forward, grid, cell);
    const auto rev = write_esr_sweep(WriteDirection::Reverse, grid, cell);
    REQUIRE(fwd.size() == 25);

    // forward at 10 ohms: resistor current equals the saturated Q1 current
    const double vdd = cell.supplies.vdd;
    const double v_mid = bisect(
        [&](double v) { return (vdd - v) / 10.0 - mos_current(cell.q1, vdd, v); }, 0.0, vdd);
    CHECK_THAT(fwd[0].v_across_v, WithinRel(vdd - v_mid, 1e-4));
    CHECK_THAT(fwd[0].i_a, WithinRel(169e-6, 0.01));

    for (std::size_t k = 0; k < grid.size(); ++k) {
        REQUIRE(fwd[k].ok);
        REQUIRE(rev[k].ok);
        CHECK(fwd[k].v_across_v >= rev[k].v_across_v);
        if (k > 0) {
            CHECK(fwd[k].v_across_v >= fwd[k - 1].v_across_v);
            CHECK(rev[k].v_across_v >= rev[k - 1].v_across_v);
        }
    }
}

TEST_CASE("bit-read suite") {
    ArrayConfig cfg;
    const auto rep = run_aar_suite(cfg, {DataWord(64, ResistiveState::hrs())});
    CHECK(rep.all_correct());
    for (const auto& r : rep.reads) CHECK(r.bit == 1);

    DataWord alt;
    for (int k = 0; k < 64; ++k) alt.push_back(k % 2 ? ResistiveState::lrs() : ResistiveState::hrs());
    const auto alt_rep = run_aar_suite(cfg, {alt});
    REQUIRE(alt_rep.reads.size() == 64);
    for (const auto& r : alt_rep.reads) CHECK(r.bit == (r.row % 2 ? 0 : 1));

    cfg.vref_aar_v = 1.5;
    const auto bad = run_aar_suite(cfg, {DataWord(4, ResistiveState::hrs())});
    CHECK_FALSE(bad.calibration.ok);
    CHECK_FALSE(bad.all_correct());
}
