#include <catch_amalgamated.hpp>

#include <cmath>
#include <string>

#include "camsim/cam_array.hpp"
#include "camsim/errors.hpp"

using namespace camsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::string rep(char c, int n) { return std::string(static_cast<std::size_t>(n), c); }

DataWord data(const std::string& s) { return parse_data_word(s, static_cast<int>(s.size())); }
CueWord cue(const std::string& s) { return parse_cue_word(s, static_cast<int>(s.size())); }

}  // namespace

TEST_CASE("pattern parsing reports the offending position") {
    CHECK(to_pattern(data("HLH")) == "HLH");
    CHECK(to_pattern(cue("10X")) == "10X");
    try {
        (void)parse_data_word("HHQH", 4);
        FAIL("no exception");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("position 2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_cue_word("1101", 5), ValidationError);
    CHECK_THROWS_AS(parse_cue_word("11a1", 4), ValidationError);
}

TEST_CASE("miss count") {
    CHECK(miss_count(data("HHLL"), cue("1010")) == 2);
    CHECK(miss_count(data("HHLL"), cue("XXXX")) == 0);
    CHECK(miss_count(data("HL"), cue("10")) == 0);
}

TEST_CASE("comparator decisions") {
    CHECK(decide(0.905, 0.887) == Decision::Hit);
    CHECK(decide(0.869, 0.887) == Decision::Miss);
    CHECK(decide(0.887, 0.887) == Decision::Hit);
    CHECK(decide(0.884, 0.887, 0.005) == Decision::Hit);
    CHECK(decide(0.890, 0.887, -0.005) == Decision::Miss);
}

TEST_CASE("comparator offsets are reproducible") {
    ArrayConfig cfg;
    cfg.comparator_offset_v = 2e-3;
    CHECK(comparator_offset(cfg, 0) == 2e-3);
    CHECK(comparator_offset(cfg, 7) == 2e-3);
    cfg.comparator_sigma_v = 1e-3;
    CHECK(comparator_offset(cfg, 3) == comparator_offset(cfg, 3));
    CHECK(comparator_offset(cfg, 3) != comparator_offset(cfg, 4));
    ArrayConfig other = cfg;
    other.seed = 99;
    CHECK(comparator_offset(cfg, 3) != comparator_offset(other, 3));
}

TEST_CASE("all-hit match-line stays in the hit band") {
    const ArrayConfig cfg;
    const auto run = run_search_traced(data(rep('H', 64)), cue(rep('1', 64)), cfg);
    const double t_en = run.schedule.marker("enable");
    for (int k = 0; k < 64; ++k)
        REQUIRE(run.trace.voltage_at("mid_" + std::to_string(k), t_en) < cfg.cell.q2.vth);
    const double vsec = cfg.cell.supplies.vsec;
    CHECK(vsec - run.outcome.ml_sample_v < 0.05 * vsec);
    CHECK(run.outcome.decision == Decision::Hit);
    CHECK(run.outcome.miss_count_truth == 0);
}

TEST_CASE("searches from the functional suite") {
    const ArrayConfig cfg;
    CHECK(run_search(data(rep('H', 64)), cue(rep('1', 64)), cfg).decision == Decision::Hit);
    CHECK(run_search(data(rep('H', 64)), cue(rep('1', 63) + "0"), cfg).decision == Decision::Miss);
    const auto dc = run_search(data("HL" + rep('H', 62)), cue(rep('X', 64)), cfg);
    CHECK(dc.decision == Decision::Hit);
    const auto hit = run_search(data(rep('H', 64)), cue(rep('1', 64)), cfg);
    CHECK(std::abs(dc.ml_sample_v - hit.ml_sample_v) < 0.05 * hit.ml_sample_v);
}

TEST_CASE("ml degrades monotonically with the number of misses") {
    ArrayConfig cfg;
    cfg.warmup_searches = 0;
    double prev = std::numeric_limits<double>::infinity();
    double all_hit = 0.0;
    for (int misses : {0, 1, 2, 4, 8, 64}) {
        const auto o = run_search(data(rep('H', 64)), cue(rep('0', misses) + rep('1', 64 - misses)), cfg);
        INFO(misses << " misses: ml " << o.ml_sample_v);
        CHECK(o.ml_sample_v <= prev);
        if (misses == 0) all_hit = o.ml_sample_v;
        if (misses == 1) CHECK(o.ml_sample_v < all_hit);
        prev = o.ml_sample_v;
    }
}

TEST_CASE("parallel columns reproduce the suite rows") {
    ArrayConfig cfg;
    cfg.cols = 4;
    const std::vector<DataWord> cols = {data(rep('H', 64)), data(rep('L', 64)),
                                        data("L" + rep('H', 63)), data("H" + rep('L', 63))};
    const auto row1 = array_search_parallel(cols, cue(rep('1', 64)), cfg, 2);
    const Decision expect1[] = {Decision::Hit, Decision::Miss, Decision::Miss, Decision::Miss};
    for (int k = 0; k < 4; ++k) CHECK(row1[k].decision == expect1[k]);
    const auto row3 = array_search_parallel(cols, cue("0" + rep('1', 63)), cfg, 2);
    const Decision expect3[] = {Decision::Miss, Decision::Miss, Decision::Hit, Decision::Miss};
    for (int k = 0; k < 4; ++k) CHECK(row3[k].decision == expect3[k]);
}

TEST_CASE("identical columns give identical outcomes and additive energy") {
    ArrayConfig cfg;
    cfg.rows = 8;
    cfg.cols = 6;
    cfg.warmup_searches = 0;
    const std::vector<DataWord> cols(6, data("HHLLHLHL"));
    const auto serial = array_search_parallel(cols, cue("10X01X10"), cfg, 1);
    const auto threaded = array_search_parallel(cols, cue("10X01X10"), cfg, 3);
    for (std::size_t k = 0; k < cols.size(); ++k) {
        CHECK(serial[k].ml_sample_v == serial[0].ml_sample_v);
        CHECK(threaded[k].ml_sample_v == serial[k].ml_sample_v);
        CHECK(threaded[k].energy.total_j == serial[k].energy.total_j);
    }
    const auto total = total_energy(serial);
    CHECK_THAT(total.total_j, WithinRel(6.0 * serial[0].energy.total_j, 1e-12));
    CHECK_THAT(total.core_j, WithinRel(6.0 * serial[0].energy.core_j, 1e-12));
    CHECK(total.bits == 6 * 8);
}

TEST_CASE("pre-charge energy of a bare match-line") {
    ArrayConfig cfg;
    cfg.driver_load_f = 0.0;
    cfg.comparator_energy_j = 0.0;
    const auto d = data(rep('H', 64));
    Circuit c = build_matchline(d, cfg);
    const auto s = schedule_search(cue(rep('X', 64)), cfg);
    apply_schedule(c, s);
    const auto tr = transient_solve(c, cfg.cell.timing.dt_s(), s.t_end_s, {{"ml", 0.0}}, cfg.cell.solver);
    const double vsec = cfg.cell.supplies.vsec;
    // the 5 kOhm pre-charge switch leaves ml a little short of V_SEC after one cycle
    const double v_ml = tr.voltage_at("ml", s.marker("enable"));
    CHECK(v_ml > 0.98 * vsec);
    const double drawn = cfg.c_ml_f * vsec * v_ml;
    const double stored = 0.5 * cfg.c_ml_f * v_ml * v_ml;
    const auto e = account_energy(tr, s, cfg);
    CHECK_THAT(e.per_phase_j.at("pre_charge"), WithinRel(drawn, 0.01));
    CHECK_THAT(e.per_phase_j.at("pre_charge"), WithinRel(cfg.c_ml_f * vsec * vsec, 0.02));
    CHECK_THAT(tr.at(tr.group_dissipation.at("periphery"), s.marker("enable")),
               WithinRel(drawn - stored, 0.01));
    CHECK_THAT(e.total_j, WithinRel(e.per_phase_j.at("pre_charge") + e.per_phase_j.at("evaluate"), 1e-9));
}

TEST_CASE("energy report bookkeeping") {
    const ArrayConfig cfg;
    const auto o = run_search(data(rep('L', 64)), cue(rep('1', 64)), cfg);
    const auto& e = o.energy;
    double drivers = 0.0, phases = 0.0;
    for (const auto& [_, v] : e.per_driver_j) drivers += v;
    for (const auto& [_, v] : e.per_phase_j) phases += v;
    CHECK_THAT(drivers, WithinRel(e.total_j, 1e-9));
    CHECK_THAT(phases, WithinRel(e.total_j, 1e-9));
    CHECK_THAT(e.core_j + e.periphery_j, WithinRel(e.total_j, 1e-9));
    CHECK_THAT(e.per_bit_j(), WithinRel(e.total_j / 64, 1e-12));
    CHECK(e.per_driver_j.at("comparators") == cfg.comparator_energy_j);
}

TEST_CASE("bit-read calibration") {
    const ArrayConfig cfg;
    const auto cal = calibrate_aar(cfg);
    CHECK(cal.ok);
    CHECK(cal.lrs_level_v < cal.vref_v);
    CHECK(cal.vref_v < cal.hrs_level_v);
    CHECK(check_aar_reference(cfg).ok);

    ArrayConfig big = cfg;
    big.c_psw_f *= 10.0;
    CHECK(run_aar_row(ResistiveState::hrs(), big).bit == 1);
    CHECK(run_aar_row(ResistiveState::lrs(), big).bit == 1);
    const auto chk = check_aar_reference(big);
    CHECK_FALSE(chk.ok);
    CHECK_FALSE(chk.message.empty());
}

TEST_CASE("array config validation") {
    ArrayConfig cfg;
    cfg.rows = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = ArrayConfig{};
    cfg.c_ml_f = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    CHECK_THROWS_AS(run_search(data("HH"), cue("11"), ArrayConfig{}), ValidationError);
}
