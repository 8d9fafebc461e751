// Acceptance runner. One PASS/FAIL line per criterion; `--criterion N` runs one.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "camsim/experiments.hpp"

using namespace camsim;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    // Records a sub-check; the criterion fails if any sub-check fails.
    void expect(bool ok, const std::string& what) {
        if (!ok) pass = false;
        detail << (detail.tellp() > 0 ? "; " : "") << (ok ? "" : "FAILED ") << what;
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

Verdict truth_table() {
    Verdict v;
    const auto t0 = Clock::now();
    struct Row {
        CueValue cue;
        ResistiveState st;
        Level mid, ml;
    };
    const Row rows[] = {
        {CueValue::One, ResistiveState::hrs(), Level::Low, Level::High},
        {CueValue::One, ResistiveState::lrs(), Level::High, Level::Low},
        {CueValue::Zero, ResistiveState::hrs(), Level::High, Level::Low},
        {CueValue::Zero, ResistiveState::lrs(), Level::Low, Level::High},
        {CueValue::DontCare, ResistiveState::hrs(), Level::Low, Level::High},
        {CueValue::DontCare, ResistiveState::lrs(), Level::Low, Level::High},
    };
    int ok = 0;
    for (const auto& r : rows) {
        const auto got = evaluate_truth_table(r.cue, r.st, CellConfig{});
        if (got.mid_level == r.mid && got.ml_level == r.ml) ++ok;
    }
    const double dt = seconds_since(t0);
    v.expect(ok == 6, std::to_string(ok) + "/6 rows");
    v.expect(dt < 5.0, fmt("%.2f s < 5 s", dt));
    return v;
}

Verdict table2() {
    Verdict v;
    const auto t0 = Clock::now();
    const auto r = run_table2_suite(ArrayConfig{}, true, 1);
    const double dt = seconds_since(t0);
    v.expect(r.matches(), std::to_string(16 - r.misclassified.size()) + "/16 cells");
    v.detail << ", vref_car " << fmt("%.4f V", r.vref_car_v);
    v.expect(dt < 60.0, fmt("%.1f s < 60 s", dt));
    return v;
}

Verdict gap() {
    Verdict v;
    const ArrayConfig cfg;
    const auto g = measure_gap(cfg, jobs());
    v.expect(g.gap_v > 5e-3, fmt("gap %.2f mV > 5 mV", g.gap_v * 1e3) +
                                 fmt(" (silicon reference %.2f mV)", g.reference_gap_v * 1e3));
    const auto curve = sweep_vsec(SweepPlan{}, CornerModel::named("tt"), cfg, jobs());
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : curve.points) {
        if (!p.ok) continue;
        lo = std::min(lo, p.gap_v);
        hi = std::max(hi, p.gap_v);
    }
    v.expect(hi > 0.0 && hi > 2.0 * lo,
             fmt("sweep gap range [%.2f, ", lo * 1e3) + fmt("%.2f] mV varies > 2x", hi * 1e3));
    return v;
}

Verdict corners() {
    Verdict v;
    const auto t0 = Clock::now();
    std::map<std::string, double> argmax;
    for (const auto& c : CornerModel::all()) {
        const auto curve = sweep_vsec(SweepPlan{}, c, ArrayConfig{}, jobs());
        argmax[c.name] = curve.argmax.value_or(std::nan(""));
        v.detail << (v.detail.tellp() > 0 ? ", " : "") << c.name << " "
                 << fmt("%.2f V", argmax[c.name]);
    }
    const double dt = seconds_since(t0);
    v.expect(argmax["ff"] <= argmax["tt"] && argmax["tt"] <= argmax["ss"], "ff <= tt <= ss");
    v.expect(dt < 600.0, fmt("%.0f s < 600 s", dt));
    return v;
}

Verdict energy() {
    Verdict v;
    const ArrayConfig cfg;

    ArrayConfig single = cfg;
    single.rows = 1;
    auto cell_energy = [&](char data, char cue) {
        return run_search(parse_data_word(std::string(1, data), 1),
                          parse_cue_word(std::string(1, cue), 1), single)
            .energy.per_bit_j();
    };
    const double hit1 = cell_energy('H', '1'), miss1 = cell_energy('L', '1');
    const double hit0 = cell_energy('L', '0'), miss0 = cell_energy('H', '0');
    // Averaged over cue polarity; the costliest single cell must be a miss.
    const double miss_avg = 0.5 * (miss1 + miss0), hit_avg = 0.5 * (hit1 + hit0);
    v.expect(miss_avg > hit_avg && miss1 > std::max(hit0, hit1),
             fmt("isolated cell miss %.2f", miss_avg * 1e15) + fmt(" > hit %.2f fJ", hit_avg * 1e15) +
                 fmt(" (cue 1: miss %.2f", miss1 * 1e15) + fmt(" / hit %.2f,", hit1 * 1e15) +
                 fmt(" cue 0: miss %.2f", miss0 * 1e15) + fmt(" / hit %.2f)", hit0 * 1e15));

    const auto m = energy_map(cfg, jobs());
    // The four uniform test cases, [cue][data]: cue 0 all-'1', cue 1 all-'0';
    // data 0 all-HRS, data 1 all-LRS.
    const auto& e = m.per_bit_j;
    std::array<int, 2> worst{0, 0}, best{0, 0};
    for (int c = 0; c < 2; ++c) {
        for (int d = 0; d < 2; ++d) {
            if (e[c][d] > e[worst[0]][worst[1]]) worst = {c, d};
            if (e[c][d] < e[best[0]][best[1]]) best = {c, d};
        }
    }
    const char* cue_name[] = {"all-1", "all-0"};
    const char* data_name[] = {"all-HRS", "all-LRS"};
    auto label = [&](const std::array<int, 2>& k) {
        return std::string(data_name[k[1]]) + "/" + cue_name[k[0]] +
               fmt(" %.2f fJ/bit", e[k[0]][k[1]] * 1e15);
    };
    v.expect(worst == std::array<int, 2>{1, 0},
             "worst " + label(worst) + " (expected " + label({1, 0}) + ")");
    v.expect(best == std::array<int, 2>{1, 1},
             "best " + label(best) + " (expected " + label({1, 1}) + ")");

    const double line = m.breakdown.per_bit_j();
    const double isolated = 0.25 * (hit1 + miss1 + hit0 + miss0);
    v.expect(line < isolated, fmt("64-cell line %.2f fJ/bit", line * 1e15) +
                                  fmt(" < isolated %.2f fJ", isolated * 1e15));
    v.expect(m.breakdown.core_share() < 0.20,
             fmt("core share %.1f %% < 20 %%", 100.0 * m.breakdown.core_share()));
    return v;
}

Verdict timing() {
    Verdict v;
    const ArrayConfig cfg;
    const auto t = measure_search_timing(cfg);
    auto in_range = [](const std::optional<double>& d) { return d && *d >= 50e-12 && *d <= 1e-9; };
    auto ps = [](const std::optional<double>& d) { return d ? fmt("%.0f ps", *d * 1e12) : "none"; };
    v.expect(in_range(t.developing_delay_hrs_s) && in_range(t.developing_delay_lrs_s),
             "delays HRS " + ps(t.developing_delay_hrs_s) + ", LRS " + ps(t.developing_delay_lrs_s) +
                 " in [50 ps, 1 ns]");
    v.detail << "; split pre-charge " << ps(t.pre_charge_s) << " + evaluate " << ps(t.evaluate_s)
             << " = " << ps(t.search_delay_s);

    // Proportional scaling over a 4x span ending at the default line.
    const double c0 = cfg.c_ml_f / 4.0;
    std::vector<double> caps = {c0, 2 * c0, 4 * c0};
    for (const bool hrs : {true, false}) {
        std::vector<std::optional<double>> d;
        for (double c : caps) {
            ArrayConfig a = cfg;
            a.c_ml_f = c;
            const auto r = measure_search_timing(a);
            d.push_back(hrs ? r.developing_delay_hrs_s : r.developing_delay_lrs_s);
        }
        const std::string tag = hrs ? "HRS" : "LRS";
        bool ok = std::all_of(d.begin(), d.end(), [](const auto& x) { return x.has_value(); });
        std::string what = tag + " delays " + ps(d[0]) + ", " + ps(d[1]) + ", " + ps(d[2]);
        if (ok) {
            for (int k = 1; k < 3; ++k) {
                const double ratio = *d[k] / *d[0];
                const double want = caps[k] / caps[0];
                what += fmt(", x%.0f", want) + fmt(" -> %.2f", ratio);
                ok = ok && std::abs(ratio - want) <= 0.15 * want;
            }
            // affine diagnostic: slope and intercept through the end points
            const double slope = (*d[2] - *d[0]) / (caps[2] - caps[0]);
            const double icpt = *d[0] - slope * caps[0];
            what += fmt(" (affine intercept %.0f ps)", icpt * 1e12);
        }
        v.expect(ok, what + " within 15 % of proportional");
    }
    return v;
}

Verdict solver() {
    Verdict v;
    {
        const double r = 1e5, cap = 10e-15, rc = r * cap;
        Circuit c;
        const auto a = c.add_net("a");
        c.add_resistor(a, c.gnd(), r, "r");
        c.add_capacitor(a, c.gnd(), cap, "c");
        const auto tr = transient_solve(c, rc / 1000, 2 * rc, {{"a", 1.0}});
        const double err = std::abs(tr.voltage_at("a", rc) / std::exp(-1.0) - 1.0);
        v.expect(err < 1e-3, fmt("RC error %.2e < 1e-3", err));
    }
    {
        ArrayConfig cfg;
        cfg.warmup_searches = 0;
        const auto run = run_search_traced(parse_data_word(std::string(64, 'H'), 64),
                                           parse_cue_word(std::string(63, '1') + "0", 64), cfg);
        const auto& tr = run.trace;
        const double src = tr.total_source_energy();
        const double sink = tr.stored_energy.back() - tr.stored_energy.front() + tr.total_dissipation();
        const double err = std::abs(src - sink) / std::abs(src);
        v.expect(err < 0.01, fmt("search energy closure %.2e < 1e-2", err));
    }
    {
        const double cap = 50e-15, vs = 1.18;
        Circuit c;
        const auto s = c.add_net("s");
        const auto a = c.add_net("a");
        c.add_resistor(s, a, 1e4, "r");
        c.add_capacitor(a, c.gnd(), cap, "c");
        c.drive(s, PwlWaveform({{0.0, 0.0}, {1e-12, vs}}));
        const auto tr = transient_solve(c, 5e-14, 10e-9);
        const double half = 0.5 * cap * vs * vs;
        const double e1 = std::abs(tr.stored_energy.back() / half - 1.0);
        const double e2 = std::abs(tr.total_dissipation() / half - 1.0);
        v.expect(e1 < 0.01 && e2 < 0.01, fmt("partition errors %.2e", e1) + fmt(", %.2e < 1e-2", e2));
    }
    {
        ArrayConfig fine;
        fine.cell.timing.steps_per_cycle *= 2;
        double worst = 0.0;
        const ArrayConfig base;
        const auto d = parse_data_word(std::string(64, 'H'), 64);
        for (const auto& cue : {std::string(64, '1'), std::string(63, '1') + "0"}) {
            const auto c = parse_cue_word(cue, 64);
            const auto a = run_search(d, c, base);
            const auto b = run_search(d, c, fine);
            const double vsec = base.cell.supplies.vsec;
            worst = std::max(worst, std::abs(a.ml_sample_v - b.ml_sample_v) / vsec);
            worst = std::max(worst, std::abs(a.energy.total_j / b.energy.total_j - 1.0));
        }
        v.expect(worst < 2e-3, fmt("dt halving change %.2e < 2e-3", worst));
    }
    return v;
}

Verdict device() {
    Verdict v;
    double worst_cal = 0.0;
    for (double b : {1.0, 5.0, 10.0}) {
        for (double rs : {kLrsOhms, 218e3, kHrsOhms}) {
            const auto p = RramParams::calibrated({StateLabel::Custom, rs}, b);
            worst_cal = std::max(worst_cal, std::abs(iv_current(p, 0.2) * rs / 0.2 - 1.0));
        }
    }
    v.expect(worst_cal < 1e-9, fmt("calibration %.1e < 1e-9", worst_cal));

    RramParams truth;
    truth.state = {StateLabel::Custom, 218e3};
    truth.a_p = truth.a_n = 0.3164;
    truth.b_p = truth.b_n = 5.0;
    const auto fit = fit_iv_params(synthesize_sweep(truth, -1.0, 1.0, 101), 218e3);
    const double fe = std::max({std::abs(fit.params.b_p / 5.0 - 1.0), std::abs(fit.params.a_p / 0.3164 - 1.0),
                                std::abs(fit.params.b_n / 5.0 - 1.0)});
    v.expect(fe < 0.01, fmt("fit recovery %.1e < 1e-2", fe));

    const auto p = RramParams::calibrated(ResistiveState::lrs());
    double worst_d = 0.0;
    for (double x : {-1.0, -0.5, -0.1, 0.05, 0.2, 0.6, 1.0}) {
        const double h = 1e-6;
        const double fd = (iv_current(p, x + h) - iv_current(p, x - h)) / (2 * h);
        worst_d = std::max(worst_d, std::abs(small_signal_conductance(p, x) / fd - 1.0));
    }
    v.expect(worst_d < 1e-5, fmt("derivative %.1e < 1e-5", worst_d));
    return v;
}

Verdict aar() {
    Verdict v;
    ArrayConfig cfg;
    const auto cal = calibrate_aar(cfg);
    cfg.vref_aar_v = cal.vref_v;
    const auto rep = run_aar_suite(cfg);
    v.expect(rep.all_correct() && rep.reads.size() == 128,
             std::to_string(rep.n_correct) + "/" + std::to_string(rep.reads.size()) +
                 fmt(" reads at vref %.3f V", cal.vref_v));
    cfg.vref_aar_v = cal.hrs_level_v + 0.1;
    const auto bad = run_aar_suite(cfg);
    v.expect(!bad.calibration.ok && !bad.calibration.message.empty(),
             "miscalibrated vref flagged: " + bad.calibration.message);
    return v;
}

Verdict write_sweep() {
    Verdict v;
    const CellConfig cell;
    const auto grid = default_esr_grid();
    const auto f = write_esr_sweep(WriteDirection::Forward, grid, cell);
    const auto r = write_esr_sweep(WriteDirection::Reverse, grid, cell);
    bool dominates = true, mono_f = true, mono_r = true, ok = true;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        ok = ok && f[k].ok && r[k].ok;
        dominates = dominates && f[k].v_across_v >= r[k].v_across_v;
        if (k > 0) {
            mono_f = mono_f && f[k].v_across_v >= f[k - 1].v_across_v;
            mono_r = mono_r && r[k].v_across_v >= r[k - 1].v_across_v;
        }
    }
    v.expect(ok, std::to_string(grid.size()) + " points solved");
    v.expect(dominates, "forward >= reverse");
    v.expect(mono_f && mono_r, "both monotone");
    v.detail << fmt(" (at 1e5 ohm: fwd %.3f V", f.back().v_across_v)
             << fmt(", rev %.3f V)", r.back().v_across_v);
    return v;
}

struct Criterion {
    const char* name;
    std::function<Verdict()> run;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all = {
        {"truth table", truth_table},
        {"4x4 search matrix", table2},
        {"hit/miss gap", gap},
        {"corner ordering", corners},
        {"energy orderings", energy},
        {"timing", timing},
        {"solver fidelity", solver},
        {"device model", device},
        {"bit-read suite", aar},
        {"write sweep", write_sweep},
    };
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"camsim acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "Run one criterion (1-10)")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);

    int failed = 0;
    for (std::size_t k = 0; k < criteria().size(); ++k) {
        const int n = static_cast<int>(k) + 1;
        if (only && n != only) continue;
        const auto& c = criteria()[k];
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail << "exception: " << e.what();
        }
        if (!v.pass) ++failed;
        std::printf("criterion %2d %-18s %s  %s\n", n, c.name, v.pass ? "PASS" : "FAIL",
                    v.detail.str().c_str());
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
