// camsim command-line driver. Exit status: 0 success, 1 bad input, 2 solver failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "camsim/errors.hpp"
#include "camsim/report_io.hpp"

namespace {

using namespace camsim;

struct Common {
    std::string config;
    std::string out;
    std::string format = "json";
    int jobs = 0;
};

struct Context {
    RunConfig cfg;
    std::filesystem::path out_dir;
    ExportFormat format = ExportFormat::Json;
    int jobs = 1;
};

Context make_context(const Common& o) {
    Context ctx;
    if (!o.config.empty()) ctx.cfg = load_config(o.config);
    ctx.format = export_format_from_string(o.format);
    if (!o.out.empty())
        ctx.out_dir = o.out;
    else if (!ctx.cfg.output_dir.empty())
        ctx.out_dir = ctx.cfg.output_dir;
    else
        ctx.out_dir = default_output_dir();
    ctx.jobs = o.jobs > 0 ? o.jobs : ctx.cfg.jobs;
    return ctx;
}

void emit(const Report& r, const Context& ctx, const std::string& summary) {
    std::cout << summary << "\n";
    for (const auto& p : export_report(r, ctx.out_dir, ctx.format)) std::cout << "wrote " << p.string() << "\n";
}

int cmd_fit(const Context& ctx, const std::string& csv, double rs, const std::string& state) {
    const auto sweep = read_iv_csv_file(csv);
    auto fit = fit_iv_params(sweep, rs);
    fit.params.state.label = state_label_from_string(state);
    std::printf("b_p %.6g /V, a_p %.6g, rms_log %.4g\n", fit.params.b_p, fit.params.a_p,
                fit.fit_rms_log);
    emit(fit_report(fit, csv), ctx, "fit ok");
    return 0;
}

int cmd_truth(const Context& ctx) {
    std::vector<TruthRow> rows;
    for (CueValue cue : {CueValue::One, CueValue::Zero, CueValue::DontCare}) {
        for (const auto& st : {ResistiveState::hrs(), ResistiveState::lrs()}) {
            rows.push_back(evaluate_truth_table(cue, st, ctx.cfg.array.cell));
            const auto& r = rows.back();
            std::printf("cue %c  %s  mid %-4s (%.3f V)  ml %-4s (%.3f V)\n", to_char(cue),
                        to_string(st.label).c_str(), to_string(r.mid_level).c_str(),
                        r.v_mid_enable_v, to_string(r.ml_level).c_str(), r.v_ml_sample_v);
        }
    }
    emit(truth_table_report(rows), ctx, "truth table: " + std::to_string(rows.size()) + " rows");
    return 0;
}

int cmd_search(const Context& ctx, const std::string& data_s, const std::string& cue_s) {
    const auto& a = ctx.cfg.array;
    const auto data = parse_data_word(data_s, a.rows);
    const auto cue = parse_cue_word(cue_s, a.rows);
    const auto run = run_search_traced(data, cue, a);
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s (ml %.4f V, vref %.4f V, %.3g J/bit)",
                  to_string(run.outcome.decision).c_str(), run.outcome.ml_sample_v,
                  run.outcome.vref_v, run.outcome.energy.per_bit_j());
    emit(search_report(data, cue, run), ctx, buf);
    return 0;
}

int cmd_aar(const Context& ctx, const std::vector<std::string>& data) {
    const auto& a = ctx.cfg.array;
    std::vector<DataWord> cols;
    for (const auto& d : data) cols.push_back(parse_data_word(d, a.rows));
    const auto rep = run_aar_suite(a, cols);
    std::string summary = std::to_string(rep.n_correct) + "/" + std::to_string(rep.reads.size()) +
                          " reads correct";
    if (!rep.calibration.ok) summary += "; calibration failure: " + rep.calibration.message;
    emit(aar_report(rep), ctx, summary);
    return 0;
}

int cmd_write_sweep(const Context& ctx, const std::string& direction) {
    const auto grid = default_esr_grid();
    const auto& cell = ctx.cfg.array.cell;
    if (direction == "both") {
        const auto f = write_esr_sweep(WriteDirection::Forward, grid, cell);
        const auto r = write_esr_sweep(WriteDirection::Reverse, grid, cell);
        const auto rep = write_sweep_report(f, r);
        emit(rep, ctx, std::string("forward dominates: ") +
                           (rep.data["forward_dominates"].get<bool>() ? "yes" : "no"));
        return 0;
    }
    const auto d = write_direction_from_string(direction);
    const auto pts = write_esr_sweep(d, grid, cell);
    emit(write_sweep_report(d, pts), ctx, std::to_string(pts.size()) + " points");
    return 0;
}

int cmd_table2(const Context& ctx, bool fixed_ref) {
    const auto res = run_table2_suite(ctx.cfg.array, !fixed_ref, ctx.jobs);
    std::printf("vref %.4f V, gap %.2f mV\n", res.vref_car_v, res.gap.gap_v * 1e3);
    for (int c = 0; c < 4; ++c) {
        std::printf("cue %d:", c + 1);
        for (int d = 0; d < 4; ++d) std::printf(" %-4s", to_string(res.decisions[c][d]).c_str());
        std::printf("\n");
    }
    for (const auto& m : res.misclassified) std::printf("misclassified: %s\n", m.c_str());
    emit(table2_report(res), ctx, res.matches() ? "matrix matches" : "matrix differs");
    return 0;
}

int cmd_sweep(const Context& ctx, const std::string& corner, const SweepPlan& plan) {
    std::vector<CornerModel> corners =
        corner == "all" ? CornerModel::all() : std::vector<CornerModel>{CornerModel::named(corner)};
    std::vector<GapCurve> curves;
    for (const auto& c : corners) {
        curves.push_back(sweep_vsec(plan, c, ctx.cfg.array, ctx.jobs));
        const auto& g = curves.back();
        if (g.argmax)
            std::printf("%s: argmax V_SEC %.3f V\n", c.name.c_str(), *g.argmax);
        else
            std::printf("%s: no valid point\n", c.name.c_str());
    }
    emit(vsec_sweep_report(curves), ctx, std::to_string(curves.size()) + " corner(s)");
    return 0;
}

int cmd_energy(const Context& ctx) {
    const auto m = energy_map(ctx.cfg.array, ctx.jobs);
    for (int c = 0; c < 4; ++c) {
        std::printf("cue %d:", c + 1);
        for (int d = 0; d < 4; ++d) std::printf(" %8.3f", m.per_bit_j[c][d] * 1e15);
        std::printf("  fJ/bit\n");
    }
    emit(energy_map_report(m), ctx, "core share " + std::to_string(m.breakdown.core_share()));
    return 0;
}

int cmd_timing(const Context& ctx) {
    const auto t = measure_search_timing(ctx.cfg.array);
    auto ps = [](const std::optional<double>& v) {
        return v ? std::to_string(*v * 1e12) + " ps" : std::string("no crossing");
    };
    std::cout << "developing delay, cue 1 on L data: " << ps(t.developing_delay_hrs_s)
              << "\ndeveloping delay, cue 0 on H data: " << ps(t.developing_delay_lrs_s)
              << "\npre-charge: " << t.pre_charge_s * 1e12 << " ps\n";
    emit(timing_report(t, ctx.cfg.array.c_ml_f), ctx, "search delay " + ps(t.search_delay_s));
    return 0;
}

int run_configured(const Context& ctx) {
    const auto& e = ctx.cfg.experiment;
    if (e == "truth-table") return cmd_truth(ctx);
    if (e == "aar") return cmd_aar(ctx, {});
    if (e == "write-sweep") return cmd_write_sweep(ctx, "both");
    if (e == "suite") return cmd_table2(ctx, false);
    if (e == "sweep") return cmd_sweep(ctx, "all", SweepPlan{});
    if (e == "energy-map") return cmd_energy(ctx);
    if (e == "timing") return cmd_timing(ctx);
    throw ValidationError("experiment '" + e + "' needs arguments; use its subcommand");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Capacitive RRAM TCAM simulator"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--config", common.config, "JSON run configuration");
    app.add_option("--out", common.out, "Output directory (default: $CAMSIM_OUT or .)");
    app.add_option("--format", common.format, "csv, json or svg")
        ->check(CLI::IsMember({"csv", "json", "svg"}));
    app.add_option("--jobs", common.jobs, "Worker threads")->check(CLI::PositiveNumber);

    std::function<int(const Context&)> action;

    auto* fit = app.add_subcommand("fit-device", "Fit the IV model to a measured sweep");
    std::string csv, state = "Custom";
    double rs = 0.0;
    fit->add_option("csv", csv, "Two-column CSV: volts, amperes")->required();
    fit->add_option("--rs", rs, "Resistance at the 0.2 V read-out point (ohms)")->required();
    fit->add_option("--state", state, "HRS, LRS or Custom");
    fit->callback([&] { action = [&](const Context& c) { return cmd_fit(c, csv, rs, state); }; });

    auto* tt = app.add_subcommand("truth-table", "Single-cell truth table");
    tt->callback([&] { action = cmd_truth; });

    auto* search = app.add_subcommand("search", "One match-line search");
    std::string data_p, cue_p;
    search->add_option("--data", data_p, "Stored pattern, 'H'/'L' per row")->required();
    search->add_option("--cue", cue_p, "Cue pattern, '1'/'0'/'X' per row")->required();
    search->callback([&] {
        action = [&](const Context& c) { return cmd_search(c, data_p, cue_p); };
    });

    auto* aar = app.add_subcommand("aar", "Bit reads through the psw charge tank");
    std::vector<std::string> aar_data;
    aar->add_option("--data", aar_data, "Column pattern(s); default all-H and all-L");
    aar->callback([&] { action = [&](const Context& c) { return cmd_aar(c, aar_data); }; });

    auto* ws = app.add_subcommand("write-sweep", "Write drive into a swept stand-in resistor");
    std::string direction = "both";
    ws->add_option("--direction", direction, "fwd, rev or both")
        ->check(CLI::IsMember({"fwd", "rev", "both", "forward", "reverse"}));
    ws->callback([&] {
        action = [&](const Context& c) { return cmd_write_sweep(c, direction); };
    });

    auto* suite = app.add_subcommand("suite", "Scenario suites");
    suite->require_subcommand(1);
    auto* t2 = suite->add_subcommand("table2", "4x4 search suite");
    bool fixed_ref = false;
    t2->add_flag("--fixed-vref", fixed_ref, "Use the configured vref_car_v instead of calibrating");
    t2->callback([&] { action = [&](const Context& c) { return cmd_table2(c, fixed_ref); }; });

    auto* sweep = app.add_subcommand("sweep", "Parameter sweeps");
    sweep->require_subcommand(1);
    auto* vsec = sweep->add_subcommand("vsec", "Hit/miss gap versus V_SEC");
    std::string corner = "tt";
    SweepPlan plan;
    vsec->add_option("--corner", corner, "ff, fs, tt, sf, ss or all");
    vsec->add_option("--start", plan.start, "First V_SEC (V)");
    vsec->add_option("--stop", plan.stop, "Last V_SEC (V)");
    vsec->add_option("--step", plan.step, "V_SEC step (V)");
    vsec->callback([&] {
        action = [&](const Context& c) {
            plan.validate();
            return cmd_sweep(c, corner, plan);
        };
    });

    auto* em = app.add_subcommand("energy-map", "Per-bit energy over the 4x4 suite");
    em->callback([&] { action = cmd_energy; });

    auto* tm = app.add_subcommand("timing", "Match-line developing delays");
    tm->callback([&] { action = cmd_timing; });

    auto* run = app.add_subcommand("run", "Run the experiment named in the config");
    run->callback([&] { action = run_configured; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        const Context ctx = make_context(common);
        return action(ctx);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const FitError& e) {
        std::cerr << "fit failed: " << e.what() << "\n";
        for (const auto& d : e.diagnostics()) std::cerr << "  " << d << "\n";
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
