#include "camsim/cam_cell.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "camsim/errors.hpp"

namespace camsim {

std::string to_string(CueValue cue) {
    switch (cue) {
        case CueValue::One: return "one";
        case CueValue::Zero: return "zero";
        case CueValue::DontCare: return "dont_care";
    }
    return "dont_care";
}

char to_char(CueValue cue) {
    switch (cue) {
        case CueValue::One: return '1';
        case CueValue::Zero: return '0';
        case CueValue::DontCare: return 'X';
    }
    return 'X';
}

CueValue cue_from_char(char c) {
    switch (c) {
        case '1': return CueValue::One;
        case '0': return CueValue::Zero;
        case 'X':
        case 'x': return CueValue::DontCare;
        default: throw ValidationError(std::string("invalid cue symbol '") + c + "'");
    }
}

std::pair<double, double> cue_levels(CueValue cue, double vsec) {
    switch (cue) {
        case CueValue::One: return {vsec, 0.0};
        case CueValue::Zero: return {0.0, vsec};
        case CueValue::DontCare: return {0.0, 0.0};
    }
    return {0.0, 0.0};
}

std::string to_string(WriteDirection d) { return d == WriteDirection::Forward ? "fwd" : "rev"; }

WriteDirection write_direction_from_string(std::string_view s) {
    if (s == "fwd" || s == "forward") return WriteDirection::Forward;
    if (s == "rev" || s == "reverse") return WriteDirection::Reverse;
    throw ValidationError("write direction must be fwd or rev, got '" + std::string(s) + "'");
}

std::string to_string(Level l) { return l == Level::High ? "high" : "low"; }

void CellTiming::validate() const {
    auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
    if (!positive(clock_period_s)) throw ValidationError("clock period must be positive");
    if (!positive(edge_s) || !positive(cue_rise_s) || !positive(sec_pulse_s))
        throw ValidationError("edge, cue rise and sec pulse durations must be positive");
    if (steps_per_cycle < 1) throw ValidationError("steps_per_cycle must be >= 1");
    if (dt_s() > std::min(edge_s, cue_rise_s) / 20.0 * (1.0 + 1e-9))
        throw ValidationError("time step exceeds 1/20 of the shortest edge; raise steps_per_cycle");
    const double T = clock_period_s;
    const double sw_off = cycles(sw_width_cycles);
    const double cue_done = sw_off + cue_rise_s;
    const double en_on = cycles(en_start_cycles);
    const double en_off = en_on + cycles(en_width_cycles);
    const double sample = cycles(sample_cycles);
    const double fall = cycles(cue_fall_cycles);
    if (sw_off < edge_s) throw ValidationError("sw pulse shorter than one edge");
    if (cycles(pre_width_cycles) > en_on + 1e-15)
        throw ValidationError("pre-charge must end before enable");
    if (cue_done > en_on + 1e-15) throw ValidationError("cue ramp must finish before enable");
    if (!(en_off <= sample + 1e-15)) throw ValidationError("sample must follow the enable window");
    if (!(fall >= sample)) throw ValidationError("cues must fall after the sample instant");
    if (fall + cue_rise_s > 3.0 * T - edge_s + 1e-15)
        throw ValidationError("cue fall must complete before sw is reasserted");
    const double clr = cycles(clr_width_cycles);
    if (clr + edge_s + sec_pulse_s + 2.0 * edge_s > cycles(aar_sample_cycles))
        throw ValidationError("AAR clear and sec pulse do not fit before the sample");
    if (cycles(aar_sample_cycles) > 3.0 * T)
        throw ValidationError("AAR sample outside the three-cycle window");
    if (cycles(write_start_cycles) + cycles(write_width_cycles) > 3.0 * T)
        throw ValidationError("write pulse outside the three-cycle window");
}

void CellConfig::validate() const {
    rram.validate();
    if (!(std::isfinite(c_b_f) && c_b_f > 0.0)) throw ValidationError("c_b_f must be positive");
    if (!(std::isfinite(ml_load_f) && ml_load_f > 0.0))
        throw ValidationError("ml_load_f must be positive");
    if (!(std::isfinite(pre_r_on_ohms) && pre_r_on_ohms > 0.0) ||
        !(std::isfinite(periphery_r_on_ohms) && periphery_r_on_ohms > 0.0))
        throw ValidationError("switch on-resistances must be positive");
    q1.validate();
    q2.validate();
    q3.validate();
    if (!(supplies.vsec >= kVsecMin && supplies.vsec <= kVsecMax))
        throw ValidationError("vsec must lie in [1.0, 1.4] V");
    if (!(supplies.vdd >= supplies.vsec)) throw ValidationError("vdd must be >= vsec");
    if (!(set_threshold_v > 0.0 && reset_threshold_v < 0.0))
        throw ValidationError("write thresholds must be positive (set) and negative (reset)");
    timing.validate();
}

CellConfig CellConfig::with_state(const ResistiveState& state) const {
    CellConfig out = *this;
    const double ratio = rram.a_n / rram.a_p;
    out.rram.state = state;
    out.rram.a_p = calibrate_prefactor(rram.b_p, state.rs_ohms);
    out.rram.a_n = ratio * out.rram.a_p;
    return out;
}

void add_cell(Circuit& c, const CellConfig& cfg, const CellNets& n, const std::string& suffix) {
    c.add_rram(n.cue, n.mid, cfg.rram, "rram" + suffix);
    c.add_capacitor(n.cue, n.mid, cfg.rram.c_mr_f, "c_mr" + suffix);
    c.add_capacitor(n.mid, n.cue_bar, cfg.c_b_f, "c_b" + suffix);
    c.add_mosfet(n.mid, n.sw, n.psw, cfg.q1, "q1" + suffix);
    c.add_mosfet(n.ml, n.mid, n.x, cfg.q2, "q2" + suffix);
    c.add_mosfet(n.x, n.en, c.gnd(), cfg.q3, "q3" + suffix);
}

Circuit build_cell_netlist(const CellConfig& cfg) {
    cfg.validate();
    Circuit c;
    CellNets n;
    n.cue = c.add_net("cue", NetRole::cue);
    n.cue_bar = c.add_net("cue_bar", NetRole::cue_bar);
    n.mid = c.add_net("mid", NetRole::mid);
    n.ml = c.add_net("ml", NetRole::ml);
    n.psw = c.add_net("psw", NetRole::psw);
    n.sw = c.add_net("sw", NetRole::sw);
    n.pre = c.add_net("pre", NetRole::pre);
    n.en = c.add_net("en", NetRole::en);
    n.x = c.add_net("x", NetRole::internal);
    n.vsec = c.add_net("vsec", NetRole::vsec);
    add_cell(c, cfg, n, "");
    c.add_capacitor(n.ml, c.gnd(), cfg.ml_load_f, "c_ml", ElementGroup::Line);
    c.add_switch(n.ml, n.vsec, n.pre, cfg.pre_r_on_ohms, 0.0, cfg.supplies.vdd, "pre_switch");
    return c;
}

void add_psw_periphery(Circuit& c, const CellConfig& cfg, NetId psw, NetId clr, NetId sec,
                       NetId vsec, double c_psw_f, const std::string& suffix) {
    const double vdd = cfg.supplies.vdd;
    c.add_capacitor(psw, c.gnd(), c_psw_f, "c_psw" + suffix, ElementGroup::Line);
    c.add_switch(psw, c.gnd(), clr, cfg.periphery_r_on_ohms, vdd, 0.0, "q5" + suffix);
    c.add_switch(psw, vsec, sec, cfg.periphery_r_on_ohms, vdd, 0.0, "sec_switch" + suffix);
}

Circuit build_aar_netlist(const CellConfig& cfg, double c_psw_f) {
    if (!(std::isfinite(c_psw_f) && c_psw_f > 0.0)) throw ValidationError("c_psw_f must be positive");
    Circuit c = build_cell_netlist(cfg);
    const auto clr = c.add_net("clr", NetRole::clr);
    const auto sec = c.add_net("sec", NetRole::sec);
    add_psw_periphery(c, cfg, c.net("psw"), clr, sec, c.net("vsec"), c_psw_f, "");
    return c;
}

// ---------------------------------------------------------------------------
// Schedules

double PhaseSchedule::marker(std::string_view name) const {
    for (const auto& m : markers)
        if (m.name == name) return m.t_s;
    throw ValidationError("schedule has no marker '" + std::string(name) + "'");
}

bool PhaseSchedule::has_marker(std::string_view name) const {
    return std::any_of(markers.begin(), markers.end(),
                       [&](const PhaseMarker& m) { return m.name == name; });
}

void PhaseSchedule::validate() const {
    for (std::size_t k = 1; k < markers.size(); ++k)
        if (markers[k].t_s < markers[k - 1].t_s)
            throw ValidationError("schedule markers out of order at '" + markers[k].name + "'");
    if (has_marker("sample")) {
        const double t = marker("sample");
        if (t < 0.0 || t > t_end_s) throw ValidationError("sample marker outside the window");
    }
}

void apply_schedule(Circuit& c, const PhaseSchedule& s) {
    for (const auto& name : s.released) c.release(c.net(name));
    for (const auto& [name, w] : s.waveforms) c.drive(c.net(name), w);
}

PhaseSchedule repeat_schedule(const PhaseSchedule& s, int n) {
    if (n < 1) throw ValidationError("repeat count must be >= 1");
    PhaseSchedule out = s;
    const double period = s.t_end_s;
    out.t_end_s = period * n;
    for (auto& [name, w] : out.waveforms) {
        const auto& base = s.waveforms.at(name).breakpoints();
        std::vector<std::pair<double, double>> pts;
        for (int k = 0; k < n; ++k) {
            for (const auto& [t, v] : base) {
                const double tt = t + period * k;
                if (!pts.empty() && tt <= pts.back().first) {
                    if (v != pts.back().second)
                        throw ValidationError("waveform '" + name + "' is not periodic");
                    continue;
                }
                pts.emplace_back(tt, v);
            }
        }
        w = PwlWaveform(std::move(pts));
    }
    for (auto& m : out.markers) m.t_s += period * (n - 1);
    return out;
}

void write_schedule_csv(std::ostream& out, const PhaseSchedule& s) {
    out << "# net,time_s,voltage_v: breakpoints of every driven net\n";
    out << "net,time_s,voltage_v\n";
    out << std::setprecision(12);
    for (const auto& [name, w] : s.waveforms)
        for (const auto& [t, v] : w.breakpoints()) out << name << ',' << t << ',' << v << '\n';
}

namespace {

/// Builds a PWL from an initial level and a list of ramps (start, duration, target).
class Ramps {
public:
    Ramps(double t_end, double initial) : t_end_(t_end) { pts_.emplace_back(0.0, initial); }

    Ramps& to(double t_start, double duration, double target) {
        const double level = pts_.back().second;
        if (t_start > pts_.back().first) pts_.emplace_back(t_start, level);
        pts_.emplace_back(t_start + duration, target);
        return *this;
    }

    PwlWaveform done() {
        if (pts_.back().first < t_end_) pts_.emplace_back(t_end_, pts_.back().second);
        return PwlWaveform(pts_);
    }

private:
    double t_end_;
    std::vector<std::pair<double, double>> pts_;
};

}  // namespace

PhaseSchedule schedule_car(CueValue cue, const CellConfig& cfg) {
    const auto& tm = cfg.timing;
    const double T = tm.clock_period_s;
    const double e = tm.edge_s;
    const double vdd = cfg.supplies.vdd;
    const double vsec = cfg.supplies.vsec;
    const double t_end = 3.0 * T;
    const double sw_off = tm.cycles(tm.sw_width_cycles);
    const double pre_off = tm.cycles(tm.pre_width_cycles);
    const double en_on = tm.cycles(tm.en_start_cycles);
    const double en_off = en_on + tm.cycles(tm.en_width_cycles);
    const double fall = tm.cycles(tm.cue_fall_cycles);
    const auto [v_cue, v_cue_bar] = cue_levels(cue, vsec);

    PhaseSchedule s;
    s.clock_period_s = T;
    s.t_end_s = t_end;
    s.waveforms["sw"] = Ramps(t_end, vdd).to(sw_off - e, e, 0.0).to(t_end - e, e, vdd).done();
    s.waveforms["pre"] = Ramps(t_end, vdd).to(0.0, e, 0.0).to(pre_off - e, e, vdd).done();
    s.waveforms["en"] = Ramps(t_end, 0.0).to(en_on, e, vdd).to(en_off - e, e, 0.0).done();
    auto cue_wave = [&](double level) {
        if (level == 0.0) return PwlWaveform({{0.0, 0.0}, {t_end, 0.0}});
        return Ramps(t_end, 0.0).to(sw_off, tm.cue_rise_s, level).to(fall, tm.cue_rise_s, 0.0).done();
    };
    s.waveforms["cue"] = cue_wave(v_cue);
    s.waveforms["cue_bar"] = cue_wave(v_cue_bar);
    s.waveforms["psw"] = cue_wave(v_cue_bar);
    s.waveforms["vsec"] = PwlWaveform({{0.0, vsec}, {t_end, vsec}});
    s.markers = {{"pre_charge", 0.0},
                 {"cue_rise", sw_off},
                 {"enable", en_on + 0.5 * e},
                 {"sample", tm.cycles(tm.sample_cycles)},
                 {"end", t_end}};
    s.validate();
    return s;
}

PhaseSchedule schedule_aar(const CellConfig& cfg, bool inject) {
    const auto& tm = cfg.timing;
    const double T = tm.clock_period_s;
    const double e = tm.edge_s;
    const double vdd = cfg.supplies.vdd;
    const double vsec = cfg.supplies.vsec;
    const double t_end = 3.0 * T;
    const double clr_off = tm.cycles(tm.clr_width_cycles);
    const double sec_on = clr_off + e;
    const double sec_off = sec_on + tm.sec_pulse_s;
    const double sw_on = sec_off + e;

    PhaseSchedule s;
    s.clock_period_s = T;
    s.t_end_s = t_end;
    s.released = {"psw"};
    s.waveforms["cue"] = PwlWaveform({{0.0, 0.0}, {t_end, 0.0}});
    s.waveforms["cue_bar"] = PwlWaveform({{0.0, 0.0}, {t_end, 0.0}});
    s.waveforms["pre"] = PwlWaveform({{0.0, vdd}, {t_end, vdd}});
    s.waveforms["en"] = PwlWaveform({{0.0, 0.0}, {t_end, 0.0}});
    s.waveforms["vsec"] = PwlWaveform({{0.0, vsec}, {t_end, vsec}});
    s.waveforms["sw"] = Ramps(t_end, vdd).to(clr_off - e, e, 0.0).to(sw_on, e, vdd).done();
    s.waveforms["clr"] = Ramps(t_end, vdd).to(clr_off - e, e, 0.0).done();
    if (inject)
        s.waveforms["sec"] = Ramps(t_end, 0.0).to(sec_on, e, vdd).to(sec_off, e, 0.0).done();
    else
        s.waveforms["sec"] = PwlWaveform({{0.0, 0.0}, {t_end, 0.0}});
    s.markers = {{"clear", 0.0},
                 {"sec_pulse", sec_on},
                 {"sw_on", sw_on},
                 {"sample", tm.cycles(tm.aar_sample_cycles)},
                 {"end", t_end}};
    s.validate();
    return s;
}

PhaseSchedule schedule_write(WriteDirection direction, const CellConfig& cfg, bool pulse_sw) {
    const auto& tm = cfg.timing;
    const double T = tm.clock_period_s;
    const double e = tm.edge_s;
    const double vdd = cfg.supplies.vdd;
    const double t_end = 3.0 * T;
    const double w_on = tm.cycles(tm.write_start_cycles);
    const double w_off = w_on + tm.cycles(tm.write_width_cycles);
    const bool fwd = direction == WriteDirection::Forward;

    PhaseSchedule s;
    s.clock_period_s = T;
    s.t_end_s = t_end;
    auto pulse = [&](double level) {
        return Ramps(t_end, 0.0).to(w_on, e, level).to(w_off - e, e, 0.0).done();
    };
    const PwlWaveform zero({{0.0, 0.0}, {t_end, 0.0}});
    s.waveforms["cue"] = fwd ? pulse(vdd) : zero;
    s.waveforms["psw"] = fwd ? zero : pulse(vdd);
    s.waveforms["cue_bar"] = zero;
    s.waveforms["sw"] = pulse_sw ? pulse(vdd) : zero;
    s.waveforms["pre"] = PwlWaveform({{0.0, vdd}, {t_end, vdd}});
    s.waveforms["en"] = zero;
    s.waveforms["vsec"] = PwlWaveform({{0.0, cfg.supplies.vsec}, {t_end, cfg.supplies.vsec}});
    s.markers = {{"write_start", w_on}, {"write_end", w_off}, {"end", t_end}};
    s.validate();
    return s;
}

WriteResult apply_write(WriteDirection direction, const CellConfig& cfg, bool pulse_sw) {
    Circuit c = build_cell_netlist(cfg);
    const auto s = schedule_write(direction, cfg, pulse_sw);
    apply_schedule(c, s);
    const double t_mid = 0.5 * (s.marker("write_start") + s.marker("write_end"));
    const auto dc = dc_operating_point(c, {}, cfg.solver, t_mid);
    WriteResult r;
    r.before = cfg.rram.state;
    r.v_rram_v = dc.voltages.at("cue") - dc.voltages.at("mid");
    r.i_a = iv_current(cfg.rram, r.v_rram_v);
    r.after = r.before;
    if (r.v_rram_v >= cfg.set_threshold_v) r.after = ResistiveState::lrs();
    if (r.v_rram_v <= cfg.reset_threshold_v) r.after = ResistiveState::hrs();
    return r;
}

TransientTrace run_schedule(Circuit& c, const PhaseSchedule& s, const CellConfig& cfg,
                            std::map<std::string, double> initial) {
    apply_schedule(c, s);
    for (const auto& n : c.nets())
        if (n.role == NetRole::ml && !initial.contains(n.name))
            initial[n.name] = cfg.supplies.vsec;
    return transient_solve(c, cfg.timing.dt_s(), s.t_end_s, initial, cfg.solver);
}

TruthRow evaluate_truth_table(CueValue cue, const ResistiveState& stored, const CellConfig& cfg) {
    const CellConfig cell = cfg.with_state(stored);
    Circuit c = build_cell_netlist(cell);
    const auto s = schedule_car(cue, cell);
    const auto tr = run_schedule(c, s, cell);
    TruthRow row;
    row.cue = cue;
    row.stored = stored;
    row.v_mid_enable_v = tr.voltage_at("mid", s.marker("enable"));
    row.v_ml_sample_v = tr.voltage_at("ml", s.marker("sample"));
    row.mid_level = row.v_mid_enable_v > cell.q2.vth ? Level::High : Level::Low;
    row.ml_level = row.v_ml_sample_v >= 0.5 * cell.supplies.vsec ? Level::High : Level::Low;
    return row;
}

}  // namespace camsim
