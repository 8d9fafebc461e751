#include "camsim/cam_array.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include "camsim/errors.hpp"

namespace camsim {

void ArrayConfig::validate() const {
    if (rows < 1 || cols < 1) throw ValidationError("rows and cols must be >= 1");
    auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
    if (!positive(c_ml_f) || !positive(c_psw_f))
        throw ValidationError("array capacitances must be positive");
    if (!(driver_load_f >= 0.0) || !std::isfinite(driver_load_f))
        throw ValidationError("driver load must be >= 0");
    if (!std::isfinite(vref_car_v) || !std::isfinite(vref_aar_v))
        throw ValidationError("comparator references must be finite");
    if (!(comparator_sigma_v >= 0.0) || !std::isfinite(comparator_offset_v))
        throw ValidationError("comparator offset must be finite and sigma >= 0");
    if (!(comparator_energy_j >= 0.0)) throw ValidationError("comparator energy must be >= 0");
    if (warmup_searches < 0) throw ValidationError("warmup_searches must be >= 0");
    cell.validate();
}

DataWord parse_data_word(std::string_view pattern, int rows) {
    if (static_cast<int>(pattern.size()) != rows)
        throw ValidationError("data pattern has length " + std::to_string(pattern.size()) +
                              ", expected " + std::to_string(rows));
    DataWord d;
    d.reserve(pattern.size());
    for (std::size_t k = 0; k < pattern.size(); ++k) {
        const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(pattern[k])));
        if (c == 'H') d.push_back(ResistiveState::hrs());
        else if (c == 'L') d.push_back(ResistiveState::lrs());
        else
            throw ValidationError("data pattern: invalid symbol '" + std::string(1, pattern[k]) +
                                  "' at position " + std::to_string(k) + " (expected H or L)");
    }
    return d;
}

CueWord parse_cue_word(std::string_view pattern, int rows) {
    if (static_cast<int>(pattern.size()) != rows)
        throw ValidationError("cue pattern has length " + std::to_string(pattern.size()) +
                              ", expected " + std::to_string(rows));
    CueWord w;
    w.reserve(pattern.size());
    for (std::size_t k = 0; k < pattern.size(); ++k) {
        const char c = pattern[k];
        if (c != '1' && c != '0' && c != 'X' && c != 'x')
            throw ValidationError("cue pattern: invalid symbol '" + std::string(1, c) +
                                  "' at position " + std::to_string(k) + " (expected 1, 0 or X)");
        w.push_back(cue_from_char(c));
    }
    return w;
}

std::string to_pattern(const DataWord& d) {
    std::string s;
    for (const auto& st : d) s += st.rs_ohms >= std::sqrt(kLrsOhms * kHrsOhms) ? 'H' : 'L';
    return s;
}

std::string to_pattern(const CueWord& c) {
    std::string s;
    for (auto v : c) s += to_char(v);
    return s;
}

namespace {

bool is_one(const ResistiveState& s) { return s.rs_ohms >= std::sqrt(kLrsOhms * kHrsOhms); }

std::string row_net(const char* base, std::size_t k) { return std::string(base) + "_" + std::to_string(k); }

bool is_row_net(const std::string& name) {
    const auto pos = name.rfind('_');
    if (pos == std::string::npos || pos + 1 == name.size()) return false;
    return std::all_of(name.begin() + static_cast<long>(pos) + 1, name.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::string driver_category(const std::string& net) {
    if (net == "vsec") return "pre";
    if (!is_row_net(net)) return net;
    return net.substr(0, net.rfind('_'));
}

}  // namespace

int miss_count(const DataWord& data, const CueWord& cue) {
    if (data.size() != cue.size()) throw ValidationError("data and cue lengths differ");
    int n = 0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        if (cue[k] == CueValue::DontCare) continue;
        if ((cue[k] == CueValue::One) != is_one(data[k])) ++n;
    }
    return n;
}

std::string to_string(Decision d) { return d == Decision::Hit ? "hit" : "miss"; }

Decision decide(double ml_sample_v, double vref_v, double offset_v) {
    return ml_sample_v + offset_v >= vref_v ? Decision::Hit : Decision::Miss;
}

double EnergyReport::per_bit_j() const {
    const double n = static_cast<double>(bits) * std::max(searches, 1);
    return n > 0.0 ? total_j / n : 0.0;
}

EnergyReport& EnergyReport::operator+=(const EnergyReport& o) {
    for (const auto& [k, v] : o.per_phase_j) per_phase_j[k] += v;
    for (const auto& [k, v] : o.per_driver_j) per_driver_j[k] += v;
    core_j += o.core_j;
    periphery_j += o.periphery_j;
    total_j += o.total_j;
    bits += o.bits;
    searches = std::max(searches, o.searches);
    return *this;
}

Circuit build_matchline(const DataWord& data, const ArrayConfig& cfg) {
    cfg.validate();
    if (static_cast<int>(data.size()) != cfg.rows)
        throw ValidationError("data word has " + std::to_string(data.size()) + " rows, expected " +
                              std::to_string(cfg.rows));
    Circuit c;
    const auto ml = c.add_net("ml", NetRole::ml);
    const auto sw = c.add_net("sw", NetRole::sw);
    const auto pre = c.add_net("pre", NetRole::pre);
    const auto en = c.add_net("en", NetRole::en);
    const auto vsec = c.add_net("vsec", NetRole::vsec);
    for (std::size_t k = 0; k < data.size(); ++k) {
        CellNets n;
        n.cue = c.add_net(row_net("cue", k), NetRole::cue);
        n.cue_bar = c.add_net(row_net("cue_bar", k), NetRole::cue_bar);
        n.psw = c.add_net(row_net("psw", k), NetRole::psw);
        n.mid = c.add_net(row_net("mid", k), NetRole::mid);
        n.x = c.add_net(row_net("x", k), NetRole::internal);
        n.ml = ml;
        n.sw = sw;
        n.pre = pre;
        n.en = en;
        n.vsec = vsec;
        add_cell(c, cfg.cell.with_state(data[k]), n, "_" + std::to_string(k));
    }
    c.add_capacitor(ml, c.gnd(), cfg.c_ml_f, "c_ml", ElementGroup::Line);
    c.add_switch(ml, vsec, pre, cfg.cell.pre_r_on_ohms, 0.0, cfg.cell.supplies.vdd, "pre_switch");
    return c;
}

PhaseSchedule schedule_search(const CueWord& cue, const ArrayConfig& cfg) {
    if (static_cast<int>(cue.size()) != cfg.rows)
        throw ValidationError("cue word has " + std::to_string(cue.size()) + " rows, expected " +
                              std::to_string(cfg.rows));
    PhaseSchedule out;
    for (std::size_t k = 0; k < cue.size(); ++k) {
        auto s = schedule_car(cue[k], cfg.cell);
        if (k == 0) {
            out.clock_period_s = s.clock_period_s;
            out.t_end_s = s.t_end_s;
            out.markers = s.markers;
            for (const char* shared : {"sw", "pre", "en", "vsec"})
                out.waveforms[shared] = s.waveforms.at(shared);
        }
        for (const char* per_row : {"cue", "cue_bar", "psw"})
            out.waveforms[row_net(per_row, k)] = s.waveforms.at(per_row);
    }
    return out;
}

double comparator_offset(const ArrayConfig& cfg, int column) {
    if (cfg.comparator_sigma_v == 0.0) return cfg.comparator_offset_v;
    std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(column));
    std::normal_distribution<double> n(0.0, cfg.comparator_sigma_v);
    return cfg.comparator_offset_v + n(rng);
}

EnergyReport account_energy(const TransientTrace& trace, const PhaseSchedule& schedule,
                            const ArrayConfig& cfg) {
    const double t_end = schedule.marker("end");
    const double t_start = t_end - 3.0 * schedule.clock_period_s;
    const double t_enable = schedule.marker("enable");
    EnergyReport r;
    r.bits = cfg.rows;
    r.searches = 1;
    r.per_phase_j["pre_charge"] = 0.0;
    r.per_phase_j["evaluate"] = 0.0;
    for (const char* d : {"cue", "cue_bar", "psw", "pre", "en", "sw", "comparators"})
        r.per_driver_j[d] = 0.0;

    auto add = [&](const std::string& driver, double pre_j, double eval_j) {
        r.per_driver_j[driver] += pre_j + eval_j;
        r.per_phase_j["pre_charge"] += pre_j;
        r.per_phase_j["evaluate"] += eval_j;
    };

    // Supply energy of each driver: rail voltage times the charge it sources.
    for (const auto& [net, q] : trace.source_sourced_charge) {
        const double rail = trace.source_rail_v.at(net);
        const double q0 = trace.at(q, t_start);
        const double q1 = trace.at(q, t_enable);
        const double q2 = trace.at(q, t_end);
        add(driver_category(net), rail * (q1 - q0), rail * (q2 - q1));
    }

    // Driver output loads, from the rising edges of each waveform.
    for (const auto& [net, w] : schedule.waveforms) {
        if (net == "vsec") continue;
        const double load = is_row_net(net) ? cfg.driver_load_f / 64.0
                                            : cfg.driver_load_f * cfg.rows / 64.0;
        const double rail = std::max(0.0, w.max_value());
        double pre_j = 0.0, eval_j = 0.0;
        const auto& pts = w.breakpoints();
        for (std::size_t k = 1; k < pts.size(); ++k) {
            const double dv = pts[k].second - pts[k - 1].second;
            if (dv <= 0.0 || pts[k].first <= t_start || pts[k - 1].first >= t_end) continue;
            (pts[k - 1].first < t_enable ? pre_j : eval_j) += load * rail * dv;
        }
        add(driver_category(net), pre_j, eval_j);
    }
    add("comparators", 0.0, cfg.comparator_energy_j);

    for (const auto& [_, v] : r.per_driver_j) r.total_j += v;
    const auto& cell = trace.group_dissipation.at("cell");
    r.core_j = trace.at(cell, t_end) - trace.at(cell, t_start);
    r.periphery_j = r.total_j - r.core_j;
    return r;
}

SearchRun run_search_traced(const DataWord& data, const CueWord& cue, const ArrayConfig& cfg,
                            int column) {
    Circuit c = build_matchline(data, cfg);
    const auto one = schedule_search(cue, cfg);
    const auto sched = repeat_schedule(one, cfg.warmup_searches + 1);
    apply_schedule(c, sched);
    const std::map<std::string, double> initial = {{"ml", cfg.cell.supplies.vsec}};
    SearchRun run{{}, transient_solve(c, cfg.cell.timing.dt_s(), sched.t_end_s, initial,
                                      cfg.cell.solver),
                  sched};
    auto& o = run.outcome;
    o.ml_sample_v = run.trace.voltage_at("ml", sched.marker("sample"));
    o.vref_v = cfg.vref_car_v;
    o.decision = decide(o.ml_sample_v, cfg.vref_car_v, comparator_offset(cfg, column));
    o.miss_count_truth = miss_count(data, cue);
    o.energy = account_energy(run.trace, sched, cfg);
    return run;
}

SearchOutcome run_search(const DataWord& data, const CueWord& cue, const ArrayConfig& cfg,
                         int column) {
    return run_search_traced(data, cue, cfg, column).outcome;
}

std::vector<SearchOutcome> array_search_parallel(const std::vector<DataWord>& all_data,
                                                 const CueWord& cue, const ArrayConfig& cfg,
                                                 int jobs) {
    if (static_cast<int>(all_data.size()) != cfg.cols)
        throw ValidationError("expected " + std::to_string(cfg.cols) + " data columns, got " +
                              std::to_string(all_data.size()));
    const auto n = all_data.size();
    std::vector<SearchOutcome> out(n);
    std::vector<std::string> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            try {
                out[k] = run_search(all_data[k], cue, cfg, static_cast<int>(k));
            } catch (const std::exception& e) {
                errors[k] = e.what();
            }
        }
    };
    const int workers = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    std::string failed;
    for (std::size_t k = 0; k < n; ++k)
        if (!errors[k].empty()) failed += "column " + std::to_string(k) + ": " + errors[k] + "; ";
    if (!failed.empty()) throw SolverError("array search failed: " + failed);
    return out;
}

EnergyReport total_energy(const std::vector<SearchOutcome>& outcomes) {
    EnergyReport r;
    for (const auto& o : outcomes) r += o.energy;
    return r;
}

AarRead run_aar_row(const ResistiveState& data_bit, const ArrayConfig& cfg) {
    cfg.validate();
    const CellConfig cell = cfg.cell.with_state(data_bit);
    Circuit c = build_aar_netlist(cell, cfg.c_psw_f);
    const auto s = schedule_aar(cell);
    const auto tr = run_schedule(c, s, cell);
    AarRead r;
    r.psw_sample_v = tr.voltage_at("psw", s.marker("sample"));
    r.bit = r.psw_sample_v >= cfg.vref_aar_v ? 1 : 0;
    return r;
}

AarCalibration calibrate_aar(const ArrayConfig& cfg) {
    AarCalibration cal;
    cal.hrs_level_v = run_aar_row(ResistiveState::hrs(), cfg).psw_sample_v;
    cal.lrs_level_v = run_aar_row(ResistiveState::lrs(), cfg).psw_sample_v;
    cal.vref_v = 0.5 * (cal.hrs_level_v + cal.lrs_level_v);
    const double margin = cal.hrs_level_v - cal.lrs_level_v;
    cal.ok = margin >= cfg.min_aar_margin_v;
    cal.message = cal.ok ? "ok"
                         : "HRS/LRS read margin " + std::to_string(margin * 1e3) +
                               " mV is below the minimum";
    return cal;
}

AarCalibration check_aar_reference(const ArrayConfig& cfg) {
    AarCalibration cal = calibrate_aar(cfg);
    const double v = cfg.vref_aar_v;
    cal.vref_v = v;
    if (!cal.ok) return cal;
    if (!(v > cal.lrs_level_v && v < cal.hrs_level_v)) {
        cal.ok = false;
        cal.message = "vref_aar " + std::to_string(v) + " V lies outside the read levels [" +
                      std::to_string(cal.lrs_level_v) + ", " + std::to_string(cal.hrs_level_v) +
                      "] V";
    }
    return cal;
}

}  // namespace camsim
