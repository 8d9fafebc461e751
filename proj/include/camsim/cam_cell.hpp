#pragma once

// 3T1R1C cell: RRAM (with its MIM parasitic C_mr) from cue to the floating mid
// node, C_b from mid to cue_bar, Q1 clearing mid onto psw, Q2/Q3 discharging the
// match-line. Schedules for search (CAR), bit read (AAR) and write.

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "camsim/circuit.hpp"
#include "camsim/device_model.hpp"

namespace camsim {

inline constexpr double kClockHz = 875e6;
inline constexpr double kVsecMin = 1.0;
inline constexpr double kVsecMax = 1.4;

enum class CueValue { One, Zero, DontCare };

[[nodiscard]] std::string to_string(CueValue cue);
[[nodiscard]] char to_char(CueValue cue);
[[nodiscard]] CueValue cue_from_char(char c);

struct Supplies {
    double vdd = 1.8;
    double vsec = 1.18;

    friend bool operator==(const Supplies&, const Supplies&) = default;
};

/// Drive levels (cue, cue_bar) for a searched value.
[[nodiscard]] std::pair<double, double> cue_levels(CueValue cue, double vsec);

/// Control timing. Positions are in clock cycles from the start of the
/// operation, durations of edges and pulses in seconds.
struct CellTiming {
    double clock_period_s = 1.0 / kClockHz;
    double edge_s = 100e-12;
    double cue_rise_s = 400e-12;
    double sw_width_cycles = 0.5;     // mid clear at the start of cycle 1
    double pre_width_cycles = 1.0;    // ml pre-charge, cycle 1
    double en_start_cycles = 1.0;
    double en_width_cycles = 1.0;     // evaluation, cycle 2
    double sample_cycles = 2.25;      // comparator strobe in cycle 3
    double cue_fall_cycles = 2.3;
    double clr_width_cycles = 0.25;   // AAR: psw cleared through Q5
    double sec_pulse_s = 1e-9;        // AAR: psw charged to V_SEC
    double aar_sample_cycles = 2.95;
    double write_start_cycles = 0.5;
    double write_width_cycles = 2.0;
    int steps_per_cycle = 256;

    [[nodiscard]] double dt_s() const { return clock_period_s / steps_per_cycle; }
    [[nodiscard]] double cycles(double c) const { return c * clock_period_s; }
    void validate() const;

    friend bool operator==(const CellTiming&, const CellTiming&) = default;
};

struct CellConfig {
    RramParams rram = RramParams::calibrated(ResistiveState::hrs());
    double c_b_f = 4e-15;
    MosParams q1, q2, q3;
    Supplies supplies;
    CellTiming timing;
    double pre_r_on_ohms = 5e3;
    double periphery_r_on_ohms = 100.0;  // clr / sec switches on the psw line
    double ml_load_f = 50e-15 / 64;  // one cell's share of a 64-row match-line
    double set_threshold_v = 1.0;    // v(cue) - v(mid) at or above this sets LRS
    double reset_threshold_v = -1.0; // at or below this resets to HRS
    SolverSettings solver;

    void validate() const;
    /// Same configuration with the RRAM re-calibrated to `state` (curvature and C_mr kept).
    [[nodiscard]] CellConfig with_state(const ResistiveState& state) const;

    friend bool operator==(const CellConfig&, const CellConfig&) = default;
};

/// Named nets of one cell inside a larger circuit.
struct CellNets {
    NetId cue, cue_bar, mid, ml, psw, sw, pre, en, x, vsec;
};

/// Adds one cell's devices. `suffix` is appended to every per-cell element name.
void add_cell(Circuit& c, const CellConfig& cfg, const CellNets& nets, const std::string& suffix);

/// Single cell with nets cue, cue_bar, mid, ml, psw, sw, pre, en, x, vsec and
/// the match-line load `ml_load_f`.
[[nodiscard]] Circuit build_cell_netlist(const CellConfig& cfg);

/// Periphery of one psw line: line capacitance, clear switch to ground (Q5,
/// control clr) and charge switch to V_SEC (control sec), both active high.
void add_psw_periphery(Circuit& c, const CellConfig& cfg, NetId psw, NetId clr, NetId sec,
                       NetId vsec, double c_psw_f, const std::string& suffix);

/// Cell netlist plus the psw periphery (nets clr, sec) for bit reads.
[[nodiscard]] Circuit build_aar_netlist(const CellConfig& cfg, double c_psw_f);

struct PhaseMarker {
    std::string name;
    double t_s = 0.0;
};

struct PhaseSchedule {
    double clock_period_s = 1.0 / kClockHz;
    double t_end_s = 0.0;
    std::map<std::string, PwlWaveform> waveforms;  // driven nets
    std::vector<std::string> released;             // nets left floating
    std::vector<PhaseMarker> markers;              // in time order

    [[nodiscard]] double marker(std::string_view name) const;
    [[nodiscard]] bool has_marker(std::string_view name) const;
    void validate() const;
};

/// Drives every waveform net and releases the listed ones.
void apply_schedule(Circuit& c, const PhaseSchedule& s);

/// `n` back-to-back copies; markers refer to the last copy.
[[nodiscard]] PhaseSchedule repeat_schedule(const PhaseSchedule& s, int n);

/// Rows: net,time_s,voltage_v for every breakpoint.
void write_schedule_csv(std::ostream& out, const PhaseSchedule& s);

/// Three-cycle search. Markers: pre_charge, cue_rise, enable, sample, end.
[[nodiscard]] PhaseSchedule schedule_car(CueValue cue, const CellConfig& cfg);

/// Three-cycle bit read. psw is released (it is the charge tank). Markers:
/// clear, sec_pulse, sw_on, sample, end. With `inject` false the sec pulse is omitted.
[[nodiscard]] PhaseSchedule schedule_aar(const CellConfig& cfg, bool inject = true);

enum class WriteDirection { Forward, Reverse };

[[nodiscard]] std::string to_string(WriteDirection d);
[[nodiscard]] WriteDirection write_direction_from_string(std::string_view s);

/// Write pulse. Markers: write_start, write_end, end.
[[nodiscard]] PhaseSchedule schedule_write(WriteDirection direction, const CellConfig& cfg,
                                           bool pulse_sw = true);

struct WriteResult {
    double v_rram_v = 0.0;       // v(cue) - v(mid) at the pulse
    double i_a = 0.0;            // current through the RRAM, cue -> mid
    ResistiveState before;
    ResistiveState after;
    [[nodiscard]] bool switched() const { return !(before == after); }
};

/// DC solve at the middle of the write pulse, then the discrete state update.
[[nodiscard]] WriteResult apply_write(WriteDirection direction, const CellConfig& cfg,
                                      bool pulse_sw = true);

enum class Level { Low, High };

[[nodiscard]] std::string to_string(Level l);

struct TruthRow {
    CueValue cue = CueValue::One;
    ResistiveState stored;
    Level mid_level = Level::Low;
    Level ml_level = Level::High;
    double v_mid_enable_v = 0.0;
    double v_ml_sample_v = 0.0;
};

/// Runs one search and thresholds mid at q2.vth (enable instant) and ml at V_SEC / 2.
[[nodiscard]] TruthRow evaluate_truth_table(CueValue cue, const ResistiveState& stored,
                                            const CellConfig& cfg);

/// Transient of a schedule over a circuit; initial floating-node voltages
/// default to 0 V with ml pre-charged to V_SEC.
[[nodiscard]] TransientTrace run_schedule(Circuit& c, const PhaseSchedule& s,
                                          const CellConfig& cfg,
                                          std::map<std::string, double> initial = {});

}  // namespace camsim
