#pragma once

// Scenario harnesses: the 4x4 functional suite and its hit/miss gap, V_SEC and
// corner sweeps, match-line timing, per-bit energy maps, write ESR sweeps and
// bit-read suites.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "camsim/cam_array.hpp"

namespace camsim {

struct CornerModel {
    std::string name = "tt";
    double vth_scale = 1.0;
    double k_scale = 1.0;

    /// ff, fs, tt, sf or ss.
    static CornerModel named(std::string_view name);
    static std::vector<CornerModel> all();
};

/// Scales vth and k of every transistor in the cell.
[[nodiscard]] ArrayConfig apply_corner(ArrayConfig cfg, const CornerModel& corner);

struct SweepPlan {
    std::string parameter = "supplies.vsec";
    double start = 1.0;
    double stop = 1.35;
    double step = 0.01;
    int warmup_searches = 0;

    void validate() const;
    [[nodiscard]] std::vector<double> points() const;
};

/// Data patterns and their matching cues, in suite order:
/// all '1', all '0', '1' except row 0, '0' except row 0.
[[nodiscard]] std::array<DataWord, 4> table2_data(int rows);
[[nodiscard]] std::array<CueWord, 4> table2_cues(int rows);

/// Cells compared for the gap: the diagonal (hits) and one worst-case single
/// miss per cue pattern. Indexed [cue][data].
[[nodiscard]] bool is_diagonal(int cue, int data);
[[nodiscard]] bool is_worst_miss(int cue, int data);

struct GapReport {
    double min_hit_v = 0.0;
    double max_worst_miss_v = 0.0;
    double gap_v = 0.0;
    double reference_gap_v = 36.18e-3;  // silicon figure, reported only
    std::array<std::array<double, 4>, 4> ml_sample_v{};
    std::array<std::array<bool, 4>, 4> measured{};
};

struct Table2Result {
    double vsec_v = 0.0;
    double vref_car_v = 0.0;
    std::array<std::array<Decision, 4>, 4> decisions{};
    std::array<std::array<Decision, 4>, 4> expected{};
    std::array<std::array<int, 4>, 4> miss_counts{};
    std::array<std::array<EnergyReport, 4>, 4> energy{};
    GapReport gap;
    std::vector<std::string> misclassified;

    [[nodiscard]] bool matches() const { return misclassified.empty(); }
};

/// Runs all sixteen searches; with `calibrate` the reference is the midpoint of
/// [max worst miss, min hit], otherwise cfg.vref_car_v.
[[nodiscard]] Table2Result run_table2_suite(const ArrayConfig& cfg, bool calibrate = true,
                                            int jobs = 1);

/// Only the eight gap cells; no decisions.
[[nodiscard]] GapReport measure_gap(const ArrayConfig& cfg, int jobs = 1);

struct SweepPoint {
    double x = 0.0;
    double gap_v = 0.0;
    double min_hit_v = 0.0;
    double max_worst_miss_v = 0.0;
    bool ok = true;
    std::string error;
};

struct GapCurve {
    std::string corner;
    std::vector<SweepPoint> points;
    std::optional<double> argmax;
    bool unimodal = true;
};

/// Gap versus V_SEC; a failed point is recorded and the sweep continues.
[[nodiscard]] GapCurve sweep_vsec(const SweepPlan& plan, const CornerModel& corner,
                                  const ArrayConfig& cfg, int jobs = 1);

/// True when the sequence rises then falls (plateaus allowed), ignoring
/// wiggles smaller than `tolerance`.
[[nodiscard]] bool is_unimodal(const std::vector<double>& y, double tolerance);

struct TimingReport {
    std::optional<double> developing_delay_hrs_s;  // searching '1' against all-'0' data
    std::optional<double> developing_delay_lrs_s;  // searching '0' against all-'1' data
    double pre_charge_s = 0.0;                     // pre-charge start to enable
    std::optional<double> evaluate_s;              // slower of the two delays
    std::optional<double> search_delay_s;          // pre_charge_s + evaluate_s
    double threshold_v = 0.0;
};

/// All-miss searches of both polarities; delay from the enable instant until ml
/// falls through 10 % of V_SEC.
[[nodiscard]] TimingReport measure_search_timing(const ArrayConfig& cfg);

struct EnergyMap {
    std::array<std::array<double, 4>, 4> per_bit_j{};
    EnergyReport breakdown;  // sum over the sixteen searches
    std::array<int, 2> worst{};
    std::array<int, 2> best{};
};

[[nodiscard]] EnergyMap energy_map(const Table2Result& suite);
[[nodiscard]] EnergyMap energy_map(const ArrayConfig& cfg, int jobs = 1);

struct EsrPoint {
    double r_ohms = 0.0;
    double v_across_v = 0.0;
    double i_a = 0.0;
    bool ok = true;
    std::string error;
};

/// 25 log-spaced values over [10, 1e5] ohms.
[[nodiscard]] std::vector<double> default_esr_grid();

/// Write stack with the RRAM replaced by a linear resistor `r_ohms`.
[[nodiscard]] Circuit build_write_stack(WriteDirection direction, const CellConfig& cfg,
                                        double r_ohms);

[[nodiscard]] std::vector<EsrPoint> write_esr_sweep(WriteDirection direction,
                                                    const std::vector<double>& resistances,
                                                    const CellConfig& cfg);

struct AarReadRecord {
    int row = 0;
    bool stored_one = false;
    int bit = 0;
    double psw_sample_v = 0.0;
    bool correct = false;
};

struct AarSuiteReport {
    AarCalibration calibration;
    std::vector<AarReadRecord> reads;
    int n_correct = 0;

    [[nodiscard]] bool all_correct() const {
        return calibration.ok && n_correct == static_cast<int>(reads.size());
    }
};

/// Reads every row of `column`, or of an all-'1' and an all-'0' column when
/// `column` is empty, using cfg.vref_aar_v.
[[nodiscard]] AarSuiteReport run_aar_suite(const ArrayConfig& cfg,
                                           const std::vector<DataWord>& columns = {});

}  // namespace camsim
