#pragma once

// Match-line columns built from cells, latch-comparator decisions, bit reads on
// the psw line and per-driver energy accounting.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "camsim/cam_cell.hpp"

namespace camsim {

struct ArrayConfig {
    int rows = 64;
    int cols = 64;
    double c_ml_f = 50e-15;           // per column
    double c_psw_f = 100e-15;         // per row
    double driver_load_f = 20e-15;    // output load of a driver serving 64 cells
    CellConfig cell;
    double vref_car_v = 1.16;
    double vref_aar_v = 0.79;
    double comparator_offset_v = 0.0;
    double comparator_sigma_v = 0.0;  // per-column Gaussian offset, drawn from `seed`
    std::uint64_t seed = 1;
    double comparator_energy_j = 5e-15;  // per decision
    int warmup_searches = 1;             // searches run before the metered one
    double min_aar_margin_v = 10e-3;

    void validate() const;
    friend bool operator==(const ArrayConfig&, const ArrayConfig&) = default;
};

using DataWord = std::vector<ResistiveState>;
using CueWord = std::vector<CueValue>;

/// 'H' / 'L' per row; throws ValidationError naming the offending position.
[[nodiscard]] DataWord parse_data_word(std::string_view pattern, int rows);
/// '1' / '0' / 'X' per row.
[[nodiscard]] CueWord parse_cue_word(std::string_view pattern, int rows);
[[nodiscard]] std::string to_pattern(const DataWord& d);
[[nodiscard]] std::string to_pattern(const CueWord& c);

/// Count of rows whose cue disagrees with the stored bit ('1' <-> HRS).
[[nodiscard]] int miss_count(const DataWord& data, const CueWord& cue);

enum class Decision { Hit, Miss };

[[nodiscard]] std::string to_string(Decision d);

/// Ideal clocked comparator; ties resolve to Hit.
[[nodiscard]] Decision decide(double ml_sample_v, double vref_v, double offset_v = 0.0);

struct EnergyReport {
    std::map<std::string, double> per_phase_j;   // pre_charge, evaluate
    std::map<std::string, double> per_driver_j;  // cue, cue_bar, psw, pre, en, sw, comparators
    double core_j = 0.0;                         // dissipated inside cell devices
    double periphery_j = 0.0;
    double total_j = 0.0;
    int bits = 0;
    int searches = 0;

    [[nodiscard]] double per_bit_j() const;
    [[nodiscard]] double core_share() const { return total_j > 0.0 ? core_j / total_j : 0.0; }
    EnergyReport& operator+=(const EnergyReport& other);
};

struct SearchOutcome {
    double ml_sample_v = 0.0;
    double vref_v = 0.0;
    Decision decision = Decision::Hit;
    int miss_count_truth = 0;
    EnergyReport energy;
};

/// `rows` cells on one match-line carrying c_ml_f; row nets carry a `_k` suffix.
[[nodiscard]] Circuit build_matchline(const DataWord& data, const ArrayConfig& cfg);

/// Search schedule with per-row cue nets (cue_k, cue_bar_k, psw_k).
[[nodiscard]] PhaseSchedule schedule_search(const CueWord& cue, const ArrayConfig& cfg);

struct SearchRun {
    SearchOutcome outcome;
    TransientTrace trace;
    PhaseSchedule schedule;
};

/// Warm-up searches followed by the metered one; comparator offset of `column`.
[[nodiscard]] SearchRun run_search_traced(const DataWord& data, const CueWord& cue,
                                         const ArrayConfig& cfg, int column = 0);
[[nodiscard]] SearchOutcome run_search(const DataWord& data, const CueWord& cue,
                                       const ArrayConfig& cfg, int column = 0);

/// Energy of the last search in the trace. Row-line driver loads are shared by
/// the `cfg.cols` columns; column drivers load scales with `cfg.rows`.
[[nodiscard]] EnergyReport account_energy(const TransientTrace& trace,
                                          const PhaseSchedule& schedule,
                                          const ArrayConfig& cfg);

/// Input-referred offset of the comparator on `column`.
[[nodiscard]] double comparator_offset(const ArrayConfig& cfg, int column);

/// Independent columns under one cue; results in column order. `jobs` > 1 runs
/// columns on worker threads.
[[nodiscard]] std::vector<SearchOutcome> array_search_parallel(
    const std::vector<DataWord>& all_data, const CueWord& cue, const ArrayConfig& cfg,
    int jobs = 1);

/// Sum of column reports; equals the row-shared accounting because each column
/// carries 1/cols of every row-line load.
[[nodiscard]] EnergyReport total_energy(const std::vector<SearchOutcome>& outcomes);

struct AarRead {
    int bit = 0;
    double psw_sample_v = 0.0;
};

[[nodiscard]] AarRead run_aar_row(const ResistiveState& data_bit, const ArrayConfig& cfg);

struct AarCalibration {
    double hrs_level_v = 0.0;
    double lrs_level_v = 0.0;
    double vref_v = 0.0;
    bool ok = false;
    std::string message;
};

/// Midpoint of the two read levels; not ok when the margin is below
/// `min_aar_margin_v` or the levels are inverted.
[[nodiscard]] AarCalibration calibrate_aar(const ArrayConfig& cfg);

/// Checks `cfg.vref_aar_v` against freshly measured levels.
[[nodiscard]] AarCalibration check_aar_reference(const ArrayConfig& cfg);

}  // namespace camsim
