#pragma once

// Data-driven static IV model of the RRAM device:
//
//   i(v) = a_p / RS * (1 - exp(-b_p v))   for v > 0
//   i(v) = a_n / RS * (1 - exp(-b_n v))   for v < 0
//
// RS is the resistance quoted at the 0.2 V read-out point. The positive branch
// saturates at a_p / RS, the negative branch grows exponentially (diode-like).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace camsim {

inline constexpr double kReadoutVoltage = 0.2;
inline constexpr double kLrsOhms = 112e3;
inline constexpr double kHrsOhms = 8.04e6;
inline constexpr double kDefaultCurvature = 5.0;   // 1/V
inline constexpr double kDefaultCmrFarads = 2.2e-15;

enum class StateLabel { LRS, HRS, Custom };

struct ResistiveState {
    StateLabel label = StateLabel::Custom;
    double rs_ohms = 0.0;

    static ResistiveState lrs() { return {StateLabel::LRS, kLrsOhms}; }
    static ResistiveState hrs() { return {StateLabel::HRS, kHrsOhms}; }

    friend bool operator==(const ResistiveState&, const ResistiveState&) = default;
};

[[nodiscard]] std::string to_string(StateLabel label);
[[nodiscard]] StateLabel state_label_from_string(const std::string& s);

/// Fitted parameters of one resistive state plus the MIM parasitic capacitance.
struct RramParams {
    ResistiveState state;
    double a_p = 0.0;
    double b_p = 0.0;
    double a_n = 0.0;
    double b_n = 0.0;
    double c_mr_f = kDefaultCmrFarads;

    /// Parameters whose positive branch passes exactly through (0.2 V, 0.2 V / RS);
    /// the negative branch mirrors the positive one.
    static RramParams calibrated(ResistiveState state, double b = kDefaultCurvature,
                                 double c_mr_f = kDefaultCmrFarads);

    /// Throws ValidationError on non-positive or non-finite fields.
    void validate() const;

    /// Relative error of a_p (1 - exp(-0.2 b_p)) against 0.2.
    [[nodiscard]] double readout_error() const;

    friend bool operator==(const RramParams&, const RramParams&) = default;
};

[[nodiscard]] double iv_current(const RramParams& params, double v);

/// di/dv of the IV model. At exactly v = 0 the average of the one-sided slopes.
[[nodiscard]] double small_signal_conductance(const RramParams& params, double v);

/// a_p such that iv_current(0.2 V) == 0.2 / rs_ohms.
[[nodiscard]] double calibrate_prefactor(double b_p, double rs_ohms);

struct IvPoint {
    double v = 0.0;
    double i = 0.0;
};

struct IvSweep {
    std::vector<IvPoint> points;
    /// Currents with magnitude below this are treated as zero.
    double noise_floor_a = 0.0;

    void validate() const;
};

/// Two-column CSV (volts, amperes). Optional header line, '#' comments.
[[nodiscard]] IvSweep read_iv_csv(std::istream& in);
[[nodiscard]] IvSweep read_iv_csv_file(const std::string& path);
void write_iv_csv(std::ostream& out, const IvSweep& sweep);

/// Sample the model on a uniform bipolar grid, optionally with multiplicative
/// log-normal noise of relative width `noise_sigma`.
[[nodiscard]] IvSweep synthesize_sweep(const RramParams& params, double v_min, double v_max,
                                       int n_points, double noise_sigma = 0.0,
                                       std::uint64_t seed = 0);

struct FitOptions {
    double b_min = 0.01;
    double b_max = 100.0;
    int grid_points = 241;
    int max_iterations = 100;
    double damping = 0.7;
    bool require_both_polarities = false;
    int min_points_per_polarity = 8;
};

struct BranchFit {
    double a = 0.0;
    double b = 0.0;
    double rms_log = 0.0;
    bool boundary_hit = false;
    int iterations = 0;
    std::size_t n_points = 0;
};

struct FitResult {
    RramParams params;
    double fit_rms_log = 0.0;
    BranchFit positive;
    std::optional<BranchFit> negative;
    std::vector<std::string> diagnostics;

    [[nodiscard]] bool boundary_hit() const {
        return positive.boundary_hit || (negative && negative->boundary_hit);
    }
};

/// Least-squares fit of log|i| per polarity: grid pre-search over b followed by
/// damped Gauss-Newton on (log a, b). Throws FitError on degenerate sweeps.
[[nodiscard]] FitResult fit_iv_params(const IvSweep& sweep, double rs_ohms,
                                      const FitOptions& options = {});

/// Sum of squared log-residuals of one branch for fixed b, with a at its optimum.
[[nodiscard]] double branch_log_sse(const IvSweep& sweep, double rs_ohms, double b, bool positive);

// Model card: {state, rs_ohms, a_p, b_p, a_n, b_n, c_mr_f, fit_rms_log}
[[nodiscard]] nlohmann::json to_model_card(const RramParams& params, double fit_rms_log = 0.0);
[[nodiscard]] RramParams from_model_card(const nlohmann::json& card);

}  // namespace camsim
