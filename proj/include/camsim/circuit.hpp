#pragma once

// Minimal nonlinear circuit engine: DC operating point and fixed-step implicit
// Euler transient over capacitors, RRAM branches, square-law nMOS devices,
// controlled switches and linear test resistors. Driven nets are ideal voltage
// sources whose delivered charge and energy are metered.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "camsim/device_model.hpp"

namespace camsim {

enum class NetRole {
    cue, cue_bar, psw, sw, pre, en, ml, mid, clr, sec, pri, supsw, gnd, vdd, vsec, internal
};

[[nodiscard]] std::string to_string(NetRole role);

struct NetId {
    int index = -1;

    [[nodiscard]] bool valid() const { return index >= 0; }
    friend auto operator<=>(const NetId&, const NetId&) = default;
};

struct Net {
    std::string name;
    NetRole role = NetRole::internal;
};

/// Square-law nMOS. Source and drain are interchangeable.
struct MosParams {
    double vth = 0.5;   // V
    double k = 2e-4;    // A/V^2
    double ioff = 0.0;  // A

    void validate() const;
    friend bool operator==(const MosParams&, const MosParams&) = default;
};

/// Drain-to-source current for the given terminal voltages.
[[nodiscard]] double mos_current(const MosParams& p, double vgs, double vds);

struct MosEval {
    double ids = 0.0;   // drain -> source
    double d_vg = 0.0;
    double d_vd = 0.0;
    double d_vs = 0.0;
};

[[nodiscard]] MosEval mos_eval(const MosParams& p, double vg, double vd, double vs);

/// Piecewise-linear waveform, clamped to its end values outside the breakpoints.
class PwlWaveform {
public:
    PwlWaveform() : points_{{0.0, 0.0}} {}
    explicit PwlWaveform(std::vector<std::pair<double, double>> breakpoints);

    static PwlWaveform constant(double volts) { return PwlWaveform({{0.0, volts}}); }

    [[nodiscard]] double operator()(double t) const;
    [[nodiscard]] const std::vector<std::pair<double, double>>& breakpoints() const {
        return points_;
    }
    [[nodiscard]] double max_value() const;
    /// Shortest segment over which the value changes; +inf for a constant.
    [[nodiscard]] double shortest_edge() const;

    friend bool operator==(const PwlWaveform&, const PwlWaveform&) = default;

private:
    std::vector<std::pair<double, double>> points_;
};

enum class ElementGroup { Cell, Line, Periphery };

[[nodiscard]] std::string to_string(ElementGroup group);

struct Capacitor {
    NetId a, b;
    double farads = 0.0;
};

struct Resistor {
    NetId a, b;
    double ohms = 0.0;
};

/// RRAM branch; positive voltage is v(top) - v(bottom).
struct Rram {
    NetId top, bottom;
    RramParams params;
};

struct Mosfet {
    NetId drain, gate, source;
    MosParams params;
};

/// Voltage-controlled switch. Conductance ramps linearly from g_off at
/// v(control) = v_off to 1/r_on at v(control) = v_on.
struct Switch {
    NetId a, b, control;
    double r_on = 5e3;
    double v_on = 0.0;
    double v_off = 1.8;
    double g_off = 0.0;
};

using Device = std::variant<Capacitor, Resistor, Rram, Mosfet, Switch>;

struct Element {
    std::string name;
    ElementGroup group = ElementGroup::Cell;
    Device device;
};

struct Source {
    NetId net;
    PwlWaveform waveform;
    double rail_v = 0.0;  // supply level the driver sources its charge from
};

class Circuit {
public:
    Circuit();

    NetId add_net(std::string name, NetRole role = NetRole::internal);
    [[nodiscard]] NetId gnd() const { return NetId{0}; }
    [[nodiscard]] NetId net(std::string_view name) const;
    [[nodiscard]] std::optional<NetId> find_net(std::string_view name) const;
    [[nodiscard]] const Net& net_info(NetId id) const { return nets_.at(id.index); }
    [[nodiscard]] const std::vector<Net>& nets() const { return nets_; }

    std::size_t add_capacitor(NetId a, NetId b, double farads, std::string name,
                              ElementGroup group = ElementGroup::Cell);
    std::size_t add_resistor(NetId a, NetId b, double ohms, std::string name,
                             ElementGroup group = ElementGroup::Cell);
    std::size_t add_rram(NetId top, NetId bottom, const RramParams& params, std::string name,
                         ElementGroup group = ElementGroup::Cell);
    std::size_t add_mosfet(NetId drain, NetId gate, NetId source, const MosParams& params,
                           std::string name, ElementGroup group = ElementGroup::Cell);
    std::size_t add_switch(NetId a, NetId b, NetId control, double r_on, double v_on,
                           double v_off, std::string name,
                           ElementGroup group = ElementGroup::Periphery);

    [[nodiscard]] const std::vector<Element>& elements() const { return elements_; }
    [[nodiscard]] Element& element(std::string_view name);
    [[nodiscard]] const Element& element(std::string_view name) const;

    /// Attach an ideal PWL source to `net`; `rail_v` defaults to the waveform maximum.
    void drive(NetId net, PwlWaveform waveform, std::optional<double> rail_v = std::nullopt);
    void fix(NetId net, double volts) { drive(net, PwlWaveform::constant(volts), volts); }
    void release(NetId net);
    [[nodiscard]] bool is_driven(NetId net) const;
    [[nodiscard]] const std::vector<Source>& sources() const { return sources_; }
    [[nodiscard]] const Source* source_for(NetId net) const;

    /// Throws ValidationError on dangling nets or invalid element values.
    void validate() const;

private:
    std::size_t push(Element e);

    std::vector<Net> nets_;
    std::map<std::string, int, std::less<>> net_index_;
    std::vector<Element> elements_;
    std::map<std::string, std::size_t, std::less<>> element_index_;
    std::vector<Source> sources_;
};

struct SolverSettings {
    double newton_damping = 0.7;      // backtracking ratio when a step raises the residual
    int max_newton_iterations = 50;
    double newton_tol_v = 1e-6;
    double kcl_tol_a = 1e-12;
    double gmin_s = 1e-12;            // shunt from every floating net to ground
    double max_step_v = 0.5;          // Newton voltage-step limit
    int max_step_halvings = 4;
    int dc_max_iterations = 400;

    friend bool operator==(const SolverSettings&, const SolverSettings&) = default;
};

struct DcSolution {
    std::map<std::string, double> voltages;
    std::map<std::string, double> source_currents;  // delivered into the circuit
    double worst_residual_a = 0.0;
    int iterations = 0;
    bool used_bisection = false;
};

/// Capacitors are open. Every driven net uses its waveform value at `time_s`
/// unless overridden in `fixed_biases`, which may also pin undriven nets.
[[nodiscard]] DcSolution dc_operating_point(const Circuit& circuit,
                                            const std::map<std::string, double>& fixed_biases,
                                            const SolverSettings& settings = {},
                                            double time_s = 0.0);

struct TransientTrace {
    std::vector<double> times;
    std::vector<std::string> net_names;
    std::vector<std::vector<double>> node_voltages;  // indexed like net_names

    // Per source, keyed by the driven net's name, cumulative from t = 0.
    std::map<std::string, std::vector<double>> source_charge;
    std::map<std::string, std::vector<double>> source_sourced_charge;  // positive part only
    std::map<std::string, std::vector<double>> source_energy;          // integral of v i dt
    std::map<std::string, double> source_rail_v;

    // Cumulative dissipation per element group and per element (final value).
    std::map<std::string, std::vector<double>> group_dissipation;
    std::map<std::string, double> element_dissipation;
    std::vector<double> stored_energy;  // total capacitor energy

    std::size_t newton_iterations = 0;
    std::size_t step_halvings = 0;

    [[nodiscard]] std::size_t size() const { return times.size(); }
    [[nodiscard]] bool has_net(std::string_view name) const;
    [[nodiscard]] const std::vector<double>& voltage(std::string_view name) const;
    /// Linear interpolation of `series` (sampled on `times`) at time t.
    [[nodiscard]] double at(const std::vector<double>& series, double t) const;
    [[nodiscard]] double voltage_at(std::string_view net, double t) const {
        return at(voltage(net), t);
    }
    [[nodiscard]] double total_source_energy() const;
    [[nodiscard]] double total_dissipation() const;
};

/// Implicit Euler with a Newton inner loop. Requires dt <= shortest source edge / 20.
/// `initial` sets floating-net voltages at t = 0 (others start at 0 V).
[[nodiscard]] TransientTrace transient_solve(const Circuit& circuit, double dt, double t_end,
                                             const std::map<std::string, double>& initial = {},
                                             const SolverSettings& settings = {});

enum class Direction { Rising, Falling };

/// First crossing of `threshold` after `window_start`, linearly interpolated.
[[nodiscard]] std::optional<double> measure_delay(const TransientTrace& trace,
                                                  std::string_view net, double threshold,
                                                  Direction direction, double window_start = 0.0);

/// CSV: time column plus one column per requested net (all nets when empty).
void write_trace_csv(std::ostream& out, const TransientTrace& trace,
                     const std::vector<std::string>& nets = {});

}  // namespace camsim
