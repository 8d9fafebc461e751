#include "camsim/circuit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "camsim/errors.hpp"

namespace camsim {

std::string to_string(NetRole role) {
    switch (role) {
        case NetRole::cue: return "cue";
        case NetRole::cue_bar: return "cue_bar";
        case NetRole::psw: return "psw";
        case NetRole::sw: return "sw";
        case NetRole::pre: return "pre";
        case NetRole::en: return "en";
        case NetRole::ml: return "ml";
        case NetRole::mid: return "mid";
        case NetRole::clr: return "clr";
        case NetRole::sec: return "sec";
        case NetRole::pri: return "pri";
        case NetRole::supsw: return "supsw";
        case NetRole::gnd: return "gnd";
        case NetRole::vdd: return "vdd";
        case NetRole::vsec: return "vsec";
        case NetRole::internal: return "internal";
    }
    return "internal";
}

std::string to_string(ElementGroup group) {
    switch (group) {
        case ElementGroup::Cell: return "cell";
        case ElementGroup::Line: return "line";
        case ElementGroup::Periphery: return "periphery";
    }
    return "periphery";
}

// ---------------------------------------------------------------------------
// MOSFET

void MosParams::validate() const {
    if (!(std::isfinite(vth) && vth > 0.0)) throw ValidationError("MOS vth must be positive");
    if (!(std::isfinite(k) && k > 0.0)) throw ValidationError("MOS k must be positive");
    if (!(std::isfinite(ioff) && ioff >= 0.0)) throw ValidationError("MOS ioff must be >= 0");
}

namespace {

constexpr double kLeakageVoltage = 0.025;

struct Forward {
    double i, gm, gds;
};

Forward forward_region(const MosParams& p, double vgs, double vds) {
    const double vov = vgs - p.vth;
    if (vov <= 0.0) return {0.0, 0.0, 0.0};
    if (vds >= vov) return {0.5 * p.k * vov * vov, p.k * vov, 0.0};
    return {p.k * (vov * vds - 0.5 * vds * vds), p.k * vds, p.k * (vov - vds)};
}

}  // namespace

MosEval mos_eval(const MosParams& p, double vg, double vd, double vs) {
    MosEval e;
    if (vd >= vs) {
        const auto f = forward_region(p, vg - vs, vd - vs);
        e.ids = f.i;
        e.d_vg = f.gm;
        e.d_vd = f.gds;
        e.d_vs = -f.gm - f.gds;
    } else {
        const auto f = forward_region(p, vg - vd, vs - vd);
        e.ids = -f.i;
        e.d_vg = -f.gm;
        e.d_vs = -f.gds;
        e.d_vd = f.gm + f.gds;
    }
    if (p.ioff > 0.0) {
        const double x = (vd - vs) / kLeakageVoltage;
        const double th = std::tanh(x);
        const double dl = p.ioff / kLeakageVoltage * (1.0 - th * th);
        e.ids += p.ioff * th;
        e.d_vd += dl;
        e.d_vs -= dl;
    }
    return e;
}

double mos_current(const MosParams& p, double vgs, double vds) {
    return mos_eval(p, vgs, vds, 0.0).ids;
}

// ---------------------------------------------------------------------------
// PWL

PwlWaveform::PwlWaveform(std::vector<std::pair<double, double>> breakpoints)
    : points_(std::move(breakpoints)) {
    if (points_.empty()) throw ValidationError("PWL waveform needs at least one breakpoint");
    for (std::size_t k = 0; k < points_.size(); ++k) {
        if (!std::isfinite(points_[k].first) || !std::isfinite(points_[k].second))
            throw ValidationError("PWL waveform breakpoint is not finite");
        if (k > 0 && !(points_[k].first > points_[k - 1].first))
            throw ValidationError("PWL waveform times must be strictly increasing");
    }
}

double PwlWaveform::operator()(double t) const {
    if (t <= points_.front().first) return points_.front().second;
    if (t >= points_.back().first) return points_.back().second;
    const auto it = std::upper_bound(points_.begin(), points_.end(), t,
                                     [](double x, const auto& p) { return x < p.first; });
    const auto& [t1, v1] = *it;
    const auto& [t0, v0] = *(it - 1);
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
}

double PwlWaveform::max_value() const {
    double m = points_.front().second;
    for (const auto& p : points_) m = std::max(m, p.second);
    return m;
}

double PwlWaveform::shortest_edge() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < points_.size(); ++k) {
        if (points_[k].second != points_[k - 1].second)
            m = std::min(m, points_[k].first - points_[k - 1].first);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Circuit

Circuit::Circuit() {
    nets_.push_back({"gnd", NetRole::gnd});
    net_index_.emplace("gnd", 0);
}

NetId Circuit::add_net(std::string name, NetRole role) {
    if (name.empty()) throw ValidationError("net name must not be empty");
    if (net_index_.contains(name)) throw ValidationError("duplicate net '" + name + "'");
    const int idx = static_cast<int>(nets_.size());
    net_index_.emplace(name, idx);
    nets_.push_back({std::move(name), role});
    return NetId{idx};
}

std::optional<NetId> Circuit::find_net(std::string_view name) const {
    const auto it = net_index_.find(name);
    if (it == net_index_.end()) return std::nullopt;
    return NetId{it->second};
}

NetId Circuit::net(std::string_view name) const {
    if (auto id = find_net(name)) return *id;
    throw ValidationError("unknown net '" + std::string(name) + "'");
}

std::size_t Circuit::push(Element e) {
    if (element_index_.contains(e.name))
        throw ValidationError("duplicate element '" + e.name + "'");
    const auto idx = elements_.size();
    element_index_.emplace(e.name, idx);
    elements_.push_back(std::move(e));
    return idx;
}

std::size_t Circuit::add_capacitor(NetId a, NetId b, double farads, std::string name,
                                   ElementGroup group) {
    if (!(std::isfinite(farads) && farads > 0.0))
        throw ValidationError("capacitance of '" + name + "' must be positive");
    return push({std::move(name), group, Capacitor{a, b, farads}});
}

std::size_t Circuit::add_resistor(NetId a, NetId b, double ohms, std::string name,
                                  ElementGroup group) {
    if (!(std::isfinite(ohms) && ohms > 0.0))
        throw ValidationError("resistance of '" + name + "' must be positive");
    return push({std::move(name), group, Resistor{a, b, ohms}});
}

std::size_t Circuit::add_rram(NetId top, NetId bottom, const RramParams& params,
                              std::string name, ElementGroup group) {
    params.validate();
    return push({std::move(name), group, Rram{top, bottom, params}});
}

std::size_t Circuit::add_mosfet(NetId drain, NetId gate, NetId source, const MosParams& params,
                                std::string name, ElementGroup group) {
    params.validate();
    return push({std::move(name), group, Mosfet{drain, gate, source, params}});
}

std::size_t Circuit::add_switch(NetId a, NetId b, NetId control, double r_on, double v_on,
                                double v_off, std::string name, ElementGroup group) {
    if (!(std::isfinite(r_on) && r_on > 0.0))
        throw ValidationError("switch on-resistance of '" + name + "' must be positive");
    if (v_on == v_off) throw ValidationError("switch '" + name + "' needs v_on != v_off");
    return push({std::move(name), group, Switch{a, b, control, r_on, v_on, v_off, 0.0}});
}

Element& Circuit::element(std::string_view name) {
    const auto it = element_index_.find(name);
    if (it == element_index_.end())
        throw ValidationError("unknown element '" + std::string(name) + "'");
    return elements_[it->second];
}

const Element& Circuit::element(std::string_view name) const {
    return const_cast<Circuit*>(this)->element(name);
}

void Circuit::drive(NetId net, PwlWaveform waveform, std::optional<double> rail_v) {
    if (!net.valid() || net.index >= static_cast<int>(nets_.size()))
        throw ValidationError("drive: invalid net");
    if (net.index == 0) throw ValidationError("drive: ground is fixed at 0 V");
    const double rail = rail_v.value_or(std::max(0.0, waveform.max_value()));
    for (auto& s : sources_) {
        if (s.net == net) {
            s.waveform = std::move(waveform);
            s.rail_v = rail;
            return;
        }
    }
    sources_.push_back({net, std::move(waveform), rail});
}

void Circuit::release(NetId net) {
    std::erase_if(sources_, [&](const Source& s) { return s.net == net; });
}

bool Circuit::is_driven(NetId net) const { return source_for(net) != nullptr; }

const Source* Circuit::source_for(NetId net) const {
    for (const auto& s : sources_)
        if (s.net == net) return &s;
    return nullptr;
}

namespace {

template <typename F>
void for_each_terminal(const Device& d, F&& f) {
    std::visit(
        [&](const auto& dev) {
            using T = std::decay_t<decltype(dev)>;
            if constexpr (std::is_same_v<T, Capacitor> || std::is_same_v<T, Resistor>) {
                f(dev.a);
                f(dev.b);
            } else if constexpr (std::is_same_v<T, Rram>) {
                f(dev.top);
                f(dev.bottom);
            } else if constexpr (std::is_same_v<T, Mosfet>) {
                f(dev.drain);
                f(dev.gate);
                f(dev.source);
            } else {
                f(dev.a);
                f(dev.b);
                f(dev.control);
            }
        },
        d);
}

}  // namespace

void Circuit::validate() const {
    std::vector<int> uses(nets_.size(), 0);
    for (const auto& e : elements_) {
        for_each_terminal(e.device, [&](NetId n) {
            if (!n.valid() || n.index >= static_cast<int>(nets_.size()))
                throw ValidationError("element '" + e.name + "' references a missing net");
            ++uses[n.index];
        });
    }
    for (std::size_t k = 1; k < nets_.size(); ++k) {
        if (uses[k] == 0 && !is_driven(NetId{static_cast<int>(k)}))
            throw ValidationError("net '" + nets_[k].name + "' is not connected to anything");
    }
}

// ---------------------------------------------------------------------------
// Engine

namespace {

// Exponential RRAM branches are continued linearly beyond this exponent so that
// wild Newton iterates cannot overflow.
constexpr double kMaxExponent = 40.0;

struct Stamp {
    int n = 0;
    std::array<int, 3> nets{};
    std::array<double, 3> i{};                    // current leaving net k into the device
    std::array<std::array<double, 3>, 3> g{};     // d i_k / d v_l
};

std::pair<double, double> rram_branch(const RramParams& p, double v) {
    if (v < 0.0 && -p.b_n * v > kMaxExponent) {
        const double v0 = -kMaxExponent / p.b_n;
        const double g0 = small_signal_conductance(p, v0);
        return {iv_current(p, v0) + g0 * (v - v0), g0};
    }
    if (v > 0.0 && -p.b_p * v < -kMaxExponent * 20.0) return {p.a_p / p.state.rs_ohms, 0.0};
    return {iv_current(p, v), small_signal_conductance(p, v)};
}

void two_terminal(Stamp& s, int a, int b, double i, double g) {
    s.n = 2;
    s.nets = {a, b, 0};
    s.i = {i, -i, 0.0};
    s.g[0] = {g, -g, 0.0};
    s.g[1] = {-g, g, 0.0};
}

Stamp evaluate(const Device& device, const std::vector<double>& v,
               const std::vector<double>& v_prev, double h) {
    Stamp s;
    std::visit(
        [&](const auto& dev) {
            using T = std::decay_t<decltype(dev)>;
            if constexpr (std::is_same_v<T, Capacitor>) {
                const int a = dev.a.index, b = dev.b.index;
                if (h <= 0.0) {
                    two_terminal(s, a, b, 0.0, 0.0);
                } else {
                    const double g = dev.farads / h;
                    const double i = g * ((v[a] - v[b]) - (v_prev[a] - v_prev[b]));
                    two_terminal(s, a, b, i, g);
                }
            } else if constexpr (std::is_same_v<T, Resistor>) {
                const int a = dev.a.index, b = dev.b.index;
                const double g = 1.0 / dev.ohms;
                two_terminal(s, a, b, g * (v[a] - v[b]), g);
            } else if constexpr (std::is_same_v<T, Rram>) {
                const int a = dev.top.index, b = dev.bottom.index;
                const auto [i, g] = rram_branch(dev.params, v[a] - v[b]);
                two_terminal(s, a, b, i, g);
            } else if constexpr (std::is_same_v<T, Mosfet>) {
                const int d = dev.drain.index, gt = dev.gate.index, src = dev.source.index;
                const auto e = mos_eval(dev.params, v[gt], v[d], v[src]);
                s.n = 3;
                s.nets = {d, gt, src};
                s.i = {e.ids, 0.0, -e.ids};
                s.g[0] = {e.d_vd, e.d_vg, e.d_vs};
                s.g[1] = {0.0, 0.0, 0.0};
                s.g[2] = {-e.d_vd, -e.d_vg, -e.d_vs};
            } else {
                const int a = dev.a.index, b = dev.b.index, c = dev.control.index;
                const double span = dev.v_on - dev.v_off;
                const double x = (v[c] - dev.v_off) / span;
                const double frac = std::clamp(x, 0.0, 1.0);
                const double dfrac = (x > 0.0 && x < 1.0) ? 1.0 / span : 0.0;
                const double g_on = 1.0 / dev.r_on;
                const double g = dev.g_off + (g_on - dev.g_off) * frac;
                const double vab = v[a] - v[b];
                const double dg = (g_on - dev.g_off) * dfrac * vab;
                s.n = 3;
                s.nets = {a, b, c};
                s.i = {g * vab, -g * vab, 0.0};
                s.g[0] = {g, -g, dg};
                s.g[1] = {-g, g, -dg};
                s.g[2] = {0.0, 0.0, 0.0};
            }
        },
        device);
    return s;
}

class Engine {
public:
    Engine(const Circuit& c, const SolverSettings& settings) : c_(c), settings_(settings) {
        c.validate();
        const auto n_nets = c.nets().size();
        unknown_of_.assign(n_nets, -1);
        source_of_.assign(n_nets, -1);
        for (std::size_t k = 0; k < c.sources().size(); ++k)
            source_of_[c.sources()[k].net.index] = static_cast<int>(k);
        for (std::size_t n = 1; n < n_nets; ++n) {
            if (source_of_[n] < 0) {
                unknown_of_[n] = n_unknowns_++;
                unknown_nets_.push_back(static_cast<int>(n));
            }
        }
        build_pattern();
    }

    /// Hold an undriven net at its current value (DC biases).
    void pin(int net) { pinned_.insert(net); }

    [[nodiscard]] int n_unknowns() const { return n_unknowns_; }
    [[nodiscard]] const std::vector<int>& unknown_nets() const { return unknown_nets_; }
    [[nodiscard]] bool is_unknown(int net) const {
        return unknown_of_[net] >= 0 && !pinned_.contains(net);
    }

    void apply_sources(std::vector<double>& v, double t) const {
        v[0] = 0.0;
        for (const auto& s : c_.sources()) v[s.net.index] = s.waveform(t);
    }

    /// Residual (current leaving each unknown net) and Jacobian at v.
    void assemble(const std::vector<double>& v, const std::vector<double>& v_prev, double h,
                  Eigen::VectorXd& f) {
        f.setZero(n_unknowns_);
        auto* vals = jac_.valuePtr();
        std::fill(vals, vals + jac_.nonZeros(), 0.0);
        for (std::size_t e = 0; e < c_.elements().size(); ++e) {
            const Stamp s = evaluate(c_.elements()[e].device, v, v_prev, h);
            const auto& slot = slots_[e];
            for (int k = 0; k < s.n; ++k) {
                const int uk = unknown_of_[s.nets[k]];
                if (uk < 0) continue;
                f[uk] += s.i[k];
                for (int l = 0; l < s.n; ++l) {
                    const int idx = slot[k][l];
                    if (idx >= 0) vals[idx] += s.g[k][l];
                }
            }
        }
        for (int u = 0; u < n_unknowns_; ++u) {
            const int net = unknown_nets_[u];
            if (pinned_.contains(net)) {
                // Identity row: keeps the pinned value.
                f[u] = 0.0;
                continue;
            }
            f[u] += settings_.gmin_s * v[net];
            vals[diag_[u]] += settings_.gmin_s;
        }
        if (!pinned_.empty()) {
            for (int col = 0; col < jac_.outerSize(); ++col) {
                for (Eigen::SparseMatrix<double>::InnerIterator it(jac_, col); it; ++it) {
                    if (pinned_.contains(unknown_nets_[it.row()]))
                        it.valueRef() = (it.row() == col) ? 1.0 : 0.0;
                }
            }
        }
    }

    [[nodiscard]] double residual_norm(const Eigen::VectorXd& f) const { return f.norm(); }

    [[nodiscard]] double max_residual(const Eigen::VectorXd& f) const {
        return n_unknowns_ ? f.cwiseAbs().maxCoeff() : 0.0;
    }

    /// Newton iteration on the unknown entries of v. Returns iterations used or -1.
    int newton(std::vector<double>& v, const std::vector<double>& v_prev, double h,
               int max_iterations, bool require_kcl) {
        if (n_unknowns_ == 0) return 0;
        Eigen::VectorXd f(n_unknowns_), f_try(n_unknowns_);
        std::vector<double> v_try = v;
        assemble(v, v_prev, h, f);
        for (int it = 1; it <= max_iterations; ++it) {
            lu_.factorize(jac_);
            if (lu_.info() != Eigen::Success) return -1;
            Eigen::VectorXd dx = lu_.solve(-f);
            if (!dx.allFinite()) return -1;
            const double full = dx.cwiseAbs().maxCoeff();
            if (full > settings_.max_step_v) dx *= settings_.max_step_v / full;

            const double norm0 = residual_norm(f);
            double alpha = 1.0;
            for (int bt = 0; bt < 10; ++bt) {
                for (int u = 0; u < n_unknowns_; ++u)
                    v_try[unknown_nets_[u]] = v[unknown_nets_[u]] + alpha * dx[u];
                assemble(v_try, v_prev, h, f_try);
                if (residual_norm(f_try) <= norm0 || bt == 9) break;
                alpha *= settings_.newton_damping;
            }
            v.swap(v_try);
            f.swap(f_try);
            const double moved = alpha * dx.cwiseAbs().maxCoeff();
            const bool step_small = moved < settings_.newton_tol_v &&
                                    (alpha == 1.0 || full < settings_.newton_tol_v);
            if (step_small && (!require_kcl || max_residual(f) < settings_.kcl_tol_a))
                return it;
            if (require_kcl && max_residual(f) < 1e-3 * settings_.kcl_tol_a) return it;
        }
        last_residual_ = max_residual(f);
        return -1;
    }

    [[nodiscard]] double last_residual() const { return last_residual_; }

    /// Residual vector at v (no Jacobian use).
    Eigen::VectorXd residual(const std::vector<double>& v, const std::vector<double>& v_prev,
                             double h) {
        Eigen::VectorXd f;
        assemble(v, v_prev, h, f);
        return f;
    }

    [[nodiscard]] int source_of(int net) const { return source_of_[net]; }

private:
    void build_pattern() {
        std::set<std::pair<int, int>> entries;
        for (int u = 0; u < n_unknowns_; ++u) entries.insert({u, u});
        for (const auto& e : c_.elements()) {
            std::vector<int> us;
            for_each_terminal(e.device, [&](NetId n) { us.push_back(unknown_of_[n.index]); });
            for (int a : us)
                for (int b : us)
                    if (a >= 0 && b >= 0) entries.insert({a, b});
        }
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(entries.size());
        for (const auto& [r, col] : entries) trip.emplace_back(r, col, 0.0);
        jac_.resize(n_unknowns_, n_unknowns_);
        jac_.setFromTriplets(trip.begin(), trip.end());
        jac_.makeCompressed();

        auto slot_of = [&](int r, int col) -> int {
            const int* outer = jac_.outerIndexPtr();
            const int* inner = jac_.innerIndexPtr();
            for (int p = outer[col]; p < outer[col + 1]; ++p)
                if (inner[p] == r) return p;
            return -1;
        };
        diag_.resize(n_unknowns_);
        for (int u = 0; u < n_unknowns_; ++u) diag_[u] = slot_of(u, u);
        slots_.resize(c_.elements().size());
        for (std::size_t e = 0; e < c_.elements().size(); ++e) {
            std::array<int, 3> nets{-1, -1, -1};
            int n = 0;
            for_each_terminal(c_.elements()[e].device, [&](NetId id) { nets[n++] = id.index; });
            auto& slot = slots_[e];
            for (auto& row : slot) row.fill(-1);
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    const int uk = unknown_of_[nets[k]], ul = unknown_of_[nets[l]];
                    if (uk >= 0 && ul >= 0) slot[k][l] = slot_of(uk, ul);
                }
        }
        if (n_unknowns_ > 0) lu_.analyzePattern(jac_);
    }

    const Circuit& c_;
    SolverSettings settings_;
    std::vector<int> unknown_of_;
    std::vector<int> source_of_;
    std::vector<int> unknown_nets_;
    int n_unknowns_ = 0;
    std::set<int> pinned_;
    Eigen::SparseMatrix<double> jac_;
    std::vector<int> diag_;
    std::vector<std::array<std::array<int, 3>, 3>> slots_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
    double last_residual_ = 0.0;
};

}  // namespace

// ---------------------------------------------------------------------------
// DC operating point

DcSolution dc_operating_point(const Circuit& circuit,
                              const std::map<std::string, double>& fixed_biases,
                              const SolverSettings& settings, double time_s) {
    Engine engine(circuit, settings);
    const auto n_nets = circuit.nets().size();
    std::vector<double> v(n_nets, 0.0);
    engine.apply_sources(v, time_s);
    for (const auto& [name, volts] : fixed_biases) {
        const auto id = circuit.net(name);
        if (id.index == 0) {
            if (volts != 0.0) throw ValidationError("ground cannot be biased");
            continue;
        }
        v[id.index] = volts;
        if (engine.is_unknown(id.index)) engine.pin(id.index);
    }

    DcSolution sol;
    const std::vector<double> v_prev = v;
    int iters = engine.newton(v, v_prev, 0.0, settings.dc_max_iterations, true);

    std::vector<int> free_nets;
    for (int n : engine.unknown_nets())
        if (engine.is_unknown(n)) free_nets.push_back(n);

    if (iters < 0 && free_nets.size() == 1) {
        // Scalar fallback: bisection on the KCL residual of the single free net.
        const int net = free_nets.front();
        auto resid = [&](double x) {
            v[net] = x;
            const auto f = engine.residual(v, v_prev, 0.0);
            for (int u = 0; u < engine.n_unknowns(); ++u)
                if (engine.unknown_nets()[u] == net) return f[u];
            return 0.0;
        };
        double lo = 0.0, hi = 0.0;
        for (std::size_t k = 0; k < n_nets; ++k) {
            if (static_cast<int>(k) == net) continue;
            lo = std::min(lo, v[k]);
            hi = std::max(hi, v[k]);
        }
        lo -= 1.0;
        hi += 1.0;
        double flo = resid(lo), fhi = resid(hi);
        if ((flo < 0.0) == (fhi < 0.0))
            throw SolverError("DC operating point: no sign change for bisection", engine.last_residual());
        for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
            const double m = 0.5 * (lo + hi);
            const double fm = resid(m);
            if ((fm < 0.0) == (flo < 0.0)) {
                lo = m;
                flo = fm;
            } else {
                hi = m;
            }
        }
        v[net] = 0.5 * (lo + hi);
        sol.used_bisection = true;
        iters = 200;
    } else if (iters < 0) {
        std::ostringstream os;
        os << "DC operating point did not converge; worst residual " << engine.last_residual()
           << " A";
        throw SolverError(os.str(), engine.last_residual());
    }

    const auto f = engine.residual(v, v_prev, 0.0);
    sol.iterations = iters;
    sol.worst_residual_a = engine.max_residual(f);
    for (std::size_t k = 0; k < n_nets; ++k) sol.voltages[circuit.nets()[k].name] = v[k];

    for (const auto& s : circuit.sources()) sol.source_currents[circuit.net_info(s.net).name] = 0.0;
    for (const auto& e : circuit.elements()) {
        const Stamp st = evaluate(e.device, v, v_prev, 0.0);
        for (int k = 0; k < st.n; ++k) {
            const int src = engine.source_of(st.nets[k]);
            if (src >= 0) sol.source_currents[circuit.nets()[st.nets[k]].name] += st.i[k];
        }
    }
    return sol;
}

// ---------------------------------------------------------------------------
// Transient

bool TransientTrace::has_net(std::string_view name) const {
    return std::find(net_names.begin(), net_names.end(), name) != net_names.end();
}

const std::vector<double>& TransientTrace::voltage(std::string_view name) const {
    const auto it = std::find(net_names.begin(), net_names.end(), name);
    if (it == net_names.end())
        throw ValidationError("trace has no net '" + std::string(name) + "'");
    return node_voltages[static_cast<std::size_t>(it - net_names.begin())];
}

double TransientTrace::at(const std::vector<double>& series, double t) const {
    if (times.empty()) throw ValidationError("empty trace");
    if (t <= times.front()) return series.front();
    if (t >= times.back()) return series.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto k = static_cast<std::size_t>(it - times.begin());
    const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
    return series[k - 1] + w * (series[k] - series[k - 1]);
}

double TransientTrace::total_source_energy() const {
    double e = 0.0;
    for (const auto& [_, s] : source_energy) e += s.back();
    return e;
}

double TransientTrace::total_dissipation() const {
    double e = 0.0;
    for (const auto& [_, s] : group_dissipation) e += s.back();
    return e;
}

TransientTrace transient_solve(const Circuit& circuit, double dt, double t_end,
                               const std::map<std::string, double>& initial,
                               const SolverSettings& settings) {
    if (!(std::isfinite(dt) && dt > 0.0)) throw ValidationError("transient: dt must be positive");
    if (!(std::isfinite(t_end) && t_end > 0.0))
        throw ValidationError("transient: t_end must be positive");
    double edge = std::numeric_limits<double>::infinity();
    for (const auto& s : circuit.sources()) edge = std::min(edge, s.waveform.shortest_edge());
    if (dt > edge / 20.0 * (1.0 + 1e-9)) {
        std::ostringstream os;
        os << "transient: dt = " << dt << " s exceeds 1/20 of the shortest source edge (" << edge
           << " s)";
        throw ValidationError(os.str());
    }

    Engine engine(circuit, settings);
    const auto& nets = circuit.nets();
    const auto n_nets = nets.size();
    std::vector<double> v(n_nets, 0.0);
    for (const auto& [name, volts] : initial) v[circuit.net(name).index] = volts;
    engine.apply_sources(v, 0.0);

    TransientTrace tr;
    for (const auto& n : nets) tr.net_names.push_back(n.name);
    tr.node_voltages.assign(n_nets, {});
    const auto n_steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    for (auto& col : tr.node_voltages) col.reserve(n_steps + 1);
    tr.times.reserve(n_steps + 1);

    const auto n_src = circuit.sources().size();
    std::vector<double> q(n_src, 0.0), q_pos(n_src, 0.0), energy(n_src, 0.0);
    std::vector<std::string> src_names;
    for (const auto& s : circuit.sources()) {
        src_names.push_back(nets[s.net.index].name);
        tr.source_rail_v[src_names.back()] = s.rail_v;
    }
    const std::array<std::string, 4> group_names = {"cell", "line", "periphery", "shunt"};
    std::array<double, 4> group_e{};
    std::vector<double> elem_e(circuit.elements().size(), 0.0);

    auto stored = [&](const std::vector<double>& vv) {
        double e = 0.0;
        for (const auto& el : circuit.elements()) {
            if (const auto* cap = std::get_if<Capacitor>(&el.device)) {
                const double dv = vv[cap->a.index] - vv[cap->b.index];
                e += 0.5 * cap->farads * dv * dv;
            }
        }
        return e;
    };

    auto record = [&](double t) {
        tr.times.push_back(t);
        for (std::size_t k = 0; k < n_nets; ++k) tr.node_voltages[k].push_back(v[k]);
        for (std::size_t s = 0; s < n_src; ++s) {
            tr.source_charge[src_names[s]].push_back(q[s]);
            tr.source_sourced_charge[src_names[s]].push_back(q_pos[s]);
            tr.source_energy[src_names[s]].push_back(energy[s]);
        }
        for (std::size_t g = 0; g < group_names.size(); ++g)
            tr.group_dissipation[group_names[g]].push_back(group_e[g]);
        tr.stored_energy.push_back(stored(v));
    };

    // Energy over one accepted step: currents at the new point, voltages averaged
    // over the step. With implicit-Euler capacitor currents this makes the
    // capacitor term exactly 1/2 C d(v^2), so the books close to Newton tolerance.
    std::vector<double> i_src(n_src);
    auto meter = [&](const std::vector<double>& v0, const std::vector<double>& v1, double h) {
        std::fill(i_src.begin(), i_src.end(), 0.0);
        for (std::size_t e = 0; e < circuit.elements().size(); ++e) {
            const auto& el = circuit.elements()[e];
            const Stamp st = evaluate(el.device, v1, v0, h);
            double p = 0.0;
            for (int k = 0; k < st.n; ++k) {
                const int net = st.nets[k];
                p += 0.5 * (v0[net] + v1[net]) * st.i[k];
                const int src = engine.source_of(net);
                if (src >= 0) i_src[src] += st.i[k];
            }
            if (!std::holds_alternative<Capacitor>(el.device)) {
                elem_e[e] += p * h;
                group_e[static_cast<std::size_t>(el.group)] += p * h;
            }
        }
        for (int net : engine.unknown_nets())
            group_e[3] += settings.gmin_s * v1[net] * 0.5 * (v0[net] + v1[net]) * h;
        for (std::size_t s = 0; s < n_src; ++s) {
            const int net = circuit.sources()[s].net.index;
            const double dq = i_src[s] * h;
            q[s] += dq;
            q_pos[s] += std::max(dq, 0.0);
            energy[s] += 0.5 * (v0[net] + v1[net]) * dq;
        }
    };

    std::vector<double> v_new(n_nets);
    std::size_t step_index = 0;
    // Advance v from t0 to t1, halving on Newton failure.
    auto advance = [&](auto&& self, double t0, double t1, int depth) -> void {
        v_new = v;
        engine.apply_sources(v_new, t1);
        const int it = engine.newton(v_new, v, t1 - t0, settings.max_newton_iterations, false);
        if (it >= 0) {
            tr.newton_iterations += static_cast<std::size_t>(it);
            meter(v, v_new, t1 - t0);
            v.swap(v_new);
            return;
        }
        if (depth >= settings.max_step_halvings) {
            std::ostringstream os;
            os << "transient: Newton failed at step " << step_index << " (t = " << t1
               << " s) after " << depth << " step halvings";
            throw SolverError(os.str(), engine.last_residual(), static_cast<long>(step_index));
        }
        ++tr.step_halvings;
        const double tm = 0.5 * (t0 + t1);
        self(self, t0, tm, depth + 1);
        self(self, tm, t1, depth + 1);
    };

    record(0.0);
    double t = 0.0;
    for (step_index = 1; step_index <= n_steps; ++step_index) {
        const double t1 = std::min(t_end, static_cast<double>(step_index) * dt);
        advance(advance, t, t1, 0);
        t = t1;
        record(t);
    }
    for (std::size_t e = 0; e < circuit.elements().size(); ++e) {
        if (!std::holds_alternative<Capacitor>(circuit.elements()[e].device))
            tr.element_dissipation[circuit.elements()[e].name] = elem_e[e];
    }
    return tr;
}

std::optional<double> measure_delay(const TransientTrace& trace, std::string_view net,
                                    double threshold, Direction direction, double window_start) {
    const auto& v = trace.voltage(net);
    const auto& t = trace.times;
    auto beyond = [&](double x) {
        return direction == Direction::Rising ? x >= threshold : x <= threshold;
    };
    if (t.empty() || window_start > t.back()) return std::nullopt;
    double t0 = window_start;
    double v0 = trace.at(v, window_start);
    // a signal that starts beyond the threshold must come back before it can cross
    if (v0 == threshold) return window_start;
    bool armed = !beyond(v0);
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] <= window_start) continue;
        if (armed && beyond(v[k])) return t0 + (threshold - v0) / (v[k] - v0) * (t[k] - t0);
        if (!beyond(v[k])) armed = true;
        t0 = t[k];
        v0 = v[k];
    }
    return std::nullopt;
}

void write_trace_csv(std::ostream& out, const TransientTrace& trace,
                     const std::vector<std::string>& nets) {
    const auto& cols = nets.empty() ? trace.net_names : nets;
    std::vector<const std::vector<double>*> series;
    for (const auto& n : cols) series.push_back(&trace.voltage(n));
    out << "# time_s: simulation time; v_<net>_v: node voltage";
    out << '\n';
    out << "time_s";
    for (const auto& n : cols) out << ",v_" << n << "_v";
    out << '\n';
    out << std::setprecision(12);
    for (std::size_t k = 0; k < trace.size(); ++k) {
        out << trace.times[k];
        for (const auto* s : series) out << ',' << (*s)[k];
        out << '\n';
    }
}

}  // namespace camsim
