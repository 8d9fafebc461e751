#include "camsim/device_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include "camsim/errors.hpp"

namespace camsim {

namespace {

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

// log|1 - exp(-b v)| and its derivative with respect to b.
double log_shape(double b, double v) { return std::log(std::abs(std::expm1(-b * v))); }
double log_shape_db(double b, double v) { return v / std::expm1(b * v); }

struct BranchData {
    std::vector<double> v;
    std::vector<double> y;  // log|i| + log(RS)
};

BranchData collect_branch(const IvSweep& sweep, double rs_ohms, bool positive) {
    BranchData d;
    for (const auto& p : sweep.points) {
        const bool take = positive ? p.v > 0.0 : p.v < 0.0;
        if (!take || std::abs(p.i) <= sweep.noise_floor_a) continue;
        // Points whose current has the wrong sign carry no usable log information.
        if ((p.i > 0.0) != (p.v > 0.0)) continue;
        d.v.push_back(p.v);
        d.y.push_back(std::log(std::abs(p.i)) + std::log(rs_ohms));
    }
    return d;
}

double optimal_log_a(const BranchData& d, double b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < d.v.size(); ++k) acc += d.y[k] - log_shape(b, d.v[k]);
    return acc / static_cast<double>(d.v.size());
}

double sse(const BranchData& d, double log_a, double b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < d.v.size(); ++k) {
        const double r = d.y[k] - log_a - log_shape(b, d.v[k]);
        acc += r * r;
    }
    return acc;
}

BranchFit fit_branch(const BranchData& d, const FitOptions& opt, const char* name,
                     std::vector<std::string>& diagnostics) {
    const double lb_min = std::log(opt.b_min);
    const double lb_max = std::log(opt.b_max);

    // Coarse grid over log b with a eliminated in closed form.
    double best_lb = lb_min;
    double best_sse = std::numeric_limits<double>::infinity();
    for (int g = 0; g < opt.grid_points; ++g) {
        const double lb = lb_min + (lb_max - lb_min) * g / (opt.grid_points - 1);
        const double b = std::exp(lb);
        const double s = sse(d, optimal_log_a(d, b), b);
        if (s < best_sse) {
            best_sse = s;
            best_lb = lb;
        }
    }

    double lb = best_lb;
    double la = optimal_log_a(d, std::exp(lb));
    double cur = sse(d, la, std::exp(lb));
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        const double b = std::exp(lb);
        // Normal equations for (log a, log b).
        double j11 = 0, j12 = 0, j22 = 0, g1 = 0, g2 = 0;
        for (std::size_t k = 0; k < d.v.size(); ++k) {
            const double r = d.y[k] - la - log_shape(b, d.v[k]);
            const double jb = b * log_shape_db(b, d.v[k]);
            j11 += 1.0;
            j12 += jb;
            j22 += jb * jb;
            g1 += r;
            g2 += r * jb;
        }
        const double det = j11 * j22 - j12 * j12;
        if (!(std::abs(det) > 1e-300)) break;
        double dla = (j22 * g1 - j12 * g2) / det;
        double dlb = (j11 * g2 - j12 * g1) / det;

        double step = 1.0;
        bool improved = false;
        for (int bt = 0; bt < 40; ++bt) {
            const double nlb = std::clamp(lb + step * dlb, lb_min, lb_max);
            const double nla = la + step * dla;
            const double s = sse(d, nla, std::exp(nlb));
            if (s < cur) {
                const double moved = std::abs(nlb - lb) + std::abs(nla - la);
                lb = nlb;
                la = nla;
                cur = s;
                improved = moved > 1e-14;
                break;
            }
            step *= opt.damping;
        }
        if (!improved) break;
    }
    // Re-centre a for the final b (exact for fixed b).
    la = optimal_log_a(d, std::exp(lb));
    cur = sse(d, la, std::exp(lb));

    BranchFit fit;
    fit.a = std::exp(la);
    fit.b = std::exp(lb);
    fit.n_points = d.v.size();
    fit.iterations = it;
    fit.rms_log = std::sqrt(cur / static_cast<double>(d.v.size()));
    const double tol = 1e-6 * (lb_max - lb_min);
    fit.boundary_hit = (lb - lb_min) < tol || (lb_max - lb) < tol;
    if (fit.boundary_hit) {
        std::ostringstream os;
        os << name << " branch: curvature b=" << fit.b << " /V hit the search bound ["
           << opt.b_min << ", " << opt.b_max << "]";
        diagnostics.push_back(os.str());
    }
    return fit;
}

}  // namespace

std::string to_string(StateLabel label) {
    switch (label) {
        case StateLabel::LRS: return "LRS";
        case StateLabel::HRS: return "HRS";
        case StateLabel::Custom: return "Custom";
    }
    return "Custom";
}

StateLabel state_label_from_string(const std::string& s) {
    if (s == "LRS") return StateLabel::LRS;
    if (s == "HRS") return StateLabel::HRS;
    if (s == "Custom") return StateLabel::Custom;
    throw ValidationError("unknown resistive state label '" + s + "'");
}

RramParams RramParams::calibrated(ResistiveState state, double b, double c_mr_f) {
    RramParams p;
    p.state = state;
    p.b_p = b;
    p.b_n = b;
    p.a_p = calibrate_prefactor(b, state.rs_ohms);
    p.a_n = p.a_p;
    p.c_mr_f = c_mr_f;
    p.validate();
    return p;
}

void RramParams::validate() const {
    if (!finite_positive(state.rs_ohms)) throw ValidationError("rs_ohms must be positive");
    if (!finite_positive(a_p) || !finite_positive(a_n))
        throw ValidationError("RRAM prefactors a_p, a_n must be positive");
    if (!finite_positive(b_p) || !finite_positive(b_n))
        throw ValidationError("RRAM curvatures b_p, b_n must be positive");
    if (!finite_positive(c_mr_f)) throw ValidationError("c_mr_f must be positive");
}

double RramParams::readout_error() const {
    return std::abs(a_p * -std::expm1(-kReadoutVoltage * b_p) - kReadoutVoltage) / kReadoutVoltage;
}

double iv_current(const RramParams& params, double v) {
    if (!std::isfinite(v)) throw ValidationError("iv_current: non-finite voltage");
    if (v > 0.0) return params.a_p / params.state.rs_ohms * -std::expm1(-params.b_p * v);
    if (v < 0.0) return params.a_n / params.state.rs_ohms * -std::expm1(-params.b_n * v);
    return 0.0;
}

double small_signal_conductance(const RramParams& params, double v) {
    if (!std::isfinite(v)) throw ValidationError("small_signal_conductance: non-finite voltage");
    const double rs = params.state.rs_ohms;
    if (v > 0.0) return params.a_p * params.b_p / rs * std::exp(-params.b_p * v);
    if (v < 0.0) return params.a_n * params.b_n / rs * std::exp(-params.b_n * v);
    return 0.5 * (params.a_p * params.b_p + params.a_n * params.b_n) / rs;
}

double calibrate_prefactor(double b_p, double rs_ohms) {
    if (!finite_positive(b_p)) throw ValidationError("calibrate_prefactor: b_p must be positive");
    if (!finite_positive(rs_ohms))
        throw ValidationError("calibrate_prefactor: rs_ohms must be positive");
    return kReadoutVoltage / -std::expm1(-kReadoutVoltage * b_p);
}

void IvSweep::validate() const {
    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto& p = points[k];
        if (!std::isfinite(p.v) || !std::isfinite(p.i))
            throw ValidationError("IV sweep point " + std::to_string(k) + " is not finite");
        if (k > 0 && !(p.v > points[k - 1].v))
            throw ValidationError("IV sweep voltages must be strictly increasing (point " +
                                  std::to_string(k) + ")");
        if (p.v == 0.0 && std::abs(p.i) > noise_floor_a)
            throw ValidationError("IV sweep current at 0 V exceeds the noise floor");
    }
}

IvSweep read_iv_csv(std::istream& in) {
    IvSweep sweep;
    std::string line;
    int line_no = 0;
    bool seen_data = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::replace(line.begin(), line.end(), ';', ' ');
        std::istringstream fields(line);
        std::string a, b, extra;
        if (!(fields >> a)) continue;
        if (!(fields >> b) || (fields >> extra))
            throw ValidationError("IV CSV line " + std::to_string(line_no) +
                                  ": expected two columns");
        try {
            std::size_t pa = 0, pb = 0;
            const double v = std::stod(a, &pa);
            const double i = std::stod(b, &pb);
            if (pa != a.size() || pb != b.size()) throw std::invalid_argument("trailing");
            sweep.points.push_back({v, i});
            seen_data = true;
        } catch (const std::exception&) {
            if (seen_data)
                throw ValidationError("IV CSV line " + std::to_string(line_no) +
                                      ": non-numeric field");
            // First non-comment line may be a header.
            seen_data = true;
        }
    }
    return sweep;
}

IvSweep read_iv_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open IV sweep '" + path + "'");
    return read_iv_csv(in);
}

void write_iv_csv(std::ostream& out, const IvSweep& sweep) {
    out << "# volts,amperes\n";
    out << std::setprecision(12);
    for (const auto& p : sweep.points) out << p.v << ',' << p.i << '\n';
}

IvSweep synthesize_sweep(const RramParams& params, double v_min, double v_max, int n_points,
                         double noise_sigma, std::uint64_t seed) {
    if (n_points < 2 || !(v_max > v_min)) throw ValidationError("synthesize_sweep: bad grid");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    IvSweep sweep;
    sweep.points.reserve(n_points);
    for (int k = 0; k < n_points; ++k) {
        const double v = v_min + (v_max - v_min) * k / (n_points - 1);
        double i = iv_current(params, v);
        if (noise_sigma > 0.0) i *= std::exp(noise_sigma * gauss(rng));
        sweep.points.push_back({v, i});
    }
    return sweep;
}

double branch_log_sse(const IvSweep& sweep, double rs_ohms, double b, bool positive) {
    const auto d = collect_branch(sweep, rs_ohms, positive);
    if (d.v.empty()) return 0.0;
    return sse(d, optimal_log_a(d, b), b);
}

FitResult fit_iv_params(const IvSweep& sweep, double rs_ohms, const FitOptions& options) {
    if (!finite_positive(rs_ohms)) throw ValidationError("fit_iv_params: rs_ohms must be positive");
    sweep.validate();

    std::vector<std::string> diag;
    const auto pos = collect_branch(sweep, rs_ohms, true);
    const auto neg = collect_branch(sweep, rs_ohms, false);
    const auto min_pts = static_cast<std::size_t>(options.min_points_per_polarity);

    auto degenerate = [](const BranchData& d) {
        const auto [lo, hi] = std::minmax_element(d.y.begin(), d.y.end());
        return *hi - *lo < 1e-12;
    };

    if (pos.v.size() < min_pts) {
        diag.push_back("positive branch has " + std::to_string(pos.v.size()) +
                       " usable points, need " + std::to_string(min_pts));
        throw FitError("IV fit failed: too few positive-polarity points", diag);
    }
    if (degenerate(pos)) {
        diag.push_back("positive branch: all currents equal");
        throw FitError("IV fit failed: degenerate positive branch", diag);
    }
    const bool have_neg = neg.v.size() >= min_pts;
    if (options.require_both_polarities && !have_neg) {
        diag.push_back("negative branch has " + std::to_string(neg.v.size()) +
                       " usable points, need " + std::to_string(min_pts));
        throw FitError("IV fit failed: bipolar fit requested on a single-polarity sweep", diag);
    }
    if (have_neg && degenerate(neg)) {
        diag.push_back("negative branch: all currents equal");
        throw FitError("IV fit failed: degenerate negative branch", diag);
    }

    FitResult result;
    result.positive = fit_branch(pos, options, "positive", diag);
    double total_sse = std::pow(result.positive.rms_log, 2) * pos.v.size();
    std::size_t total_n = pos.v.size();
    if (have_neg) {
        result.negative = fit_branch(neg, options, "negative", diag);
        total_sse += std::pow(result.negative->rms_log, 2) * neg.v.size();
        total_n += neg.v.size();
    } else {
        diag.push_back("negative branch mirrored from the positive fit");
    }

    auto& p = result.params;
    p.state = {StateLabel::Custom, rs_ohms};
    if (rs_ohms == kLrsOhms) p.state.label = StateLabel::LRS;
    if (rs_ohms == kHrsOhms) p.state.label = StateLabel::HRS;
    p.a_p = result.positive.a;
    p.b_p = result.positive.b;
    p.a_n = have_neg ? result.negative->a : p.a_p;
    p.b_n = have_neg ? result.negative->b : p.b_p;
    result.fit_rms_log = std::sqrt(total_sse / static_cast<double>(total_n));

    if (p.readout_error() > 0.005) {
        std::ostringstream os;
        os << "fitted curve misses the 0.2 V read-out point by " << 100.0 * p.readout_error()
           << " %";
        diag.push_back(os.str());
    }
    result.diagnostics = std::move(diag);
    return result;
}

nlohmann::json to_model_card(const RramParams& params, double fit_rms_log) {
    return {{"state", to_string(params.state.label)},
            {"rs_ohms", params.state.rs_ohms},
            {"a_p", params.a_p},
            {"b_p", params.b_p},
            {"a_n", params.a_n},
            {"b_n", params.b_n},
            {"c_mr_f", params.c_mr_f},
            {"fit_rms_log", fit_rms_log}};
}

RramParams from_model_card(const nlohmann::json& card) {
    static const char* const known[] = {"state", "rs_ohms", "a_p", "b_p", "a_n",
                                        "b_n",   "c_mr_f",  "fit_rms_log"};
    for (const auto& [key, _] : card.items()) {
        if (std::find(std::begin(known), std::end(known), key) == std::end(known))
            throw ValidationError("model card: unknown key '" + key + "'");
    }
    RramParams p;
    try {
        p.state.label = state_label_from_string(card.value("state", std::string("Custom")));
        p.state.rs_ohms = card.at("rs_ohms").get<double>();
        p.b_p = card.at("b_p").get<double>();
        p.a_p = card.contains("a_p") ? card.at("a_p").get<double>()
                                     : calibrate_prefactor(p.b_p, p.state.rs_ohms);
        p.b_n = card.value("b_n", p.b_p);
        p.a_n = card.value("a_n", p.a_p);
        p.c_mr_f = card.value("c_mr_f", kDefaultCmrFarads);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model card: ") + e.what());
    }
    p.validate();
    return p;
}

}  // namespace camsim
