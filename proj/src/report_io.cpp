#include "camsim/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "camsim/errors.hpp"

namespace camsim {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {
        "fit-device", "truth-table", "search", "aar",    "write-sweep",
        "suite",      "sweep",       "energy-map", "timing"};
    return names;
}

namespace {

// Plausible magnitudes by unit suffix.
struct UnitRange {
    std::string_view suffix;
    double lo;
    double hi;
};

constexpr UnitRange kUnits[] = {
    {"_f", 0.0, 1e-6},       {"_ohms", 0.0, 1e12},   {"_a_per_v2", 0.0, 1.0},
    {"_a", 0.0, 1.0},        {"_siemens", 0.0, 1.0}, {"_v", -100.0, 100.0},
    {"_s", 0.0, 1.0},        {"_j", 0.0, 1e-6},      {"_cycles", 0.0, 1000.0},
};

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// Reads one JSON object, tracks which keys were consumed and rejects the rest.
class Section {
public:
    Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ValidationError(where_ + ": expected an object");
    }

    [[nodiscard]] bool has(const char* key) const { return j_.contains(key); }

    const json& raw(const char* key) {
        used_.insert(key);
        return j_.at(key);
    }

    void number(const char* key, double& out) {
        if (!has(key)) return;
        const json& v = raw(key);
        if (!v.is_number()) throw ValidationError(path(key) + ": expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ValidationError(path(key) + ": not finite");
        for (const auto& u : kUnits) {
            if (!ends_with(key, u.suffix)) continue;
            if (x < u.lo || x > u.hi) {
                std::ostringstream os;
                os << path(key) << ": " << x << " outside plausible range [" << u.lo << ", "
                   << u.hi << "]";
                throw ValidationError(os.str());
            }
            break;
        }
        out = x;
    }

    template <typename Int>
    void integer(const char* key, Int& out) {
        if (!has(key)) return;
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ValidationError(path(key) + ": expected an integer");
        out = v.get<Int>();
    }

    void string(const char* key, std::string& out) {
        if (!has(key)) return;
        const json& v = raw(key);
        if (!v.is_string()) throw ValidationError(path(key) + ": expected a string");
        out = v.get<std::string>();
    }

    Section child(const char* key) { return Section(raw(key), path(key)); }

    void finish() const {
        for (const auto& [key, _] : j_.items()) {
            if (!used_.count(key)) throw ValidationError(path(key) + ": unknown key");
        }
    }

    [[nodiscard]] std::string path(const std::string& key) const { return where_ + "." + key; }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> used_;
};

void read_mos(Section s, MosParams& m) {
    s.number("vth_v", m.vth);
    s.number("k_a_per_v2", m.k);
    s.number("ioff_a", m.ioff);
    s.finish();
}

json mos_json(const MosParams& m) {
    return {{"vth_v", m.vth}, {"k_a_per_v2", m.k}, {"ioff_a", m.ioff}};
}

void read_timing(Section s, CellTiming& t) {
    s.number("clock_period_s", t.clock_period_s);
    s.number("edge_s", t.edge_s);
    s.number("cue_rise_s", t.cue_rise_s);
    s.number("sw_width_cycles", t.sw_width_cycles);
    s.number("pre_width_cycles", t.pre_width_cycles);
    s.number("en_start_cycles", t.en_start_cycles);
    s.number("en_width_cycles", t.en_width_cycles);
    s.number("sample_cycles", t.sample_cycles);
    s.number("cue_fall_cycles", t.cue_fall_cycles);
    s.number("clr_width_cycles", t.clr_width_cycles);
    s.number("sec_pulse_s", t.sec_pulse_s);
    s.number("aar_sample_cycles", t.aar_sample_cycles);
    s.number("write_start_cycles", t.write_start_cycles);
    s.number("write_width_cycles", t.write_width_cycles);
    s.integer("steps_per_cycle", t.steps_per_cycle);
    s.finish();
}

json timing_json(const CellTiming& t) {
    return {{"clock_period_s", t.clock_period_s},
            {"edge_s", t.edge_s},
            {"cue_rise_s", t.cue_rise_s},
            {"sw_width_cycles", t.sw_width_cycles},
            {"pre_width_cycles", t.pre_width_cycles},
            {"en_start_cycles", t.en_start_cycles},
            {"en_width_cycles", t.en_width_cycles},
            {"sample_cycles", t.sample_cycles},
            {"cue_fall_cycles", t.cue_fall_cycles},
            {"clr_width_cycles", t.clr_width_cycles},
            {"sec_pulse_s", t.sec_pulse_s},
            {"aar_sample_cycles", t.aar_sample_cycles},
            {"write_start_cycles", t.write_start_cycles},
            {"write_width_cycles", t.write_width_cycles},
            {"steps_per_cycle", t.steps_per_cycle}};
}

void read_cell(Section s, CellConfig& c) {
    s.number("c_b_f", c.c_b_f);
    s.number("pre_r_on_ohms", c.pre_r_on_ohms);
    s.number("periphery_r_on_ohms", c.periphery_r_on_ohms);
    s.number("ml_load_f", c.ml_load_f);
    s.number("set_threshold_v", c.set_threshold_v);
    s.number("reset_threshold_v", c.reset_threshold_v);
    s.number("vdd_v", c.supplies.vdd);
    s.number("vsec_v", c.supplies.vsec);
    if (s.has("q1")) read_mos(s.child("q1"), c.q1);
    if (s.has("q2")) read_mos(s.child("q2"), c.q2);
    if (s.has("q3")) read_mos(s.child("q3"), c.q3);
    if (s.has("timing")) read_timing(s.child("timing"), c.timing);
    s.finish();
}

json cell_json(const CellConfig& c) {
    return {{"c_b_f", c.c_b_f},
            {"pre_r_on_ohms", c.pre_r_on_ohms},
            {"periphery_r_on_ohms", c.periphery_r_on_ohms},
            {"ml_load_f", c.ml_load_f},
            {"set_threshold_v", c.set_threshold_v},
            {"reset_threshold_v", c.reset_threshold_v},
            {"vdd_v", c.supplies.vdd},
            {"vsec_v", c.supplies.vsec},
            {"q1", mos_json(c.q1)},
            {"q2", mos_json(c.q2)},
            {"q3", mos_json(c.q3)},
            {"timing", timing_json(c.timing)}};
}

void read_solver(Section s, SolverSettings& o) {
    s.number("newton_damping", o.newton_damping);
    s.integer("max_newton_iterations", o.max_newton_iterations);
    s.number("newton_tol_v", o.newton_tol_v);
    s.number("kcl_tol_a", o.kcl_tol_a);
    s.number("gmin_siemens", o.gmin_s);
    s.number("max_step_v", o.max_step_v);
    s.integer("max_step_halvings", o.max_step_halvings);
    s.integer("dc_max_iterations", o.dc_max_iterations);
    s.finish();
}

json solver_json(const SolverSettings& o) {
    return {{"newton_damping", o.newton_damping},
            {"max_newton_iterations", o.max_newton_iterations},
            {"newton_tol_v", o.newton_tol_v},
            {"kcl_tol_a", o.kcl_tol_a},
            {"gmin_siemens", o.gmin_s},
            {"max_step_v", o.max_step_v},
            {"max_step_halvings", o.max_step_halvings},
            {"dc_max_iterations", o.dc_max_iterations}};
}

void read_array(Section s, ArrayConfig& a) {
    s.integer("rows", a.rows);
    s.integer("cols", a.cols);
    s.number("c_ml_f", a.c_ml_f);
    s.number("c_psw_f", a.c_psw_f);
    s.number("driver_load_f", a.driver_load_f);
    s.number("vref_car_v", a.vref_car_v);
    s.number("vref_aar_v", a.vref_aar_v);
    s.number("comparator_offset_v", a.comparator_offset_v);
    s.number("comparator_sigma_v", a.comparator_sigma_v);
    s.number("comparator_energy_j", a.comparator_energy_j);
    s.integer("warmup_searches", a.warmup_searches);
    s.number("min_aar_margin_v", a.min_aar_margin_v);
    s.finish();
}

json array_json(const ArrayConfig& a) {
    return {{"rows", a.rows},
            {"cols", a.cols},
            {"c_ml_f", a.c_ml_f},
            {"c_psw_f", a.c_psw_f},
            {"driver_load_f", a.driver_load_f},
            {"vref_car_v", a.vref_car_v},
            {"vref_aar_v", a.vref_aar_v},
            {"comparator_offset_v", a.comparator_offset_v},
            {"comparator_sigma_v", a.comparator_sigma_v},
            {"comparator_energy_j", a.comparator_energy_j},
            {"warmup_searches", a.warmup_searches},
            {"min_aar_margin_v", a.min_aar_margin_v}};
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open", path.string());
    std::ostringstream os;
    os << in.rdbuf();
    if (in.bad()) throw IoError("read failed", path.string());
    return os.str();
}

json parse_json_file(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

}  // namespace

void RunConfig::validate() const {
    array.validate();
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), experiment) == names.end())
        throw ValidationError("config.experiment: unknown experiment '" + experiment + "'");
    if (jobs < 1) throw ValidationError("config.jobs must be at least 1");
    const auto& s = array.cell.solver;
    if (!(s.newton_damping > 0.0 && s.newton_damping < 1.0))
        throw ValidationError("solver.newton_damping must lie in (0, 1)");
    if (s.max_newton_iterations < 1 || s.dc_max_iterations < 1 || s.max_step_halvings < 0)
        throw ValidationError("solver: iteration limits must be positive");
    if (!(s.newton_tol_v > 0.0) || !(s.kcl_tol_a > 0.0) || !(s.max_step_v > 0.0) ||
        !(s.gmin_s >= 0.0))
        throw ValidationError("solver: tolerances must be positive");
}

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
    RunConfig cfg;
    Section top(j, "config");
    if (top.has("device")) {
        Section dev = top.child("device");
        if (dev.has("model_card")) {
            std::string rel;
            dev.string("model_card", rel);
            dev.finish();
            fs::path p = rel;
            if (p.is_relative()) p = base_dir / p;
            if (!fs::exists(p))
                throw ValidationError("config.device.model_card: file not found: " + p.string());
            cfg.array.cell.rram = from_model_card(parse_json_file(p));
        } else {
            cfg.array.cell.rram = from_model_card(top.raw("device"));
        }
    }
    if (top.has("cell")) read_cell(top.child("cell"), cfg.array.cell);
    if (top.has("solver")) read_solver(top.child("solver"), cfg.array.cell.solver);
    if (top.has("array")) read_array(top.child("array"), cfg.array);
    top.string("experiment", cfg.experiment);
    top.string("output_dir", cfg.output_dir);
    top.integer("seed", cfg.array.seed);
    top.integer("jobs", cfg.jobs);
    top.finish();
    cfg.validate();
    return cfg;
}

json config_to_json(const RunConfig& cfg) {
    json card = to_model_card(cfg.array.cell.rram);
    card.erase("fit_rms_log");
    return {{"device", card},
            {"cell", cell_json(cfg.array.cell)},
            {"solver", solver_json(cfg.array.cell.solver)},
            {"array", array_json(cfg.array)},
            {"experiment", cfg.experiment},
            {"output_dir", cfg.output_dir},
            {"seed", cfg.array.seed},
            {"jobs", cfg.jobs}};
}

RunConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw ValidationError("config file not found: " + path.string());
    return config_from_json(parse_json_file(path), path.parent_path());
}

void save_config(const RunConfig& cfg, const fs::path& path) {
    write_file_atomic(path, config_to_json(cfg).dump(2) + "\n");
}

fs::path default_output_dir() {
    const char* env = std::getenv("CAMSIM_OUT");
    if (env && *env) return fs::path(env);
    return fs::path(".");
}

// ---------------------------------------------------------------------------
// Files

void write_file_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing", tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw IoError("write failed", tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot rename into place", path.string());
    }
}

ExportFormat export_format_from_string(std::string_view s) {
    if (s == "json") return ExportFormat::Json;
    if (s == "csv") return ExportFormat::Csv;
    if (s == "svg") return ExportFormat::Svg;
    throw ValidationError("unknown format '" + std::string(s) + "' (expected csv, json or svg)");
}

namespace {

std::string fmt_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string csv_cell(const json& v) {
    if (v.is_number()) return fmt_number(v.get<double>());
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_null()) return "";
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

std::string xml_escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '&': o += "&amp;"; break;
            case '"': o += "&quot;"; break;
            default: o += c;
        }
    }
    return o;
}

std::string fmt_px(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

std::string fmt_tick(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

}  // namespace

void write_table_csv(std::ostream& out, const Table& table) {
    out << "# " << (table.title.empty() ? table.name : table.title) << "\n";
    out << "# columns:\n";
    for (const auto& c : table.columns) out << "#   " << c.name << ": " << c.description << "\n";
    for (std::size_t k = 0; k < table.columns.size(); ++k)
        out << (k ? "," : "") << table.columns[k].name;
    out << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << csv_cell(row[k]);
        out << "\n";
    }
}

void write_plot_svg(std::ostream& out, const Plot& plot) {
    constexpr double W = 640, H = 400, L = 80, R = 150, T = 40, B = 60;
    static const char* const colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                         "#ff7f0e", "#9467bd", "#8c564b"};
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : plot.series) {
        for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            x0 = std::min(x0, s.x[k]);
            x1 = std::max(x1, s.x[k]);
            y0 = std::min(y0, s.y[k]);
            y1 = std::max(y1, s.y[k]);
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) {
        const double pad = std::abs(y0) > 0 ? 0.05 * std::abs(y0) : 1.0;
        y0 -= pad;
        y1 += pad;
    }
    const double pw = W - L - R, ph = H - T - B;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return T + ph - (y - y0) / (y1 - y0) * ph; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << fmt_px(L + pw / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
        << xml_escape(plot.title) << "</text>\n";
    out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
        out << "<line x1=\"" << fmt_px(px(xv)) << "\" y1=\"" << fmt_px(T + ph) << "\" x2=\""
            << fmt_px(px(xv)) << "\" y2=\"" << fmt_px(T + ph + 5) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt_px(px(xv)) << "\" y=\"" << fmt_px(T + ph + 18)
            << "\" text-anchor=\"middle\">" << fmt_tick(xv) << "</text>\n";
        out << "<line x1=\"" << fmt_px(L - 5) << "\" y1=\"" << fmt_px(py(yv)) << "\" x2=\""
            << fmt_px(L) << "\" y2=\"" << fmt_px(py(yv)) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt_px(L - 8) << "\" y=\"" << fmt_px(py(yv) + 4)
            << "\" text-anchor=\"end\">" << fmt_tick(yv) << "</text>\n";
    }
    out << "<text x=\"" << fmt_px(L + pw / 2) << "\" y=\"" << fmt_px(H - 15)
        << "\" text-anchor=\"middle\">" << xml_escape(plot.x_label) << "</text>\n";
    out << "<text x=\"15\" y=\"" << fmt_px(T + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
        << fmt_px(T + ph / 2) << ")\">" << xml_escape(plot.y_label) << "</text>\n";
    for (std::size_t si = 0; si < plot.series.size(); ++si) {
        const auto& s = plot.series[si];
        const char* color = colors[si % std::size(colors)];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        double prev_y = 0.0;
        for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            if (s.step && !first)
                out << " " << fmt_px(px(s.x[k])) << "," << fmt_px(py(prev_y));
            out << (first ? "" : " ") << fmt_px(px(s.x[k])) << "," << fmt_px(py(s.y[k]));
            prev_y = s.y[k];
            first = false;
        }
        out << "\"/>\n";
        const double ly = T + 14.0 * static_cast<double>(si) + 8;
        out << "<line x1=\"" << fmt_px(L + pw + 10) << "\" y1=\"" << fmt_px(ly) << "\" x2=\""
            << fmt_px(L + pw + 30) << "\" y2=\"" << fmt_px(ly) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << fmt_px(L + pw + 35) << "\" y=\"" << fmt_px(ly + 4) << "\">"
            << xml_escape(s.label) << "</text>\n";
    }
    out << "</svg>\n";
}

json Report::to_json() const {
    json t = json::object();
    for (const auto& tab : tables) {
        json cols = json::array();
        for (const auto& c : tab.columns) cols.push_back(c.name);
        json rows = json::array();
        for (const auto& r : tab.rows) rows.push_back(r);
        t[tab.name] = {{"columns", cols}, {"rows", rows}};
    }
    return {{"schema", kReportSchema}, {"experiment", experiment}, {"data", data}, {"tables", t}};
}

std::vector<fs::path> export_report(const Report& report, const fs::path& dir,
                                    ExportFormat format) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory", dir.string());
    std::vector<fs::path> written;
    const fs::path json_path = dir / (report.experiment + "_report.json");
    write_file_atomic(json_path, report.to_json().dump(2) + "\n");
    written.push_back(json_path);
    if (format == ExportFormat::Csv) {
        for (const auto& tab : report.tables) {
            std::ostringstream os;
            write_table_csv(os, tab);
            const fs::path p = dir / (report.experiment + "_" + tab.name + ".csv");
            write_file_atomic(p, os.str());
            written.push_back(p);
        }
    } else if (format == ExportFormat::Svg) {
        for (const auto& plot : report.plots) {
            std::ostringstream os;
            write_plot_svg(os, plot);
            const fs::path p = dir / (report.experiment + "_" + plot.name + ".svg");
            write_file_atomic(p, os.str());
            written.push_back(p);
        }
    }
    return written;
}

// ---------------------------------------------------------------------------
// Report builders

namespace {

std::vector<std::string> pick_nets(const TransientTrace& trace, const std::vector<std::string>& nets) {
    if (nets.empty()) return trace.net_names;
    for (const auto& n : nets) {
        if (!trace.has_net(n)) throw ValidationError("trace has no net '" + n + "'");
    }
    return nets;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string cell_label(int k) { return std::to_string(k + 1); }

}  // namespace

Table trace_table(const TransientTrace& trace, const std::vector<std::string>& nets,
                  std::string name) {
    const auto picked = pick_nets(trace, nets);
    Table t;
    t.name = std::move(name);
    t.title = "transient trace";
    t.columns.push_back({"time_s", "simulation time"});
    std::vector<const std::vector<double>*> series;
    for (const auto& n : picked) {
        t.columns.push_back({"v_" + n + "_v", "voltage of net " + n});
        series.push_back(&trace.voltage(n));
    }
    for (std::size_t k = 0; k < trace.size(); ++k) {
        std::vector<json> row{trace.times[k]};
        for (const auto* s : series) row.push_back((*s)[k]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

Plot trace_plot(const TransientTrace& trace, const std::vector<std::string>& nets,
                std::string name) {
    const auto picked = pick_nets(trace, nets);
    Plot p;
    p.name = std::move(name);
    p.title = "transient trace";
    p.x_label = "time (ns)";
    p.y_label = "voltage (V)";
    std::vector<double> t_ns;
    for (double t : trace.times) t_ns.push_back(t * 1e9);
    for (const auto& n : picked) p.series.push_back({n, t_ns, trace.voltage(n), false});
    return p;
}

json to_json(const EnergyReport& e) {
    return {{"per_phase_j", e.per_phase_j},
            {"per_driver_j", e.per_driver_j},
            {"core_j", e.core_j},
            {"periphery_j", e.periphery_j},
            {"total_j", e.total_j},
            {"bits", e.bits},
            {"searches", e.searches},
            {"per_bit_j", e.per_bit_j()},
            {"core_share", e.core_share()}};
}

Report fit_report(const FitResult& fit, const std::string& source) {
    auto branch = [](const BranchFit& b) {
        return json{{"a", b.a},
                    {"b_per_v", b.b},
                    {"rms_log", b.rms_log},
                    {"boundary_hit", b.boundary_hit},
                    {"iterations", b.iterations},
                    {"n_points", b.n_points}};
    };
    Report r;
    r.experiment = "fit-device";
    r.data = {{"source", source},
              {"model_card", to_model_card(fit.params, fit.fit_rms_log)},
              {"positive", branch(fit.positive)},
              {"negative", fit.negative ? branch(*fit.negative) : json(nullptr)},
              {"readout_error", fit.params.readout_error()},
              {"diagnostics", fit.diagnostics}};
    Table t{"model", "fitted IV model on a bipolar grid",
            {{"v_v", "applied voltage"}, {"i_a", "model current"}}, {}};
    Plot p{"iv", "fitted IV model", "voltage (V)", "|current| (A)", {}};
    PlotSeries s{"model", {}, {}, false};
    for (int k = 0; k <= 80; ++k) {
        const double v = -2.0 + 4.0 * k / 80.0;
        const double i = iv_current(fit.params, v);
        t.rows.push_back({v, i});
        s.x.push_back(v);
        s.y.push_back(std::abs(i));
    }
    p.series.push_back(std::move(s));
    r.tables.push_back(std::move(t));
    r.plots.push_back(std::move(p));
    return r;
}

Report truth_table_report(const std::vector<TruthRow>& rows) {
    Report r;
    r.experiment = "truth-table";
    Table t{"rows", "single-cell truth table",
            {{"cue", "searched value (1, 0, X)"},
             {"stored", "stored state (HRS, LRS)"},
             {"mid_level", "mid node level at enable"},
             {"ml_level", "match-line level at the comparator strobe"},
             {"v_mid_enable_v", "mid voltage at enable"},
             {"v_ml_sample_v", "match-line voltage at the strobe"}},
            {}};
    json arr = json::array();
    for (const auto& row : rows) {
        const std::string cue(1, to_char(row.cue));
        const std::string st = to_string(row.stored.label);
        arr.push_back({{"cue", cue},
                       {"stored", st},
                       {"mid_level", to_string(row.mid_level)},
                       {"ml_level", to_string(row.ml_level)},
                       {"v_mid_enable_v", row.v_mid_enable_v},
                       {"v_ml_sample_v", row.v_ml_sample_v}});
        t.rows.push_back({cue, st, to_string(row.mid_level), to_string(row.ml_level),
                          row.v_mid_enable_v, row.v_ml_sample_v});
    }
    r.data = {{"rows", arr}};
    r.tables.push_back(std::move(t));
    return r;
}

Report search_report(const DataWord& data, const CueWord& cue, const SearchRun& run) {
    Report r;
    r.experiment = "search";
    const auto& o = run.outcome;
    r.data = {{"data_pattern", to_pattern(data)},
              {"cue_pattern", to_pattern(cue)},
              {"rows", data.size()},
              {"ml_sample_v", o.ml_sample_v},
              {"vref_v", o.vref_v},
              {"decision", to_string(o.decision)},
              {"miss_count", o.miss_count_truth},
              {"energy", to_json(o.energy)}};
    std::vector<std::string> nets;
    for (const char* n : {"ml", "pre", "en", "sw", "cue_0", "cue_bar_0", "mid_0"}) {
        if (run.trace.has_net(n)) nets.emplace_back(n);
    }
    r.tables.push_back(trace_table(run.trace, nets));
    r.plots.push_back(trace_plot(run.trace, nets));
    return r;
}

Report aar_report(const AarSuiteReport& suite) {
    Report r;
    r.experiment = "aar";
    const auto& c = suite.calibration;
    Table t{"reads", "bit reads on the psw line",
            {{"row", "row index"},
             {"stored_one", "1 when the cell holds HRS"},
             {"bit", "bit decided by the comparator"},
             {"psw_sample_v", "psw voltage at the strobe"},
             {"correct", "1 when bit equals the stored value"}},
            {}};
    json misreads = json::array();
    for (const auto& rd : suite.reads) {
        t.rows.push_back({rd.row, rd.stored_one ? 1 : 0, rd.bit, rd.psw_sample_v, rd.correct ? 1 : 0});
        if (!rd.correct)
            misreads.push_back({{"row", rd.row}, {"stored_one", rd.stored_one},
                                {"bit", rd.bit}, {"psw_sample_v", rd.psw_sample_v}});
    }
    r.data = {{"calibration",
               {{"hrs_level_v", c.hrs_level_v},
                {"lrs_level_v", c.lrs_level_v},
                {"vref_v", c.vref_v},
                {"ok", c.ok},
                {"message", c.message}}},
              {"n_reads", suite.reads.size()},
              {"n_correct", suite.n_correct},
              {"all_correct", suite.all_correct()},
              {"misreads", misreads}};
    r.tables.push_back(std::move(t));
    return r;
}

Report write_sweep_report(WriteDirection direction, const std::vector<EsrPoint>& points) {
    Report r;
    r.experiment = "write-sweep";
    const std::string d = to_string(direction);
    Table t{"esr", "write drive into a linear stand-in resistor",
            {{"r_ohms", "stand-in resistance"},
             {"v_across_v", "voltage magnitude across the resistor"},
             {"i_a", "current through the resistor"},
             {"ok", "1 when the point solved"}},
            {}};
    PlotSeries s{d, {}, {}, false};
    json pts = json::array();
    for (const auto& p : points) {
        t.rows.push_back({p.r_ohms, p.v_across_v, p.i_a, p.ok ? 1 : 0});
        pts.push_back({{"r_ohms", p.r_ohms}, {"v_across_v", p.v_across_v}, {"i_a", p.i_a},
                       {"ok", p.ok}, {"error", p.error}});
        if (p.ok) {
            s.x.push_back(std::log10(p.r_ohms));
            s.y.push_back(std::abs(p.v_across_v));
        }
    }
    r.data = {{"direction", d}, {"points", pts}};
    r.tables.push_back(std::move(t));
    r.plots.push_back({"esr", "write voltage across the stand-in resistor", "log10 R (ohm)",
                       "|v| (V)", {std::move(s)}});
    return r;
}

Report write_sweep_report(const std::vector<EsrPoint>& forward,
                          const std::vector<EsrPoint>& reverse) {
    if (forward.size() != reverse.size())
        throw ValidationError("write sweep: forward and reverse grids differ in length");
    Report r;
    r.experiment = "write-sweep";
    Table t{"esr", "write drive into a linear stand-in resistor, both directions",
            {{"r_ohms", "stand-in resistance"},
             {"v_forward_v", "forward-write voltage magnitude across the resistor"},
             {"v_reverse_v", "reverse-write voltage magnitude across the resistor"},
             {"i_forward_a", "forward current"},
             {"i_reverse_a", "reverse current"}},
            {}};
    PlotSeries sf{"forward", {}, {}, false}, sr{"reverse", {}, {}, false};
    json pts = json::array();
    bool dominant = true, fwd_mono = true, rev_mono = true;
    for (std::size_t k = 0; k < forward.size(); ++k) {
        const auto& f = forward[k];
        const auto& b = reverse[k];
        if (f.r_ohms != b.r_ohms) throw ValidationError("write sweep: grids differ");
        t.rows.push_back({f.r_ohms, f.v_across_v, b.v_across_v, f.i_a, b.i_a});
        pts.push_back({{"r_ohms", f.r_ohms},
                       {"v_forward_v", f.v_across_v},
                       {"v_reverse_v", b.v_across_v},
                       {"i_forward_a", f.i_a},
                       {"i_reverse_a", b.i_a},
                       {"ok", f.ok && b.ok}});
        sf.x.push_back(std::log10(f.r_ohms));
        sf.y.push_back(std::abs(f.v_across_v));
        sr.x.push_back(std::log10(b.r_ohms));
        sr.y.push_back(std::abs(b.v_across_v));
        dominant = dominant && f.ok && b.ok && std::abs(f.v_across_v) >= std::abs(b.v_across_v);
        if (k > 0) {
            fwd_mono = fwd_mono && std::abs(f.v_across_v) >= std::abs(forward[k - 1].v_across_v);
            rev_mono = rev_mono && std::abs(b.v_across_v) >= std::abs(reverse[k - 1].v_across_v);
        }
    }
    r.data = {{"points", pts},
              {"forward_dominates", dominant},
              {"forward_monotone", fwd_mono},
              {"reverse_monotone", rev_mono}};
    r.tables.push_back(std::move(t));
    r.plots.push_back({"esr", "write voltage across the stand-in resistor", "log10 R (ohm)",
                       "|v| (V)", {std::move(sf), std::move(sr)}});
    return r;
}

Report table2_report(const Table2Result& res) {
    Report r;
    r.experiment = "table2";
    json dec = json::array(), exp = json::array(), ml = json::array(), miss = json::array(),
         ebit = json::array();
    Table t{"cells", "4x4 search suite, cue pattern by data pattern",
            {{"cue", "cue pattern index (1-4)"},
             {"data", "data pattern index (1-4)"},
             {"ml_sample_v", "match-line voltage at the strobe"},
             {"decision", "comparator decision"},
             {"expected", "expected decision"},
             {"miss_count", "rows that mismatch"},
             {"energy_per_bit_j", "metered search energy per bit"}},
            {}};
    for (int c = 0; c < 4; ++c) {
        json d_row = json::array(), e_row = json::array(), m_row = json::array(),
             n_row = json::array(), b_row = json::array();
        for (int d = 0; d < 4; ++d) {
            d_row.push_back(to_string(res.decisions[c][d]));
            e_row.push_back(to_string(res.expected[c][d]));
            m_row.push_back(res.gap.ml_sample_v[c][d]);
            n_row.push_back(res.miss_counts[c][d]);
            b_row.push_back(res.energy[c][d].per_bit_j());
            t.rows.push_back({cell_label(c), cell_label(d), res.gap.ml_sample_v[c][d],
                              to_string(res.decisions[c][d]), to_string(res.expected[c][d]),
                              res.miss_counts[c][d], res.energy[c][d].per_bit_j()});
        }
        dec.push_back(d_row);
        exp.push_back(e_row);
        ml.push_back(m_row);
        miss.push_back(n_row);
        ebit.push_back(b_row);
    }
    r.data = {{"vsec_v", res.vsec_v},
              {"vref_car_v", res.vref_car_v},
              {"decisions", dec},
              {"expected", exp},
              {"matches", res.matches()},
              {"misclassified", res.misclassified},
              {"ml_sample_v", ml},
              {"miss_counts", miss},
              {"energy_per_bit_j", ebit},
              {"gap",
               {{"min_hit_v", res.gap.min_hit_v},
                {"max_worst_miss_v", res.gap.max_worst_miss_v},
                {"gap_v", res.gap.gap_v},
                {"reference_gap_v", res.gap.reference_gap_v}}}};
    r.tables.push_back(std::move(t));
    return r;
}

Report vsec_sweep_report(const std::vector<GapCurve>& curves) {
    Report r;
    r.experiment = "sweep";
    Table t{"gap", "hit/miss gap versus V_SEC",
            {{"corner", "process corner"},
             {"vsec_v", "secondary supply"},
             {"gap_v", "min hit minus max worst miss"},
             {"min_hit_v", "lowest hit match-line voltage"},
             {"max_worst_miss_v", "highest worst-case miss match-line voltage"},
             {"ok", "1 when the point solved"}},
            {}};
    Plot p{"gap", "hit/miss gap versus V_SEC", "V_SEC (V)", "gap (V)", {}};
    json arr = json::array();
    for (const auto& c : curves) {
        json pts = json::array();
        PlotSeries s{c.corner, {}, {}, false};
        for (const auto& pt : c.points) {
            pts.push_back({{"vsec_v", pt.x},
                           {"gap_v", pt.gap_v},
                           {"min_hit_v", pt.min_hit_v},
                           {"max_worst_miss_v", pt.max_worst_miss_v},
                           {"ok", pt.ok},
                           {"error", pt.error}});
            t.rows.push_back({c.corner, pt.x, pt.gap_v, pt.min_hit_v, pt.max_worst_miss_v,
                              pt.ok ? 1 : 0});
            if (pt.ok) {
                s.x.push_back(pt.x);
                s.y.push_back(pt.gap_v);
            }
        }
        arr.push_back({{"corner", c.corner},
                       {"argmax_vsec_v", opt_json(c.argmax)},
                       {"unimodal", c.unimodal},
                       {"points", pts}});
        p.series.push_back(std::move(s));
    }
    r.data = {{"curves", arr}};
    r.tables.push_back(std::move(t));
    r.plots.push_back(std::move(p));
    return r;
}

Report energy_map_report(const EnergyMap& map) {
    Report r;
    r.experiment = "energy-map";
    Table t{"per_bit", "metered search energy per bit, cue pattern by data pattern",
            {{"cue", "cue pattern index (1-4)"},
             {"data", "data pattern index (1-4)"},
             {"energy_per_bit_j", "energy per bit"}},
            {}};
    json grid = json::array();
    for (int c = 0; c < 4; ++c) {
        json row = json::array();
        for (int d = 0; d < 4; ++d) {
            row.push_back(map.per_bit_j[c][d]);
            t.rows.push_back({cell_label(c), cell_label(d), map.per_bit_j[c][d]});
        }
        grid.push_back(row);
    }
    r.data = {{"per_bit_j", grid},
              {"worst", {{"cue", map.worst[0] + 1}, {"data", map.worst[1] + 1}}},
              {"best", {{"cue", map.best[0] + 1}, {"data", map.best[1] + 1}}},
              {"breakdown", to_json(map.breakdown)}};
    r.tables.push_back(std::move(t));
    return r;
}

Report timing_report(const TimingReport& timing, double c_ml_f) {
    Report r;
    r.experiment = "timing";
    r.data = {{"c_ml_f", c_ml_f},
              {"threshold_v", timing.threshold_v},
              {"developing_delay_hrs_s", opt_json(timing.developing_delay_hrs_s)},
              {"developing_delay_lrs_s", opt_json(timing.developing_delay_lrs_s)},
              {"pre_charge_s", timing.pre_charge_s},
              {"evaluate_s", opt_json(timing.evaluate_s)},
              {"search_delay_s", opt_json(timing.search_delay_s)}};
    return r;
}

}  // namespace camsim
