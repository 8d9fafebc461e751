#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "camsim/errors.hpp"
#include "camsim/report_io.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace camsim;
using nlohmann::json;

// Everything crosses the boundary as JSON text; the Python package decodes it.
namespace {

ArrayConfig array_from(const std::string& config) {
    if (config.empty()) return ArrayConfig{};
    return config_from_json(json::parse(config)).array;
}

std::string dump(const Report& r) { return r.to_json().dump(); }

std::string truth_table(const std::string& config) {
    const auto cfg = array_from(config);
    std::vector<TruthRow> rows;
    for (CueValue cue : {CueValue::One, CueValue::Zero, CueValue::DontCare})
        for (const auto& st : {ResistiveState::hrs(), ResistiveState::lrs()})
            rows.push_back(evaluate_truth_table(cue, st, cfg.cell));
    return dump(truth_table_report(rows));
}

std::string search(const std::string& data, const std::string& cue, const std::string& config,
                   bool trace) {
    const auto cfg = array_from(config);
    const auto d = parse_data_word(data, cfg.rows);
    const auto c = parse_cue_word(cue, cfg.rows);
    auto r = search_report(d, c, run_search_traced(d, c, cfg));
    if (!trace) r.tables.clear();
    return dump(r);
}

std::string table2(const std::string& config, bool calibrate, int jobs) {
    return dump(table2_report(run_table2_suite(array_from(config), calibrate, jobs)));
}

std::string sweep_vsec_json(const std::string& corner, double start, double stop, double step,
                            const std::string& config, int jobs) {
    SweepPlan plan;
    plan.start = start;
    plan.stop = stop;
    plan.step = step;
    const auto cfg = array_from(config);
    std::vector<CornerModel> corners =
        corner == "all" ? CornerModel::all() : std::vector<CornerModel>{CornerModel::named(corner)};
    std::vector<GapCurve> curves;
    for (const auto& c : corners) curves.push_back(sweep_vsec(plan, c, cfg, jobs));
    return dump(vsec_sweep_report(curves));
}

std::string energy(const std::string& config, int jobs) {
    return dump(energy_map_report(energy_map(array_from(config), jobs)));
}

std::string timing(const std::string& config) {
    const auto cfg = array_from(config);
    return dump(timing_report(measure_search_timing(cfg), cfg.c_ml_f));
}

std::string aar(const std::vector<std::string>& columns, const std::string& config) {
    const auto cfg = array_from(config);
    std::vector<DataWord> cols;
    for (const auto& c : columns) cols.push_back(parse_data_word(c, cfg.rows));
    return dump(aar_report(run_aar_suite(cfg, cols)));
}

std::string write_sweep(const std::string& direction, const std::vector<double>& resistances,
                        const std::string& config) {
    const auto cell = array_from(config).cell;
    const auto grid = resistances.empty() ? default_esr_grid() : resistances;
    if (direction == "both")
        return dump(write_sweep_report(write_esr_sweep(WriteDirection::Forward, grid, cell),
                                       write_esr_sweep(WriteDirection::Reverse, grid, cell)));
    const auto d = write_direction_from_string(direction);
    return dump(write_sweep_report(d, write_esr_sweep(d, grid, cell)));
}

std::string fit_device(const std::vector<double>& v, const std::vector<double>& i, double rs_ohms) {
    if (v.size() != i.size()) throw ValidationError("v and i differ in length");
    IvSweep sweep;
    for (std::size_t k = 0; k < v.size(); ++k) sweep.points.push_back({v[k], i[k]});
    return dump(fit_report(fit_iv_params(sweep, rs_ohms), "python"));
}

std::vector<double> iv(const std::string& card, const std::vector<double>& v) {
    const auto p = from_model_card(json::parse(card));
    std::vector<double> out;
    out.reserve(v.size());
    for (double x : v) out.push_back(iv_current(p, x));
    return out;
}

std::string model_card(double rs_ohms, double b) {
    ResistiveState st{StateLabel::Custom, rs_ohms};
    if (rs_ohms == kLrsOhms) st = ResistiveState::lrs();
    if (rs_ohms == kHrsOhms) st = ResistiveState::hrs();
    return to_model_card(RramParams::calibrated(st, b)).dump();
}

std::string export_json(const std::string& report, const std::string& dir, const std::string& format) {
    const json j = json::parse(report);
    Report r;
    r.experiment = j.at("experiment").get<std::string>();
    r.data = j.at("data");
    for (const auto& [name, t] : j.at("tables").items()) {
        Table tab;
        tab.name = name;
        tab.title = name;
        for (const auto& c : t.at("columns")) tab.columns.push_back({c.get<std::string>(), ""});
        for (const auto& row : t.at("rows")) tab.rows.push_back(row.get<std::vector<json>>());
        r.tables.push_back(std::move(tab));
    }
    json paths = json::array();
    for (const auto& p : export_report(r, dir, export_format_from_string(format))) paths.push_back(p.string());
    return paths.dump();
}

std::string default_config() { return config_to_json(RunConfig{}).dump(); }

}  // namespace

PYBIND11_MODULE(_camsim, m) {
    m.doc() = "Capacitive RRAM TCAM simulator core (JSON in, JSON out)";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<FitError>(m, "FitError", PyExc_RuntimeError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.attr("REPORT_SCHEMA") = kReportSchema;

    m.def("default_config", &default_config);
    m.def("model_card", &model_card, "rs_ohms"_a, "b"_a);
    m.attr("LRS_OHMS") = kLrsOhms;
    m.attr("HRS_OHMS") = kHrsOhms;
    m.def("iv_current", &iv, "card"_a, "v"_a);
    m.def("fit_device", &fit_device, "v"_a, "i"_a, "rs_ohms"_a,
          py::call_guard<py::gil_scoped_release>());
    m.def("truth_table", &truth_table, "config"_a, py::call_guard<py::gil_scoped_release>());
    m.def("search", &search, "data"_a, "cue"_a, "config"_a, "trace"_a,
          py::call_guard<py::gil_scoped_release>());
    m.def("table2", &table2, "config"_a, "calibrate"_a, "jobs"_a,
          py::call_guard<py::gil_scoped_release>());
    m.def("sweep_vsec", &sweep_vsec_json, "corner"_a, "start"_a, "stop"_a, "step"_a, "config"_a,
          "jobs"_a, py::call_guard<py::gil_scoped_release>());
    m.def("energy_map", &energy, "config"_a, "jobs"_a, py::call_guard<py::gil_scoped_release>());
    m.def("timing", &timing, "config"_a, py::call_guard<py::gil_scoped_release>());
    m.def("aar", &aar, "columns"_a, "config"_a, py::call_guard<py::gil_scoped_release>());
    m.def("write_sweep", &write_sweep, "direction"_a, "resistances"_a, "config"_a,
          py::call_guard<py::gil_scoped_release>());
    m.def("export_report", &export_json, "report"_a, "dir"_a, "format"_a);
}
