#pragma once

// Run configuration files and report emission (JSON, CSV, SVG).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "camsim/experiments.hpp"

namespace camsim {

inline constexpr const char* kReportSchema = "camsim-report/1";

/// Experiments a config may select; the CLI subcommand names.
[[nodiscard]] const std::vector<std::string>& experiment_names();

struct RunConfig {
    ArrayConfig array;            // cell, device and solver live inside
    std::string experiment = "suite";
    std::string output_dir;       // empty: CAMSIM_OUT, else the working directory
    int jobs = 1;

    void validate() const;
    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Sections: device, cell, array, solver, experiment, output_dir, seed, jobs.
/// Every section is optional; unknown keys throw ValidationError. A device
/// section of the form {"model_card": "<path>"} is resolved against `base_dir`.
[[nodiscard]] RunConfig config_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = {});
[[nodiscard]] nlohmann::json config_to_json(const RunConfig& cfg);
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& cfg, const std::filesystem::path& path);

/// CAMSIM_OUT when set and non-empty, else ".".
[[nodiscard]] std::filesystem::path default_output_dir();

struct Column {
    std::string name;         // carries its unit suffix
    std::string description;
};

struct Table {
    std::string name;
    std::string title;
    std::vector<Column> columns;
    std::vector<std::vector<nlohmann::json>> rows;  // numbers or strings
};

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool step = false;
};

struct Plot {
    std::string name;
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
};

struct Report {
    std::string experiment;
    nlohmann::json data = nlohmann::json::object();
    std::vector<Table> tables;
    std::vector<Plot> plots;

    /// Full JSON document: schema, experiment, data and the tables.
    [[nodiscard]] nlohmann::json to_json() const;
};

enum class ExportFormat { Json, Csv, Svg };

[[nodiscard]] ExportFormat export_format_from_string(std::string_view s);

void write_table_csv(std::ostream& out, const Table& table);
void write_plot_svg(std::ostream& out, const Plot& plot);

/// `<experiment>_report.json` is always written; csv adds one file per table,
/// svg one per plot. Files are written to a temporary name and renamed.
/// Throws IoError naming the path on failure. Returns the written paths.
std::vector<std::filesystem::path> export_report(const Report& report,
                                                 const std::filesystem::path& dir,
                                                 ExportFormat format);

/// Atomically replaces `path` with `content`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Time column plus one column per requested net (all nets when empty).
[[nodiscard]] Table trace_table(const TransientTrace& trace, const std::vector<std::string>& nets,
                                std::string name = "trace");
[[nodiscard]] Plot trace_plot(const TransientTrace& trace, const std::vector<std::string>& nets,
                              std::string name = "trace");

[[nodiscard]] nlohmann::json to_json(const EnergyReport& e);

[[nodiscard]] Report fit_report(const FitResult& fit, const std::string& source);
[[nodiscard]] Report truth_table_report(const std::vector<TruthRow>& rows);
[[nodiscard]] Report search_report(const DataWord& data, const CueWord& cue, const SearchRun& run);
[[nodiscard]] Report aar_report(const AarSuiteReport& suite);
[[nodiscard]] Report write_sweep_report(WriteDirection direction, const std::vector<EsrPoint>& points);
/// Both directions in one report.
[[nodiscard]] Report write_sweep_report(const std::vector<EsrPoint>& forward,
                                        const std::vector<EsrPoint>& reverse);
[[nodiscard]] Report table2_report(const Table2Result& result);
[[nodiscard]] Report vsec_sweep_report(const std::vector<GapCurve>& curves);
[[nodiscard]] Report energy_map_report(const EnergyMap& map);
[[nodiscard]] Report timing_report(const TimingReport& timing, double c_ml_f);

}  // namespace camsim
