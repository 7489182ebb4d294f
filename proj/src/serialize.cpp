#include "meshlab/serialize.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace meshlab {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const char* what) {
    if (!j.is_object()) {
        throw std::invalid_argument(std::string(what) + ": expected a JSON object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (allowed.find(it.key()) == allowed.end()) {
            throw std::invalid_argument(std::string(what) + ": unknown key '" + it.key() + "'");
        }
    }
}

void check_schema(const json& j, const char* kind, const char* what) {
    if (!j.contains("schema_version") || !j["schema_version"].is_number_integer() ||
        j["schema_version"].get<int>() != kSchemaVersion) {
        throw std::invalid_argument(std::string(what) + ": missing or unsupported schema_version");
    }
    if (!j.contains("kind") || j["kind"].get<std::string>() != kind) {
        throw std::invalid_argument(std::string(what) + ": expected kind '" + kind + "'");
    }
}

json header(const char* kind, const Provenance& prov) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = kind;
    j["seed"] = prov.seed;
    j["invocation"] = prov.invocation;
    return j;
}

std::string csv_header(const Provenance& prov) {
    std::ostringstream os;
    os.precision(15);
    os << "# schema_version=" << kSchemaVersion << "\n";
    os << "# seed=" << prov.seed << "\n";
    os << "# invocation=" << prov.invocation << "\n";
    return os.str();
}

json complex_to_json(const Cx& z) { return json::array({z.real(), z.imag()}); }

Cx complex_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw std::invalid_argument(std::string(what) + ": complex entries must be [re, im]");
    }
    return Cx(j[0].get<double>(), j[1].get<double>());
}

json curve_to_json(const CalibrationCurve& c) {
    return json{{"a", c.a}, {"b", c.b}, {"c", c.c}, {"d", c.d_coef}};
}

CalibrationCurve curve_from_json(const json& j, const char* what) {
    check_keys(j, {"a", "b", "c", "d"}, what);
    CalibrationCurve c;
    c.a = j.at("a").get<double>();
    c.b = j.at("b").get<double>();
    c.c = j.at("c").get<double>();
    c.d_coef = j.at("d").get<double>();
    return c;
}

json stats_to_json(const FabricationStats& s) {
    return json{{"eta_mean", s.eta_mean},       {"eta_sd", s.eta_sd},
                {"eta_min", s.eta_min},         {"eta_max", s.eta_max},
                {"offset_mean", s.offset_mean}, {"offset_sd", s.offset_sd},
                {"phase_range", s.phase_range}, {"dcoef_mean", s.dcoef_mean},
                {"dcoef_sd", s.dcoef_sd}};
}

FabricationStats stats_from_json(const json& j) {
    check_keys(j,
               {"eta_mean", "eta_sd", "eta_min", "eta_max", "offset_mean", "offset_sd",
                "phase_range", "dcoef_mean", "dcoef_sd"},
               "fabrication_stats");
    FabricationStats s;
    s.eta_mean = j.at("eta_mean").get<double>();
    s.eta_sd = j.at("eta_sd").get<double>();
    s.eta_min = j.at("eta_min").get<double>();
    s.eta_max = j.at("eta_max").get<double>();
    s.offset_mean = j.at("offset_mean").get<double>();
    s.offset_sd = j.at("offset_sd").get<double>();
    s.phase_range = j.at("phase_range").get<double>();
    s.dcoef_mean = j.at("dcoef_mean").get<double>();
    s.dcoef_sd = j.at("dcoef_sd").get<double>();
    return s;
}

json settings_to_json_obj(const SettingsFile& file, const Provenance& prov) {
    json j = header("mesh_settings", prov);
    j["topology"] = topology_name(file.topology);
    j["d"] = file.d;
    json cells = json::array();
    for (const auto& [coord, s] : file.settings.cells) {
        cells.push_back(json{{"i", coord.i}, {"j", coord.j}, {"theta", s.theta}, {"phi", s.phi}});
    }
    j["cells"] = cells;
    if (file.settings.output_phases) {
        j["output_phases"] = *file.settings.output_phases;
    } else {
        j["output_phases"] = nullptr;
    }
    return j;
}

SettingsFile settings_from_json_obj(const json& j) {
    check_keys(j,
               {"schema_version", "kind", "seed", "invocation", "topology", "d", "cells",
                "output_phases"},
               "mesh_settings");
    check_schema(j, "mesh_settings", "mesh_settings");
    SettingsFile file;
    file.topology = topology_from_name(j.at("topology").get<std::string>());
    file.d = j.at("d").get<int>();
    for (const json& cj : j.at("cells")) {
        check_keys(cj, {"i", "j", "theta", "phi"}, "mesh_settings cell");
        CellCoord coord{cj.at("i").get<int>(), cj.at("j").get<int>()};
        file.settings.cells[coord] =
            CellSetting{cj.at("theta").get<double>(), cj.at("phi").get<double>()};
    }
    if (j.contains("output_phases") && !j.at("output_phases").is_null()) {
        file.settings.output_phases = j.at("output_phases").get<std::vector<double>>();
    }
    return file;
}

}  // namespace

std::string matrix_to_json(const TransferMatrix& m, const Provenance& prov) {
    json j = header("matrix", prov);
    j["rows"] = static_cast<int>(m.rows());
    j["cols"] = static_cast<int>(m.cols());
    json entries = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
        entries.push_back(row);
    }
    j["entries"] = entries;
    return j.dump(2) + "\n";
}

TransferMatrix matrix_from_json(const std::string& text) {
    const json j = json::parse(text);
    check_keys(j, {"schema_version", "kind", "seed", "invocation", "rows", "cols", "entries"},
               "matrix");
    check_schema(j, "matrix", "matrix");
    const int rows = j.at("rows").get<int>();
    const int cols = j.at("cols").get<int>();
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("matrix: non-positive dimensions");
    const json& entries = j.at("entries");
    if (!entries.is_array() || static_cast<int>(entries.size()) != rows) {
        throw std::invalid_argument("matrix: entries row count mismatch");
    }
    TransferMatrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const json& row = entries[r];
        if (!row.is_array() || static_cast<int>(row.size()) != cols) {
            throw std::invalid_argument("matrix: entries column count mismatch");
        }
        for (int c = 0; c < cols; ++c) m(r, c) = complex_from_json(row[c], "matrix");
    }
    return m;
}

std::string mesh_config_to_json(const MeshConfig& config, const Provenance& prov) {
    json j = header("mesh_config", prov);
    j["topology"] = topology_name(config.topology);
    j["d"] = config.d;
    json cells = json::array();
    for (const auto& [coord, p] : config.cells) {
        cells.push_back(json{{"i", coord.i},
                             {"j", coord.j},
                             {"dc1_eta", p.dc1.eta},
                             {"dc2_eta", p.dc2.eta},
                             {"phase_offset", p.phase_offset},
                             {"phase_range", p.phase_range},
                             {"heater_internal", curve_to_json(p.heater_internal)},
                             {"heater_external", curve_to_json(p.heater_external)}});
    }
    j["cells"] = cells;
    return j.dump(2) + "\n";
}

MeshConfig mesh_config_from_json(const std::string& text) {
    const json j = json::parse(text);
    check_keys(j, {"schema_version", "kind", "seed", "invocation", "topology", "d", "cells"},
               "mesh_config");
    check_schema(j, "mesh_config", "mesh_config");
    MeshConfig config;
    config.topology = topology_from_name(j.at("topology").get<std::string>());
    config.d = j.at("d").get<int>();
    for (const json& cj : j.at("cells")) {
        check_keys(cj,
                   {"i", "j", "dc1_eta", "dc2_eta", "phase_offset", "phase_range",
                    "heater_internal", "heater_external"},
                   "mesh_config cell");
        CellCoord coord{cj.at("i").get<int>(), cj.at("j").get<int>()};
        CellParams p;
        p.dc1.eta = cj.at("dc1_eta").get<double>();
        p.dc2.eta = cj.at("dc2_eta").get<double>();
        p.phase_offset = cj.at("phase_offset").get<double>();
        p.phase_range = cj.at("phase_range").get<double>();
        p.heater_internal = curve_from_json(cj.at("heater_internal"), "heater_internal");
        p.heater_external = curve_from_json(cj.at("heater_external"), "heater_external");
        config.cells[coord] = p;
    }
    return config;
}

std::string settings_to_json(const SettingsFile& file, const Provenance& prov) {
    return settings_to_json_obj(file, prov).dump(2) + "\n";
}

SettingsFile settings_from_json(const std::string& text) {
    const json j = json::parse(text);
    if (j.is_object() && j.contains("kind") && j["kind"] == "compile_report") {
        check_schema(j, "compile_report", "compile_report");
        return settings_from_json_obj(j.at("settings"));
    }
    return settings_from_json_obj(j);
}

std::string compile_report_to_json(const CompileReport& report, Topology topology, int d,
                                   const Provenance& prov) {
    json j = header("compile_report", prov);
    j["feasible"] = report.feasible;
    j["residual"] = report.residual;
    json diags = json::array();
    for (const CellDiagnostic& diag : report.diagnostics) {
        diags.push_back(json{{"i", diag.cell.i}, {"j", diag.cell.j}, {"note", diag.note}});
    }
    j["diagnostics"] = diags;
    j["settings"] = settings_to_json_obj(SettingsFile{topology, d, report.settings}, prov);
    return j.dump(2) + "\n";
}

std::string calibration_table_to_json(const CalibrationTable& table, const Provenance& prov) {
    json j = header("calibration_table", prov);
    j["topology"] = topology_name(table.topology);
    j["d"] = table.d;
    j["device_seed"] = table.device_seed;
    j["shots"] = table.shots;
    j["max_voltage"] = table.max_voltage;
    j["assumed_stats"] = table.assumed_stats ? stats_to_json(*table.assumed_stats) : json();
    j["dc_estimates"] = table.dc_estimates;
    json cells = json::array();
    for (const auto& [coord, cal] : table.cells) {
        cells.push_back(json{{"i", coord.i},
                             {"j", coord.j},
                             {"internal", curve_to_json(cal.internal)},
                             {"external", curve_to_json(cal.external)},
                             {"residual_internal", cal.residual_internal},
                             {"residual_external", cal.residual_external},
                             {"achieved_bar_min", cal.achieved_range.bar_min},
                             {"achieved_bar_max", cal.achieved_range.bar_max},
                             {"eta_estimate", cal.eta_estimate},
                             {"phase_span_internal", cal.phase_span_internal},
                             {"phase_span_external", cal.phase_span_external},
                             {"max_voltage_internal", cal.max_voltage_internal},
                             {"max_voltage_external", cal.max_voltage_external},
                             {"degenerate", cal.degenerate},
                             {"external_gauge", cal.external_gauge},
                             {"note", cal.note}});
    }
    j["cells"] = cells;
    const CalibrationSummary s = table.summary();
    j["summary"] = json{{"dc_mean", s.dc_mean},           {"dc_sd", s.dc_sd},
                        {"offset_mean", s.offset_mean},   {"offset_sd", s.offset_sd},
                        {"span_mean", s.span_mean},       {"span_sd", s.span_sd},
                        {"cells_total", s.cells_total},   {"cells_degenerate", s.cells_degenerate}};
    return j.dump(2) + "\n";
}

CalibrationTable calibration_table_from_json(const std::string& text) {
    const json j = json::parse(text);
    check_keys(j,
               {"schema_version", "kind", "seed", "invocation", "topology", "d", "device_seed",
                "shots", "max_voltage", "assumed_stats", "dc_estimates", "cells", "summary"},
               "calibration_table");
    check_schema(j, "calibration_table", "calibration_table");
    CalibrationTable table;
    table.topology = topology_from_name(j.at("topology").get<std::string>());
    table.d = j.at("d").get<int>();
    table.device_seed = j.at("device_seed").get<std::uint64_t>();
    table.shots = j.at("shots").get<double>();
    table.max_voltage = j.at("max_voltage").get<double>();
    if (!j.at("assumed_stats").is_null()) {
        table.assumed_stats = stats_from_json(j.at("assumed_stats"));
    }
    table.dc_estimates = j.at("dc_estimates").get<std::vector<double>>();
    for (const json& cj : j.at("cells")) {
        check_keys(cj,
                   {"i", "j", "internal", "external", "residual_internal", "residual_external",
                    "achieved_bar_min", "achieved_bar_max", "eta_estimate", "phase_span_internal",
                    "phase_span_external", "max_voltage_internal", "max_voltage_external",
                    "degenerate", "external_gauge", "note"},
                   "calibration cell");
        CellCoord coord{cj.at("i").get<int>(), cj.at("j").get<int>()};
        CellCalibration cal;
        cal.internal = curve_from_json(cj.at("internal"), "internal curve");
        cal.external = curve_from_json(cj.at("external"), "external curve");
        cal.residual_internal = cj.at("residual_internal").get<double>();
        cal.residual_external = cj.at("residual_external").get<double>();
        cal.achieved_range.bar_min = cj.at("achieved_bar_min").get<double>();
        cal.achieved_range.bar_max = cj.at("achieved_bar_max").get<double>();
        cal.eta_estimate = cj.at("eta_estimate").get<double>();
        cal.phase_span_internal = cj.at("phase_span_internal").get<double>();
        cal.phase_span_external = cj.at("phase_span_external").get<double>();
        cal.max_voltage_internal = cj.at("max_voltage_internal").get<double>();
        cal.max_voltage_external = cj.at("max_voltage_external").get<double>();
        cal.degenerate = cj.at("degenerate").get<bool>();
        cal.external_gauge = cj.at("external_gauge").get<bool>();
        cal.note = cj.at("note").get<std::string>();
        table.cells[coord] = cal;
    }
    return table;
}

std::string platforms_to_json(const std::vector<PlatformLossModel>& models,
                              const Provenance& prov) {
    json j = header("platforms", prov);
    json arr = json::array();
    for (const PlatformLossModel& m : models) {
        arr.push_back(json{{"name", m.name},
                           {"alpha_s_db_per_m", m.alpha_s},
                           {"bend_A", m.bend_A},
                           {"bend_B", m.bend_B},
                           {"alpha_t_db_per_m", m.alpha_t},
                           {"L_t_m", m.L_t},
                           {"radius_unit", radius_unit_name(m.radius_unit)}});
    }
    j["platforms"] = arr;
    return j.dump(2) + "\n";
}

std::vector<PlatformLossModel> platforms_from_json(const std::string& text) {
    const json j = json::parse(text);
    check_keys(j, {"schema_version", "kind", "seed", "invocation", "platforms"}, "platforms");
    check_schema(j, "platforms", "platforms");
    std::vector<PlatformLossModel> models;
    for (const json& mj : j.at("platforms")) {
        check_keys(mj,
                   {"name", "alpha_s_db_per_m", "bend_A", "bend_B", "alpha_t_db_per_m", "L_t_m",
                    "radius_unit"},
                   "platform");
        PlatformLossModel m;
        m.name = mj.at("name").get<std::string>();
        m.alpha_s = mj.at("alpha_s_db_per_m").get<double>();
        m.bend_A = mj.at("bend_A").get<double>();
        m.bend_B = mj.at("bend_B").get<double>();
        m.alpha_t = mj.at("alpha_t_db_per_m").get<double>();
        m.L_t = mj.at("L_t_m").get<double>();
        m.radius_unit = radius_unit_from_name(mj.at("radius_unit").get<std::string>());
        models.push_back(m);
    }
    return models;
}

std::string truth_table_to_json(const TruthTable& table, const Provenance& prov) {
    json j = header("truth_table", prov);
    j["d"] = static_cast<int>(table.p.rows());
    json rows = json::array();
    for (Eigen::Index r = 0; r < table.p.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < table.p.cols(); ++c) row.push_back(table.p(r, c));
        rows.push_back(row);
    }
    j["p"] = rows;
    return j.dump(2) + "\n";
}

std::string hom_scan_to_json(const HomScan& scan, const Provenance& prov) {
    json j = header("hom_scan", prov);
    j["delays"] = scan.delays;
    j["coincidences"] = scan.coincidences;
    j["expected_counts"] = scan.expected_counts;
    j["visibility"] = scan.visibility;
    j["fit"] = json{{"baseline", scan.fitted.baseline}, {"depth", scan.fitted.depth},
                    {"center", scan.fitted.center},     {"sigma", scan.fitted.sigma},
                    {"rms", scan.fitted.rms},           {"converged", scan.fitted.converged}};
    return j.dump(2) + "\n";
}

std::string truth_table_to_csv(const TruthTable& table, const Provenance& prov) {
    std::ostringstream os;
    os.precision(15);
    os << csv_header(prov);
    os << "input,output,probability\n";
    for (Eigen::Index in = 0; in < table.p.cols(); ++in) {
        for (Eigen::Index out = 0; out < table.p.rows(); ++out) {
            os << in << "," << out << "," << table.p(out, in) << "\n";
        }
    }
    return os.str();
}

std::string hom_scan_to_csv(const HomScan& scan, const Provenance& prov) {
    std::ostringstream os;
    os.precision(15);
    os << csv_header(prov);
    os << "# visibility=" << scan.visibility << "\n";
    const bool with_counts = scan.expected_counts.size() == scan.delays.size();
    os << (with_counts ? "delay,coincidence_probability,expected_counts\n"
                       : "delay,coincidence_probability\n");
    for (std::size_t k = 0; k < scan.delays.size(); ++k) {
        os << scan.delays[k] << "," << scan.coincidences[k];
        if (with_counts) os << "," << scan.expected_counts[k];
        os << "\n";
    }
    return os.str();
}

std::string fringe_to_csv(const FringeData& data, const Provenance& prov) {
    std::ostringstream os;
    os.precision(15);
    os << csv_header(prov);
    os << "# shots=" << data.shots << "\n";
    os << "voltage,counts\n";
    for (std::size_t k = 0; k < data.voltages.size(); ++k) {
        os << data.voltages[k] << "," << data.counts[k] << "\n";
    }
    return os.str();
}

std::string complexity_to_csv(const std::vector<ComplexityRow>& rows,
                              const std::vector<ReferencePoint>& annotations,
                              const Provenance& prov) {
    std::ostringstream os;
    os.precision(15);
    os << csv_header(prov);
    for (const ReferencePoint& ref : annotations) {
        os << "# ref platform=" << ref.platform << " R_mm=" << ref.radius << " c_f=" << ref.c_f
           << " label=\"" << ref.label << "\"\n";
    }
    os << "platform,R,radius_unit,L_uc_m,cell_loss_dB,n,c_f\n";
    for (const ComplexityRow& row : rows) {
        os << row.platform << "," << row.radius << "," << radius_unit_name(row.radius_unit) << ","
           << row.L_uc << "," << row.cell_loss_db << "," << row.n << "," << row.c_f << "\n";
    }
    return os.str();
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file for reading: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace meshlab
