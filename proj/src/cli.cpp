#include "meshlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "meshlab/calibration.hpp"
#include "meshlab/compiler.hpp"
#include "meshlab/complexity.hpp"
#include "meshlab/mesh.hpp"
#include "meshlab/quantum.hpp"
#include "meshlab/serialize.hpp"

namespace meshlab {

namespace {

namespace fs = std::filesystem;

// Shared flags, with defaults optionally taken from the JSON config file
// named by MESHLAB_CONFIG. Flags override config values.
struct BaseOptions {
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::string format;  // per-command default when empty
};

void load_env_config(BaseOptions& base) {
    const char* path = std::getenv("MESHLAB_CONFIG");
    if (path == nullptr || *path == '\0') return;
    const nlohmann::json j = nlohmann::json::parse(read_text_file(path));
    if (!j.is_object()) throw std::invalid_argument("config file must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() == "seed") {
            base.seed = it.value().get<std::uint64_t>();
        } else if (it.key() == "out") {
            base.out_dir = it.value().get<std::string>();
        } else if (it.key() == "format") {
            base.format = it.value().get<std::string>();
        } else {
            throw std::invalid_argument("config file: unknown key '" + it.key() + "'");
        }
    }
}

std::string join_invocation(int argc, const char* const* argv) {
    std::ostringstream os;
    for (int k = 0; k < argc; ++k) {
        if (k > 0) os << ' ';
        os << argv[k];
    }
    return os.str();
}

std::string pick_format(const std::string& requested, const std::string& fallback) {
    const std::string f = requested.empty() ? fallback : requested;
    if (f != "json" && f != "csv") {
        throw std::invalid_argument("format must be json or csv, got '" + f + "'");
    }
    return f;
}

std::string out_path(const BaseOptions& base, const std::string& name) {
    fs::create_directories(base.out_dir);
    return (fs::path(base.out_dir) / name).string();
}

std::vector<double> log_grid(double lo, double hi, int points) {
    if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("need 0 < r-min < r-max");
    if (points < 2) throw std::invalid_argument("grid needs at least two points");
    std::vector<double> g(points);
    const double llo = std::log10(lo), lhi = std::log10(hi);
    for (int k = 0; k < points; ++k) {
        g[k] = std::pow(10.0, llo + (lhi - llo) * k / (points - 1));
    }
    return g;
}

std::vector<double> linear_grid(double lo, double hi, int points) {
    if (points < 2) throw std::invalid_argument("grid needs at least two points");
    std::vector<double> g(points);
    for (int k = 0; k < points; ++k) g[k] = lo + (hi - lo) * k / (points - 1);
    return g;
}

struct CompileArgs {
    std::string topology = "blass";
    bool topology_set = false;
    int d = 0;
    int xgate_shift = -1;
    std::string unitary_file;
    double lossy_bs_alpha = std::numeric_limits<double>::quiet_NaN();
    double tol = 1e-9;
};

int run_compile(const BaseOptions& base, const CompileArgs& args, const Provenance& prov) {
    const bool want_xgate = args.xgate_shift >= 0;
    const bool want_unitary = !args.unitary_file.empty();
    const bool want_lossy = std::isfinite(args.lossy_bs_alpha);
    if (static_cast<int>(want_xgate) + static_cast<int>(want_unitary) +
            static_cast<int>(want_lossy) != 1) {
        throw std::invalid_argument("pick exactly one of --xgate, --unitary, --lossy-bs");
    }
    const Topology topo = topology_from_name(args.topology);

    CompileReport report;
    int d = args.d;
    Topology file_topo = topo;
    if (want_xgate) {
        if (d < 2) throw std::invalid_argument("--xgate needs --d >= 2");
        if (args.topology_set && topo != Topology::triangular) {
            throw std::invalid_argument("the cyclic-shift pattern is defined on the triangular mesh");
        }
        file_topo = Topology::triangular;
        report.settings = xgate_settings(GateSpec{d, args.xgate_shift});
    } else if (want_lossy) {
        if (args.topology_set && topo != Topology::blass) {
            throw std::invalid_argument("--lossy-bs targets the 2x2 blass mesh");
        }
        file_topo = Topology::blass;
        report.settings = lossy_bs_settings(LossyBsSpec{args.lossy_bs_alpha});
        d = 2;
    } else {
        const TransferMatrix target = matrix_from_json(read_text_file(args.unitary_file));
        if (target.rows() != target.cols()) {
            throw std::invalid_argument("target matrix must be square");
        }
        d = static_cast<int>(target.rows());
        if (topo == Topology::triangular) {
            report.settings = reck_decompose(target);
        } else {
            report = blass_synthesize(target, MeshConfig::ideal(Topology::blass, d), args.tol);
        }
    }

    write_text_file(out_path(base, "settings.json"),
                    settings_to_json(SettingsFile{file_topo, d, report.settings}, prov));
    write_text_file(out_path(base, "compile_report.json"),
                    compile_report_to_json(report, file_topo, d, prov));
    std::cout << "compile: feasible=" << (report.feasible ? "yes" : "no")
              << " residual=" << report.residual << " diagnostics=" << report.diagnostics.size()
              << "\n";
    for (const CellDiagnostic& diag : report.diagnostics) {
        std::cerr << "  cell (" << diag.cell.i << "," << diag.cell.j << "): " << diag.note << "\n";
    }
    return report.feasible ? 0 : 3;
}

struct SimulateArgs {
    std::string settings_file;
    int input = -1;
};

int run_simulate(const BaseOptions& base, const SimulateArgs& args, const Provenance& prov) {
    const SettingsFile file = settings_from_json(read_text_file(args.settings_file));
    const MeshConfig config = MeshConfig::ideal(file.topology, file.d);
    const TransferMatrix t = forward(config, file.settings).effective;
    write_text_file(out_path(base, "unitary.json"), matrix_to_json(t, prov));
    std::ostringstream summary;
    summary.precision(15);
    summary << "simulate: d=" << file.d << " max_singular=" << max_singular_value(t);
    if (args.input >= 0) {
        if (args.input >= file.d) throw std::invalid_argument("--input mode out of range");
        Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(file.d);
        amp(args.input) = 1.0;
        const SuperpositionResult r = superposition_evolve(t, amp);
        std::ostringstream col;
        col.precision(15);
        col << "# schema_version=" << kSchemaVersion << "\n# seed=" << prov.seed
            << "\n# invocation=" << prov.invocation << "\noutput,probability\n";
        for (int k = 0; k < file.d; ++k) col << k << "," << r.probabilities[k] << "\n";
        write_text_file(out_path(base, "evolve.csv"), col.str());
        summary << " loss=" << r.loss_probability;
    }
    std::cout << summary.str() << "\n";
    return 0;
}

struct HomArgs {
    std::string settings_file;
    std::vector<int> in_modes{0, 1};
    std::vector<int> out_modes{0, 1};
    double vsrc = 0.81;
    double dip_sigma = 1.0;
    double mu = 0.01;
    double eta_h = 0.30;
    double eta_d = 0.85;
    double pair_rate = 0.0;
    double delay_min = -5.0;
    double delay_max = 5.0;
    int delay_points = 101;
};

int run_hom(const BaseOptions& base, const HomArgs& args, const Provenance& prov) {
    if (args.in_modes.size() != 2 || args.out_modes.size() != 2) {
        throw std::invalid_argument("--in and --out-modes each need two entries");
    }
    const SettingsFile file = settings_from_json(read_text_file(args.settings_file));
    const TransferMatrix t =
        forward(MeshConfig::ideal(file.topology, file.d), file.settings).effective;
    SourceModel source;
    source.v_src = args.vsrc;
    source.dip_sigma = args.dip_sigma;
    source.mean_photon_number = args.mu;
    source.heralding_eff = args.eta_h;
    source.detector_eff = args.eta_d;
    const HomScan scan =
        hom_scan(t, {args.in_modes[0], args.in_modes[1]}, {args.out_modes[0], args.out_modes[1]},
                 source, linear_grid(args.delay_min, args.delay_max, args.delay_points),
                 args.pair_rate);
    const std::string format = pick_format(base.format, "csv");
    if (format == "csv") {
        write_text_file(out_path(base, "hom_scan.csv"), hom_scan_to_csv(scan, prov));
    } else {
        write_text_file(out_path(base, "hom_scan.json"), hom_scan_to_json(scan, prov));
    }
    std::cout.precision(15);
    std::cout << "hom: visibility=" << scan.visibility << " fit_sigma=" << scan.fitted.sigma
              << " converged=" << (scan.fitted.converged ? "yes" : "no") << "\n";
    return 0;
}

struct TruthTableArgs {
    std::string settings_file;
};

int run_truth_table(const BaseOptions& base, const TruthTableArgs& args, const Provenance& prov) {
    const SettingsFile file = settings_from_json(read_text_file(args.settings_file));
    const TransferMatrix t =
        forward(MeshConfig::ideal(file.topology, file.d), file.settings).effective;
    const TruthTable table = truth_table(t);
    double completeness = 1.0;
    for (int in = 0; in < file.d; ++in) {
        completeness = std::min(completeness, t.col(in).squaredNorm());
    }
    const std::string format = pick_format(base.format, "json");
    if (format == "csv") {
        write_text_file(out_path(base, "truth_table.csv"), truth_table_to_csv(table, prov));
    } else {
        write_text_file(out_path(base, "truth_table.json"), truth_table_to_json(table, prov));
    }
    std::cout.precision(15);
    std::cout << "truth-table: d=" << file.d << " completeness=" << completeness << "\n";
    return 0;
}

struct CalibrateArgs {
    int d = 4;
    std::uint64_t device_seed = 0;
    bool ideal = false;
    double shots = 1e4;
    int points = 50;
    bool exact = false;
};

int run_calibrate(const BaseOptions& base, const CalibrateArgs& args, const Provenance& prov) {
    VirtualDevice device =
        args.ideal ? VirtualDevice(MeshConfig::ideal(Topology::blass, args.d), args.device_seed)
                   : VirtualDevice::sampled_device(Topology::blass, args.d, FabricationStats{},
                                                   args.device_seed);
    CalibrationOptions options;
    options.shots = args.shots;
    options.voltage_points = args.points;
    options.poisson_noise = !args.exact;
    const CalibrationTable table = calibrate_mesh(device, options);
    write_text_file(out_path(base, "calibration_table.json"),
                    calibration_table_to_json(table, prov));
    const CalibrationSummary s = table.summary();
    std::cout.precision(15);
    std::cout << "calibrate: cells=" << s.cells_total << " degenerate=" << s.cells_degenerate
              << " dc_mean=" << s.dc_mean << " dc_sd=" << s.dc_sd << "\n";
    return 0;
}

struct ComplexityArgs {
    std::string platforms_file;
    double r_min = 0.01;
    double r_max = 50.0;
    int points = 200;
    bool annotate = false;
};

int run_complexity(const BaseOptions& base, const ComplexityArgs& args, const Provenance& prov) {
    const std::vector<PlatformLossModel> models =
        args.platforms_file.empty() ? default_platforms()
                                    : platforms_from_json(read_text_file(args.platforms_file));
    const std::vector<ComplexityRow> rows =
        complexity_curve(models, log_grid(args.r_min, args.r_max, args.points));
    const std::vector<ReferencePoint> refs =
        args.annotate ? reference_points() : std::vector<ReferencePoint>{};
    const std::string format = pick_format(base.format, "csv");
    if (format == "csv") {
        write_text_file(out_path(base, "complexity.csv"), complexity_to_csv(rows, refs, prov));
    } else {
        nlohmann::json j;
        j["schema_version"] = kSchemaVersion;
        j["kind"] = "complexity_curve";
        j["seed"] = prov.seed;
        j["invocation"] = prov.invocation;
        nlohmann::json arr = nlohmann::json::array();
        for (const ComplexityRow& row : rows) {
            arr.push_back({{"platform", row.platform},
                           {"R", row.radius},
                           {"radius_unit", radius_unit_name(row.radius_unit)},
                           {"L_uc_m", row.L_uc},
                           {"cell_loss_dB", row.cell_loss_db},
                           {"n", row.n},
                           {"c_f", row.c_f}});
        }
        j["rows"] = arr;
        nlohmann::json refs_json = nlohmann::json::array();
        for (const ReferencePoint& ref : refs) {
            refs_json.push_back({{"platform", ref.platform},
                                 {"R_mm", ref.radius},
                                 {"c_f", ref.c_f},
                                 {"label", ref.label}});
        }
        j["annotations"] = refs_json;
        write_text_file(out_path(base, "complexity.json"), j.dump(2) + "\n");
    }
    double max_cf = 0.0;
    std::string max_platform;
    for (const ComplexityRow& row : rows) {
        if (row.c_f > max_cf) {
            max_cf = row.c_f;
            max_platform = row.platform;
        }
    }
    std::cout.precision(15);
    std::cout << "complexity: rows=" << rows.size() << " max_c_f=" << max_cf << " platform="
              << max_platform << "\n";
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    BaseOptions base;
    CLI::App app{"meshlab: compile and simulate programmable MZI meshes"};
    app.require_subcommand(1);

    try {
        load_env_config(base);
    } catch (const std::exception& e) {
        std::cerr << "error: MESHLAB_CONFIG: " << e.what() << "\n";
        return 3;
    }

    app.add_option("--seed", base.seed, "master RNG seed, recorded in every output")
        ->capture_default_str();
    app.add_option("--out", base.out_dir, "output directory")->capture_default_str();
    app.add_option("--format", base.format, "output format: json or csv");

    CompileArgs compile_args;
    CLI::App* compile = app.add_subcommand("compile", "compile a target onto a mesh");
    compile->fallthrough();
    compile->add_option("--topology", compile_args.topology, "blass or triangular")
        ->capture_default_str();
    compile->add_option("--d", compile_args.d, "mesh dimension");
    compile->add_option("--xgate", compile_args.xgate_shift, "cyclic shift amount n of X^n");
    compile->add_option("--unitary", compile_args.unitary_file, "target unitary, matrix JSON");
    compile->add_option("--lossy-bs", compile_args.lossy_bs_alpha,
                        "lossy beam splitter phase alpha, rad");
    compile->add_option("--tol", compile_args.tol, "feasibility tolerance")
        ->capture_default_str();

    SimulateArgs simulate_args;
    CLI::App* simulate = app.add_subcommand("simulate", "forward-evaluate a settings file");
    simulate->fallthrough();
    simulate->add_option("--settings", simulate_args.settings_file, "settings JSON")->required();
    simulate->add_option("--input", simulate_args.input, "basis input mode to evolve");

    HomArgs hom_args;
    CLI::App* hom = app.add_subcommand("hom", "two-photon interference delay scan");
    hom->fallthrough();
    hom->add_option("--settings", hom_args.settings_file, "settings JSON")->required();
    hom->add_option("--in", hom_args.in_modes, "two input modes")->expected(2);
    hom->add_option("--out-modes", hom_args.out_modes, "two output modes")->expected(2);
    hom->add_option("--vsrc", hom_args.vsrc, "source indistinguishability")
        ->capture_default_str();
    hom->add_option("--dip-sigma", hom_args.dip_sigma, "dip width parameter")
        ->capture_default_str();
    hom->add_option("--mu", hom_args.mu, "mean photon number per pulse")->capture_default_str();
    hom->add_option("--eta-h", hom_args.eta_h, "heralding efficiency")->capture_default_str();
    hom->add_option("--eta-d", hom_args.eta_d, "detector efficiency")->capture_default_str();
    hom->add_option("--pair-rate", hom_args.pair_rate, "pair rate for expected counts")
        ->capture_default_str();
    hom->add_option("--delay-min", hom_args.delay_min, "first delay")->capture_default_str();
    hom->add_option("--delay-max", hom_args.delay_max, "last delay")->capture_default_str();
    hom->add_option("--delay-points", hom_args.delay_points, "grid size")->capture_default_str();

    TruthTableArgs tt_args;
    CLI::App* tt = app.add_subcommand("truth-table", "classical truth table of a settings file");
    tt->fallthrough();
    tt->add_option("--settings", tt_args.settings_file, "settings JSON")->required();

    CalibrateArgs cal_args;
    CLI::App* cal = app.add_subcommand("calibrate", "calibrate a virtual device");
    cal->fallthrough();
    cal->add_option("--d", cal_args.d, "mesh dimension")->capture_default_str();
    cal->add_option("--device-seed", cal_args.device_seed, "fabrication sampling seed")
        ->capture_default_str();
    cal->add_flag("--ideal", cal_args.ideal, "calibrate an ideal device instead of a sampled one");
    cal->add_option("--shots", cal_args.shots, "shots per fringe point")->capture_default_str();
    cal->add_option("--points", cal_args.points, "voltage points per fringe")
        ->capture_default_str();
    cal->add_flag("--exact", cal_args.exact, "disable Poisson counting noise");

    ComplexityArgs cx_args;
    CLI::App* cx = app.add_subcommand("complexity", "platform comparison curve");
    cx->fallthrough();
    cx->add_option("--platforms", cx_args.platforms_file, "platform JSON file");
    cx->add_option("--r-min", cx_args.r_min, "smallest bend radius")->capture_default_str();
    cx->add_option("--r-max", cx_args.r_max, "largest bend radius")->capture_default_str();
    cx->add_option("--points", cx_args.points, "log-grid size")->capture_default_str();
    cx->add_flag("--annotate", cx_args.annotate, "append published reference points");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    compile_args.topology_set = compile->count("--topology") > 0;

    Provenance prov;
    prov.seed = base.seed;
    prov.invocation = join_invocation(argc, argv);

    try {
        if (compile->parsed()) return run_compile(base, compile_args, prov);
        if (simulate->parsed()) return run_simulate(base, simulate_args, prov);
        if (hom->parsed()) return run_hom(base, hom_args, prov);
        if (tt->parsed()) return run_truth_table(base, tt_args, prov);
        if (cal->parsed()) return run_calibrate(base, cal_args, prov);
        if (cx->parsed()) return run_complexity(base, cx_args, prov);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::logic_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    }
    return 2;
}

}  // namespace meshlab
