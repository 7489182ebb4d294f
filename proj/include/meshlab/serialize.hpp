#pragma once

// JSON and CSV interchange. Every document carries schema_version plus the
// seed and exact invocation that produced it; loaders reject unknown keys
// so schema drift fails loudly instead of being silently ignored.
// Complex numbers serialize as [re, im] pairs.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "meshlab/calibration.hpp"
#include "meshlab/compiler.hpp"
#include "meshlab/complexity.hpp"
#include "meshlab/mesh.hpp"
#include "meshlab/quantum.hpp"

namespace meshlab {

inline constexpr int kSchemaVersion = 1;

struct Provenance {
    std::uint64_t seed = 0;
    std::string invocation;
};

// Settings only make sense against a topology and size, so the settings
// document carries both.
struct SettingsFile {
    Topology topology = Topology::blass;
    int d = 2;
    MeshSettings settings;
};

std::string matrix_to_json(const TransferMatrix& m, const Provenance& prov = {});
TransferMatrix matrix_from_json(const std::string& text);

std::string mesh_config_to_json(const MeshConfig& config, const Provenance& prov = {});
MeshConfig mesh_config_from_json(const std::string& text);

std::string settings_to_json(const SettingsFile& file, const Provenance& prov = {});
// Also accepts a compile_report document, unwrapping its embedded settings.
SettingsFile settings_from_json(const std::string& text);

std::string compile_report_to_json(const CompileReport& report, Topology topology, int d,
                                   const Provenance& prov = {});

std::string calibration_table_to_json(const CalibrationTable& table, const Provenance& prov = {});
CalibrationTable calibration_table_from_json(const std::string& text);

std::string platforms_to_json(const std::vector<PlatformLossModel>& models,
                              const Provenance& prov = {});
std::vector<PlatformLossModel> platforms_from_json(const std::string& text);

std::string truth_table_to_json(const TruthTable& table, const Provenance& prov = {});
std::string hom_scan_to_json(const HomScan& scan, const Provenance& prov = {});

std::string truth_table_to_csv(const TruthTable& table, const Provenance& prov = {});
std::string hom_scan_to_csv(const HomScan& scan, const Provenance& prov = {});
std::string fringe_to_csv(const FringeData& data, const Provenance& prov = {});
std::string complexity_to_csv(const std::vector<ComplexityRow>& rows,
                              const std::vector<ReferencePoint>& annotations = {},
                              const Provenance& prov = {});

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace meshlab
