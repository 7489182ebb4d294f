#pragma once

// Mesh core: unit-cell matrices and the forward model for programmable
// linear-optical processors built from Mach-Zehnder interferometers (MZIs).
//
// Directional coupler with power splitting ratio eta:
//
//     DC(eta) = [ sqrt(1-eta)   i*sqrt(eta)  ]
//               [ i*sqrt(eta)   sqrt(1-eta)  ]
//
// Unit cell = external phase shifter phi on the first port, then an MZI
// with internal phase theta between two couplers:
//
//     MZI(theta) = DC(eta2) * diag(e^{i theta}, 1) * DC(eta1)
//
// Bar transmission |MZI_11|^2 = |sqrt((1-eta1)(1-eta2)) e^{i theta}
//                                - sqrt(eta1 eta2)|^2,
// which reduces to sin^2(theta/2) for ideal 50:50 couplers: theta = 0 is
// full cross, theta = pi is full bar.
//
// Two mesh topologies are modelled:
//
//  * blass(d): a d x d grid of cells. Row lines 0..d-1 carry the inputs,
//    column lines 0..d-1 start in vacuum and end at the detectors. Cell
//    (i,j) couples row i into column j; cells act in row-major order.
//    Modes 0..d-1 are the row lines, modes d..2d-1 the column lines, so
//    the full transfer matrix is 2d x 2d (unitary when lossless) and the
//    effective input->output map is the subunitary d x d block
//    full[d.., 0..d). Whatever stays on a row line at the end hits a
//    terminator and counts as loss.
//
//  * triangular(d): the Reck-style triangle of d(d-1)/2 cells on d modes.
//    Cells are indexed (r,c) with 0 <= c <= r <= d-2; cell (r,c) mixes
//    adjacent modes (r, r+1). Light traverses columns c in ascending
//    order and rows r in descending order within a column, which is the
//    usual triangle with the long diagonal first. The full matrix is
//    d x d and equals the effective matrix.

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace meshlab {

using Cx = std::complex<double>;
using TransferMatrix = Eigen::MatrixXcd;

constexpr double kPi = 3.14159265358979323846;

// Fold an angle into [0, 2*pi).
double fold_2pi(double x);

struct CouplerParams {
    double eta = 0.5;  // power splitting ratio, in [0, 1]
};

// Heater law and fringe parameters for one phase shifter:
//   phase(U)  = c + d_coef * U^2
//   fringe(U) = a - b * cos(phase(U))
// For device-truth entries inside CellParams only c and d_coef matter;
// a and b describe a fitted fringe (in normalized or count units).
struct CalibrationCurve {
    double a = 0.5;
    double b = 0.5;
    double c = 0.0;       // phase offset at zero volts, radians
    double d_coef = 0.06; // responsivity, rad / V^2
};

struct CellParams {
    CouplerParams dc1;            // input-side coupler
    CouplerParams dc2;            // output-side coupler
    double phase_offset = 0.0;    // internal phase at zero volts, folded to [0, 2pi)
    double phase_range = 1.5 * kPi;
    CalibrationCurve heater_internal;  // true heater law; c == phase_offset
    CalibrationCurve heater_external;
};

struct CellSetting {
    double theta = kPi;  // internal MZI phase (pi = bar for ideal couplers)
    double phi = 0.0;    // external phase on the cell's first port
};

struct CellCoord {
    int i = 0;
    int j = 0;
    friend auto operator<=>(const CellCoord&, const CellCoord&) = default;
};

enum class Topology { blass, triangular };

std::string topology_name(Topology t);
Topology topology_from_name(const std::string& name);

// Fabrication statistics used when sampling virtual devices. Splitting
// ratios are Normal(0.497, 0.126) clipped to [0.05, 0.95]; phase offsets
// are Normal(3.5, 1.85) rad folded to [0, 2pi). The heater responsivity
// spread is a device-model choice (measured statistics cover offsets and
// ranges, not responsivities), kept small around a nominal 0.06 rad/V^2.
struct FabricationStats {
    double eta_mean = 0.497;
    double eta_sd = 0.126;
    double eta_min = 0.05;
    double eta_max = 0.95;
    double offset_mean = 3.5;
    double offset_sd = 1.85;
    double phase_range = 1.5 * kPi;
    double dcoef_mean = 0.06;
    double dcoef_sd = 0.003;
};

struct MeshConfig {
    Topology topology = Topology::blass;
    int d = 2;
    std::map<CellCoord, CellParams> cells;

    // All couplers 50:50, zero phase offsets.
    static MeshConfig ideal(Topology t, int d);
    // Couplers and phase offsets drawn from fabrication statistics.
    static MeshConfig sampled(Topology t, int d, const FabricationStats& stats,
                              std::uint64_t seed);
};

struct MeshSettings {
    std::map<CellCoord, CellSetting> cells;
    // Optional diagonal phase layer applied to the outputs after the last
    // cell (all d modes for triangular, the d column lines for blass).
    std::optional<std::vector<double>> output_phases;

    static MeshSettings uniform(const MeshConfig& config, CellSetting s);
};

struct ForwardResult {
    TransferMatrix full;       // 2d x 2d for blass, d x d for triangular
    TransferMatrix effective;  // d x d input -> output block
};

// The cell coordinates of a topology in light-traversal order.
std::vector<CellCoord> cell_order(Topology t, int d);
// The two modes a cell acts on (first port carries the external shifter).
std::pair<int, int> cell_modes(Topology t, int d, CellCoord cell);

TransferMatrix dc_matrix(double eta);
TransferMatrix mzi_matrix(double theta, const CouplerParams& dc1,
                          const CouplerParams& dc2);

// Achievable bar-transmission interval of an MZI over the full internal
// phase: endpoints (sqrt((1-eta1)(1-eta2)) -+ sqrt(eta1 eta2))^2.
struct SplitRange {
    double bar_min = 0.0;
    double bar_max = 1.0;
};
SplitRange achievable_split_range(const CouplerParams& dc1,
                                  const CouplerParams& dc2);

ForwardResult forward(const MeshConfig& config, const MeshSettings& settings);

// Global loss budget: propagation loss along the waveguides plus optional
// fiber-to-chip coupling loss at the two facets. Amplitudes scale by
// 10^(-dB/20), powers by 10^(-dB/10).
struct ChipLossModel {
    double prop_loss_db_per_cm = 0.2;
    double coupling_loss_db_per_facet = 2.9;
};

TransferMatrix apply_chip_loss(const TransferMatrix& t, const ChipLossModel& loss,
                               double uniform_path_cm, bool include_facets = false);
TransferMatrix apply_chip_loss(const TransferMatrix& t, const ChipLossModel& loss,
                               const Eigen::MatrixXd& path_cm,
                               bool include_facets = false);

bool is_unitary(const TransferMatrix& m, double tol = 1e-10);
double max_singular_value(const TransferMatrix& m);

}  // namespace meshlab
