#pragma once

// Emulated characterization of a blass-topology processor. The device under
// test is a black box: hidden couplers and heater laws, observable only
// through photon counts at chosen inputs/outputs for chosen heater voltages.
//
// Protocol (documented here because the routing recipe is a repo choice):
//
//  * Internal phases. Cells are visited bottom row first, left to right
//    within a row, starting at the corner cell (d-1, 0) that light reaches
//    without passing any other element. For cell (i,j), light enters input
//    i, every already-calibrated cell is parked at its best-achievable bar
//    state, and the internal heater is swept while counting at output j
//    (the cross port, which reaches a detector without passing further
//    tunable elements). The raw fringe is divided by the estimated
//    transmission of the parked route; the result is a - b*cos(c + d*U^2)
//    in bar-power convention with the cross-port sign folded into c.
//    Stray light needs at least three residual-crossing events at parked
//    cells to reach the measured output, so the fringe is clean to order
//    (1 - best_bar)^(3/2).
//
//  * Split ratios. A power fringe determines the coupler pair only up to
//    eta <-> 1-eta (all MZI port powers are symmetric under swapping both
//    couplers), so each cell reports the unordered candidate pair
//    {eta, 1-eta} of the equivalent-equal-coupler ratio.
//
//  * External phases. Offsets on column 0 multiply every path from their
//    input identically (input-lead gauge) and a common shift per column is
//    an output-lead gauge, so neither is observable; column-0 entries store
//    nominal values and each column anchors its first row to zero. The
//    in-column differences are measured with a two-path rhombus: light from
//    input i-1 splits at (i-1,j-1), one arm crossing into column j-1 and
//    re-entering row i at (i,j-1), the other staying on row i-1 through the
//    external shifter at (i-1,j); the arms recombine in column j. Sweeping
//    the target external at (i,j) traces a fringe whose phase, corrected by
//    the arm phases computed from already-calibrated estimates, yields the
//    offset. A reversed sweep over the anchor cell's external recovers its
//    responsivity and a consistency residual.
//
// calibrate_mesh targets blass meshes; the triangle has no per-cell drop
// port to a detector, so the same protocol does not transfer.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "meshlab/compiler.hpp"
#include "meshlab/mesh.hpp"

namespace meshlab {

// phase(U) = c + d_coef * U^2. Negative drive voltages are rejected.
double heater_phase(double voltage, const CalibrationCurve& curve);

// Bar-port transmission a - b*cos(phase(U)).
double fringe_model(double voltage, const CalibrationCurve& curve);

struct FringeData {
    std::vector<double> voltages;
    std::vector<double> counts;  // raw counts or normalized transmissions
    double shots = 1e4;          // sets the shot-noise scale for the fit
};

struct FringeFit {
    CalibrationCurve curve;
    double residual = 0.0;    // RMS misfit in the units of the data
    bool degenerate = false;  // no usable fringe amplitude; c unidentifiable
};

// Least-squares fit of a - b*cos(c + d*U^2), multi-started over a c grid
// and period candidates from the extremum spacing in U^2. Needs >= 8
// points. b >= 0 and d_coef > 0 are enforced by folding the signs into c.
FringeFit fit_fringe(const FringeData& data);

// The software stand-in for the physical chip. Hidden parameters are only
// reachable through counts; hidden_config() exists for tests that compare
// recovered values against truth and is never used by calibration code.
class VirtualDevice {
  public:
    // max_voltage <= 0 picks the datasheet limit sqrt(phase_range / d_nom)
    // from the default fabrication statistics.
    VirtualDevice(MeshConfig true_config, std::uint64_t seed, double max_voltage = 0.0);

    static VirtualDevice sampled_device(Topology t, int d, const FabricationStats& stats,
                                        std::uint64_t seed);

    // Poisson-sampled counts at `output` with one photon per shot in
    // `input`; cells absent from the map sit at zero volts.
    double measure_counts(int input, int output,
                          const std::map<CellCoord, HeaterVoltages>& voltages,
                          double shots, bool poisson_noise = true);

    Topology topology() const { return config_.topology; }
    int dim() const { return config_.d; }
    std::uint64_t seed() const { return seed_; }
    double max_voltage() const { return max_voltage_; }
    const std::optional<FabricationStats>& assumed_stats() const { return stats_; }

    // White-box escape hatch for truth comparisons in tests.
    const MeshConfig& hidden_config() const { return config_; }

  private:
    MeshConfig config_;
    std::uint64_t seed_;
    double max_voltage_;
    std::optional<FabricationStats> stats_;
    std::mt19937_64 rng_;
};

struct CellCalibration {
    // internal: c,d_coef are the heater law of the MZI phase; a,b describe
    // the normalized bar-power fringe a - b*cos(theta).
    CalibrationCurve internal;
    // external: c,d_coef of the shifter (gauge-anchored, see header); a,b
    // describe the rhombus fringe it was measured with, not a cell
    // property.
    CalibrationCurve external;
    double residual_internal = 0.0;
    double residual_external = 0.0;
    SplitRange achieved_range;        // bar-power interval [a-b, a+b]
    double eta_estimate = 0.5;        // one of the pair {eta, 1-eta}
    double phase_span_internal = 0.0; // d_coef * max_voltage^2
    double phase_span_external = 0.0;
    double max_voltage_internal = 0.0;
    double max_voltage_external = 0.0;
    bool degenerate = false;          // no usable fringe on this cell
    bool external_gauge = false;      // external offset pinned by convention
    std::string note;
};

struct CalibrationSummary {
    double dc_mean = 0.5;     // over the reported {eta, 1-eta} candidates
    double dc_sd = 0.0;
    double offset_mean = 0.0; // internal phase offsets, radians
    double offset_sd = 0.0;
    double span_mean = 0.0;   // internal phase spans, radians
    double span_sd = 0.0;
    int cells_total = 0;
    int cells_degenerate = 0;
};

struct CalibrationTable {
    Topology topology = Topology::blass;
    int d = 0;
    std::uint64_t device_seed = 0;
    double shots = 0.0;
    double max_voltage = 0.0;
    std::optional<FabricationStats> assumed_stats;
    std::map<CellCoord, CellCalibration> cells;
    std::vector<double> dc_estimates;  // two candidates per usable cell

    CalibrationSummary summary() const;
};

// Measurement order: bottom row first, left to right. Every cell's route
// (row prefix and column tail) is calibrated before the cell itself.
std::vector<CellCoord> protocol_order(Topology t, int d);

enum class FringePort { bar, cross };

// Raw internal-heater fringe of one cell through a parked route built from
// `calibrated`. The cross port reads at output j; the bar port routes
// through a crossed cell (i, j+1) and reads at output j+1, so it needs
// that column calibrated and is never available in the last column.
// Throws std::logic_error when the required entries are missing.
FringeData synth_fringe(VirtualDevice& device, CellCoord cell, FringePort port,
                        const std::vector<double>& voltages, double shots,
                        const CalibrationTable& calibrated, bool poisson_noise = true);

struct CalibrationOptions {
    int voltage_points = 50;
    double shots = 1e4;
    bool poisson_noise = true;
};

CalibrationTable calibrate_mesh(VirtualDevice& device, const CalibrationOptions& options = {});

}  // namespace meshlab
