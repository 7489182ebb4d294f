#pragma once

// Compilers: map target matrices onto mesh settings.
//
//  * reck_decompose: element-by-element nulling of a unitary onto the
//    triangular mesh. Cell (r,c) mixes columns (r, r+1) of the running
//    matrix from the right and is chosen to null entry (c, r+1); after
//    all cells the matrix is diagonal and its phases become the explicit
//    output phase layer, so forward() reproduces U exactly.
//
//  * xgate_settings: bar/cross pattern realizing the cyclic shift
//    X^n : |j> -> |j+n mod d> on the triangle. With cells indexed 1-based
//    as e_{i,j} (i = r+1, j = c+1) the rule is: all cells bar, then cross
//    every existing e_{i,j} with j <= n and i <= (d-n)+(j-1). All powers
//    verify against the permutation matrix; n = d gives the identity with
//    every cell in bar.
//
//  * lossy_bs_settings: the variable-transmission beam splitter
//    T = 1/2 [[1, 1], [1, e^{i alpha}]] on blass(2), solved cell by cell
//    in closed form (four couplings, two phases).
//
//  * blass_synthesize: general subunitary targets on blass(d). Cells are
//    solved bottom row first, left to right. For input i and output j the
//    only paths not fixed earlier pass through cell (i,j) itself, so its
//    coupling and phase follow from
//        T[j,i] = bounce + a * X * D,
//    where a is the remaining row amplitude, D the column transmission
//    below, X the cell's cross amplitude, and bounce the multipath
//    contribution through lower rows (computed with the cell in bar).
//    Feasibility requires the coupling ratio |X|^2 to lie inside the
//    cell's achievable split range.

#include <string>
#include <vector>

#include "meshlab/mesh.hpp"

namespace meshlab {

struct CalibrationTable;  // calibration.hpp

struct GateSpec {
    int d = 2;  // dimension
    int n = 1;  // power of the cyclic shift, 1 <= n <= d
};

struct LossyBsSpec {
    double alpha = kPi;  // phase of the T_22 element
};

struct CellDiagnostic {
    CellCoord cell;
    std::string note;
};

struct CompileReport {
    MeshSettings settings;
    bool feasible = true;
    double residual = 0.0;  // max abs deviation of forward() from the target
    std::vector<CellDiagnostic> diagnostics;
};

MeshSettings reck_decompose(const TransferMatrix& u, double unitarity_tol = 1e-8);

MeshSettings xgate_settings(const GateSpec& spec);

MeshSettings lossy_bs_settings(const LossyBsSpec& spec);

CompileReport blass_synthesize(const TransferMatrix& target, const MeshConfig& config,
                               double feasibility_tol = 1e-9);

// Heater drive voltages realizing one cell setting.
struct HeaterVoltages {
    double internal_v = 0.0;
    double external_v = 0.0;
};

// Invert the fitted heater laws: pick the 2*pi branch of each target phase
// that lands inside [c, c + phase_range] and take the lowest non-negative
// voltage. Throws std::out_of_range naming the cell and the achievable
// interval when no branch is reachable.
std::map<CellCoord, HeaterVoltages> settings_to_voltages(
    const MeshSettings& settings, const CalibrationTable& table,
    double phase_range = 1.5 * kPi);

}  // namespace meshlab
