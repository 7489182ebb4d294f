#pragma once

// Platform loss model and the functional-complexity figure of merit.
//
// A unit cell is an MZI plus external phase shifter whose bent sections
// total L_b = 4*pi*R and whose straight tunable sections total 2*L_t, so
// light propagates over L_uc = L_b + 2*L_t per cell. Straight loss alpha_s
// applies over the whole L_uc, the bend penalty A*R^B over L_b only, and
// the tuning loss alpha_t over 2*L_t. The figure of merit C_f = n^2 counts
// the cells of a square mesh traversable before transmission falls to 1/e:
// n = 10 / (cell_loss_dB * ln 10).
//
// The radius unit of the bend power law is an explicit model field
// (millimeters by default) since the coefficient A is quoted at R = 1 unit.

#include <string>
#include <utility>
#include <vector>

namespace meshlab {

enum class RadiusUnit { meters, millimeters, micrometers };

std::string radius_unit_name(RadiusUnit unit);
RadiusUnit radius_unit_from_name(const std::string& name);
double radius_to_meters(double radius, RadiusUnit unit);

struct PlatformLossModel {
    std::string name;
    double alpha_s = 0.0;  // straight-propagation loss, dB/m
    double bend_A = 1.0;   // bend power-law coefficient, dB/m at R = 1 radius_unit
    double bend_B = -1.0;  // bend power-law exponent, negative
    double alpha_t = 0.0;  // phase-tuning loss, dB/m
    double L_t = 0.0;      // tunable element length, m
    RadiusUnit radius_unit = RadiusUnit::millimeters;
};

// The three stock platforms: SOI, Si3N4, doped silica.
std::vector<PlatformLossModel> default_platforms();

// Total bend-section loss coefficient A*R^B + alpha_s in dB/m; R > 0 in
// the model's radius unit.
double bend_loss(const PlatformLossModel& model, double radius);

struct UnitCellGeometry {
    double L_b = 0.0;   // bent path length, m
    double L_uc = 0.0;  // total unit-cell path length, m
};

UnitCellGeometry unit_cell_geometry(const PlatformLossModel& model, double radius);

// Composite dB per unit cell: alpha_s*L_uc + (A*R^B)*L_b + alpha_t*2*L_t.
// The alpha_s offset of bend_loss is not re-added here; it already covers
// the bent section through the L_uc term.
double cell_loss(const PlatformLossModel& model, double radius);

struct ComplexityResult {
    double radius = 0.0;         // echoed input, in model.radius_unit
    double L_uc = 0.0;           // m
    double loss_per_cell = 0.0;  // dB
    double n = 0.0;              // serial cell count at 1/e transmission
    double c_f = 0.0;            // functional complexity n^2
    bool infinite = false;       // set when the cell is lossless
};

ComplexityResult functional_complexity(const PlatformLossModel& model, double radius);

struct ComplexityRow {
    std::string platform;
    double radius = 0.0;
    RadiusUnit radius_unit = RadiusUnit::millimeters;
    double L_uc = 0.0;
    double cell_loss_db = 0.0;
    double n = 0.0;
    double c_f = 0.0;
};

std::vector<ComplexityRow> complexity_curve(const std::vector<PlatformLossModel>& models,
                                            const std::vector<double>& radius_grid);

// Published-processor reference points for annotating the comparison plot.
struct ReferencePoint {
    std::string platform;
    double radius = 0.0;  // mm
    double c_f = 0.0;
    std::string label;
};

std::vector<ReferencePoint> reference_points();

struct PowerLawFit {
    double A = 0.0;
    double B = 0.0;
    double residual = 0.0;  // rms misfit of log10(loss)
};

// Least squares of loss = A*R^B in log-log space; needs >= 2 points with
// positive radii and losses.
PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points);

}  // namespace meshlab
