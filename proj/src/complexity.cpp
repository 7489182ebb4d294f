#include "meshlab/complexity.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace meshlab {

namespace {

constexpr double kLn10 = 2.302585092994045684;

void validate(const PlatformLossModel& model) {
    if (model.alpha_s < 0.0 || model.alpha_t < 0.0 || model.L_t < 0.0) {
        throw std::invalid_argument("loss coefficients and lengths must be non-negative");
    }
    if (!(model.bend_A > 0.0)) throw std::invalid_argument("bend_A must be positive");
    if (!(model.bend_B < 0.0)) throw std::invalid_argument("bend_B must be negative");
}

double bend_power_law(const PlatformLossModel& model, double radius) {
    if (!(radius > 0.0)) throw std::domain_error("bend radius must be positive");
    return model.bend_A * std::pow(radius, model.bend_B);
}

}  // namespace

std::string radius_unit_name(RadiusUnit unit) {
    switch (unit) {
        case RadiusUnit::meters: return "m";
        case RadiusUnit::millimeters: return "mm";
        case RadiusUnit::micrometers: return "um";
    }
    throw std::invalid_argument("unknown radius unit");
}

RadiusUnit radius_unit_from_name(const std::string& name) {
    if (name == "m") return RadiusUnit::meters;
    if (name == "mm") return RadiusUnit::millimeters;
    if (name == "um") return RadiusUnit::micrometers;
    throw std::invalid_argument("unknown radius unit '" + name + "' (expected m, mm or um)");
}

double radius_to_meters(double radius, RadiusUnit unit) {
    switch (unit) {
        case RadiusUnit::meters: return radius;
        case RadiusUnit::millimeters: return radius * 1e-3;
        case RadiusUnit::micrometers: return radius * 1e-6;
    }
    throw std::invalid_argument("unknown radius unit");
}

std::vector<PlatformLossModel> default_platforms() {
    return {
        {"SOI", 2.7, 4.07, -0.62, 3700.0, 61.6e-6, RadiusUnit::millimeters},
        {"Si3N4", 0.045, 0.316, -0.95, 0.0, 12e-3, RadiusUnit::millimeters},
        {"silica", 0.01, 7.24, -0.74, 0.0, 5e-3, RadiusUnit::millimeters},
    };
}

double bend_loss(const PlatformLossModel& model, double radius) {
    validate(model);
    return bend_power_law(model, radius) + model.alpha_s;
}

UnitCellGeometry unit_cell_geometry(const PlatformLossModel& model, double radius) {
    validate(model);
    if (!(radius > 0.0)) throw std::domain_error("bend radius must be positive");
    UnitCellGeometry g;
    g.L_b = 4.0 * 3.14159265358979323846 * radius_to_meters(radius, model.radius_unit);
    g.L_uc = g.L_b + 2.0 * model.L_t;
    return g;
}

double cell_loss(const PlatformLossModel& model, double radius) {
    validate(model);
    const UnitCellGeometry g = unit_cell_geometry(model, radius);
    return model.alpha_s * g.L_uc + bend_power_law(model, radius) * g.L_b +
           model.alpha_t * 2.0 * model.L_t;
}

ComplexityResult functional_complexity(const PlatformLossModel& model, double radius) {
    ComplexityResult r;
    r.radius = radius;
    const UnitCellGeometry g = unit_cell_geometry(model, radius);
    r.L_uc = g.L_uc;
    r.loss_per_cell = cell_loss(model, radius);
    if (r.loss_per_cell <= 0.0) {
        r.infinite = true;
        r.n = std::numeric_limits<double>::infinity();
        r.c_f = std::numeric_limits<double>::infinity();
        return r;
    }
    r.n = 10.0 / (r.loss_per_cell * kLn10);
    r.c_f = r.n * r.n;
    return r;
}

std::vector<ComplexityRow> complexity_curve(const std::vector<PlatformLossModel>& models,
                                            const std::vector<double>& radius_grid) {
    if (radius_grid.empty()) throw std::invalid_argument("radius grid is empty");
    std::vector<ComplexityRow> rows;
    rows.reserve(models.size() * radius_grid.size());
    for (const PlatformLossModel& model : models) {
        for (double radius : radius_grid) {
            const ComplexityResult r = functional_complexity(model, radius);
            rows.push_back({model.name, radius, model.radius_unit, r.L_uc, r.loss_per_cell, r.n,
                            r.c_f});
        }
    }
    return rows;
}

std::vector<ReferencePoint> reference_points() {
    // Published linear optical processors, annotated as (cell count used).
    return {
        {"SOI", 0.002, 88.0, "bosonic transport simulator, 88 cells"},
        {"SOI", 0.005, 26.0, "universal 4-mode processor, 26 cells"},
        {"silica", 2.0, 15.0, "universal 6-mode processor, 15 cells"},
        {"Si3N4", 0.1, 64.0, "8x8 programmable mesh, 64 cells"},
    };
}

PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw std::domain_error("power-law fit needs at least two points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [radius, loss] : points) {
        if (!(radius > 0.0) || !(loss > 0.0)) {
            throw std::domain_error("power-law fit needs positive radii and losses");
        }
        const double x = std::log10(radius);
        const double y = std::log10(loss);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(points.size());
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-300) {
        throw std::domain_error("power-law fit needs at least two distinct radii");
    }
    PowerLawFit fit;
    fit.B = (n * sxy - sx * sy) / denom;
    const double log_a = (sy - fit.B * sx) / n;
    fit.A = std::pow(10.0, log_a);
    double ss = 0.0;
    for (const auto& [radius, loss] : points) {
        const double resid = std::log10(loss) - (log_a + fit.B * std::log10(radius));
        ss += resid * resid;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

}  // namespace meshlab
