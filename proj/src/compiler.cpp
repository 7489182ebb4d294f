#include "meshlab/compiler.hpp"

#include <cmath>
#include <sstream>

#include "meshlab/calibration.hpp"

namespace meshlab {

namespace {

std::string coord_str(CellCoord c) {
    std::ostringstream os;
    os << "(" << c.i << "," << c.j << ")";
    return os.str();
}

const CouplerParams kIdeal{0.5};

// Cell op entries for given setting. The external phase multiplies the
// first-port column only.
Cx bar_amp(const CellParams& p, const CellSetting& s) {
    TransferMatrix m = mzi_matrix(s.theta, p.dc1, p.dc2);
    return m(0, 0) * std::exp(Cx(0, s.phi));
}

Cx cross_amp(const CellParams& p, const CellSetting& s) {
    TransferMatrix m = mzi_matrix(s.theta, p.dc1, p.dc2);
    return m(1, 0) * std::exp(Cx(0, s.phi));
}

Cx col_through_amp(const CellParams& p, const CellSetting& s) {
    TransferMatrix m = mzi_matrix(s.theta, p.dc1, p.dc2);
    return m(1, 1);  // column port sees no external shifter
}

}  // namespace

MeshSettings reck_decompose(const TransferMatrix& u, double unitarity_tol) {
    if (u.rows() != u.cols() || u.rows() < 2) {
        throw std::invalid_argument("reck_decompose needs a square matrix, d >= 2");
    }
    const int d = static_cast<int>(u.rows());
    {
        TransferMatrix g = u.adjoint() * u - TransferMatrix::Identity(d, d);
        const double dev = g.cwiseAbs().maxCoeff();
        if (!(dev < unitarity_tol)) {
            std::ostringstream os;
            os << "reck_decompose: input is not unitary (|U*U - I| = " << dev << ")";
            throw std::domain_error(os.str());
        }
    }

    TransferMatrix a = u;
    MeshSettings out;
    // Null entry (c, r+1) with the cell on columns (r, r+1); traversal
    // order matches forward(), so U = D * C_last * ... * C_first.
    for (int c = 0; c <= d - 2; ++c) {
        for (int r = d - 2; r >= c; --r) {
            const Cx aka = a(c, r);
            const Cx akb = a(c, r + 1);
            CellSetting s;
            if (std::abs(aka) < 1e-14 && std::abs(akb) < 1e-14) {
                s.theta = kPi;  // nothing to do; park in bar
                s.phi = 0.0;
            } else {
                s.theta = 2.0 * std::atan2(std::abs(aka), std::abs(akb));
                s.phi = fold_2pi(std::arg(aka) - std::arg(akb));
            }
            out.cells[{r, c}] = s;

            TransferMatrix m = mzi_matrix(s.theta, kIdeal, kIdeal);
            const Cx ph = std::exp(Cx(0, s.phi));
            Eigen::Matrix2cd op;
            op << m(0, 0) * ph, m(0, 1),
                  m(1, 0) * ph, m(1, 1);
            // Right-multiply by the inverse cell: mixes columns (r, r+1).
            Eigen::Matrix2cd inv = op.adjoint();
            Eigen::VectorXcd col_a = a.col(r);
            Eigen::VectorXcd col_b = a.col(r + 1);
            a.col(r) = col_a * inv(0, 0) + col_b * inv(1, 0);
            a.col(r + 1) = col_a * inv(0, 1) + col_b * inv(1, 1);
        }
    }

    std::vector<double> gamma(d);
    for (int k = 0; k < d; ++k) gamma[k] = std::arg(a(k, k));
    {
        TransferMatrix off = a;
        off.diagonal().setZero();
        if (off.cwiseAbs().maxCoeff() > 1e-9) {
            throw std::runtime_error("reck_decompose: nulling failed to reach diagonal form");
        }
    }
    out.output_phases = gamma;
    return out;
}

MeshSettings xgate_settings(const GateSpec& spec) {
    const int d = spec.d;
    const int n = spec.n;
    if (d < 2) throw std::invalid_argument("xgate_settings: d must be >= 2");
    if (n < 1 || n > d) throw std::invalid_argument("xgate_settings: n must lie in [1, d]");

    MeshConfig cfg = MeshConfig::ideal(Topology::triangular, d);
    MeshSettings out;
    for (CellCoord cell : cell_order(Topology::triangular, d)) {
        // 1-based e_{i,j} with i = r+1, j = c+1: cross iff j <= n and
        // i <= (d-n)+(j-1); everything else bar.
        const bool cross = (cell.j < n) && (cell.i - cell.j <= d - n - 1);
        out.cells[cell] = CellSetting{cross ? 0.0 : kPi, 0.0};
    }

    // Absorb the bar/cross phases into the output layer so forward()
    // yields the plain 0/1 permutation matrix of X^n.
    TransferMatrix f = forward(cfg, out).effective;
    std::vector<double> gamma(d, 0.0);
    for (int q = 0; q < d; ++q) {
        const int p = (q + n) % d;
        if (std::abs(std::abs(f(p, q)) - 1.0) > 1e-9) {
            throw std::runtime_error("xgate_settings: bar/cross pattern is not a permutation");
        }
        gamma[p] = -std::arg(f(p, q));
    }
    out.output_phases = gamma;
    return out;
}

MeshSettings lossy_bs_settings(const LossyBsSpec& spec) {
    if (!std::isfinite(spec.alpha)) throw std::domain_error("alpha must be finite");
    const Cx t00(0.5, 0.0), t01(0.5, 0.0), t10(0.5, 0.0);
    const Cx t11 = 0.5 * std::exp(Cx(0, spec.alpha));
    const CellParams ideal_cell{};

    auto solve_cross = [&](Cx x_needed) {
        // Ideal cell: |cross| = cos(theta/2); the external phase supplies
        // the argument.
        const double mag = std::min(1.0, std::abs(x_needed));
        CellSetting s;
        s.theta = 2.0 * std::acos(mag);
        TransferMatrix m = mzi_matrix(s.theta, kIdeal, kIdeal);
        s.phi = fold_2pi(std::arg(x_needed) - std::arg(m(1, 0)));
        return s;
    };

    MeshSettings out;
    // Bottom row first: cell (1,0) serves input 1 -> output 0 directly.
    CellSetting s10 = solve_cross(t01);
    out.cells[{1, 0}] = s10;
    // (1,1): input 1 passes (1,0) in bar, then couples into column 1.
    CellSetting s11 = solve_cross(t11 / bar_amp(ideal_cell, s10));
    out.cells[{1, 1}] = s11;
    // (0,0): the crossed light still traverses (1,0) along column 0.
    CellSetting s00 = solve_cross(t00 / col_through_amp(ideal_cell, s10));
    out.cells[{0, 0}] = s00;
    // (0,1): two interfering paths reach output 1; subtract the bounce
    // through row 1 (cross at (0,0), leak at (1,0), cross at (1,1)).
    TransferMatrix m10 = mzi_matrix(s10.theta, kIdeal, kIdeal);
    const Cx bounce = cross_amp(ideal_cell, s00) * m10(0, 1) * cross_amp(ideal_cell, s11);
    const Cx denom = bar_amp(ideal_cell, s00) * col_through_amp(ideal_cell, s11);
    CellSetting s01 = solve_cross((t10 - bounce) / denom);
    out.cells[{0, 1}] = s01;

    // Defensive self-check; the construction is exact.
    MeshConfig cfg = MeshConfig::ideal(Topology::blass, 2);
    TransferMatrix e = forward(cfg, out).effective;
    TransferMatrix target(2, 2);
    target << t00, t01, t10, t11;
    if ((e - target).cwiseAbs().maxCoeff() > 1e-9) {
        throw std::runtime_error("lossy_bs_settings: closed-form solve failed");
    }
    return out;
}

CompileReport blass_synthesize(const TransferMatrix& target, const MeshConfig& config,
                               double feasibility_tol) {
    if (config.topology != Topology::blass) {
        throw std::invalid_argument("blass_synthesize targets blass topologies");
    }
    const int d = config.d;
    if (target.rows() != d || target.cols() != d) {
        throw std::invalid_argument("target dimensions do not match the mesh");
    }
    if (!target.allFinite()) throw std::domain_error("target has non-finite entries");
    {
        const double smax = max_singular_value(target);
        if (smax > 1.0 + 1e-9) {
            std::ostringstream os;
            os << "target is not subunitary: max singular value " << smax << " > 1";
            throw std::domain_error(os.str());
        }
    }

    CompileReport report;
    MeshSettings work = MeshSettings::uniform(config, CellSetting{kPi, 0.0});
    // Column transmission accumulated over already-solved rows below.
    std::vector<Cx> col_through(d, Cx(1, 0));

    // Bottom row first, left to right: every path from input i to output j
    // other than the direct crossing at (i,j) is then already fixed.
    for (int i = d - 1; i >= 0; --i) {
        Cx row_amp(1, 0);  // input i's remaining amplitude on row line i
        for (int j = 0; j < d; ++j) {
            const CellCoord coord{i, j};
            const CellParams& p = config.cells.at(coord);

            work.cells[coord] = CellSetting{kPi, 0.0};
            TransferMatrix f = forward(config, work).full;
            const Cx bounce = f(d + j, i);

            const Cx needed = target(j, i) - bounce;
            const Cx denom = row_amp * col_through[j];
            CellSetting s{kPi, 0.0};
            if (std::abs(denom) < 1e-12) {
                if (std::abs(needed) > feasibility_tol) {
                    report.feasible = false;
                    std::ostringstream os;
                    os << "cell " << coord_str(coord) << ": needs |amp| " << std::abs(needed)
                       << " but no light reaches the crossing";
                    report.diagnostics.push_back({coord, os.str()});
                }
            } else {
                const Cx x = needed / denom;
                double k = std::norm(x);
                const SplitRange sr = achievable_split_range(p.dc1, p.dc2);
                const double cross_lo = 1.0 - sr.bar_max;
                const double cross_hi = 1.0 - sr.bar_min;
                if (k < cross_lo - feasibility_tol || k > cross_hi + feasibility_tol) {
                    report.feasible = false;
                    std::ostringstream os;
                    os << "cell " << coord_str(coord) << ": required coupling ratio " << k
                       << " outside achievable [" << cross_lo << ", " << cross_hi << "]";
                    report.diagnostics.push_back({coord, os.str()});
                }
                k = std::clamp(k, cross_lo, cross_hi);

                // |cross|^2 = eta2(1-eta1) + eta1(1-eta2) + 2 pq cos(theta)
                const double e1 = p.dc1.eta, e2 = p.dc2.eta;
                const double s0 = e2 * (1.0 - e1) + e1 * (1.0 - e2);
                const double pq = std::sqrt(e1 * e2 * (1.0 - e1) * (1.0 - e2));
                if (pq < 1e-12) {
                    s.theta = kPi;  // fixed splitter, nothing to tune
                } else {
                    s.theta = std::acos(std::clamp((k - s0) / (2.0 * pq), -1.0, 1.0));
                }
                TransferMatrix m = mzi_matrix(s.theta, p.dc1, p.dc2);
                s.phi = fold_2pi(std::arg(x) - std::arg(m(1, 0)));
            }
            work.cells[coord] = s;
            row_amp *= bar_amp(p, s);
        }
        for (int j = 0; j < d; ++j) {
            col_through[j] *= col_through_amp(config.cells.at({i, j}), work.cells.at({i, j}));
        }
    }

    report.settings = work;
    TransferMatrix e = forward(config, work).effective;
    report.residual = (e - target).cwiseAbs().maxCoeff();
    return report;
}

namespace {

double invert_heater(const CalibrationCurve& curve, double target_phase,
                     double max_voltage, CellCoord cell, const char* which) {
    const double limit = curve.d_coef * max_voltage * max_voltage;
    // Smallest non-negative phase advance congruent to the target.
    double x = std::fmod(target_phase - curve.c, 2.0 * kPi);
    if (x < -1e-12) x += 2.0 * kPi;
    if (x < 0.0) x = 0.0;
    if (x > limit + 1e-9) {
        std::ostringstream os;
        os << which << " phase " << target_phase << " unreachable at cell ("
           << cell.i << "," << cell.j << "); achievable [" << curve.c << ", "
           << curve.c + limit << "] rad";
        throw std::out_of_range(os.str());
    }
    return std::sqrt(std::min(x, limit) / curve.d_coef);
}

}  // namespace

std::map<CellCoord, HeaterVoltages> settings_to_voltages(
    const MeshSettings& settings, const CalibrationTable& table, double phase_range) {
    std::map<CellCoord, HeaterVoltages> out;
    for (const auto& [coord, setting] : settings.cells) {
        auto it = table.cells.find(coord);
        if (it == table.cells.end()) {
            throw std::invalid_argument("calibration table has no entry for cell (" +
                                        std::to_string(coord.i) + "," +
                                        std::to_string(coord.j) + ")");
        }
        const CellCalibration& cal = it->second;
        if (cal.internal.d_coef <= 0.0 || cal.external.d_coef <= 0.0) {
            throw std::domain_error("calibration curve has non-positive responsivity");
        }
        const double u_int_max = cal.max_voltage_internal > 0.0
                                     ? cal.max_voltage_internal
                                     : std::sqrt(phase_range / cal.internal.d_coef);
        const double u_ext_max = cal.max_voltage_external > 0.0
                                     ? cal.max_voltage_external
                                     : std::sqrt(phase_range / cal.external.d_coef);
        HeaterVoltages v;
        v.internal_v = invert_heater(cal.internal, setting.theta, u_int_max, coord, "internal");
        v.external_v = invert_heater(cal.external, setting.phi, u_ext_max, coord, "external");
        out[coord] = v;
    }
    return out;
}

}  // namespace meshlab
