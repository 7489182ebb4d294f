#include "meshlab/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "meshlab/fit.hpp"

namespace meshlab {

double heater_phase(double voltage, const CalibrationCurve& curve) {
    if (voltage < 0.0) throw std::domain_error("heater voltage must be non-negative");
    return curve.c + curve.d_coef * voltage * voltage;
}

double fringe_model(double voltage, const CalibrationCurve& curve) {
    return curve.a - curve.b * std::cos(curve.c + curve.d_coef * voltage * voltage);
}

namespace {

double wrap_pi(double x) {
    const double y = fold_2pi(x);
    return y > kPi ? y - 2.0 * kPi : y;
}

std::string append_note(const std::string& base, const std::string& extra) {
    return base.empty() ? extra : base + "; " + extra;
}

std::vector<double> make_grid(double u_max, int points) {
    std::vector<double> g(points);
    for (int k = 0; k < points; ++k) g[k] = u_max * k / (points - 1);
    return g;
}

// Voltage whose estimated phase has cos(theta) as close to `cos_target`
// as the achievable window [c, c + d*u_max^2] allows; ties pick the
// lowest voltage.
double drive_for_target_cos(const CalibrationCurve& curve, double u_max, double cos_target) {
    if (!(curve.d_coef > 0.0) || !(u_max > 0.0)) return 0.0;
    const double lo = curve.c;
    const double hi = lo + curve.d_coef * u_max * u_max;
    std::vector<double> cand{lo, hi};
    for (double m = std::ceil(lo / kPi) * kPi; m <= hi + 1e-12; m += kPi) cand.push_back(m);
    const double t = std::clamp(cos_target, -1.0, 1.0);
    const double base = std::acos(t);
    for (double s : {base, -base}) {
        const double start = s + 2.0 * kPi * std::ceil((lo - s) / (2.0 * kPi));
        for (double m = start; m <= hi + 1e-12; m += 2.0 * kPi) cand.push_back(m);
    }
    double best_theta = lo;
    double best_err = 2.0;
    for (double th : cand) {
        const double cl = std::clamp(th, lo, hi);
        const double err = std::abs(std::cos(cl) - t);
        if (err < best_err - 1e-15 || (err <= best_err + 1e-15 && cl < best_theta)) {
            best_err = err;
            best_theta = cl;
        }
    }
    return std::sqrt(std::max(0.0, (best_theta - lo) / curve.d_coef));
}

double bar_drive(const CellCalibration& cal, double u_max) {
    return drive_for_target_cos(cal.internal, u_max, -1.0);
}

double cross_drive(const CellCalibration& cal, double u_max) {
    return drive_for_target_cos(cal.internal, u_max, 1.0);
}

double fifty_drive(const CellCalibration& cal, double u_max) {
    const double b = cal.internal.b;
    const double target = b > 1e-9 ? (cal.internal.a - 0.5) / b : 0.0;
    return drive_for_target_cos(cal.internal, u_max, target);
}

double est_theta(const CellCalibration& cal, double u) {
    return cal.internal.c + cal.internal.d_coef * u * u;
}

double est_bar_power(const CellCalibration& cal, double theta) {
    return std::clamp(cal.internal.a - cal.internal.b * std::cos(theta), 0.0, 1.0);
}

double est_cross_power(const CellCalibration& cal, double theta) {
    return std::clamp(1.0 - est_bar_power(cal, theta), 0.0, 1.0);
}

// Amplitude coefficient pairs reconstructed from the fringe: bar power is
// a - b*cos = p^2+q^2 - 2pq*cos, cross power (1-a) + b*cos. Each pair is
// identified only up to order; the larger member goes first, which is the
// documented eta <-> 1-eta ambiguity.
struct AmpEstimate {
    double p = 0.5, q = 0.5;    // bar pair
    double pp = 0.5, qp = 0.5;  // cross pair
};

AmpEstimate amp_estimate(const CellCalibration& cal) {
    const double a = std::clamp(cal.internal.a, 0.0, 1.0);
    const double b = std::clamp(cal.internal.b, 0.0, std::min(a, 1.0 - a));
    const double sp = std::sqrt(a + b);
    const double sm = std::sqrt(a - b);
    const double cp = std::sqrt(1.0 - a + b);
    const double cm = std::sqrt(1.0 - a - b);
    return {(sp + sm) / 2.0, (sp - sm) / 2.0, (cp + cm) / 2.0, (cp - cm) / 2.0};
}

Cx est_m11(const AmpEstimate& e, double th) { return e.p * std::exp(Cx(0, th)) - e.q; }
Cx est_m22(const AmpEstimate& e, double th) { return e.p - e.q * std::exp(Cx(0, th)); }
Cx est_m21(const AmpEstimate& e, double th) {
    return Cx(0, 1) * (e.pp * std::exp(Cx(0, th)) + e.qp);
}
Cx est_m12(const AmpEstimate& e, double th) {
    return Cx(0, 1) * (e.qp * std::exp(Cx(0, th)) + e.pp);
}

struct FringeRoute {
    std::map<CellCoord, HeaterVoltages> volts;
    double est_power = 1.0;  // estimated transmission of the parked route
    int input = 0;
    int output = 0;
};

FringeRoute build_fringe_route(const CalibrationTable& table, int d, CellCoord cell,
                               FringePort port, double u_max) {
    const int i = cell.i, j = cell.j;
    FringeRoute route;
    route.input = i;
    route.output = port == FringePort::cross ? j : j + 1;

    if (port == FringePort::bar && j + 1 >= d) {
        throw std::logic_error("bar-port fringe is not routable in the last column");
    }

    auto require_entry = [&](CellCoord c) -> const CellCalibration& {
        auto it = table.cells.find(c);
        if (it == table.cells.end()) {
            std::ostringstream os;
            os << "protocol order: fringe of cell (" << i << "," << j << ") needs cell ("
               << c.i << "," << c.j << ") calibrated first";
            throw std::logic_error(os.str());
        }
        return it->second;
    };

    // Park everything already calibrated at its best bar; stray light then
    // needs several residual crossings to reach the measured output.
    for (const auto& [coord, cal] : table.cells) {
        if (coord == cell) continue;
        route.volts[coord] = HeaterVoltages{bar_drive(cal, u_max), 0.0};
    }

    for (int jj = 0; jj < j; ++jj) {
        const CellCalibration& cal = require_entry({i, jj});
        route.est_power *= est_bar_power(cal, est_theta(cal, route.volts.at({i, jj}).internal_v));
    }
    for (int ii = i + 1; ii < d; ++ii) {
        const CellCoord c{ii, route.output};
        const CellCalibration& cal = require_entry(c);
        route.est_power *= est_bar_power(cal, est_theta(cal, route.volts.at(c).internal_v));
    }
    if (port == FringePort::bar) {
        const CellCalibration& cal = require_entry({i, j + 1});
        const double u = cross_drive(cal, u_max);
        route.volts[{i, j + 1}] = HeaterVoltages{u, 0.0};
        route.est_power *= est_cross_power(cal, est_theta(cal, u));
    }
    return route;
}

struct RhombusFit {
    FringeFit fit;
    double offset = 0.0;  // recovered external offset in the anchored gauge
};

// Two-path interferometer around cells {(i-1,j-1),(i-1,j),(i,j-1),(i,j)}.
// Forward sweeps the external at (i,j); reversed (only used with i = 1)
// sweeps the column anchor's external at (0,j) instead.
RhombusFit measure_rhombus(VirtualDevice& device, const CalibrationTable& table, int i, int j,
                           bool reversed, const std::vector<double>& grid,
                           const CalibrationOptions& opt) {
    const double u_max = device.max_voltage();
    const CellCoord s{i - 1, j - 1}, l{i, j - 1}, u{i - 1, j}, t{i, j};
    const CellCalibration& cs = table.cells.at(s);
    const CellCalibration& cl = table.cells.at(l);
    const CellCalibration& cu = table.cells.at(u);
    const CellCalibration& ct = table.cells.at(t);

    std::map<CellCoord, HeaterVoltages> volts;
    for (const auto& [coord, cal] : table.cells) {
        volts[coord] = HeaterVoltages{bar_drive(cal, u_max), 0.0};
    }
    volts[s].internal_v = fifty_drive(cs, u_max);
    volts[l].internal_v = fifty_drive(cl, u_max);
    volts[u].internal_v = cross_drive(cu, u_max);
    volts[t].internal_v = fifty_drive(ct, u_max);

    const double th_s = est_theta(cs, volts[s].internal_v);
    const double th_l = est_theta(cl, volts[l].internal_v);
    const double th_u = est_theta(cu, volts[u].internal_v);
    const double th_t = est_theta(ct, volts[t].internal_v);
    const AmpEstimate es = amp_estimate(cs), el = amp_estimate(cl), eu = amp_estimate(cu),
                      et = amp_estimate(ct);

    // Swept-arm amplitude q_amp excludes the swept shifter itself; the
    // fixed arm p_amp carries the other external at its zero-volt offset.
    Cx p_amp, q_amp;
    CellCoord swept{};
    if (!reversed) {
        swept = t;
        q_amp = est_m21(es, th_s) * est_m12(el, th_l) * est_m21(et, th_t);
        p_amp = est_m11(es, th_s) * std::exp(Cx(0, cu.external.c)) * est_m21(eu, th_u) *
                est_m22(et, th_t);
    } else {
        swept = u;
        q_amp = est_m11(es, th_s) * est_m21(eu, th_u) * est_m22(et, th_t);
        p_amp = est_m21(es, th_s) * est_m12(el, th_l) * std::exp(Cx(0, ct.external.c)) *
                est_m21(et, th_t);
    }

    FringeData data;
    data.voltages = grid;
    data.shots = opt.shots;
    data.counts.reserve(grid.size());
    for (double uv : grid) {
        volts[swept].external_v = uv;
        data.counts.push_back(
            device.measure_counts(i - 1, j, volts, opt.shots, opt.poisson_noise) / opt.shots);
    }

    RhombusFit out;
    out.fit = fit_fringe(data);
    out.offset = fold_2pi(out.fit.curve.c - kPi - std::arg(q_amp) + std::arg(p_amp));
    return out;
}

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& xs) {
    MeanSd r;
    if (xs.empty()) return r;
    r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - r.mean) * (x - r.mean);
        r.sd = std::sqrt(ss / (xs.size() - 1));
    }
    return r;
}

}  // namespace

FringeFit fit_fringe(const FringeData& data) {
    const std::size_t n = data.voltages.size();
    if (n != data.counts.size()) {
        throw std::invalid_argument("fringe voltage and count arrays differ in length");
    }
    if (n < 8) throw std::domain_error("fit_fringe needs at least 8 points");
    for (std::size_t k = 0; k < n; ++k) {
        if (!std::isfinite(data.voltages[k]) || !std::isfinite(data.counts[k]) ||
            data.voltages[k] < 0.0) {
            throw std::invalid_argument("fringe data must be finite with non-negative voltages");
        }
    }

    // Sort by U^2 for the period heuristic.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return data.voltages[a] < data.voltages[b];
    });
    std::vector<double> x2(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
        x2[k] = data.voltages[idx[k]] * data.voltages[idx[k]];
        y[k] = data.counts[idx[k]];
    }

    const double y_max = *std::max_element(y.begin(), y.end());
    const double y_min = *std::min_element(y.begin(), y.end());
    const double a0 = std::accumulate(y.begin(), y.end(), 0.0) / n;
    const double b0 = std::max((y_max - y_min) / 2.0, 1e-12);

    // Light smoothing, then alternating extrema with a prominence gate;
    // successive extrema of cos(c + d*x2) sit pi/d apart in x2.
    std::vector<double> ys(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t lo = k >= 2 ? k - 2 : 0;
        const std::size_t hi = std::min(n - 1, k + 2);
        double s = 0.0;
        for (std::size_t m = lo; m <= hi; ++m) s += y[m];
        ys[k] = s / (hi - lo + 1);
    }
    std::vector<double> extrema;
    {
        const double smax = *std::max_element(ys.begin(), ys.end());
        const double smin = *std::min_element(ys.begin(), ys.end());
        const double prom = 0.25 * (smax - smin);
        if (prom > 0.0) {
            int dir = 0;
            std::size_t anchor = 0;
            for (std::size_t k = 1; k < n; ++k) {
                if (dir >= 0 && ys[k] < ys[anchor] - prom) {
                    if (dir > 0) extrema.push_back(x2[anchor]);
                    dir = -1;
                    anchor = k;
                } else if (dir <= 0 && ys[k] > ys[anchor] + prom) {
                    if (dir < 0) extrema.push_back(x2[anchor]);
                    dir = 1;
                    anchor = k;
                } else if ((dir >= 0 && ys[k] > ys[anchor]) ||
                           (dir <= 0 && ys[k] < ys[anchor])) {
                    anchor = k;
                }
            }
        }
    }

    const double span2 = std::max(x2.back() - x2.front(), 1e-12);
    std::vector<double> d_cands;
    if (extrema.size() >= 2) {
        double gap = 0.0;
        for (std::size_t k = 1; k < extrema.size(); ++k) gap += extrema[k] - extrema[k - 1];
        gap /= (extrema.size() - 1);
        if (gap > 0.0) {
            const double d_est = kPi / gap;
            for (double f : {1.0, 0.5, 0.75, 1.5, 2.0}) d_cands.push_back(d_est * f);
        }
    }
    for (double f : {1.0, 0.5, 2.0}) d_cands.push_back(f * 1.5 * kPi / span2);

    auto model = [](const Eigen::VectorXd& p, double u) {
        return p[0] - p[1] * std::cos(p[2] + p[3] * u * u);
    };
    auto jacobian = [](const Eigen::VectorXd& p, double u) {
        const double psi = p[2] + p[3] * u * u;
        Eigen::VectorXd j(4);
        j << 1.0, -std::cos(psi), p[1] * std::sin(psi), p[1] * std::sin(psi) * u * u;
        return j;
    };

    LMOptions quick;
    quick.max_iterations = 60;
    LMResult best;
    best.rms = std::numeric_limits<double>::infinity();
    for (double dc : d_cands) {
        for (int cg = 0; cg < 8; ++cg) {
            Eigen::VectorXd p0(4);
            p0 << a0, b0, cg * kPi / 4.0, dc;
            LMResult r = fit_lm(model, jacobian, data.voltages, data.counts, p0, quick);
            if (r.params.allFinite() && r.rms < best.rms) best = r;
        }
    }
    if (!std::isfinite(best.rms)) {
        throw std::runtime_error("fringe fit failed: no start converged");
    }
    LMOptions polish;
    polish.max_iterations = 300;
    LMResult fin = fit_lm(model, jacobian, data.voltages, data.counts, best.params, polish);
    if (fin.params.allFinite() && fin.rms <= best.rms) best = fin;

    double a = best.params[0], b = best.params[1], c = best.params[2], dc = best.params[3];
    if (b < 0.0) {
        b = -b;
        c += kPi;
    }
    if (dc < 0.0) {
        dc = -dc;
        c = -c;
    }
    c = fold_2pi(c);
    if (a > 0.0 && b > a) b = a;

    FringeFit out;
    out.curve.a = a;
    out.curve.b = b;
    out.curve.c = c;
    out.curve.d_coef = std::max(dc, 1e-12);
    out.residual = best.rms;
    const double noise = std::sqrt(std::max(a, 1e-12) / std::max(data.shots, 1.0));
    out.degenerate = b < std::max(5.0 * noise, 1e-9) || dc * span2 < 0.1;
    return out;
}

VirtualDevice::VirtualDevice(MeshConfig true_config, std::uint64_t seed, double max_voltage)
    : config_(std::move(true_config)), seed_(seed), max_voltage_(max_voltage), rng_(seed) {
    if (max_voltage_ <= 0.0) {
        const FabricationStats nominal;
        max_voltage_ = std::sqrt(nominal.phase_range / nominal.dcoef_mean);
    }
}

VirtualDevice VirtualDevice::sampled_device(Topology t, int d, const FabricationStats& stats,
                                            std::uint64_t seed) {
    VirtualDevice dev(MeshConfig::sampled(t, d, stats, seed), seed,
                      std::sqrt(stats.phase_range / stats.dcoef_mean));
    dev.stats_ = stats;
    return dev;
}

double VirtualDevice::measure_counts(int input, int output,
                                     const std::map<CellCoord, HeaterVoltages>& voltages,
                                     double shots, bool poisson_noise) {
    if (input < 0 || input >= config_.d || output < 0 || output >= config_.d) {
        throw std::invalid_argument("measure_counts: port index out of range");
    }
    if (!(shots > 0.0)) throw std::invalid_argument("measure_counts: shots must be positive");
    for (const auto& [coord, v] : voltages) {
        if (config_.cells.find(coord) == config_.cells.end()) {
            throw std::invalid_argument("measure_counts: voltage given for a cell not in the mesh");
        }
        if (!std::isfinite(v.internal_v) || !std::isfinite(v.external_v)) {
            throw std::invalid_argument("measure_counts: drive voltages must be finite");
        }
    }

    MeshSettings settings;
    for (const auto& [coord, params] : config_.cells) {
        HeaterVoltages v{0.0, 0.0};
        if (auto it = voltages.find(coord); it != voltages.end()) v = it->second;
        settings.cells[coord] =
            CellSetting{fold_2pi(heater_phase(v.internal_v, params.heater_internal)),
                        fold_2pi(heater_phase(v.external_v, params.heater_external))};
    }
    const TransferMatrix eff = forward(config_, settings).effective;
    const double p = std::clamp(std::norm(eff(output, input)), 0.0, 1.0);
    const double mean = shots * p;
    if (!poisson_noise) return mean;
    if (mean <= 0.0) return 0.0;
    std::poisson_distribution<long long> dist(mean);
    return static_cast<double>(dist(rng_));
}

std::vector<CellCoord> protocol_order(Topology t, int d) {
    if (t != Topology::blass) {
        throw std::invalid_argument(
            "the sequential fringe protocol needs the per-cell drop ports of a blass mesh");
    }
    if (d < 2) throw std::invalid_argument("mesh dimension must be at least 2");
    std::vector<CellCoord> order;
    order.reserve(static_cast<std::size_t>(d) * d);
    for (int i = d - 1; i >= 0; --i) {
        for (int j = 0; j < d; ++j) order.push_back({i, j});
    }
    return order;
}

FringeData synth_fringe(VirtualDevice& device, CellCoord cell, FringePort port,
                        const std::vector<double>& voltages, double shots,
                        const CalibrationTable& calibrated, bool poisson_noise) {
    if (device.topology() != Topology::blass) {
        throw std::invalid_argument("fringe synthesis targets blass meshes");
    }
    const int d = device.dim();
    if (cell.i < 0 || cell.i >= d || cell.j < 0 || cell.j >= d) {
        throw std::invalid_argument("cell coordinate out of range");
    }
    if (voltages.empty()) throw std::invalid_argument("voltage grid is empty");

    FringeRoute route = build_fringe_route(calibrated, d, cell, port, device.max_voltage());
    FringeData data;
    data.voltages = voltages;
    data.shots = shots;
    data.counts.reserve(voltages.size());
    std::map<CellCoord, HeaterVoltages> volts = route.volts;
    for (double u : voltages) {
        volts[cell] = HeaterVoltages{u, 0.0};
        data.counts.push_back(
            device.measure_counts(route.input, route.output, volts, shots, poisson_noise));
    }
    return data;
}

CalibrationTable calibrate_mesh(VirtualDevice& device, const CalibrationOptions& options) {
    if (device.topology() != Topology::blass) {
        throw std::invalid_argument(
            "calibrate_mesh supports blass meshes; the triangle has no per-cell drop port");
    }
    if (options.voltage_points < 8) {
        throw std::invalid_argument("calibrate_mesh needs at least 8 voltage points");
    }
    if (!(options.shots > 0.0)) throw std::invalid_argument("shots must be positive");

    const int d = device.dim();
    const double u_max = device.max_voltage();

    CalibrationTable table;
    table.topology = Topology::blass;
    table.d = d;
    table.device_seed = device.seed();
    table.shots = options.shots;
    table.max_voltage = u_max;
    table.assumed_stats = device.assumed_stats();

    const std::vector<double> grid = make_grid(u_max, options.voltage_points);
    const double nominal_d = FabricationStats{}.dcoef_mean;

    // Internal fringe of one cell through its cross port. Stray light that
    // reaches the detector despite the parked route joins the detection
    // column exactly once, through the row port of a parked cell below the
    // measured one, and so picks up that cell's external phase; the main
    // path runs down the column and picks up none of them. The refinement
    // pass exploits this: it measures each trace a second time with every
    // parked tail external advanced by pi, which flips the sign of all
    // stray amplitudes, and averages, cancelling the interference term
    // that biases the fitted offset. The first pass cannot phase-cycle
    // because the external laws are only known after pass 2.
    auto measure_internal = [&](CellCoord cell, bool refine, CellCalibration& entry) {
        FringeRoute route = build_fringe_route(table, d, cell, FringePort::cross, u_max);
        const double norm = options.shots * std::max(route.est_power, 1e-12);
        std::map<CellCoord, HeaterVoltages> volts = route.volts;
        std::map<CellCoord, HeaterVoltages> flipped = route.volts;
        if (refine) {
            for (int ii = cell.i + 1; ii < d; ++ii) {
                const CalibrationCurve& ext = table.cells.at({ii, cell.j}).external;
                const double dc_ext = ext.d_coef > 1e-6 ? ext.d_coef : nominal_d;
                flipped.at({ii, cell.j}).external_v = std::min(std::sqrt(kPi / dc_ext), u_max);
            }
        }
        FringeData data;
        data.voltages = grid;
        data.shots = refine ? 2.0 * norm : norm;
        data.counts.reserve(grid.size());
        for (double uv : grid) {
            volts[cell] = HeaterVoltages{uv, 0.0};
            double count = device.measure_counts(route.input, route.output, volts, options.shots,
                                                 options.poisson_noise);
            if (refine) {
                flipped[cell] = HeaterVoltages{uv, 0.0};
                count = 0.5 * (count + device.measure_counts(route.input, route.output, flipped,
                                                             options.shots,
                                                             options.poisson_noise));
            }
            data.counts.push_back(count / norm);
        }

        const FringeFit fit = fit_fringe(data);
        if (refine && fit.degenerate && !entry.degenerate) {
            entry.note = append_note(entry.note, "refined fringe degenerate; first-pass values kept");
            return;
        }
        // The cross port flips the fringe sign; restate in bar-power
        // convention with the pi folded out of the offset.
        entry.internal.c = fold_2pi(fit.curve.c - kPi);
        entry.internal.d_coef = fit.curve.d_coef;
        entry.internal.a = std::clamp(1.0 - fit.curve.a, 0.0, 1.0);
        entry.internal.b =
            std::clamp(fit.curve.b, 0.0, std::min(entry.internal.a, 1.0 - entry.internal.a));
        entry.residual_internal = fit.residual;
        entry.degenerate = fit.degenerate;
        entry.phase_span_internal = entry.internal.d_coef * u_max * u_max;
        entry.achieved_range = SplitRange{std::max(0.0, entry.internal.a - entry.internal.b),
                                          std::min(1.0, entry.internal.a + entry.internal.b)};
        const AmpEstimate amp = amp_estimate(entry);
        entry.eta_estimate = amp.p + amp.q > 1e-12 ? amp.q / (amp.p + amp.q) : 0.0;
        if (fit.degenerate && !refine) {
            entry.note = "no usable internal fringe; fixed splitter or dead heater";
        }
    };

    // Pass 1: internal heater of every cell through its cross port.
    bool first_cell = true;
    for (CellCoord cell : protocol_order(Topology::blass, d)) {
        CellCalibration entry;
        entry.max_voltage_internal = u_max;
        entry.max_voltage_external = u_max;
        try {
            measure_internal(cell, false, entry);
        } catch (const std::exception& e) {
            if (first_cell) throw;  // nothing is measurable without the corner cell
            entry.degenerate = true;
            entry.note = append_note(entry.note, std::string("internal fit failed: ") + e.what());
        }
        table.cells[cell] = entry;
        first_cell = false;
    }

    // Pass 2: external shifters. Column 0 is the input-lead gauge; each
    // column's first row anchors the output-lead gauge.
    for (int i = 0; i < d; ++i) {
        CellCalibration& entry = table.cells.at({i, 0});
        entry.external = CalibrationCurve{0.0, 0.0, 0.0, nominal_d};
        entry.external_gauge = true;
        entry.phase_span_external = nominal_d * u_max * u_max;
        entry.note = append_note(entry.note, "external offset is input-lead gauge; nominal stored");
    }
    for (int j = 1; j < d; ++j) {
        {
            CellCalibration& anchor = table.cells.at({0, j});
            anchor.external = CalibrationCurve{0.0, 0.0, 0.0, nominal_d};
            anchor.external_gauge = true;
        }
        for (int i = 1; i < d; ++i) {
            CellCalibration& entry = table.cells.at({i, j});
            entry.external = CalibrationCurve{0.0, 0.0, 0.0, nominal_d};
            try {
                const RhombusFit rf = measure_rhombus(device, table, i, j, false, grid, options);
                if (rf.fit.degenerate) {
                    entry.note = append_note(entry.note,
                                             "external fringe degenerate; nominal offset stored");
                } else {
                    entry.external.c = rf.offset;
                    entry.external.d_coef = rf.fit.curve.d_coef;
                    entry.external.a = rf.fit.curve.a;
                    entry.external.b = rf.fit.curve.b;
                    entry.residual_external = rf.fit.residual;
                    entry.phase_span_external = entry.external.d_coef * u_max * u_max;
                }
            } catch (const std::exception& e) {
                entry.note =
                    append_note(entry.note, std::string("external fit failed: ") + e.what());
            }
            if (i == 1) {
                CellCalibration& anchor = table.cells.at({0, j});
                try {
                    const RhombusFit rr = measure_rhombus(device, table, 1, j, true, grid, options);
                    if (!rr.fit.degenerate) {
                        anchor.external.d_coef = rr.fit.curve.d_coef;
                        anchor.external.a = rr.fit.curve.a;
                        anchor.external.b = rr.fit.curve.b;
                        anchor.residual_external = rr.fit.residual;
                        anchor.phase_span_external = anchor.external.d_coef * u_max * u_max;
                        std::ostringstream os;
                        os << "column output-phase anchor; reversed-rhombus consistency "
                           << std::abs(wrap_pi(rr.offset)) << " rad";
                        anchor.note = append_note(anchor.note, os.str());
                    } else {
                        anchor.note = append_note(anchor.note,
                                                  "column anchor; reversed fringe degenerate");
                    }
                } catch (const std::exception& e) {
                    anchor.note = append_note(
                        anchor.note, std::string("anchor responsivity fit failed: ") + e.what());
                }
            }
        }
    }

    // Pass 3: repeat the internal pass with the stray-path phase cycling
    // that the measured external laws now make possible.
    for (CellCoord cell : protocol_order(Topology::blass, d)) {
        CellCalibration& entry = table.cells.at(cell);
        try {
            measure_internal(cell, true, entry);
        } catch (const std::exception& e) {
            entry.note = append_note(
                entry.note,
                std::string("internal refinement failed; first-pass values kept: ") + e.what());
        }
    }
    table.dc_estimates.clear();
    for (const auto& [coord, cal] : table.cells) {
        if (cal.degenerate) continue;
        table.dc_estimates.push_back(cal.eta_estimate);
        table.dc_estimates.push_back(1.0 - cal.eta_estimate);
    }
    return table;
}

CalibrationSummary CalibrationTable::summary() const {
    CalibrationSummary s;
    s.cells_total = static_cast<int>(cells.size());
    std::vector<double> offsets, spans;
    for (const auto& [coord, cal] : cells) {
        if (cal.degenerate) {
            ++s.cells_degenerate;
            continue;
        }
        offsets.push_back(cal.internal.c);
        spans.push_back(cal.phase_span_internal);
    }
    const MeanSd dc = mean_sd(dc_estimates);
    const MeanSd off = mean_sd(offsets);
    const MeanSd span = mean_sd(spans);
    s.dc_mean = dc.mean;
    s.dc_sd = dc.sd;
    s.offset_mean = off.mean;
    s.offset_sd = off.sd;
    s.span_mean = span.mean;
    s.span_sd = span.sd;
    return s;
}

}  // namespace meshlab
