#include "meshlab/quantum.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace meshlab {

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

void check_mode(int m, int limit, const char* what) {
    if (m < 0 || m >= limit) {
        std::ostringstream os;
        os << what << " mode " << m << " out of range [0, " << limit << ")";
        throw std::invalid_argument(os.str());
    }
}

}  // namespace

Cx permanent(const TransferMatrix& m) {
    if (m.rows() != m.cols() || m.rows() < 1) {
        throw std::invalid_argument("permanent needs a square matrix, size >= 1");
    }
    const int n = static_cast<int>(m.rows());
    if (n > kPermanentCap) {
        std::ostringstream os;
        os << "permanent: size " << n << " exceeds cap " << kPermanentCap;
        throw std::length_error(os.str());
    }

    // Ryser with Gray-code subset updates: one column toggled per step.
    std::vector<Cx> rowsum(n, Cx(0, 0));
    Cx total(0, 0);
    std::uint64_t prev = 0;
    const std::uint64_t end = std::uint64_t(1) << n;
    for (std::uint64_t k = 1; k < end; ++k) {
        const std::uint64_t gray = k ^ (k >> 1);
        const std::uint64_t diff = gray ^ prev;
        const int j = std::countr_zero(diff);
        const double toggle = (gray & diff) ? 1.0 : -1.0;
        for (int i = 0; i < n; ++i) rowsum[i] += toggle * m(i, j);
        Cx prod(1, 0);
        for (int i = 0; i < n; ++i) prod *= rowsum[i];
        const int bits = std::popcount(gray);
        total += ((n - bits) % 2 == 0) ? prod : -prod;
        prev = gray;
    }
    return total;
}

double coincidence_probability(const TransferMatrix& t, std::pair<int, int> in_modes,
                               std::pair<int, int> out_modes, double overlap) {
    const auto [ia, ib] = in_modes;
    const auto [oc, od] = out_modes;
    check_mode(ia, static_cast<int>(t.cols()), "input");
    check_mode(ib, static_cast<int>(t.cols()), "input");
    check_mode(oc, static_cast<int>(t.rows()), "output");
    check_mode(od, static_cast<int>(t.rows()), "output");
    if (ia == ib || oc == od) {
        throw std::domain_error(
            "coincidence_probability needs distinct modes; bunched outcomes live in "
            "output_distribution");
    }
    if (!(overlap >= 0.0 && overlap <= 1.0)) {
        throw std::invalid_argument("overlap must lie in [0, 1]");
    }
    const Cx direct = t(oc, ia) * t(od, ib);
    const Cx swapped = t(oc, ib) * t(od, ia);
    return std::norm(direct) + std::norm(swapped) +
           2.0 * overlap * (direct * std::conj(swapped)).real();
}

OutputDistribution output_distribution(const TransferMatrix& t, const FockState& input) {
    const int d_in = static_cast<int>(t.cols());
    const int d_out = static_cast<int>(t.rows());
    if (static_cast<int>(input.size()) != d_in) {
        throw std::invalid_argument("occupation list length does not match input count");
    }
    int n = 0;
    for (int v : input) {
        if (v < 0) throw std::invalid_argument("occupations must be non-negative");
        n += v;
    }
    if (n > kPhotonCap) {
        std::ostringstream os;
        os << "output_distribution: " << n << " photons exceed cap " << kPhotonCap;
        throw std::length_error(os.str());
    }

    OutputDistribution out;
    if (n == 0) {
        out.probabilities[FockState(d_out, 0)] = 1.0;
        return out;
    }

    Eigen::MatrixXcd cols(d_out, n);
    double in_fact = 1.0;
    {
        int c = 0;
        for (int i = 0; i < d_in; ++i) {
            in_fact *= factorial(input[i]);
            for (int r = 0; r < input[i]; ++r) cols.col(c++) = t.col(i);
        }
    }

    double total = 0.0;
    FockState outcome(d_out, 0);
    std::function<void(int, int)> walk = [&](int mode, int remaining) {
        if (mode == d_out - 1) {
            outcome[mode] = remaining;
            Eigen::MatrixXcd sub(n, n);
            int r = 0;
            for (int j = 0; j < d_out; ++j) {
                for (int rep = 0; rep < outcome[j]; ++rep) sub.row(r++) = cols.row(j);
            }
            double out_fact = 1.0;
            for (int j = 0; j < d_out; ++j) out_fact *= factorial(outcome[j]);
            const double p = std::norm(permanent(sub)) / (in_fact * out_fact);
            out.probabilities[outcome] = p;
            total += p;
            return;
        }
        for (int k = 0; k <= remaining; ++k) {
            outcome[mode] = k;
            walk(mode + 1, remaining - k);
        }
    };
    walk(0, n);
    out.loss_probability = std::max(0.0, 1.0 - total);
    return out;
}

HomScan hom_scan(const TransferMatrix& t, std::pair<int, int> in_modes,
                 std::pair<int, int> out_modes, const SourceModel& source,
                 const std::vector<double>& delays, double pair_rate) {
    if (delays.empty()) throw std::domain_error("hom_scan needs at least one delay");
    if (!(source.v_src >= 0.0 && source.v_src <= 1.0) ||
        !(source.heralding_eff >= 0.0 && source.heralding_eff <= 1.0) ||
        !(source.detector_eff >= 0.0 && source.detector_eff <= 1.0) ||
        !(source.dip_sigma > 0.0) || !(source.mean_photon_number > 0.0)) {
        throw std::invalid_argument("source model fields out of range");
    }

    HomScan scan;
    scan.delays = delays;
    scan.coincidences.reserve(delays.size());
    const double two_sigma_sq = 2.0 * source.dip_sigma * source.dip_sigma;
    for (double tau : delays) {
        if (!std::isfinite(tau)) throw std::invalid_argument("delays must be finite");
        const double overlap = source.v_src * std::exp(-tau * tau / two_sigma_sq);
        scan.coincidences.push_back(coincidence_probability(t, in_modes, out_modes, overlap));
    }
    if (pair_rate > 0.0) {
        const double scale = pair_rate * source.mean_photon_number * source.mean_photon_number *
                             source.heralding_eff * source.heralding_eff *
                             source.detector_eff * source.detector_eff;
        scan.expected_counts.reserve(delays.size());
        for (double c : scan.coincidences) scan.expected_counts.push_back(c * scale);
    }

    if (delays.size() >= 5) {
        scan.fitted = fit_gaussian(scan.delays, scan.coincidences);
    }
    if (scan.fitted.converged && scan.fitted.baseline > 0.0) {
        scan.visibility = std::abs(scan.fitted.depth) / scan.fitted.baseline;
    } else {
        // Fall back to the raw extremes: farthest delay approximates the
        // distinguishable baseline.
        std::size_t far = 0, near = 0;
        for (std::size_t i = 1; i < delays.size(); ++i) {
            if (std::abs(delays[i]) > std::abs(delays[far])) far = i;
            if (std::abs(delays[i]) < std::abs(delays[near])) near = i;
        }
        if (scan.coincidences[far] > 0.0) {
            scan.visibility = visibility(scan.coincidences[far], scan.coincidences[near]);
        }
    }
    return scan;
}

double visibility(double c_dist, double c_indist) {
    if (!(c_dist > 0.0)) {
        throw std::domain_error("visibility needs a positive distinguishable count");
    }
    return std::abs(c_dist - c_indist) / c_dist;
}

TruthTable truth_table(const TransferMatrix& t) {
    if (t.rows() != t.cols() || t.rows() < 2) {
        throw std::invalid_argument("truth_table needs a square matrix, d >= 2");
    }
    const int d = static_cast<int>(t.rows());
    TruthTable table;
    table.p = t.cwiseAbs2();
    for (int i = 0; i < d; ++i) {
        const double s = table.p.col(i).sum();
        if (!(s > 0.0)) {
            std::ostringstream os;
            os << "truth_table: input " << i << " sees no transmission";
            throw std::domain_error(os.str());
        }
        table.p.col(i) /= s;
    }
    return table;
}

FidelityReport gate_fidelity(const TruthTable& experiment, const TruthTable& theory) {
    if (experiment.p.rows() != theory.p.rows() || experiment.p.cols() != theory.p.cols()) {
        throw std::domain_error("gate_fidelity: table dimensions differ");
    }
    const int d_out = static_cast<int>(experiment.p.rows());
    const int d_in = static_cast<int>(experiment.p.cols());
    for (int i = 0; i < d_in; ++i) {
        if (std::abs(experiment.p.col(i).sum() - 1.0) > 1e-6 ||
            std::abs(theory.p.col(i).sum() - 1.0) > 1e-6) {
            throw std::invalid_argument("gate_fidelity: columns must be normalized");
        }
    }
    FidelityReport report;
    report.per_input.reserve(d_in);
    double sum = 0.0;
    for (int i = 0; i < d_in; ++i) {
        double f = 0.0;
        for (int j = 0; j < d_out; ++j) {
            f += std::sqrt(std::max(0.0, experiment.p(j, i)) * std::max(0.0, theory.p(j, i)));
        }
        f = std::min(f, 1.0);
        report.per_input.push_back(f);
        sum += f;
    }
    report.gate_fidelity = sum / d_in;
    return report;
}

SuperpositionResult superposition_evolve(const TransferMatrix& t,
                                         const Eigen::VectorXcd& amplitudes) {
    if (amplitudes.size() != t.cols()) {
        throw std::invalid_argument("amplitude vector length does not match input count");
    }
    if (std::abs(amplitudes.norm() - 1.0) > 1e-9) {
        throw std::invalid_argument("input state must have unit norm");
    }
    SuperpositionResult r;
    r.amplitudes = t * amplitudes;
    const double detected = r.amplitudes.squaredNorm();
    r.loss_probability = std::max(0.0, 1.0 - detected);
    if (detected > 0.0) {
        r.probabilities = r.amplitudes.cwiseAbs2() / detected;
    } else {
        r.probabilities = Eigen::VectorXd::Zero(t.rows());
    }
    return r;
}

double state_fidelity(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    if (a.size() != b.size()) throw std::invalid_argument("state sizes differ");
    const double na = a.squaredNorm();
    const double nb = b.squaredNorm();
    if (!(na > 0.0 && nb > 0.0)) throw std::domain_error("state_fidelity: zero vector");
    return std::norm(a.dot(b)) / (na * nb);
}

}  // namespace meshlab
