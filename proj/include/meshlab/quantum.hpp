#pragma once

// Few-photon statistics of a (possibly lossy) transfer matrix: permanents,
// two-photon coincidences with partial distinguishability, HOM delay scans,
// exact Fock-state output distributions, truth tables and gate fidelities.
//
// Conventions: T(j, i) is the amplitude from input i to output j. Photons
// are distinguishable up to a single pairwise overlap scalar; a delay scan
// maps delay to overlap through a Gaussian of width dip_sigma capped at the
// source visibility v_src. Truth tables and coincidences are post-selected
// on detection; subunitary matrices report the deficit as loss.

#include <map>
#include <utility>
#include <vector>

#include "meshlab/fit.hpp"
#include "meshlab/mesh.hpp"

namespace meshlab {

// Exact evolution caps: permanents are O(2^n * n), Fock enumeration grows
// combinatorially on top of that.
inline constexpr int kPermanentCap = 12;
inline constexpr int kPhotonCap = 4;

// Gray-code Ryser formula. Throws std::length_error above kPermanentCap.
Cx permanent(const TransferMatrix& m);

// P(photon at each of out_modes | photons in in_modes) for pair overlap in
// [0, 1]. Modes must be distinct on both sides; bunched outcomes live in
// output_distribution. Subunitary T gives the raw (post-loss) probability.
double coincidence_probability(const TransferMatrix& t, std::pair<int, int> in_modes,
                               std::pair<int, int> out_modes, double overlap);

using FockState = std::vector<int>;

struct OutputDistribution {
    std::map<FockState, double> probabilities;
    double loss_probability = 0.0;  // 1 - sum, zero for unitary T
};

OutputDistribution output_distribution(const TransferMatrix& t, const FockState& input);

struct SourceModel {
    double v_src = 0.81;             // two-source HOM visibility ceiling
    double dip_sigma = 1.0;          // Gaussian overlap width in delay units
    double mean_photon_number = 0.01;
    double heralding_eff = 0.30;
    double detector_eff = 0.85;
};

struct HomScan {
    std::vector<double> delays;
    std::vector<double> coincidences;     // probabilities per delay
    std::vector<double> expected_counts;  // filled when pair_rate > 0
    GaussianFit fitted;
    double visibility = 0.0;  // |depth| / baseline of the fitted curve
};

// Coincidence versus delay with overlap(tau) = v_src * exp(-tau^2 / (2 sigma^2)),
// plus a Gaussian fit of the resulting dip or peak. When pair_rate > 0 the
// expected counts are coincidence * pair_rate * mu^2 * heralding^2 * detector^2.
HomScan hom_scan(const TransferMatrix& t, std::pair<int, int> in_modes,
                 std::pair<int, int> out_modes, const SourceModel& source,
                 const std::vector<double>& delays, double pair_rate = 0.0);

// V = |C_d - C_i| / C_d for distinguishable and indistinguishable counts.
double visibility(double c_dist, double c_indist);

struct TruthTable {
    Eigen::MatrixXd p;  // p(j, i) = P(output j | single photon in input i)
};

// Column-normalized single-photon transmission; throws if an input sees no
// transmission at all.
TruthTable truth_table(const TransferMatrix& t);

struct FidelityReport {
    std::vector<double> per_input;
    double gate_fidelity = 0.0;  // mean of per_input
};

// Classical (Bhattacharyya) fidelity sum_j sqrt(p_exp * p_th) per input,
// averaged over inputs.
FidelityReport gate_fidelity(const TruthTable& experiment, const TruthTable& theory);

struct SuperpositionResult {
    Eigen::VectorXcd amplitudes;     // T * psi, unnormalized
    Eigen::VectorXd probabilities;   // renormalized over detected events
    double loss_probability = 0.0;
};

// Single photon in a coherent superposition of rails; input must be unit norm.
SuperpositionResult superposition_evolve(const TransferMatrix& t,
                                         const Eigen::VectorXcd& amplitudes);

// |<a|b>|^2 / (|a|^2 |b|^2); tolerant of unnormalized vectors.
double state_fidelity(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);

}  // namespace meshlab
