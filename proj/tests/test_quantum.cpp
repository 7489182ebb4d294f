#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "meshlab/compiler.hpp"
#include "meshlab/mesh.hpp"
#include "meshlab/quantum.hpp"
#include "test_util.hpp"

using namespace meshlab;

namespace {

// The variable-transmission splitter studied with two-photon input.
TransferMatrix lossy_bs(double alpha) {
    TransferMatrix t(2, 2);
    t << Cx(0.5, 0), Cx(0.5, 0),
         Cx(0.5, 0), 0.5 * std::exp(Cx(0, alpha));
    return t;
}

}  // namespace

TEST_CASE("permanent on hand-checked matrices") {
    TransferMatrix one(1, 1);
    one << Cx(2.5, -1.0);
    CHECK(std::abs(permanent(one) - Cx(2.5, -1.0)) < 1e-15);

    TransferMatrix two(2, 2);
    two << Cx(1, 0), Cx(2, 0), Cx(3, 0), Cx(4, 0);
    CHECK(std::abs(permanent(two) - Cx(10, 0)) < 1e-12);

    TransferMatrix ones = TransferMatrix::Ones(3, 3);
    CHECK(std::abs(permanent(ones) - Cx(6, 0)) < 1e-12);

    TransferMatrix diag = TransferMatrix::Zero(3, 3);
    diag(0, 0) = Cx(2, 0);
    diag(1, 1) = Cx(0, 3);
    diag(2, 2) = Cx(-1, 0);
    CHECK(std::abs(permanent(diag) - Cx(0, -6)) < 1e-12);
}

TEST_CASE("permanent agrees with the expansion over permutations") {
    std::mt19937_64 rng(321);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int n = 1; n <= 6; ++n) {
        for (int trial = 0; trial < 20; ++trial) {
            TransferMatrix m(n, n);
            for (int r = 0; r < n; ++r) {
                for (int c = 0; c < n; ++c) m(r, c) = Cx(gauss(rng), gauss(rng));
            }
            const Cx fast = permanent(m);
            const Cx slow = test::naive_permanent(m);
            CHECK(std::abs(fast - slow) <= 1e-10 * std::max(1.0, std::abs(slow)));
        }
    }
}

TEST_CASE("permanent size limits") {
    CHECK_THROWS_AS(permanent(TransferMatrix::Zero(2, 3)), std::invalid_argument);
    CHECK_THROWS_AS(permanent(TransferMatrix::Identity(13, 13)), std::length_error);
    CHECK(std::abs(permanent(TransferMatrix::Identity(12, 12)) - Cx(1, 0)) < 1e-12);
}

TEST_CASE("two-photon coincidence on a balanced splitter") {
    TransferMatrix t = dc_matrix(0.5);
    // C = 1/2 - overlap/2: perfect suppression when indistinguishable.
    CHECK(coincidence_probability(t, {0, 1}, {0, 1}, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(coincidence_probability(t, {0, 1}, {0, 1}, 0.0) == doctest::Approx(0.5));
    CHECK(coincidence_probability(t, {0, 1}, {0, 1}, 0.5) == doctest::Approx(0.25));

    // The missing coincidences reappear as bunching.
    OutputDistribution dist = output_distribution(t, {1, 1});
    CHECK(dist.probabilities.at({2, 0}) == doctest::Approx(0.5));
    CHECK(dist.probabilities.at({0, 2}) == doctest::Approx(0.5));
    CHECK(dist.probabilities.at({1, 1}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(dist.loss_probability == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("coincidence_probability on the variable splitter") {
    // C(alpha, ov) = (1 + ov cos alpha) / 8.
    for (double alpha : {kPi, -0.52, 0.0, 1.3}) {
        TransferMatrix t = lossy_bs(alpha);
        for (double ov : {0.0, 0.5, 0.81, 1.0}) {
            const double expected = (1.0 + ov * std::cos(alpha)) / 8.0;
            CHECK(coincidence_probability(t, {0, 1}, {0, 1}, ov) ==
                  doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("coincidence_probability argument checks") {
    TransferMatrix t = dc_matrix(0.5);
    CHECK_THROWS_AS(coincidence_probability(t, {0, 0}, {0, 1}, 1.0), std::domain_error);
    CHECK_THROWS_AS(coincidence_probability(t, {0, 1}, {1, 1}, 1.0), std::domain_error);
    CHECK_THROWS_AS(coincidence_probability(t, {0, 2}, {0, 1}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(coincidence_probability(t, {0, 1}, {0, 1}, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(coincidence_probability(t, {0, 1}, {0, 1}, -0.1), std::invalid_argument);
}

TEST_CASE("output_distribution sums to one on unitary matrices") {
    std::mt19937_64 rng(55);
    for (int d = 2; d <= 4; ++d) {
        TransferMatrix u = test::haar_unitary(d, rng);
        FockState input(d, 0);
        input[0] = 2;
        input[1] = 1;
        if (d > 2) input[2] = 1;  // up to 4 photons total
        OutputDistribution dist = output_distribution(u, input);
        double total = 0.0;
        for (const auto& [state, p] : dist.probabilities) {
            (void)state;
            CHECK(p >= 0.0);
            total += p;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(dist.loss_probability == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("output_distribution reports loss on subunitary matrices") {
    TransferMatrix t = 0.6 * TransferMatrix::Identity(2, 2);
    OutputDistribution single = output_distribution(t, {1, 0});
    CHECK(single.probabilities.at({1, 0}) == doctest::Approx(0.36));
    // The lost-photon outcome is not a Fock state of the input photon
    // number; it shows up in loss_probability instead.
    CHECK(single.probabilities.count({0, 0}) == 0);
    CHECK(single.loss_probability == doctest::Approx(0.64));

    OutputDistribution pair = output_distribution(t, {1, 1});
    CHECK(pair.probabilities.at({1, 1}) == doctest::Approx(0.36 * 0.36));
    CHECK(pair.loss_probability == doctest::Approx(1.0 - 0.36 * 0.36));
}

TEST_CASE("output_distribution input validation") {
    TransferMatrix t = TransferMatrix::Identity(3, 3);
    CHECK_THROWS_AS(output_distribution(t, {1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(output_distribution(t, {1, -1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(output_distribution(t, {3, 2, 0}), std::length_error);
    OutputDistribution vac = output_distribution(t, {0, 0, 0});
    CHECK(vac.probabilities.at({0, 0, 0}) == doctest::Approx(1.0));
}

TEST_CASE("hom_scan on a balanced splitter recovers the source visibility") {
    SourceModel source;
    source.dip_sigma = 0.30;
    std::vector<double> delays;
    for (int i = 0; i < 101; ++i) delays.push_back(-1.5 + 0.03 * i);
    TransferMatrix t = dc_matrix(0.5);
    HomScan scan = hom_scan(t, {0, 1}, {0, 1}, source, delays);
    CHECK(scan.fitted.converged);
    CHECK(scan.visibility == doctest::Approx(0.81).epsilon(1e-6));
    CHECK(scan.fitted.sigma == doctest::Approx(0.30).epsilon(1e-4));
    CHECK(scan.fitted.depth > 0.0);  // coincidence dip
    CHECK(scan.expected_counts.empty());
}

TEST_CASE("hom_scan expected counts scale with the source budget") {
    SourceModel source;
    source.dip_sigma = 0.30;
    std::vector<double> delays;
    for (int i = 0; i < 21; ++i) delays.push_back(-1.0 + 0.1 * i);
    TransferMatrix t = dc_matrix(0.5);
    HomScan scan = hom_scan(t, {0, 1}, {0, 1}, source, delays, 1e6);
    REQUIRE(scan.expected_counts.size() == delays.size());
    // rate * mu^2 * eta_h^2 * eta_d^2 = 1e6 * 1e-4 * 0.09 * 0.7225
    const double scale = 6.50250;
    for (std::size_t k = 0; k < delays.size(); ++k) {
        CHECK(scan.expected_counts[k] ==
              doctest::Approx(scan.coincidences[k] * scale).epsilon(1e-12));
    }
}

TEST_CASE("hom_scan flips character with the splitter phase") {
    SourceModel source;
    source.dip_sigma = 0.5;
    std::vector<double> delays;
    for (int i = 0; i < 61; ++i) delays.push_back(-3.0 + 0.1 * i);

    HomScan dip = hom_scan(lossy_bs(kPi), {0, 1}, {0, 1}, source, delays);
    CHECK(dip.fitted.depth > 0.0);
    CHECK(dip.visibility == doctest::Approx(0.81).epsilon(1e-6));

    HomScan peak = hom_scan(lossy_bs(-0.52), {0, 1}, {0, 1}, source, delays);
    CHECK(peak.fitted.depth < 0.0);
    CHECK(peak.visibility == doctest::Approx(0.81 * std::cos(0.52)).epsilon(1e-6));
}

TEST_CASE("hom_scan validation") {
    TransferMatrix t = dc_matrix(0.5);
    SourceModel source;
    CHECK_THROWS_AS(hom_scan(t, {0, 1}, {0, 1}, source, {}), std::domain_error);
    SourceModel bad = source;
    bad.v_src = 1.4;
    CHECK_THROWS_AS(hom_scan(t, {0, 1}, {0, 1}, bad, {0.0}), std::invalid_argument);
    SourceModel dead = source;
    dead.dip_sigma = 0.0;
    CHECK_THROWS_AS(hom_scan(t, {0, 1}, {0, 1}, dead, {0.0}), std::invalid_argument);
}

TEST_CASE("visibility definition") {
    CHECK(visibility(0.125, 0.02375) == doctest::Approx(0.81));
    CHECK(visibility(0.125, 0.2128) == doctest::Approx((0.2128 - 0.125) / 0.125));
    CHECK_THROWS_AS(visibility(0.0, 0.1), std::domain_error);
}

TEST_CASE("truth_table of a permutation is exact") {
    TransferMatrix p = test::xgate_oracle(5, 2);
    TruthTable t = truth_table(p);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            CHECK(t.p(j, i) == doctest::Approx(j == (i + 2) % 5 ? 1.0 : 0.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("truth_table renormalizes uniform loss away") {
    std::mt19937_64 rng(808);
    TransferMatrix u = test::haar_unitary(4, rng);
    TruthTable full = truth_table(u);
    TruthTable scaled = truth_table(TransferMatrix(0.5 * u));
    CHECK((full.p - scaled.p).cwiseAbs().maxCoeff() < 1e-12);

    TransferMatrix dark = TransferMatrix::Identity(3, 3);
    dark(2, 2) = Cx(0, 0);
    CHECK_THROWS_AS(truth_table(dark), std::domain_error);
}

TEST_CASE("gate_fidelity extremes and a hand-checked mixture") {
    TruthTable x1 = truth_table(test::xgate_oracle(4, 1));
    TruthTable x2 = truth_table(test::xgate_oracle(4, 2));
    CHECK(gate_fidelity(x1, x1).gate_fidelity == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gate_fidelity(x1, x2).gate_fidelity == doctest::Approx(0.0).epsilon(1e-12));

    // Experiment leaks half of each input to the neighbouring port.
    TruthTable exp_t;
    exp_t.p = Eigen::MatrixXd::Zero(2, 2);
    exp_t.p << 0.5, 0.5,
               0.5, 0.5;
    TruthTable theory;
    theory.p = Eigen::MatrixXd::Identity(2, 2);
    FidelityReport rep = gate_fidelity(exp_t, theory);
    CHECK(rep.per_input[0] == doctest::Approx(std::sqrt(0.5)));
    CHECK(rep.gate_fidelity == doctest::Approx(std::sqrt(0.5)));

    TruthTable bad;
    bad.p = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(gate_fidelity(bad, theory), std::invalid_argument);
    TruthTable small;
    small.p = Eigen::MatrixXd::Identity(3, 3);
    CHECK_THROWS_AS(gate_fidelity(small, theory), std::domain_error);
}

TEST_CASE("superposition_evolve shifts rail superpositions coherently") {
    const int d = 6, n = 2;
    MeshConfig cfg = MeshConfig::ideal(Topology::triangular, d);
    TransferMatrix t = forward(cfg, xgate_settings(GateSpec{d, n})).effective;

    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(d);
    psi[4] = Cx(1.0 / std::sqrt(2.0), 0);
    psi[5] = Cx(0, 1.0 / std::sqrt(2.0));  // relative phase i
    SuperpositionResult res = superposition_evolve(t, psi);

    Eigen::VectorXcd want = Eigen::VectorXcd::Zero(d);
    want[(4 + n) % d] = psi[4];
    want[(5 + n) % d] = psi[5];
    CHECK(state_fidelity(res.amplitudes, want) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.loss_probability == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(res.probabilities[(4 + n) % d] == doctest::Approx(0.5));
    CHECK(res.probabilities[(5 + n) % d] == doctest::Approx(0.5));

    // The relative phase rides along unchanged.
    const Cx ratio = res.amplitudes[(5 + n) % d] / res.amplitudes[(4 + n) % d];
    CHECK(std::abs(ratio - Cx(0, 1)) < 1e-12);
}

TEST_CASE("superposition_evolve accounts for loss and validates input") {
    TransferMatrix t = 0.8 * TransferMatrix::Identity(2, 2);
    Eigen::VectorXcd psi(2);
    psi << Cx(std::sqrt(0.5), 0), Cx(std::sqrt(0.5), 0);
    SuperpositionResult res = superposition_evolve(t, psi);
    CHECK(res.loss_probability == doctest::Approx(0.36));
    CHECK(res.probabilities[0] == doctest::Approx(0.5));

    Eigen::VectorXcd unnorm(2);
    unnorm << Cx(1, 0), Cx(1, 0);
    CHECK_THROWS_AS(superposition_evolve(t, unnorm), std::invalid_argument);
    Eigen::VectorXcd wrong(3);
    wrong << Cx(1, 0), Cx(0, 0), Cx(0, 0);
    CHECK_THROWS_AS(superposition_evolve(t, wrong), std::invalid_argument);
}

TEST_CASE("state_fidelity is phase-invariant and catches orthogonality") {
    Eigen::VectorXcd a(2), b(2), c(2);
    a << Cx(std::sqrt(0.5), 0), Cx(std::sqrt(0.5), 0);
    b = std::exp(Cx(0, 1.23)) * a;
    c << Cx(std::sqrt(0.5), 0), Cx(-std::sqrt(0.5), 0);
    CHECK(state_fidelity(a, b) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(state_fidelity(a, c) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(state_fidelity(a, 2.0 * c.eval()) == doctest::Approx(0.0).epsilon(1e-12));
    Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(2);
    CHECK_THROWS_AS(state_fidelity(a, zero), std::domain_error);
}
