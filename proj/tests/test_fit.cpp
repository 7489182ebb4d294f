#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "meshlab/fit.hpp"

using namespace meshlab;

TEST_CASE("fit_lm solves a linear model exactly") {
    auto model = [](const Eigen::VectorXd& p, double x) { return p[0] + p[1] * x; };
    auto jac = [](const Eigen::VectorXd& p, double x) {
        (void)p;
        Eigen::VectorXd j(2);
        j << 1.0, x;
        return j;
    };
    std::vector<double> xs, ys;
    for (int i = 0; i < 20; ++i) {
        const double x = 0.3 * i - 2.0;
        xs.push_back(x);
        ys.push_back(1.7 - 0.4 * x);
    }
    Eigen::VectorXd p0(2);
    p0 << 0.0, 0.0;
    LMResult r = fit_lm(model, jac, xs, ys, p0);
    CHECK(r.converged);
    CHECK(r.params[0] == doctest::Approx(1.7).epsilon(1e-10));
    CHECK(r.params[1] == doctest::Approx(-0.4).epsilon(1e-10));
    CHECK(r.rms < 1e-10);
}

TEST_CASE("fit_lm recovers a cosine fringe from a rough start") {
    // y = a - b cos(c + d x), the workhorse shape in the calibration code.
    auto model = [](const Eigen::VectorXd& p, double x) {
        return p[0] - p[1] * std::cos(p[2] + p[3] * x);
    };
    auto jac = [](const Eigen::VectorXd& p, double x) {
        const double s = std::sin(p[2] + p[3] * x);
        Eigen::VectorXd j(4);
        j << 1.0, -std::cos(p[2] + p[3] * x), p[1] * s, p[1] * s * x;
        return j;
    };
    const double a = 0.5, b = 0.45, c = 1.1, d = 0.06;
    std::vector<double> xs, ys;
    for (int i = 0; i < 60; ++i) {
        const double x = 1.4 * i;
        xs.push_back(x);
        ys.push_back(a - b * std::cos(c + d * x));
    }
    Eigen::VectorXd p0(4);
    p0 << 0.4, 0.3, 1.0, 0.055;
    LMResult r = fit_lm(model, jac, xs, ys, p0);
    CHECK(r.converged);
    CHECK(r.params[0] == doctest::Approx(a).epsilon(1e-8));
    CHECK(r.params[1] == doctest::Approx(b).epsilon(1e-8));
    CHECK(r.params[2] == doctest::Approx(c).epsilon(1e-8));
    CHECK(r.params[3] == doctest::Approx(d).epsilon(1e-8));
}

TEST_CASE("fit_lm input validation") {
    auto model = [](const Eigen::VectorXd& p, double x) { return p[0] * x; };
    auto jac = [](const Eigen::VectorXd& p, double x) {
        (void)p;
        Eigen::VectorXd j(1);
        j << x;
        return j;
    };
    Eigen::VectorXd p0(1);
    p0 << 1.0;
    CHECK_THROWS_AS(fit_lm(model, jac, {}, {}, p0), std::invalid_argument);
    CHECK_THROWS_AS(fit_lm(model, jac, {1.0, 2.0}, {1.0}, p0), std::invalid_argument);
}

TEST_CASE("fit_gaussian recovers a clean dip") {
    const double baseline = 10.0, depth = 3.0, center = 0.4, sigma = 1.7;
    std::vector<double> xs, ys;
    for (int i = 0; i < 101; ++i) {
        const double x = -8.0 + 0.17 * i;
        const double z = (x - center) / sigma;
        xs.push_back(x);
        ys.push_back(baseline - depth * std::exp(-0.5 * z * z));
    }
    GaussianFit g = fit_gaussian(xs, ys);
    CHECK(g.converged);
    CHECK(g.baseline == doctest::Approx(baseline).epsilon(1e-7));
    CHECK(g.depth == doctest::Approx(depth).epsilon(1e-7));
    CHECK(g.center == doctest::Approx(center).epsilon(1e-7));
    CHECK(g.sigma == doctest::Approx(sigma).epsilon(1e-7));
    CHECK(g.rms < 1e-9);
}

TEST_CASE("fit_gaussian keeps the sign convention for peaks") {
    // depth < 0 bulges above the baseline.
    std::vector<double> xs, ys;
    for (int i = 0; i < 41; ++i) {
        const double x = -2.0 + 0.1 * i;
        ys.push_back(1.0 + 0.8 * std::exp(-0.5 * x * x / (0.36)));
        xs.push_back(x);
    }
    GaussianFit g = fit_gaussian(xs, ys);
    CHECK(g.converged);
    CHECK(g.depth == doctest::Approx(-0.8).epsilon(1e-6));
    CHECK(g.sigma == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(g.center == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("fit_gaussian tolerates mild noise") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> noise(0.0, 0.01);
    const double sigma = 0.30;
    std::vector<double> xs, ys;
    for (int i = 0; i < 101; ++i) {
        const double x = -1.5 + 0.03 * i;
        const double z = x / sigma;
        xs.push_back(x);
        ys.push_back(1.0 - 0.81 * std::exp(-0.5 * z * z) + noise(rng));
    }
    GaussianFit g = fit_gaussian(xs, ys);
    CHECK(g.sigma == doctest::Approx(sigma).epsilon(0.02));
    CHECK(g.depth == doctest::Approx(0.81).epsilon(0.02));
}

TEST_CASE("fit_gaussian needs five points") {
    std::vector<double> xs{0, 1, 2, 3};
    std::vector<double> ys{1, 0.5, 0.4, 0.9};
    CHECK_THROWS_AS(fit_gaussian(xs, ys), std::invalid_argument);
}
