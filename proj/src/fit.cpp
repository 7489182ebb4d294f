#include "meshlab/fit.hpp"

#include <cmath>
#include <stdexcept>

namespace meshlab {

LMResult fit_lm(const ModelFn& model, const JacobianFn& jacobian,
                const std::vector<double>& xs, const std::vector<double>& ys,
                const Eigen::VectorXd& initial, const LMOptions& options) {
    if (xs.size() != ys.size() || xs.empty()) {
        throw std::invalid_argument("fit_lm: xs and ys must be non-empty and equal length");
    }
    const int n = static_cast<int>(xs.size());
    const int k = static_cast<int>(initial.size());

    auto cost_of = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        r.resize(n);
        for (int i = 0; i < n; ++i) r[i] = model(p, xs[i]) - ys[i];
        return r.squaredNorm();
    };

    LMResult res;
    res.params = initial;
    Eigen::VectorXd r;
    double cost = cost_of(res.params, r);
    double lambda = options.initial_lambda;

    for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
        Eigen::MatrixXd jac(n, k);
        for (int i = 0; i < n; ++i) jac.row(i) = jacobian(res.params, xs[i]).transpose();
        Eigen::MatrixXd h = jac.transpose() * jac;
        Eigen::VectorXd g = jac.transpose() * r;

        bool stepped = false;
        for (int attempt = 0; attempt < 30; ++attempt) {
            Eigen::MatrixXd damped = h;
            for (int m = 0; m < k; ++m) damped(m, m) += lambda * (h(m, m) + 1e-12);
            Eigen::VectorXd delta = damped.ldlt().solve(-g);
            Eigen::VectorXd trial = res.params + delta;
            Eigen::VectorXd r_trial;
            const double cost_trial = cost_of(trial, r_trial);
            if (std::isfinite(cost_trial) && cost_trial < cost) {
                const double drop = cost - cost_trial;
                res.params = trial;
                r = r_trial;
                cost = cost_trial;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                if (drop < options.cost_tol * (cost + 1e-30)) res.converged = true;
                break;
            }
            lambda *= 4.0;
            if (lambda > 1e12) break;
        }
        if (!stepped || res.converged) {
            if (!stepped) res.converged = true;  // stuck at a (local) minimum
            break;
        }
    }
    res.rms = std::sqrt(cost / n);
    return res;
}

GaussianFit fit_gaussian(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 5) {
        throw std::invalid_argument("fit_gaussian needs at least 5 points");
    }
    const int n = static_cast<int>(xs.size());

    // Edges approximate the baseline; the largest excursion locates the
    // feature and its sign.
    double base0 = 0.5 * (ys.front() + ys.back());
    int peak = 0;
    for (int i = 0; i < n; ++i) {
        if (std::abs(ys[i] - base0) > std::abs(ys[peak] - base0)) peak = i;
    }
    const double depth0 = base0 - ys[peak];
    const double center0 = xs[peak];

    // Half-depth crossings give a width estimate; fall back to span/6.
    double span = std::abs(xs.back() - xs.front());
    double sigma0 = span > 0 ? span / 6.0 : 1.0;
    {
        const double half = std::abs(depth0) / 2.0;
        int lo = peak, hi = peak;
        while (lo > 0 && std::abs(ys[lo] - base0) > half) --lo;
        while (hi < n - 1 && std::abs(ys[hi] - base0) > half) ++hi;
        const double fwhm = std::abs(xs[hi] - xs[lo]);
        if (fwhm > 0) sigma0 = fwhm / 2.35482;
    }

    Eigen::VectorXd p0(4);
    p0 << base0, depth0, center0, sigma0;

    auto model = [](const Eigen::VectorXd& p, double x) {
        const double z = (x - p[2]) / p[3];
        return p[0] - p[1] * std::exp(-0.5 * z * z);
    };
    auto jacobian = [](const Eigen::VectorXd& p, double x) {
        const double z = (x - p[2]) / p[3];
        const double e = std::exp(-0.5 * z * z);
        Eigen::VectorXd j(4);
        j << 1.0, -e, -p[1] * e * z / p[3], -p[1] * e * z * z / p[3];
        return j;
    };

    LMResult lm = fit_lm(model, jacobian, xs, ys, p0);
    GaussianFit out;
    out.baseline = lm.params[0];
    out.depth = lm.params[1];
    out.center = lm.params[2];
    out.sigma = std::abs(lm.params[3]);
    out.rms = lm.rms;
    out.converged = lm.converged;
    return out;
}

}  // namespace meshlab
