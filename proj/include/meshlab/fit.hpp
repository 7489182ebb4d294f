#pragma once

// Small dense nonlinear least squares (Levenberg-Marquardt with analytic
// Jacobians) plus the Gaussian shape used for interference dips. Problems
// here are tiny (4 parameters, <= a few hundred points), so a plain
// normal-equations solve is plenty.

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace meshlab {

struct LMOptions {
    int max_iterations = 200;
    double cost_tol = 1e-14;
    double initial_lambda = 1e-3;
};

struct LMResult {
    Eigen::VectorXd params;
    double rms = 0.0;
    int iterations = 0;
    bool converged = false;
};

using ModelFn = std::function<double(const Eigen::VectorXd& p, double x)>;
using JacobianFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& p, double x)>;

LMResult fit_lm(const ModelFn& model, const JacobianFn& jacobian,
                const std::vector<double>& xs, const std::vector<double>& ys,
                const Eigen::VectorXd& initial, const LMOptions& options = {});

// y = baseline - depth * exp(-(x - center)^2 / (2 sigma^2)).
// depth > 0 is a dip, depth < 0 a peak; sigma is reported positive.
struct GaussianFit {
    double baseline = 0.0;
    double depth = 0.0;
    double center = 0.0;
    double sigma = 1.0;
    double rms = 0.0;
    bool converged = false;
};

GaussianFit fit_gaussian(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace meshlab
