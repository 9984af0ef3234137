#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "mlsel/linalg.hpp"

namespace mlsel {

/// A smooth objective to be maximized. `value` returns f(theta) and, when
/// `grad` is non-null, writes the gradient into it. `hessian` is optional;
/// without it the Hessian is formed by central differences of the gradient.
struct Objective {
    std::function<double(const VectorXd& theta, VectorXd* grad)> value;
    std::function<void(const VectorXd& theta, MatrixXd& hess)> hessian;
};

struct OptOptions {
    double gtol = 1e-8;
    int max_iter = 200;
    /// Compare the analytic gradient with central differences at init.
    bool check_gradient = false;
    double check_tol = 1e-4;
    /// Abort (diverged = true) once any |theta_i| exceeds this bound.
    double max_abs_param = std::numeric_limits<double>::infinity();
};

struct OptResult {
    VectorXd argmax;
    double value = 0.0;
    double grad_norm = 0.0;  // infinity norm
    int iterations = 0;
    bool converged = false;
    bool diverged = false;
    std::vector<double> trace;  // objective after each accepted step, starting at init
};

/// Damped Newton ascent with Armijo backtracking. The negated Hessian is
/// shifted by eps*I (eps doubling from 1e-8) until Cholesky succeeds; if no
/// shift works the step falls back to the gradient direction.
OptResult maximize(const Objective& f, VectorXd init, const OptOptions& opts = {});

/// Central-difference gradient of f.value.
VectorXd numeric_gradient(const Objective& f, const VectorXd& theta, double h = 1e-5);

/// max_i |g_i - fd_i| / max(1, max_i |fd_i|).
double gradient_check(const Objective& f, const VectorXd& theta, double h = 1e-5);

}  // namespace mlsel
