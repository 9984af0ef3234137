#include "mlsel/optimizer.hpp"

#include <cmath>
#include <sstream>

#include "mlsel/error.hpp"

namespace mlsel {

namespace {

constexpr double kFlat = 1e-12;

std::string describe(const VectorXd& theta)
{
    std::ostringstream os;
    os.precision(6);
    os << "[";
    for (Index i = 0; i < theta.size() && i < 8; ++i) os << (i ? ", " : "") << theta(i);
    if (theta.size() > 8) os << ", ...";
    os << "]";
    return os.str();
}

void fd_hessian(const Objective& f, const VectorXd& theta, MatrixXd& hess)
{
    const Index p = theta.size();
    hess.resize(p, p);
    VectorXd gp(p), gm(p);
    VectorXd x = theta;
    for (Index j = 0; j < p; ++j) {
        const double h = 1e-5 * std::max(1.0, std::abs(theta(j)));
        x(j) = theta(j) + h;
        f.value(x, &gp);
        x(j) = theta(j) - h;
        f.value(x, &gm);
        x(j) = theta(j);
        hess.col(j) = (gp - gm) / (2.0 * h);
    }
    hess = 0.5 * (hess + hess.transpose()).eval();
}

}  // namespace

VectorXd numeric_gradient(const Objective& f, const VectorXd& theta, double h)
{
    VectorXd g(theta.size());
    VectorXd x = theta;
    for (Index j = 0; j < theta.size(); ++j) {
        const double step = h * std::max(1.0, std::abs(theta(j)));
        x(j) = theta(j) + step;
        const double fp = f.value(x, nullptr);
        x(j) = theta(j) - step;
        const double fm = f.value(x, nullptr);
        x(j) = theta(j);
        g(j) = (fp - fm) / (2.0 * step);
    }
    return g;
}

double gradient_check(const Objective& f, const VectorXd& theta, double h)
{
    VectorXd g(theta.size());
    f.value(theta, &g);
    const VectorXd fd = numeric_gradient(f, theta, h);
    const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
    return (g - fd).cwiseAbs().maxCoeff() / scale;
}

OptResult maximize(const Objective& f, VectorXd init, const OptOptions& opts)
{
    const Index p = init.size();
    OptResult res;
    VectorXd theta = std::move(init);
    VectorXd grad(p);
    double val = f.value(theta, &grad);
    if (!std::isfinite(val) || !grad.allFinite())
        throw Error(ErrorCode::NonFinite, "non-finite objective or gradient at " + describe(theta));
    if (grad.size() != p)
        throw Error(ErrorCode::InvalidArgument, "gradient dimension does not match init");

    if (opts.check_gradient) {
        const double err = gradient_check(f, theta);
        if (err > opts.check_tol) {
            std::ostringstream os;
            os << "analytic gradient disagrees with finite differences (relative error " << err
               << ")";
            throw Error(ErrorCode::GradientCheck, os.str());
        }
    }

    res.trace.push_back(val);
    MatrixXd hess(p, p);
    VectorXd trial(p), trial_grad(p), dir(p);
    Eigen::LLT<MatrixXd> llt;

    for (int it = 0; it < opts.max_iter; ++it) {
        res.grad_norm = p ? grad.cwiseAbs().maxCoeff() : 0.0;
        if (res.grad_norm <= opts.gtol) {
            res.converged = true;
            break;
        }

        if (f.hessian) {
            f.hessian(theta, hess);
        } else {
            fd_hessian(f, theta, hess);
        }
        MatrixXd neg = -hess;
        bool newton = false;
        llt.compute(neg);
        if (llt.info() == Eigen::Success) {
            newton = true;
        } else {
            for (double eps = 1e-8; eps < 1e12; eps *= 2.0) {
                llt.compute(neg + eps * MatrixXd::Identity(p, p));
                if (llt.info() == Eigen::Success) {
                    newton = true;
                    break;
                }
            }
        }
        dir = newton ? VectorXd(llt.solve(grad)) : grad;
        if (!dir.allFinite() || dir.dot(grad) <= 0.0) {
            dir = grad;
            newton = false;
        }

        // Backtracking on the chosen direction, then once more on the gradient.
        bool accepted = false;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            if (attempt == 1) {
                if (!newton) break;
                dir = grad;
            }
            const double slope = dir.dot(grad);
            double step = 1.0;
            if (attempt == 1 || !newton) step = 1.0 / std::max(1.0, dir.norm());
            for (int k = 0; k < 60; ++k) {
                trial = theta + step * dir;
                const double tv = f.value(trial, &trial_grad);
                const bool ascent = tv >= val + 1e-4 * step * slope && tv >= val;
                // Within rounding of the objective, progress is judged by the gradient.
                const bool flat = std::abs(tv - val) <= kFlat * std::max(1.0, std::abs(val)) &&
                                  trial_grad.allFinite() &&
                                  trial_grad.cwiseAbs().maxCoeff() < 0.5 * res.grad_norm;
                if (std::isfinite(tv) && (ascent || flat)) {
                    if (!trial_grad.allFinite())
                        throw Error(ErrorCode::NonFinite,
                                    "non-finite gradient at " + describe(trial));
                    theta = trial;
                    grad = trial_grad;
                    val = tv;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
        }
        res.iterations = it + 1;
        if (!accepted) break;
        res.trace.push_back(val);
        if (theta.cwiseAbs().maxCoeff() > opts.max_abs_param) {
            res.diverged = true;
            break;
        }
    }

    res.grad_norm = p ? grad.cwiseAbs().maxCoeff() : 0.0;
    if (!res.converged && !res.diverged && res.grad_norm <= opts.gtol) res.converged = true;
    res.argmax = std::move(theta);
    res.value = val;
    return res;
}

}  // namespace mlsel
