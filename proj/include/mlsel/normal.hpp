#pragma once

#include <cmath>
#include <numbers>

namespace mlsel {

inline double normal_pdf(double x) noexcept
{
    return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

inline double normal_cdf(double x) noexcept
{
    return 0.5 * std::erfc(-x * std::numbers::sqrt2 * 0.5);
}

/// Phi(b) - Phi(a) for a <= b, evaluated on whichever tail keeps precision.
inline double normal_interval(double a, double b) noexcept
{
    if (a > 0.0) return normal_cdf(-a) - normal_cdf(-b);
    return normal_cdf(b) - normal_cdf(a);
}

/// Phi^{-1}(p) for p in (0, 1).
double normal_quantile(double p);

}  // namespace mlsel

#include <Eigen/Dense>

namespace mlsel {

/// Gauss-Hermite rule against the standard normal density: sum_i w_i g(x_i)
/// approximates E[g(Z)], Z ~ N(0, 1). Weights sum to one.
struct Quadrature {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

Quadrature gauss_hermite(int points);

}  // namespace mlsel
