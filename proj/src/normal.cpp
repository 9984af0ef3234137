#include "mlsel/normal.hpp"

#include <boost/math/special_functions/erf.hpp>

#include "mlsel/error.hpp"

namespace mlsel {

double normal_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0))
        throw Error(ErrorCode::InvalidArgument, "normal_quantile: p outside (0, 1)");
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace mlsel

namespace mlsel {

Quadrature gauss_hermite(int points)
{
    if (points < 1) throw Error(ErrorCode::InvalidArgument, "gauss_hermite: need >= 1 point");
    // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(points, points);
    for (int i = 1; i < points; ++i) jac(i, i - 1) = jac(i - 1, i) = std::sqrt(static_cast<double>(i));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    Quadrature q;
    q.nodes = es.eigenvalues();
    q.weights = es.eigenvectors().row(0).array().square().transpose();
    q.weights /= q.weights.sum();
    return q;
}

}  // namespace mlsel
