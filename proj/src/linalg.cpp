#include "mlsel/linalg.hpp"

#include <algorithm>
#include <limits>

namespace mlsel {

std::vector<Index> independent_columns(const MatrixXd& candidates, const MatrixXd& base,
                                       double rel_tol)
{
    std::vector<Index> kept;
    if (candidates.cols() == 0) return kept;

    double scale = candidates.colwise().norm().maxCoeff();
    MatrixXd resid = candidates;
    if (base.cols() > 0) {
        scale = std::max(scale, base.colwise().norm().maxCoeff());
        Eigen::ColPivHouseholderQR<MatrixXd> bqr(base);
        const MatrixXd coef = bqr.solve(candidates);
        resid -= base * coef;
    }
    if (!(scale > 0.0)) return kept;

    Eigen::ColPivHouseholderQR<MatrixXd> qr(resid);
    const auto& r = qr.matrixQR();
    const Index diag = std::min(r.rows(), r.cols());
    const auto& perm = qr.colsPermutation().indices();
    for (Index i = 0; i < diag; ++i) {
        if (std::abs(r(i, i)) <= rel_tol * scale) break;
        kept.push_back(perm(i));
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

double condition_number(const MatrixXd& m)
{
    if (m.cols() == 0 || m.rows() == 0) return 1.0;
    Eigen::BDCSVD<MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    const double lo = s(s.size() - 1);
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return s(0) / lo;
}

MatrixXd select_rows(const MatrixXd& m, const std::vector<Index>& rows)
{
    MatrixXd out(static_cast<Index>(rows.size()), m.cols());
    for (Index i = 0; i < out.rows(); ++i) out.row(i) = m.row(rows[static_cast<size_t>(i)]);
    return out;
}

VectorXd select_rows(const VectorXd& v, const std::vector<Index>& rows)
{
    VectorXd out(static_cast<Index>(rows.size()));
    for (Index i = 0; i < out.size(); ++i) out(i) = v(rows[static_cast<size_t>(i)]);
    return out;
}

}  // namespace mlsel
