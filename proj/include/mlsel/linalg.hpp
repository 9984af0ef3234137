#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mlsel {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Ascending indices of a maximal subset of `candidates` columns that is
/// linearly independent, both internally and from span(base). A column counts
/// as dependent when its pivoted-QR residual falls below rel_tol times the
/// largest column norm of [base, candidates].
std::vector<Index> independent_columns(const MatrixXd& candidates,
                                       const MatrixXd& base = MatrixXd(),
                                       double rel_tol = 1e-10);

template <typename Derived>
MatrixXd select_columns(const Eigen::MatrixBase<Derived>& m, const std::vector<Index>& cols)
{
    MatrixXd out(m.rows(), static_cast<Index>(cols.size()));
    for (Index j = 0; j < out.cols(); ++j) out.col(j) = m.col(cols[static_cast<size_t>(j)]);
    return out;
}

template <typename Derived>
VectorXd select_entries(const Eigen::MatrixBase<Derived>& v, const std::vector<Index>& idx)
{
    VectorXd out(static_cast<Index>(idx.size()));
    for (Index j = 0; j < out.size(); ++j) out(j) = v(idx[static_cast<size_t>(j)]);
    return out;
}

/// Ratio of extreme singular values; +inf for a rank-deficient matrix.
double condition_number(const MatrixXd& m);

/// Rows of m whose mask entry is true.
MatrixXd select_rows(const MatrixXd& m, const std::vector<Index>& rows);
VectorXd select_rows(const VectorXd& v, const std::vector<Index>& rows);

}  // namespace mlsel
