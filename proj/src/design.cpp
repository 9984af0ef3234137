#include "mlsel/design.hpp"

#include "mlsel/error.hpp"

namespace mlsel {

MatrixXd build_first_stage_design(const Dataset& ds, const SieveSpec& spec, bool linear_index)
{
    if (linear_index) return ds.X;

    const auto cont = ds.continuous_columns();
    if (cont.empty())
        throw Error(ErrorCode::InvalidArgument,
                    "sieve design needs at least one continuous covariate");
    const Index n = ds.n();

    std::vector<MatrixXd> marg, tmarg;
    const int j1 = spec.univariate_knots(n);
    const int jt = spec.tensor_knots(n, 2);
    for (Index c : cont) {
        const VectorXd col = ds.X.col(c);
        const std::span<const double> s(col.data(), static_cast<size_t>(n));
        marg.push_back(bspline_matrix(place_knots(s, j1, spec.order), col));
        if (cont.size() > 1) tmarg.push_back(bspline_matrix(place_knots(s, jt, spec.order), col));
    }

    std::vector<MatrixXd> blocks = marg;
    for (size_t a = 0; a < tmarg.size(); ++a)
        for (size_t b = a + 1; b < tmarg.size(); ++b) {
            const MatrixXd pair[2] = {tmarg[a], tmarg[b]};
            blocks.push_back(tensor_matrix(pair));
        }
    for (size_t j = 0; j < ds.kinds.size(); ++j) {
        if (ds.kinds[j] != ColumnKind::Categorical) continue;
        const VectorXd z = ds.X.col(static_cast<Index>(j));
        blocks.push_back(z);
        if (spec.categorical_interactions)
            for (const auto& m : marg) blocks.push_back(m.array().colwise() * z.array());
    }

    Index cols = 0;
    for (const auto& b : blocks) cols += b.cols();
    MatrixXd q(n, cols);
    Index at = 0;
    for (const auto& b : blocks) {
        q.middleCols(at, b.cols()) = b;
        at += b.cols();
    }
    return q;
}

MatrixXd with_intercept(const MatrixXd& design)
{
    MatrixXd out(design.rows(), design.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(design.cols()) = design;
    return out;
}

}  // namespace mlsel
