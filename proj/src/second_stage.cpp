#include "mlsel/second_stage.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mlsel/error.hpp"

namespace mlsel {

std::string_view variant_name(ControlVariant v)
{
    switch (v) {
    case ControlVariant::None: return "none";
    case ControlVariant::ParametricOrdered: return "parametric-ordered";
    case ControlVariant::SieveOrdered: return "sieve-ordered";
    case ControlVariant::MlogitIv: return "mlogit-iv";
    case ControlVariant::SieveProbs: return "sieve-probs";
    case ControlVariant::ExchL: return "exch-L";
    }
    return "?";
}

ControlVariant parse_variant(std::string_view name)
{
    for (auto v : {ControlVariant::None, ControlVariant::ParametricOrdered,
                   ControlVariant::SieveOrdered, ControlVariant::MlogitIv,
                   ControlVariant::SieveProbs, ControlVariant::ExchL})
        if (variant_name(v) == name) return v;
    if (name == "ols") return ControlVariant::None;
    throw Error(ErrorCode::Config, "unknown control variant '" + std::string(name) + "'");
}

namespace {

template <typename Fit>
const Fit& require(const FirstStageFit& fs, ControlVariant v)
{
    const Fit* f = std::get_if<Fit>(&fs);
    if (!f)
        throw Error(ErrorCode::InvalidArgument, "control variant " +
                                                    std::string(variant_name(v)) +
                                                    " is incompatible with the first-stage fit");
    return *f;
}

}  // namespace

MatrixXd build_controls(const ControlSpec& spec, const FirstStageFit& fs, const MatrixXd& design,
                        int k)
{
    const Index n = design.rows();
    switch (spec.variant) {
    case ControlVariant::None:
        return MatrixXd(n, 0);

    case ControlVariant::ParametricOrdered: {
        const auto& f = require<OrderedFit>(fs, spec.variant);
        const int K = f.K();
        if (k < 1 || k > K) throw Error(ErrorCode::InvalidArgument, "category out of range");
        const double lo = f.thresholds(k - 1);
        const double hi = k == K ? std::numeric_limits<double>::infinity() : f.thresholds(k);
        MatrixXd c(n, 1);
        for (Index i = 0; i < n; ++i)
            c(i, 0) = truncated_correction(f.index(design.row(i).transpose()), lo, hi);
        return c;
    }

    case ControlVariant::SieveOrdered: {
        const auto& f = require<ThresholdFit>(fs, spec.variant);
        const int K = f.K();
        if (k < 1 || k > K) throw Error(ErrorCode::InvalidArgument, "category out of range");
        const Index cols = k < K ? 2 : 1;
        MatrixXd c(n, cols);
        for (Index i = 0; i < n; ++i) {
            const VectorXd h = rearrange(f.thresholds_raw(design.row(i).transpose()));
            c(i, 0) = h(k - 1);
            if (cols == 2) c(i, 1) = h(k);
        }
        return c;
    }

    case ControlVariant::MlogitIv: {
        const auto& f = require<MnlFit>(fs, spec.variant);
        if (k < 1 || k > f.K()) throw Error(ErrorCode::InvalidArgument, "category out of range");
        MatrixXd c(n, 1);
        for (Index i = 0; i < n; ++i) c(i, 0) = inclusive_value(f, design.row(i).transpose(), k);
        return c;
    }

    case ControlVariant::SieveProbs: {
        const auto& f = require<MnlFit>(fs, spec.variant);
        if (k < 1 || k > f.K()) throw Error(ErrorCode::InvalidArgument, "category out of range");
        MatrixXd c(n, f.K());
        for (Index i = 0; i < n; ++i)
            c.row(i) = predict_probs(f, design.row(i).transpose()).tail(f.K()).transpose();
        return c;
    }

    case ControlVariant::ExchL: {
        const auto& f = require<MnlFit>(fs, spec.variant);
        if (k < 1 || k > f.K()) throw Error(ErrorCode::InvalidArgument, "category out of range");
        MatrixXd c(n, spec.L);
        for (Index i = 0; i < n; ++i)
            c.row(i) = elementary_symmetric(predict_probs(f, design.row(i).transpose()), k, spec.L)
                           .transpose();
        return c;
    }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown control variant");
}

VarianceEstimate robust_vcov(const MatrixXd& x, const MatrixXd& basis, const VectorXd& residuals)
{
    const Index n = x.rows();
    const Index dx = x.cols();
    MatrixXd xt = x;
    if (basis.cols() > 0) {
        Eigen::HouseholderQR<MatrixXd> qr(basis);
        xt -= basis * qr.solve(x);
    }
    const double inv_n = 1.0 / static_cast<double>(n);

    VarianceEstimate ve;
    ve.sigma.noalias() = xt.transpose() * xt * inv_n;
    const MatrixXd xe = xt.array().colwise() * residuals.array();
    ve.omega.noalias() = xe.transpose() * xe * inv_n;

    Eigen::LDLT<MatrixXd> ldlt(ve.sigma);
    const double scale = ve.sigma.diagonal().cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !(scale > 0.0) ||
        ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-14 * scale)
        throw Error(ErrorCode::RankDeficient, "residualized design matrix is singular");
    const MatrixXd sigma_inv = ldlt.solve(MatrixXd::Identity(dx, dx));

    ve.robust = sigma_inv * ve.omega * sigma_inv * inv_n;
    ve.robust = 0.5 * (ve.robust + ve.robust.transpose()).eval();

    const Index dof = n - dx - basis.cols();
    if (dof <= 0) throw Error(ErrorCode::RankDeficient, "no residual degrees of freedom");
    const double s2 = residuals.squaredNorm() / static_cast<double>(dof);
    ve.homoskedastic = s2 * sigma_inv * inv_n;
    return ve;
}

ControlBasis control_basis(const MatrixXd& controls, const ControlSpec& spec)
{
    const Index n = controls.rows();
    if (spec.variant == ControlVariant::None) {
        ControlBasis cb;
        cb.basis = MatrixXd::Ones(n, 1);
        return cb;
    }
    if (spec.enters_linearly()) {
        ControlBasis cb;
        cb.basis.resize(n, controls.cols() + 1);
        cb.basis.col(0).setOnes();
        cb.basis.rightCols(controls.cols()) = controls;
        return cb;
    }
    return expand_controls(controls, spec.sieve);
}

FitResult fit_outcome(const VectorXd& y, const MatrixXd& x, const MatrixXd& controls,
                      const ControlSpec& spec)
{
    const Index n = y.size();
    if (x.rows() != n || controls.rows() != n)
        throw Error(ErrorCode::InvalidArgument, "fit_outcome: row count mismatch");
    if (!y.allFinite()) throw Error(ErrorCode::NonFinite, "fit_outcome: non-finite outcome");
    if (!controls.allFinite()) throw Error(ErrorCode::NonFinite, "fit_outcome: non-finite control");

    const ControlBasis cb = control_basis(controls, spec);
    const auto keep = independent_columns(cb.basis);
    const MatrixXd basis = select_columns(cb.basis, keep);

    if (static_cast<Index>(independent_columns(x, basis).size()) < x.cols())
        throw Error(ErrorCode::RankDeficient, "outcome coefficients unidentified in sample");

    const Index dx = x.cols();
    MatrixXd w(n, dx + basis.cols());
    w.leftCols(dx) = x;
    w.rightCols(basis.cols()) = basis;
    if (n <= w.cols()) throw Error(ErrorCode::RankDeficient, "more regressors than observations");

    Eigen::ColPivHouseholderQR<MatrixXd> qr(w);
    const VectorXd theta = qr.solve(y);

    FitResult fr;
    fr.beta = theta.head(dx);
    fr.delta = theta.tail(basis.cols());
    fr.residuals = y - w * theta;
    fr.n = n;
    fr.kappa = basis.cols();
    fr.basis_cols = cb.basis.cols();
    fr.clamped = cb.clamped;
    fr.collapsed_knots = cb.collapsed;
    fr.condition_number = condition_number(w);
    size_t pos = 0;
    for (Index j = 0; j < cb.basis.cols(); ++j) {
        if (pos < keep.size() && keep[pos] == j) {
            ++pos;
            continue;
        }
        fr.dropped.push_back(dx + j);
    }

    const VarianceEstimate ve = robust_vcov(x, basis, fr.residuals);
    fr.vcov_robust = ve.robust;
    fr.vcov_homoskedastic = ve.homoskedastic;
    return fr;
}

}  // namespace mlsel
