#include "mlsel/first_stage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "mlsel/error.hpp"
#include "mlsel/normal.hpp"

namespace mlsel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSeparationBound = 50.0;

double pdf_or_zero(double x) { return std::isfinite(x) ? normal_pdf(x) : 0.0; }

void check_categories(const Eigen::VectorXi& d, int K, Index rows)
{
    if (K < 1) throw Error(ErrorCode::InvalidArgument, "need at least two categories (K >= 1)");
    if (d.size() != rows)
        throw Error(ErrorCode::InvalidArgument, "category vector and design row count differ");
    std::vector<Index> counts(static_cast<size_t>(K) + 1, 0);
    for (Index i = 0; i < d.size(); ++i) {
        if (d(i) < 0 || d(i) > K)
            throw Error(ErrorCode::DataInvalid, "category outside 0..K");
        ++counts[static_cast<size_t>(d(i))];
    }
    for (int k = 0; k <= K; ++k)
        if (counts[static_cast<size_t>(k)] == 0)
            throw Error(ErrorCode::DataInvalid,
                        "missing category " + std::to_string(k) + " in selection data");
}

std::vector<double> category_shares(const Eigen::VectorXi& d, int K)
{
    std::vector<double> s(static_cast<size_t>(K) + 1, 0.0);
    for (Index i = 0; i < d.size(); ++i) s[static_cast<size_t>(d(i))] += 1.0;
    for (auto& v : s) v /= static_cast<double>(d.size());
    return s;
}

bool is_intercept(const MatrixXd& design, Index j)
{
    return design.rows() > 0 && (design.col(j).array() == 1.0).all();
}

/// Keeps an intercept column (if any) plus a maximal independent set of the rest.
std::vector<Index> kept_with_intercept(const MatrixXd& design, Index& intercept_pos)
{
    intercept_pos = -1;
    Index icol = -1;
    for (Index j = 0; j < design.cols(); ++j)
        if (is_intercept(design, j)) {
            icol = j;
            break;
        }
    if (icol < 0) return independent_columns(design);

    std::vector<Index> others;
    for (Index j = 0; j < design.cols(); ++j)
        if (j != icol) others.push_back(j);
    const MatrixXd rest = select_columns(design, others);
    const MatrixXd ones = MatrixXd::Ones(design.rows(), 1);
    std::vector<Index> kept{icol};
    for (Index j : independent_columns(rest, ones)) kept.push_back(others[static_cast<size_t>(j)]);
    std::sort(kept.begin(), kept.end());
    intercept_pos = std::find(kept.begin(), kept.end(), icol) - kept.begin();
    return kept;
}

double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x)
{
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

VectorXd floor_and_normalize(VectorXd p)
{
    p = p.cwiseMax(kProbFloor);
    return p / p.sum();
}

VectorXd kept_row(const VectorXd& row, const std::vector<Index>& kept, Index design_cols)
{
    if (row.size() != design_cols)
        throw Error(ErrorCode::InvalidArgument, "design row dimension mismatch");
    return select_entries(row, kept);
}

/// x = qs * rs with qs'qs = n I; the fits run on qs so that coefficient size
/// reflects the fitted function rather than basis conditioning.
struct Orthonormal {
    MatrixXd qs;
    MatrixXd rs;

    explicit Orthonormal(const MatrixXd& x)
    {
        const Index n = x.rows();
        const Index p = x.cols();
        if (p == 0) {
            qs = MatrixXd(n, 0);
            rs = MatrixXd(0, 0);
            return;
        }
        Eigen::HouseholderQR<MatrixXd> qr(x);
        const double sn = std::sqrt(static_cast<double>(n));
        qs = qr.householderQ() * MatrixXd::Identity(n, p) * sn;
        rs = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
        rs /= sn;
    }
    [[nodiscard]] VectorXd to_internal(const VectorXd& theta) const { return rs * theta; }
    [[nodiscard]] VectorXd to_original(const VectorXd& gamma) const
    {
        return rs.triangularView<Eigen::Upper>().solve(gamma);
    }
};

/// Coefficients beyond the bound count as separation when the ascent did not
/// settle or when every observation is fitted to (numerically) 0 or 1.
/// Converged fits that are only saturated in part of the covariate space are kept.
bool separated(const OptResult& r, const MatrixXd& fitted_margin)
{
    if (r.argmax.size() == 0 || r.argmax.cwiseAbs().maxCoeff() <= kSeparationBound) return false;
    if (!r.converged) return true;
    const double sat = std::log(1.0 / kProbFloor);
    return (fitted_margin.array().abs() > sat).all();
}

std::string not_converged_message(const char* what, const OptResult& r)
{
    std::ostringstream os;
    os << what << " did not converge (iterations " << r.iterations << ", |grad| " << r.grad_norm
       << ")";
    return os.str();
}

}  // namespace

double truncated_correction(double index, double c_lo, double c_hi)
{
    if (!(c_lo < c_hi)) throw Error(ErrorCode::InvalidArgument, "truncation bounds not ordered");
    const double a = c_lo - index;
    const double b = c_hi - index;
    const double den = normal_interval(a, b);
    if (!(den > 1e-300)) throw Error(ErrorCode::EmptyCell, "empty truncation cell");
    return (pdf_or_zero(a) - pdf_or_zero(b)) / den;
}

VectorXd thresholds_from_params(const VectorXd& raw)
{
    VectorXd c(raw.size());
    if (raw.size() == 0) return c;
    c(0) = raw(0);
    for (Index k = 1; k < raw.size(); ++k) c(k) = c(k - 1) + std::exp(raw(k));
    return c;
}

Objective ordered_objective(const Eigen::VectorXi& d, const MatrixXd& design, int K)
{
    Objective obj;
    obj.value = [&d, &design, K](const VectorXd& theta, VectorXd* grad) -> double {
        const Index p = design.cols();
        const Index n = design.rows();
        const VectorXd c = thresholds_from_params(theta.tail(K));
        const VectorXd eta = design * theta.head(p);
        VectorXd v(n);
        VectorXd gc = VectorXd::Zero(K);
        double ll = 0.0;
        for (Index i = 0; i < n; ++i) {
            const int k = d(i);
            const double a = k == 0 ? -kInf : c(k - 1) - eta(i);
            const double b = k == K ? kInf : c(k) - eta(i);
            const double prob = normal_interval(a, b);
            if (!(prob > 0.0)) return -kInf;
            ll += std::log(prob);
            const double fa = pdf_or_zero(a);
            const double fb = pdf_or_zero(b);
            v(i) = (fa - fb) / prob;
            if (k > 0) gc(k - 1) -= fa / prob;
            if (k < K) gc(k) += fb / prob;
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        if (grad) {
            grad->resize(p + K);
            grad->head(p) = design.transpose() * v * inv_n;
            // Chain rule through c_k = c_1 + sum_{j<=k} exp(g_j).
            double tail = 0.0;
            for (Index k = K - 1; k >= 1; --k) {
                tail += gc(k);
                (*grad)(p + k) = std::exp(theta(p + k)) * tail * inv_n;
            }
            (*grad)(p) = gc.sum() * inv_n;
        }
        return ll * inv_n;
    };
    return obj;
}

double OrderedFit::index(const VectorXd& design_row) const
{
    return kept_row(design_row, kept, design_cols).dot(coef);
}

OrderedFit fit_ordered(const Eigen::VectorXi& d, const MatrixXd& design, int K,
                       const OptOptions& opts)
{
    check_categories(d, K, design.rows());
    OrderedFit fit;
    fit.design_cols = design.cols();
    fit.kept = independent_columns(design, MatrixXd::Ones(design.rows(), 1));
    MatrixXd x = select_columns(design, fit.kept);
    const Index p = x.cols();
    const VectorXd mean = x.colwise().mean().transpose();
    x.rowwise() -= mean.transpose();
    const Orthonormal on(x);

    const auto shares = category_shares(d, K);
    VectorXd init = VectorXd::Zero(p + K);
    double cum = 0.0;
    double prev = 0.0;
    for (int k = 0; k < K; ++k) {
        cum += shares[static_cast<size_t>(k)];
        const double ck = normal_quantile(cum);
        init(p + k) = k == 0 ? ck : std::log(ck - prev);
        prev = ck;
    }

    const Objective obj = ordered_objective(d, on.qs, K);
    fit.loglik_init = obj.value(init, nullptr);
    fit.opt = maximize(obj, init, opts);
    if (!fit.opt.converged)
        throw Error(ErrorCode::NotConverged, not_converged_message("ordered probit", fit.opt));
    fit.coef = on.to_original(fit.opt.argmax.head(p));
    fit.thresholds = thresholds_from_params(fit.opt.argmax.tail(K)).array() + mean.dot(fit.coef);
    fit.loglik = fit.opt.value;
    return fit;
}

Objective logit_objective(const VectorXd& y, const MatrixXd& design)
{
    Objective obj;
    obj.value = [&y, &design](const VectorXd& theta, VectorXd* grad) -> double {
        const VectorXd eta = design * theta;
        const double inv_n = 1.0 / static_cast<double>(design.rows());
        double ll = 0.0;
        VectorXd resid(eta.size());
        for (Index i = 0; i < eta.size(); ++i) {
            ll += y(i) * eta(i) - log1pexp(eta(i));
            resid(i) = y(i) - logistic(eta(i));
        }
        if (grad) *grad = design.transpose() * resid * inv_n;
        return ll * inv_n;
    };
    obj.hessian = [&design](const VectorXd& theta, MatrixXd& hess) {
        const VectorXd eta = design * theta;
        VectorXd w(eta.size());
        for (Index i = 0; i < eta.size(); ++i) {
            const double pr = logistic(eta(i));
            w(i) = pr * (1.0 - pr);
        }
        const MatrixXd xw = design.array().colwise() * w.array();
        hess.noalias() = -(design.transpose() * xw) / static_cast<double>(design.rows());
    };
    return obj;
}

VectorXd ThresholdFit::thresholds_raw(const VectorXd& design_row) const
{
    VectorXd h(K());
    for (int k = 0; k < K(); ++k) {
        const auto& kp = kept[static_cast<size_t>(k)];
        const double eta = kept_row(design_row, kp, design_cols).dot(coef[static_cast<size_t>(k)]);
        h(k) = logistic(std::min(eta, 36.0));
    }
    return h;
}

ThresholdFit fit_thresholds(const Eigen::VectorXi& d, const MatrixXd& design, int K,
                            const OptOptions& opts)
{
    check_categories(d, K, design.rows());
    ThresholdFit fit;
    fit.design_cols = design.cols();
    Index icpt = -1;
    const auto kept = kept_with_intercept(design, icpt);
    const Orthonormal on(select_columns(design, kept));

    const auto shares = category_shares(d, K);
    double cum = 0.0;
    for (int k = 1; k <= K; ++k) {
        cum += shares[static_cast<size_t>(k - 1)];
        VectorXd y(d.size());
        for (Index i = 0; i < d.size(); ++i) y(i) = d(i) <= k - 1 ? 1.0 : 0.0;
        VectorXd init = VectorXd::Zero(on.qs.cols());
        if (icpt >= 0) init(icpt) = std::log(cum / (1.0 - cum));
        const Objective obj = logit_objective(y, on.qs);
        OptResult r = maximize(obj, on.to_internal(init), opts);
        if (r.diverged || separated(r, on.qs * r.argmax))
            throw Error(ErrorCode::Separation,
                        "separation in threshold logit " + std::to_string(k) +
                            ": coefficients exceed bound");
        if (!r.converged)
            throw Error(ErrorCode::NotConverged, not_converged_message("threshold logit", r));
        fit.coef.push_back(on.to_original(r.argmax));
        fit.kept.push_back(kept);
        fit.opt.push_back(std::move(r));
    }
    return fit;
}

Objective mnl_objective(const Eigen::VectorXi& d, const MatrixXd& design, int K)
{
    // theta stacks alpha_1, ..., alpha_K (each design.cols() long).
    auto probs = [&design, K](const VectorXd& theta, MatrixXd& pr) {
        const Index p = design.cols();
        const Eigen::Map<const MatrixXd> a(theta.data(), p, K);
        const MatrixXd u = design * a;
        pr.resize(design.rows(), K + 1);
        for (Index i = 0; i < u.rows(); ++i) {
            const double m = std::max(0.0, u.row(i).maxCoeff());
            double s = std::exp(-m);
            pr(i, 0) = s;
            for (int k = 0; k < K; ++k) {
                pr(i, k + 1) = std::exp(u(i, k) - m);
                s += pr(i, k + 1);
            }
            pr.row(i) /= s;
        }
        return u;
    };

    Objective obj;
    obj.value = [&d, &design, K, probs](const VectorXd& theta, VectorXd* grad) -> double {
        MatrixXd pr;
        const MatrixXd u = probs(theta, pr);
        const Index n = design.rows();
        const double inv_n = 1.0 / static_cast<double>(n);
        double ll = 0.0;
        MatrixXd resid = -pr.rightCols(K);
        for (Index i = 0; i < n; ++i) {
            const double m = std::max(0.0, u.row(i).maxCoeff());
            const double lse = m + std::log(std::exp(-m) + (u.row(i).array() - m).exp().sum());
            const int k = d(i);
            ll += (k == 0 ? 0.0 : u(i, k - 1)) - lse;
            if (k > 0) resid(i, k - 1) += 1.0;
        }
        if (grad) {
            grad->resize(design.cols() * K);
            Eigen::Map<MatrixXd> g(grad->data(), design.cols(), K);
            g.noalias() = design.transpose() * resid * inv_n;
        }
        return ll * inv_n;
    };
    obj.hessian = [&design, K, probs](const VectorXd& theta, MatrixXd& hess) {
        MatrixXd pr;
        probs(theta, pr);
        const Index p = design.cols();
        const double inv_n = 1.0 / static_cast<double>(design.rows());
        hess.resize(p * K, p * K);
        for (int j = 0; j < K; ++j) {
            for (int l = j; l < K; ++l) {
                VectorXd w = pr.col(j + 1).array() * ((j == l ? 1.0 : 0.0) - pr.col(l + 1).array());
                const MatrixXd xw = design.array().colwise() * w.array();
                MatrixXd block = -(design.transpose() * xw) * inv_n;
                hess.block(j * p, l * p, p, p) = block;
                if (l != j) hess.block(l * p, j * p, p, p) = block.transpose();
            }
        }
    };
    return obj;
}

VectorXd MnlFit::utilities(const VectorXd& design_row) const
{
    const VectorXd x = kept_row(design_row, kept, design_cols);
    VectorXd u(K() + 1);
    u(0) = 0.0;
    u.tail(K()) = coef.transpose() * x;
    return u;
}

MnlFit fit_mnl(const Eigen::VectorXi& d, const MatrixXd& design, int K, const OptOptions& opts)
{
    check_categories(d, K, design.rows());
    MnlFit fit;
    fit.design_cols = design.cols();
    Index icpt = -1;
    fit.kept = kept_with_intercept(design, icpt);
    const Orthonormal on(select_columns(design, fit.kept));
    const Index p = on.qs.cols();

    const auto shares = category_shares(d, K);
    VectorXd init = VectorXd::Zero(p * K);
    for (int k = 1; k <= K; ++k) {
        VectorXd a = VectorXd::Zero(p);
        if (icpt >= 0) a(icpt) = std::log(shares[static_cast<size_t>(k)] / shares[0]);
        init.segment((k - 1) * p, p) = on.to_internal(a);
    }

    const Objective obj = mnl_objective(d, on.qs, K);
    fit.loglik_init = obj.value(init, nullptr);
    fit.opt = maximize(obj, init, opts);
    // Margin of the chosen alternative over the best rival.
    MatrixXd margin(d.size(), 1);
    {
        const Eigen::Map<const MatrixXd> g(fit.opt.argmax.data(), p, K);
        const MatrixXd u = on.qs * g;
        for (Index i = 0; i < d.size(); ++i) {
            VectorXd ui(K + 1);
            ui(0) = 0.0;
            ui.tail(K) = u.row(i).transpose();
            const double chosen = ui(d(i));
            ui(d(i)) = -kInf;
            margin(i, 0) = chosen - ui.maxCoeff();
        }
    }
    if (fit.opt.diverged || separated(fit.opt, margin))
        throw Error(ErrorCode::Separation, "separation in multinomial logit: coefficients exceed bound");
    if (!fit.opt.converged)
        throw Error(ErrorCode::NotConverged, not_converged_message("multinomial logit", fit.opt));
    fit.coef.resize(p, K);
    for (int k = 0; k < K; ++k) fit.coef.col(k) = on.to_original(fit.opt.argmax.segment(k * p, p));
    fit.loglik = fit.opt.value;
    return fit;
}

VectorXd rearrange(VectorXd h)
{
    std::sort(h.begin(), h.end());
    return h;
}

VectorXd predict_probs(const OrderedFit& fit, const VectorXd& design_row)
{
    const double eta = fit.index(design_row);
    const int K = fit.K();
    VectorXd p(K + 1);
    for (int k = 0; k <= K; ++k) {
        const double a = k == 0 ? -kInf : fit.thresholds(k - 1) - eta;
        const double b = k == K ? kInf : fit.thresholds(k) - eta;
        p(k) = normal_interval(a, b);
    }
    return floor_and_normalize(std::move(p));
}

VectorXd predict_probs(const ThresholdFit& fit, const VectorXd& design_row)
{
    const VectorXd h = rearrange(fit.thresholds_raw(design_row));
    const int K = fit.K();
    VectorXd p(K + 1);
    double prev = 0.0;
    for (int k = 0; k < K; ++k) {
        p(k) = h(k) - prev;
        prev = h(k);
    }
    p(K) = 1.0 - prev;
    return floor_and_normalize(std::move(p));
}

VectorXd predict_probs(const MnlFit& fit, const VectorXd& design_row)
{
    const VectorXd u = fit.utilities(design_row);
    const double m = u.maxCoeff();
    VectorXd p = (u.array() - m).exp();
    p /= p.sum();
    if (p.minCoeff() > 0.0) return p;
    return floor_and_normalize(std::move(p));
}

VectorXd predict_probs(const FirstStageFit& fit, const VectorXd& design_row)
{
    return std::visit([&](const auto& f) { return predict_probs(f, design_row); }, fit);
}

double log_sum_exp(const VectorXd& u)
{
    const double m = u.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((u.array() - m).exp().sum());
}

double inclusive_value(const MnlFit& fit, const VectorXd& design_row, int k)
{
    if (k < 0 || k > fit.K()) throw Error(ErrorCode::InvalidArgument, "category out of range");
    const VectorXd u = fit.utilities(design_row);
    return log_sum_exp(u) - u(k);
}

VectorXd elementary_symmetric(const VectorXd& p, int k, int L)
{
    const auto K = static_cast<int>(p.size()) - 1;
    if (k < 0 || k > K) throw Error(ErrorCode::InvalidArgument, "category out of range");
    if (L < 1 || L > K)
        throw Error(ErrorCode::InvalidArgument, "truncation order L must satisfy 1 <= L <= K");
    if (std::abs(p.sum() - 1.0) > 1e-9 || (p.array() < 0.0).any())
        throw Error(ErrorCode::InvalidArgument, "probabilities do not form a simplex");
    // Coefficients of prod_{j != k} (1 + p_j t), truncated at degree L.
    VectorXd e = VectorXd::Zero(L + 1);
    e(0) = 1.0;
    int seen = 0;
    for (int j = 0; j <= K; ++j) {
        if (j == k) continue;
        ++seen;
        for (int l = std::min(seen, L); l >= 1; --l) e(l) += p(j) * e(l - 1);
    }
    e(1) = 1.0 - p(k);
    return e.tail(L);
}

}  // namespace mlsel
