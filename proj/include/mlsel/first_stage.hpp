#pragma once

#include <variant>
#include <vector>

#include "mlsel/linalg.hpp"
#include "mlsel/optimizer.hpp"

namespace mlsel {

/// Floor applied to fitted probabilities before logs, divisions and renormalization.
inline constexpr double kProbFloor = 1e-6;

/// Ordered probit D = k iff c_k <= q(x)'alpha + e < c_{k+1}, e ~ N(0, 1).
struct OrderedFit {
    VectorXd coef;        // on the kept design columns
    VectorXd thresholds;  // c_1 < ... < c_K
    std::vector<Index> kept;
    Index design_cols = 0;
    double loglik = 0.0;  // average
    double loglik_init = 0.0;
    OptResult opt;

    [[nodiscard]] int K() const noexcept { return static_cast<int>(thresholds.size()); }
    [[nodiscard]] double index(const VectorXd& design_row) const;
};

/// Cumulative logits h_k(x) = Lambda(q(x)'alpha_k) = P[D <= k-1 | x], k = 1..K.
struct ThresholdFit {
    std::vector<VectorXd> coef;
    std::vector<std::vector<Index>> kept;
    Index design_cols = 0;
    std::vector<OptResult> opt;

    [[nodiscard]] int K() const noexcept { return static_cast<int>(coef.size()); }
    /// Raw (unrearranged) threshold probabilities h_1..h_K.
    [[nodiscard]] VectorXd thresholds_raw(const VectorXd& design_row) const;
};

/// Multinomial logit with baseline alternative 0 normalized to zero utility.
struct MnlFit {
    MatrixXd coef;  // kept.size() x K, column k-1 holds alpha_k
    std::vector<Index> kept;
    Index design_cols = 0;
    double loglik = 0.0;
    double loglik_init = 0.0;
    OptResult opt;

    [[nodiscard]] int K() const noexcept { return static_cast<int>(coef.cols()); }
    /// Utilities (0, u_1, ..., u_K).
    [[nodiscard]] VectorXd utilities(const VectorXd& design_row) const;
};

using FirstStageFit = std::variant<OrderedFit, ThresholdFit, MnlFit>;

/// Generalized inverse Mills ratio: E[e | lo - index <= e < hi - index] for
/// standard normal e. Either bound may be infinite.
double truncated_correction(double index, double c_lo, double c_hi);

/// Ordered probit MLE. The design must not carry an intercept; columns in the
/// span of a constant are dropped since the thresholds absorb it.
OrderedFit fit_ordered(const Eigen::VectorXi& d, const MatrixXd& design, int K,
                       const OptOptions& opts = {});

/// K independent logistic MLEs on 1[D <= k-1]. Design includes an intercept.
ThresholdFit fit_thresholds(const Eigen::VectorXi& d, const MatrixXd& design, int K,
                            const OptOptions& opts = {});

/// Multinomial logit MLE. Design includes an intercept.
MnlFit fit_mnl(const Eigen::VectorXi& d, const MatrixXd& design, int K,
               const OptOptions& opts = {});

/// Ascending copy.
VectorXd rearrange(VectorXd h);

/// Choice probabilities (p_0, ..., p_K), floored at kProbFloor and renormalized.
VectorXd predict_probs(const FirstStageFit& fit, const VectorXd& design_row);
VectorXd predict_probs(const OrderedFit& fit, const VectorXd& design_row);
VectorXd predict_probs(const ThresholdFit& fit, const VectorXd& design_row);
VectorXd predict_probs(const MnlFit& fit, const VectorXd& design_row);

/// nu_k = log sum_j exp(u_j) - u_k.
double inclusive_value(const MnlFit& fit, const VectorXd& design_row, int k);

/// Overflow-safe log(sum exp(u)).
double log_sum_exp(const VectorXd& u);

/// First L elementary symmetric polynomials of {p_j : j != k}.
VectorXd elementary_symmetric(const VectorXd& p, int k, int L);

/// Average log-likelihood objectives, exposed for gradient verification.
Objective ordered_objective(const Eigen::VectorXi& d, const MatrixXd& design, int K);
Objective logit_objective(const VectorXd& y, const MatrixXd& design);
Objective mnl_objective(const Eigen::VectorXi& d, const MatrixXd& design, int K);

/// Maps unconstrained (c_1, log-gaps) to increasing thresholds.
VectorXd thresholds_from_params(const VectorXd& raw);

}  // namespace mlsel
