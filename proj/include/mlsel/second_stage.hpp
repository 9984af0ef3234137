#pragma once

#include <string_view>
#include <vector>

#include "mlsel/first_stage.hpp"
#include "mlsel/sieve_basis.hpp"

namespace mlsel {

enum class ControlVariant {
    None,              // plain OLS with intercept
    ParametricOrdered, // generalized inverse Mills ratio from an OrderedFit
    SieveOrdered,      // (h_k, h_{k+1}) from a ThresholdFit
    MlogitIv,          // inclusive value nu_k from an MnlFit
    SieveProbs,        // (p_1, ..., p_K) from an MnlFit
    ExchL,             // (e_1, ..., e_L) from an MnlFit
};

std::string_view variant_name(ControlVariant v);
ControlVariant parse_variant(std::string_view name);

struct ControlSpec {
    ControlVariant variant = ControlVariant::None;
    int L = 2;  // ExchL truncation order
    SieveSpec sieve;
    /// Enter the raw controls linearly next to an intercept instead of through
    /// the spline expansion. Always on for None and ParametricOrdered.
    bool linear = false;

    [[nodiscard]] bool enters_linearly() const noexcept
    {
        return linear || variant == ControlVariant::None ||
               variant == ControlVariant::ParametricOrdered;
    }
};

/// Raw control indices for the rows of `design` (first-stage design rows of
/// observations with D = k). k ranges over 1..K.
MatrixXd build_controls(const ControlSpec& spec, const FirstStageFit& fs, const MatrixXd& design,
                        int k);

struct VarianceEstimate {
    MatrixXd sigma;  // (1/n) sum x~ x~'
    MatrixXd omega;  // (1/n) sum x~ x~' e^2
    MatrixXd robust;       // sigma^-1 omega sigma^-1 / n
    MatrixXd homoskedastic;  // s^2 sigma^-1 / n, s^2 with n - d_x - kappa dof
};

/// Sandwich and homoskedastic covariance of the x-block coefficients of
/// y = x b + basis d + e. `basis` must already be of full column rank.
VarianceEstimate robust_vcov(const MatrixXd& x, const MatrixXd& basis, const VectorXd& residuals);

struct FitResult {
    VectorXd beta;
    VectorXd delta;
    MatrixXd vcov_robust;
    MatrixXd vcov_homoskedastic;
    VectorXd residuals;
    Index n = 0;
    Index kappa = 0;  // retained basis columns
    double condition_number = 1.0;
    /// Indices into the augmented design [x, basis] dropped as collinear.
    std::vector<Index> dropped;
    Index basis_cols = 0;
    int clamped = 0;
    int collapsed_knots = 0;

    [[nodiscard]] VectorXd se_robust() const { return vcov_robust.diagonal().cwiseSqrt(); }
    [[nodiscard]] VectorXd se_homoskedastic() const
    {
        return vcov_homoskedastic.diagonal().cwiseSqrt();
    }
};

/// Augmented least squares of y on [x, B(controls)] for one category.
FitResult fit_outcome(const VectorXd& y, const MatrixXd& x, const MatrixXd& controls,
                      const ControlSpec& spec);

/// Second-stage basis for the given controls (intercept-first when linear).
ControlBasis control_basis(const MatrixXd& controls, const ControlSpec& spec);

}  // namespace mlsel
