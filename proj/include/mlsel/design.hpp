#pragma once

#include "mlsel/dataset.hpp"
#include "mlsel/sieve_basis.hpp"

namespace mlsel {

/// First-stage sieve design Q(x): a spline block per continuous column, all
/// pairwise tensors among continuous columns, then the categorical columns
/// linearly (and, when spec.categorical_interactions is set, each categorical
/// times every marginal spline block). No explicit intercept; the spline
/// blocks already span the constant.
///
/// With linear_index the raw covariates are returned unchanged.
MatrixXd build_first_stage_design(const Dataset& ds, const SieveSpec& spec,
                                  bool linear_index = false);

/// [1, design].
MatrixXd with_intercept(const MatrixXd& design);

}  // namespace mlsel
