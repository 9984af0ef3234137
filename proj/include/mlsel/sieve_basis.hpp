#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mlsel/linalg.hpp"

namespace mlsel {

/// Clamped knot sequence of a univariate B-spline basis of order `order`
/// (degree order-1). Interior knots are strictly increasing and lie in (lo, hi).
struct KnotVector {
    int order = 4;
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> interior;
    /// Quantile knots dropped because they coincided with a neighbour.
    int collapsed = 0;

    [[nodiscard]] Index dimension() const noexcept
    {
        return static_cast<Index>(interior.size()) + order;
    }
    /// lo repeated `order` times, the interior knots, hi repeated `order` times.
    [[nodiscard]] std::vector<double> full() const;
};

using BasisRow = VectorXd;

/// Validating constructor for hand-specified knots.
KnotVector make_knots(double lo, double hi, std::vector<double> interior, int order);

/// Boundary at the sample range, interior knots at the equally spaced sample
/// quantiles t/(n_interior+1), ties collapsed.
KnotVector place_knots(std::span<const double> samples, int n_interior, int order);

/// Evaluates every basis function at s by the Cox-de Boor triangle. Points
/// outside [lo, hi] are clamped to the boundary; `clamped` reports it.
BasisRow bspline_row(const KnotVector& kv, double s, bool* clamped = nullptr);

/// Row-wise bspline_row over a sample; counts clamped points.
MatrixXd bspline_matrix(const KnotVector& kv, const VectorXd& s, int* clamped = nullptr);

/// Outer product of the rows, flattened with the first dimension varying slowest.
BasisRow tensor_row(std::span<const BasisRow> rows);

/// Row-wise tensor product of basis blocks evaluated on a common sample.
MatrixXd tensor_matrix(std::span<const MatrixXd> blocks);

struct TensorSpec {
    std::vector<KnotVector> margins;

    [[nodiscard]] Index dimension() const noexcept
    {
        Index d = 1;
        for (const auto& m : margins) d *= m.dimension();
        return d;
    }
};

BasisRow tensor_basis_row(const TensorSpec& spec, std::span<const double> s);

/// Interior-knot growth: max(2, ceil(n^0.2)) for univariate blocks and
/// ceil(n^(0.3/L)) per dimension of an L-variate tensor block.
int default_interior_knots(Index n, int dims);

struct SieveSpec {
    int order = 4;
    std::optional<int> n_interior;
    std::optional<int> n_interior_tensor;
    /// For three or more indices use the full tensor instead of pairwise tensors.
    bool full_tensor = false;
    /// First-stage designs only: interact categorical columns with the spline blocks.
    bool categorical_interactions = false;

    [[nodiscard]] int univariate_knots(Index n) const
    {
        return n_interior ? *n_interior : default_interior_knots(n, 1);
    }
    [[nodiscard]] int tensor_knots(Index n, int dims) const
    {
        return n_interior_tensor ? *n_interior_tensor : default_interior_knots(n, dims);
    }
};

struct ControlBasis {
    MatrixXd basis;
    int clamped = 0;
    int collapsed = 0;
};

/// Expands raw control indices into a spline basis. One index: univariate
/// block. Two: both marginal blocks plus their full tensor. Three or more:
/// marginal blocks plus all pairwise tensors (full tensor when spec asks).
/// Knots are placed on the supplied sample.
ControlBasis expand_controls(const MatrixXd& controls, const SieveSpec& spec);

}  // namespace mlsel
