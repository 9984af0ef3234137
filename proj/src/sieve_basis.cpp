#include "mlsel/sieve_basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mlsel/error.hpp"

namespace mlsel {

std::vector<double> KnotVector::full() const
{
    std::vector<double> t;
    t.reserve(interior.size() + 2 * static_cast<size_t>(order));
    t.insert(t.end(), static_cast<size_t>(order), lo);
    t.insert(t.end(), interior.begin(), interior.end());
    t.insert(t.end(), static_cast<size_t>(order), hi);
    return t;
}

KnotVector make_knots(double lo, double hi, std::vector<double> interior, int order)
{
    if (order < 1) throw Error(ErrorCode::InvalidArgument, "spline order must be >= 1");
    if (!(hi > lo)) throw Error(ErrorCode::DegenerateSupport, "degenerate index support");
    double prev = lo;
    for (double k : interior) {
        if (!(k > prev) || !(k < hi))
            throw Error(ErrorCode::InvalidArgument,
                        "interior knots must be strictly increasing inside (lo, hi)");
        prev = k;
    }
    return KnotVector{order, lo, hi, std::move(interior), 0};
}

KnotVector place_knots(std::span<const double> samples, int n_interior, int order)
{
    if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "place_knots: empty sample");
    if (n_interior < 0 || order < 1)
        throw Error(ErrorCode::InvalidArgument, "place_knots: bad knot count or order");

    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front();
    const double hi = sorted.back();
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw Error(ErrorCode::NonFinite, "place_knots: non-finite sample");
    if (!(hi > lo)) throw Error(ErrorCode::DegenerateSupport, "degenerate index support");

    const double min_gap = 1e-12 * (hi - lo);
    const auto n = static_cast<double>(sorted.size());
    KnotVector kv{order, lo, hi, {}, 0};
    double prev = lo;
    for (int t = 1; t <= n_interior; ++t) {
        // Linear-interpolation quantile on the order statistics.
        const double pos = (n - 1.0) * t / (n_interior + 1.0);
        const auto i = static_cast<size_t>(std::floor(pos));
        const double frac = pos - static_cast<double>(i);
        double q = sorted[i];
        if (i + 1 < sorted.size()) q += frac * (sorted[i + 1] - sorted[i]);
        if (q - prev <= min_gap || hi - q <= min_gap) {
            ++kv.collapsed;
            continue;
        }
        kv.interior.push_back(q);
        prev = q;
    }
    return kv;
}

BasisRow bspline_row(const KnotVector& kv, double s, bool* clamped)
{
    const int r = kv.order;
    const auto t = kv.full();
    const Index dim = kv.dimension();

    bool was_clamped = false;
    if (s < kv.lo) {
        s = kv.lo;
        was_clamped = true;
    } else if (s > kv.hi) {
        s = kv.hi;
        was_clamped = true;
    }
    if (clamped) *clamped = was_clamped;

    // Span mu with t[mu] <= s < t[mu+1]; the right boundary uses the last span.
    const auto first = t.begin() + (r - 1);
    const auto last = t.begin() + static_cast<std::ptrdiff_t>(dim);
    auto it = std::upper_bound(first, last + 1, s);
    auto mu = static_cast<Index>(it - t.begin()) - 1;
    mu = std::clamp<Index>(mu, r - 1, dim - 1);

    std::vector<double> n(static_cast<size_t>(r), 0.0);
    std::vector<double> left(static_cast<size_t>(r), 0.0);
    std::vector<double> right(static_cast<size_t>(r), 0.0);
    n[0] = 1.0;
    for (int j = 1; j < r; ++j) {
        left[static_cast<size_t>(j)] = s - t[static_cast<size_t>(mu + 1 - j)];
        right[static_cast<size_t>(j)] = t[static_cast<size_t>(mu + j)] - s;
        double saved = 0.0;
        for (int i = 0; i < j; ++i) {
            const double denom =
                right[static_cast<size_t>(i + 1)] + left[static_cast<size_t>(j - i)];
            const double tmp = denom > 0.0 ? n[static_cast<size_t>(i)] / denom : 0.0;
            n[static_cast<size_t>(i)] = saved + right[static_cast<size_t>(i + 1)] * tmp;
            saved = left[static_cast<size_t>(j - i)] * tmp;
        }
        n[static_cast<size_t>(j)] = saved;
    }

    BasisRow row = BasisRow::Zero(dim);
    for (int i = 0; i < r; ++i) row(mu - r + 1 + i) = n[static_cast<size_t>(i)];
    return row;
}

MatrixXd bspline_matrix(const KnotVector& kv, const VectorXd& s, int* clamped)
{
    MatrixXd out(s.size(), kv.dimension());
    int count = 0;
    for (Index i = 0; i < s.size(); ++i) {
        bool c = false;
        out.row(i) = bspline_row(kv, s(i), &c).transpose();
        count += c ? 1 : 0;
    }
    if (clamped) *clamped = count;
    return out;
}

BasisRow tensor_row(std::span<const BasisRow> rows)
{
    if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "tensor_row: empty list");
    BasisRow acc = rows[0];
    for (size_t l = 1; l < rows.size(); ++l) {
        const auto& next = rows[l];
        BasisRow out(acc.size() * next.size());
        for (Index a = 0; a < acc.size(); ++a)
            out.segment(a * next.size(), next.size()) = acc(a) * next;
        acc = std::move(out);
    }
    return acc;
}

MatrixXd tensor_matrix(std::span<const MatrixXd> blocks)
{
    if (blocks.empty()) throw Error(ErrorCode::InvalidArgument, "tensor_matrix: empty list");
    MatrixXd acc = blocks[0];
    for (size_t l = 1; l < blocks.size(); ++l) {
        const auto& next = blocks[l];
        if (next.rows() != acc.rows())
            throw Error(ErrorCode::InvalidArgument, "tensor_matrix: row mismatch");
        MatrixXd out(acc.rows(), acc.cols() * next.cols());
        for (Index a = 0; a < acc.cols(); ++a)
            out.middleCols(a * next.cols(), next.cols()) =
                next.array().colwise() * acc.col(a).array();
        acc = std::move(out);
    }
    return acc;
}

BasisRow tensor_basis_row(const TensorSpec& spec, std::span<const double> s)
{
    if (spec.margins.empty() || spec.margins.size() != s.size())
        throw Error(ErrorCode::InvalidArgument, "tensor_basis_row: dimension mismatch");
    std::vector<BasisRow> rows;
    rows.reserve(s.size());
    for (size_t l = 0; l < s.size(); ++l) rows.push_back(bspline_row(spec.margins[l], s[l]));
    return tensor_row(rows);
}

int default_interior_knots(Index n, int dims)
{
    const double nn = static_cast<double>(std::max<Index>(n, 1));
    if (dims <= 1) return std::max(2, static_cast<int>(std::ceil(std::pow(nn, 0.2))));
    return std::max(1, static_cast<int>(std::ceil(std::pow(nn, 0.3 / dims))));
}

namespace {

MatrixXd column_basis(const VectorXd& col, int n_interior, int order, ControlBasis& diag)
{
    const KnotVector kv =
        place_knots(std::span<const double>(col.data(), static_cast<size_t>(col.size())),
                    n_interior, order);
    diag.collapsed += kv.collapsed;
    int clamped = 0;
    MatrixXd b = bspline_matrix(kv, col, &clamped);
    diag.clamped += clamped;
    return b;
}

}  // namespace

ControlBasis expand_controls(const MatrixXd& controls, const SieveSpec& spec)
{
    ControlBasis out;
    const Index n = controls.rows();
    const auto L = static_cast<int>(controls.cols());
    if (L == 0) {
        out.basis = MatrixXd(n, 0);
        return out;
    }

    std::vector<MatrixXd> blocks;
    const int j1 = spec.univariate_knots(n);
    for (int l = 0; l < L; ++l)
        blocks.push_back(column_basis(controls.col(l), j1, spec.order, out));

    if (L >= 2) {
        const bool full = (L == 2) || spec.full_tensor;
        const int jt = spec.tensor_knots(n, full ? L : 2);
        std::vector<MatrixXd> margins;
        for (int l = 0; l < L; ++l)
            margins.push_back(column_basis(controls.col(l), jt, spec.order, out));
        if (full) {
            blocks.push_back(tensor_matrix(margins));
        } else {
            for (int a = 0; a < L; ++a)
                for (int b = a + 1; b < L; ++b) {
                    const MatrixXd pair[2] = {margins[static_cast<size_t>(a)],
                                              margins[static_cast<size_t>(b)]};
                    blocks.push_back(tensor_matrix(pair));
                }
        }
    }

    Index cols = 0;
    for (const auto& b : blocks) cols += b.cols();
    out.basis.resize(n, cols);
    Index at = 0;
    for (const auto& b : blocks) {
        out.basis.middleCols(at, b.cols()) = b;
        at += b.cols();
    }
    return out;
}

}  // namespace mlsel
