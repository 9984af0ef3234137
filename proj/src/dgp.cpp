#include "mlsel/dgp.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "mlsel/error.hpp"
#include "mlsel/first_stage.hpp"
#include "mlsel/normal.hpp"

namespace mlsel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double gumbel(std::mt19937_64& eng)
{
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = 0.0;
    while (!(u > 0.0)) u = unif(eng);
    return -std::log(-std::log(u));
}

Dataset empty_dataset(Index n, int K, std::vector<std::string> names, std::vector<ColumnKind> kinds)
{
    Dataset ds;
    ds.X.resize(n, static_cast<Index>(names.size()));
    ds.names = std::move(names);
    ds.kinds = std::move(kinds);
    ds.d.resize(n);
    ds.y.setConstant(n, std::numeric_limits<double>::quiet_NaN());
    ds.K = K;
    return ds;
}

double f_dgp1(const double* c, double x, double z)
{
    return c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x + c[4] * z + c[5] * z * z +
           c[6] * x * z;
}

double f_dgp234(const double* c, double x, double z, double w)
{
    return c[0] + c[1] * x + c[2] * z + c[3] * w + c[4] * x * x + c[5] * z * z + c[6] * w * w +
           c[7] * x * z + c[8] * x * w + c[9] * z * w;
}

const Quadrature& rule(int points)
{
    static const Quadrature q24 = gauss_hermite(24);
    static const Quadrature q32 = gauss_hermite(32);
    static const Quadrature q40 = gauss_hermite(40);
    switch (points) {
    case 24: return q24;
    case 32: return q32;
    default: return q40;
    }
}

}  // namespace

std::string DgpId::name() const
{
    return (family == Family::Ordered ? "ordered" : "mnl") + std::to_string(number);
}

DgpId DgpId::parse(std::string_view s)
{
    DgpId id;
    std::string_view rest;
    if (s.starts_with("ordered")) {
        id.family = Family::Ordered;
        rest = s.substr(7);
    } else if (s.starts_with("mnl")) {
        id.family = Family::Multinomial;
        rest = s.substr(3);
    } else {
        throw Error(ErrorCode::Config, "unknown DGP '" + std::string(s) + "'");
    }
    const int max = id.family == Family::Ordered ? 3 : 4;
    if (rest.size() != 1 || rest[0] < '1' || rest[0] - '0' > max)
        throw Error(ErrorCode::Config, "unknown DGP '" + std::string(s) + "'");
    id.number = rest[0] - '0';
    return id;
}

std::mt19937_64 make_engine(std::uint64_t seed)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32)};
    return std::mt19937_64(seq);
}

SimDataset generate_ordered(int dgp, Index n, std::uint64_t seed, double delta)
{
    if (dgp < 1 || dgp > 3) throw Error(ErrorCode::Config, "unknown ordered DGP");
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "sample size must be positive");

    SimDataset sd;
    sd.dgp = DgpId{Family::Ordered, dgp};
    sd.seed = seed;
    sd.delta = delta;
    const int K = sd.dgp.K();

    VectorXd rho(K);
    double sigma = 1.0;
    if (dgp == 3) {
        sd.thresholds = (VectorXd(3) << -1.0, 0.5, 1.5).finished();
        rho << 0.3, 0.5, 0.7;
        sd.intercept = VectorXd::Constant(3, 0.5);
        for (int k = 1; k <= 3; ++k)
            sd.beta.push_back((VectorXd(3) << 0.5, 0.3, 0.8).finished().array() + 0.1 * k);
        sd.data = empty_dataset(n, K, {"X", "Z", "W"}, {ColumnKind::Continuous,
                                                       ColumnKind::Continuous,
                                                       ColumnKind::Continuous});
    } else {
        sd.thresholds = (VectorXd(2) << -1.5, 0.5).finished();
        rho.setConstant(0.75);
        sigma = dgp == 1 ? 2.0 : 1.0;
        sd.intercept = (VectorXd(2) << 0.5, 0.6).finished();
        sd.beta = {(VectorXd(2) << 0.5, 0.25).finished(), (VectorXd(2) << 0.7, 0.5).finished()};
        sd.data = empty_dataset(n, K, {"X", "Z"},
                                {ColumnKind::Continuous,
                                 dgp == 2 ? ColumnKind::Categorical : ColumnKind::Continuous});
    }
    sd.sigma_rho = sigma * rho;

    auto eng = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    sd.index.resize(n);
    auto& ds = sd.data;
    for (Index i = 0; i < n; ++i) {
        const double x = normal(eng);
        double z = normal(eng);
        double h = 0.0;
        if (dgp == 1) {
            h = 0.5 * x - 0.5 * x * x + 0.2 * x * x * x + 0.5 * x * z + z - 0.5 * z * z;
        } else if (dgp == 2) {
            z = z > 0.0 ? 1.0 : 0.0;
            h = -0.2 * x - 0.5 * x * x + 0.3 * x * x * x + 0.1 * x * z + 0.5 * z -
                0.3 * x * x * z + 0.2 * x * x * x * z;
        } else {
            const double w = normal(eng);
            ds.X(i, 2) = w;
            h = 0.5 * x + 0.3 * z + 0.8 * w + delta * (-0.5 * x * x + 0.2 * z * z - 0.4 * x * z);
        }
        ds.X(i, 0) = x;
        ds.X(i, 1) = z;
        sd.index(i) = h;

        const double u = normal(eng);
        int d = 0;
        while (d < K && sd.thresholds(d) <= h + u) ++d;
        ds.d(i) = d;
        VectorXd e(K);
        for (int k = 0; k < K; ++k) e(k) = normal(eng);
        if (d >= 1) {
            const double r = rho(d - 1);
            const double v = sigma * (r * u + std::sqrt(1.0 - r * r) * e(d - 1));
            ds.y(i) = sd.intercept(d - 1) + ds.X.row(i).dot(sd.beta[static_cast<size_t>(d - 1)]) + v;
        }
    }
    return sd;
}

VectorXd probit_probs(int dgp, const VectorXd& f)
{
    const Index J = f.size();
    VectorXd p = VectorXd::Zero(J);
    if (dgp == 3) {
        const double s = std::sqrt(1.0 - mnl_constants::equicorrelation);
        const auto& q = rule(40);
        for (Index k = 0; k < J; ++k)
            for (Index a = 0; a < q.nodes.size(); ++a) {
                double prod = q.weights(a);
                for (Index j = 0; j < J; ++j)
                    if (j != k) prod *= normal_cdf(q.nodes(a) + (f(k) - f(j)) / s);
                p(k) += prod;
            }
    } else if (dgp == 4) {
        const auto& outer = rule(24);
        const auto& inner = rule(32);
        const double* lam = mnl_constants::loadings;
        for (Index b = 0; b < outer.nodes.size(); ++b) {
            const double F = outer.nodes(b);
            for (Index k = 0; k < J; ++k)
                for (Index a = 0; a < inner.nodes.size(); ++a) {
                    double prod = outer.weights(b) * inner.weights(a);
                    for (Index j = 0; j < J; ++j)
                        if (j != k)
                            prod *= normal_cdf(inner.nodes(a) + f(k) - f(j) + (lam[k] - lam[j]) * F);
                    p(k) += prod;
                }
        }
    } else {
        throw Error(ErrorCode::InvalidArgument, "probit_probs: only DGP3 and DGP4 use quadrature");
    }
    return p / p.sum();
}

VectorXd draw_mnl_shocks(int dgp, int K, std::mt19937_64& eng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd eps(K + 1);
    if (dgp <= 2) {
        for (int j = 0; j <= K; ++j) eps(j) = gumbel(eng);
    } else if (dgp == 3) {
        const double rho = mnl_constants::equicorrelation;
        const double c = normal(eng);
        for (int j = 0; j <= K; ++j)
            eps(j) = std::sqrt(rho) * c + std::sqrt(1.0 - rho) * normal(eng);
    } else {
        const double F = normal(eng);
        for (int j = 0; j <= K; ++j) eps(j) = mnl_constants::loadings[j] * F + normal(eng);
    }
    return eps;
}

SimDataset generate_multinomial(int dgp, Index n, std::uint64_t seed, bool with_probs)
{
    if (dgp < 1 || dgp > 4) throw Error(ErrorCode::Config, "unknown multinomial DGP");
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "sample size must be positive");

    SimDataset sd;
    sd.dgp = DgpId{Family::Multinomial, dgp};
    sd.seed = seed;
    const int K = sd.dgp.K();
    if (dgp == 1) {
        sd.intercept = (VectorXd(2) << 0.4, 0.6).finished();
        sd.beta = {(VectorXd(2) << 0.5, 0.7).finished(), (VectorXd(2) << 0.8, 0.5).finished()};
        sd.data = empty_dataset(n, K, {"X", "Z"},
                                {ColumnKind::Continuous, ColumnKind::Continuous});
    } else {
        sd.intercept = (VectorXd(3) << 0.4, 0.6, 0.5).finished();
        sd.beta = {(VectorXd(3) << 0.5, 0.7, 0.3).finished(),
                   (VectorXd(3) << 0.8, 0.5, 0.4).finished(),
                   (VectorXd(3) << 0.3, 0.9, 0.6).finished()};
        sd.data = empty_dataset(n, K, {"X", "Z", "W"},
                                {ColumnKind::Continuous, ColumnKind::Continuous,
                                 ColumnKind::Continuous});
    }
    const double gamma = dgp == 3 ? 1.0 : dgp == 4 ? 2.0 : 0.0;

    auto eng = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto& ds = sd.data;
    sd.utility.resize(n, K + 1);
    VectorXd eps(K + 1);
    for (Index i = 0; i < n; ++i) {
        auto f = sd.utility.row(i);
        f(0) = 0.0;
        const double x = normal(eng);
        const double z = normal(eng);
        ds.X(i, 0) = x;
        ds.X(i, 1) = z;
        if (dgp == 1) {
            f(1) = f_dgp1(mnl_constants::f1_dgp1, x, z);
            f(2) = f_dgp1(mnl_constants::f2_dgp1, x, z);
        } else {
            const double w = normal(eng);
            ds.X(i, 2) = w;
            for (int k = 1; k <= 3; ++k)
                f(k) = f_dgp234(mnl_constants::f_dgp234[k - 1], x, z, w);
        }

        eps = draw_mnl_shocks(dgp, K, eng);
        const double extra = dgp <= 2 ? gumbel(eng) : mnl_constants::sigma_eta * normal(eng);

        int d = 0;
        for (int j = 1; j <= K; ++j)
            if (f(j) + eps(j) > f(d) + eps(d)) d = j;
        ds.d(i) = d;
        if (d >= 1) {
            double v = eps(d) + extra;
            if (dgp >= 3) {
                const double others = (eps.sum() - eps(d)) / K;
                v = eps(d) + gamma * eps(d) * (eps(d) - others) + extra;
            }
            ds.y(i) = sd.intercept(d - 1) + ds.X.row(i).dot(sd.beta[static_cast<size_t>(d - 1)]) + v;
        }
    }

    if (with_probs) {
        sd.probs.resize(n, K + 1);
        for (Index i = 0; i < n; ++i) {
            const VectorXd u = sd.utility.row(i).transpose();
            if (dgp <= 2) {
                sd.probs.row(i) = (u.array() - log_sum_exp(u)).exp().matrix().transpose();
            } else {
                sd.probs.row(i) = probit_probs(dgp, u).transpose();
            }
        }
    }
    return sd;
}

SimDataset generate(const DgpId& id, Index n, std::uint64_t seed, double delta, bool with_probs)
{
    return id.family == Family::Ordered ? generate_ordered(id.number, n, seed, delta)
                                        : generate_multinomial(id.number, n, seed, with_probs);
}

MatrixXd oracle_controls(const SimDataset& sd, int k)
{
    const int K = sd.data.K;
    if (k < 1 || k > K) throw Error(ErrorCode::InvalidArgument, "category out of range");
    const auto rows = sd.data.rows_in(k);
    const auto m = static_cast<Index>(rows.size());

    if (sd.dgp.family == Family::Ordered) {
        if (sd.index.size() != sd.data.n() || sd.thresholds.size() != K)
            throw Error(ErrorCode::InvalidArgument, "oracle controls need the true index");
        const double lo = sd.thresholds(k - 1);
        const double hi = k == K ? kInf : sd.thresholds(k);
        MatrixXd c(m, 1);
        for (Index i = 0; i < m; ++i)
            c(i, 0) = sd.sigma_rho(k - 1) *
                      truncated_correction(sd.index(rows[static_cast<size_t>(i)]), lo, hi);
        return c;
    }

    if (sd.dgp.number <= 2) {
        if (sd.utility.rows() != sd.data.n())
            throw Error(ErrorCode::InvalidArgument, "oracle controls need the true utilities");
        MatrixXd c(m, 1);
        for (Index i = 0; i < m; ++i) {
            const VectorXd u = sd.utility.row(rows[static_cast<size_t>(i)]).transpose();
            c(i, 0) = log_sum_exp(u) - u(k);
        }
        return c;
    }
    if (sd.probs.rows() != sd.data.n())
        throw Error(ErrorCode::InvalidArgument, "oracle controls need the true probabilities");
    MatrixXd c(m, K);
    for (Index i = 0; i < m; ++i) c.row(i) = sd.probs.row(rows[static_cast<size_t>(i)]).tail(K);
    return c;
}

}  // namespace mlsel
