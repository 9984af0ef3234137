#include <doctest.h>

#include <algorithm>
#include <bit>
#include <random>

#include "mlsel/design.hpp"
#include "mlsel/dgp.hpp"
#include "mlsel/error.hpp"
#include "mlsel/first_stage.hpp"
#include "mlsel/normal.hpp"

using namespace mlsel;

namespace {

struct Sample {
    Eigen::VectorXi d;
    MatrixXd design;  // with intercept
};

Sample mnl_sample(Index n, int K, std::mt19937_64& eng)
{
    std::normal_distribution<double> z;
    std::extreme_value_distribution<double> gumbel;
    MatrixXd a(3, K + 1);
    a.setZero();
    for (int k = 1; k <= K; ++k)
        for (int j = 0; j < 3; ++j) a(j, k) = 0.6 * z(eng);
    Sample s;
    s.d.resize(n);
    s.design.resize(n, 3);
    for (Index i = 0; i < n; ++i) {
        s.design(i, 0) = 1.0;
        s.design(i, 1) = z(eng);
        s.design(i, 2) = z(eng);
        Eigen::RowVectorXd u = s.design.row(i) * a;
        for (int k = 0; k <= K; ++k) u(k) += gumbel(eng);
        Index best = 0;
        u.maxCoeff(&best);
        s.d(i) = static_cast<int>(best);
    }
    return s;
}

VectorXd random_theta(Index p, std::mt19937_64& eng, double scale)
{
    std::normal_distribution<double> z;
    VectorXd t(p);
    for (Index j = 0; j < p; ++j) t(j) = scale * z(eng);
    return t;
}

double hessian_error(const Objective& f, const VectorXd& theta)
{
    MatrixXd h;
    f.hessian(theta, h);
    MatrixXd fd(theta.size(), theta.size());
    VectorXd gp(theta.size()), gm(theta.size());
    for (Index j = 0; j < theta.size(); ++j) {
        VectorXd x = theta;
        const double step = 1e-5 * std::max(1.0, std::abs(theta(j)));
        x(j) += step;
        f.value(x, &gp);
        x(j) -= 2.0 * step;
        f.value(x, &gm);
        fd.col(j) = (gp - gm) / (2.0 * step);
    }
    return (h - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff());
}

std::vector<double> subset_esp(const std::vector<double>& q, int L)
{
    std::vector<double> e(static_cast<size_t>(L), 0.0);
    const auto m = q.size();
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
        const int size = std::popcount(mask);
        if (size > L) continue;
        double prod = 1.0;
        for (size_t j = 0; j < m; ++j)
            if (mask & (1u << j)) prod *= q[j];
        e[static_cast<size_t>(size - 1)] += prod;
    }
    return e;
}

}  // namespace

TEST_SUITE("first-stage") {

TEST_CASE("pure-threshold ordered probit inverts the empirical CDF")
{
    Eigen::VectorXi d(1000);
    d.head(300).setConstant(0);
    d.segment(300, 400).setConstant(1);
    d.tail(300).setConstant(2);
    const MatrixXd design = MatrixXd::Zero(1000, 1);
    const OrderedFit f = fit_ordered(d, design, 2);
    CHECK(f.kept.empty());
    CHECK(f.thresholds(0) == doctest::Approx(normal_quantile(0.3)).epsilon(1e-8));
    CHECK(f.thresholds(1) == doctest::Approx(normal_quantile(0.7)).epsilon(1e-8));
    CHECK(f.thresholds(0) == doctest::Approx(-0.5244).epsilon(1e-4));
}

TEST_CASE("ordered probit on the simulated design")
{
    const SimDataset sd = generate_ordered(1, 2000, 17);
    const Dataset& ds = sd.data;
    const OrderedFit f = fit_ordered(ds.d, ds.X, ds.K);
    CHECK(f.opt.converged);
    CHECK(f.loglik >= f.loglik_init);
    for (int k = 1; k < f.K(); ++k) CHECK(f.thresholds(k) > f.thresholds(k - 1));

    double worst = 0.0;
    for (Index i = 0; i < 200; ++i) {
        const VectorXd row = ds.X.row(i).transpose();
        const VectorXd p = predict_probs(f, row);
        const double h = f.index(row);
        for (int k = 0; k <= f.K(); ++k) {
            const double lo = k == 0 ? -INFINITY : f.thresholds(k - 1) - h;
            const double hi = k == f.K() ? INFINITY : f.thresholds(k) - h;
            worst = std::max(worst, std::abs(p(k) - normal_interval(lo, hi)));
        }
        CHECK(std::abs(p.sum() - 1.0) < 1e-12);
        CHECK(p.minCoeff() > 0.0);
    }
    CHECK(worst < 1e-14);

    Eigen::VectorXi one = Eigen::VectorXi::Zero(50);
    CHECK_THROWS_AS(fit_ordered(one, MatrixXd::Zero(50, 1), 2), Error);
}

TEST_CASE("truncated correction closed cases")
{
    CHECK(truncated_correction(0.0, -1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(truncated_correction(0.0, 0.0, INFINITY) == doctest::Approx(0.7978845608).epsilon(1e-9));
    CHECK(truncated_correction(0.0, -INFINITY, 0.0) == doctest::Approx(-0.7978845608).epsilon(1e-9));
    try {
        truncated_correction(0.0, 40.0, INFINITY);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyCell);
        CHECK(std::string(e.what()) == "empty truncation cell");
    }
}

TEST_CASE("threshold logits")
{
    Eigen::VectorXi d(1000);
    d.head(300).setConstant(0);
    d.segment(300, 300).setConstant(1);
    d.tail(400).setConstant(2);
    const MatrixXd ones = MatrixXd::Ones(1000, 1);
    const ThresholdFit f = fit_thresholds(d, ones, 2);
    const VectorXd h = f.thresholds_raw(VectorXd::Ones(1));
    CHECK(std::abs(h(0) - 0.3) < 1e-8);
    CHECK(std::abs(h(1) - 0.6) < 1e-8);
    const VectorXd p = predict_probs(f, VectorXd::Ones(1));
    CHECK(std::abs(p(0) - 0.3) < 1e-8);
    CHECK(std::abs(p(1) - 0.3) < 1e-8);
    CHECK(std::abs(p(2) - 0.4) < 1e-8);
}

TEST_CASE("threshold crossings are rare on a monotone design")
{
    const SimDataset sd = generate_ordered(1, 5000, 23);
    SieveSpec spec;
    spec.n_interior_tensor = 0;
    const MatrixXd design = with_intercept(build_first_stage_design(sd.data, spec));
    const ThresholdFit f = fit_thresholds(sd.data.d, design, 2);
    Index crossed = 0;
    for (Index i = 0; i < design.rows(); ++i) {
        const VectorXd h = f.thresholds_raw(design.row(i).transpose());
        CHECK(h.minCoeff() > 0.0);
        CHECK(h.maxCoeff() < 1.0);
        if (h(0) > h(1)) ++crossed;
        const VectorXd r = rearrange(h);
        CHECK(r(0) <= r(1));
    }
    CHECK(static_cast<double>(crossed) < 0.01 * static_cast<double>(design.rows()));
}

TEST_CASE("rearrangement")
{
    VectorXd a(2);
    a << 0.6, 0.4;
    const VectorXd r = rearrange(a);
    CHECK(r(0) == 0.4);
    CHECK(r(1) == 0.6);
    CHECK(rearrange(r) == r);
    std::mt19937_64 eng(2);
    for (int i = 0; i < 100; ++i) {
        const VectorXd v = random_theta(5, eng, 1.0);
        const VectorXd once = rearrange(v);
        CHECK(rearrange(once) == once);
        CHECK(std::is_sorted(once.data(), once.data() + once.size()));
    }
}

TEST_CASE("multinomial logit closed forms")
{
    Eigen::VectorXi d(600);
    for (Index i = 0; i < 600; ++i) d(i) = static_cast<int>(i % 3);
    const MatrixXd ones = MatrixXd::Ones(600, 1);
    const MnlFit eq = fit_mnl(d, ones, 2);
    CHECK(eq.coef.cwiseAbs().maxCoeff() < 1e-10);

    Eigen::VectorXi d2(1000);
    d2.head(200).setConstant(0);
    d2.segment(200, 500).setConstant(1);
    d2.tail(300).setConstant(2);
    const MnlFit f = fit_mnl(d2, MatrixXd::Ones(1000, 1), 2);
    CHECK(f.coef(0, 0) == doctest::Approx(std::log(0.5 / 0.2)).epsilon(1e-10));
    CHECK(f.coef(0, 1) == doctest::Approx(std::log(0.3 / 0.2)).epsilon(1e-10));

    MnlFit zero;
    zero.coef = MatrixXd::Zero(1, 2);
    zero.kept = {0};
    zero.design_cols = 1;
    const VectorXd p = predict_probs(zero, VectorXd::Ones(1));
    CHECK((p.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);
    for (int k = 0; k <= 2; ++k)
        CHECK(inclusive_value(zero, VectorXd::Ones(1), k) == doctest::Approx(std::log(3.0)).epsilon(1e-15));

    Eigen::VectorXi missing = d;
    for (Index i = 0; i < missing.size(); ++i)
        if (missing(i) == 2) missing(i) = 1;
    CHECK_THROWS_AS(fit_mnl(missing, ones, 2), Error);
}

TEST_CASE("analytic gradients and Hessians match finite differences")
{
    std::mt19937_64 eng(31);
    const SimDataset sd = generate_ordered(3, 800, 5);
    const Eigen::VectorXi& d = sd.data.d;
    const MatrixXd& x = sd.data.X;

    const Objective ord = ordered_objective(d, x, 3);
    const Sample s = mnl_sample(800, 3, eng);
    const Objective mnl = mnl_objective(s.d, s.design, 3);
    VectorXd y(800);
    for (Index i = 0; i < 800; ++i) y(i) = s.d(i) <= 1 ? 1.0 : 0.0;
    const Objective logit = logit_objective(y, s.design);

    for (int rep = 0; rep < 5; ++rep) {
        VectorXd to = random_theta(x.cols() + 3, eng, 0.5);
        CHECK(gradient_check(ord, to) < 1e-6);
        const VectorXd tm = random_theta(3 * 3, eng, 0.5);
        CHECK(gradient_check(mnl, tm) < 1e-6);
        CHECK(hessian_error(mnl, tm) < 1e-6);
        const VectorXd tl = random_theta(3, eng, 0.5);
        CHECK(gradient_check(logit, tl) < 1e-6);
        CHECK(hessian_error(logit, tl) < 1e-6);
    }

    const OrderedFit fo = fit_ordered(d, x, 3);
    CHECK(fo.opt.converged);
    const MnlFit fm = fit_mnl(s.d, s.design, 3);
    CHECK(fm.loglik >= fm.loglik_init);
    CHECK(gradient_check(mnl, Eigen::Map<const VectorXd>(fm.coef.data(), fm.coef.size())) < 1e-6);
}

TEST_CASE("inclusive value, softmax and the choice-probability Jacobian")
{
    std::mt19937_64 eng(41);
    std::uniform_int_distribution<int> pickK(2, 4);
    double id_err = 0.0, simplex_err = 0.0;
    for (int fit = 0; fit < 50; ++fit) {
        const int K = pickK(eng);
        const Sample s = mnl_sample(400, K, eng);
        MnlFit f = fit_mnl(s.d, s.design, K);
        REQUIRE(f.kept.front() == 0);
        for (Index i = 0; i < 20; ++i) {
            const VectorXd row = s.design.row(i).transpose();
            const VectorXd p = predict_probs(f, row);
            simplex_err = std::max(simplex_err, std::abs(p.sum() - 1.0));
            CHECK(p.minCoeff() > 0.0);
            for (int k = 0; k <= K; ++k)
                id_err = std::max(id_err, std::abs(inclusive_value(f, row, k) + std::log(p(k))));
        }

        // Shifting the intercept of alternative k moves u_k alone.
        const VectorXd row = s.design.row(0).transpose();
        MatrixXd jac(K, K);
        const double h = 1e-6;
        for (int k = 1; k <= K; ++k) {
            MnlFit up = f, dn = f;
            up.coef(0, k - 1) += h;
            dn.coef(0, k - 1) -= h;
            jac.col(k - 1) = (predict_probs(up, row) - predict_probs(dn, row)).tail(K) / (2.0 * h);
        }
        for (int a = 0; a < K; ++a) {
            CHECK(jac(a, a) > 0.0);
            for (int b = 0; b < K; ++b)
                if (a != b) CHECK(jac(a, b) < 0.0);
        }
        CHECK(jac.colwise().sum().minCoeff() > 0.0);
    }
    CHECK(id_err < 1e-12);
    CHECK(simplex_err < 1e-12);
}

TEST_CASE("log-sum-exp is convex in the covariates")
{
    MnlFit f;
    f.coef.resize(3, 2);
    f.coef << 0.2, -0.4, 1.0, -0.5, 0.3, 0.8;
    f.kept = {0, 1, 2};
    f.design_cols = 3;
    auto lse = [&f](double a, double b) {
        VectorXd r(3);
        r << 1.0, a, b;
        return log_sum_exp(f.utilities(r));
    };
    std::mt19937_64 eng(9);
    std::normal_distribution<double> z;
    for (int t = 0; t < 20; ++t) {
        const double a = z(eng), b = z(eng), h = 1e-4;
        Eigen::Matrix2d H;
        H(0, 0) = (lse(a + h, b) - 2 * lse(a, b) + lse(a - h, b)) / (h * h);
        H(1, 1) = (lse(a, b + h) - 2 * lse(a, b) + lse(a, b - h)) / (h * h);
        H(0, 1) = H(1, 0) =
            (lse(a + h, b + h) - lse(a + h, b - h) - lse(a - h, b + h) + lse(a - h, b - h)) /
            (4 * h * h);
        const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(H).eigenvalues();
        CHECK(ev.minCoeff() > -1e-5);
        CHECK(H.norm() > 1e-3);
    }
    VectorXd big(3);
    big << 800.0, 801.0, 799.0;
    CHECK(std::isfinite(log_sum_exp(big)));
}

TEST_CASE("elementary symmetric polynomials")
{
    VectorXd p(4);
    p << 0.1, 0.2, 0.3, 0.4;
    const VectorXd e = elementary_symmetric(p, 1, 3);
    CHECK(e(0) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(e(1) == doctest::Approx(0.19).epsilon(1e-14));
    CHECK(e(2) == doctest::Approx(0.012).epsilon(1e-14));
    CHECK_THROWS_AS(elementary_symmetric(p, 1, 4), Error);

    std::mt19937_64 eng(13);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    double worst = 0.0;
    for (int K = 1; K <= 6; ++K) {
        for (int rep = 0; rep < 50; ++rep) {
            VectorXd q(K + 1);
            for (int j = 0; j <= K; ++j) q(j) = u(eng);
            q /= q.sum();
            for (int k = 0; k <= K; ++k) {
                const VectorXd got = elementary_symmetric(q, k, K);
                CHECK(got(0) == 1.0 - q(k));
                std::vector<double> others;
                for (int j = 0; j <= K; ++j)
                    if (j != k) others.push_back(q(j));
                const std::vector<double> want = subset_esp(others, K);
                for (int l = 0; l < K; ++l)
                    worst = std::max(worst, std::abs(got(l) - want[static_cast<size_t>(l)]));
                double prod = 1.0;
                for (double o : others) prod *= o;
                CHECK(std::abs(got(K - 1) - prod) < 1e-15);
            }
        }
    }
    CHECK(worst < 1e-14);
}

TEST_CASE("truncated correction against a Monte Carlo oracle")
{
    // One shared sample of 10^7 standard normals serves every cell.
    std::mt19937_64 eng(20240611);
    std::normal_distribution<double> z;
    std::vector<double> draws(10'000'000);
    for (double& v : draws) v = z(eng);

    std::uniform_real_distribution<double> u(0.0, 1.0);
    int within = 0;
    for (int cell = 0; cell < 50; ++cell) {
        const double index = 2.0 * u(eng) - 1.0;
        double lo = -1.5 + 2.0 * u(eng);
        double hi = lo + 0.3 + 1.5 * u(eng);
        if (cell % 5 == 0) lo = -INFINITY;
        if (cell % 5 == 1) hi = INFINITY;
        const double a = lo - index, b = hi - index;
        double s = 0.0, s2 = 0.0;
        long m = 0;
        for (double v : draws)
            if (v >= a && v < b) {
                s += v;
                s2 += v * v;
                ++m;
            }
        REQUIRE(m > 1000);
        const double mean = s / static_cast<double>(m);
        const double var = s2 / static_cast<double>(m) - mean * mean;
        const double se = std::sqrt(var / static_cast<double>(m));
        if (std::abs(truncated_correction(index, lo, hi) - mean) <= 3.0 * se) ++within;
    }
    CHECK(within == 50);
}

}  // TEST_SUITE
