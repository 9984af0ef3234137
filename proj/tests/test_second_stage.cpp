#include <doctest.h>

#include <random>

#include "mlsel/design.hpp"
#include "mlsel/dgp.hpp"
#include "mlsel/error.hpp"
#include "mlsel/estimators.hpp"
#include "mlsel/second_stage.hpp"

using namespace mlsel;

namespace {

struct Toy {
    MatrixXd x;
    MatrixXd g;
    VectorXd y;
};

// y = x b + lambda(g) + noise with x correlated with g.
Toy toy(Index n, int dg, double noise, std::uint64_t seed)
{
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Toy t;
    t.x.resize(n, 2);
    t.g.resize(n, dg);
    t.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        double lam = 0.0;
        for (int j = 0; j < dg; ++j) {
            t.g(i, j) = u(eng);
            lam += std::pow(t.g(i, j), 3) - 2.0 * t.g(i, j) * t.g(i, j) + 0.5;
        }
        t.x(i, 0) = t.g(i, 0) + z(eng);
        t.x(i, 1) = z(eng);
        t.y(i) = 1.5 * t.x(i, 0) - 0.7 * t.x(i, 1) + lam + noise * z(eng);
    }
    return t;
}

ControlSpec sieve_spec(ControlVariant v)
{
    ControlSpec s;
    s.variant = v;
    s.sieve.n_interior = 3;
    s.sieve.n_interior_tensor = 1;
    return s;
}

MatrixXd residualize(const MatrixXd& m, const MatrixXd& basis)
{
    Eigen::ColPivHouseholderQR<MatrixXd> qr(basis);
    return m - basis * qr.solve(m);
}

}  // namespace

TEST_SUITE("second-stage") {

TEST_CASE("exact recovery")
{
    Toy t = toy(300, 1, 0.0, 1);
    std::mt19937_64 eng(4);
    std::normal_distribution<double> z;
    VectorXd b(2);
    b << 1.5, -0.7;
    const VectorXd y = t.x * b;
    MatrixXd noise(300, 1);
    for (Index i = 0; i < 300; ++i) noise(i, 0) = z(eng);
    const FitResult lin = fit_outcome(y, t.x, noise, sieve_spec(ControlVariant::MlogitIv));
    CHECK((lin.beta - b).cwiseAbs().maxCoeff() < 1e-10);

    const FitResult cub = fit_outcome(t.y, t.x, t.g, sieve_spec(ControlVariant::MlogitIv));
    CHECK((cub.beta - b).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(cub.residuals.cwiseAbs().maxCoeff() < 1e-8);

    MatrixXd dup(300, 2);
    dup.col(0) = t.x.col(0);
    dup.col(1) = t.x.col(0);
    try {
        fit_outcome(y, dup, t.g, sieve_spec(ControlVariant::MlogitIv));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RankDeficient);
        CHECK(std::string(e.what()) == "outcome coefficients unidentified in sample");
    }
}

TEST_CASE("Frisch-Waugh-Lovell equivalence and bookkeeping")
{
    for (int dg : {1, 2, 3}) {
        const Toy t = toy(800, dg, 0.5, 10 + static_cast<std::uint64_t>(dg));
        const ControlSpec spec = sieve_spec(ControlVariant::SieveProbs);
        const FitResult fr = fit_outcome(t.y, t.x, t.g, spec);
        const ControlBasis cb = control_basis(t.g, spec);
        const auto keep = independent_columns(cb.basis);
        const MatrixXd basis = select_columns(cb.basis, keep);
        const MatrixXd xt = residualize(t.x, basis);
        const VectorXd yt = residualize(t.y, basis);
        const VectorXd fwl = (xt.transpose() * xt).ldlt().solve(xt.transpose() * yt);
        CHECK((fr.beta - fwl).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(fr.beta.size() + fr.delta.size() + static_cast<Index>(fr.dropped.size()) ==
              t.x.cols() + cb.basis.cols());
        CHECK(fr.kappa == fr.delta.size());

        const MatrixXd& v = fr.vcov_robust;
        CHECK((v - v.transpose()).norm() == 0.0);
        CHECK(Eigen::SelfAdjointEigenSolver<MatrixXd>(v).eigenvalues().minCoeff() >= 0.0);
    }
}

TEST_CASE("empty basis gives HC0 and zero residuals give zero variance")
{
    const Toy t = toy(200, 1, 1.0, 3);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(t.x);
    const VectorXd e = t.y - t.x * qr.solve(t.y);
    const VarianceEstimate ve = robust_vcov(t.x, MatrixXd(200, 0), e);
    const MatrixXd bread = (t.x.transpose() * t.x).inverse();
    const MatrixXd meat = t.x.transpose() * e.cwiseAbs2().asDiagonal() * t.x;
    const MatrixXd hc0 = bread * meat * bread;
    CHECK((ve.robust - hc0).cwiseAbs().maxCoeff() < 1e-12 * hc0.cwiseAbs().maxCoeff());

    const VarianceEstimate z = robust_vcov(t.x, MatrixXd(200, 0), VectorXd::Zero(200));
    CHECK(z.omega.norm() == 0.0);
    CHECK(z.robust.norm() == 0.0);
}

TEST_CASE("robust and homoskedastic agree under homoskedasticity")
{
    const Toy t = toy(5000, 1, 1.0, 77);
    const FitResult fr = fit_outcome(t.y, t.x, t.g, sieve_spec(ControlVariant::MlogitIv));
    const VectorXd ratio = fr.vcov_robust.diagonal().cwiseQuotient(fr.vcov_homoskedastic.diagonal());
    CHECK(ratio.minCoeff() > 0.8);
    CHECK(ratio.maxCoeff() < 1.2);
}

TEST_CASE("affine rescaling of a control and outcome shifts")
{
    const Toy t = toy(1000, 2, 0.5, 8);
    const ControlSpec spec = sieve_spec(ControlVariant::SieveOrdered);
    const FitResult base = fit_outcome(t.y, t.x, t.g, spec);
    MatrixXd g2 = t.g;
    g2.col(1) = (2.0 * g2.col(1).array() + 1.0).matrix();
    const FitResult moved = fit_outcome(t.y, t.x, g2, spec);
    CHECK((base.beta - moved.beta).cwiseAbs().maxCoeff() < 1e-6);

    const VectorXd shifted = (t.y.array() + 3.0).matrix();
    const FitResult s = fit_outcome(shifted, t.x, t.g, spec);
    CHECK((base.beta - s.beta).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("control construction by variant")
{
    const SimDataset sd = generate_ordered(3, 3000, 12);
    const Dataset& ds = sd.data;
    const OrderedFit of = fit_ordered(ds.d, ds.X, 3);
    const FirstStageFit fs = of;
    ControlSpec par;
    par.variant = ControlVariant::ParametricOrdered;
    for (int k = 1; k <= 3; ++k) {
        const MatrixXd rows = select_rows(ds.X, ds.rows_in(k));
        const MatrixXd c = build_controls(par, fs, rows, k);
        REQUIRE(c.cols() == 1);
        const double hi = k == 3 ? INFINITY : of.thresholds(k);
        for (Index i = 0; i < 10; ++i)
            CHECK(c(i, 0) == truncated_correction(of.index(rows.row(i).transpose()),
                                                  of.thresholds(k - 1), hi));
    }

    SieveSpec fsd;
    fsd.n_interior_tensor = 0;
    const MatrixXd q = with_intercept(build_first_stage_design(ds, fsd));
    const FirstStageFit tf = fit_thresholds(ds.d, q, 3);
    const ControlSpec so = sieve_spec(ControlVariant::SieveOrdered);
    CHECK(build_controls(so, tf, select_rows(q, ds.rows_in(1)), 1).cols() == 2);
    CHECK(build_controls(so, tf, select_rows(q, ds.rows_in(2)), 2).cols() == 2);
    CHECK(build_controls(so, tf, select_rows(q, ds.rows_in(3)), 3).cols() == 1);
    CHECK_THROWS_AS(build_controls(par, tf, q, 1), Error);

    const SimDataset sm = generate_multinomial(2, 3000, 12);
    const MatrixXd qm = with_intercept(build_first_stage_design(sm.data, fsd));
    const MnlFit mf = fit_mnl(sm.data.d, qm, 3);
    const FirstStageFit mfs = mf;
    const MatrixXd rows = select_rows(qm, sm.data.rows_in(2));
    ControlSpec iv;
    iv.variant = ControlVariant::MlogitIv;
    const MatrixXd nu = build_controls(iv, mfs, rows, 2);
    double worst = 0.0;
    for (Index i = 0; i < rows.rows(); ++i)
        worst = std::max(worst, std::abs(nu(i, 0) + std::log(predict_probs(mf, rows.row(i).transpose())(2))));
    CHECK(worst < 1e-12);
    ControlSpec probs = sieve_spec(ControlVariant::SieveProbs);
    CHECK(build_controls(probs, mfs, rows, 2).cols() == 3);
    ControlSpec ex = sieve_spec(ControlVariant::ExchL);
    const MatrixXd e = build_controls(ex, mfs, rows, 2);
    CHECK(e.cols() == 2);
    for (Index i = 0; i < 10; ++i)
        CHECK(e(i, 0) == 1.0 - predict_probs(mf, rows.row(i).transpose())(2));
}

TEST_CASE("first-stage fits are shared between pipelines and errors are captured")
{
    const SimDataset sd = generate_ordered(1, 1500, 44);
    const EstimatorOptions o = simulation_options(sd.dgp);
    const auto out = estimate_all(sd, default_estimators(Family::Ordered, 1), o);
    REQUIRE(out.size() == 4);
    for (const auto& eo : out) {
        CHECK_FALSE(eo.error.has_value());
        CHECK(eo.fits.size() == 2);
    }
    const Pipeline p = pipeline_for(Estimator::Sieve, Family::Ordered, o);
    const auto direct = fit_pipeline(sd.data, p);
    CHECK(direct[0].beta == out[3].fits[0].beta);
}

}  // TEST_SUITE
