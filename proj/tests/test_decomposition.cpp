#include <doctest.h>

#include <filesystem>
#include <random>

#include "mlsel/decomposition.hpp"
#include "mlsel/error.hpp"

using namespace mlsel;

namespace {

GroupStats example()
{
    GroupStats g;
    g.mean_a.resize(2);
    g.mean_b.resize(2);
    g.share_a.resize(2);
    g.share_b.resize(2);
    g.beta.resize(2);
    g.mean_a << 1.0, 2.0;
    g.mean_b << 0.9, 1.8;
    g.share_a << 0.5, 0.5;
    g.share_b << 0.7, 0.3;
    g.beta << -0.05, -0.1;
    return g;
}

double sum(const Decomposition& d)
{
    return d.structural_within + d.covariate_composition + d.between_sorting;
}

}  // namespace

TEST_SUITE("decomposition") {

TEST_CASE("hand-evaluated example")
{
    const Decomposition d = decompose(example());
    CHECK(d.raw == doctest::Approx(0.33).epsilon(1e-14));
    CHECK(d.structural_within == doctest::Approx(0.075).epsilon(1e-14));
    CHECK(d.covariate_composition == doctest::Approx(0.075).epsilon(1e-14));
    CHECK(d.between_sorting == doctest::Approx(0.18).epsilon(1e-14));
}

TEST_CASE("symmetric groups decompose to zero")
{
    GroupStats g = example();
    g.mean_b = g.mean_a;
    g.share_b = g.share_a;
    g.beta.setZero();
    const Decomposition d = decompose(g);
    CHECK(d.raw == 0.0);
    CHECK(d.structural_within == 0.0);
    CHECK(d.covariate_composition == 0.0);
    CHECK(d.between_sorting == 0.0);
}

TEST_CASE("additivity and label permutation")
{
    std::mt19937_64 eng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const int K = 2 + rep % 5;
        GroupStats g;
        g.mean_a = VectorXd::NullaryExpr(K, [&] { return 2.0 + u(eng); });
        g.mean_b = VectorXd::NullaryExpr(K, [&] { return 2.0 + u(eng); });
        g.share_a = VectorXd::NullaryExpr(K, [&] { return 0.05 + u(eng); });
        g.share_b = VectorXd::NullaryExpr(K, [&] { return 0.05 + u(eng); });
        g.share_a /= g.share_a.sum();
        g.share_b /= g.share_b.sum();
        g.beta = VectorXd::NullaryExpr(K, [&] { return u(eng) - 0.5; });
        const Decomposition d = decompose(g);
        CHECK(std::abs(d.raw - sum(d)) < 1e-12);

        GroupStats p = g;
        for (auto* v : {&p.mean_a, &p.mean_b, &p.share_a, &p.share_b, &p.beta})
            *v = v->reverse().eval();
        const Decomposition q = decompose(p);
        CHECK(q.raw == doctest::Approx(d.raw).epsilon(1e-13));
        CHECK(q.structural_within == doctest::Approx(d.structural_within).epsilon(1e-13));
        CHECK(q.covariate_composition == doctest::Approx(d.covariate_composition).epsilon(1e-13));
        CHECK(q.between_sorting == doctest::Approx(d.between_sorting).epsilon(1e-13));
    }
}

TEST_CASE("invalid inputs")
{
    GroupStats g = example();
    g.share_b(0) = 0.8;
    CHECK_THROWS_AS(decompose(g), Error);
    GroupStats h = example();
    h.beta.resize(3);
    CHECK_THROWS_AS(decompose(h), Error);
}

TEST_CASE("group statistics round-trip through CSV")
{
    const auto path = std::filesystem::temp_directory_path() / "mlsel_groups.csv";
    const GroupStats g = example();
    write_group_stats(path.string(), g);
    const GroupStats r = load_group_stats(path.string());
    CHECK(r.mean_a == g.mean_a);
    CHECK(r.mean_b == g.mean_b);
    CHECK(r.share_a == g.share_a);
    CHECK(r.share_b == g.share_b);
    CHECK(r.beta == g.beta);
    std::filesystem::remove(path);

    try {
        load_group_stats("/nonexistent/groups.csv");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IoNotFound);
    }
    const std::string csv = decomposition_csv(decompose(g));
    CHECK(csv.find("between_sorting") != std::string::npos);
}

}  // TEST_SUITE
