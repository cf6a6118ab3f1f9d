#include "cvfade/fading.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <random>

using namespace cvfade;
using Catch::Approx;

namespace {

// Independent integration oracle: adaptive Simpson on the raw pdf, no shared
// machinery with the quadrature engine under test.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-11) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 60);
}

}  // namespace

TEST_CASE("model validation") {
    CHECK_THROWS_AS(FadingModel(0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(FadingModel(0.0, -0.2), std::invalid_argument);
    CHECK_THROWS_AS(FadingModel(0.0, 0.5, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(FadingModel(0.0, 0.5).pdf(-0.1), std::invalid_argument);
}

TEST_CASE("pdf normalizes over the truncated support") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> mean_dist(0.05, 0.95), sigma_dist(0.1, 1.0);
    for (int trial = 0; trial < 12; ++trial) {
        const double mu = std::log(mean_dist(rng));
        const double sigma = sigma_dist(rng);
        const FadingModel model(mu, sigma);
        const double mass =
            integrate([&](double t) { return model.pdf(t); }, model.truncation_floor(), 1.0);
        CHECK(mass == Approx(1.0).margin(1e-8));
    }
}

TEST_CASE("pdf mode sits at exp(mu - sigma^2)") {
    const double mu = std::log(0.4), sigma = 0.35;
    const FadingModel model(mu, sigma);
    const double mode = std::exp(mu - sigma * sigma);
    REQUIRE(mode > model.truncation_floor());
    REQUIRE(mode < 1.0);
    for (double delta : {1e-3, 1e-2, 0.1}) {
        CHECK(model.pdf(mode) >= model.pdf(mode - delta));
        CHECK(model.pdf(mode) >= model.pdf(std::min(mode + delta, 1.0)));
    }
}

TEST_CASE("degenerate sigma concentrates the law") {
    const FadingModel model(std::log(0.5), 1e-13);
    SECTION("samples collapse to exp(mu)") {
        for (std::uint64_t idx = 0; idx < 64; ++idx)
            CHECK(model.sample(9, idx) == Approx(0.5).margin(1e-12));
    }
    SECTION("expectations collapse to g(exp(mu))") {
        ExpectationPlan plan;
        const auto g = [](std::span<const double> t) { return t[0] * t[0] + 1.0; };
        CHECK(expect({model}, g, plan).value == Approx(1.25).margin(1e-10));
    }
}

TEST_CASE("from_mean inverts the truncated mean") {
    SECTION("sigma to zero limit: mu -> ln target") {
        const auto model = FadingModel::from_mean(0.37, 1e-8);
        CHECK(model.mu() == Approx(std::log(0.37)).margin(1e-6));
    }
    SECTION("far from truncation the untruncated moment formula holds") {
        for (double target : {0.1, 0.3, 0.5}) {
            for (double sigma : {0.05, 0.1}) {
                const auto model = FadingModel::from_mean(target, sigma);
                CHECK(model.mu() == Approx(std::log(target) - sigma * sigma / 2.0).margin(1e-5));
            }
        }
    }
    SECTION("round trip against the quadrature engine") {
        ExpectationPlan plan;
        for (double target : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            for (double sigma : {0.1, 0.5, 1.0}) {
                const auto model = FadingModel::from_mean(target, sigma);
                const auto got =
                    expect({model}, [](std::span<const double> t) { return t[0]; }, plan);
                CHECK(got.value == Approx(target).margin(1e-5));
            }
        }
    }
    SECTION("infeasible targets are rejected") {
        CHECK_THROWS_AS(FadingModel::from_mean(0.99, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(FadingModel::from_mean(1.2, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(FadingModel::from_mean(0.5, 0.0), std::invalid_argument);
    }
}

TEST_CASE("sampling") {
    const FadingModel model(std::log(0.4), 0.5);
    SECTION("deterministic given (seed, index)") {
        for (std::uint64_t idx : {0ULL, 1ULL, 999ULL}) {
            const double a = model.sample(42, idx);
            const double b = model.sample(42, idx);
            CHECK(a == b);
            CHECK(a > model.truncation_floor());
            CHECK(a <= 1.0);
        }
        CHECK(model.sample(42, 0) != model.sample(42, 1));
        CHECK(model.sample(42, 0) != model.sample(43, 0));
    }
    SECTION("empirical mean matches quadrature within 4 standard errors") {
        ExpectationPlan quad_plan;
        const double want =
            expect({model}, [](std::span<const double> t) { return t[0]; }, quad_plan).value;
        ExpectationPlan mc_plan;
        mc_plan.method = IntegrationMethod::kMonteCarlo;
        mc_plan.sample_count = 1'000'000;
        mc_plan.seed = 5;
        const auto got =
            expect({model}, [](std::span<const double> t) { return t[0]; }, mc_plan, 4);
        CHECK(std::abs(got.value - want) <= 4.0 * got.std_error);
    }
    SECTION("degenerate truncation is rejected") {
        // Mean target 0.97 at sigma 0.5 pushes nearly all mass above T = 1.
        const auto model_far = FadingModel::from_mean(0.97, 0.5);
        CHECK_THROWS_AS(model_far.sample(1, 0), std::invalid_argument);
    }
}

TEST_CASE("expectation engine") {
    const FadingModel model = FadingModel::from_mean(0.4, 0.5);
    ExpectationPlan plan;

    SECTION("normalization: E[1] = 1") {
        const auto got = expect({model}, [](std::span<const double>) { return 1.0; }, plan);
        CHECK(got.value == Approx(1.0).margin(1e-10));
    }
    SECTION("two joint dimensions: E[T1 T2] = E[T]^2") {
        const auto one = expect({model}, [](std::span<const double> t) { return t[0]; }, plan);
        const auto joint = expect({model, model},
                                  [](std::span<const double> t) { return t[0] * t[1]; }, plan);
        CHECK(joint.value == Approx(one.value * one.value).margin(1e-9));
    }
    SECTION("quadrature node-count convergence") {
        const auto g = [](std::span<const double> t) { return std::exp(-t[0]) + t[0] * t[0]; };
        ExpectationPlan p64 = plan, p128 = plan;
        p64.node_count = 64;
        p128.node_count = 128;
        CHECK(std::abs(expect({model}, g, p64).value - expect({model}, g, p128).value) < 1e-8);
    }
    SECTION("quadrature and monte carlo agree") {
        std::mt19937_64 rng(37);
        std::uniform_real_distribution<double> mean_dist(0.1, 0.8), sigma_dist(0.1, 0.8);
        for (int trial = 0; trial < 6; ++trial) {
            const auto m = FadingModel::from_mean(mean_dist(rng), sigma_dist(rng));
            const auto g = [](std::span<const double> t) { return std::sqrt(t[0]); };
            const auto quad = expect({m}, g, plan);
            ExpectationPlan mc = plan;
            mc.method = IntegrationMethod::kMonteCarlo;
            mc.sample_count = 100'000;
            mc.seed = 100 + trial;
            const auto sampled = expect({m}, g, mc);
            CHECK(std::abs(quad.value - sampled.value) <=
                  std::max(3.0 * sampled.std_error, 1e-3));
        }
    }
    SECTION("monte carlo output is independent of the worker count") {
        ExpectationPlan mc = plan;
        mc.method = IntegrationMethod::kMonteCarlo;
        mc.sample_count = 20'000;
        mc.seed = 77;
        const auto g = [](std::span<const double> t) { return t[0] * t[0]; };
        const auto w1 = expect({model, model}, g, mc, 1);
        const auto w4 = expect({model, model}, g, mc, 4);
        CHECK(w1.value == w4.value);
        CHECK(w1.std_error == w4.std_error);
    }
    SECTION("quadrature dimension guard") {
        const std::vector<FadingModel> four(4, model);
        CHECK_THROWS_WITH(expect(four, [](std::span<const double>) { return 1.0; }, plan),
                          Catch::Matchers::ContainsSubstring("monte-carlo"));
    }
}
