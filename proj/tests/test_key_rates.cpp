#include "cvfade/key_rates.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace cvfade;
using Catch::Approx;

namespace {

KeyRateConfig heterodyne(double v_in, double n_th, double beta = 1.0) {
    KeyRateConfig cfg;
    cfg.modulation_variance = v_in;
    cfg.thermal_occupation = n_th;
    cfg.reconciliation_efficiency = beta;
    cfg.detection = Detection::kHeterodyne;
    return cfg;
}

KeyRateConfig homodyne(double v_in, double n_th, double beta = 1.0) {
    KeyRateConfig cfg = heterodyne(v_in, n_th, beta);
    cfg.detection = Detection::kHomodyne;
    return cfg;
}

}  // namespace

TEST_CASE("effective transmittance") {
    SECTION("rules coincide for equal channels") {
        for (double t : {0.1, 0.5, 1.0}) {
            const std::vector<double> ts{t, t, t};
            CHECK(effective_transmittance(ts, TeffRule::kArithmetic) == Approx(t).margin(1e-14));
            CHECK(effective_transmittance(ts, TeffRule::kAmplitude) == Approx(t).margin(1e-14));
        }
    }
    SECTION("arithmetic (0.5, 0.3)") {
        CHECK(effective_transmittance(std::vector{0.5, 0.3}, TeffRule::kArithmetic) ==
              Approx(0.4).margin(1e-14));
    }
    SECTION("amplitude (0.5, 0.3)") {
        CHECK(effective_transmittance(std::vector{0.5, 0.3}, TeffRule::kAmplitude) ==
              Approx(0.3936491673103709).margin(1e-12));
    }
    CHECK_THROWS_AS(effective_transmittance({}, TeffRule::kArithmetic), std::invalid_argument);
    CHECK_THROWS_AS(effective_transmittance(std::vector{1.4}, TeffRule::kArithmetic),
                    std::invalid_argument);
}

TEST_CASE("mutual information") {
    SECTION("no modulation carries no information") {
        CHECK(mutual_information(heterodyne(1.0, 0.3), 0.7) == Approx(0.0).margin(1e-14));
    }
    SECTION("lossless heterodyne V_in = 10") {
        CHECK(mutual_information(heterodyne(10.0, 0.0), 1.0) ==
              Approx(4.247927513443585).margin(1e-12));
    }
    SECTION("lossless homodyne V_in = 5") {
        CHECK(mutual_information(homodyne(5.0, 0.0), 1.0) ==
              Approx(1.1609640474436813).margin(1e-12));
    }
    SECTION("denominator guard") {
        // Printed denominator 1 + (1/nu)(1-T)(2 n_th - 1) can only vanish at
        // n_th = 0 as T -> 0 for homodyne; pick a value just over the edge.
        CHECK_THROWS_AS(mutual_information(homodyne(5.0, 0.0), 1e-320), std::invalid_argument);
    }
}

TEST_CASE("environment covariance") {
    SECTION("lossless, vacuum environment decouples") {
        const auto env = environment_covariance(heterodyne(10.0, 0.0), 1.0);
        CHECK(env.a == Approx(1.0).margin(1e-14));
        CHECK(env.b == Approx(1.0).margin(1e-14));
        CHECK(env.c == Approx(0.0).margin(1e-14));
    }
    SECTION("full loss hands the modulation to the environment") {
        const auto env = environment_covariance(heterodyne(10.0, 0.35), 0.0);
        CHECK(env.a == Approx(10.0).margin(1e-14));
        CHECK(env.b == Approx(1.7).margin(1e-14));
        CHECK(env.c == Approx(0.0).margin(1e-14));
    }
    SECTION("closed-form pair equals the general symplectic solver") {
        std::mt19937_64 rng(41);
        std::uniform_real_distribution<double> t_dist(0.01, 1.0), n_dist(0.0, 1.5),
            v_dist(1.0, 20.0);
        for (int trial = 0; trial < 100; ++trial) {
            const auto cfg = heterodyne(v_dist(rng), n_dist(rng));
            const auto env = environment_covariance(cfg, t_dist(rng));
            Eigen::MatrixXd big(4, 4);
            big << env.a, 0, env.c, 0, 0, env.a, 0, -env.c, env.c, 0, env.b, 0, 0, -env.c, 0,
                env.b;
            const auto nus = symplectic_spectrum(big);
            const double z = std::sqrt((env.a + env.b) * (env.a + env.b) - 4.0 * env.c * env.c);
            std::vector<double> want = {0.5 * (z + (env.b - env.a)),
                                        0.5 * (z - (env.b - env.a))};
            std::sort(want.begin(), want.end(), std::greater<>());
            CHECK(nus[0] == Approx(want[0]).margin(1e-10));
            CHECK(nus[1] == Approx(want[1]).margin(1e-10));
            CHECK(env.c * env.c <= env.a * env.b + 1e-12);
        }
    }
    SECTION("paper-faithful units reject n_th < 1/2") {
        KeyRateConfig cfg = heterodyne(10.0, 0.2);
        cfg.units = UnitConvention::kPaperFaithful;
        CHECK_THROWS_WITH(environment_covariance(cfg, 0.5),
                          Catch::Matchers::ContainsSubstring("paper-faithful"));
    }
}

TEST_CASE("holevo information") {
    SECTION("lossless channel leaks nothing (heterodyne, V_in = 10)") {
        CHECK(holevo_information(heterodyne(10.0, 0.0), 1.0) == Approx(0.0).margin(1e-9));
    }
    SECTION("lossless channel leaks nothing (homodyne, V_in = 10)") {
        CHECK(holevo_information(homodyne(10.0, 0.0), 1.0) == Approx(0.0).margin(1e-9));
    }
    SECTION("no modulation over a pure-loss channel leaks nothing") {
        // With thermal noise the environment stays correlated with Bob's
        // received noise, so chi(E:B) > 0 even at V_in = 1; the leak vanishes
        // for a vacuum environment (n_th = 0) or a lossless channel.
        for (double t : {0.2, 0.8, 1.0}) {
            CHECK(holevo_information(heterodyne(1.0, 0.0), t) == Approx(0.0).margin(1e-9));
            CHECK(holevo_information(homodyne(1.0, 0.0), t) == Approx(0.0).margin(1e-9));
        }
        CHECK(holevo_information(heterodyne(1.0, 0.4), 1.0) == Approx(0.0).margin(1e-9));
        CHECK(holevo_information(heterodyne(1.0, 0.4), 0.5) > 0.0);
    }
    SECTION("non-negative over the domain") {
        std::mt19937_64 rng(43);
        std::uniform_real_distribution<double> t_dist(0.01, 1.0), n_dist(0.0, 1.2),
            v_dist(1.0, 20.0);
        for (int trial = 0; trial < 200; ++trial) {
            const double t = t_dist(rng), n = n_dist(rng), v = v_dist(rng);
            CHECK(holevo_information(heterodyne(v, n), t) >= -1e-9);
            CHECK(holevo_information(homodyne(v, n), t) >= -1e-9);
        }
    }
}

TEST_CASE("key rate realizations") {
    SECTION("lossless-noiseless: K = beta I for both detections") {
        for (double v : {2.0, 5.0, 10.0, 20.0}) {
            for (double beta : {1.0, 0.8}) {
                const auto het = heterodyne(v, 0.0, beta);
                CHECK(key_rate_realization(het, std::vector{1.0}) ==
                      Approx(beta * mutual_information(het, 1.0)).margin(1e-9));
                const auto hom = homodyne(v, 0.0, beta);
                CHECK(key_rate_realization(hom, std::vector{1.0}) ==
                      Approx(beta * mutual_information(hom, 1.0)).margin(1e-9));
            }
        }
        CHECK(key_rate_realization(heterodyne(10.0, 0.0), std::vector{1.0}) ==
              Approx(4.247927513443585).margin(1e-9));
        CHECK(key_rate_realization(homodyne(5.0, 0.0), std::vector{1.0}) ==
              Approx(1.1609640474436813).margin(1e-9));
    }
    SECTION("beta = 0 gives K = -chi <= 0") {
        const auto cfg = heterodyne(10.0, 0.3, 0.0);
        const double k = key_rate_realization(cfg, std::vector{0.5, 0.7});
        CHECK(k == Approx(-holevo_information(cfg, 0.6)).margin(1e-12));
        CHECK(k <= 0.0);
    }
    SECTION("raw rate is at most beta I") {
        std::mt19937_64 rng(47);
        std::uniform_real_distribution<double> t_dist(0.05, 1.0);
        const auto cfg = heterodyne(10.0, 0.2, 0.9);
        for (int trial = 0; trial < 100; ++trial) {
            const std::vector<double> ts{t_dist(rng), t_dist(rng)};
            const double t_eff = effective_transmittance(ts, cfg.t_eff_rule);
            CHECK(key_rate_realization(cfg, ts) <=
                  cfg.reconciliation_efficiency * mutual_information(cfg, t_eff) + 1e-12);
        }
    }
}

TEST_CASE("fading-averaged key rates") {
    ExpectationPlan plan;
    const FadingModel fading = FadingModel::from_mean(0.4, 0.5);

    SECTION("degenerate fading reduces to the realization value") {
        const FadingModel fixed(std::log(0.45), 1e-12);
        const auto cfg = heterodyne(10.0, 0.2);
        const auto avg = average_key_rate_diversity(cfg, fixed, 2, plan);
        CHECK(avg.raw == Approx(key_rate_realization(cfg, std::vector{0.45, 0.45})).margin(1e-8));
    }
    SECTION("quadrature and monte carlo agree for N = 1, 2, 3") {
        const auto cfg = heterodyne(10.0, 0.2);
        for (int order : {1, 2, 3}) {
            const auto quad = average_key_rate_diversity(cfg, fading, order, plan);
            ExpectationPlan mc = plan;
            mc.method = IntegrationMethod::kMonteCarlo;
            mc.sample_count = 100'000;
            mc.seed = 21;
            const auto sampled = average_key_rate_diversity(cfg, fading, order, mc, 4);
            CHECK(std::abs(quad.raw - sampled.raw) <= std::max(3.0 * sampled.raw_error, 1e-3));
            CHECK(std::abs(quad.clamped - sampled.clamped) <=
                  std::max(3.0 * sampled.clamped_error, 1e-3));
        }
    }
    SECTION("clamped average lies in [0, beta I] and raw <= clamped") {
        const auto cfg = homodyne(5.0, 0.2);
        const auto avg = average_key_rate_diversity(cfg, fading, 2, plan);
        CHECK(avg.clamped >= 0.0);
        CHECK(avg.raw <= avg.clamped + 1e-12);
    }
    SECTION("monotone non-increasing in n_th and in mean loss") {
        double prev = 1e9;
        for (double n_th : {0.0, 0.3, 0.6, 0.9}) {
            const auto avg = average_key_rate_diversity(heterodyne(10.0, n_th), fading, 2, plan);
            CHECK(avg.raw <= prev + 1e-10);
            prev = avg.raw;
        }
        prev = 1e9;
        for (double db : {1.0, 3.0, 5.0, 8.0, 12.0}) {
            const auto model = FadingModel::from_mean(std::pow(10.0, -db / 10.0), 0.5);
            const auto avg = average_key_rate_diversity(heterodyne(10.0, 0.2), model, 2, plan);
            CHECK(avg.raw <= prev + 1e-10);
            prev = avg.raw;
        }
    }
    SECTION("multiplexing is exactly N times the single-channel average") {
        const auto cfg = heterodyne(10.0, 0.2);
        const auto one = average_key_rate_diversity(cfg, fading, 1, plan);
        const auto two = average_key_rate_multiplexing(cfg, fading, 2, plan);
        CHECK(two.raw == 2.0 * one.raw);
        CHECK(two.clamped == 2.0 * one.clamped);
        const auto same = average_key_rate_multiplexing(cfg, fading, 1, plan);
        CHECK(same.raw == one.raw);
    }
    SECTION("coupled N-sweep matches the plain estimator at N = 1") {
        ExpectationPlan mc;
        mc.method = IntegrationMethod::kMonteCarlo;
        mc.sample_count = 50'000;
        mc.seed = 31;
        const auto cfg = heterodyne(10.0, 0.2);
        const std::vector<int> orders{1};
        const auto sweep = average_key_rate_diversity_sweep(cfg, fading, orders, mc, 2);
        const auto plain = average_key_rate_diversity(cfg, fading, 1, mc, 2);
        CHECK(sweep[0].raw == Approx(plain.raw).margin(1e-12));
        CHECK_THROWS_AS(average_key_rate_diversity_sweep(cfg, fading, orders, plan),
                        std::invalid_argument);
    }
}
