#include "doctest.h"

#include <cmath>

#include <nlohmann/json.hpp>

#include "hsk/model.hpp"

using namespace hsk;

TEST_CASE("maxwellian moments") {
    RngStream rng(42);
    const long long N = 100000;

    SUBCASE("mean is zero at beta=1") {
        Vec3 sum{};
        for (long long i = 0; i < N; ++i) sum += sample_maxwellian(1.0, rng);
        const double sigma_mean = 1.0 / std::sqrt(static_cast<double>(N));
        CHECK(std::abs(sum.x / N) < 3 * sigma_mean);
        CHECK(std::abs(sum.y / N) < 3 * sigma_mean);
        CHECK(std::abs(sum.z / N) < 3 * sigma_mean);
    }

    SUBCASE("component variance is 1/beta at beta=2") {
        double ss = 0;
        for (long long i = 0; i < N; ++i) {
            const Vec3 v = sample_maxwellian(2.0, rng);
            ss += v.x * v.x;
        }
        const double var = ss / N;
        // variance of the variance estimator: 2 sigma^4 / N
        const double sigma = std::sqrt(2.0 * 0.25 / static_cast<double>(N));
        CHECK(std::abs(var - 0.5) < 3 * sigma);
    }

    SUBCASE("component kurtosis is 3") {
        double s2 = 0, s4 = 0;
        for (long long i = 0; i < N; ++i) {
            const Vec3 v = sample_maxwellian(1.0, rng);
            s2 += v.x * v.x;
            s4 += v.x * v.x * v.x * v.x;
        }
        const double kurt = (s4 / N) / ((s2 / N) * (s2 / N));
        CHECK(std::abs(kurt - 3.0) < 4 * std::sqrt(24.0 / static_cast<double>(N)));
    }

    SUBCASE("gaussian normalization by box quadrature") {
        // int exp(-|v|^2/2) dv = (2 pi)^{3/2}; truncation to [-6,6]^3 is
        // negligible at this tolerance
        const long long M = 400000;
        double acc = 0, acc2 = 0;
        const double volume = 12.0 * 12.0 * 12.0;
        for (long long i = 0; i < M; ++i) {
            const Vec3 v{rng.uniform(-6, 6), rng.uniform(-6, 6), rng.uniform(-6, 6)};
            const double f = std::exp(-0.5 * norm2(v)) * volume;
            acc += f;
            acc2 += f * f;
        }
        const double mean = acc / M;
        const double sigma = std::sqrt((acc2 / M - mean * mean) / M);
        const double target = std::pow(2.0 * M_PI, 1.5); // ~ 15.7496
        CHECK(std::abs(mean - target) < 3 * sigma);
        CHECK(target == doctest::Approx(15.7496).epsilon(1e-4));
    }

    SUBCASE("invalid beta") {
        CHECK_THROWS_AS(sample_maxwellian(0.0, rng), ParameterError);
        CHECK_THROWS_AS(sample_maxwellian(-1.0, rng), ParameterError);
    }
}

TEST_CASE("exclusion indicator") {
    const Domain dom = Domain::free_space();
    const double eps = 0.1;
    std::vector<Particle> two{{{0, 0, 0}, {}}, {{2 * eps, 0, 0}, {}}};
    CHECK(exclusion_indicator(two, eps, dom));
    two[1].x = {eps / 2, 0, 0};
    CHECK_FALSE(exclusion_indicator(two, eps, dom));
    std::vector<Particle> one{{{0, 0, 0}, {}}};
    CHECK(exclusion_indicator(one, eps, dom));
    CHECK(exclusion_indicator({}, eps, dom));
}

TEST_CASE("torus metric properties") {
    const Domain dom = Domain::torus({1.0, 1.5, 0.7});
    RngStream rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec3 a{rng.uniform() * 3 - 1, rng.uniform() * 3 - 1, rng.uniform() * 3 - 1};
        const Vec3 b{rng.uniform() * 3 - 1, rng.uniform() * 3 - 1, rng.uniform() * 3 - 1};
        const Vec3 c{rng.uniform() * 3 - 1, rng.uniform() * 3 - 1, rng.uniform() * 3 - 1};
        CHECK(dom.distance(a, b) <= norm(b - a) + 1e-12);
        CHECK(dom.distance(a, b) == doctest::Approx(dom.distance(b, a)));
        CHECK(dom.distance(a, c) <= dom.distance(a, b) + dom.distance(b, c) + 1e-12);
    }
}

TEST_CASE("configuration invariants") {
    const Domain dom = Domain::unit_torus();
    CHECK_THROWS_AS(Configuration({{{0.1, 0, 0}, {}}, {{0.14, 0, 0}, {}}}, 0.1, dom),
                    ParameterError);
    // closed contact is admissible
    Configuration touching({{{0.1, 0.5, 0.5}, {}}, {{0.2, 0.5, 0.5}, {}}}, 0.1, dom);
    CHECK(touching.min_pair_distance() == doctest::Approx(0.1));
    const double nan = std::nan("");
    CHECK_THROWS_AS(Configuration({{{nan, 0, 0}, {}}}, 0.1, dom), ParameterError);
}

TEST_CASE("sim params json round trip") {
    SimParams p;
    p.epsilon = 0.05;
    p.z = 1.25;
    p.beta = 2.0;
    p.seed = 99;
    p.domain = Domain::torus({1, 2, 3});
    CHECK(p.mu_eps() == doctest::Approx(400.0));

    nlohmann::json j;
    to_json(j, p);
    SimParams q;
    from_json(j, q);
    CHECK(q.epsilon == p.epsilon);
    CHECK(q.z == p.z);
    CHECK(q.beta == p.beta);
    CHECK(q.seed == p.seed);
    CHECK(q.domain.L.z == 3.0);
    // Boltzmann-Grad coupling: mu eps^2 = 1/lambda
    CHECK(q.mu_eps() * q.epsilon * q.epsilon == doctest::Approx(1.0 / q.lambda_mfp));
}

TEST_CASE("initial density integrates to one and samples correctly") {
    RngStream rng(3);
    const Domain dom = Domain::unit_torus();

    SUBCASE("sine profile moment") {
        const InitialDensity d = InitialDensity::torus_sine(dom, 1.0, 0.6);
        // E[sin(2 pi x)] under (1 + a sin(2 pi x)) is a/2
        double acc = 0;
        const long long N = 200000;
        for (long long i = 0; i < N; ++i)
            acc += std::sin(2 * M_PI * d.sample(rng).x.x);
        const double sigma = 1.0 / std::sqrt(2.0 * static_cast<double>(N)); // var <= 1/2
        CHECK(std::abs(acc / N - 0.3) < 4 * sigma);
    }

    SUBCASE("phase space normalization by monte carlo") {
        const InitialDensity d = InitialDensity::torus_sine(dom, 2.0, 0.4);
        // importance sample x uniform, v maxwellian(1): E[f0 / q] = 1
        double acc = 0, acc2 = 0;
        const long long N = 100000;
        const double qnorm = std::pow(1.0 / (2 * M_PI), 1.5);
        for (long long i = 0; i < N; ++i) {
            const Vec3 x{rng.uniform(), rng.uniform(), rng.uniform()};
            const Vec3 v = sample_maxwellian(1.0, rng);
            const double q = qnorm * std::exp(-0.5 * norm2(v));
            const double w = d.value(x, v) / q;
            acc += w;
            acc2 += w * w;
        }
        const double mean = acc / N;
        const double sigma = std::sqrt((acc2 / N - mean * mean) / N);
        CHECK(std::abs(mean - 1.0) < 3.5 * sigma);
    }

    SUBCASE("free space box support") {
        const InitialDensity d = InitialDensity::free_space_box({0, 0, 0}, {2, 1, 1}, 1.0);
        CHECK(d.value({3, 0.5, 0.5}, {}) == 0.0);
        CHECK(d.spatial_density({1, 0.5, 0.5}) == doctest::Approx(0.5));
        for (int i = 0; i < 100; ++i) {
            const Particle p = d.sample(rng);
            CHECK(p.x.x >= 0);
            CHECK(p.x.x <= 2);
        }
    }
}

TEST_CASE("rng streams split independently") {
    RngStream root(5);
    RngStream a = root.split(0);
    RngStream b = root.split(1);
    CHECK(a.next_u64() != b.next_u64());
    // reproducibility
    RngStream a2 = RngStream(5).split(0);
    a2.next_u64();
    RngStream a3 = RngStream(5).split(0);
    CHECK(a3.next_u64() == RngStream(5).split(0).next_u64());
}
