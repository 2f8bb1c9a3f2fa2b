#include "doctest.h"

#include <cmath>

#include "hsk/correlation.hpp"
#include "hsk/sampler.hpp"

using namespace hsk;

namespace {

GrandCanonicalSpec make_spec(double epsilon, double beta = 1.0) {
    SimParams p;
    p.epsilon = epsilon;
    p.beta = beta;
    p.domain = Domain::unit_torus();
    return GrandCanonicalSpec(p, InitialDensity::torus_uniform(p.domain, beta));
}

std::vector<ParticleSet> draw_ensemble(const GrandCanonicalSpec& spec, long long count,
                                       SamplerMode mode, RngStream& rng) {
    std::vector<ParticleSet> out;
    out.reserve(static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) out.push_back(sample_points(spec, rng, mode));
    return out;
}

} // namespace

TEST_CASE("poisson control reproduces factorial moments") {
    const GrandCanonicalSpec spec = make_spec(0.2); // mu = 25
    RngStream rng(101);
    const long long M = 100000;
    const auto ens = draw_ensemble(spec, M, SamplerMode::NoExclusion, rng);
    const double mu = spec.params.mu_eps();
    for (int j = 1; j <= 3; ++j) {
        const EstimatorResult m = factorial_moment(ens, j);
        const double target = std::pow(mu, j); // Poisson factorial moments
        CHECK(std::abs(m.mean - target) < 3.5 * m.stderr_);
    }
}

TEST_CASE("two-body acceptance matches the excluded volume") {
    SimParams p;
    p.epsilon = 0.2;
    p.domain = Domain::unit_torus();
    p.lambda_mfp = 1.0 / (2.0 * p.epsilon * p.epsilon); // mu = 2: n = 2 is common
    const GrandCanonicalSpec spec(p, InitialDensity::torus_uniform(p.domain, 1.0));
    CHECK(spec.params.mu_eps() == doctest::Approx(2.0));

    RngStream rng(103);
    const AcceptanceProbe probe = probe_acceptance(spec, rng, 200000, 2);
    REQUIRE(probe.trials > 10000);
    const double target = 1.0 - 4.0 / 3.0 * M_PI * std::pow(p.epsilon, 3);
    const double sigma = std::sqrt(target * (1 - target) / static_cast<double>(probe.trials));
    CHECK(std::abs(probe.rate() - target) < 3 * sigma);
}

TEST_CASE("partial resampling agrees with full rejection at low intensity") {
    SimParams p;
    p.epsilon = 0.22;
    p.domain = Domain::unit_torus();
    p.lambda_mfp = 1.0 / (4.0 * p.epsilon * p.epsilon); // mu = 4
    const GrandCanonicalSpec spec(p, InitialDensity::torus_uniform(p.domain, 1.0));

    RngStream rng(107);
    const long long M = 20000;
    const auto full = draw_ensemble(spec, M, SamplerMode::FullRejection, rng);
    const auto prs = draw_ensemble(spec, M, SamplerMode::PartialResampling, rng);

    for (int j = 1; j <= 2; ++j) {
        const EstimatorResult a = factorial_moment(full, j);
        const EstimatorResult b = factorial_moment(prs, j);
        CHECK(gap_in_sigmas(a, b) < 4.0);
    }

    // exclusion always holds, and the pair statistics agree: compare the
    // mean number of pairs closer than 1.5 eps
    auto close_pairs = [&](const std::vector<ParticleSet>& ens) {
        Accumulator acc;
        for (const auto& ps : ens) {
            long long c = 0;
            for (std::size_t i = 0; i + 1 < ps.size(); ++i)
                for (std::size_t k = i + 1; k < ps.size(); ++k)
                    if (p.domain.distance(ps[i].x, ps[k].x) < 1.5 * p.epsilon) ++c;
            acc.add(static_cast<double>(c));
        }
        return acc.result();
    };
    CHECK(gap_in_sigmas(close_pairs(full), close_pairs(prs)) < 4.0);

    for (const auto& ps : prs) CHECK(exclusion_indicator(ps, p.epsilon * 0.999999, p.domain));
}

TEST_CASE("full rejection reports hopeless densities") {
    const GrandCanonicalSpec spec = make_spec(0.05); // mu = 400, acceptance ~ e^{-80}
    RngStream rng(109);
    CHECK_THROWS_AS(sample_state(spec, rng, SamplerMode::FullRejection), DensityTooHighError);
}

TEST_CASE("sample_state rejects the control mode") {
    const GrandCanonicalSpec spec = make_spec(0.2);
    RngStream rng(111);
    CHECK_THROWS_AS(sample_state(spec, rng, SamplerMode::NoExclusion), ParameterError);
}

TEST_CASE("one point function estimate") {
    const double eps = 0.05;
    const GrandCanonicalSpec spec = make_spec(eps);
    RngStream rng(113);
    const long long M = 4000;
    const auto ens = draw_ensemble(spec, M, SamplerMode::PartialResampling, rng);

    PhaseCell cell;
    cell.xlo = {0.1, 0.1, 0.1};
    cell.xhi = {0.5, 0.5, 0.5};
    const EmpiricalCorrelation f1 = estimate_rcf(ens, 1, {cell}, eps, spec.params.domain);
    const EstimatorResult r = f1.at({0});
    // spatially uniform state: velocity-integrated f1 is the unit density, up
    // to the O(eps) excluded-volume depletion
    CHECK(std::abs(r.mean - 1.0) < 3 * r.stderr_ + 5 * eps);
    CHECK(r.mean < 1.0 + 3 * r.stderr_);
}

TEST_CASE("pair factorization without exclusion") {
    const double eps = 0.1;
    const GrandCanonicalSpec spec = make_spec(eps);
    RngStream rng(117);
    const long long M = 30000;
    const auto ens = draw_ensemble(spec, M, SamplerMode::NoExclusion, rng);

    PhaseCell c1, c2;
    c1.xlo = {0.0, 0.0, 0.0};
    c1.xhi = {0.4, 0.4, 0.4};
    c2.xlo = {0.5, 0.5, 0.5};
    c2.xhi = {0.9, 0.9, 0.9};

    const EmpiricalCorrelation f2 = estimate_rcf(ens, 2, {c1, c2}, eps, spec.params.domain);
    const EmpiricalCorrelation f1 = estimate_rcf(ens, 1, {c1, c2}, eps, spec.params.domain);
    const double prod = f1.at({0}).mean * f1.at({1}).mean;
    const double sig = std::hypot(f2.at({0, 1}).stderr_,
                                  prod * std::hypot(f1.at({0}).stderr_ / f1.at({0}).mean,
                                                    f1.at({1}).stderr_ / f1.at({1}).mean));
    CHECK(std::abs(f2.at({0, 1}).mean - prod) < 3 * sig);

    // permutation symmetry within statistical error
    CHECK(gap_in_sigmas(f2.at({0, 1}), f2.at({1, 0})) < 3.0);

    // the poisson control has vanishing pair error
    const ErrorTableEstimate E =
        estimate_initial_error(ens, 2, {c1, c2}, eps, spec.params.domain);
    CHECK(std::abs(E.values[3]) < 3.5 * E.stderrs[3]);
    CHECK(E.values[1] == doctest::Approx(0.0).epsilon(1e-14)); // E_1 = 0 by construction
}

TEST_CASE("pair error with exclusion: sign, separation decay, trend") {
    RngStream rng(119);
    const Domain dom = Domain::unit_torus();

    // adjacent cells feel the exclusion: negative pair error that shrinks
    // with epsilon
    auto adjacent_E2 = [&](double eps, long long M) {
        const GrandCanonicalSpec spec = make_spec(eps);
        const auto ens = draw_ensemble(spec, M, SamplerMode::PartialResampling, rng);
        PhaseCell c1, c2;
        c1.xlo = {0.0, 0.0, 0.0};
        c1.xhi = {0.25, 0.5, 0.5};
        c2.xlo = {0.25, 0.0, 0.0};
        c2.xhi = {0.5, 0.5, 0.5};
        return estimate_initial_error(ens, 2, {c1, c2}, eps, dom);
    };

    const ErrorTableEstimate big = adjacent_E2(0.10, 30000);
    const ErrorTableEstimate mid = adjacent_E2(0.05, 12000);
    const ErrorTableEstimate small = adjacent_E2(0.025, 3000);
    CHECK(big.values[3] < 0.0);
    // halving scan: strictly decreasing magnitudes, endpoints clearly apart
    CHECK(std::abs(big.values[3]) > std::abs(mid.values[3]));
    CHECK(std::abs(mid.values[3]) > std::abs(small.values[3]));
    CHECK(std::abs(big.values[3]) - std::abs(mid.values[3]) >
          combined_sigma(big.stderrs[3], mid.stderrs[3]));
    CHECK(std::abs(big.values[3]) - std::abs(small.values[3]) >
          2.5 * combined_sigma(big.stderrs[3], small.stderrs[3]));

    // distant cells are uncorrelated at time zero within noise
    const GrandCanonicalSpec spec = make_spec(0.1);
    const auto ens = draw_ensemble(spec, 4000, SamplerMode::PartialResampling, rng);
    PhaseCell c1, c2;
    c1.xlo = {0.0, 0.0, 0.0};
    c1.xhi = {0.2, 0.2, 0.2};
    c2.xlo = {0.5, 0.5, 0.5};
    c2.xhi = {0.7, 0.7, 0.7};
    const ErrorTableEstimate far = estimate_initial_error(ens, 2, {c1, c2}, 0.1, dom);
    CHECK(std::abs(far.values[3]) < 4 * far.stderrs[3]);
}

TEST_CASE("delta method errors validated by bootstrap") {
    const double eps = 0.12;
    const GrandCanonicalSpec spec = make_spec(eps);
    RngStream rng(127);
    const auto ens = draw_ensemble(spec, 2500, SamplerMode::PartialResampling, rng);
    PhaseCell c1, c2;
    c1.xlo = {0.0, 0.0, 0.0};
    c1.xhi = {0.3, 0.6, 0.6};
    c2.xlo = {0.3, 0.0, 0.0};
    c2.xhi = {0.6, 0.6, 0.6};
    const ErrorTableEstimate E = estimate_initial_error(ens, 2, {c1, c2}, eps, spec.params.domain);
    const CumulantTable boot =
        bootstrap_error_table(ens, 2, {c1, c2}, eps, spec.params.domain, 200, rng);
    for (std::uint32_t S : {1u, 2u, 3u}) {
        if (E.stderrs[S] == 0.0) continue;
        const double ratio = boot[S] / E.stderrs[S];
        CHECK(ratio > 0.6);
        CHECK(ratio < 1.6);
    }
}

TEST_CASE("factorial moment consistency through tuple counting") {
    const GrandCanonicalSpec spec = make_spec(0.15);
    RngStream rng(131);
    const auto ens = draw_ensemble(spec, 3000, SamplerMode::PartialResampling, rng);

    // partition the torus into 8 octants; summing ordered tuple counts over
    // all cell tuples (with repetition) must reproduce n(n-1)...(n-j+1)
    std::vector<PhaseCell> cells;
    for (int ix = 0; ix < 2; ++ix)
        for (int iy = 0; iy < 2; ++iy)
            for (int iz = 0; iz < 2; ++iz) {
                PhaseCell c;
                c.xlo = {0.5 * ix, 0.5 * iy, 0.5 * iz};
                c.xhi = {0.5 * (ix + 1), 0.5 * (iy + 1), 0.5 * (iz + 1)};
                cells.push_back(c);
            }

    for (int j = 1; j <= 3; ++j) {
        Accumulator via_cells;
        for (const auto& ps : ens) {
            const auto counts = cell_counts(ps, cells, spec.params.domain);
            double total = 0;
            std::vector<int> tuple(static_cast<std::size_t>(j), 0);
            const auto rec = [&](auto&& self, int depth) -> void {
                if (depth == j) {
                    total += ordered_tuple_count(counts, tuple);
                    return;
                }
                for (int c = 0; c < 8; ++c) {
                    tuple[static_cast<std::size_t>(depth)] = c;
                    self(self, depth + 1);
                }
            };
            rec(rec, 0);
            via_cells.add(total);
        }
        const EstimatorResult direct = factorial_moment(ens, j);
        CHECK(via_cells.mean() == doctest::Approx(direct.mean).epsilon(1e-12));
    }
}

TEST_CASE("overlapping cells are rejected") {
    const GrandCanonicalSpec spec = make_spec(0.2);
    RngStream rng(133);
    const auto ens = draw_ensemble(spec, 10, SamplerMode::PartialResampling, rng);
    PhaseCell c1, c2;
    c1.xlo = {0, 0, 0};
    c1.xhi = {0.5, 0.5, 0.5};
    c2.xlo = {0.25, 0.25, 0.25};
    c2.xhi = {0.75, 0.75, 0.75};
    CHECK_THROWS_AS(estimate_rcf(ens, 2, {c1, c2}, 0.2, spec.params.domain), ParameterError);
}
