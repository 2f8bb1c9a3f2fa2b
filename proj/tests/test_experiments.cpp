#include "doctest.h"

#include "hsk/experiments.hpp"

using namespace hsk;

namespace {

ExperimentSpec small_spec() {
    ExperimentSpec s;
    s.name = "unit";
    s.base.domain = Domain::unit_torus();
    s.epsilon_grid = {0.1, 0.05};
    s.horizon = 0.3;
    s.configs_per_epsilon = 400;
    s.flows_per_epsilon = 4000;
    s.buckets = 8;
    s.cells_per_axis = 8;
    s.theta = 0.2;
    s.seed = 77;
    s.threads = 2;
    s.n_max = 1;
    s.samples_per_tree = 200;
    s.point_samples = 400;
    return s;
}

} // namespace

TEST_CASE("experiment spec validation") {
    ExperimentSpec s = small_spec();
    s.epsilon_grid = {0.05, 0.1};
    CHECK_THROWS_AS(s.validate(), ParameterError);
    s = small_spec();
    s.theta = 0.3;
    CHECK_THROWS_AS(s.validate(), ParameterError);
    s = small_spec();
    s.configs_per_epsilon = 4;
    CHECK_THROWS_AS(s.validate(), ParameterError);
}

TEST_CASE("reports are bit reproducible from the seed") {
    const ExperimentSpec s = small_spec();
    const Report a = run_recollision_scan(s);
    const Report b = run_recollision_scan(s);
    CHECK(a.to_json() == b.to_json());

    ExperimentSpec s2 = small_spec();
    s2.threads = 1; // thread count must not change the numbers
    const Report c = run_recollision_scan(s2);
    CHECK(a.to_json() == c.to_json());
}

TEST_CASE("chaos scan smoke run produces the expected rows") {
    ExperimentSpec s = small_spec();
    const Report rep = run_chaos_scan(s);
    for (double eps : s.epsilon_grid) {
        CHECK(rep.row(eps, "f1").mean > 0.5);
        CHECK(rep.row(eps, "f1").mean < 1.5);
        rep.row(eps, "E2"); // present
        rep.row(eps, "f2_over_f1f1");
    }
    CHECK(!rep.verdicts.empty());
    for (const auto& v : rep.verdicts) CHECK(!v.rule.empty());
    // csv and manifest render
    CHECK(rep.to_csv().find("epsilon,name") == 0);
    CHECK(rep.manifest_json(s).find("spec_hash") != std::string::npos);
}

TEST_CASE("separation failures are parameter errors") {
    ExperimentSpec s = small_spec();
    s.cells_per_axis = 2;        // giant cells
    s.epsilon_grid = {0.9, 0.8}; // delta close to 1: nothing is separated
    s.theta = 0.01;
    CHECK_THROWS_AS(run_chaos_scan(s), ParameterError);
}

TEST_CASE("fluctuation moment identity on a small run") {
    ExperimentSpec s = small_spec();
    s.configs_per_epsilon = 800;
    const Report rep = run_fluctuation_moments(s);
    for (double eps : s.epsilon_grid) {
        // the two full-ensemble routes are algebraically identical
        CHECK(rep.row(eps, "direct_j2").mean ==
              doctest::Approx(rep.row(eps, "cumulant_j2").mean).epsilon(1e-9));
    }
}
