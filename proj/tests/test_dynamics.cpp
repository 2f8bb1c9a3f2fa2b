#include "doctest.h"

#include <cmath>

#include "hsk/dynamics.hpp"
#include "hsk/random.hpp"

using namespace hsk;

namespace {

// independent root finder for |dx + dv s| = eps: scan + bisection
double bisect_contact(const Vec3& dx, const Vec3& dv, double eps, double t_max) {
    auto dist = [&](double s) { return norm(dx + dv * s) - eps; };
    const int steps = 200000;
    double prev = dist(0);
    for (int i = 1; i <= steps; ++i) {
        const double s = t_max * i / steps;
        const double d = dist(s);
        if (prev > 0 && d <= 0) {
            double lo = t_max * (i - 1) / steps, hi = s;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                (dist(mid) > 0 ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }
        prev = d;
    }
    return -1;
}

Configuration random_gas(int n, double eps, const Domain& dom, RngStream& rng, double beta = 1.0) {
    std::vector<Particle> ps;
    while (static_cast<int>(ps.size()) < n) {
        Particle p{{rng.uniform() * dom.L.x, rng.uniform() * dom.L.y, rng.uniform() * dom.L.z},
                   sample_maxwellian(beta, rng)};
        bool ok = true;
        for (const auto& q : ps)
            if (dom.distance(p.x, q.x) <= eps * 1.001) ok = false;
        if (ok) ps.push_back(p);
    }
    return Configuration(std::move(ps), eps, dom);
}

} // namespace

TEST_CASE("collide examples") {
    SUBCASE("head-on exchange") {
        auto [v, v1] = collide({1, 0, 0}, {0, 0, 0}, {1, 0, 0});
        CHECK(v == Vec3{0, 0, 0});
        CHECK(v1 == Vec3{1, 0, 0});
    }
    SUBCASE("grazing leaves velocities unchanged") {
        auto [v, v1] = collide({0, 1, 0}, {0, 0, 0}, {1, 0, 0});
        CHECK(v == Vec3{0, 1, 0});
        CHECK(v1 == Vec3{0, 0, 0});
    }
    SUBCASE("oblique case by hand") {
        auto [v, v1] = collide({1, 1, 0}, {0, 0, 0}, {1, 0, 0});
        CHECK(v == Vec3{0, 1, 0});
        CHECK(v1 == Vec3{1, 0, 0});
    }
    SUBCASE("involution and conservation") {
        RngStream rng(11);
        for (int i = 0; i < 500; ++i) {
            const Vec3 a = sample_maxwellian(1.0, rng), b = sample_maxwellian(1.0, rng);
            const Vec3 w = rng.unit_sphere();
            auto [a1, b1] = collide(a, b, w);
            auto [a2, b2] = collide(a1, b1, w);
            CHECK(norm(a2 - a) < 1e-15 * (1 + norm(a)));
            CHECK(norm(b2 - b) < 1e-15 * (1 + norm(b)));
            CHECK(norm(a1 + b1 - a - b) < 1e-12 * (norm(a) + norm(b)));
            CHECK(std::abs(norm2(a1) + norm2(b1) - norm2(a) - norm2(b)) <
                  1e-12 * (norm2(a) + norm2(b) + 1));
        }
    }
    SUBCASE("non-unit omega rejected") {
        CHECK_THROWS_AS(collide({1, 0, 0}, {0, 0, 0}, {2, 0, 0}), ParameterError);
    }
}

TEST_CASE("time to contact") {
    const double eps = 0.1;
    SUBCASE("head-on") {
        const double d = 0.7, u = 1.3;
        auto s = time_to_contact(Particle{{0, 0, 0}, {u, 0, 0}}, Particle{{d, 0, 0}, {0, 0, 0}},
                                 eps);
        REQUIRE(s.has_value());
        CHECK(*s == doctest::Approx((d - eps) / u).epsilon(1e-12));
    }
    SUBCASE("zero relative velocity") {
        auto s = time_to_contact(Particle{{0, 0, 0}, {1, 2, 3}}, Particle{{1, 0, 0}, {1, 2, 3}},
                                 eps);
        CHECK_FALSE(s.has_value());
    }
    SUBCASE("overlapping input is an error") {
        CHECK_THROWS_AS(
            time_to_contact(Particle{{0, 0, 0}, {}}, Particle{{eps / 2, 0, 0}, {}}, eps),
            ParameterError);
    }
    SUBCASE("agrees with bisection oracle") {
        RngStream rng(23);
        int found = 0;
        for (int trial = 0; trial < 400; ++trial) {
            const Vec3 dx{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            if (norm(dx) <= 2 * eps) continue;
            // aim roughly at the target so a good share of trials connect
            const Vec3 aim = dx * (-(0.5 + rng.uniform()) / norm(dx));
            const Vec3 dv = aim + 0.05 * sample_maxwellian(1.0, rng);
            auto s = time_to_contact(dx, dv, eps);
            const double oracle = bisect_contact(dx, dv, eps, 5.0);
            if (s.has_value() && *s <= 5.0) {
                REQUIRE(oracle >= 0);
                CHECK(std::abs(*s - oracle) < 1e-10);
                ++found;
            } else {
                CHECK(oracle < 0);
            }
        }
        CHECK(found >= 100);
    }
}

TEST_CASE("evolve basics") {
    const Domain dom = Domain::free_space();

    SUBCASE("t = 0 is the identity") {
        Configuration cfg({{{0, 0, 0}, {1, 0, 0}}, {{1, 0, 0}, {0, 1, 0}}}, 0.1, dom);
        const Trajectory traj = evolve(cfg, 0.0);
        CHECK(traj.events().empty());
        CHECK(traj.final_particles()[0].x == cfg.particles()[0].x);
    }

    SUBCASE("head-on pair exchanges velocities") {
        const double d = 0.8, u = 1.0, eps = 0.1;
        Configuration cfg({{{0, 0, 0}, {u, 0, 0}}, {{d, 0, 0}, {0, 0, 0}}}, eps, dom);
        const Trajectory traj = evolve(cfg, 1.0);
        REQUIRE(traj.events().size() == 1);
        CHECK(traj.events()[0].time == doctest::Approx((d - eps) / u));
        CHECK(norm(traj.final_particles()[0].v - Vec3{0, 0, 0}) < 1e-12);
        CHECK(norm(traj.final_particles()[1].v - Vec3{u, 0, 0}) < 1e-12);
    }

    SUBCASE("simultaneous triple contact raises") {
        const double eps = 0.1;
        Configuration cfg({{{-1, 0, 0}, {1, 0, 0}},
                           {{0, 0, 0}, {0, 0, 0}},
                           {{1, 0, 0}, {-1, 0, 0}}},
                          eps, dom);
        CHECK_THROWS_AS(evolve(cfg, 2.0), SingularEventError);
    }
}

TEST_CASE("evolve agrees with a time-driven oracle") {
    // small-step integrator with overlap bisection as an independent check
    const Domain dom = Domain::unit_torus();
    RngStream rng(31);
    const double eps = 0.12;
    Configuration cfg = random_gas(10, eps, dom, rng);
    const double t = 0.25;

    std::vector<Particle> oracle = cfg.particles();
    {
        const double dt = 1e-5;
        double now = 0;
        while (now < t) {
            const double step = std::min(dt, t - now);
            // detect earliest contact within the step, pair by pair
            double first = step;
            int ci = -1, cj = -1;
            for (std::size_t i = 0; i < oracle.size(); ++i)
                for (std::size_t j = i + 1; j < oracle.size(); ++j) {
                    const Vec3 dx = dom.displacement(oracle[i].x, oracle[j].x);
                    const Vec3 dv = oracle[j].v - oracle[i].v;
                    const double c = norm2(dx) - eps * eps;
                    const double b = 2 * dot(dx, dv);
                    if (b >= 0) continue;
                    const double a = norm2(dv);
                    const double disc = b * b - 4 * a * std::max(c, 0.0);
                    if (disc <= 0) continue;
                    const double s = 2 * std::max(c, 0.0) / (-b + std::sqrt(disc));
                    if (s < first) {
                        first = s;
                        ci = static_cast<int>(i);
                        cj = static_cast<int>(j);
                    }
                }
            for (auto& p : oracle) p.x += p.v * first;
            now += first;
            if (ci >= 0 && first < step) {
                const Vec3 d = dom.displacement(oracle[static_cast<std::size_t>(cj)].x,
                                                oracle[static_cast<std::size_t>(ci)].x);
                const Vec3 omega = d * (1.0 / norm(d));
                auto [vi, vj] = collide(oracle[static_cast<std::size_t>(ci)].v,
                                        oracle[static_cast<std::size_t>(cj)].v, omega);
                oracle[static_cast<std::size_t>(ci)].v = vi;
                oracle[static_cast<std::size_t>(cj)].v = vj;
            }
        }
    }

    const Trajectory traj = evolve(cfg, t);
    const auto& fin = traj.final_particles();
    for (std::size_t i = 0; i < fin.size(); ++i) {
        CHECK(dom.distance(fin[i].x, oracle[i].x) < 1e-6);
        CHECK(norm(fin[i].v - oracle[i].v) < 1e-6);
    }
    CHECK(!traj.events().empty());
}

TEST_CASE("conservation and reversibility") {
    const Domain dom = Domain::unit_torus();
    RngStream rng(37);
    const double eps = 0.15;
    Configuration cfg = random_gas(18, eps, dom, rng);

    SUBCASE("momentum and energy at every event") {
        const Trajectory traj = evolve(cfg, 1.0);
        REQUIRE(traj.events().size() > 10);
        for (const auto& e : traj.events()) {
            const Vec3 dp = e.post_v_i + e.post_v_j - e.pre_v_i - e.pre_v_j;
            const double de =
                norm2(e.post_v_i) + norm2(e.post_v_j) - norm2(e.pre_v_i) - norm2(e.pre_v_j);
            const double scale = norm(e.pre_v_i) + norm(e.pre_v_j) + 1;
            CHECK(norm(dp) < 1e-12 * scale);
            CHECK(std::abs(de) < 1e-12 * scale * scale);
        }
    }

    SUBCASE("forward-backward recovers the initial state") {
        const double t = 1.0;
        const Trajectory fwd = evolve(cfg, t);
        CHECK(fwd.events().size() <= 100);
        std::vector<Particle> rev = fwd.final_particles();
        for (auto& p : rev) p.v = -p.v;
        const Trajectory back = evolve(Configuration(rev, eps, dom), t);
        auto fin = back.final_particles();
        for (auto& p : fin) p.v = -p.v;
        for (std::size_t i = 0; i < fin.size(); ++i) {
            CHECK(dom.distance(fin[i].x, cfg.particles()[i].x) < 1e-8);
            CHECK(norm(fin[i].v - cfg.particles()[i].v) < 1e-8);
        }
    }

    SUBCASE("negative horizon is the velocity-reversed flow") {
        const Trajectory fwd = evolve(cfg, 0.4);
        std::vector<Particle> end = fwd.final_particles();
        const Trajectory back = evolve(Configuration(end, eps, dom), -0.4);
        const auto& fin = back.final_particles();
        for (std::size_t i = 0; i < fin.size(); ++i) {
            CHECK(dom.distance(fin[i].x, cfg.particles()[i].x) < 1e-8);
            CHECK(norm(fin[i].v - cfg.particles()[i].v) < 1e-8);
        }
    }

    SUBCASE("exclusion holds along the trajectory") {
        const Trajectory traj = evolve(cfg, 0.6);
        for (double s = 0.0; s <= 0.6; s += 0.6 / 200) {
            const auto st = traj.state_at(s);
            double dmin = HUGE_VAL;
            for (std::size_t i = 0; i + 1 < st.size(); ++i)
                for (std::size_t j = i + 1; j < st.size(); ++j)
                    dmin = std::min(dmin, dom.distance(st[i].x, st[j].x));
            CHECK(dmin >= eps - 1e-9);
        }
    }
}

TEST_CASE("torus collision through the boundary") {
    const Domain dom = Domain::unit_torus();
    const double eps = 0.1;
    // approach across the periodic face x = 0: separation through the
    // boundary is 0.15, so contact after moving 0.05 at unit speed
    Configuration cfg({{{0.075, 0.5, 0.5}, {-1, 0, 0}}, {{0.925, 0.5, 0.5}, {0, 0, 0}}}, eps,
                      dom);
    const Trajectory traj = evolve(cfg, 0.2);
    REQUIRE(traj.events().size() == 1);
    CHECK(traj.events()[0].time == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(norm(traj.final_particles()[0].v - Vec3{0, 0, 0}) < 1e-12);
}

TEST_CASE("trajectory export") {
    const Domain dom = Domain::free_space();
    Configuration cfg({{{0, 0, 0}, {1, 0, 0}}, {{0.8, 0, 0}, {0, 0, 0}}}, 0.1, dom);
    const Trajectory traj = evolve(cfg, 1.0);
    const std::string json = traj.events_json();
    CHECK(json.find("omega") != std::string::npos);
    const std::string csv = traj.snapshots_csv({0.0, 0.5, 1.0});
    CHECK(csv.find("time,particle") != std::string::npos);
}
