#include "hsk/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hsk/dynamics.hpp"
#include "hsk/flows.hpp"
#include "hsk/parallel.hpp"

namespace hsk {

void ExperimentSpec::validate() const {
    base.validate();
    if (epsilon_grid.empty()) throw ParameterError("ExperimentSpec: empty epsilon grid");
    for (std::size_t i = 0; i + 1 < epsilon_grid.size(); ++i)
        if (!(epsilon_grid[i] > epsilon_grid[i + 1]))
            throw ParameterError("ExperimentSpec: epsilon grid must be strictly decreasing");
    if (!(theta > 0.0 && theta < 0.25))
        throw ParameterError("ExperimentSpec: theta must lie in (0, 1/4)");
    if (!(horizon > 0.0)) throw ParameterError("ExperimentSpec: horizon must be > 0");
    if (buckets < 8) throw ParameterError("ExperimentSpec: need at least 8 buckets");
    if (configs_per_epsilon < buckets)
        throw ParameterError("ExperimentSpec: fewer configurations than buckets");
}

// ---------------------------------------------------------------------------
// Report plumbing

bool Report::all_pass() const {
    for (const auto& v : verdicts)
        if (!v.pass) return false;
    return true;
}

const EstimatorResult& Report::row(double epsilon, const std::string& name) const {
    for (const auto& r : rows)
        if (r.epsilon == epsilon && r.name == name) return r.est;
    throw ParameterError("Report::row: no such row " + name);
}

std::string Report::to_csv() const {
    std::ostringstream os;
    os.precision(12);
    os << "epsilon,name,mean,stderr,n_samples\n";
    for (const auto& r : rows)
        os << r.epsilon << ',' << r.name << ',' << r.est.mean << ',' << r.est.stderr_ << ','
           << r.est.n_samples << '\n';
    for (const auto& s : slopes)
        os << ",slope:" << s.name << ',' << s.ci.slope << ',' << 0.5 * (s.ci.hi - s.ci.lo) << ",\n";
    for (const auto& v : verdicts)
        os << ",verdict:" << v.rule << ',' << (v.pass ? 1 : 0) << ",,\n";
    return os.str();
}

std::string Report::to_json() const {
    nlohmann::json j;
    j["experiment"] = experiment;
    j["seed"] = seed;
    auto rws = nlohmann::json::array();
    for (const auto& r : rows)
        rws.push_back({{"epsilon", r.epsilon},
                       {"name", r.name},
                       {"mean", r.est.mean},
                       {"stderr", r.est.stderr_},
                       {"n", r.est.n_samples}});
    j["rows"] = rws;
    auto sl = nlohmann::json::array();
    for (const auto& s : slopes)
        sl.push_back({{"name", s.name}, {"slope", s.ci.slope}, {"lo", s.ci.lo}, {"hi", s.ci.hi}});
    j["slopes"] = sl;
    auto vd = nlohmann::json::array();
    for (const auto& v : verdicts)
        vd.push_back({{"rule", v.rule}, {"pass", v.pass}, {"detail", v.detail}});
    j["verdicts"] = vd;
    j["notes"] = notes;
    return j.dump(2);
}

namespace {

nlohmann::json spec_json(const ExperimentSpec& s) {
    nlohmann::json j;
    to_json(j["base"], s.base);
    j["name"] = s.name;
    j["epsilon_grid"] = s.epsilon_grid;
    j["horizon"] = s.horizon;
    j["configs_per_epsilon"] = s.configs_per_epsilon;
    j["flows_per_epsilon"] = s.flows_per_epsilon;
    j["buckets"] = s.buckets;
    j["cells_per_axis"] = s.cells_per_axis;
    j["theta"] = s.theta;
    j["theta3"] = s.theta3;
    j["n_max"] = s.n_max;
    j["samples_per_tree"] = s.samples_per_tree;
    j["point_samples"] = s.point_samples;
    j["sine_amplitude"] = s.sine_amplitude;
    j["seed"] = s.seed;
    return j;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

std::string Report::manifest_json(const ExperimentSpec& spec) const {
    nlohmann::json j;
    j["experiment"] = experiment;
    j["version"] = "hsk 0.1.0";
    j["spec"] = spec_json(spec);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(spec_json(spec).dump())));
    j["spec_hash"] = buf;
    j["seed"] = seed;
    j["all_pass"] = all_pass();
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// shared helpers

namespace {

std::vector<PhaseCell> grid_cells(const Domain& dom, int m) {
    std::vector<PhaseCell> cells;
    cells.reserve(static_cast<std::size_t>(m) * m * m);
    for (int ix = 0; ix < m; ++ix)
        for (int iy = 0; iy < m; ++iy)
            for (int iz = 0; iz < m; ++iz) {
                PhaseCell c;
                c.xlo = {dom.L.x * ix / m, dom.L.y * iy / m, dom.L.z * iz / m};
                c.xhi = {dom.L.x * (ix + 1) / m, dom.L.y * (iy + 1) / m, dom.L.z * (iz + 1) / m};
                cells.push_back(c);
            }
    return cells;
}

std::vector<std::pair<int, int>> separated_pairs(const std::vector<PhaseCell>& cells,
                                                 double delta, const Domain& dom) {
    std::vector<std::pair<int, int>> out;
    for (int a = 0; a < static_cast<int>(cells.size()); ++a)
        for (int b = a + 1; b < static_cast<int>(cells.size()); ++b)
            if (cells[static_cast<std::size_t>(a)].spatial_distance(
                    cells[static_cast<std::size_t>(b)], dom) >= delta)
                out.emplace_back(a, b);
    return out;
}

std::vector<std::array<int, 3>> separated_triples(const std::vector<PhaseCell>& cells,
                                                  double delta, const Domain& dom,
                                                  std::size_t cap) {
    std::vector<std::array<int, 3>> out;
    const int n = static_cast<int>(cells.size());
    for (int a = 0; a < n && out.size() < cap; ++a)
        for (int b = a + 1; b < n && out.size() < cap; ++b) {
            if (cells[static_cast<std::size_t>(a)].spatial_distance(
                    cells[static_cast<std::size_t>(b)], dom) < delta)
                continue;
            for (int c = b + 1; c < n && out.size() < cap; ++c) {
                if (cells[static_cast<std::size_t>(a)].spatial_distance(
                        cells[static_cast<std::size_t>(c)], dom) < delta)
                    continue;
                if (cells[static_cast<std::size_t>(b)].spatial_distance(
                        cells[static_cast<std::size_t>(c)], dom) < delta)
                    continue;
                out.push_back({a, b, c});
            }
        }
    return out;
}

SimParams params_at(const ExperimentSpec& spec, double epsilon) {
    SimParams p = spec.base;
    p.epsilon = epsilon;
    return p;
}

/// Samples and evolves one configuration, retrying on the measure-zero
/// singular-dynamics events.
ParticleSet sample_and_evolve(const GrandCanonicalSpec& gc, double horizon, RngStream& rng) {
    for (;;) {
        try {
            Configuration cfg = sample_state(gc, rng, SamplerMode::PartialResampling);
            if (horizon == 0.0) return cfg.particles();
            return evolve(cfg, horizon).final_particles();
        } catch (const SingularEventError&) {
            // resample
        }
    }
}

EstimatorResult from_bucket_values(const std::vector<double>& vals, std::uint64_t seed) {
    Accumulator acc;
    for (double v : vals) acc.add(v);
    EstimatorResult r = acc.result(seed);
    return r;
}

std::string gap_detail(const std::vector<double>& eps, const std::vector<EstimatorResult>& est,
                       bool use_abs) {
    std::ostringstream os;
    os.precision(4);
    for (std::size_t i = 0; i + 1 < est.size(); ++i) {
        const double a = use_abs ? std::abs(est[i].mean) : est[i].mean;
        const double b = use_abs ? std::abs(est[i + 1].mean) : est[i + 1].mean;
        const double s = combined_sigma(est[i].stderr_, est[i + 1].stderr_);
        os << "eps " << eps[i] << "->" << eps[i + 1] << ": gap=" << (a - b)
           << " (" << (s > 0 ? (a - b) / s : 0.0) << " sigma); ";
    }
    return os.str();
}

bool decreasing_with_gaps(const std::vector<EstimatorResult>& est, double n_sigma, bool use_abs) {
    for (std::size_t i = 0; i + 1 < est.size(); ++i) {
        const double a = use_abs ? std::abs(est[i].mean) : est[i].mean;
        const double b = use_abs ? std::abs(est[i + 1].mean) : est[i + 1].mean;
        const double s = combined_sigma(est[i].stderr_, est[i + 1].stderr_);
        if (!(a - b > n_sigma * s)) return false;
    }
    return true;
}

int thread_count(const ExperimentSpec& spec) {
    return spec.threads > 0 ? spec.threads : default_thread_count();
}

} // namespace

// ---------------------------------------------------------------------------
// chaos scan

Report run_chaos_scan(const ExperimentSpec& spec) {
    spec.validate();
    Report rep;
    rep.experiment = spec.name + ":chaos";
    rep.seed = spec.seed;

    std::vector<EstimatorResult> e2_by_eps;
    std::vector<std::vector<double>> e2_buckets_by_eps;
    std::vector<EstimatorResult> ratio_by_eps;

    for (std::size_t ei = 0; ei < spec.epsilon_grid.size(); ++ei) {
        const double eps = spec.epsilon_grid[ei];
        const SimParams params = params_at(spec, eps);
        const Domain& dom = params.domain;
        const double delta = spec.delta(eps);
        const auto cells = grid_cells(dom, spec.cells_per_axis);
        const auto pairs = separated_pairs(cells, delta, dom);
        if (pairs.empty())
            throw ParameterError("run_chaos_scan: no delta-separated cell pairs at this epsilon");
        const auto triples = separated_triples(cells, delta, dom, 400);

        const InitialDensity f0 = InitialDensity::torus_uniform(dom, params.beta);
        const GrandCanonicalSpec gc(params, f0);

        const int B = spec.buckets;
        const long long per_bucket = spec.configs_per_epsilon / B;
        const std::size_t nc = cells.size();

        struct Bucket {
            long long n = 0;
            std::vector<double> sumN, sumPair, sumTriple;
        };
        std::vector<Bucket> buckets(static_cast<std::size_t>(B));
        for (auto& b : buckets) {
            b.sumN.assign(nc, 0.0);
            b.sumPair.assign(pairs.size(), 0.0);
            b.sumTriple.assign(triples.size(), 0.0);
        }

        parallel_for(static_cast<std::size_t>(B), thread_count(spec), [&](std::size_t bi) {
            RngStream rng =
                RngStream(spec.seed).split(1000003 * (ei + 1)).split(bi);
            Bucket& b = buckets[bi];
            for (long long c = 0; c < per_bucket; ++c) {
                const ParticleSet ps = sample_and_evolve(gc, spec.horizon, rng);
                const auto counts = cell_counts(ps, cells, dom);
                ++b.n;
                for (std::size_t k = 0; k < nc; ++k)
                    b.sumN[k] += static_cast<double>(counts[k]);
                for (std::size_t p = 0; p < pairs.size(); ++p)
                    b.sumPair[p] += static_cast<double>(counts[static_cast<std::size_t>(pairs[p].first)] *
                                                        counts[static_cast<std::size_t>(pairs[p].second)]);
                for (std::size_t q = 0; q < triples.size(); ++q)
                    b.sumTriple[q] +=
                        static_cast<double>(counts[static_cast<std::size_t>(triples[q][0])]) *
                        static_cast<double>(counts[static_cast<std::size_t>(triples[q][1])]) *
                        static_cast<double>(counts[static_cast<std::size_t>(triples[q][2])]);
            }
        });

        // per-bucket estimates
        const double vol = cells.front().volume();
        const double e2scale = std::pow(eps, 4) / (vol * vol);
        const double e4 = std::pow(eps, 4);
        std::vector<double> f1_b, e2_b, ratio_b, e3_b;
        // pair lookup for triples
        auto pair_index = [&](int a, int b2) -> int {
            for (std::size_t p = 0; p < pairs.size(); ++p)
                if ((pairs[p].first == a && pairs[p].second == b2) ||
                    (pairs[p].first == b2 && pairs[p].second == a))
                    return static_cast<int>(p);
            return -1;
        };
        std::vector<std::array<int, 3>> triple_pairs(triples.size());
        for (std::size_t q = 0; q < triples.size(); ++q)
            triple_pairs[q] = {pair_index(triples[q][0], triples[q][1]),
                               pair_index(triples[q][0], triples[q][2]),
                               pair_index(triples[q][1], triples[q][2])};

        for (const auto& b : buckets) {
            const double inv_n = 1.0 / static_cast<double>(b.n);
            double f1 = 0;
            for (double s : b.sumN) f1 += s * inv_n;
            f1_b.push_back(eps * eps * f1 / (static_cast<double>(nc) * vol));

            double e2 = 0, f2m = 0, f1f1m = 0;
            for (std::size_t p = 0; p < pairs.size(); ++p) {
                const double mNN = b.sumPair[p] * inv_n;
                const double mA = b.sumN[static_cast<std::size_t>(pairs[p].first)] * inv_n;
                const double mB = b.sumN[static_cast<std::size_t>(pairs[p].second)] * inv_n;
                e2 += e2scale * (mNN - mA * mB);
                f2m += e2scale * mNN;
                f1f1m += e2scale * mA * mB;
            }
            e2_b.push_back(e2 / static_cast<double>(pairs.size()));
            ratio_b.push_back(f2m / f1f1m);

            if (!triples.empty()) {
                double e3 = 0;
                const double e3scale = std::pow(eps, 6) / (vol * vol * vol);
                bool ok = true;
                for (std::size_t q = 0; q < triples.size(); ++q) {
                    const auto& tp = triple_pairs[q];
                    if (tp[0] < 0 || tp[1] < 0 || tp[2] < 0) {
                        ok = false;
                        break;
                    }
                    const double m1 = b.sumN[static_cast<std::size_t>(triples[q][0])] * inv_n;
                    const double m2 = b.sumN[static_cast<std::size_t>(triples[q][1])] * inv_n;
                    const double m3 = b.sumN[static_cast<std::size_t>(triples[q][2])] * inv_n;
                    const double m12 = b.sumPair[static_cast<std::size_t>(tp[0])] * inv_n;
                    const double m13 = b.sumPair[static_cast<std::size_t>(tp[1])] * inv_n;
                    const double m23 = b.sumPair[static_cast<std::size_t>(tp[2])] * inv_n;
                    const double m123 = b.sumTriple[q] * inv_n;
                    e3 += e3scale *
                          (m123 - m12 * m3 - m13 * m2 - m23 * m1 + 2.0 * m1 * m2 * m3);
                }
                if (ok) e3_b.push_back(e3 / static_cast<double>(triples.size()));
            }
        }

        rep.rows.push_back({eps, "f1", from_bucket_values(f1_b, spec.seed)});
        const EstimatorResult e2 = from_bucket_values(e2_b, spec.seed);
        rep.rows.push_back({eps, "E2", e2});
        const EstimatorResult ratio = from_bucket_values(ratio_b, spec.seed);
        rep.rows.push_back({eps, "f2_over_f1f1", ratio});
        if (!e3_b.empty()) rep.rows.push_back({eps, "E3", from_bucket_values(e3_b, spec.seed)});
        else rep.notes.push_back("E3 skipped: no delta-separated cell triples at eps=" +
                                 std::to_string(eps));
        (void)e4;

        e2_by_eps.push_back(e2);
        std::vector<double> abs_b;
        for (double v : e2_b) abs_b.push_back(v);
        e2_buckets_by_eps.push_back(abs_b);
        ratio_by_eps.push_back(ratio);
    }

    // slope of log |E2| vs log eps
    {
        RngStream rng = RngStream(spec.seed).split(777);
        rep.slopes.push_back(
            {"E2", bootstrap_loglog_slope(spec.epsilon_grid, e2_buckets_by_eps, 400, rng)});
    }

    rep.verdicts.push_back({"chaos.E2.decreasing.2sigma",
                            decreasing_with_gaps(e2_by_eps, 2.0, true),
                            gap_detail(spec.epsilon_grid, e2_by_eps, true)});
    {
        const EstimatorResult& r = ratio_by_eps.back();
        const bool pass = std::abs(r.mean - 1.0) <= 3.0 * r.stderr_;
        std::ostringstream os;
        os << "ratio=" << r.mean << " +- " << r.stderr_ << " at eps=" << spec.epsilon_grid.back();
        rep.verdicts.push_back({"chaos.factorization.3sigma", pass, os.str()});
    }
    return rep;
}

// ---------------------------------------------------------------------------
// recollision scan

Report run_recollision_scan(const ExperimentSpec& spec) {
    spec.validate();
    Report rep;
    rep.experiment = spec.name + ":recollide";
    rep.seed = spec.seed;

    std::vector<EstimatorResult> internal_by_eps, external_by_eps;
    std::vector<std::vector<double>> internal_buckets, external_buckets;

    for (std::size_t ei = 0; ei < spec.epsilon_grid.size(); ++ei) {
        const double eps = spec.epsilon_grid[ei];
        const SimParams params = params_at(spec, eps);
        const Domain& dom = params.domain;
        const double delta = spec.delta(eps);
        const double beta = params.beta;

        const int B = spec.buckets;
        const long long per_bucket = spec.flows_per_epsilon / B;
        std::vector<double> int_b(static_cast<std::size_t>(B)),
            ext0_b(static_cast<std::size_t>(B)), ext1_b(static_cast<std::size_t>(B));

        const auto internal_trees = enumerate_trees(1, 2);
        const auto external_trees_n1 = enumerate_trees(2, 1);

        parallel_for(static_cast<std::size_t>(B), thread_count(spec), [&](std::size_t bi) {
            RngStream rng = RngStream(spec.seed).split(2000003 * (ei + 1)).split(bi);
            long long hits_int = 0, hits_ext0 = 0, hits_ext1 = 0;
            for (long long c = 0; c < per_bucket; ++c) {
                // internal: single root, two creations, interacting flow
                {
                    const CollisionTree& tree =
                        internal_trees[rng.uniform() < 0.5 ? 0 : 1];
                    Particle root{{rng.uniform() * dom.L.x, rng.uniform() * dom.L.y,
                                   rng.uniform() * dom.L.z},
                                  sample_maxwellian(beta, rng)};
                    const SampledNodes sn =
                        sample_node_variables(tree, spec.horizon, beta, rng);
                    try {
                        const FlowTrace trace =
                            build_flow(FlowSpec::interacting(), tree, sn.nodes, {root}, eps, dom,
                                       spec.horizon);
                        if (chi_internal(trace)) ++hits_int;
                    } catch (const SingularEventError&) {
                        ++hits_int; // ill-defined flow counts as internal
                    }
                }
                // external: two separated roots
                Particle r1{{rng.uniform() * dom.L.x, rng.uniform() * dom.L.y,
                             rng.uniform() * dom.L.z},
                            sample_maxwellian(beta, rng)};
                Particle r2 = r1;
                do {
                    r2.x = {rng.uniform() * dom.L.x, rng.uniform() * dom.L.y,
                            rng.uniform() * dom.L.z};
                } while (dom.distance(r1.x, r2.x) <= delta);
                r2.v = sample_maxwellian(beta, rng);
                {
                    CollisionTree tree;
                    tree.j = 2;
                    const SampledNodes sn =
                        sample_node_variables(tree, spec.horizon, beta, rng);
                    const FlowTrace trace = build_flow(FlowSpec::uncorrelated(), tree, sn.nodes,
                                                       {r1, r2}, eps, dom, spec.horizon);
                    if (chi_ov(trace, {1, 2}, {1, 2})) ++hits_ext0;
                }
                {
                    const CollisionTree& tree =
                        external_trees_n1[rng.uniform() < 0.5 ? 0 : 1];
                    const SampledNodes sn =
                        sample_node_variables(tree, spec.horizon, beta, rng);
                    try {
                        const FlowTrace trace = build_flow(FlowSpec::uncorrelated(), tree,
                                                           sn.nodes, {r1, r2}, eps, dom,
                                                           spec.horizon);
                        if (chi_ov(trace, {1, 2}, {1, 2})) ++hits_ext1;
                    } catch (const SingularEventError&) {
                    }
                }
            }
            int_b[bi] = static_cast<double>(hits_int) / static_cast<double>(per_bucket);
            ext0_b[bi] = static_cast<double>(hits_ext0) / static_cast<double>(per_bucket);
            ext1_b[bi] = static_cast<double>(hits_ext1) / static_cast<double>(per_bucket);
        });

        const EstimatorResult internal = from_bucket_values(int_b, spec.seed);
        const EstimatorResult ext0 = from_bucket_values(ext0_b, spec.seed);
        rep.rows.push_back({eps, "internal_frac", internal});
        rep.rows.push_back({eps, "external_frac_n0", ext0});
        rep.rows.push_back({eps, "external_frac_n1", from_bucket_values(ext1_b, spec.seed)});
        internal_by_eps.push_back(internal);
        external_by_eps.push_back(ext0);
        internal_buckets.push_back(int_b);
        external_buckets.push_back(ext0_b);
    }

    RngStream rng = RngStream(spec.seed).split(778);
    const SlopeCI s_int =
        bootstrap_loglog_slope(spec.epsilon_grid, internal_buckets, 400, rng);
    const SlopeCI s_ext =
        bootstrap_loglog_slope(spec.epsilon_grid, external_buckets, 400, rng);
    rep.slopes.push_back({"internal_frac", s_int});
    rep.slopes.push_back({"external_frac_n0", s_ext});

    rep.verdicts.push_back({"recollide.internal.decreasing",
                            decreasing_with_gaps(internal_by_eps, 0.0, false),
                            gap_detail(spec.epsilon_grid, internal_by_eps, false)});
    rep.verdicts.push_back({"recollide.external.decreasing",
                            decreasing_with_gaps(external_by_eps, 0.0, false),
                            gap_detail(spec.epsilon_grid, external_by_eps, false)});
    {
        const bool in_window = s_int.slope >= 0.5 && s_int.slope <= 1.3;
        const bool ci_overlaps = s_int.hi >= 0.5 && s_int.lo <= 1.3;
        std::ostringstream os;
        os << "slope=" << s_int.slope << " CI=[" << s_int.lo << ", " << s_int.hi << "]";
        rep.verdicts.push_back({"recollide.internal.slope", in_window && ci_overlaps, os.str()});
    }
    return rep;
}

// ---------------------------------------------------------------------------
// fluctuation moments

namespace {

/// Two antipodal cubic cells of admissible size on the unit-ish torus.
std::vector<PhaseCell> antipodal_cells(const Domain& dom, double delta, int count) {
    // offsets with pairwise distance L/sqrt(2) (or sqrt(3)/2 L for two cells)
    static const double offs[4][3] = {
        {0.0, 0.0, 0.0}, {0.5, 0.5, 0.5}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
    const double Lmin = std::min({dom.L.x, dom.L.y, dom.L.z});
    const double point_dist = count <= 2 ? std::sqrt(3.0) * 0.5 * Lmin
                                         : std::sqrt(2.0) * 0.5 * Lmin;
    const double a = (point_dist - delta) / std::sqrt(3.0) * 0.95;
    if (!(a > 0.01 * Lmin))
        throw ParameterError("antipodal_cells: separation delta leaves no room for cells");
    std::vector<PhaseCell> cells;
    for (int i = 0; i < count; ++i) {
        PhaseCell c;
        c.xlo = {dom.L.x * offs[i][0], dom.L.y * offs[i][1], dom.L.z * offs[i][2]};
        c.xhi = c.xlo + Vec3{a, a, a};
        cells.push_back(c);
    }
    return cells;
}

} // namespace

Report run_fluctuation_moments(const ExperimentSpec& spec) {
    spec.validate();
    Report rep;
    rep.experiment = spec.name + ":fluct";
    rep.seed = spec.seed;

    for (std::size_t ei = 0; ei < spec.epsilon_grid.size(); ++ei) {
        const double eps = spec.epsilon_grid[ei];
        const SimParams params = params_at(spec, eps);
        const Domain& dom = params.domain;
        const auto cells = antipodal_cells(dom, spec.delta(eps), 2);
        const double v1 = cells[0].volume(), v2 = cells[1].volume();

        const InitialDensity f0 = InitialDensity::torus_uniform(dom, params.beta);
        const GrandCanonicalSpec gc(params, f0);

        const int B = spec.buckets;
        const long long per_bucket = spec.configs_per_epsilon / B;

        struct Bucket {
            long long n = 0;
            double s1 = 0, s2 = 0, s12 = 0;
        };
        std::vector<Bucket> buckets(static_cast<std::size_t>(B));
        parallel_for(static_cast<std::size_t>(B), thread_count(spec), [&](std::size_t bi) {
            RngStream rng = RngStream(spec.seed).split(3000003 * (ei + 1)).split(bi);
            Bucket& b = buckets[bi];
            for (long long c = 0; c < per_bucket; ++c) {
                const ParticleSet ps = sample_and_evolve(gc, spec.horizon, rng);
                const auto counts = cell_counts(ps, cells, dom);
                ++b.n;
                b.s1 += static_cast<double>(counts[0]);
                b.s2 += static_cast<double>(counts[1]);
                b.s12 += static_cast<double>(counts[0] * counts[1]);
            }
        });

        const double e4 = std::pow(eps, 4);
        // direct centered moment per bucket, and the cumulant-table route
        std::vector<double> direct_b, route_b, direct_half, route_half;
        for (std::size_t bi = 0; bi < buckets.size(); ++bi) {
            const Bucket& b = buckets[bi];
            const double inv = 1.0 / static_cast<double>(b.n);
            const double m1 = b.s1 * inv, m2 = b.s2 * inv, m12 = b.s12 * inv;
            const double direct = e4 * (m12 - m1 * m2);

            CumulantTable f(2, CumulantTable::Kind::CorrelationF);
            f[1] = eps * eps * m1 / v1;
            f[2] = eps * eps * m2 / v2;
            f[3] = e4 * m12 / (v1 * v2);
            const CumulantTable E = cumulants_from_correlations(f);
            const double route =
                fluctuation_moment_disjoint(E, {{0, v1}, {1, v2}});

            direct_b.push_back(direct);
            route_b.push_back(route);
            (bi % 2 == 0 ? direct_half : route_half)
                .push_back(bi % 2 == 0 ? direct : route);
        }

        const EstimatorResult direct = from_bucket_values(direct_b, spec.seed);
        const EstimatorResult route = from_bucket_values(route_b, spec.seed);
        const EstimatorResult dhalf = from_bucket_values(direct_half, spec.seed);
        const EstimatorResult rhalf = from_bucket_values(route_half, spec.seed);
        rep.rows.push_back({eps, "direct_j2", direct});
        rep.rows.push_back({eps, "cumulant_j2", route});

        const double gap = std::abs(dhalf.mean - rhalf.mean);
        const double sig = combined_sigma(dhalf.stderr_, rhalf.stderr_);
        std::ostringstream os;
        os << "independent halves: |diff|=" << gap << " sigma=" << sig;
        rep.verdicts.push_back({"fluct.j2.identity.3sigma.eps" + std::to_string(eps),
                                gap <= 3.0 * sig, os.str()});
    }
    return rep;
}

// ---------------------------------------------------------------------------
// series vs particles

Report run_series_vs_particles(const ExperimentSpec& spec) {
    spec.validate();
    if (!(spec.horizon < kDefaultSeriesHorizon))
        throw ParameterError("run_series_vs_particles: horizon must stay below the series "
                             "convergence horizon");
    Report rep;
    rep.experiment = spec.name + ":compare";
    rep.seed = spec.seed;

    const int n_slabs = 4;
    SimParams base = spec.base;
    const Domain& dom = base.domain;
    std::vector<PhaseCell> slabs;
    for (int i = 0; i < n_slabs; ++i) {
        PhaseCell c;
        c.xlo = {dom.L.x * i / n_slabs, 0.0, 0.0};
        c.xhi = {dom.L.x * (i + 1) / n_slabs, dom.L.y, dom.L.z};
        slabs.push_back(c);
    }

    const InitialDensity f0 =
        InitialDensity::torus_sine(dom, base.beta, spec.sine_amplitude);

    // Boltzmann slab averages: epsilon-independent, computed once per slab
    SeriesQuery proto;
    proto.t = spec.horizon;
    proto.n_max = spec.n_max;
    proto.samples_per_tree = spec.samples_per_tree;
    proto.beta = base.beta;
    proto.roots = {Particle{}};
    std::vector<EstimatorResult> boltz(slabs.size());
    {
        RngStream rng = RngStream(spec.seed).split(4000003);
        for (std::size_t s = 0; s < slabs.size(); ++s)
            boltz[s] = series_cell_average(SeriesKind::Boltzmann, slabs[s], proto, f0,
                                           spec.epsilon_grid.front(), dom, spec.point_samples,
                                           rng, 0.5 * base.beta);
    }

    std::vector<EstimatorResult> gf_by_eps, f1f_by_eps;
    std::vector<std::vector<double>> gf_buckets;

    for (std::size_t ei = 0; ei < spec.epsilon_grid.size(); ++ei) {
        const double eps = spec.epsilon_grid[ei];
        const SimParams params = params_at(spec, eps);
        const GrandCanonicalSpec gc(params, f0);

        // particle ensemble, bucketed slab densities
        const int B = spec.buckets;
        const long long per_bucket = spec.configs_per_epsilon / B;
        std::vector<std::vector<double>> slabsum(
            static_cast<std::size_t>(B), std::vector<double>(slabs.size(), 0.0));
        parallel_for(static_cast<std::size_t>(B), thread_count(spec), [&](std::size_t bi) {
            RngStream rng = RngStream(spec.seed).split(5000003 * (ei + 1)).split(bi);
            for (long long c = 0; c < per_bucket; ++c) {
                const ParticleSet ps = sample_and_evolve(gc, spec.horizon, rng);
                const auto counts = cell_counts(ps, slabs, dom);
                for (std::size_t s = 0; s < slabs.size(); ++s)
                    slabsum[bi][s] += static_cast<double>(counts[s]);
            }
        });

        // coupled Enskog - Boltzmann gap, bucketed for the slope bootstrap
        const int SB = 16;
        std::vector<double> gf_bucket_vals;
        {
            std::vector<std::vector<EstimatorResult>> per_bucket_gap(
                static_cast<std::size_t>(SB));
            parallel_for(static_cast<std::size_t>(SB), thread_count(spec), [&](std::size_t sbi) {
                RngStream rng = RngStream(spec.seed).split(6000003 * (ei + 1)).split(sbi);
                std::vector<EstimatorResult> gaps;
                for (const auto& slab : slabs)
                    gaps.push_back(series_cell_average_difference(
                        slab, proto, f0, eps, dom,
                        std::max<long long>(spec.point_samples / SB, 200), rng,
                        0.5 * base.beta));
                per_bucket_gap[sbi] = gaps;
            });
            for (int sbi = 0; sbi < SB; ++sbi) {
                double agg = 0;
                for (const auto& g : per_bucket_gap[static_cast<std::size_t>(sbi)])
                    agg += std::abs(g.mean);
                gf_bucket_vals.push_back(agg / static_cast<double>(slabs.size()));
            }
        }
        const EstimatorResult gf = from_bucket_values(gf_bucket_vals, spec.seed);
        rep.rows.push_back({eps, "gap_g_f", gf});
        gf_by_eps.push_back(gf);
        gf_buckets.push_back(gf_bucket_vals);

        // |f1_eps - f| aggregated over slabs
        double agg = 0.0, var = 0.0;
        for (std::size_t s = 0; s < slabs.size(); ++s) {
            Accumulator acc;
            for (int bi = 0; bi < B; ++bi)
                acc.add(eps * eps * slabsum[static_cast<std::size_t>(bi)][s] /
                        (static_cast<double>(per_bucket) * slabs[s].volume()));
            const EstimatorResult f1 = acc.result(spec.seed);
            rep.rows.push_back({eps, "f1_slab" + std::to_string(s), f1});
            agg += std::abs(f1.mean - boltz[s].mean);
            var += f1.stderr_ * f1.stderr_ + boltz[s].stderr_ * boltz[s].stderr_;
        }
        EstimatorResult f1f;
        f1f.mean = agg / static_cast<double>(slabs.size());
        f1f.stderr_ = std::sqrt(var) / static_cast<double>(slabs.size());
        f1f.n_samples = spec.configs_per_epsilon;
        rep.rows.push_back({eps, "gap_f1_f", f1f});
        f1f_by_eps.push_back(f1f);
    }

    RngStream rng = RngStream(spec.seed).split(779);
    const SlopeCI s_gf = bootstrap_loglog_slope(spec.epsilon_grid, gf_buckets, 400, rng);
    rep.slopes.push_back({"gap_g_f", s_gf});

    rep.verdicts.push_back({"kinetic.gf.decreasing",
                            decreasing_with_gaps(gf_by_eps, 0.0, false),
                            gap_detail(spec.epsilon_grid, gf_by_eps, false)});
    {
        std::ostringstream os;
        os << "slope=" << s_gf.slope << " CI=[" << s_gf.lo << ", " << s_gf.hi << "]";
        rep.verdicts.push_back(
            {"kinetic.gf.slope_contains_1", s_gf.lo <= 1.0 && 1.0 <= s_gf.hi, os.str()});
    }
    rep.verdicts.push_back({"kinetic.f1f.decreasing.2sigma",
                            decreasing_with_gaps(f1f_by_eps, 2.0, false),
                            gap_detail(spec.epsilon_grid, f1f_by_eps, false)});
    return rep;
}

} // namespace hsk
