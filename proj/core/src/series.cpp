#include "hsk/series.hpp"

#include <cmath>

namespace hsk {

FlowSpec flow_spec_for(SeriesKind kind) {
    switch (kind) {
        case SeriesKind::Boltzmann: return FlowSpec::boltzmann();
        case SeriesKind::Enskog: return FlowSpec::enskog();
        case SeriesKind::BBGKY: return FlowSpec::interacting();
    }
    throw ParameterError("flow_spec_for: unknown kind");
}

namespace {

double f0_product(const InitialDensity& f0, const std::vector<Particle>& state) {
    double p = 1.0;
    for (const auto& z : state) p *= f0.value(z.x, z.v);
    return p;
}

double kernel_product(const FlowTrace& trace) {
    double k = 1.0;
    for (const auto& c : trace.creations) k *= c.kernel_factor;
    return k;
}

// one importance-weighted draw of the tree value; 0 for blocked flows
double tree_value_single(const FlowSpec& spec, const CollisionTree& tree,
                         const std::vector<Particle>& roots, double t, const InitialDensity& f0,
                         double epsilon, const Domain& domain, RngStream& rng,
                         double beta_proposal, long long* invalid) {
    for (;;) {
        try {
            const SampledNodes sn = sample_node_variables(tree, t, beta_proposal, rng);
            const FlowTrace trace = build_flow(spec, tree, sn.nodes, roots, epsilon, domain, t);
            if (!trace.valid) {
                if (invalid) ++*invalid;
                return 0.0;
            }
            return kernel_product(trace) * f0_product(f0, trace.state0()) * sn.weight;
        } catch (const SingularEventError&) {
            // measure-zero dynamics instance: redraw
        }
    }
}

// coupled Enskog-minus-Boltzmann draw with shared node variables
double tree_difference_single(const CollisionTree& tree, const std::vector<Particle>& roots,
                              double t, const InitialDensity& f0, double epsilon,
                              const Domain& domain, RngStream& rng, double beta_proposal) {
    const SampledNodes sn = sample_node_variables(tree, t, beta_proposal, rng);
    const FlowTrace eb = build_flow(FlowSpec::enskog(), tree, sn.nodes, roots, epsilon, domain, t);
    const FlowTrace bb =
        build_flow(FlowSpec::boltzmann(), tree, sn.nodes, roots, epsilon, domain, t);
    const double kernel = kernel_product(eb); // identical for both flows
    return kernel * (f0_product(f0, eb.state0()) - f0_product(f0, bb.state0())) * sn.weight;
}

template <typename SingleDraw>
SeriesEstimate accumulate_series(const SeriesQuery& query, SingleDraw&& draw) {
    query.validate();
    const int j = static_cast<int>(query.roots.size());
    SeriesEstimate out;
    double total_mean = 0.0, total_var = 0.0;
    long long total_n = 0;

    for (int n = 0; n <= query.n_max; ++n) {
        OrderEstimate ord;
        ord.order = n;
        double order_mean = 0.0, order_var = 0.0;
        double abs_mean = 0.0, abs_var = 0.0;
        for (const auto& tree : enumerate_trees(j, n)) {
            ++ord.trees;
            const long long batch = n == 0 ? 1 : query.samples_per_tree;
            Accumulator acc, abs_acc;
            for (long long s = 0; s < batch; ++s) {
                const double v = draw(tree, &ord.invalid_flows);
                acc.add(v);
                abs_acc.add(std::abs(v));
            }
            order_mean += acc.mean();
            order_var += acc.stderror() * acc.stderror();
            abs_mean += abs_acc.mean();
            abs_var += abs_acc.stderror() * abs_acc.stderror();
            ord.value.n_samples += acc.n;
        }
        ord.value.mean = order_mean;
        ord.value.stderr_ = std::sqrt(order_var);
        ord.abs_value = {abs_mean, std::sqrt(abs_var), ord.value.n_samples, 0};
        out.orders.push_back(ord);
        total_mean += order_mean;
        total_var += order_var;
        total_n += ord.value.n_samples;
    }

    out.total = {total_mean, std::sqrt(total_var), total_n, 0};
    for (std::size_t n = 0; n + 1 < out.orders.size(); ++n) {
        const double lo = std::max(out.orders[n].abs_value.mean, 1e-300);
        out.tail_ratios.push_back(out.orders[n + 1].abs_value.mean / lo);
    }
    out.non_convergence_warning = !out.tail_ratios.empty() && out.tail_ratios.back() >= 1.0;
    return out;
}

} // namespace

TreeValue evaluate_tree_value(SeriesKind kind, const CollisionTree& tree,
                              const std::vector<Particle>& roots, double t,
                              const InitialDensity& f0, double epsilon, const Domain& domain,
                              RngStream& rng, long long batch, double beta_proposal) {
    const FlowSpec spec = flow_spec_for(kind);
    TreeValue out;
    Accumulator acc;
    for (long long s = 0; s < batch; ++s)
        acc.add(tree_value_single(spec, tree, roots, t, f0, epsilon, domain, rng, beta_proposal,
                                  &out.invalid_flows));
    out.value = acc.result(rng.key());
    return out;
}

SeriesEstimate evaluate_series(const SeriesQuery& query, const InitialDensity& f0,
                               double epsilon, const Domain& domain, RngStream& rng) {
    const FlowSpec spec = flow_spec_for(query.kind);
    return accumulate_series(query, [&](const CollisionTree& tree, long long* invalid) {
        return tree_value_single(spec, tree, query.roots, query.t, f0, epsilon, domain, rng,
                                 query.proposal_beta(), invalid);
    });
}

SeriesEstimate evaluate_enskog_boltzmann_difference(const SeriesQuery& query,
                                                    const InitialDensity& f0, double epsilon,
                                                    const Domain& domain, RngStream& rng) {
    return accumulate_series(query, [&](const CollisionTree& tree, long long*) {
        return tree_difference_single(tree, query.roots, query.t, f0, epsilon, domain, rng,
                                      query.proposal_beta());
    });
}

EstimatorResult series_cell_average(SeriesKind kind, const PhaseCell& cell,
                                    const SeriesQuery& proto, const InitialDensity& f0,
                                    double epsilon, const Domain& domain, long long point_samples,
                                    RngStream& rng, double beta_velocity_proposal) {
    const FlowSpec spec = flow_spec_for(kind);
    const double bq = beta_velocity_proposal > 0.0 ? beta_velocity_proposal : 0.5 * proto.beta;
    const double vnorm = std::pow(bq / (2.0 * M_PI), 1.5);
    Accumulator acc;
    for (long long s = 0; s < point_samples; ++s) {
        Particle root;
        root.x = {rng.uniform(cell.xlo.x, cell.xhi.x), rng.uniform(cell.xlo.y, cell.xhi.y),
                  rng.uniform(cell.xlo.z, cell.xhi.z)};
        root.v = sample_maxwellian(bq, rng);
        const double w_v = std::exp(0.5 * bq * norm2(root.v)) / vnorm;

        double point_value = 0.0;
        for (int n = 0; n <= proto.n_max; ++n)
            for (const auto& tree : enumerate_trees(1, n))
                point_value += tree_value_single(spec, tree, {root}, proto.t, f0, epsilon,
                                                 domain, rng, proto.proposal_beta(), nullptr);
        acc.add(w_v * point_value);
    }
    return acc.result(rng.key());
}

EstimatorResult series_cell_average_difference(const PhaseCell& cell, const SeriesQuery& proto,
                                               const InitialDensity& f0, double epsilon,
                                               const Domain& domain, long long point_samples,
                                               RngStream& rng, double beta_velocity_proposal) {
    const double bq = beta_velocity_proposal > 0.0 ? beta_velocity_proposal : 0.5 * proto.beta;
    const double vnorm = std::pow(bq / (2.0 * M_PI), 1.5);
    Accumulator acc;
    for (long long s = 0; s < point_samples; ++s) {
        Particle root;
        root.x = {rng.uniform(cell.xlo.x, cell.xhi.x), rng.uniform(cell.xlo.y, cell.xhi.y),
                  rng.uniform(cell.xlo.z, cell.xhi.z)};
        root.v = sample_maxwellian(bq, rng);
        const double w_v = std::exp(0.5 * bq * norm2(root.v)) / vnorm;

        double point_value = 0.0;
        for (int n = 1; n <= proto.n_max; ++n) // n = 0 terms coincide
            for (const auto& tree : enumerate_trees(1, n))
                point_value += tree_difference_single(tree, {root}, proto.t, f0, epsilon, domain,
                                                      rng, proto.proposal_beta());
        acc.add(w_v * point_value);
    }
    return acc.result(rng.key());
}

std::vector<EstimatorResult> estimate_enskog_error_E1(
    const std::vector<ParticleSet>& evolved_ensemble, const std::vector<PhaseCell>& cells,
    const SeriesQuery& proto, const InitialDensity& f0, double epsilon, const Domain& domain,
    long long point_samples, RngStream& rng) {
    const double eps2 = epsilon * epsilon;
    std::vector<EstimatorResult> out;
    out.reserve(cells.size());
    for (const auto& cell : cells) {
        Accumulator emp;
        for (const auto& ps : evolved_ensemble) {
            long long count = 0;
            for (const auto& p : ps)
                if (cell.contains(p, domain)) ++count;
            emp.add(eps2 * static_cast<double>(count) / cell.volume());
        }
        const EstimatorResult f1 = emp.result();
        const EstimatorResult g = series_cell_average(SeriesKind::Enskog, cell, proto, f0,
                                                      epsilon, domain, point_samples, rng,
                                                      0.5 * proto.beta);
        EstimatorResult diff;
        diff.mean = f1.mean - g.mean;
        diff.stderr_ = combined_sigma(f1.stderr_, g.stderr_);
        diff.n_samples = f1.n_samples;
        diff.seed = rng.key();
        out.push_back(diff);
    }
    return out;
}

} // namespace hsk
