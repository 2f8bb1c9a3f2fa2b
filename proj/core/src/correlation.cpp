#include "hsk/correlation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace hsk {

double PhaseCell::spatial_distance(const PhaseCell& o, const Domain& dom) const {
    double acc = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double c1 = 0.5 * (xlo[a] + xhi[a]);
        const double c2 = 0.5 * (o.xlo[a] + o.xhi[a]);
        double dc = std::abs(c2 - c1);
        if (dom.is_torus()) {
            dc = std::fmod(dc, dom.L[a]);
            dc = std::min(dc, dom.L[a] - dc);
        }
        const double gap = dc - 0.5 * (xhi[a] - xlo[a]) - 0.5 * (o.xhi[a] - o.xlo[a]);
        if (gap > 0.0) acc += gap * gap;
    }
    return std::sqrt(acc);
}

std::vector<long long> cell_counts(const ParticleSet& ps, const std::vector<PhaseCell>& cells,
                                   const Domain& dom) {
    std::vector<long long> counts(cells.size(), 0);
    for (const auto& p : ps)
        for (std::size_t c = 0; c < cells.size(); ++c)
            if (cells[c].contains(p, dom)) ++counts[c];
    return counts;
}

double ordered_tuple_count(const std::vector<long long>& counts, const std::vector<int>& tuple) {
    // repeated cells contribute falling-factorial factors N (N-1) ...
    double prod = 1.0;
    std::vector<int> seen;
    for (int c : tuple) {
        int repeat = 0;
        for (int s : seen)
            if (s == c) ++repeat;
        prod *= static_cast<double>(counts[static_cast<std::size_t>(c)] - repeat);
        seen.push_back(c);
    }
    return prod;
}

namespace {

void check_disjoint(const std::vector<PhaseCell>& cells) {
    for (std::size_t i = 0; i + 1 < cells.size(); ++i)
        for (std::size_t j = i + 1; j < cells.size(); ++j)
            if (!cells[i].disjoint_from(cells[j]))
                throw ParameterError("cells must be pairwise disjoint");
}

std::vector<std::vector<int>> distinct_tuples(int j, int n_cells) {
    std::vector<std::vector<int>> out;
    std::vector<int> tuple(static_cast<std::size_t>(j), 0);
    const auto rec = [&](auto&& self, int depth) -> void {
        if (depth == j) {
            out.push_back(tuple);
            return;
        }
        for (int c = 0; c < n_cells; ++c) {
            bool used = false;
            for (int d = 0; d < depth; ++d)
                if (tuple[static_cast<std::size_t>(d)] == c) used = true;
            if (used) continue;
            tuple[static_cast<std::size_t>(depth)] = c;
            self(self, depth + 1);
        }
    };
    rec(rec, 0);
    return out;
}

} // namespace

const EstimatorResult& EmpiricalCorrelation::at(const std::vector<int>& tuple) const {
    for (std::size_t i = 0; i < tuples.size(); ++i)
        if (tuples[i] == tuple) return estimates[i];
    throw ParameterError("EmpiricalCorrelation::at: tuple not present");
}

EmpiricalCorrelation estimate_rcf(const std::vector<ParticleSet>& ensemble, int j,
                                  const std::vector<PhaseCell>& cells, double epsilon,
                                  const Domain& dom) {
    if (ensemble.empty()) throw ParameterError("estimate_rcf: ensemble is empty");
    if (j < 1 || j > static_cast<int>(cells.size()))
        throw ParameterError("estimate_rcf: order out of range");
    check_disjoint(cells);

    EmpiricalCorrelation out;
    out.j = j;
    out.cells = cells;
    out.tuples = distinct_tuples(j, static_cast<int>(cells.size()));

    const double scale = std::pow(epsilon, 2.0 * j);
    std::vector<Accumulator> acc(out.tuples.size());
    for (const auto& ps : ensemble) {
        const auto counts = cell_counts(ps, cells, dom);
        for (std::size_t k = 0; k < out.tuples.size(); ++k) {
            double vol = 1.0;
            double prod = 1.0;
            for (int c : out.tuples[k]) {
                vol *= cells[static_cast<std::size_t>(c)].volume();
                prod *= static_cast<double>(counts[static_cast<std::size_t>(c)]);
            }
            acc[k].add(scale * prod / vol);
        }
    }
    out.estimates.resize(acc.size());
    for (std::size_t k = 0; k < acc.size(); ++k) out.estimates[k] = acc[k].result();
    return out;
}

namespace {

// per-subset product statistic Y_S = eps^{2|S|} prod_{m in S} N_m / |cell_m|
std::vector<double> subset_products(const std::vector<long long>& counts,
                                    const std::vector<double>& inv_vol, double epsilon, int j) {
    const std::uint32_t full = (1u << j) - 1;
    std::vector<double> y(full + 1, 1.0);
    for (std::uint32_t S = 1; S <= full; ++S) {
        const int low = std::countr_zero(S);
        y[S] = y[S & (S - 1)] * epsilon * epsilon *
               static_cast<double>(counts[static_cast<std::size_t>(low)]) *
               inv_vol[static_cast<std::size_t>(low)];
    }
    return y;
}

// gradient of E_S with respect to the f-table entries, at the given f values
std::vector<double> error_gradient(const CumulantTable& f, std::uint32_t S) {
    const int n = f.labels();
    std::vector<double> g(std::size_t{1} << n, 0.0);
    std::vector<double> f1(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) f1[static_cast<std::size_t>(i)] = f[1u << i];

    const auto prod_over = [&](std::uint32_t mask) {
        double p = 1.0;
        for (std::uint32_t m = mask; m;) {
            const int i = std::countr_zero(m);
            p *= f1[static_cast<std::size_t>(i)];
            m &= m - 1;
        }
        return p;
    };

    // E_S = sum_{K subset S} (-1)^{|K|} prod(K) f(S\K)
    std::uint32_t K = S;
    for (;;) {
        const double sign = (std::popcount(K) % 2 == 0) ? 1.0 : -1.0;
        // d/d f(S\K)
        g[S & ~K] += sign * prod_over(K);
        // d/d f({m}) for m in K through the singleton product
        for (std::uint32_t m = K; m;) {
            const int i = std::countr_zero(m);
            g[1u << i] += sign * prod_over(K & ~(1u << i)) * f[S & ~K];
            m &= m - 1;
        }
        if (K == 0) break;
        K = (K - 1) & S;
    }
    return g;
}

} // namespace

ErrorTableEstimate estimate_initial_error(const std::vector<ParticleSet>& ensemble, int j,
                                          const std::vector<PhaseCell>& cells, double epsilon,
                                          const Domain& dom) {
    if (ensemble.empty()) throw ParameterError("estimate_initial_error: ensemble is empty");
    if (j < 1 || j > 16 || j > static_cast<int>(cells.size()))
        throw ParameterError("estimate_initial_error: order out of range");
    check_disjoint(cells);

    const std::size_t dim = std::size_t{1} << j;
    std::vector<double> inv_vol(static_cast<std::size_t>(j));
    for (int m = 0; m < j; ++m) inv_vol[static_cast<std::size_t>(m)] = 1.0 / cells[static_cast<std::size_t>(m)].volume();

    // first and second moments of the subset statistics
    std::vector<double> mean(dim, 0.0);
    std::vector<double> cross(dim * dim, 0.0);
    const double M = static_cast<double>(ensemble.size());
    for (const auto& ps : ensemble) {
        const auto counts = cell_counts(ps, cells, dom);
        const auto y = subset_products(counts, inv_vol, epsilon, j);
        for (std::size_t a = 0; a < dim; ++a) {
            mean[a] += y[a];
            for (std::size_t b = 0; b < dim; ++b) cross[a * dim + b] += y[a] * y[b];
        }
    }
    for (auto& v : mean) v /= M;

    CumulantTable f(j, CumulantTable::Kind::CorrelationF);
    for (std::uint32_t S = 0; S < dim; ++S) f[S] = mean[S];

    ErrorTableEstimate out(j);
    out.n_samples = static_cast<long long>(ensemble.size());
    const CumulantTable E = cumulants_from_correlations(f);
    for (std::uint32_t S = 0; S < dim; ++S) out.values[S] = E[S];

    // delta method: Var(E_S) = g^T Cov g / M with Cov the sample covariance
    for (std::uint32_t S = 1; S < dim; ++S) {
        const auto g = error_gradient(f, S);
        double var = 0.0;
        for (std::size_t a = 0; a < dim; ++a) {
            if (g[a] == 0.0) continue;
            for (std::size_t b = 0; b < dim; ++b) {
                if (g[b] == 0.0) continue;
                const double cov =
                    (cross[a * dim + b] / M - mean[a] * mean[b]) * M / std::max(M - 1.0, 1.0);
                var += g[a] * cov * g[b];
            }
        }
        out.stderrs[S] = var > 0.0 ? std::sqrt(var / M) : 0.0;
    }
    return out;
}

CumulantTable bootstrap_error_table(const std::vector<ParticleSet>& ensemble, int j,
                                    const std::vector<PhaseCell>& cells, double epsilon,
                                    const Domain& dom, int n_bootstrap, RngStream& rng) {
    const std::size_t M = ensemble.size();
    const std::size_t dim = std::size_t{1} << j;
    std::vector<double> inv_vol(static_cast<std::size_t>(j));
    for (int m = 0; m < j; ++m)
        inv_vol[static_cast<std::size_t>(m)] = 1.0 / cells[static_cast<std::size_t>(m)].volume();

    // precompute per-configuration subset statistics
    std::vector<std::vector<double>> ys;
    ys.reserve(M);
    for (const auto& ps : ensemble)
        ys.push_back(subset_products(cell_counts(ps, cells, dom), inv_vol, epsilon, j));

    std::vector<Accumulator> acc(dim);
    for (int b = 0; b < n_bootstrap; ++b) {
        std::vector<double> mean(dim, 0.0);
        for (std::size_t i = 0; i < M; ++i) {
            const auto& y = ys[static_cast<std::size_t>(rng.uniform() * static_cast<double>(M))];
            for (std::size_t a = 0; a < dim; ++a) mean[a] += y[a];
        }
        CumulantTable f(j, CumulantTable::Kind::CorrelationF);
        for (std::uint32_t S = 0; S < dim; ++S) f[S] = mean[S] / static_cast<double>(M);
        const CumulantTable E = cumulants_from_correlations(f);
        for (std::size_t a = 0; a < dim; ++a) acc[a].add(E[static_cast<std::uint32_t>(a)]);
    }
    CumulantTable sd(j, CumulantTable::Kind::ErrorE);
    sd[0] = 0.0;
    for (std::uint32_t S = 1; S < dim; ++S)
        sd[S] = std::sqrt(acc[S].variance());
    return sd;
}

EstimatorResult factorial_moment(const std::vector<ParticleSet>& ensemble, int j) {
    Accumulator acc;
    for (const auto& ps : ensemble) {
        double prod = 1.0;
        for (int i = 0; i < j; ++i) prod *= static_cast<double>(ps.size()) - i;
        acc.add(prod);
    }
    return acc.result();
}

} // namespace hsk
