#include "hsk/trees.hpp"

#include <algorithm>

namespace hsk {

std::vector<std::vector<int>> CollisionTree::split_by_root() const {
    // subsequence of the k-values at each component's nodes, labels preserved
    std::vector<std::vector<int>> per_root(static_cast<std::size_t>(j));
    for (int i = 1; i <= n(); ++i) {
        const int r = root_of(j + i);
        per_root[static_cast<std::size_t>(r - 1)].push_back(k[static_cast<std::size_t>(i - 1)]);
    }
    return per_root;
}

long long tree_count(int j, int n) {
    long long c = 1;
    for (int i = 1; i <= n; ++i) c *= j + i - 1;
    return c;
}

std::vector<CollisionTree> enumerate_trees(int j, int n) {
    std::vector<CollisionTree> out;
    out.reserve(static_cast<std::size_t>(tree_count(j, n)));
    CollisionTree t;
    t.j = j;
    t.k.assign(static_cast<std::size_t>(n), 1);
    for (;;) {
        out.push_back(t);
        int i = n - 1;
        while (i >= 0) {
            if (t.k[static_cast<std::size_t>(i)] < j + i) {
                ++t.k[static_cast<std::size_t>(i)];
                break;
            }
            t.k[static_cast<std::size_t>(i)] = 1;
            --i;
        }
        if (i < 0) break;
    }
    return out;
}

SampledNodes sample_node_variables(const CollisionTree& tree, double t, double beta_proposal,
                                   RngStream& rng) {
    if (!(t > 0.0)) throw std::invalid_argument("sample_node_variables: t must be > 0");
    if (!(beta_proposal > 0.0))
        throw std::invalid_argument("sample_node_variables: beta_proposal must be > 0");
    const int n = tree.n();
    SampledNodes out;
    out.nodes.times.resize(static_cast<std::size_t>(n));
    out.nodes.omegas.resize(static_cast<std::size_t>(n));
    out.nodes.velocities.resize(static_cast<std::size_t>(n));

    for (auto& ti : out.nodes.times) ti = rng.uniform(0.0, t);
    std::sort(out.nodes.times.begin(), out.nodes.times.end(), std::greater<double>());

    // weight = 1 / proposal density: t^n/n! for the ordered times,
    // (4 pi)^n for the spheres, inverse Maxwellian per created velocity
    double w = 1.0;
    const double maxwell_norm = std::pow(beta_proposal / (2.0 * M_PI), 1.5);
    for (int i = 0; i < n; ++i) {
        w *= t / static_cast<double>(i + 1) * 4.0 * M_PI;
        out.nodes.omegas[static_cast<std::size_t>(i)] = rng.unit_sphere();
        const Vec3 v = sample_maxwellian(beta_proposal, rng);
        out.nodes.velocities[static_cast<std::size_t>(i)] = v;
        w *= std::exp(0.5 * beta_proposal * norm2(v)) / maxwell_norm;
    }
    out.weight = w;
    return out;
}

} // namespace hsk
