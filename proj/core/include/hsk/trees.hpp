#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hsk/random.hpp"
#include "hsk/vec3.hpp"

namespace hsk {

/// n-collision, j-particle tree: the sequence k_1..k_n with
/// k_i in {1, .., j+i-1} (1-based labels, as usual for particle indices).
/// Particle j+i is created by particle k_i at the i-th node.
struct CollisionTree {
    int j = 1;
    std::vector<int> k; // k[i-1] = progenitor label of particle j+i

    int n() const { return static_cast<int>(k.size()); }
    int particles() const { return j + n(); }

    void validate() const {
        if (j < 1) throw std::invalid_argument("CollisionTree: j must be >= 1");
        for (int i = 1; i <= n(); ++i)
            if (k[i - 1] < 1 || k[i - 1] > j + i - 1)
                throw std::invalid_argument("CollisionTree: k_i out of range");
    }

    /// Progenitor of particle label p (> j).
    int parent(int p) const { return k[static_cast<std::size_t>(p - j - 1)]; }

    /// Root line (1..j) that particle label p ultimately descends from.
    int root_of(int p) const {
        while (p > j) p = parent(p);
        return p;
    }

    /// Labels of the particles belonging to the tree generated by root r.
    std::vector<int> tree_particles(int r) const {
        std::vector<int> out;
        for (int p = 1; p <= particles(); ++p)
            if (root_of(p) == r) out.push_back(p);
        return out;
    }

    /// Decomposition into the j connected components: entry r-1 holds the
    /// subsequence of k-values at the nodes of the tree generated by root r,
    /// with the particle labels of the merged tree preserved.
    std::vector<std::vector<int>> split_by_root() const;
};

/// Number of trees with j roots and n creations: prod_{i=1..n} (j+i-1).
long long tree_count(int j, int n);

/// All trees Gamma(j, n) in lexicographic order of the k-sequence.
std::vector<CollisionTree> enumerate_trees(int j, int n);

/// Node variables of a tree: creation times t_1 > t_2 > ... > t_n in (0, t),
/// scattering unit vectors, and velocities of the created particles.
struct NodeVariables {
    std::vector<double> times;
    std::vector<Vec3> omegas;
    std::vector<Vec3> velocities; // v_{j+1} .. v_{j+n}

    int n() const { return static_cast<int>(times.size()); }

    void validate(double horizon) const {
        for (int i = 0; i < n(); ++i) {
            if (!(times[static_cast<std::size_t>(i)] > 0.0) ||
                !(times[static_cast<std::size_t>(i)] < horizon))
                throw std::invalid_argument("NodeVariables: times must lie in (0, t)");
            if (i > 0 && !(times[static_cast<std::size_t>(i)] <
                           times[static_cast<std::size_t>(i - 1)]))
                throw std::invalid_argument("NodeVariables: times must strictly decrease");
        }
    }
};

struct SampledNodes {
    NodeVariables nodes;
    /// Importance weight: dividing the integrand by the proposal density, so
    /// that weighted averages integrate against the simplex-ordered measure
    /// (times uniform-ordered, omegas uniform on S^2, velocities Maxwellian
    /// with the requested proposal temperature).
    double weight = 1.0;
};

/// Draws node variables for a tree over horizon t: n sorted uniforms for the
/// times (weight t^n/n! for the ordered simplex), uniform unit vectors
/// (weight (4 pi)^n), Maxwellian(beta_proposal) velocities (weight = inverse
/// gaussian density per particle).
SampledNodes sample_node_variables(const CollisionTree& tree, double t, double beta_proposal,
                                   RngStream& rng);

} // namespace hsk
