#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace hsk {

/// Simple undirected graph on up to 16 vertices, no self loops, stored as
/// per-vertex adjacency bitmasks.
class Graph {
public:
    explicit Graph(int n) : n_(n), adj_(static_cast<std::size_t>(n), 0) {
        if (n < 0 || n > 16) throw std::invalid_argument("Graph: need 0 <= n <= 16");
    }

    int size() const { return n_; }

    void add_edge(int i, int j) {
        check(i);
        check(j);
        if (i == j) throw std::invalid_argument("Graph: self loops are not allowed");
        adj_[static_cast<std::size_t>(i)] |= 1u << j;
        adj_[static_cast<std::size_t>(j)] |= 1u << i;
    }

    bool has_edge(int i, int j) const {
        check(i);
        check(j);
        return (adj_[static_cast<std::size_t>(i)] >> j) & 1u;
    }

    /// chi_{i,K}: vertex i is connected to some vertex of K (self excluded
    /// automatically since there are no self loops).
    bool chi(int i, std::uint32_t K) const {
        check(i);
        return (adj_[static_cast<std::size_t>(i)] & K) != 0;
    }

    /// chi_{H,K} = prod_{i in H} chi_{i,K}.
    bool chi_set(std::uint32_t H, std::uint32_t K) const {
        for (std::uint32_t m = H; m;) {
            const int i = countr(m);
            if (!chi(i, K)) return false;
            m &= m - 1;
        }
        return true;
    }

    /// bar chi_{H,K}: no vertex of H touches K.
    bool chibar_set(std::uint32_t H, std::uint32_t K) const {
        for (std::uint32_t m = H; m;) {
            const int i = countr(m);
            if (chi(i, K)) return false;
            m &= m - 1;
        }
        return true;
    }

    /// Builds the graph with edge set given by `edge_bits`, the bits indexing
    /// pairs (i, j), i < j, in lexicographic order. Used for exhaustive sweeps.
    static Graph from_edge_bits(int n, std::uint64_t edge_bits);

private:
    static int countr(std::uint32_t m);
    void check(int i) const {
        if (i < 0 || i >= n_) throw std::invalid_argument("Graph: vertex out of range");
    }

    int n_;
    std::vector<std::uint32_t> adj_;
};

/// The signed ordered-partition sum
///   R(Q, L0) = sum_{r>=1} (-1)^r sum_{ordered partitions (L1..Lr) of Q}
///              chi_{L1, L0 u L1} ... chi_{Lr, L0 u L1 u .. u Lr},
/// with R(empty, L0) = 1. Values are integers; computed with memoization
/// keyed by (remaining set, accumulated union).
long long graph_expansion_R(const Graph& g, std::uint32_t Q, std::uint32_t L0);

/// Convenience: verifies the identity bar chi_{L, L u L0} = sum_{Q subset L}
/// R(Q, L0) for one split. Returns (lhs, rhs).
std::pair<long long, long long> graph_expansion_identity(const Graph& g, std::uint32_t L,
                                                         std::uint32_t L0);

} // namespace hsk
