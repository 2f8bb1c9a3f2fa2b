#include "hsk/graphs.hpp"

#include <bit>
#include <unordered_map>
#include <utility>

namespace hsk {

int Graph::countr(std::uint32_t m) { return std::countr_zero(m); }

Graph Graph::from_edge_bits(int n, std::uint64_t edge_bits) {
    Graph g(n);
    int bit = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++bit)
            if ((edge_bits >> bit) & 1ull) g.add_edge(i, j);
    return g;
}

namespace {

// G(rem, U) = sum over ordered partitions (L1..Lr) of rem (all nonempty) of
// (-1)^r prod_i chi_{Li, U u L1 u .. u Li}; G(0, U) = 1.
long long expansion_rec(const Graph& g, std::uint32_t rem, std::uint32_t U,
                        std::unordered_map<std::uint64_t, long long>& memo) {
    if (rem == 0) return 1;
    const std::uint64_t key = (static_cast<std::uint64_t>(rem) << 32) | U;
    if (auto it = memo.find(key); it != memo.end()) return it->second;

    long long acc = 0;
    // enumerate nonempty submasks L1 of rem
    for (std::uint32_t L1 = rem;; L1 = (L1 - 1) & rem) {
        if (L1 != 0) {
            if (g.chi_set(L1, U | L1))
                acc -= expansion_rec(g, rem & ~L1, U | L1, memo);
        }
        if (L1 == 0) break;
    }
    memo[key] = acc;
    return acc;
}

} // namespace

long long graph_expansion_R(const Graph& g, std::uint32_t Q, std::uint32_t L0) {
    if ((Q & L0) != 0)
        throw std::invalid_argument("graph_expansion_R: Q and L0 must be disjoint");
    const std::uint32_t all = g.size() >= 32 ? 0xFFFFFFFFu : ((1u << g.size()) - 1);
    if ((Q | L0) & ~all)
        throw std::invalid_argument("graph_expansion_R: subset outside the vertex set");
    std::unordered_map<std::uint64_t, long long> memo;
    return expansion_rec(g, Q, L0, memo);
}

std::pair<long long, long long> graph_expansion_identity(const Graph& g, std::uint32_t L,
                                                         std::uint32_t L0) {
    if ((L & L0) != 0)
        throw std::invalid_argument("graph_expansion_identity: L and L0 must be disjoint");
    const long long lhs = g.chibar_set(L, L | L0) ? 1 : 0;
    long long rhs = 0;
    for (std::uint32_t Q = L;; Q = (Q - 1) & L) {
        rhs += graph_expansion_R(g, Q, L0);
        if (Q == 0) break;
    }
    return {lhs, rhs};
}

} // namespace hsk
