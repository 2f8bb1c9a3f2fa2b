#include "hsk/cumulants.hpp"

#include <bit>

#include <nlohmann/json.hpp>

namespace hsk {

namespace {

// product of singleton values over the bits of `mask`
double singleton_product(const std::vector<double>& g1, std::uint32_t mask) {
    double p = 1.0;
    while (mask) {
        const int i = std::countr_zero(mask);
        p *= g1[static_cast<std::size_t>(i)];
        mask &= mask - 1;
    }
    return p;
}

std::vector<double> singleton_values(const CumulantTable& f) {
    std::vector<double> g(static_cast<std::size_t>(f.labels()));
    for (int i = 0; i < f.labels(); ++i) g[static_cast<std::size_t>(i)] = f[1u << i];
    return g;
}

} // namespace

CumulantTable cumulants_from_correlations(const CumulantTable& f,
                                          const std::vector<double>* external_g) {
    if (f.kind() != CumulantTable::Kind::CorrelationF)
        throw std::invalid_argument("cumulants_from_correlations: table kind must be f");
    const std::vector<double> g1 = external_g ? *external_g : singleton_values(f);
    if (static_cast<int>(g1.size()) != f.labels())
        throw std::invalid_argument("cumulants_from_correlations: singleton size mismatch");

    CumulantTable E(f.labels(), CumulantTable::Kind::ErrorE);
    for (std::uint32_t S = 1; S <= f.full_mask(); ++S) {
        double acc = 0.0;
        // iterate K over all subsets of S
        std::uint32_t K = S;
        for (;;) {
            const double sign = (std::popcount(K) % 2 == 0) ? 1.0 : -1.0;
            acc += sign * singleton_product(g1, K) * f[S & ~K];
            if (K == 0) break;
            K = (K - 1) & S;
        }
        E[S] = acc;
    }
    return E;
}

CumulantTable correlations_from_cumulants(const CumulantTable& E,
                                          const std::vector<double>& g1) {
    if (E.kind() != CumulantTable::Kind::ErrorE)
        throw std::invalid_argument("correlations_from_cumulants: table kind must be E");
    if (static_cast<int>(g1.size()) != E.labels())
        throw std::invalid_argument("correlations_from_cumulants: singleton size mismatch");

    CumulantTable f(E.labels(), CumulantTable::Kind::CorrelationF);
    for (std::uint32_t S = 1; S <= E.full_mask(); ++S) {
        double acc = 0.0;
        std::uint32_t K = S;
        for (;;) {
            acc += singleton_product(g1, K) * E[S & ~K];
            if (K == 0) break;
            K = (K - 1) & S;
        }
        f[S] = acc;
    }
    return f;
}

CumulantTable truncated_from_correlations(const CumulantTable& f) {
    if (f.kind() != CumulantTable::Kind::CorrelationF)
        throw std::invalid_argument("truncated_from_correlations: table kind must be f");
    // Anchor recursion: with a = min(S),
    //   f_S = sum_{B contains a, B subset S} fT_B * f_{S\B},
    // so fT_S = f_S - sum_{B strictly smaller} fT_B * f_{S\B}.
    CumulantTable fT(f.labels(), CumulantTable::Kind::CorrelationF);
    fT[0] = 0.0; // no empty block
    for (std::uint32_t S = 1; S <= f.full_mask(); ++S) {
        const std::uint32_t a = S & (~S + 1); // lowest bit
        const std::uint32_t rest = S & ~a;
        double acc = f[S];
        // B = a | T for proper subsets T of rest
        std::uint32_t T = rest;
        for (;;) {
            T = (T - 1) & rest; // start below 'rest' itself so B != S
            const std::uint32_t B = a | T;
            acc -= fT[B] * f[S & ~B];
            if (T == 0) break;
        }
        fT[S] = acc;
    }
    return fT;
}

CumulantTable error_from_truncated(const CumulantTable& fT) {
    // D_S = sum over partitions of S into blocks of size >= 2 of prod fT,
    // computed by anchoring each first block at min(S).
    const int n = fT.labels();
    CumulantTable E(n, CumulantTable::Kind::ErrorE);
    std::vector<double> D(std::size_t{1} << n, 0.0);
    D[0] = 1.0;
    for (std::uint32_t S = 1; S <= E.full_mask(); ++S) {
        if (std::popcount(S) < 2) {
            D[S] = 0.0;
            continue;
        }
        const std::uint32_t a = S & (~S + 1);
        const std::uint32_t rest = S & ~a;
        double acc = 0.0;
        std::uint32_t T = rest;
        for (;;) {
            if (std::popcount(T) >= 1) { // block B = a|T has size >= 2
                acc += fT[a | T] * D[S & ~(a | T)];
            }
            if (T == 0) break;
            T = (T - 1) & rest;
        }
        D[S] = acc;
    }
    for (std::uint32_t S = 0; S <= E.full_mask(); ++S) E[S] = S == 0 ? 1.0 : D[S];
    return E;
}

double fluctuation_moment_disjoint(const CumulantTable& E, const std::vector<Observable>& obs) {
    if (static_cast<int>(obs.size()) != E.labels())
        throw std::invalid_argument("fluctuation_moment_disjoint: observable count mismatch");
    for (std::size_t i = 0; i + 1 < obs.size(); ++i)
        for (std::size_t j = i + 1; j < obs.size(); ++j)
            if (obs[i].support_id == obs[j].support_id)
                throw std::invalid_argument(
                    "fluctuation_moment_disjoint: supports must be pairwise disjoint");
    double w = 1.0;
    for (const auto& o : obs) w *= o.weight;
    return w * E[E.full_mask()];
}

std::vector<ContractionTerm> fluctuation_contraction_terms(int j) {
    if (j < 1 || j > 4)
        throw std::invalid_argument("fluctuation_contraction_terms: only j <= 4 supported");
    const std::uint32_t full = (1u << j) - 1;
    std::vector<ContractionTerm> terms;

    // partitions of `mask` into blocks of size >= 2 (anchored recursion)
    auto partitions_ge2 = [&](std::uint32_t mask,
                              auto&& rec) -> std::vector<std::vector<std::uint32_t>> {
        std::vector<std::vector<std::uint32_t>> out;
        if (mask == 0) {
            out.push_back({});
            return out;
        }
        if (std::popcount(mask) < 2) return out; // impossible
        const std::uint32_t a = mask & (~mask + 1);
        const std::uint32_t rest = mask & ~a;
        std::uint32_t T = rest;
        for (;;) {
            if (std::popcount(T) >= 1) {
                const std::uint32_t B = a | T;
                for (auto tail : rec(mask & ~B, rec)) {
                    tail.insert(tail.begin(), B);
                    out.push_back(std::move(tail));
                }
            }
            if (T == 0) break;
            T = (T - 1) & rest;
        }
        return out;
    };

    for (std::uint32_t S = 0; S <= full; ++S) {
        const std::uint32_t C = full & ~S;
        for (const auto& part : partitions_ge2(C, partitions_ge2)) {
            ContractionTerm t;
            t.singletons = S;
            t.blocks = part;
            const int s = std::popcount(S);
            const int m = static_cast<int>(part.size());
            t.eps_power = 2 * j - 2 * m - 2 * s;
            terms.push_back(std::move(t));
        }
    }
    return terms;
}

double centered_expansion_via_f(const CumulantTable& f, std::uint32_t K, std::uint32_t S) {
    if ((S & K) != S) throw std::invalid_argument("centered_expansion_via_f: S must lie in K");
    const auto g1 = singleton_values(f);
    double acc = 0.0;
    std::uint32_t L = S;
    for (;;) {
        const double sign = (std::popcount(L) % 2 == 0) ? 1.0 : -1.0;
        acc += sign * singleton_product(g1, L) * f[K & ~L];
        if (L == 0) break;
        L = (L - 1) & S;
    }
    return acc;
}

double centered_expansion_via_E(const CumulantTable& f, const CumulantTable& E,
                                std::uint32_t K, std::uint32_t S) {
    if ((S & K) != S) throw std::invalid_argument("centered_expansion_via_E: S must lie in K");
    const auto g1 = singleton_values(f);
    const std::uint32_t C = K & ~S;
    double acc = 0.0;
    std::uint32_t L = C;
    for (;;) {
        acc += singleton_product(g1, L) * E[K & ~L];
        if (L == 0) break;
        L = (L - 1) & C;
    }
    return acc;
}

std::string CumulantTable::to_json() const {
    nlohmann::json j;
    j["labels"] = n_;
    j["kind"] = kind_ == Kind::CorrelationF ? "f" : (kind_ == Kind::ErrorE ? "E" : "g1");
    nlohmann::json vals = nlohmann::json::object();
    for (std::uint32_t m = 0; m < v_.size(); ++m) vals[std::to_string(m)] = v_[m];
    j["values"] = std::move(vals);
    return j.dump();
}

CumulantTable CumulantTable::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    const int n = j.at("labels").get<int>();
    const std::string kind = j.at("kind").get<std::string>();
    CumulantTable t(n, kind == "f" ? Kind::CorrelationF
                                   : (kind == "E" ? Kind::ErrorE : Kind::SingletonProduct));
    for (const auto& [key, val] : j.at("values").items())
        t[static_cast<std::uint32_t>(std::stoul(key))] = val.get<double>();
    return t;
}

} // namespace hsk
