#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsk/stats.hpp"

namespace hsk {

/// Values indexed by the subsets of a label set J = {0, .., n-1}, stored as
/// a flat array over bitmasks (n <= 16). Three kinds are distinguished:
/// correlation tables f (f_empty = 1), error tables E (E_empty = 1,
/// E_singleton = 0 when taken against the state's own one-point function),
/// and plain singleton-product tables.
class CumulantTable {
public:
    enum class Kind { CorrelationF, ErrorE, SingletonProduct };

    CumulantTable(int n_labels, Kind kind)
        : n_(n_labels), kind_(kind), v_(std::size_t{1} << n_labels, 0.0) {
        if (n_labels < 0 || n_labels > 16)
            throw std::invalid_argument("CumulantTable: need 0 <= labels <= 16");
        v_[0] = 1.0;
    }

    int labels() const { return n_; }
    Kind kind() const { return kind_; }
    std::uint32_t full_mask() const { return (std::uint32_t{1} << n_) - 1; }

    double operator[](std::uint32_t mask) const { return v_[mask]; }
    double& operator[](std::uint32_t mask) { return v_[mask]; }
    const std::vector<double>& raw() const { return v_; }

    std::string to_json() const;
    static CumulantTable from_json(const std::string& text);

private:
    int n_;
    Kind kind_;
    std::vector<double> v_; // size 2^n, index = subset bitmask
};

/// Correlation -> error table:
///   E_S = sum_{K subset S} (-1)^{|K|} prod_{i in K} f({i}) * f(S \ K).
/// When `external_g` is given its entries replace the singleton values of f
/// in the product, producing the error taken against an external one-point
/// function (Enskog or Boltzmann flavor).
CumulantTable cumulants_from_correlations(const CumulantTable& f,
                                          const std::vector<double>* external_g = nullptr);

/// Inverse of the above: f_S = sum_{K subset S} prod_{i in K} g1_i * E(S \ K).
CumulantTable correlations_from_cumulants(const CumulantTable& E,
                                          const std::vector<double>& g1);

/// Fully truncated (connected) functions: f_S = sum over partitions of S of
/// the product of truncated blocks; this inverts that relation.
CumulantTable truncated_from_correlations(const CumulantTable& f);

/// E_S as the sum over partitions of S into blocks of size >= 2 of products
/// of truncated functions.
CumulantTable error_from_truncated(const CumulantTable& fT);

/// An observable with indicator-like support: `weight` is the integral of
/// the test function over its own support. Supports are identified by an id;
/// two observables with the same support_id overlap.
struct Observable {
    int support_id = 0;
    double weight = 1.0;
};

/// Centered moment of disjoint-support observables evaluated from the error
/// table: the expectation of prod_i (F_i - <F_i>) collapses, for pairwise
/// disjoint supports, to the full-set error value times the product of the
/// observable weights. Overlapping supports are a parameter error here.
double fluctuation_moment_disjoint(const CumulantTable& E,
                                   const std::vector<Observable>& obs);

/// Structure of one term of the general (contracted) fluctuation expansion:
/// the observables in `singletons` appear uncontracted, the remaining ones
/// are grouped into contraction blocks of size >= 2, and the term carries a
/// prefactor eps^{eps_power}.
struct ContractionTerm {
    std::uint32_t singletons = 0;              // mask S
    std::vector<std::uint32_t> blocks;         // partition of J \ S, each |block| >= 2
    int eps_power = 0;                         // 2j - 2m - 2s
};

/// Enumerates the general-case expansion terms for j <= 4 observables.
std::vector<ContractionTerm> fluctuation_contraction_terms(int j);

/// Both sides of the mixed factorization identity
///   sum_{L subset S} (-1)^{|L|} f1^{(x)L} f_{K\L}
///     = sum_{L subset K\S} f1^{(x)L} E_{K\L},
/// where E is the error table built from f with the same singleton values.
double centered_expansion_via_f(const CumulantTable& f, std::uint32_t K, std::uint32_t S);
double centered_expansion_via_E(const CumulantTable& f, const CumulantTable& E,
                                std::uint32_t K, std::uint32_t S);

} // namespace hsk
