#pragma once

#include <vector>

#include "hsk/cumulants.hpp"
#include "hsk/model.hpp"
#include "hsk/stats.hpp"

namespace hsk {

/// Axis-aligned phase-space cell: a spatial box, optionally intersected with
/// a velocity box. Without a velocity cut the cell stands for the full
/// velocity space, so counting in it estimates the velocity-integrated
/// correlation function; the reference volume is then the spatial one.
struct PhaseCell {
    Vec3 xlo, xhi;
    bool velocity_cut = false;
    Vec3 vlo, vhi;

    double volume() const {
        double v = (xhi.x - xlo.x) * (xhi.y - xlo.y) * (xhi.z - xlo.z);
        if (velocity_cut) v *= (vhi.x - vlo.x) * (vhi.y - vlo.y) * (vhi.z - vlo.z);
        return v;
    }

    bool contains(const Particle& p, const Domain& dom) const {
        const Vec3 x = dom.wrap(p.x);
        if (x.x < xlo.x || x.x >= xhi.x || x.y < xlo.y || x.y >= xhi.y || x.z < xlo.z ||
            x.z >= xhi.z)
            return false;
        if (velocity_cut) {
            const Vec3& v = p.v;
            if (v.x < vlo.x || v.x >= vhi.x || v.y < vlo.y || v.y >= vhi.y || v.z < vlo.z ||
                v.z >= vhi.z)
                return false;
        }
        return true;
    }

    bool disjoint_from(const PhaseCell& o) const {
        const bool x_overlap = xlo.x < o.xhi.x && o.xlo.x < xhi.x && xlo.y < o.xhi.y &&
                               o.xlo.y < xhi.y && xlo.z < o.xhi.z && o.xlo.z < xhi.z;
        if (!x_overlap) return true;
        if (velocity_cut && o.velocity_cut) {
            const bool v_overlap = vlo.x < o.vhi.x && o.vlo.x < vhi.x && vlo.y < o.vhi.y &&
                                   o.vlo.y < vhi.y && vlo.z < o.vhi.z && o.vlo.z < vhi.z;
            return !v_overlap;
        }
        return false;
    }

    /// Minimum spatial distance to another cell under the domain metric.
    double spatial_distance(const PhaseCell& o, const Domain& dom) const;
};

/// One sampled many-body state; the ensemble view used by the estimators.
using ParticleSet = std::vector<Particle>;

/// Counts of particles per cell for one configuration.
std::vector<long long> cell_counts(const ParticleSet& ps, const std::vector<PhaseCell>& cells,
                                   const Domain& dom);

/// Falling-factorial tuple count: ordered tuples of distinct particles with
/// the m-th one lying in cells[tuple[m]]. Cells referenced twice contribute
/// N (N-1) style factors; all referenced cells must be pairwise disjoint or
/// identical.
double ordered_tuple_count(const std::vector<long long>& counts, const std::vector<int>& tuple);

/// Rescaled correlation estimates of order j on a family of disjoint cells.
struct EmpiricalCorrelation {
    int j = 1;
    std::vector<PhaseCell> cells;
    /// Estimates for every ordered j-tuple of distinct cell indices, flattened
    /// in lexicographic tuple order.
    std::vector<std::vector<int>> tuples;
    std::vector<EstimatorResult> estimates;
    bool epsilon_scaling_applied = true;

    const EstimatorResult& at(const std::vector<int>& tuple) const;
};

/// eps^{2j} times the mean ordered-tuple count divided by the cell volumes,
/// with standard errors over the ensemble.
EmpiricalCorrelation estimate_rcf(const std::vector<ParticleSet>& ensemble, int j,
                                  const std::vector<PhaseCell>& cells, double epsilon,
                                  const Domain& dom);

/// Correlation-error table on j cells (labels = cell indices 0..j-1) with
/// first-order (delta method) standard errors, estimated from the ensemble.
struct ErrorTableEstimate {
    CumulantTable values;
    CumulantTable stderrs; // same mask layout, entries are standard errors
    long long n_samples = 0;

    ErrorTableEstimate(int labels)
        : values(labels, CumulantTable::Kind::ErrorE),
          stderrs(labels, CumulantTable::Kind::ErrorE), n_samples(0) {
        stderrs[0] = 0.0;
    }
};

ErrorTableEstimate estimate_initial_error(const std::vector<ParticleSet>& ensemble, int j,
                                          const std::vector<PhaseCell>& cells, double epsilon,
                                          const Domain& dom);

/// Bootstrap validation helper for the delta-method errors: resamples the
/// ensemble B times and returns the empirical standard deviation of each
/// error-table entry.
CumulantTable bootstrap_error_table(const std::vector<ParticleSet>& ensemble, int j,
                                    const std::vector<PhaseCell>& cells, double epsilon,
                                    const Domain& dom, int n_bootstrap, RngStream& rng);

/// Empirical factorial moment E[n (n-1) ... (n-j+1)] of the particle number.
EstimatorResult factorial_moment(const std::vector<ParticleSet>& ensemble, int j);

} // namespace hsk
