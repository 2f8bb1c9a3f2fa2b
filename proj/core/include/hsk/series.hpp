#pragma once

#include <vector>

#include "hsk/correlation.hpp"
#include "hsk/flows.hpp"
#include "hsk/model.hpp"
#include "hsk/trees.hpp"

namespace hsk {

/// Which hierarchy the tree expansion solves. BBGKY uses the interacting
/// backward flow with the creation exclusion indicator; Enskog uses free
/// flow with eps-offset creations; Boltzmann uses free flow with zero-offset
/// creations. All three share the signed kernel omega . (v - eta).
enum class SeriesKind { Boltzmann, Enskog, BBGKY };

FlowSpec flow_spec_for(SeriesKind kind);

/// Default horizon below which the expansions are treated as convergent at
/// the reference parameters z = 1, beta = 1: the largest horizon whose
/// measured order-to-order ratios of the absolute-value series stay below
/// one half (the ratios grow linearly in t and reach 0.5 near t = 0.037).
inline constexpr double kDefaultSeriesHorizon = 0.036;

struct SeriesQuery {
    SeriesKind kind = SeriesKind::Boltzmann;
    std::vector<Particle> roots; // evaluation point z_j
    double t = 0.1;
    int n_max = 3;
    long long samples_per_tree = 1000;
    double beta = 1.0;
    /// Created velocities are proposed with a flatter Maxwellian to keep the
    /// |omega . V| kernel weights bounded; beta/2 by default.
    double beta_proposal = 0.0;
    double t_bar = kDefaultSeriesHorizon;

    double proposal_beta() const { return beta_proposal > 0.0 ? beta_proposal : 0.5 * beta; }

    void validate() const {
        if (roots.empty()) throw ParameterError("SeriesQuery: needs at least one root");
        if (!(t > 0.0)) throw ParameterError("SeriesQuery: t must be > 0");
        if (!(t < t_bar)) throw ParameterError("SeriesQuery: t must stay below t_bar");
        if (n_max < 0 || n_max > 8) throw ParameterError("SeriesQuery: n_max must be <= 8");
        if (samples_per_tree < 1) throw ParameterError("SeriesQuery: samples_per_tree >= 1");
    }
};

struct TreeValue {
    EstimatorResult value;
    long long invalid_flows = 0; // creations blocked by the exclusion indicator
};

/// Monte Carlo value of one tree: the dLambda average of the signed kernel
/// product times the initial-datum product at the time-zero state of the
/// flow, importance weights included. Invalid interacting flows contribute
/// zero (that is the exclusion indicator of the BBGKY kernel).
TreeValue evaluate_tree_value(SeriesKind kind, const CollisionTree& tree,
                              const std::vector<Particle>& roots, double t,
                              const InitialDensity& f0, double epsilon, const Domain& domain,
                              RngStream& rng, long long batch, double beta_proposal);

struct OrderEstimate {
    int order = 0;
    long long trees = 0;
    EstimatorResult value;
    /// Absolute-value series of the same order (kernels and weights taken in
    /// absolute value), the quantity controlled by the short-time estimate.
    EstimatorResult abs_value;
    long long invalid_flows = 0;
};

struct SeriesEstimate {
    std::vector<OrderEstimate> orders;
    EstimatorResult total;
    /// Magnitude ratios of the absolute-value series, one per adjacent order
    /// pair; a geometric decay diagnostic for convergence.
    std::vector<double> tail_ratios;
    bool non_convergence_warning = false;
};

SeriesEstimate evaluate_series(const SeriesQuery& query, const InitialDensity& f0,
                               double epsilon, const Domain& domain, RngStream& rng);

/// Coupled Enskog-minus-Boltzmann estimator: both flows are built from the
/// same trees and node draws, so the difference is estimated directly with
/// variance of order (n eps)^2 instead of the difference of two independent
/// estimates.
SeriesEstimate evaluate_enskog_boltzmann_difference(const SeriesQuery& query,
                                                    const InitialDensity& f0, double epsilon,
                                                    const Domain& domain, RngStream& rng);

/// Cell average of the velocity-integrated series solution:
///   (1/|cell|) int_cell dx int dv  [series](x, v, t),
/// sampled with uniform positions in the cell and Maxwellian-importance
/// velocities (inverse temperature beta_velocity_proposal).
EstimatorResult series_cell_average(SeriesKind kind, const PhaseCell& cell,
                                    const SeriesQuery& proto, const InitialDensity& f0,
                                    double epsilon, const Domain& domain, long long point_samples,
                                    RngStream& rng, double beta_velocity_proposal);

/// Cell average of the velocity-integrated coupled Enskog-minus-Boltzmann
/// gap (same sampling structure as series_cell_average, difference draws).
EstimatorResult series_cell_average_difference(const PhaseCell& cell, const SeriesQuery& proto,
                                               const InitialDensity& f0, double epsilon,
                                               const Domain& domain, long long point_samples,
                                               RngStream& rng, double beta_velocity_proposal);

/// Velocity-integrated Enskog error of order one on spatial cells: the
/// difference between the empirical one-point function of the evolved
/// ensemble and the Enskog series average, cell by cell.
std::vector<EstimatorResult> estimate_enskog_error_E1(
    const std::vector<ParticleSet>& evolved_ensemble, const std::vector<PhaseCell>& cells,
    const SeriesQuery& proto, const InitialDensity& f0, double epsilon, const Domain& domain,
    long long point_samples, RngStream& rng);

} // namespace hsk
