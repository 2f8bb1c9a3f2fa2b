#pragma once

#include <string>
#include <vector>

#include "hsk/correlation.hpp"
#include "hsk/model.hpp"
#include "hsk/sampler.hpp"
#include "hsk/series.hpp"
#include "hsk/stats.hpp"

namespace hsk {

/// Batch description for the epsilon-scan experiments.
struct ExperimentSpec {
    std::string name = "scan";
    SimParams base;                         // epsilon is overridden per grid point
    std::vector<double> epsilon_grid{0.1, 0.05, 0.025}; // strictly decreasing
    double horizon = 0.5;

    long long configs_per_epsilon = 20000;  // particle ensembles
    long long flows_per_epsilon = 200000;   // backward-flow Monte Carlo
    int buckets = 100;                      // replicate blocks for error bars

    int cells_per_axis = 6;                 // spatial grid for counting
    double theta = 0.2;                     // separation delta = eps^theta
    double theta3 = 0.0;                    // energy cutoff exponent (off by default)

    int n_max = 2;                          // series truncation
    long long samples_per_tree = 20000;
    long long point_samples = 20000;        // cell-average series samples
    double sine_amplitude = 0.4;            // spatial modulation for kinetic runs

    std::uint64_t seed = 1;
    int threads = 0;                        // 0: hardware concurrency

    double delta(double epsilon) const { return std::pow(epsilon, theta); }

    void validate() const;
};

struct ReportRow {
    double epsilon = 0.0;
    std::string name;
    EstimatorResult est;
};

struct SlopeRow {
    std::string name;
    SlopeCI ci;
};

struct Verdict {
    std::string rule;
    bool pass = false;
    std::string detail;
};

struct Report {
    std::string experiment;
    std::uint64_t seed = 0;
    std::vector<ReportRow> rows;
    std::vector<SlopeRow> slopes;
    std::vector<Verdict> verdicts;
    std::vector<std::string> notes;

    bool all_pass() const;
    const EstimatorResult& row(double epsilon, const std::string& name) const;

    std::string to_csv() const;
    std::string to_json() const;
    /// Manifest with the resolved spec, a hash of it, and the seed layout.
    std::string manifest_json(const ExperimentSpec& spec) const;
};

/// Propagation-of-chaos scan: correlation errors on separated cells versus
/// epsilon, with factorization cross-checks.
Report run_chaos_scan(const ExperimentSpec& spec);

/// Recollision statistics: internal recollision/blocked-creation fraction of
/// single-root interacting flows, external overlap fraction of two-root
/// uncorrelated flows with separated roots, and their log-log slopes.
Report run_recollision_scan(const ExperimentSpec& spec);

/// Centered-moment identities for disjoint-support observables: the direct
/// product-of-deviations estimator versus the cumulant-table route, plus the
/// Boltzmann-centered variant.
Report run_fluctuation_moments(const ExperimentSpec& spec);

/// Particle ensemble versus Enskog and Boltzmann series values, cell by
/// cell, with the coupled Enskog-Boltzmann gap and its epsilon slope.
Report run_series_vs_particles(const ExperimentSpec& spec);

} // namespace hsk
