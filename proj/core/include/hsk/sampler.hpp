#pragma once

#include <stdexcept>
#include <vector>

#include "hsk/model.hpp"

namespace hsk {

struct DensityTooHighError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Grand-canonical specification: Poisson intensity mu_eps with points
/// distributed by f0 and hard-core exclusion at diameter epsilon.
struct GrandCanonicalSpec {
    SimParams params;
    InitialDensity f0;

    GrandCanonicalSpec(SimParams p, InitialDensity d) : params(std::move(p)), f0(std::move(d)) {
        params.validate();
    }
};

/// How the exclusion constraint is realized.
///
/// FullRejection resamples the whole configuration until it is admissible,
/// which reproduces the normalized measure directly but has acceptance equal
/// to the excluded-volume partition ratio: that quantity decays like
/// exp(-c/eps), so this mode is only usable at small intensities (it is the
/// oracle the other mode is validated against).
///
/// PartialResampling keeps the admissible part of the configuration and
/// redraws the Poisson process only on the epsilon-neighborhood of the
/// conflicted points, iterating until conflict-free. The output measure is
/// the same conditioned Poisson process, at a cost that stays linear at
/// dilute packing fractions.
///
/// NoExclusion disables the constraint entirely (the ideal-gas control).
enum class SamplerMode { FullRejection, PartialResampling, NoExclusion };

struct SampleDiagnostics {
    long long proposals = 0;     // full-rejection trials or PRS iterations
    long long resampled_points = 0;
    double acceptance_rate = 1.0; // full-rejection only
};

/// Draws one configuration from the exclusion-constrained Poisson state.
/// NoExclusion is not admissible here (its samples may overlap); use
/// sample_points for the ideal-gas control.
Configuration sample_state(const GrandCanonicalSpec& spec, RngStream& rng,
                           SamplerMode mode = SamplerMode::PartialResampling,
                           SampleDiagnostics* diag = nullptr);

/// Same sampling as sample_state but returning the bare particle list, which
/// also admits the NoExclusion control mode.
std::vector<Particle> sample_points(const GrandCanonicalSpec& spec, RngStream& rng,
                                    SamplerMode mode = SamplerMode::PartialResampling,
                                    SampleDiagnostics* diag = nullptr);

/// Acceptance statistics of the plain rejection sampler, optionally
/// restricted to proposals with a fixed particle number.
struct AcceptanceProbe {
    long long trials = 0;
    long long accepted = 0;
    double rate() const {
        return trials > 0 ? static_cast<double>(accepted) / static_cast<double>(trials) : 0.0;
    }
};

AcceptanceProbe probe_acceptance(const GrandCanonicalSpec& spec, RngStream& rng,
                                 long long trials, int restrict_to_n = -1);

} // namespace hsk
