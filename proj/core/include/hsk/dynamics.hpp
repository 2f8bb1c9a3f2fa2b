#pragma once

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hsk/model.hpp"

namespace hsk {

/// Raised when a near-simultaneous triple contact is detected; such
/// configurations form a null set and callers are expected to resample.
struct SingularEventError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One elastic collision. omega is the unit contact vector (x_i - x_j)/eps
/// at the moment of contact; velocities satisfy the reflection rule with
/// (v_i - v_j) . omega < 0 before and > 0 after.
struct CollisionEvent {
    double time = 0.0;
    int i = 0, j = 0;
    Vec3 omega;
    Vec3 pre_v_i, pre_v_j;
    Vec3 post_v_i, post_v_j;
};

/// Elastic reflection: returns (v', v1') with
///   v'  = v  - omega [omega . (v - v1)]
///   v1' = v1 + omega [omega . (v - v1)].
/// Involutive; preserves momentum and kinetic energy.
std::pair<Vec3, Vec3> collide(const Vec3& v, const Vec3& v1, const Vec3& omega);

/// Earliest s > 0 at which |dx + dv s| = epsilon with the pair approaching,
/// solved in a cancellation-free form; nullopt when the spheres miss.
/// Initially overlapping input (|dx| < epsilon) is a precondition error.
std::optional<double> time_to_contact(const Vec3& dx, const Vec3& dv, double epsilon);

/// Convenience overload on two particles in free space.
std::optional<double> time_to_contact(const Particle& p, const Particle& q, double epsilon);

/// Piecewise-free trajectory produced by evolve(). Events are ordered by
/// increasing |time|; for backward evolutions (negative horizon) event times
/// are negative. At an event time the reported state is the outgoing one
/// (right continuity in the direction of evolution).
class Trajectory {
public:
    Trajectory(Configuration initial, double horizon, std::vector<CollisionEvent> events,
               std::vector<Particle> final_particles);

    const Configuration& initial() const { return initial_; }
    double horizon() const { return horizon_; }
    const std::vector<CollisionEvent>& events() const { return events_; }

    Configuration final_configuration() const;
    const std::vector<Particle>& final_particles() const { return final_; }

    /// State at intermediate time s (same sign convention as the horizon).
    std::vector<Particle> state_at(double s) const;

    std::string events_json() const;
    std::string snapshots_csv(const std::vector<double>& times) const;

private:
    Configuration initial_;
    double horizon_;
    std::vector<CollisionEvent> events_;
    std::vector<Particle> final_;
};

struct EvolveOptions {
    /// Contacts with |omega.(dv)| below this fraction of |dv| pass through
    /// without scattering.
    double grazing_tol = 1e-12;
    /// Two contacts closer than this and sharing a particle raise
    /// SingularEventError.
    double simultaneity_tol = 1e-12;
};

/// Exact event-driven hard sphere flow over [0, t] (velocity-reversed when
/// t < 0). Collisions are scheduled in a priority queue keyed by predicted
/// contact time and invalidated through per-particle event counters; the
/// torus is handled with wrap events so that contact prediction only ever
/// needs the 27 nearest images.
Trajectory evolve(const Configuration& cfg, double t, const EvolveOptions& opt = {});

} // namespace hsk
