#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsk/random.hpp"
#include "hsk/vec3.hpp"

#include <nlohmann/json_fwd.hpp>

namespace hsk {

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Hard sphere state: position and velocity in R^3.
struct Particle {
    Vec3 x;
    Vec3 v;
};

/// Spatial domain. FreeSpace keeps everything in R^3 (densities must be
/// compactly supported); Torus identifies opposite faces of the box
/// (0,L1)x(0,L2)x(0,L3) and uses minimum-image distances.
struct Domain {
    enum class Kind { FreeSpace, Torus };
    Kind kind = Kind::Torus;
    Vec3 L{1.0, 1.0, 1.0};

    static Domain free_space() { return {Kind::FreeSpace, {0, 0, 0}}; }
    static Domain torus(Vec3 sides) { return {Kind::Torus, sides}; }
    static Domain unit_torus() { return torus({1.0, 1.0, 1.0}); }

    bool is_torus() const { return kind == Kind::Torus; }
    double volume() const { return is_torus() ? L.x * L.y * L.z : 0.0; }

    /// Shortest displacement from a to b (minimum image on the torus).
    Vec3 displacement(const Vec3& a, const Vec3& b) const {
        Vec3 d = b - a;
        if (is_torus()) {
            d.x -= L.x * std::round(d.x / L.x);
            d.y -= L.y * std::round(d.y / L.y);
            d.z -= L.z * std::round(d.z / L.z);
        }
        return d;
    }

    double distance(const Vec3& a, const Vec3& b) const { return norm(displacement(a, b)); }

    /// Wraps a point into [0,L) per axis; identity in free space.
    Vec3 wrap(Vec3 p) const {
        if (is_torus()) {
            p.x -= L.x * std::floor(p.x / L.x);
            p.y -= L.y * std::floor(p.y / L.y);
            p.z -= L.z * std::floor(p.z / L.z);
        }
        return p;
    }
};

/// Scaling and thermodynamic parameters. The grand-canonical intensity is
/// tied to the diameter by mu_eps * epsilon^2 = 1 / lambda_mfp, the
/// low-density coupling under which one particle suffers O(1) collisions
/// per unit time.
struct SimParams {
    double epsilon = 0.1;      // sphere diameter
    double lambda_mfp = 1.0;   // mean free path, fixed to 1 by default
    double z = 1.0;            // density amplitude (sup bound on the spatial profile)
    double beta = 1.0;         // inverse temperature
    Domain domain = Domain::unit_torus();
    std::uint64_t seed = 0;

    double mu_eps() const { return 1.0 / (lambda_mfp * epsilon * epsilon); }

    void validate() const {
        if (!(epsilon > 0.0)) throw ParameterError("SimParams: epsilon must be > 0");
        if (!(beta > 0.0)) throw ParameterError("SimParams: beta must be > 0");
        if (!(lambda_mfp > 0.0)) throw ParameterError("SimParams: lambda_mfp must be > 0");
        if (!(z > 0.0)) throw ParameterError("SimParams: z must be > 0");
        if (domain.is_torus() && !(domain.L.x > 0 && domain.L.y > 0 && domain.L.z > 0))
            throw ParameterError("SimParams: torus sides must be > 0");
    }
};

void to_json(nlohmann::json& j, const SimParams& p);
void from_json(const nlohmann::json& j, SimParams& p);

/// One-particle initial density f0(x,v) = s(x) * M_beta(v), a probability
/// density. The spatial profile s is uniform or sine-modulated on the torus,
/// or a uniform box in free space (compact support keeps rejection sampling
/// finite).
class InitialDensity {
public:
    enum class Spatial { TorusUniform, TorusSine, FreeSpaceBox };

    static InitialDensity torus_uniform(const Domain& dom, double beta);
    /// s(x) proportional to 1 + amplitude * sin(2 pi x / L1); |amplitude| < 1.
    static InitialDensity torus_sine(const Domain& dom, double beta, double amplitude);
    static InitialDensity free_space_box(Vec3 lo, Vec3 hi, double beta);

    double beta() const { return beta_; }
    Spatial spatial_kind() const { return spatial_; }
    const Domain& domain() const { return domain_; }
    double sine_amplitude() const { return amplitude_; }

    /// Spatial marginal s(x); integrates to 1.
    double spatial_density(const Vec3& x) const;
    double spatial_max() const { return smax_; }

    /// Full density f0(x,v).
    double value(const Vec3& x, const Vec3& v) const;

    /// Draws (x, v) distributed according to f0.
    Particle sample(RngStream& rng) const;

    /// Lipschitz spatial profiles make the Enskog/Boltzmann comparison
    /// meaningful; the uniform profile has no spatial structure at all.
    bool spatially_uniform() const { return spatial_ == Spatial::TorusUniform; }

private:
    Spatial spatial_ = Spatial::TorusUniform;
    Domain domain_ = Domain::unit_torus();
    double beta_ = 1.0;
    double amplitude_ = 0.0;
    Vec3 lo_{}, hi_{};
    double smax_ = 1.0;
    double maxwell_norm_ = 1.0; // (beta / 2 pi)^{3/2}
};

/// Indicator of the exclusion condition: all pairwise distances strictly
/// exceed epsilon (empty product convention for fewer than two particles).
bool exclusion_indicator(const std::vector<Particle>& particles, double epsilon,
                         const Domain& domain);

/// A point of the n-particle hard sphere phase space: ordered particles with
/// pairwise distances >= epsilon. Constructing one from overlapping input is
/// an error.
class Configuration {
public:
    Configuration(std::vector<Particle> particles, double epsilon, Domain domain);

    const std::vector<Particle>& particles() const { return particles_; }
    std::vector<Particle>& particles_mut() { return particles_; }
    double epsilon() const { return epsilon_; }
    const Domain& domain() const { return domain_; }
    std::size_t size() const { return particles_.size(); }

    double min_pair_distance() const;

private:
    std::vector<Particle> particles_;
    double epsilon_;
    Domain domain_;
};

} // namespace hsk
