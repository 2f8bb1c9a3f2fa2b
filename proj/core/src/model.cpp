#include "hsk/model.hpp"

#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

namespace hsk {

std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << "(" << v.x << ", " << v.y << ", " << v.z << ")";
}

Vec3 sample_maxwellian(double beta, RngStream& rng) {
    if (!(beta > 0.0)) throw ParameterError("sample_maxwellian: beta must be > 0");
    const double s = 1.0 / std::sqrt(beta);
    return {s * rng.gaussian(), s * rng.gaussian(), s * rng.gaussian()};
}

bool exclusion_indicator(const std::vector<Particle>& particles, double epsilon,
                         const Domain& domain) {
    const std::size_t n = particles.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (domain.distance(particles[i].x, particles[j].x) <= epsilon) return false;
    return true;
}

Configuration::Configuration(std::vector<Particle> particles, double epsilon, Domain domain)
    : particles_(std::move(particles)), epsilon_(epsilon), domain_(domain) {
    if (!(epsilon > 0.0)) throw ParameterError("Configuration: epsilon must be > 0");
    for (const auto& p : particles_)
        if (!finite(p.x) || !finite(p.v))
            throw ParameterError("Configuration: non-finite particle state");
    // Closed contact (distance exactly epsilon) is admissible; only genuine
    // overlap is rejected. The relative slack absorbs roundoff from states
    // produced at exact contact.
    const double tol = epsilon_ * (1.0 - 1e-12);
    for (std::size_t i = 0; i + 1 < particles_.size(); ++i)
        for (std::size_t j = i + 1; j < particles_.size(); ++j)
            if (domain_.distance(particles_[i].x, particles_[j].x) < tol)
                throw ParameterError("Configuration: particles overlap");
}

double Configuration::min_pair_distance() const {
    double best = HUGE_VAL;
    for (std::size_t i = 0; i + 1 < particles_.size(); ++i)
        for (std::size_t j = i + 1; j < particles_.size(); ++j)
            best = std::min(best, domain_.distance(particles_[i].x, particles_[j].x));
    return best;
}

// ---------------------------------------------------------------------------
// InitialDensity

InitialDensity InitialDensity::torus_uniform(const Domain& dom, double beta) {
    if (!dom.is_torus()) throw ParameterError("torus_uniform: domain must be a torus");
    if (!(beta > 0.0)) throw ParameterError("InitialDensity: beta must be > 0");
    InitialDensity d;
    d.spatial_ = Spatial::TorusUniform;
    d.domain_ = dom;
    d.beta_ = beta;
    d.smax_ = 1.0 / dom.volume();
    d.maxwell_norm_ = std::pow(beta / (2.0 * M_PI), 1.5);
    return d;
}

InitialDensity InitialDensity::torus_sine(const Domain& dom, double beta, double amplitude) {
    if (!dom.is_torus()) throw ParameterError("torus_sine: domain must be a torus");
    if (!(std::abs(amplitude) < 1.0)) throw ParameterError("torus_sine: |amplitude| must be < 1");
    InitialDensity d = torus_uniform(dom, beta);
    d.spatial_ = Spatial::TorusSine;
    d.amplitude_ = amplitude;
    d.smax_ = (1.0 + std::abs(amplitude)) / dom.volume();
    return d;
}

InitialDensity InitialDensity::free_space_box(Vec3 lo, Vec3 hi, double beta) {
    if (!(hi.x > lo.x && hi.y > lo.y && hi.z > lo.z))
        throw ParameterError("free_space_box: empty support");
    if (!(beta > 0.0)) throw ParameterError("InitialDensity: beta must be > 0");
    InitialDensity d;
    d.spatial_ = Spatial::FreeSpaceBox;
    d.domain_ = Domain::free_space();
    d.beta_ = beta;
    d.lo_ = lo;
    d.hi_ = hi;
    d.smax_ = 1.0 / ((hi.x - lo.x) * (hi.y - lo.y) * (hi.z - lo.z));
    d.maxwell_norm_ = std::pow(beta / (2.0 * M_PI), 1.5);
    return d;
}

double InitialDensity::spatial_density(const Vec3& x) const {
    switch (spatial_) {
        case Spatial::TorusUniform:
            return 1.0 / domain_.volume();
        case Spatial::TorusSine:
            return (1.0 + amplitude_ * std::sin(2.0 * M_PI * x.x / domain_.L.x)) /
                   domain_.volume();
        case Spatial::FreeSpaceBox:
            if (x.x < lo_.x || x.x > hi_.x || x.y < lo_.y || x.y > hi_.y || x.z < lo_.z ||
                x.z > hi_.z)
                return 0.0;
            return smax_;
    }
    return 0.0;
}

double InitialDensity::value(const Vec3& x, const Vec3& v) const {
    return spatial_density(x) * maxwell_norm_ * std::exp(-0.5 * beta_ * norm2(v));
}

Particle InitialDensity::sample(RngStream& rng) const {
    Vec3 x;
    switch (spatial_) {
        case Spatial::TorusUniform:
            x = {rng.uniform() * domain_.L.x, rng.uniform() * domain_.L.y,
                 rng.uniform() * domain_.L.z};
            break;
        case Spatial::TorusSine:
        case Spatial::FreeSpaceBox: {
            const Vec3 lo = spatial_ == Spatial::FreeSpaceBox ? lo_ : Vec3{0, 0, 0};
            const Vec3 hi = spatial_ == Spatial::FreeSpaceBox ? hi_ : domain_.L;
            for (;;) {
                x = {rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y), rng.uniform(lo.z, hi.z)};
                if (rng.uniform() * smax_ <= spatial_density(x)) break;
            }
            break;
        }
    }
    return {x, sample_maxwellian(beta_, rng)};
}

// ---------------------------------------------------------------------------
// SimParams <-> JSON

void to_json(nlohmann::json& j, const SimParams& p) {
    j = nlohmann::json{{"epsilon", p.epsilon},
                       {"lambda_mfp", p.lambda_mfp},
                       {"z", p.z},
                       {"beta", p.beta},
                       {"seed", p.seed}};
    if (p.domain.is_torus()) {
        j["domain"] = {{"kind", "torus"}, {"L", {p.domain.L.x, p.domain.L.y, p.domain.L.z}}};
    } else {
        j["domain"] = {{"kind", "free_space"}};
    }
}

void from_json(const nlohmann::json& j, SimParams& p) {
    p.epsilon = j.value("epsilon", 0.1);
    p.lambda_mfp = j.value("lambda_mfp", 1.0);
    p.z = j.value("z", 1.0);
    p.beta = j.value("beta", 1.0);
    p.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("domain")) {
        const auto& d = j.at("domain");
        const std::string kind = d.value("kind", "torus");
        if (kind == "torus") {
            Vec3 L{1, 1, 1};
            if (d.contains("L")) {
                const auto& a = d.at("L");
                L = {a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
            }
            p.domain = Domain::torus(L);
        } else if (kind == "free_space") {
            p.domain = Domain::free_space();
        } else {
            throw ParameterError("SimParams: unknown domain kind '" + kind + "'");
        }
    }
    p.validate();
}

} // namespace hsk
