#include "hsk/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace hsk {

namespace {

std::vector<Particle> draw_poisson_points(const GrandCanonicalSpec& spec, RngStream& rng) {
    const long long n = rng.poisson(spec.params.mu_eps());
    std::vector<Particle> pts;
    pts.reserve(static_cast<std::size_t>(n));
    for (long long i = 0; i < n; ++i) pts.push_back(spec.f0.sample(rng));
    return pts;
}

/// Uniform cell grid used to find conflicting pairs in O(N).
class ConflictGrid {
public:
    ConflictGrid(const Domain& dom, double eps) : dom_(dom), eps_(eps) {
        if (dom.is_torus()) {
            for (int a = 0; a < 3; ++a) {
                m_[a] = std::max(1, static_cast<int>(std::floor(dom.L[a] / eps)));
                h_[a] = dom.L[a] / m_[a];
            }
        }
    }

    std::vector<char> conflict_flags(const std::vector<Particle>& pts) const {
        const int n = static_cast<int>(pts.size());
        std::vector<char> bad(static_cast<std::size_t>(n), 0);
        if (!dom_.is_torus() || n < 64) {
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    if (dom_.distance(pts[static_cast<std::size_t>(i)].x,
                                      pts[static_cast<std::size_t>(j)].x) < eps_) {
                        bad[static_cast<std::size_t>(i)] = 1;
                        bad[static_cast<std::size_t>(j)] = 1;
                    }
            return bad;
        }
        std::vector<std::vector<int>> cells(
            static_cast<std::size_t>(m_[0]) * m_[1] * m_[2]);
        std::vector<int> ci(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            ci[static_cast<std::size_t>(i)] = cell_of(pts[static_cast<std::size_t>(i)].x);
            cells[static_cast<std::size_t>(ci[static_cast<std::size_t>(i)])].push_back(i);
        }
        for (int i = 0; i < n; ++i) {
            const Vec3 x = pts[static_cast<std::size_t>(i)].x;
            const int c = ci[static_cast<std::size_t>(i)];
            const int cz = c % m_[2], cy = (c / m_[2]) % m_[1], cx = c / (m_[1] * m_[2]);
            for (int dx = -1; dx <= 1; ++dx)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dz = -1; dz <= 1; ++dz) {
                        const int nx = (cx + dx + m_[0]) % m_[0];
                        const int ny = (cy + dy + m_[1]) % m_[1];
                        const int nz = (cz + dz + m_[2]) % m_[2];
                        for (int j : cells[static_cast<std::size_t>((nx * m_[1] + ny) * m_[2] + nz)]) {
                            if (j <= i) continue;
                            if (dom_.distance(x, pts[static_cast<std::size_t>(j)].x) < eps_) {
                                bad[static_cast<std::size_t>(i)] = 1;
                                bad[static_cast<std::size_t>(j)] = 1;
                            }
                        }
                    }
        }
        return bad;
    }

private:
    int cell_of(const Vec3& x) const {
        const Vec3 w = dom_.wrap(x);
        int cx = std::min(m_[0] - 1, static_cast<int>(w.x / h_[0]));
        int cy = std::min(m_[1] - 1, static_cast<int>(w.y / h_[1]));
        int cz = std::min(m_[2] - 1, static_cast<int>(w.z / h_[2]));
        return (cx * m_[1] + cy) * m_[2] + cz;
    }

    Domain dom_;
    double eps_;
    int m_[3] = {1, 1, 1};
    double h_[3] = {1, 1, 1};
};

Configuration sample_full_rejection(const GrandCanonicalSpec& spec, RngStream& rng,
                                    SampleDiagnostics* diag) {
    const double eps = spec.params.epsilon;
    const long long probe_limit = 20000;
    long long trials = 0;
    for (;;) {
        ++trials;
        std::vector<Particle> pts = draw_poisson_points(spec, rng);
        if (exclusion_indicator(pts, eps, spec.params.domain) ||
            pts.size() < 2) {
            if (diag) {
                diag->proposals = trials;
                diag->acceptance_rate = 1.0 / static_cast<double>(trials);
            }
            return Configuration(std::move(pts), eps, spec.params.domain);
        }
        if (trials >= probe_limit)
            throw DensityTooHighError(
                "full-rejection acceptance below 1e-4 over the probe batch; "
                "use PartialResampling or reduce the intensity");
    }
}

Configuration sample_partial_resampling(const GrandCanonicalSpec& spec, RngStream& rng,
                                        SampleDiagnostics* diag) {
    const double eps = spec.params.epsilon;
    const Domain& dom = spec.params.domain;
    ConflictGrid grid(dom, eps);

    std::vector<Particle> pts = draw_poisson_points(spec, rng);
    long long iters = 0, resampled = 0;
    for (;;) {
        ++iters;
        const std::vector<char> bad = grid.conflict_flags(pts);
        std::vector<Vec3> bad_pos;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (bad[i]) bad_pos.push_back(pts[i].x);
        if (bad_pos.empty()) break;
        if (iters > 100000)
            throw DensityTooHighError("partial resampling failed to converge");

        // resampling region: union of eps-balls around the conflicted points.
        // Survivors are the points outside it; the region is refilled with a
        // fresh Poisson draw restricted to it (by thinning a full draw).
        auto in_region = [&](const Vec3& x) {
            for (const auto& b : bad_pos)
                if (dom.distance(x, b) <= eps) return true;
            return false;
        };
        std::vector<Particle> next;
        next.reserve(pts.size());
        for (const auto& p : pts)
            if (!in_region(p.x)) next.push_back(p);
        const std::vector<Particle> fresh = draw_poisson_points(spec, rng);
        for (const auto& p : fresh)
            if (in_region(p.x)) {
                next.push_back(p);
                ++resampled;
            }
        pts.swap(next);
    }
    if (diag) {
        diag->proposals = iters;
        diag->resampled_points = resampled;
    }
    return Configuration(std::move(pts), eps, dom);
}

} // namespace

Configuration sample_state(const GrandCanonicalSpec& spec, RngStream& rng, SamplerMode mode,
                           SampleDiagnostics* diag) {
    switch (mode) {
        case SamplerMode::NoExclusion:
            throw ParameterError("sample_state: NoExclusion samples may overlap; "
                                 "use sample_points");
        case SamplerMode::FullRejection:
            return sample_full_rejection(spec, rng, diag);
        case SamplerMode::PartialResampling:
            return sample_partial_resampling(spec, rng, diag);
    }
    throw ParameterError("sample_state: unknown mode");
}

std::vector<Particle> sample_points(const GrandCanonicalSpec& spec, RngStream& rng,
                                    SamplerMode mode, SampleDiagnostics* diag) {
    if (mode == SamplerMode::NoExclusion) {
        if (diag) diag->proposals = 1;
        return draw_poisson_points(spec, rng);
    }
    return sample_state(spec, rng, mode, diag).particles();
}

AcceptanceProbe probe_acceptance(const GrandCanonicalSpec& spec, RngStream& rng,
                                 long long trials, int restrict_to_n) {
    AcceptanceProbe probe;
    for (long long i = 0; i < trials; ++i) {
        std::vector<Particle> pts = draw_poisson_points(spec, rng);
        if (restrict_to_n >= 0 && static_cast<int>(pts.size()) != restrict_to_n) continue;
        ++probe.trials;
        if (exclusion_indicator(pts, spec.params.epsilon, spec.params.domain)) ++probe.accepted;
    }
    return probe;
}

} // namespace hsk
