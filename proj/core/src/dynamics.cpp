#include "hsk/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <queue>
#include <sstream>

#include <nlohmann/json.hpp>

namespace hsk {

std::pair<Vec3, Vec3> collide(const Vec3& v, const Vec3& v1, const Vec3& omega) {
    const double w2 = norm2(omega);
    if (std::abs(w2 - 1.0) > 1e-9)
        throw ParameterError("collide: omega must be a unit vector");
    const double lambda = dot(omega, v - v1);
    return {v - omega * lambda, v1 + omega * lambda};
}

std::optional<double> time_to_contact(const Vec3& dx, const Vec3& dv, double epsilon) {
    const double c = norm2(dx) - epsilon * epsilon;
    if (c < -1e-12 * epsilon * epsilon)
        throw ParameterError("time_to_contact: particles initially overlap");
    const double b = 2.0 * dot(dx, dv);
    if (b >= 0.0) return std::nullopt; // receding or tangent
    const double a = norm2(dv);
    if (a == 0.0) return std::nullopt;
    const double disc = b * b - 4.0 * a * std::max(c, 0.0);
    if (disc <= 0.0) return std::nullopt;
    // smaller root, computed without cancellation (b < 0 here)
    const double s = 2.0 * std::max(c, 0.0) / (-b + std::sqrt(disc));
    return s;
}

std::optional<double> time_to_contact(const Particle& p, const Particle& q, double epsilon) {
    return time_to_contact(q.x - p.x, q.v - p.v, epsilon);
}

namespace {

struct Event {
    double time;
    int a;            // particle index
    int b;            // partner index, or -1 for a wrap event
    std::uint32_t ca; // event counters at scheduling time
    std::uint32_t cb;

    bool operator>(const Event& o) const {
        if (time != o.time) return time > o.time;
        if (a != o.a) return a > o.a; // deterministic tie-break by index
        return b > o.b;
    }
};

class EventDrivenRun {
public:
    EventDrivenRun(const Configuration& cfg, double t, const EvolveOptions& opt)
        : dom_(cfg.domain()), eps_(cfg.epsilon()), horizon_(t), opt_(opt) {
        const auto& ps = cfg.particles();
        n_ = static_cast<int>(ps.size());
        x_.resize(n_);
        v_.resize(n_);
        count_.assign(n_, 0);
        for (int i = 0; i < n_; ++i) {
            x_[i] = dom_.wrap(ps[i].x);
            v_[i] = ps[i].v;
        }
    }

    std::vector<CollisionEvent> run() {
        for (int i = 0; i < n_; ++i) schedule_wrap(i);
        for (int i = 0; i < n_; ++i)
            for (int j = i + 1; j < n_; ++j) schedule_pair(i, j);

        std::vector<CollisionEvent> events;
        double last_collision_time = -HUGE_VAL;
        int last_i = -1, last_j = -1;
        long long iterations = 0;

        while (!queue_.empty()) {
            const Event ev = queue_.top();
            queue_.pop();
            if (++iterations > 2000000 && std::getenv("HSK_DEBUG_EVENTS"))
                std::fprintf(stderr,
                             "ev t=%.17g a=%d b=%d now=%.17g x=(%.17g,%.17g,%.17g) "
                             "v=(%.17g,%.17g,%.17g)\n",
                             ev.time, ev.a, ev.b, now_, x_[ev.a].x, x_[ev.a].y, x_[ev.a].z,
                             v_[ev.a].x, v_[ev.a].y, v_[ev.a].z);
            if (ev.time > horizon_) break;
            if (count_[ev.a] != ev.ca) continue;
            if (ev.b >= 0 && count_[ev.b] != ev.cb) continue;

            advance_to(ev.time);

            if (ev.b < 0) { // wrap
                wrap_particle(ev.a);
                ++count_[ev.a];
                schedule_wrap(ev.a);
                reschedule_all_pairs(ev.a);
                continue;
            }

            const int i = ev.a, j = ev.b;
            const Vec3 d = dom_.displacement(x_[j], x_[i]);
            // d points from j to i; at contact |d| == eps up to roundoff.
            const double dn = norm(d);
            if (std::abs(dn - eps_) > 1e-7 * eps_) {
                // stale geometry; the fresh prediction supersedes this event
                schedule_pair(i, j);
                continue;
            }
            const Vec3 omega = d * (1.0 / dn);
            const Vec3 g = v_[i] - v_[j];
            const double approach = dot(omega, g);
            if (approach >= -opt_.grazing_tol * std::max(norm(g), 1e-300)) {
                // grazing or receding: measure-zero contact, pass through
                ++count_[i];
                ++count_[j];
                schedule_wrap(i);
                schedule_wrap(j);
                reschedule_all_pairs(i);
                reschedule_all_pairs(j);
                continue;
            }

            if (ev.time - last_collision_time < opt_.simultaneity_tol &&
                (i == last_i || i == last_j || j == last_i || j == last_j))
                throw SingularEventError("near-simultaneous triple contact");

            CollisionEvent rec;
            rec.time = ev.time;
            rec.i = i;
            rec.j = j;
            rec.omega = omega;
            rec.pre_v_i = v_[i];
            rec.pre_v_j = v_[j];
            std::tie(v_[i], v_[j]) = collide(v_[i], v_[j], omega);
            rec.post_v_i = v_[i];
            rec.post_v_j = v_[j];
            events.push_back(rec);

            last_collision_time = ev.time;
            last_i = i;
            last_j = j;

            ++count_[i];
            ++count_[j];
            schedule_wrap(i);
            schedule_wrap(j);
            reschedule_all_pairs(i);
            reschedule_all_pairs(j);
        }

        advance_to(horizon_);
        return events;
    }

    std::vector<Particle> state() const {
        std::vector<Particle> out(n_);
        for (int i = 0; i < n_; ++i) out[i] = {x_[i], v_[i]};
        return out;
    }

private:
    void advance_to(double t) {
        const double dt = t - now_;
        if (dt == 0.0) return;
        for (int i = 0; i < n_; ++i) x_[i] += v_[i] * dt;
        now_ = t;
    }

    // Absolute time at which particle i next leaves [0,L) on some axis.
    double next_wrap_abs(int i) const {
        if (!dom_.is_torus()) return HUGE_VAL;
        double best = HUGE_VAL;
        for (int a = 0; a < 3; ++a) {
            const double vi = v_[i][a];
            if (vi > 0.0)
                best = std::min(best, (dom_.L[a] - x_[i][a]) / vi);
            else if (vi < 0.0)
                best = std::min(best, -x_[i][a] / vi);
        }
        return now_ + best;
    }

    void wrap_particle(int i) {
        x_[i] = dom_.wrap(x_[i]);
        // A coordinate within roundoff of the boundary it is about to cross
        // would yield a wrap time indistinguishable from `now`; switch to the
        // equivalent representative on the far side so time can advance.
        for (int a = 0; a < 3; ++a) {
            const double L = dom_.L[a];
            if (v_[i][a] < 0.0 && x_[i][a] < 1e-13 * L)
                x_[i][a] = L;
            else if (v_[i][a] > 0.0 && x_[i][a] > (1.0 - 1e-13) * L)
                x_[i][a] = 0.0;
        }
    }

    void schedule_wrap(int i) {
        if (!dom_.is_torus()) return;
        double tw = next_wrap_abs(i);
        if (tw <= now_) tw = std::nextafter(now_, HUGE_VAL);
        if (tw <= horizon_) queue_.push({tw, i, -1, count_[i], 0});
    }

    void schedule_pair(int i, int j) {
        // Window during which both particles stay inside the primary box;
        // beyond it the wrap event re-predicts, so the 27 nearest images are
        // enough for any contact inside the window.
        const double window_end =
            std::min({horizon_, next_wrap_abs(i), next_wrap_abs(j)});
        if (window_end <= now_) return;

        const Vec3 dx0 = x_[j] - x_[i];
        const Vec3 dv = v_[j] - v_[i];
        double best = HUGE_VAL;
        if (!dom_.is_torus()) {
            auto s = time_to_contact_clamped(dx0, dv);
            if (s && *s > 0.0) best = *s;
        } else {
            const double span = window_end - now_;
            // per-axis image filter: |dx0_a - m L_a| must be reachable
            int cand[3][3];
            int ncand[3];
            for (int a = 0; a < 3; ++a) {
                ncand[a] = 0;
                const double reach = eps_ + std::abs(dv[a]) * span;
                for (int m = -1; m <= 1; ++m)
                    if (std::abs(dx0[a] - m * dom_.L[a]) <= reach) cand[a][ncand[a]++] = m;
            }
            if (ncand[0] == 0 || ncand[1] == 0 || ncand[2] == 0) return;
            for (int ax = 0; ax < ncand[0]; ++ax)
                for (int ay = 0; ay < ncand[1]; ++ay)
                    for (int az = 0; az < ncand[2]; ++az) {
                        const Vec3 dx{dx0.x - cand[0][ax] * dom_.L.x,
                                      dx0.y - cand[1][ay] * dom_.L.y,
                                      dx0.z - cand[2][az] * dom_.L.z};
                        auto s = time_to_contact_clamped(dx, dv);
                        if (s && *s > 0.0 && *s < best) best = *s;
                    }
        }
        const double t_abs = now_ + best;
        if (t_abs <= window_end)
            queue_.push({t_abs, std::min(i, j), std::max(i, j), count_[std::min(i, j)],
                         count_[std::max(i, j)]});
    }

    // Like time_to_contact but tolerant of the tiny negative c that appears
    // immediately after a processed contact.
    std::optional<double> time_to_contact_clamped(const Vec3& dx, const Vec3& dv) const {
        const double c = norm2(dx) - eps_ * eps_;
        const double b = 2.0 * dot(dx, dv);
        if (b >= 0.0) return std::nullopt;
        const double a = norm2(dv);
        if (a == 0.0) return std::nullopt;
        const double disc = b * b - 4.0 * a * std::max(c, 0.0);
        if (disc <= 0.0) return std::nullopt;
        return 2.0 * std::max(c, 0.0) / (-b + std::sqrt(disc));
    }

    void reschedule_all_pairs(int i) {
        for (int j = 0; j < n_; ++j)
            if (j != i) schedule_pair(std::min(i, j), std::max(i, j));
    }

    Domain dom_;
    double eps_;
    double horizon_;
    EvolveOptions opt_;
    int n_ = 0;
    double now_ = 0.0;
    std::vector<Vec3> x_, v_;
    std::vector<std::uint32_t> count_;
    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
};

} // namespace

Trajectory evolve(const Configuration& cfg, double t, const EvolveOptions& opt) {
    if (t == 0.0) return Trajectory(cfg, 0.0, {}, cfg.particles());

    if (t < 0.0) {
        // Backward evolution by velocity-reversal conjugation: run the
        // reversed system forward for |t| and flip the bookkeeping back.
        std::vector<Particle> rev = cfg.particles();
        for (auto& p : rev) p.v = -p.v;
        Configuration rcfg(std::move(rev), cfg.epsilon(), cfg.domain());
        Trajectory fwd = evolve(rcfg, -t, opt);
        std::vector<CollisionEvent> events = fwd.events();
        for (auto& e : events) {
            e.time = -e.time;
            // in physical (forward) time the incoming pair is the reversed
            // outgoing one and vice versa
            const Vec3 pi = e.pre_v_i, pj = e.pre_v_j;
            e.pre_v_i = -e.post_v_i;
            e.pre_v_j = -e.post_v_j;
            e.post_v_i = -pi;
            e.post_v_j = -pj;
        }
        std::vector<Particle> fin = fwd.final_particles();
        for (auto& p : fin) p.v = -p.v;
        return Trajectory(cfg, t, std::move(events), std::move(fin));
    }

    EventDrivenRun run(cfg, t, opt);
    std::vector<CollisionEvent> events = run.run();
    return Trajectory(cfg, t, std::move(events), run.state());
}

Trajectory::Trajectory(Configuration initial, double horizon, std::vector<CollisionEvent> events,
                       std::vector<Particle> final_particles)
    : initial_(std::move(initial)), horizon_(horizon), events_(std::move(events)),
      final_(std::move(final_particles)) {}

Configuration Trajectory::final_configuration() const {
    return Configuration(final_, initial_.epsilon(), initial_.domain());
}

std::vector<Particle> Trajectory::state_at(double s) const {
    const double dir = horizon_ < 0.0 ? -1.0 : 1.0;
    const double target = dir * s;
    if (target < 0.0 || target > dir * horizon_ + 1e-15)
        throw ParameterError("Trajectory::state_at: time outside horizon");
    std::vector<Particle> st = initial_.particles();
    double now = 0.0;
    for (const auto& e : events_) {
        const double et = dir * e.time;
        if (et > target) break;
        for (auto& p : st) p.x += p.v * (dir * (et - now));
        now = et;
        st[static_cast<std::size_t>(e.i)].v = e.post_v_i;
        st[static_cast<std::size_t>(e.j)].v = e.post_v_j;
    }
    for (auto& p : st) p.x += p.v * (dir * (target - now));
    if (initial_.domain().is_torus())
        for (auto& p : st) p.x = initial_.domain().wrap(p.x);
    return st;
}

std::string Trajectory::events_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& e : events_) {
        j.push_back({{"time", e.time},
                     {"pair", {e.i, e.j}},
                     {"omega", {e.omega.x, e.omega.y, e.omega.z}},
                     {"pre", {{e.pre_v_i.x, e.pre_v_i.y, e.pre_v_i.z},
                              {e.pre_v_j.x, e.pre_v_j.y, e.pre_v_j.z}}},
                     {"post", {{e.post_v_i.x, e.post_v_i.y, e.post_v_i.z},
                               {e.post_v_j.x, e.post_v_j.y, e.post_v_j.z}}}});
    }
    return j.dump();
}

std::string Trajectory::snapshots_csv(const std::vector<double>& times) const {
    std::ostringstream os;
    os.precision(17);
    os << "time,particle,x,y,z,vx,vy,vz\n";
    for (double t : times) {
        const auto st = state_at(t);
        for (std::size_t i = 0; i < st.size(); ++i) {
            os << t << ',' << i << ',' << st[i].x.x << ',' << st[i].x.y << ',' << st[i].x.z
               << ',' << st[i].v.x << ',' << st[i].v.y << ',' << st[i].v.z << '\n';
        }
    }
    return os.str();
}

} // namespace hsk
