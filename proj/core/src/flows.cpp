#include "hsk/flows.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

namespace hsk {

Vec3 ParticlePath::position(double s) const {
    for (const auto& seg : segments)
        if (s >= seg.s_lo - 1e-15 && s <= seg.s_hi + 1e-15)
            return seg.x_hi - seg.v * (seg.s_hi - s);
    throw ParameterError("ParticlePath::position: time outside existence interval");
}

Vec3 ParticlePath::velocity(double s) const {
    for (const auto& seg : segments)
        if (s >= seg.s_lo - 1e-15 && s <= seg.s_hi + 1e-15) return seg.v;
    throw ParameterError("ParticlePath::velocity: time outside existence interval");
}

std::vector<Particle> FlowTrace::state0() const {
    std::vector<Particle> out;
    out.reserve(paths.size());
    for (const auto& p : paths) {
        if (p.segments.empty()) continue;
        out.push_back({p.position(0.0), p.velocity(0.0)});
    }
    return out;
}

double FlowTrace::energy_at_zero() const {
    double e = 0.0;
    for (const auto& p : state0()) e += norm2(p.v);
    return e;
}

namespace {

// group assignment per particle label; particles of the same group interact
// as hard spheres, particles of different groups cross freely
int group_of(const FlowSpec& spec, const CollisionTree& tree, int label) {
    switch (spec.kind) {
        case FlowSpec::Kind::Interacting:
            return 0;
        case FlowSpec::Kind::Uncorrelated:
            return tree.root_of(label);
        case FlowSpec::Kind::Mixed: {
            const int r = tree.root_of(label);
            for (int b : spec.l0_roots)
                if (b == r) return 0;
            return r;
        }
        case FlowSpec::Kind::Enskog:
        case FlowSpec::Kind::Boltzmann:
            return label; // all singletons
    }
    return label;
}

struct SubSegment {
    double sigma0; // start of the sub-segment in backward time
    Vec3 x0;
    Vec3 u; // backward velocity (= -eta)
};

// crossing of the epsilon-ball by the free relative trajectory r0 + du*sg on
// [0, span], over all periodic images; returns entering/leaving intervals
struct InsideInterval {
    double lo, hi;
};

void collect_inside_intervals(const Vec3& r0, const Vec3& du, double span, double eps,
                              const Domain& dom, std::vector<InsideInterval>& out) {
    out.clear();
    int mlo[3] = {0, 0, 0}, mhi[3] = {0, 0, 0};
    if (dom.is_torus()) {
        for (int a = 0; a < 3; ++a) {
            const double lo = r0[a] + std::min(0.0, du[a] * span) - eps;
            const double hi = r0[a] + std::max(0.0, du[a] * span) + eps;
            mlo[a] = static_cast<int>(std::ceil(lo / dom.L[a] - 1e-12));
            mhi[a] = static_cast<int>(std::floor(hi / dom.L[a] + 1e-12));
        }
    }
    const double e2 = eps * eps;
    for (int mx = mlo[0]; mx <= mhi[0]; ++mx)
        for (int my = mlo[1]; my <= mhi[1]; ++my)
            for (int mz = mlo[2]; mz <= mhi[2]; ++mz) {
                Vec3 r = r0;
                if (dom.is_torus())
                    r -= Vec3{mx * dom.L.x, my * dom.L.y, mz * dom.L.z};
                const double a = norm2(du);
                const double b = 2.0 * dot(r, du);
                const double c = norm2(r) - e2;
                if (a == 0.0) {
                    if (c < 0.0) out.push_back({0.0, span});
                    continue;
                }
                const double disc = b * b - 4.0 * a * c;
                if (disc <= 0.0) continue;
                const double sq = std::sqrt(disc);
                double lo = (-b - sq) / (2.0 * a);
                double hi = (-b + sq) / (2.0 * a);
                lo = std::max(lo, 0.0);
                hi = std::min(hi, span);
                if (lo < hi) out.push_back({lo, hi});
            }
    std::sort(out.begin(), out.end(),
              [](const InsideInterval& p, const InsideInterval& q) { return p.lo < q.lo; });
}

class FlowBuilder {
public:
    FlowBuilder(const FlowSpec& spec, const CollisionTree& tree, const NodeVariables& nodes,
                const std::vector<Particle>& roots, double epsilon, const Domain& domain,
                double t)
        : spec_(spec), tree_(tree), nodes_(nodes), eps_(epsilon), dom_(domain), t_(t) {
        tree_.validate();
        nodes_.validate(t);
        if (static_cast<int>(roots.size()) != tree_.j)
            throw ParameterError("build_flow: root count does not match the tree");
        if (nodes_.n() != tree_.n())
            throw ParameterError("build_flow: node variables do not match the tree");

        const int P = tree_.particles();
        pos_.resize(static_cast<std::size_t>(P));
        eta_.resize(static_cast<std::size_t>(P));
        group_.resize(static_cast<std::size_t>(P));
        segs_.resize(static_cast<std::size_t>(P));
        created_s_.assign(static_cast<std::size_t>(P), t);
        inside_.assign(static_cast<std::size_t>(P * P), false);
        for (int i = 0; i < tree_.j; ++i) {
            pos_[static_cast<std::size_t>(i)] = roots[static_cast<std::size_t>(i)].x;
            eta_[static_cast<std::size_t>(i)] = roots[static_cast<std::size_t>(i)].v;
        }
        for (int p = 1; p <= P; ++p)
            group_[static_cast<std::size_t>(p - 1)] = group_of(spec_, tree_, p);
        alive_ = tree_.j;
        // initial inside states of the root pairs
        for (int a = 0; a < alive_; ++a)
            for (int b = a + 1; b < alive_; ++b)
                set_inside(a, b, dom_.distance(pos_[static_cast<std::size_t>(a)],
                                               pos_[static_cast<std::size_t>(b)]) < eps_);
        for (int p = 0; p < alive_; ++p) open_segment(p, 0.0);
    }

    FlowTrace run() {
        trace_.spec = spec_;
        trace_.tree = tree_;
        trace_.horizon = t_;
        trace_.epsilon = eps_;
        trace_.domain = dom_;

        double sigma = 0.0;
        for (int i = 1; i <= tree_.n(); ++i) {
            const double sigma_next = t_ - nodes_.times[static_cast<std::size_t>(i - 1)];
            evolve_interval(sigma, sigma_next);
            sigma = sigma_next;
            if (!create_particle(i, sigma)) {
                finalize(sigma);
                return std::move(trace_);
            }
        }
        evolve_interval(sigma, t_);
        finalize(t_);
        return std::move(trace_);
    }

private:
    void set_inside(int a, int b, bool v) {
        inside_[static_cast<std::size_t>(a * tree_.particles() + b)] = v;
        inside_[static_cast<std::size_t>(b * tree_.particles() + a)] = v;
    }
    bool get_inside(int a, int b) const {
        return inside_[static_cast<std::size_t>(a * tree_.particles() + b)];
    }

    void open_segment(int p, double sigma) {
        segs_[static_cast<std::size_t>(p)].push_back(
            {sigma, pos_[static_cast<std::size_t>(p)], -eta_[static_cast<std::size_t>(p)]});
    }

    // Evolves all alive particles from sigma_a to sigma_b, recording
    // recollisions inside interacting groups and overlap crossings across
    // transparent pairs.
    void evolve_interval(double sigma_a, double sigma_b) {
        const double span = sigma_b - sigma_a;
        if (span < 0) throw ParameterError("build_flow: node times out of order");
        if (span == 0) return;

        // group members
        std::map<int, std::vector<int>> groups;
        for (int p = 0; p < alive_; ++p) groups[group_[static_cast<std::size_t>(p)]].push_back(p);

        // sub-segments of this interval, per particle (sigma-local start)
        std::vector<std::vector<SubSegment>> local(static_cast<std::size_t>(alive_));
        for (int p = 0; p < alive_; ++p)
            local[static_cast<std::size_t>(p)].push_back(
                {0.0, pos_[static_cast<std::size_t>(p)], -eta_[static_cast<std::size_t>(p)]});

        for (auto& [gid, members] : groups) {
            if (members.size() < 2) continue;
            std::vector<Particle> ps;
            ps.reserve(members.size());
            for (int p : members)
                ps.push_back({pos_[static_cast<std::size_t>(p)],
                              -eta_[static_cast<std::size_t>(p)]});
            Configuration cfg(std::move(ps), eps_, dom_);
            Trajectory traj = evolve(cfg, span);
            for (const auto& e : traj.events()) {
                const int ga = members[static_cast<std::size_t>(e.i)];
                const int gb = members[static_cast<std::size_t>(e.j)];
                ContactRecord rec;
                rec.s = t_ - (sigma_a + e.time);
                rec.a = ga + 1;
                rec.b = gb + 1;
                rec.internal = tree_.root_of(ga + 1) == tree_.root_of(gb + 1);
                trace_.recollisions.push_back(rec);
                // extend the local polylines
                append_velocity_jump(local[static_cast<std::size_t>(ga)], e.time, e.post_v_i);
                append_velocity_jump(local[static_cast<std::size_t>(gb)], e.time, e.post_v_j);
            }
        }

        // overlap detection on transparent pairs, sub-segment by sub-segment
        std::vector<ContactRecord> interval_overlaps;
        std::vector<InsideInterval> buf;
        for (int a = 0; a < alive_; ++a) {
            for (int b = a + 1; b < alive_; ++b) {
                if (group_[static_cast<std::size_t>(a)] == group_[static_cast<std::size_t>(b)])
                    continue;
                scan_pair(a, b, local, span, sigma_a, buf, interval_overlaps);
            }
        }
        std::sort(interval_overlaps.begin(), interval_overlaps.end(),
                  [](const ContactRecord& p, const ContactRecord& q) { return p.s > q.s; });
        for (auto& r : interval_overlaps) trace_.overlaps.push_back(r);

        // commit end-of-interval state and permanent segments
        for (int p = 0; p < alive_; ++p) {
            auto& subs = local[static_cast<std::size_t>(p)];
            for (std::size_t k = 1; k < subs.size(); ++k) {
                pos_[static_cast<std::size_t>(p)] = subs[k].x0;
                eta_[static_cast<std::size_t>(p)] = -subs[k].u;
                segs_[static_cast<std::size_t>(p)].push_back(
                    {sigma_a + subs[k].sigma0, subs[k].x0, subs[k].u});
            }
            const auto& last = subs.back();
            pos_[static_cast<std::size_t>(p)] =
                last.x0 + last.u * (span - last.sigma0);
            // eta unchanged since the last sub-segment
            eta_[static_cast<std::size_t>(p)] = -last.u;
        }
    }

    static void append_velocity_jump(std::vector<SubSegment>& subs, double tau,
                                     const Vec3& post_u) {
        const auto& cur = subs.back();
        const Vec3 x_at = cur.x0 + cur.u * (tau - cur.sigma0);
        subs.push_back({tau, x_at, post_u});
    }

    void scan_pair(int a, int b, const std::vector<std::vector<SubSegment>>& local, double span,
                   double sigma_a, std::vector<InsideInterval>& buf,
                   std::vector<ContactRecord>& out) {
        const auto& sa = local[static_cast<std::size_t>(a)];
        const auto& sb = local[static_cast<std::size_t>(b)];
        bool inside_now = get_inside(a, b);
        std::size_t ia = 0, ib = 0;
        double w_lo = 0.0;
        while (w_lo < span - 1e-18) {
            const double ea = ia + 1 < sa.size() ? sa[ia + 1].sigma0 : span;
            const double eb = ib + 1 < sb.size() ? sb[ib + 1].sigma0 : span;
            const double w_hi = std::min(ea, eb);
            if (w_hi > w_lo) {
                const Vec3 xa = sa[ia].x0 + sa[ia].u * (w_lo - sa[ia].sigma0);
                const Vec3 xb = sb[ib].x0 + sb[ib].u * (w_lo - sb[ib].sigma0);
                const Vec3 r0 = dom_.is_torus() ? dom_.displacement(xa, xb) : xb - xa;
                const Vec3 du = sb[ib].u - sa[ia].u;
                collect_inside_intervals(r0, du, w_hi - w_lo, eps_, dom_, buf);
                for (const auto& iv : buf) {
                    // an interval starting at the window boundary continues an
                    // existing overlap unless the pair was outside just before
                    const bool fresh = iv.lo > 1e-15 || !inside_now;
                    if (fresh) {
                        ContactRecord rec;
                        rec.s = t_ - (sigma_a + w_lo + iv.lo);
                        rec.a = a + 1;
                        rec.b = b + 1;
                        rec.internal = tree_.root_of(a + 1) == tree_.root_of(b + 1);
                        out.push_back(rec);
                    }
                    inside_now = true;
                }
                // inside at window end iff the last interval reaches it
                inside_now = !buf.empty() && buf.back().hi >= (w_hi - w_lo) - 1e-15;
            }
            w_lo = w_hi;
            if (ea <= w_lo && ia + 1 < sa.size()) ++ia;
            if (eb <= w_lo && ib + 1 < sb.size()) ++ib;
        }
        set_inside(a, b, inside_now);
    }

    // Places particle j+i at its node. Returns false when the creation is
    // blocked by the kind's constraint (trace marked invalid).
    bool create_particle(int i, double sigma) {
        const int child = tree_.j + i;          // 1-based label
        const int parent = tree_.k[static_cast<std::size_t>(i - 1)];
        const Vec3 omega = nodes_.omegas[static_cast<std::size_t>(i - 1)];
        const Vec3 v_child = nodes_.velocities[static_cast<std::size_t>(i - 1)];
        const Vec3 x_parent = pos_[static_cast<std::size_t>(parent - 1)];
        const Vec3 eta_parent = eta_[static_cast<std::size_t>(parent - 1)];

        CreationRecord rec;
        rec.s = t_ - sigma;
        rec.child = child;
        rec.parent = parent;
        rec.omega = omega;
        rec.kernel_factor = dot(omega, v_child - eta_parent);
        rec.outgoing = rec.kernel_factor >= 0.0;

        const Vec3 x_child =
            spec_.creations_offset() ? x_parent + omega * eps_ : x_parent;

        // creation-overlap constraint
        const int child_root = tree_.root_of(child);
        const bool child_in_l0 =
            spec_.kind == FlowSpec::Kind::Mixed &&
            std::find(spec_.l0_roots.begin(), spec_.l0_roots.end(), child_root) !=
                spec_.l0_roots.end();
        for (int p = 0; p < alive_; ++p) {
            if (p == parent - 1) continue;
            bool constrained = false;
            const int p_root = tree_.root_of(p + 1);
            switch (spec_.kind) {
                case FlowSpec::Kind::Interacting:
                    constrained = true;
                    break;
                case FlowSpec::Kind::Uncorrelated:
                    constrained = p_root == child_root;
                    break;
                case FlowSpec::Kind::Mixed:
                    if (child_in_l0) {
                        constrained =
                            std::find(spec_.l0_roots.begin(), spec_.l0_roots.end(), p_root) !=
                            spec_.l0_roots.end();
                    } else {
                        constrained = p_root == child_root;
                    }
                    break;
                case FlowSpec::Kind::Enskog:
                case FlowSpec::Kind::Boltzmann:
                    constrained = false;
                    break;
            }
            if (!constrained) continue;
            const double d = dom_.distance(x_child, pos_[static_cast<std::size_t>(p)]);
            if (d < eps_ * (1.0 - 1e-12)) {
                trace_.valid = false;
                trace_.creations.push_back(rec);
                BlockedCreation bc;
                bc.s = rec.s;
                bc.child = child;
                bc.blocker = p + 1;
                bc.blocker_same_l0_block = child_in_l0 && p_root != child_root;
                if (bc.blocker_same_l0_block) trace_.l0_cross_block = true;
                trace_.blocked = bc;
                return false;
            }
        }

        // insert the child
        pos_[static_cast<std::size_t>(child - 1)] = x_child;
        Vec3 v_new_child = v_child;
        if (rec.outgoing) {
            // backward scattering of the (parent, child) pair
            auto [pp, cc] = collide(eta_parent, v_child, omega);
            eta_[static_cast<std::size_t>(parent - 1)] = pp;
            v_new_child = cc;
            // parents velocity jumps at this node
            segs_[static_cast<std::size_t>(parent - 1)].push_back(
                {sigma, pos_[static_cast<std::size_t>(parent - 1)], -pp});
        }
        eta_[static_cast<std::size_t>(child - 1)] = v_new_child;
        created_s_[static_cast<std::size_t>(child - 1)] = rec.s;
        alive_ = child;
        open_segment(child - 1, sigma);
        trace_.creations.push_back(rec);

        // overlap bookkeeping for the new transparent pairs
        for (int p = 0; p < alive_ - 1; ++p) {
            const bool transparent =
                group_[static_cast<std::size_t>(p)] != group_[static_cast<std::size_t>(child - 1)];
            const double d = dom_.distance(x_child, pos_[static_cast<std::size_t>(p)]);
            const bool in = d < eps_;
            set_inside(p, child - 1, in);
            if (in && transparent && p != parent - 1) {
                ContactRecord orec;
                orec.s = rec.s;
                orec.a = p + 1;
                orec.b = child;
                orec.internal = tree_.root_of(p + 1) == child_root;
                trace_.overlaps.push_back(orec);
            }
        }
        return true;
    }

    void finalize(double sigma_end) {
        const int P = tree_.particles();
        trace_.paths.resize(static_cast<std::size_t>(P));
        for (int p = 0; p < P; ++p) {
            auto& path = trace_.paths[static_cast<std::size_t>(p)];
            path.label = p + 1;
            path.created_s = created_s_[static_cast<std::size_t>(p)];
            const auto& subs = segs_[static_cast<std::size_t>(p)];
            for (std::size_t k = 0; k < subs.size(); ++k) {
                const double sig0 = subs[k].sigma0;
                const double sig1 = k + 1 < subs.size() ? subs[k + 1].sigma0 : sigma_end;
                if (sig1 <= sig0) continue;
                FlowSegment seg;
                seg.s_hi = t_ - sig0;
                seg.s_lo = t_ - sig1;
                seg.x_hi = subs[k].x0;
                seg.v = -subs[k].u;
                path.segments.push_back(seg);
            }
        }
    }

    FlowSpec spec_;
    CollisionTree tree_;
    NodeVariables nodes_;
    double eps_;
    Domain dom_;
    double t_;

    FlowTrace trace_;
    int alive_ = 0;
    std::vector<Vec3> pos_, eta_;
    std::vector<int> group_;
    std::vector<std::vector<SubSegment>> segs_;
    std::vector<double> created_s_;
    std::vector<char> inside_;
};

} // namespace

FlowTrace build_flow(const FlowSpec& spec, const CollisionTree& tree, const NodeVariables& nodes,
                     const std::vector<Particle>& roots, double epsilon, const Domain& domain,
                     double t) {
    FlowBuilder builder(spec, tree, nodes, roots, epsilon, domain, t);
    return builder.run();
}

RecollisionReport classify_recollisions(const FlowTrace& trace) {
    RecollisionReport rep;
    for (const auto& r : trace.recollisions)
        (r.internal ? rep.internal_recollisions : rep.external_recollisions).push_back(r);
    for (const auto& r : trace.overlaps)
        (r.internal ? rep.internal_overlaps : rep.external_overlaps).push_back(r);
    return rep;
}

bool chi_rec(const FlowTrace& trace, const std::vector<int>& K) {
    std::set<int> k_set(K.begin(), K.end());
    std::set<int> hit;
    for (const auto& r : trace.recollisions) {
        if (r.internal) continue;
        const int ra = trace.root_of(r.a), rb = trace.root_of(r.b);
        if (k_set.count(ra) && k_set.count(rb)) {
            hit.insert(ra);
            hit.insert(rb);
        }
    }
    for (int r : K)
        if (!hit.count(r)) return false;
    return true;
}

bool chi_ov(const FlowTrace& trace, const std::vector<int>& Q, const std::vector<int>& K) {
    std::set<int> k_set(K.begin(), K.end());
    std::set<int> hit;
    for (const auto& r : trace.overlaps) {
        if (r.internal) continue;
        const int ra = trace.root_of(r.a), rb = trace.root_of(r.b);
        if (k_set.count(rb)) hit.insert(ra);
        if (k_set.count(ra)) hit.insert(rb);
    }
    for (int q : Q)
        if (!hit.count(q)) return false;
    return true;
}

bool chi_internal(const FlowTrace& trace) {
    if (trace.blocked.has_value()) return true;
    for (const auto& r : trace.recollisions)
        if (r.internal) return true;
    return false;
}

Vec3 VirtualTrajectory::position(double s) const {
    for (const auto& p : pieces)
        if (s >= p.s_lo - 1e-15 && s <= p.s_hi + 1e-15)
            return trace->paths[static_cast<std::size_t>(p.label - 1)].position(s);
    throw ParameterError("VirtualTrajectory::position: time out of range");
}

Vec3 VirtualTrajectory::velocity(double s) const {
    for (const auto& p : pieces)
        if (s >= p.s_lo - 1e-15 && s <= p.s_hi + 1e-15)
            return trace->paths[static_cast<std::size_t>(p.label - 1)].velocity(s);
    throw ParameterError("VirtualTrajectory::velocity: time out of range");
}

int VirtualTrajectory::jump_count() const {
    int jumps = 0;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        // line changes between pieces
        if (i + 1 < pieces.size()) ++jumps;
        // velocity jumps strictly inside the piece
        const auto& path = trace->paths[static_cast<std::size_t>(pieces[i].label - 1)];
        for (const auto& seg : path.segments)
            if (seg.s_lo > pieces[i].s_lo + 1e-15 && seg.s_lo < pieces[i].s_hi - 1e-15) ++jumps;
    }
    return jumps;
}

VirtualTrajectory virtual_trajectory(const FlowTrace& trace, int label) {
    if (label < 1 || label > trace.tree.particles())
        throw ParameterError("virtual_trajectory: label out of range");
    VirtualTrajectory vt;
    vt.trace = &trace;
    int cur = label;
    double s_lo = 0.0;
    for (;;) {
        const double s_hi =
            trace.paths[static_cast<std::size_t>(cur - 1)].created_s;
        vt.pieces.push_back({cur, s_lo, s_hi});
        if (cur <= trace.tree.j) break;
        s_lo = s_hi;
        cur = trace.tree.parent(cur);
    }
    return vt;
}

RecollisionTable extract_recollision_table(const FlowTrace& trace, const std::vector<int>& L0,
                                           const std::vector<int>& Q) {
    std::set<int> target(L0.begin(), L0.end());
    target.insert(Q.begin(), Q.end());

    // external contacts (recollisions and overlaps), backward order
    struct Ev {
        double s;
        int ra, rb;
    };
    std::vector<Ev> events;
    for (const auto& r : trace.recollisions)
        if (!r.internal) events.push_back({r.s, trace.root_of(r.a), trace.root_of(r.b)});
    for (const auto& r : trace.overlaps)
        if (!r.internal) events.push_back({r.s, trace.root_of(r.a), trace.root_of(r.b)});
    std::sort(events.begin(), events.end(), [](const Ev& a, const Ev& b) { return a.s > b.s; });

    RecollisionTable table;
    std::set<int> named;
    for (const auto& ev : events) {
        if (std::includes(named.begin(), named.end(), target.begin(), target.end())) break;
        const bool a_new = !named.count(ev.ra) && target.count(ev.ra);
        const bool b_new = !named.count(ev.rb) && target.count(ev.rb);
        int alpha, beta;
        if (a_new && b_new) {
            // tie-break: lower root index is the target
            beta = std::min(ev.ra, ev.rb);
            alpha = std::max(ev.ra, ev.rb);
        } else if (a_new) {
            alpha = ev.ra;
            beta = ev.rb;
        } else if (b_new) {
            alpha = ev.rb;
            beta = ev.ra;
        } else {
            continue; // no fresh tree of L0 u Q involved
        }
        table.pairs.emplace_back(alpha, beta);
        named.insert(alpha);
        named.insert(beta);
    }
    if (!std::includes(named.begin(), named.end(), target.begin(), target.end()))
        throw ParameterError(
            "extract_recollision_table: constraint flags not realized on this trace");
    return table;
}

bool recollision_table_valid(const RecollisionTable& table, const std::vector<int>& L0,
                             const std::vector<int>& Q) {
    std::set<int> target(L0.begin(), L0.end());
    target.insert(Q.begin(), Q.end());
    std::set<int> used, covered;
    for (const auto& [a, b] : table.pairs) {
        if (used.count(a)) return false; // bullets must be fresh
        if (!target.count(a)) return false;
        used.insert(a);
        used.insert(b);
        covered.insert(a);
        covered.insert(b);
    }
    if (!std::includes(covered.begin(), covered.end(), target.begin(), target.end()))
        return false;
    return 2 * table.pairs.size() >= target.size();
}

std::string FlowTrace::to_json() const {
    nlohmann::json j;
    j["kind"] = static_cast<int>(spec.kind);
    j["j"] = tree.j;
    j["k_seq"] = tree.k;
    j["horizon"] = horizon;
    j["epsilon"] = epsilon;
    j["valid"] = valid;
    nlohmann::json ps = nlohmann::json::array();
    for (const auto& p : paths) {
        nlohmann::json segs = nlohmann::json::array();
        for (const auto& s : p.segments)
            segs.push_back({{"s_lo", s.s_lo},
                            {"s_hi", s.s_hi},
                            {"x_hi", {s.x_hi.x, s.x_hi.y, s.x_hi.z}},
                            {"v", {s.v.x, s.v.y, s.v.z}}});
        ps.push_back({{"label", p.label}, {"created_s", p.created_s}, {"segments", segs}});
    }
    j["paths"] = std::move(ps);
    nlohmann::json cr = nlohmann::json::array();
    for (const auto& c : creations)
        cr.push_back({{"s", c.s},
                      {"child", c.child},
                      {"parent", c.parent},
                      {"omega", {c.omega.x, c.omega.y, c.omega.z}},
                      {"outgoing", c.outgoing}});
    j["creations"] = std::move(cr);
    auto contacts = [](const std::vector<ContactRecord>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& r : v)
            a.push_back({{"s", r.s}, {"a", r.a}, {"b", r.b}, {"internal", r.internal}});
        return a;
    };
    j["recollisions"] = contacts(recollisions);
    j["overlaps"] = contacts(overlaps);
    return j.dump();
}

} // namespace hsk
