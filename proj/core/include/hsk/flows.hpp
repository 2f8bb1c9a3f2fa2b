#pragma once

#include <optional>
#include <vector>

#include "hsk/dynamics.hpp"
#include "hsk/model.hpp"
#include "hsk/trees.hpp"

namespace hsk {

/// Which backward flow to construct from a tree and its node variables.
///
/// Interacting: full hard sphere dynamics among all particles; creations
///   offset by eps*omega and constrained against every existing particle.
/// Uncorrelated: hard sphere dynamics only within each root's tree, free
///   crossing across trees; creation constraint against the own tree only.
/// Mixed: the trees listed in l0_roots form one interacting block (their
///   created particles are constrained against the whole block), every other
///   tree evolves as in Uncorrelated.
/// Enskog: pure free motion, eps*omega creation offset, no constraint.
/// Boltzmann: pure free motion, zero creation offset, no constraint.
struct FlowSpec {
    enum class Kind { Interacting, Uncorrelated, Mixed, Enskog, Boltzmann };
    Kind kind = Kind::Enskog;
    std::vector<int> l0_roots; // used by Mixed (1-based root labels)

    static FlowSpec interacting() { return {Kind::Interacting, {}}; }
    static FlowSpec uncorrelated() { return {Kind::Uncorrelated, {}}; }
    static FlowSpec mixed(std::vector<int> l0) { return {Kind::Mixed, std::move(l0)}; }
    static FlowSpec enskog() { return {Kind::Enskog, {}}; }
    static FlowSpec boltzmann() { return {Kind::Boltzmann, {}}; }

    bool creations_offset() const { return kind != Kind::Boltzmann; }
};

/// One creation node as realized in a flow.
struct CreationRecord {
    double s = 0.0;       // physical time of the node (s = t_i)
    int child = 0;        // 1-based particle label j+i
    int parent = 0;       // k_i
    Vec3 omega;
    bool outgoing = false;
    /// omega . (v_child - eta_parent(t_i^+)), the signed kernel factor.
    double kernel_factor = 0.0;
};

struct ContactRecord {
    double s = 0.0;
    int a = 0, b = 0; // 1-based particle labels
    bool internal = false; // same root tree
};

struct BlockedCreation {
    double s = 0.0;
    int child = 0;
    int blocker = 0;
    bool blocker_same_l0_block = false;
};

/// Piecewise-free backward trajectory of one particle, stored as segments in
/// physical time s (decreasing from the segment of largest s). On segment
/// [s_lo, s_hi] the particle sits at x_hi - v (s_hi - s).
struct FlowSegment {
    double s_lo = 0.0, s_hi = 0.0;
    Vec3 x_hi; // position at s_hi
    Vec3 v;    // physical velocity on the segment
};

struct ParticlePath {
    int label = 0;
    double created_s; // horizon t for roots
    std::vector<FlowSegment> segments; // ordered by decreasing s

    Vec3 position(double s) const;
    Vec3 velocity(double s) const;
};

/// A realized backward flow with its full event log.
struct FlowTrace {
    FlowSpec spec;
    CollisionTree tree;
    double horizon = 0.0;
    double epsilon = 0.0;
    Domain domain;

    std::vector<ParticlePath> paths;          // index = label - 1
    std::vector<CreationRecord> creations;    // in backward (decreasing s) order
    std::vector<ContactRecord> recollisions;  // contacts inside interacting blocks
    std::vector<ContactRecord> overlaps;      // eps-crossings of transparent pairs
    bool valid = true;
    std::optional<BlockedCreation> blocked;
    /// Set when a creation in an L0 tree of the mixed flow is blocked by a
    /// particle of a *different* L0 tree, i.e. exactly where the block-level
    /// constraint differs from a naive per-tree reading.
    bool l0_cross_block = false;

    int root_of(int label) const { return tree.root_of(label); }

    /// Time-zero states of all particles that exist at s = 0.
    std::vector<Particle> state0() const;

    /// Kinetic energy identity input: sum over particles of |eta_i(0)|^2.
    double energy_at_zero() const;

    std::string to_json() const;
};

/// Constructs the backward flow for the given tree, node variables and root
/// states on [0, t]. Throws SingularEventError on pathological dynamics
/// (caller resamples).
FlowTrace build_flow(const FlowSpec& spec, const CollisionTree& tree, const NodeVariables& nodes,
                     const std::vector<Particle>& roots, double epsilon, const Domain& domain,
                     double t);

/// Summary of contacts by tree pair plus the constraint flags of the
/// combinatorial expansion.
struct RecollisionReport {
    std::vector<ContactRecord> internal_recollisions;
    std::vector<ContactRecord> external_recollisions;
    std::vector<ContactRecord> internal_overlaps;
    std::vector<ContactRecord> external_overlaps;

    bool has_internal() const {
        return !internal_recollisions.empty() || !internal_overlaps.empty();
    }
};

RecollisionReport classify_recollisions(const FlowTrace& trace);

/// chi^rec_K: every tree in K recollides with some other tree of K.
bool chi_rec(const FlowTrace& trace, const std::vector<int>& K);

/// chi^ov_{Q,K}: every tree in Q overlaps with some tree of K.
bool chi_ov(const FlowTrace& trace, const std::vector<int>& Q, const std::vector<int>& K);

/// Internal-correlation indicator of a single-root interacting flow: a
/// blocked creation or any internal recollision.
bool chi_internal(const FlowTrace& trace);

/// Virtual trajectory of particle `label`: its own backward path extended
/// through the chain of progenitors up to the root time. Piecewise free;
/// position jumps of size eps occur at the chain's creation nodes for
/// offset-creating flows and size 0 for the Boltzmann flow.
struct VirtualTrajectory {
    struct Piece {
        int label;        // particle whose path is followed
        double s_lo, s_hi;
    };
    std::vector<Piece> pieces; // decreasing s
    const FlowTrace* trace = nullptr;

    Vec3 position(double s) const;
    Vec3 velocity(double s) const;
    /// Number of position/velocity discontinuities along the path.
    int jump_count() const;
};

VirtualTrajectory virtual_trajectory(const FlowTrace& trace, int label);

/// Ordered bullet/target pairs extracted from the external contact history
/// (Definition-style scan backward from the horizon). Bullets are distinct
/// and new relative to all previously named trees.
struct RecollisionTable {
    std::vector<std::pair<int, int>> pairs; // (alpha_i, beta_i), 1-based roots

    std::size_t size() const { return pairs.size(); }
};

/// Scans external contacts backward from t and names (alpha_i, beta_i) pairs
/// until all of L0 u Q are named. When both participants of the first
/// relevant contact are unnamed members of L0 u Q, the lower root index
/// becomes the target. Precondition: chi_rec(L0) and chi_ov(Q, all roots)
/// hold on the trace.
RecollisionTable extract_recollision_table(const FlowTrace& trace, const std::vector<int>& L0,
                                           const std::vector<int>& Q);

/// Definition check used by tests and the experiment drivers.
bool recollision_table_valid(const RecollisionTable& table, const std::vector<int>& L0,
                             const std::vector<int>& Q);

} // namespace hsk
