#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skillmem/seeding.hpp"

namespace skillmem {

// Episodic compositional memory: a fixed four-layer clip network
//
//   layer 1  start clip (exactly one)
//   layer 2  sensing actions
//   layer 3  perceptual states, each owned by one sensing action
//   layer 4  preparatory skills, reachable from every perceptual state
//
// Walk probabilities are the normalized transition weights of the outgoing
// edges of a clip. All weights stay >= 1.

using ClipId = std::uint32_t;

enum class ClipKind { start, sensing_action, perceptual_state, preparatory_skill };

std::string_view to_string(ClipKind kind);
ClipKind clip_kind_from_string(std::string_view text);
int layer_of(ClipKind kind);

struct Clip {
    ClipId id = 0;
    int layer = 1;
    ClipKind kind = ClipKind::start;
    std::string label;
    std::optional<std::string> semantic_tag;

    bool operator==(const Clip&) const = default;
};

struct Edge {
    ClipId child = 0;
    double weight = 1.0;

    bool operator==(const Edge&) const = default;
};

struct PsParams {
    double lambda_succ = 1000.0;
    double lambda_fail = -30.0;
    double h_init = 200.0;
    double gamma = 0.0;

    void validate() const;
    bool operator==(const PsParams&) const = default;
};

struct WalkPath {
    std::array<ClipId, 4> clip_ids{};
    /// 1-based step numbers (1: layer 1->2, 2: layer 2->3, 3: layer 3->4)
    /// that were dictated rather than sampled.
    std::vector<int> forced_transitions;

    bool operator==(const WalkPath&) const = default;
};

inline constexpr double kWeightFloor = 1.0;

class Ecm {
public:
    Ecm(std::string owner_skill, bool requires_grasp);

    const std::string& owner_skill() const { return owner_skill_; }
    bool requires_grasp() const { return requires_grasp_; }

    const std::vector<Clip>& clips() const { return clips_; }
    const Clip& clip(ClipId id) const;
    ClipId start() const;
    std::vector<ClipId> layer(int layer) const;
    std::span<const Edge> children(ClipId parent) const;
    std::optional<ClipId> parent_of(ClipId state) const;
    std::size_t edge_count() const;

    bool has_edge(ClipId from, ClipId to) const;
    double weight(ClipId from, ClipId to) const;
    void set_weight(ClipId from, ClipId to, double weight);

    std::optional<ClipId> find_sensing(std::string_view action) const;
    std::optional<ClipId> find_state(ClipId sensing, std::string_view label) const;
    std::optional<ClipId> find_prep(std::string_view skill) const;

    ClipId add_clip(ClipKind kind, std::string label, std::optional<std::string> semantic_tag = {});
    void add_edge(ClipId from, ClipId to, double weight);
    void set_semantic_tag(ClipId id, std::optional<std::string> tag);

    /// Structural invariants: one start clip, layered edges, unique
    /// parent for state clips, every state clip has a preparatory child,
    /// weights >= 1. Throws Error describing the first violation.
    void validate() const;

    bool operator==(const Ecm&) const = default;

    // Raw weight access for the update rule.
    std::vector<std::vector<Edge>>& mutable_adjacency() { return children_; }

private:
    Edge& edge_ref(ClipId from, ClipId to);

    std::string owner_skill_;
    bool requires_grasp_ = false;
    std::vector<Clip> clips_;
    std::vector<std::vector<Edge>> children_;
};

struct SensingInit {
    std::string action;
    std::vector<std::string> states;
    double discrimination = 1.0;
};

/// Probability of stepping from -> to: h(from,to) / sum_k h(from,k).
double transition_probability(const Ecm& ecm, ClipId from, ClipId to);

/// Inverse-CDF draw over the children of `from` in insertion order.
/// `admissible` restricts the candidate set; the normalization runs over the
/// admissible children only. Returns nullopt if no child is admissible.
std::optional<ClipId> sample_child(const Ecm& ecm, ClipId from, Rng& rng,
                                   const std::function<bool(ClipId)>& admissible = {});

/// Called with the sensing clip chosen in step 1; returns the estimated
/// perceptual-state clip (a child of that sensing clip) or nullopt.
using StateEstimator = std::function<std::optional<ClipId>(ClipId sensing)>;

WalkPath random_walk(const Ecm& ecm, const StateEstimator& estimate, Rng& rng);

/// Convenience form: the override is used when it belongs to the sampled
/// sensing action, otherwise the walk fails with "state estimate required".
WalkPath random_walk(const Ecm& ecm, std::optional<ClipId> state_override, Rng& rng);

/// One roll-out update of every edge:
///   h <- max(1, h - gamma*(h - 1) + rho*reward),  rho = 1 iff the edge is on `path`.
void update_weights(Ecm& ecm, const WalkPath& path, double reward, const PsParams& params);

Ecm init_ecm(std::string owner_skill, const std::vector<SensingInit>& sensing,
             const std::vector<std::string>& preps, const PsParams& params, bool requires_grasp);

/// Appends a preparatory clip fed by every perceptual-state clip at h_init.
ClipId add_preparatory_clip(Ecm& ecm, const std::string& skill_id, const PsParams& params);

std::string serialize_ecm(const Ecm& ecm);
Ecm deserialize_ecm(std::string_view text);

}  // namespace skillmem
