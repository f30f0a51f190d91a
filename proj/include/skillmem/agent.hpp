#pragma once

#include <deque>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skillmem/ecm.hpp"
#include "skillmem/haptic.hpp"
#include "skillmem/world.hpp"

namespace skillmem {

// Execution and playing pathways for complex skills, plus the skill
// hierarchy built by registering confident skills as preparatory skills of
// other skills.

struct ConfidenceConfig {
    std::size_t window = 100;
    double threshold = 0.9;
};

struct AgentConfig {
    PsParams params;
    ClassifierConfig classifier;
    double alpha = 10.0;
    int folds = 5;
    std::size_t samples_per_state = 50;
    bool supervised = false;
    ConfidenceConfig confidence;
};

enum class SkillStatus { learning, confident, registered_as_prep };

std::string_view to_string(SkillStatus s);
SkillStatus skill_status_from_string(std::string_view text);

struct SkillRecord {
    ComplexSkillDef skill;
    Ecm ecm{"", false};
    std::map<std::string, StateModel> models;  // keyed by sensing action
    std::vector<DiscriminationScore> scores;
    std::deque<bool> recent;  // last `window` outcomes, oldest first
    std::size_t rollouts = 0;
    SkillStatus status = SkillStatus::learning;
    std::vector<std::string> registered_into;

    /// Mean of the last min(W, n) outcomes; 0 before the first roll-out.
    double confidence() const;
};

struct RolloutRecord {
    std::size_t rollout_index = 0;
    std::optional<WalkPath> path;  // absent when no walk was completed
    std::string sensing;
    std::string sensed_series_id;
    std::string estimated_state;
    std::string prep;  // "-" when the complex skill ran without preparation
    bool success = false;
    double reward = 0.0;
    double confidence = 0.0;

    bool operator==(const RolloutRecord&) const = default;
};

struct HapticDatabase {
    Dataset series;
    /// (sensing action, state label) -> ground-truth class the samples were taken in.
    std::map<std::pair<std::string, std::string>, std::string> ground_truth;
};

/// Collects `samples_per_state` series per state and sensing action.
/// Supervised: the states are set up directly and labelled with their class.
/// Unsupervised: the scenario's cycling prep walks through the states and
/// labels are opaque ids E1, E2, ... in visit order.
HapticDatabase create_haptic_database(const Scenario& scenario, const std::vector<std::string>& sensing_actions,
                                      std::size_t samples_per_state, bool supervised, Rng& rng);

struct TrainedSensing {
    std::map<std::string, StateModel> models;  // keyed by sensing action
    std::vector<DiscriminationScore> scores;    // dataset order
};

/// One model per sensing action in `data`, scored by k-fold cross-validation.
/// The classifier seed of each action is derived from (config seed, action).
TrainedSensing train_sensing(const Dataset& data, const AgentConfig& config);

/// Generates a haptic database, trains and scores the sensing models and
/// builds the initial ECM for `skill_id`.
SkillRecord new_skill_record(const Scenario& scenario, const std::string& skill_id, const AgentConfig& config,
                             Rng& rng);

/// Builds a record for `skill_id` reusing already trained models and scores.
SkillRecord new_skill_record(const Scenario& scenario, const std::string& skill_id,
                             const std::map<std::string, StateModel>& models,
                             const std::vector<DiscriminationScore>& scores, const PsParams& params,
                             const std::map<std::pair<std::string, std::string>, std::string>& ground_truth = {});

class SkillRegistry {
public:
    explicit SkillRegistry(Scenario scenario, PsParams params = {});

    const Scenario& scenario() const { return scenario_; }
    const PsParams& params() const { return params_; }

    bool contains(const std::string& id) const;
    SkillRecord& record(const std::string& id);
    const SkillRecord& record(const std::string& id) const;
    /// Inserts or replaces.
    void put(SkillRecord record);
    const std::vector<std::string>& order() const { return order_; }

    /// Whether `prep` is grasp-producing: primitive flag or the effect of the registered skill.
    bool produces_grasp(const std::string& prep) const;
    /// True when `skill` reaches `target` through registered preparatory skills.
    bool depends_on(const std::string& skill, const std::string& target) const;

private:
    Scenario scenario_;
    PsParams params_;
    std::map<std::string, SkillRecord> records_;
    std::vector<std::string> order_;
};

/// Sense -> classify -> grasp gate -> prepare -> execute. Does not update the
/// ECM. Complex preparatory skills are executed through their own record.
std::pair<RolloutRecord, WorldState> execute_skill(const SkillRegistry& registry, const std::string& skill_id,
                                                   const WorldState& world, Rng& rng);

struct PlayResult {
    std::vector<RolloutRecord> rollouts;
    bool reached_confidence = false;
};

/// Roll-outs with weight updates and random restarts until the sliding-window
/// success rate reaches the threshold or `max_rollouts` is exhausted.
PlayResult play(SkillRegistry& registry, const std::string& skill_id, std::size_t max_rollouts,
                const ConfidenceConfig& confidence, Rng& rng);

/// Adds a confident skill as a preparatory clip of every target. Returns
/// warnings for targets that already contained it.
std::vector<std::string> register_as_prep(SkillRegistry& registry, const std::string& skill_id,
                                          const std::vector<std::string>& targets);

/// Probability that a walk through `ecm` ends in `prep`, with perceptual
/// states of each sensing action taken as equally likely. With `admissible`
/// the layer-4 normalization runs over admissible preps only.
double prep_selection_probability(const Ecm& ecm, const std::string& prep,
                                  const std::function<bool(ClipId)>& admissible = {});

void write_rollout_csv(std::ostream& out, const std::vector<RolloutRecord>& rollouts, bool header = true);

std::string serialize_registry(const SkillRegistry& registry);
SkillRegistry deserialize_registry(const std::string& text);

}  // namespace skillmem
