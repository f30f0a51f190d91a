#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "skillmem/ecm.hpp"
#include "skillmem/haptic.hpp"
#include "skillmem/seeding.hpp"

namespace skillmem {

// Simulated tabletop worlds. The world state is hidden from the agent; it
// only sees haptic series produced by sensing actions and the success bit of
// a complex skill.

enum class Orientation { bottom = 0, binding = 1, open = 2, top = 3 };

std::string_view to_string(Orientation o);
Orientation orientation_from_string(std::string_view text);
/// One 90 degree step in the order bottom -> binding -> open -> top -> bottom.
Orientation rotate(Orientation o, int quarter_turns);

struct WorldState {
    Orientation orientation = Orientation::bottom;
    bool grasped = false;
    bool box_open = false;
    bool object_in_box = false;

    bool operator==(const WorldState&) const = default;
};

std::string describe(const WorldState& w);
/// Applies "key=value[,key=value...]" overrides, e.g. "orientation=open,grasped=true".
WorldState apply_overrides(WorldState w, std::string_view overrides);

/// Which part of the world a sensing action reveals.
enum class Aspect { orientation, box_open, grasp };

std::string_view to_string(Aspect a);
Aspect aspect_from_string(std::string_view text);
const std::vector<std::string>& aspect_classes(Aspect a);
std::size_t aspect_class(const WorldState& w, Aspect a);

/// Class prototype: gain_c * (step*[t >= duration/2] + ramp*t + sine_amp*sin(2*pi*sine_freq*t + 0.7*c))
/// on every channel c.
struct Prototype {
    double step = 0.0;
    double ramp = 0.0;
    double sine_amp = 0.0;
    double sine_freq = 1.0;

    bool operator==(const Prototype&) const = default;
};

struct SensingActionDef {
    std::string id;
    Aspect observes = Aspect::orientation;
    std::vector<Prototype> prototypes;  // one per class of `observes`
    std::array<double, kChannels> channel_gain{1, 1, 1, 0.1, 0.1, 0.1, 0.01, 0.01, 0.01};
    double sigma = 0.0;      // Gaussian noise, relative to the channel gain
    double confusion = 0.0;  // probability the contact follows another class's prototype
    std::size_t samples = 100;
    double duration = 1.0;
    // Weighing only: |F_z| while grasped and the decision threshold.
    double grasp_force = 4.9;
    double force_threshold = 1.0;

    bool is_weighing() const { return observes == Aspect::grasp; }
    bool operator==(const SensingActionDef&) const = default;
};

enum class PrepKind { rotate, flip, nothing, complex };

struct PreparatorySkillDef {
    std::string id;
    PrepKind kind = PrepKind::nothing;
    int quarter_turns = 0;
    bool produces_grasp = false;

    bool operator==(const PreparatorySkillDef&) const = default;
};

/// Conjunction of optional field tests; an empty condition always holds.
struct Condition {
    std::optional<Orientation> orientation;
    std::optional<bool> grasped;
    std::optional<bool> box_open;

    bool holds(const WorldState& w) const;
    bool operator==(const Condition&) const = default;
};

struct Effect {
    std::optional<bool> grasped;
    std::optional<bool> box_open;
    std::optional<bool> object_in_box;

    WorldState apply(WorldState w) const;
    bool operator==(const Effect&) const = default;
};

struct ComplexSkillDef {
    std::string id;
    Condition precondition;
    double success_prob = 1.0;
    bool requires_grasp = false;
    Effect effect_on_success;

    bool produces_grasp() const { return effect_on_success.grasped.value_or(false); }
    bool operator==(const ComplexSkillDef&) const = default;
};

enum class FlipSemantics { book, box };

struct Scenario {
    std::string name;
    FlipSemantics flip = FlipSemantics::book;
    std::vector<SensingActionDef> sensing;
    std::vector<PreparatorySkillDef> preps;
    std::vector<ComplexSkillDef> complex;
    std::string cycling_prep = "rot90";
    int cycling_period = 4;
    WorldState initial;

    const SensingActionDef& sensing_action(std::string_view id) const;
    const PreparatorySkillDef& prep(std::string_view id) const;
    const ComplexSkillDef& complex_skill(std::string_view id) const;
    const SensingActionDef* weighing() const;
    /// Sensing actions whose states are learned by a classifier (weighing excluded).
    std::vector<const SensingActionDef*> classified_sensing() const;

    void validate() const;
    bool operator==(const Scenario&) const = default;
};

Scenario book_scenario();
Scenario box_scenario();
/// "book" / "box" resolve to the built-in scenarios, anything else is read as a file.
Scenario load_scenario(const std::string& name_or_path);

std::string serialize_scenario(const Scenario& s);
Scenario deserialize_scenario(const std::string& text);

/// Prototype for the state class the action observes plus noise. Never
/// changes `world`.
HapticTimeSeries sense(const WorldState& world, const SensingActionDef& action, Rng& rng,
                       std::string series_id = {});
/// Noise-free signal of class `cls`.
HapticTimeSeries prototype_series(const SensingActionDef& action, std::size_t cls);
/// Weighing decision: mean |F| above the action's threshold.
bool weigh_reports_grasp(const HapticTimeSeries& ts, const SensingActionDef& weigh);

/// Primitive preparatory skills. Complex (learned) preps are executed by the agent.
WorldState apply_prep(const Scenario& scenario, WorldState world, const PreparatorySkillDef& skill);

std::pair<bool, WorldState> attempt_complex(const WorldState& world, const ComplexSkillDef& skill, Rng& rng);

double reward_of(bool success, const PsParams& params);

/// Uniform orientation, not grasped, nothing in the box. box_open is kept.
WorldState randomize_start(WorldState world, Rng& rng);

/// randomize_start followed by a uniformly drawn number (0..period-1) of
/// cycling-prep applications, so scenarios whose state is not the
/// orientation (the box) are reset as well.
WorldState random_start_state(const Scenario& scenario, WorldState world, Rng& rng);

}  // namespace skillmem
