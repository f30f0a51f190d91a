#include "skillmem/world.hpp"

#include <cmath>
#include <json.hpp>
#include <numbers>

#include "skillmem/error.hpp"
#include "skillmem/text.hpp"

namespace skillmem {

namespace {

using json = nlohmann::ordered_json;

constexpr std::string_view kScenarioFormatName = "skillmem.scenario";
constexpr int kScenarioFormatVersion = 1;

bool parse_bool(std::string_view text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw Error("expected true/false, got '" + std::string(text) + "'");
}

std::string_view to_string(PrepKind k) {
    switch (k) {
        case PrepKind::rotate: return "rotate";
        case PrepKind::flip: return "flip";
        case PrepKind::nothing: return "nothing";
        case PrepKind::complex: return "complex";
    }
    return "?";
}

PrepKind prep_kind_from_string(std::string_view t) {
    if (t == "rotate") return PrepKind::rotate;
    if (t == "flip") return PrepKind::flip;
    if (t == "nothing") return PrepKind::nothing;
    if (t == "complex") return PrepKind::complex;
    throw Error("unknown preparatory skill kind '" + std::string(t) + "'");
}

template <class T>
void put_opt(json& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
}

json condition_to_json(const Condition& c) {
    json j = json::object();
    if (c.orientation) j["orientation"] = to_string(*c.orientation);
    put_opt(j, "grasped", c.grasped);
    put_opt(j, "box_open", c.box_open);
    return j;
}

Condition condition_from_json(const nlohmann::json& j) {
    Condition c;
    for (const auto& [key, value] : j.items()) {
        if (key == "orientation") c.orientation = orientation_from_string(value.get<std::string>());
        else if (key == "grasped") c.grasped = value.get<bool>();
        else if (key == "box_open") c.box_open = value.get<bool>();
        else throw Error("unknown precondition field '" + key + "'");
    }
    return c;
}

json effect_to_json(const Effect& e) {
    json j = json::object();
    put_opt(j, "grasped", e.grasped);
    put_opt(j, "box_open", e.box_open);
    put_opt(j, "object_in_box", e.object_in_box);
    return j;
}

Effect effect_from_json(const nlohmann::json& j) {
    Effect e;
    for (const auto& [key, value] : j.items()) {
        if (key == "grasped") e.grasped = value.get<bool>();
        else if (key == "box_open") e.box_open = value.get<bool>();
        else if (key == "object_in_box") e.object_in_box = value.get<bool>();
        else throw Error("unknown effect field '" + key + "'");
    }
    return e;
}

json world_to_json(const WorldState& w) {
    return json{{"orientation", to_string(w.orientation)},
                {"grasped", w.grasped},
                {"box_open", w.box_open},
                {"object_in_box", w.object_in_box}};
}

WorldState world_from_json(const nlohmann::json& j) {
    WorldState w;
    w.orientation = orientation_from_string(j.at("orientation").get<std::string>());
    w.grasped = j.at("grasped").get<bool>();
    w.box_open = j.at("box_open").get<bool>();
    w.object_in_box = j.at("object_in_box").get<bool>();
    return w;
}

std::vector<PreparatorySkillDef> standard_preps() {
    return {
        {"rot90", PrepKind::rotate, 1, false},
        {"rot180", PrepKind::rotate, 2, false},
        {"rot270", PrepKind::rotate, 3, false},
        {"flip", PrepKind::flip, 0, false},
        {"nothing", PrepKind::nothing, 0, false},
    };
}

SensingActionDef weigh_action() {
    SensingActionDef w;
    w.id = "weigh";
    w.observes = Aspect::grasp;
    w.sigma = 0.05;
    return w;
}

}  // namespace

std::string_view to_string(Orientation o) {
    switch (o) {
        case Orientation::bottom: return "bottom";
        case Orientation::binding: return "binding";
        case Orientation::open: return "open";
        case Orientation::top: return "top";
    }
    return "?";
}

Orientation orientation_from_string(std::string_view text) {
    if (text == "bottom") return Orientation::bottom;
    if (text == "binding") return Orientation::binding;
    if (text == "open") return Orientation::open;
    if (text == "top") return Orientation::top;
    throw Error("unknown orientation '" + std::string(text) + "'");
}

Orientation rotate(Orientation o, int quarter_turns) {
    const int k = ((static_cast<int>(o) + quarter_turns) % 4 + 4) % 4;
    return static_cast<Orientation>(k);
}

std::string describe(const WorldState& w) {
    return "orientation=" + std::string(to_string(w.orientation)) + ",grasped=" + (w.grasped ? "true" : "false") +
           ",box_open=" + (w.box_open ? "true" : "false") + ",object_in_box=" + (w.object_in_box ? "true" : "false");
}

WorldState apply_overrides(WorldState w, std::string_view overrides) {
    for (const auto& item : split(overrides, ',')) {
        const auto kv = trim(item);
        if (kv.empty()) continue;
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Error("world override '" + kv + "' is not key=value");
        const auto key = trim(kv.substr(0, eq));
        const auto value = trim(kv.substr(eq + 1));
        if (key == "orientation") w.orientation = orientation_from_string(value);
        else if (key == "grasped") w.grasped = parse_bool(value);
        else if (key == "box_open") w.box_open = parse_bool(value);
        else if (key == "object_in_box") w.object_in_box = parse_bool(value);
        else throw Error("unknown world field '" + key + "'");
    }
    return w;
}

std::string_view to_string(Aspect a) {
    switch (a) {
        case Aspect::orientation: return "orientation";
        case Aspect::box_open: return "box_open";
        case Aspect::grasp: return "grasp";
    }
    return "?";
}

Aspect aspect_from_string(std::string_view text) {
    if (text == "orientation") return Aspect::orientation;
    if (text == "box_open") return Aspect::box_open;
    if (text == "grasp") return Aspect::grasp;
    throw Error("unknown aspect '" + std::string(text) + "'");
}

const std::vector<std::string>& aspect_classes(Aspect a) {
    static const std::vector<std::string> orientation{"bottom", "binding", "open", "top"};
    static const std::vector<std::string> box{"closed", "open"};
    static const std::vector<std::string> grasp{"not-grasped", "grasped"};
    switch (a) {
        case Aspect::orientation: return orientation;
        case Aspect::box_open: return box;
        case Aspect::grasp: return grasp;
    }
    return orientation;
}

std::size_t aspect_class(const WorldState& w, Aspect a) {
    switch (a) {
        case Aspect::orientation: return static_cast<std::size_t>(w.orientation);
        case Aspect::box_open: return w.box_open ? 1 : 0;
        case Aspect::grasp: return w.grasped ? 1 : 0;
    }
    return 0;
}

bool Condition::holds(const WorldState& w) const {
    if (orientation && w.orientation != *orientation) return false;
    if (grasped && w.grasped != *grasped) return false;
    if (box_open && w.box_open != *box_open) return false;
    return true;
}

WorldState Effect::apply(WorldState w) const {
    if (grasped) w.grasped = *grasped;
    if (box_open) w.box_open = *box_open;
    if (object_in_box) w.object_in_box = *object_in_box;
    return w;
}

const SensingActionDef& Scenario::sensing_action(std::string_view id) const {
    for (const auto& s : sensing)
        if (s.id == id) return s;
    throw Error("scenario '" + name + "' has no sensing action '" + std::string(id) + "'");
}

const PreparatorySkillDef& Scenario::prep(std::string_view id) const {
    for (const auto& p : preps)
        if (p.id == id) return p;
    throw Error("scenario '" + name + "' has no preparatory skill '" + std::string(id) + "'");
}

const ComplexSkillDef& Scenario::complex_skill(std::string_view id) const {
    for (const auto& c : complex)
        if (c.id == id) return c;
    throw Error("scenario '" + name + "' has no complex skill '" + std::string(id) + "'");
}

const SensingActionDef* Scenario::weighing() const {
    for (const auto& s : sensing)
        if (s.is_weighing()) return &s;
    return nullptr;
}

std::vector<const SensingActionDef*> Scenario::classified_sensing() const {
    std::vector<const SensingActionDef*> out;
    for (const auto& s : sensing)
        if (!s.is_weighing()) out.push_back(&s);
    return out;
}

void Scenario::validate() const {
    if (name.empty()) throw Error("scenario needs a name");
    if (classified_sensing().empty()) throw Error("scenario '" + name + "' has no classified sensing action");
    for (const auto& s : sensing) {
        if (s.samples < 2) throw Error("sensing action '" + s.id + "' needs at least 2 samples");
        if (!(s.duration > 0.0)) throw Error("sensing action '" + s.id + "' needs a positive duration");
        if (!(s.sigma >= 0.0)) throw Error("sensing action '" + s.id + "' has negative sigma");
        if (!(s.confusion >= 0.0 && s.confusion <= 1.0))
            throw Error("sensing action '" + s.id + "' confusion must lie in [0, 1]");
        if (!s.is_weighing() && s.prototypes.size() != aspect_classes(s.observes).size())
            throw Error("sensing action '" + s.id + "' needs one prototype per class of " +
                        std::string(to_string(s.observes)));
    }
    for (const auto& c : complex)
        if (!(c.success_prob >= 0.0 && c.success_prob <= 1.0))
            throw Error("complex skill '" + c.id + "' success probability must lie in [0, 1]");
    for (const auto& p : preps)
        if (p.kind == PrepKind::complex) throw Error("scenario preps must be primitive, '" + p.id + "' is complex");
    if (cycling_period < 1) throw Error("cycling period must be >= 1");
    if (!cycling_prep.empty()) prep(cycling_prep);
}

Scenario book_scenario() {
    Scenario s;
    s.name = "book";
    s.flip = FlipSemantics::book;

    SensingActionDef slide;
    slide.id = "slide";
    slide.observes = Aspect::orientation;
    slide.prototypes = {{1.0, 0.0, 0.5, 1.0}, {2.0, 0.5, 0.5, 2.0}, {0.5, 1.0, 0.5, 3.0}, {1.5, -0.5, 0.5, 4.0}};
    slide.sigma = 0.3;
    slide.confusion = 0.07;

    // Poking and pressing mostly slip off the edge, so their signals only
    // weakly track the orientation of the book.
    SensingActionDef poke;
    poke.id = "poke";
    poke.observes = Aspect::orientation;
    poke.prototypes = {{1.0, 0.5, 0.3, 2.0}, {0.4, 0.0, 0.3, 2.5}, {1.3, -0.4, 0.3, 2.0}, {0.7, 0.2, 0.4, 3.0}};
    poke.sigma = 0.3;
    poke.confusion = 0.66;

    SensingActionDef press;
    press.id = "press";
    press.observes = Aspect::orientation;
    press.prototypes = {{0.5, 0.0, 0.2, 1.5}, {1.0, 0.3, 0.2, 1.5}, {1.5, 0.0, 0.2, 2.0}, {0.8, -0.3, 0.3, 1.5}};
    press.sigma = 0.3;
    press.confusion = 0.55;

    s.sensing = {slide, poke, press, weigh_action()};
    s.preps = standard_preps();

    ComplexSkillDef grasp;
    grasp.id = "tabletop-grasp";
    grasp.precondition.orientation = Orientation::binding;
    grasp.precondition.grasped = false;
    grasp.success_prob = 0.98;
    grasp.requires_grasp = false;
    grasp.effect_on_success.grasped = true;

    ComplexSkillDef drop;
    drop.id = "drop-into-box";
    drop.precondition.grasped = true;
    drop.success_prob = 0.98;
    drop.requires_grasp = true;
    drop.effect_on_success.grasped = false;
    drop.effect_on_success.object_in_box = true;

    ComplexSkillDef lean;
    lean.id = "lean-against-wall";
    lean.precondition.grasped = true;
    lean.precondition.orientation = Orientation::binding;
    lean.success_prob = 0.95;
    lean.requires_grasp = true;
    lean.effect_on_success.grasped = false;

    s.complex = {grasp, drop, lean};
    s.cycling_prep = "rot90";
    s.cycling_period = 4;
    return s;
}

Scenario box_scenario() {
    Scenario s;
    s.name = "box";
    s.flip = FlipSemantics::box;

    // Poking the lid separates open from closed; sliding and pressing hardly do.
    SensingActionDef slide;
    slide.id = "slide";
    slide.observes = Aspect::box_open;
    slide.prototypes = {{1.0, 0.0, 0.5, 1.0}, {1.1, 0.1, 0.5, 1.2}};
    slide.sigma = 0.1;
    slide.confusion = 0.45;

    SensingActionDef poke;
    poke.id = "poke";
    poke.observes = Aspect::box_open;
    poke.prototypes = {{2.0, 0.0, 0.3, 2.0}, {0.3, 0.5, 0.3, 3.0}};
    poke.sigma = 0.3;
    poke.confusion = 0.03;

    SensingActionDef press;
    press.id = "press";
    press.observes = Aspect::box_open;
    press.prototypes = {{0.8, 0.1, 0.2, 1.5}, {0.9, 0.2, 0.2, 1.6}};
    press.sigma = 0.1;
    press.confusion = 0.40;

    s.sensing = {slide, poke, press, weigh_action()};
    s.preps = standard_preps();

    ComplexSkillDef place;
    place.id = "place-in-box";
    place.precondition.box_open = true;
    place.success_prob = 0.98;
    place.requires_grasp = false;
    place.effect_on_success.object_in_box = true;
    s.complex = {place};

    s.cycling_prep = "flip";
    s.cycling_period = 2;
    return s;
}

Scenario load_scenario(const std::string& name_or_path) {
    if (name_or_path == "book") return book_scenario();
    if (name_or_path == "box") return box_scenario();
    return deserialize_scenario(read_file(name_or_path));
}

std::string serialize_scenario(const Scenario& s) {
    json doc;
    doc["format"] = kScenarioFormatName;
    doc["version"] = kScenarioFormatVersion;
    doc["name"] = s.name;
    doc["flip"] = s.flip == FlipSemantics::book ? "book" : "box";
    auto& sensing = doc["sensing_actions"] = json::array();
    for (const auto& a : s.sensing) {
        json j;
        j["id"] = a.id;
        j["observes"] = to_string(a.observes);
        j["samples"] = a.samples;
        j["duration"] = a.duration;
        j["sigma"] = a.sigma;
        j["confusion"] = a.confusion;
        j["channel_gain"] = a.channel_gain;
        if (a.is_weighing()) {
            j["grasp_force"] = a.grasp_force;
            j["force_threshold"] = a.force_threshold;
        } else {
            auto& protos = j["prototypes"] = json::array();
            for (const auto& p : a.prototypes)
                protos.push_back({{"step", p.step}, {"ramp", p.ramp}, {"sine_amp", p.sine_amp}, {"sine_freq", p.sine_freq}});
        }
        sensing.push_back(std::move(j));
    }
    auto& preps = doc["preparatory_skills"] = json::array();
    for (const auto& p : s.preps) {
        json j{{"id", p.id}, {"kind", to_string(p.kind)}};
        if (p.kind == PrepKind::rotate) j["quarter_turns"] = p.quarter_turns;
        j["produces_grasp"] = p.produces_grasp;
        preps.push_back(std::move(j));
    }
    auto& complex = doc["complex_skills"] = json::array();
    for (const auto& c : s.complex)
        complex.push_back({{"id", c.id},
                           {"precondition", condition_to_json(c.precondition)},
                           {"success_prob", c.success_prob},
                           {"requires_grasp", c.requires_grasp},
                           {"effect_on_success", effect_to_json(c.effect_on_success)}});
    doc["cycling_prep"] = s.cycling_prep;
    doc["cycling_period"] = s.cycling_period;
    doc["initial"] = world_to_json(s.initial);
    return doc.dump(2) + "\n";
}

Scenario deserialize_scenario(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.at("format").get<std::string>() != kScenarioFormatName) throw Error("not a scenario document");
        if (doc.at("version").get<int>() != kScenarioFormatVersion) throw Error("unsupported scenario version");
        Scenario s;
        s.name = doc.at("name").get<std::string>();
        const auto flip = doc.at("flip").get<std::string>();
        if (flip == "book") s.flip = FlipSemantics::book;
        else if (flip == "box") s.flip = FlipSemantics::box;
        else throw Error("unknown flip semantics '" + flip + "'");
        for (const auto& j : doc.at("sensing_actions")) {
            SensingActionDef a;
            a.id = j.at("id").get<std::string>();
            a.observes = aspect_from_string(j.at("observes").get<std::string>());
            a.samples = j.at("samples").get<std::size_t>();
            a.duration = j.at("duration").get<double>();
            a.sigma = j.at("sigma").get<double>();
            a.confusion = j.at("confusion").get<double>();
            a.channel_gain = j.at("channel_gain").get<std::array<double, kChannels>>();
            if (a.is_weighing()) {
                a.grasp_force = j.at("grasp_force").get<double>();
                a.force_threshold = j.at("force_threshold").get<double>();
            } else {
                for (const auto& p : j.at("prototypes"))
                    a.prototypes.push_back({p.at("step").get<double>(), p.at("ramp").get<double>(),
                                            p.at("sine_amp").get<double>(), p.at("sine_freq").get<double>()});
            }
            s.sensing.push_back(std::move(a));
        }
        for (const auto& j : doc.at("preparatory_skills")) {
            PreparatorySkillDef p;
            p.id = j.at("id").get<std::string>();
            p.kind = prep_kind_from_string(j.at("kind").get<std::string>());
            p.quarter_turns = j.value("quarter_turns", 0);
            p.produces_grasp = j.value("produces_grasp", false);
            s.preps.push_back(std::move(p));
        }
        for (const auto& j : doc.at("complex_skills")) {
            ComplexSkillDef c;
            c.id = j.at("id").get<std::string>();
            c.precondition = condition_from_json(j.at("precondition"));
            c.success_prob = j.at("success_prob").get<double>();
            c.requires_grasp = j.at("requires_grasp").get<bool>();
            c.effect_on_success = effect_from_json(j.at("effect_on_success"));
            s.complex.push_back(std::move(c));
        }
        s.cycling_prep = doc.at("cycling_prep").get<std::string>();
        s.cycling_period = doc.at("cycling_period").get<int>();
        s.initial = world_from_json(doc.at("initial"));
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("scenario schema violation: ") + e.what());
    }
}

HapticTimeSeries prototype_series(const SensingActionDef& action, std::size_t cls) {
    if (cls >= action.prototypes.size())
        throw Error("sensing action '" + action.id + "' has no prototype for class " + std::to_string(cls));
    const Prototype& p = action.prototypes[cls];
    HapticTimeSeries ts;
    ts.sensing_action = action.id;
    ts.steps.resize(action.samples);
    const double dt = action.duration / static_cast<double>(action.samples - 1);
    for (std::size_t k = 0; k < action.samples; ++k) {
        HapticStep& s = ts.steps[k];
        s.t = static_cast<double>(k) * dt;
        const double step = s.t >= 0.5 * action.duration ? p.step : 0.0;
        for (std::size_t c = 0; c < kChannels; ++c) {
            const double v = action.channel_gain[c] *
                             (step + p.ramp * s.t +
                              p.sine_amp * std::sin(2.0 * std::numbers::pi * p.sine_freq * s.t + 0.7 * static_cast<double>(c)));
            if (c < 3) s.force[c] = v;
            else if (c < 6) s.torque[c - 3] = v;
            else s.position[c - 6] = v;
        }
    }
    return ts;
}

HapticTimeSeries sense(const WorldState& world, const SensingActionDef& action, Rng& rng, std::string series_id) {
    std::normal_distribution<double> noise(0.0, 1.0);
    HapticTimeSeries ts;
    if (action.is_weighing()) {
        ts.sensing_action = action.id;
        ts.steps.resize(action.samples);
        const double dt = action.duration / static_cast<double>(action.samples - 1);
        for (std::size_t k = 0; k < action.samples; ++k) {
            HapticStep& s = ts.steps[k];
            s.t = static_cast<double>(k) * dt;
            s.force = {action.sigma * noise(rng), action.sigma * noise(rng),
                       (world.grasped ? -action.grasp_force : 0.0) + action.sigma * noise(rng)};
        }
    } else {
        const std::size_t truth = aspect_class(world, action.observes);
        std::size_t emitted = truth;
        const std::size_t n = action.prototypes.size();
        if (n > 1 && bernoulli(rng, action.confusion)) emitted = (truth + 1 + uniform_index(rng, n - 1)) % n;
        ts = prototype_series(action, emitted);
        if (action.sigma > 0.0) {
            for (auto& s : ts.steps) {
                for (int c = 0; c < 3; ++c) {
                    s.force[c] += action.sigma * action.channel_gain[c] * noise(rng);
                    s.torque[c] += action.sigma * action.channel_gain[3 + c] * noise(rng);
                    s.position[c] += action.sigma * action.channel_gain[6 + c] * noise(rng);
                }
            }
        }
    }
    ts.series_id = std::move(series_id);
    return ts;
}

bool weigh_reports_grasp(const HapticTimeSeries& ts, const SensingActionDef& weigh) {
    if (ts.steps.empty()) throw Error("empty weighing series");
    double sum = 0.0;
    for (const auto& s : ts.steps)
        sum += std::sqrt(s.force[0] * s.force[0] + s.force[1] * s.force[1] + s.force[2] * s.force[2]);
    return sum / static_cast<double>(ts.steps.size()) > weigh.force_threshold;
}

WorldState apply_prep(const Scenario& scenario, WorldState world, const PreparatorySkillDef& skill) {
    switch (skill.kind) {
        case PrepKind::rotate:
            world.orientation = rotate(world.orientation, skill.quarter_turns);
            break;
        case PrepKind::flip:
            if (scenario.flip == FlipSemantics::box) {
                world.box_open = !world.box_open;
            } else {
                // bottom <-> top, binding <-> open
                static constexpr Orientation flipped[] = {Orientation::top, Orientation::open, Orientation::binding,
                                                          Orientation::bottom};
                world.orientation = flipped[static_cast<int>(world.orientation)];
            }
            break;
        case PrepKind::nothing:
            break;
        case PrepKind::complex:
            throw Error("complex preparatory skill '" + skill.id + "' must be executed by the agent");
    }
    return world;
}

std::pair<bool, WorldState> attempt_complex(const WorldState& world, const ComplexSkillDef& skill, Rng& rng) {
    if (!skill.precondition.holds(world)) return {false, world};
    if (!bernoulli(rng, skill.success_prob)) return {false, world};
    return {true, skill.effect_on_success.apply(world)};
}

double reward_of(bool success, const PsParams& params) {
    return success ? params.lambda_succ : params.lambda_fail;
}

WorldState randomize_start(WorldState world, Rng& rng) {
    world.orientation = static_cast<Orientation>(uniform_index(rng, 4));
    world.grasped = false;
    world.object_in_box = false;
    return world;
}

WorldState random_start_state(const Scenario& scenario, WorldState world, Rng& rng) {
    world = randomize_start(world, rng);
    if (!scenario.cycling_prep.empty()) {
        const auto& cycle = scenario.prep(scenario.cycling_prep);
        const auto k = uniform_index(rng, static_cast<std::uint64_t>(scenario.cycling_period));
        for (std::uint64_t i = 0; i < k; ++i) world = apply_prep(scenario, world, cycle);
    }
    return world;
}

}  // namespace skillmem
