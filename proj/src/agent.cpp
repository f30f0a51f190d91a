#include "skillmem/agent.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <ostream>

#include "skillmem/error.hpp"
#include "skillmem/text.hpp"

namespace skillmem {

namespace {

constexpr std::string_view kRegistryFormatName = "skillmem.registry";
constexpr int kRegistryFormatVersion = 1;

std::string series_id(const std::string& action, const std::string& label, std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03zu", index);
    return action + "-" + label + "-" + buf;
}

WorldState with_class(WorldState w, Aspect aspect, std::size_t cls) {
    switch (aspect) {
        case Aspect::orientation: w.orientation = static_cast<Orientation>(cls); break;
        case Aspect::box_open: w.box_open = cls == 1; break;
        case Aspect::grasp: w.grasped = cls == 1; break;
    }
    return w;
}

}  // namespace

std::string_view to_string(SkillStatus s) {
    switch (s) {
        case SkillStatus::learning: return "learning";
        case SkillStatus::confident: return "confident";
        case SkillStatus::registered_as_prep: return "registered-as-prep";
    }
    return "?";
}

SkillStatus skill_status_from_string(std::string_view text) {
    if (text == "learning") return SkillStatus::learning;
    if (text == "confident") return SkillStatus::confident;
    if (text == "registered-as-prep") return SkillStatus::registered_as_prep;
    throw Error("unknown skill status '" + std::string(text) + "'");
}

double SkillRecord::confidence() const {
    if (recent.empty()) return 0.0;
    const auto wins = std::count(recent.begin(), recent.end(), true);
    return static_cast<double>(wins) / static_cast<double>(recent.size());
}

HapticDatabase create_haptic_database(const Scenario& scenario, const std::vector<std::string>& sensing_actions,
                                      std::size_t samples_per_state, bool supervised, Rng& rng) {
    if (samples_per_state == 0) throw Error("samples per state must be >= 1");
    if (sensing_actions.empty()) throw Error("no sensing actions given for the haptic database");
    std::vector<const SensingActionDef*> actions;
    for (const auto& id : sensing_actions) {
        const auto& a = scenario.sensing_action(id);
        if (a.is_weighing()) throw Error("weighing is not classified and has no haptic database");
        actions.push_back(&a);
    }

    HapticDatabase db;
    if (supervised) {
        for (const auto* a : actions) {
            const auto& classes = aspect_classes(a->observes);
            for (std::size_t c = 0; c < classes.size(); ++c) {
                const WorldState w = with_class(scenario.initial, a->observes, c);
                for (std::size_t i = 0; i < samples_per_state; ++i) {
                    auto ts = sense(w, *a, rng, series_id(a->id, classes[c], i));
                    ts.label = classes[c];
                    db.series.push_back(std::move(ts));
                }
                db.ground_truth[{a->id, classes[c]}] = classes[c];
            }
        }
        return db;
    }

    if (scenario.cycling_prep.empty()) throw Error("unsupervised database creation needs a state-cycling prep");
    const PreparatorySkillDef* cycle = nullptr;
    for (const auto& p : scenario.preps)
        if (p.id == scenario.cycling_prep) cycle = &p;
    if (!cycle) throw Error("state-cycling prep '" + scenario.cycling_prep + "' is not defined");

    WorldState w = scenario.initial;
    for (int j = 0; j < scenario.cycling_period; ++j) {
        const std::string label = "E" + std::to_string(j + 1);
        for (const auto* a : actions) {
            for (std::size_t i = 0; i < samples_per_state; ++i) {
                auto ts = sense(w, *a, rng, series_id(a->id, label, i));
                ts.label = label;
                db.series.push_back(std::move(ts));
            }
            db.ground_truth[{a->id, label}] = aspect_classes(a->observes)[aspect_class(w, a->observes)];
        }
        w = apply_prep(scenario, w, *cycle);
    }
    return db;
}

SkillRecord new_skill_record(const Scenario& scenario, const std::string& skill_id,
                             const std::map<std::string, StateModel>& models,
                             const std::vector<DiscriminationScore>& scores, const PsParams& params,
                             const std::map<std::pair<std::string, std::string>, std::string>& ground_truth) {
    SkillRecord rec;
    rec.skill = scenario.complex_skill(skill_id);
    rec.models = models;
    rec.scores = scores;

    std::vector<SensingInit> sensing;
    for (const auto& sc : scores) {
        const auto it = models.find(sc.sensing_action);
        if (it == models.end()) throw Error("no model for sensing action '" + sc.sensing_action + "'");
        sensing.push_back({sc.sensing_action, it->second.classes, sc.score});
    }
    std::vector<std::string> preps;
    for (const auto& p : scenario.preps) preps.push_back(p.id);
    rec.ecm = init_ecm(skill_id, sensing, preps, params, rec.skill.requires_grasp);
    for (const auto& s : sensing) {
        const ClipId sid = *rec.ecm.find_sensing(s.action);
        for (const auto& label : s.states) {
            const auto it = ground_truth.find({s.action, label});
            if (it != ground_truth.end()) rec.ecm.set_semantic_tag(*rec.ecm.find_state(sid, label), it->second);
        }
    }
    return rec;
}

TrainedSensing train_sensing(const Dataset& data, const AgentConfig& config) {
    if (config.folds < 2) throw Error("cross-validation needs at least 2 folds");
    TrainedSensing out;
    for (const auto& [action, series] : split_by_action(data)) {
        ClassifierConfig cc = config.classifier;
        cc.seed = derive_seed(config.classifier.seed, action);
        const double accuracy = cross_validate(series, config.folds, cc);
        out.models.emplace(action, train(series, cc));
        out.scores.push_back({action, accuracy, config.alpha, discrimination_score(accuracy, config.alpha)});
    }
    return out;
}

SkillRecord new_skill_record(const Scenario& scenario, const std::string& skill_id, const AgentConfig& config,
                             Rng& rng) {
    std::vector<std::string> actions;
    for (const auto* a : scenario.classified_sensing()) actions.push_back(a->id);
    const auto db = create_haptic_database(scenario, actions, config.samples_per_state, config.supervised, rng);

    const auto trained = train_sensing(db.series, config);
    return new_skill_record(scenario, skill_id, trained.models, trained.scores, config.params, db.ground_truth);
}

SkillRegistry::SkillRegistry(Scenario scenario, PsParams params)
    : scenario_(std::move(scenario)), params_(params) {
    params_.validate();
}

bool SkillRegistry::contains(const std::string& id) const {
    return records_.count(id) != 0;
}

SkillRecord& SkillRegistry::record(const std::string& id) {
    const auto it = records_.find(id);
    if (it == records_.end()) throw Error("unknown skill '" + id + "'");
    return it->second;
}

const SkillRecord& SkillRegistry::record(const std::string& id) const {
    const auto it = records_.find(id);
    if (it == records_.end()) throw Error("unknown skill '" + id + "'");
    return it->second;
}

void SkillRegistry::put(SkillRecord record) {
    const std::string id = record.skill.id;
    if (!records_.count(id)) order_.push_back(id);
    records_.insert_or_assign(id, std::move(record));
}

bool SkillRegistry::produces_grasp(const std::string& prep) const {
    for (const auto& p : scenario_.preps)
        if (p.id == prep) return p.produces_grasp;
    const auto it = records_.find(prep);
    if (it != records_.end()) return it->second.skill.produces_grasp();
    throw Error("unknown preparatory skill '" + prep + "'");
}

bool SkillRegistry::depends_on(const std::string& skill, const std::string& target) const {
    const auto it = records_.find(skill);
    if (it == records_.end()) return false;
    for (ClipId p : it->second.ecm.layer(4)) {
        const auto& label = it->second.ecm.clip(p).label;
        if (!records_.count(label)) continue;
        if (label == target || depends_on(label, target)) return true;
    }
    return false;
}

std::pair<RolloutRecord, WorldState> execute_skill(const SkillRegistry& registry, const std::string& skill_id,
                                                   const WorldState& world, Rng& rng) {
    const Scenario& scenario = registry.scenario();
    const SkillRecord& rec = registry.record(skill_id);
    const Ecm& ecm = rec.ecm;
    const PsParams& params = registry.params();

    RolloutRecord out;
    auto finish = [&](bool success, WorldState w) {
        out.success = success;
        out.reward = reward_of(success, params);
        return std::make_pair(out, w);
    };

    // Grasp gate. Weighing bypasses the classifier.
    bool want_grasp_preps = false;
    if (rec.skill.requires_grasp) {
        const SensingActionDef* weigh = scenario.weighing();
        if (!weigh) throw Error("skill '" + skill_id + "' requires a grasp but scenario has no weighing action");
        const auto ts = sense(world, *weigh, rng, "weigh");
        if (weigh_reports_grasp(ts, *weigh)) {
            out.sensing = weigh->id;
            out.sensed_series_id = ts.series_id;
            out.estimated_state = "grasped";
            out.prep = "-";
            const auto [ok, next] = attempt_complex(world, rec.skill, rng);
            return finish(ok, next);
        }
        want_grasp_preps = true;
    }

    WalkPath path;
    path.clip_ids[0] = ecm.start();
    const auto sensing = sample_child(ecm, path.clip_ids[0], rng);
    if (!sensing) throw Error("ECM of '" + skill_id + "' has no sensing actions");
    path.clip_ids[1] = *sensing;
    const std::string& action = ecm.clip(*sensing).label;
    out.sensing = action;

    const auto model = rec.models.find(action);
    if (model == rec.models.end()) throw Error("no trained model for sensing action '" + action + "'");
    const auto ts = sense(world, scenario.sensing_action(action), rng, action + "-r" + std::to_string(rec.rollouts));
    out.sensed_series_id = ts.series_id;
    const auto estimate = classify(model->second, ts);
    out.estimated_state = estimate.state;
    const auto state = ecm.find_state(*sensing, estimate.state);
    if (!state) throw Error("ECM has no state clip '" + estimate.state + "' under '" + action + "'");
    path.clip_ids[2] = *state;
    path.forced_transitions.push_back(2);

    const auto prep = sample_child(ecm, *state, rng, [&](ClipId c) {
        return registry.produces_grasp(ecm.clip(c).label) == want_grasp_preps;
    });
    if (!prep) {
        out.prep = "-";
        return finish(false, world);
    }
    path.clip_ids[3] = *prep;
    out.path = path;
    const std::string& prep_id = ecm.clip(*prep).label;
    out.prep = prep_id;

    WorldState w = world;
    if (registry.contains(prep_id) && !std::any_of(scenario.preps.begin(), scenario.preps.end(),
                                                   [&](const auto& p) { return p.id == prep_id; })) {
        w = execute_skill(registry, prep_id, w, rng).second;
    } else {
        w = apply_prep(scenario, w, scenario.prep(prep_id));
    }
    const auto [ok, next] = attempt_complex(w, rec.skill, rng);
    return finish(ok, next);
}

PlayResult play(SkillRegistry& registry, const std::string& skill_id, std::size_t max_rollouts,
                const ConfidenceConfig& confidence, Rng& rng) {
    if (confidence.window == 0) throw Error("confidence window must be >= 1");
    PlayResult result;
    SkillRecord& rec = registry.record(skill_id);
    WorldState world = registry.scenario().initial;
    for (std::size_t n = 0; n < max_rollouts; ++n) {
        world = random_start_state(registry.scenario(), world, rng);
        auto [rollout, next] = execute_skill(registry, skill_id, world, rng);
        world = next;
        if (rollout.path) update_weights(rec.ecm, *rollout.path, rollout.reward, registry.params());
        rec.recent.push_back(rollout.success);
        while (rec.recent.size() > confidence.window) rec.recent.pop_front();
        rollout.rollout_index = ++rec.rollouts;
        rollout.confidence = rec.confidence();
        result.rollouts.push_back(std::move(rollout));
        if (rec.recent.size() >= confidence.window && rec.confidence() >= confidence.threshold) {
            result.reached_confidence = true;
            break;
        }
    }
    if (result.reached_confidence && rec.status == SkillStatus::learning) rec.status = SkillStatus::confident;
    return result;
}

std::vector<std::string> register_as_prep(SkillRegistry& registry, const std::string& skill_id,
                                          const std::vector<std::string>& targets) {
    SkillRecord& rec = registry.record(skill_id);
    if (rec.status == SkillStatus::learning)
        throw Error("skill '" + skill_id + "' has not reached its confidence threshold");
    std::vector<std::string> warnings;
    for (const auto& target : targets) {
        if (target == skill_id) throw Error("skill '" + skill_id + "' cannot be registered into its own ECM");
        SkillRecord& tgt = registry.record(target);
        if (registry.depends_on(skill_id, target))
            throw Error("registering '" + skill_id + "' into '" + target + "' would create a cycle");
        if (tgt.ecm.find_prep(skill_id)) {
            warnings.push_back("skill '" + skill_id + "' is already a preparatory skill of '" + target + "'");
            continue;
        }
        add_preparatory_clip(tgt.ecm, skill_id, registry.params());
        rec.registered_into.push_back(target);
    }
    if (!rec.registered_into.empty()) rec.status = SkillStatus::registered_as_prep;
    return warnings;
}

double prep_selection_probability(const Ecm& ecm, const std::string& prep,
                                  const std::function<bool(ClipId)>& admissible) {
    const auto target = ecm.find_prep(prep);
    if (!target) throw Error("ECM of '" + ecm.owner_skill() + "' has no preparatory skill '" + prep + "'");
    double total = 0.0;
    for (const Edge& s : ecm.children(ecm.start())) {
        const double p_sensing = transition_probability(ecm, ecm.start(), s.child);
        const auto states = ecm.children(s.child);
        double p_prep = 0.0;
        for (const Edge& st : states) {
            double norm = 0.0, w = 0.0;
            for (const Edge& e : ecm.children(st.child)) {
                if (admissible && !admissible(e.child)) continue;
                norm += e.weight;
                if (e.child == *target) w = e.weight;
            }
            if (norm > 0.0) p_prep += w / norm;
        }
        total += p_sensing * p_prep / static_cast<double>(states.size());
    }
    return total;
}

void write_rollout_csv(std::ostream& out, const std::vector<RolloutRecord>& rollouts, bool header) {
    if (header) out << "rollout,sensing,state,prep,success,reward,confidence\n";
    for (const auto& r : rollouts)
        out << r.rollout_index << ',' << r.sensing << ',' << r.estimated_state << ',' << r.prep << ','
            << (r.success ? 1 : 0) << ',' << format_double(r.reward) << ',' << format_double(r.confidence) << '\n';
}

std::string serialize_registry(const SkillRegistry& registry) {
    using json = nlohmann::ordered_json;
    json doc;
    doc["format"] = kRegistryFormatName;
    doc["version"] = kRegistryFormatVersion;
    doc["scenario"] = json::parse(serialize_scenario(registry.scenario()));
    const auto& p = registry.params();
    doc["params"] = {{"lambda_succ", p.lambda_succ}, {"lambda_fail", p.lambda_fail}, {"h_init", p.h_init}, {"gamma", p.gamma}};
    auto& skills = doc["skills"] = json::array();
    for (const auto& id : registry.order()) {
        const SkillRecord& rec = registry.record(id);
        json j;
        j["id"] = id;
        j["status"] = to_string(rec.status);
        j["rollouts"] = rec.rollouts;
        j["confidence"] = rec.confidence();
        j["recent"] = std::vector<bool>(rec.recent.begin(), rec.recent.end());
        j["registered_into"] = rec.registered_into;
        auto& scores = j["discrimination"] = json::array();
        for (const auto& s : rec.scores)
            scores.push_back({{"sensing_action", s.sensing_action}, {"accuracy", s.accuracy}, {"alpha", s.alpha}, {"score", s.score}});
        auto& models = j["models"] = json::object();
        for (const auto& [action, model] : rec.models) models[action] = json::parse(serialize_model(model));
        j["ecm"] = json::parse(serialize_ecm(rec.ecm));
        skills.push_back(std::move(j));
    }
    return doc.dump(1) + "\n";
}

SkillRegistry deserialize_registry(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.at("format").get<std::string>() != kRegistryFormatName) throw Error("not a skill registry document");
        if (doc.at("version").get<int>() != kRegistryFormatVersion) throw Error("unsupported registry version");
        Scenario scenario = deserialize_scenario(doc.at("scenario").dump());
        PsParams params;
        const auto& p = doc.at("params");
        params.lambda_succ = p.at("lambda_succ").get<double>();
        params.lambda_fail = p.at("lambda_fail").get<double>();
        params.h_init = p.at("h_init").get<double>();
        params.gamma = p.at("gamma").get<double>();
        SkillRegistry registry(std::move(scenario), params);
        for (const auto& j : doc.at("skills")) {
            SkillRecord rec;
            rec.skill = registry.scenario().complex_skill(j.at("id").get<std::string>());
            rec.status = skill_status_from_string(j.at("status").get<std::string>());
            rec.rollouts = j.at("rollouts").get<std::size_t>();
            for (bool b : j.at("recent").get<std::vector<bool>>()) rec.recent.push_back(b);
            rec.registered_into = j.at("registered_into").get<std::vector<std::string>>();
            for (const auto& s : j.at("discrimination"))
                rec.scores.push_back({s.at("sensing_action").get<std::string>(), s.at("accuracy").get<double>(),
                                      s.at("alpha").get<double>(), s.at("score").get<double>()});
            for (const auto& [action, m] : j.at("models").items()) rec.models.emplace(action, deserialize_model(m.dump()));
            rec.ecm = deserialize_ecm(j.at("ecm").dump());
            if (rec.ecm.owner_skill() != rec.skill.id)
                throw Error("ECM owner '" + rec.ecm.owner_skill() + "' does not match skill '" + rec.skill.id + "'");
            registry.put(std::move(rec));
        }
        return registry;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("registry schema violation: ") + e.what());
    }
}

}  // namespace skillmem
