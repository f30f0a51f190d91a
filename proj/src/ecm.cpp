#include "skillmem/ecm.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "skillmem/error.hpp"

namespace skillmem {

namespace {

constexpr int kEcmFormatVersion = 1;
constexpr std::string_view kEcmFormatName = "skillmem.ecm";

std::string clip_name(const Ecm& ecm, ClipId id) {
    const Clip& c = ecm.clip(id);
    return "'" + c.label + "' (id " + std::to_string(id) + ")";
}

}  // namespace

std::string_view to_string(ClipKind kind) {
    switch (kind) {
        case ClipKind::start: return "start";
        case ClipKind::sensing_action: return "sensing-action";
        case ClipKind::perceptual_state: return "perceptual-state";
        case ClipKind::preparatory_skill: return "preparatory-skill";
    }
    return "?";
}

ClipKind clip_kind_from_string(std::string_view text) {
    if (text == "start") return ClipKind::start;
    if (text == "sensing-action") return ClipKind::sensing_action;
    if (text == "perceptual-state") return ClipKind::perceptual_state;
    if (text == "preparatory-skill") return ClipKind::preparatory_skill;
    throw Error("unknown clip kind '" + std::string(text) + "'");
}

int layer_of(ClipKind kind) {
    return static_cast<int>(kind) + 1;
}

void PsParams::validate() const {
    if (!(h_init >= kWeightFloor)) throw Error("h_init must be >= 1");
    if (!(lambda_succ > 0.0)) throw Error("lambda_succ must be > 0");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw Error("gamma must lie in [0, 1)");
    if (!std::isfinite(lambda_fail)) throw Error("lambda_fail must be finite");
}

Ecm::Ecm(std::string owner_skill, bool requires_grasp)
    : owner_skill_(std::move(owner_skill)), requires_grasp_(requires_grasp) {}

const Clip& Ecm::clip(ClipId id) const {
    if (id >= clips_.size()) throw Error("unknown clip id " + std::to_string(id));
    return clips_[id];
}

ClipId Ecm::start() const {
    for (const Clip& c : clips_)
        if (c.kind == ClipKind::start) return c.id;
    throw Error("ECM has no start clip");
}

std::vector<ClipId> Ecm::layer(int layer) const {
    std::vector<ClipId> out;
    for (const Clip& c : clips_)
        if (c.layer == layer) out.push_back(c.id);
    return out;
}

std::span<const Edge> Ecm::children(ClipId parent) const {
    clip(parent);
    return children_[parent];
}

std::optional<ClipId> Ecm::parent_of(ClipId state) const {
    for (ClipId p = 0; p < children_.size(); ++p)
        for (const Edge& e : children_[p])
            if (e.child == state) return p;
    return std::nullopt;
}

std::size_t Ecm::edge_count() const {
    std::size_t n = 0;
    for (const auto& row : children_) n += row.size();
    return n;
}

bool Ecm::has_edge(ClipId from, ClipId to) const {
    if (from >= children_.size()) return false;
    const auto& row = children_[from];
    return std::any_of(row.begin(), row.end(), [to](const Edge& e) { return e.child == to; });
}

Edge& Ecm::edge_ref(ClipId from, ClipId to) {
    if (from < children_.size())
        for (Edge& e : children_[from])
            if (e.child == to) return e;
    throw Error("no such transition");
}

double Ecm::weight(ClipId from, ClipId to) const {
    return const_cast<Ecm*>(this)->edge_ref(from, to).weight;
}

void Ecm::set_weight(ClipId from, ClipId to, double weight) {
    if (!(weight >= kWeightFloor)) throw Error("weight below floor");
    edge_ref(from, to).weight = weight;
}

std::optional<ClipId> Ecm::find_sensing(std::string_view action) const {
    for (const Clip& c : clips_)
        if (c.kind == ClipKind::sensing_action && c.label == action) return c.id;
    return std::nullopt;
}

std::optional<ClipId> Ecm::find_state(ClipId sensing, std::string_view label) const {
    for (const Edge& e : children(sensing))
        if (clips_[e.child].label == label) return e.child;
    return std::nullopt;
}

std::optional<ClipId> Ecm::find_prep(std::string_view skill) const {
    for (const Clip& c : clips_)
        if (c.kind == ClipKind::preparatory_skill && c.label == skill) return c.id;
    return std::nullopt;
}

ClipId Ecm::add_clip(ClipKind kind, std::string label, std::optional<std::string> semantic_tag) {
    if (kind == ClipKind::start && !clips_.empty() && std::any_of(clips_.begin(), clips_.end(), [](const Clip& c) {
            return c.kind == ClipKind::start;
        }))
        throw Error("ECM already has a start clip");
    const auto id = static_cast<ClipId>(clips_.size());
    clips_.push_back(Clip{id, layer_of(kind), kind, std::move(label), std::move(semantic_tag)});
    children_.emplace_back();
    return id;
}

void Ecm::add_edge(ClipId from, ClipId to, double weight) {
    const Clip& a = clip(from);
    const Clip& b = clip(to);
    if (b.layer != a.layer + 1)
        throw Error("edge " + clip_name(*this, from) + " -> " + clip_name(*this, to) +
                    " does not connect adjacent layers");
    if (!(weight >= kWeightFloor)) throw Error("weight below floor");
    if (has_edge(from, to)) throw Error("duplicate edge " + clip_name(*this, from) + " -> " + clip_name(*this, to));
    if (b.kind == ClipKind::perceptual_state && parent_of(to))
        throw Error("perceptual state " + clip_name(*this, to) + " already has a sensing parent");
    children_[from].push_back(Edge{to, weight});
}

void Ecm::set_semantic_tag(ClipId id, std::optional<std::string> tag) {
    clip(id);
    clips_[id].semantic_tag = std::move(tag);
}

void Ecm::validate() const {
    std::size_t starts = 0;
    for (const Clip& c : clips_) {
        if (c.layer != layer_of(c.kind))
            throw Error("clip " + clip_name(*this, c.id) + " has kind " + std::string(to_string(c.kind)) +
                        " but layer " + std::to_string(c.layer));
        if (c.kind == ClipKind::start) ++starts;
    }
    if (starts != 1) throw Error("ECM must have exactly one start clip, found " + std::to_string(starts));

    std::vector<int> parents(clips_.size(), 0);
    for (ClipId p = 0; p < children_.size(); ++p) {
        for (const Edge& e : children_[p]) {
            if (e.child >= clips_.size()) throw Error("dangling edge to clip id " + std::to_string(e.child));
            if (clips_[e.child].layer != clips_[p].layer + 1)
                throw Error("edge " + clip_name(*this, p) + " -> " + clip_name(*this, e.child) +
                            " does not connect adjacent layers");
            if (!(e.weight >= kWeightFloor)) throw Error("weight below floor");
            ++parents[e.child];
        }
    }
    for (const Clip& c : clips_) {
        if (c.kind != ClipKind::perceptual_state) continue;
        if (parents[c.id] != 1)
            throw Error("perceptual state " + clip_name(*this, c.id) + " must have exactly one sensing parent");
        if (children_[c.id].empty())
            throw Error("perceptual state " + clip_name(*this, c.id) + " has no preparatory child");
    }
}

double transition_probability(const Ecm& ecm, ClipId from, ClipId to) {
    if (!ecm.has_edge(from, to)) throw Error("no such transition");
    double total = 0.0;
    double w = 0.0;
    for (const Edge& e : ecm.children(from)) {
        total += e.weight;
        if (e.child == to) w = e.weight;
    }
    return w / total;
}

std::optional<ClipId> sample_child(const Ecm& ecm, ClipId from, Rng& rng,
                                   const std::function<bool(ClipId)>& admissible) {
    const auto kids = ecm.children(from);
    double total = 0.0;
    std::optional<ClipId> last;
    for (const Edge& e : kids) {
        if (admissible && !admissible(e.child)) continue;
        total += e.weight;
        last = e.child;
    }
    if (!last) return std::nullopt;
    const double u = uniform01(rng) * total;
    double acc = 0.0;
    for (const Edge& e : kids) {
        if (admissible && !admissible(e.child)) continue;
        acc += e.weight;
        if (u < acc) return e.child;
    }
    return last;  // u rounded up to total
}

WalkPath random_walk(const Ecm& ecm, const StateEstimator& estimate, Rng& rng) {
    WalkPath path;
    path.clip_ids[0] = ecm.start();
    const auto sensing = sample_child(ecm, path.clip_ids[0], rng);
    if (!sensing) throw Error("start clip has no sensing actions");
    path.clip_ids[1] = *sensing;

    const std::optional<ClipId> state = estimate ? estimate(*sensing) : std::nullopt;
    if (!state) throw Error("state estimate required");
    if (!ecm.has_edge(*sensing, *state))
        throw Error("state estimate " + clip_name(ecm, *state) + " is not a state of sensing action " +
                    clip_name(ecm, *sensing));
    path.clip_ids[2] = *state;
    path.forced_transitions.push_back(2);

    const auto prep = sample_child(ecm, *state, rng);
    if (!prep) throw Error("perceptual state has no preparatory child");
    path.clip_ids[3] = *prep;
    return path;
}

WalkPath random_walk(const Ecm& ecm, std::optional<ClipId> state_override, Rng& rng) {
    if (state_override && ecm.clip(*state_override).kind != ClipKind::perceptual_state)
        throw Error("state override must be a perceptual-state clip");
    return random_walk(
        ecm,
        [&](ClipId sensing) -> std::optional<ClipId> {
            if (state_override && ecm.has_edge(sensing, *state_override)) return state_override;
            return std::nullopt;
        },
        rng);
}

void update_weights(Ecm& ecm, const WalkPath& path, double reward, const PsParams& params) {
    for (std::size_t k = 0; k + 1 < path.clip_ids.size(); ++k)
        if (!ecm.has_edge(path.clip_ids[k], path.clip_ids[k + 1])) throw Error("no such transition");

    auto on_path = [&](ClipId from, ClipId to) {
        for (std::size_t k = 0; k + 1 < path.clip_ids.size(); ++k)
            if (path.clip_ids[k] == from && path.clip_ids[k + 1] == to) return true;
        return false;
    };

    auto& adjacency = ecm.mutable_adjacency();
    if (params.gamma == 0.0) {
        // Off-path edges are fixed points when there is no damping.
        for (std::size_t k = 0; k + 1 < path.clip_ids.size(); ++k)
            for (Edge& e : adjacency[path.clip_ids[k]])
                if (e.child == path.clip_ids[k + 1]) e.weight = std::max(kWeightFloor, e.weight + reward);
        return;
    }
    for (ClipId p = 0; p < adjacency.size(); ++p) {
        for (Edge& e : adjacency[p]) {
            const double rho = on_path(p, e.child) ? 1.0 : 0.0;
            e.weight = std::max(kWeightFloor, e.weight - params.gamma * (e.weight - 1.0) + rho * reward);
        }
    }
}

Ecm init_ecm(std::string owner_skill, const std::vector<SensingInit>& sensing,
             const std::vector<std::string>& preps, const PsParams& params, bool requires_grasp) {
    params.validate();
    if (sensing.empty()) throw Error("ECM needs at least one sensing action");
    if (preps.empty()) throw Error("ECM needs at least one preparatory skill");
    for (const auto& s : sensing)
        if (s.states.empty()) throw Error("sensing action '" + s.action + "' has no perceptual states");

    Ecm ecm(std::move(owner_skill), requires_grasp);
    const ClipId start = ecm.add_clip(ClipKind::start, "#");

    std::vector<ClipId> state_clips;
    for (const auto& s : sensing) {
        if (ecm.find_sensing(s.action)) throw Error("duplicate sensing action '" + s.action + "'");
        const ClipId sid = ecm.add_clip(ClipKind::sensing_action, s.action);
        ecm.add_edge(start, sid, std::max(kWeightFloor, s.discrimination));
        for (const auto& label : s.states) {
            if (ecm.find_state(sid, label)) throw Error("duplicate state '" + label + "' for '" + s.action + "'");
            const ClipId st = ecm.add_clip(ClipKind::perceptual_state, label);
            // Layer 2 -> 3 is decided by the classifier; this weight is bookkeeping only.
            ecm.add_edge(sid, st, params.h_init);
            state_clips.push_back(st);
        }
    }
    for (const auto& prep : preps) {
        if (ecm.find_prep(prep)) throw Error("duplicate preparatory skill '" + prep + "'");
        const ClipId pid = ecm.add_clip(ClipKind::preparatory_skill, prep);
        for (ClipId st : state_clips) ecm.add_edge(st, pid, params.h_init);
    }
    return ecm;
}

ClipId add_preparatory_clip(Ecm& ecm, const std::string& skill_id, const PsParams& params) {
    params.validate();
    if (ecm.find_prep(skill_id))
        throw Error("preparatory skill '" + skill_id + "' already present in ECM of '" + ecm.owner_skill() + "'");
    const auto states = ecm.layer(3);
    if (states.empty()) throw Error("ECM has no perceptual states to connect from");
    const ClipId pid = ecm.add_clip(ClipKind::preparatory_skill, skill_id);
    for (ClipId st : states) ecm.add_edge(st, pid, params.h_init);
    return pid;
}

std::string serialize_ecm(const Ecm& ecm) {
    nlohmann::ordered_json doc;
    doc["format"] = kEcmFormatName;
    doc["version"] = kEcmFormatVersion;
    doc["owner_skill"] = ecm.owner_skill();
    doc["requires_grasp"] = ecm.requires_grasp();
    auto& clips = doc["clips"] = nlohmann::ordered_json::array();
    for (const Clip& c : ecm.clips()) {
        nlohmann::ordered_json j;
        j["id"] = c.id;
        j["layer"] = c.layer;
        j["kind"] = to_string(c.kind);
        j["label"] = c.label;
        j["semantic_tag"] = c.semantic_tag ? nlohmann::ordered_json(*c.semantic_tag) : nlohmann::ordered_json();
        clips.push_back(std::move(j));
    }
    auto& edges = doc["edges"] = nlohmann::ordered_json::array();
    for (const Clip& c : ecm.clips())
        for (const Edge& e : ecm.children(c.id)) edges.push_back({{"from", c.id}, {"to", e.child}, {"weight", e.weight}});
    return doc.dump(2) + "\n";
}

Ecm deserialize_ecm(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("ECM document is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != kEcmFormatName) throw Error("not an ECM document");
        const int version = doc.at("version").get<int>();
        if (version != kEcmFormatVersion) throw Error("unsupported ECM format version " + std::to_string(version));

        Ecm ecm(doc.at("owner_skill").get<std::string>(), doc.at("requires_grasp").get<bool>());
        for (const auto& j : doc.at("clips")) {
            const int layer = j.at("layer").get<int>();
            if (layer < 1 || layer > 4) throw Error("clip layer " + std::to_string(layer) + " outside 1..4");
            const ClipKind kind = clip_kind_from_string(j.at("kind").get<std::string>());
            if (layer != layer_of(kind))
                throw Error("clip kind " + std::string(to_string(kind)) + " cannot live in layer " + std::to_string(layer));
            std::optional<std::string> tag;
            if (j.contains("semantic_tag") && !j.at("semantic_tag").is_null()) tag = j.at("semantic_tag").get<std::string>();
            const ClipId id = ecm.add_clip(kind, j.at("label").get<std::string>(), std::move(tag));
            if (j.at("id").get<ClipId>() != id) throw Error("clip ids must be dense and in order");
        }
        for (const auto& j : doc.at("edges")) {
            const auto from = j.at("from").get<ClipId>();
            const auto to = j.at("to").get<ClipId>();
            if (from >= ecm.clips().size() || to >= ecm.clips().size())
                throw Error("dangling edge " + std::to_string(from) + " -> " + std::to_string(to));
            const double w = j.at("weight").get<double>();
            if (!(w >= kWeightFloor)) throw Error("weight below floor");
            ecm.add_edge(from, to, w);
        }
        ecm.validate();
        return ecm;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("ECM schema violation: ") + e.what());
    }
}

}  // namespace skillmem
