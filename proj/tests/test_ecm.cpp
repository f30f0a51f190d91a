#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <map>

#include "skillmem/ecm.hpp"
#include "skillmem/error.hpp"

using namespace skillmem;

namespace {

const std::vector<std::string> kOrient = {"bottom", "binding", "open", "top"};
const std::vector<std::string> kPreps = {"rot90", "rot180", "rot270", "flip", "nothing", "extra"};

Ecm book_like(std::vector<double> d = {std::exp(9.3), std::exp(2.7), std::exp(4.0)},
              std::vector<std::string> preps = kPreps, PsParams p = {}) {
    std::vector<SensingInit> s = {{"slide", kOrient, d[0]}, {"poke", kOrient, d[1]}, {"press", kOrient, d[2]}};
    return init_ecm("tabletop-grasp", s, preps, p, false);
}

// Minimal hand-built ECM: # -> s -> {a, b}, each state -> {p, q}.
Ecm tiny() {
    Ecm e("skill", false);
    const ClipId st = e.add_clip(ClipKind::start, "#");
    const ClipId s = e.add_clip(ClipKind::sensing_action, "s");
    const ClipId a = e.add_clip(ClipKind::perceptual_state, "a");
    const ClipId b = e.add_clip(ClipKind::perceptual_state, "b");
    const ClipId p = e.add_clip(ClipKind::preparatory_skill, "p");
    const ClipId q = e.add_clip(ClipKind::preparatory_skill, "q");
    e.add_edge(st, s, 5);
    e.add_edge(s, a, 200);
    e.add_edge(s, b, 200);
    e.add_edge(a, p, 200);
    e.add_edge(a, q, 200);
    e.add_edge(b, p, 200);
    e.add_edge(b, q, 25);
    return e;
}

WalkPath path_of(const Ecm& e, const char* s, const char* st, const char* p) {
    WalkPath w;
    w.clip_ids = {e.start(), *e.find_sensing(s), *e.find_state(*e.find_sensing(s), st), *e.find_prep(p)};
    w.forced_transitions = {2};
    return w;
}

}  // namespace

TEST_CASE("clip kinds map to layers 1..4") {
    CHECK(layer_of(ClipKind::start) == 1);
    CHECK(layer_of(ClipKind::sensing_action) == 2);
    CHECK(layer_of(ClipKind::perceptual_state) == 3);
    CHECK(layer_of(ClipKind::preparatory_skill) == 4);
    for (auto k : {ClipKind::start, ClipKind::sensing_action, ClipKind::perceptual_state, ClipKind::preparatory_skill})
        CHECK(clip_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(clip_kind_from_string("layer5"), Error);
}

TEST_CASE("transition probability: uniform, single child, discrimination weights") {
    SUBCASE("four equal children") {
        Ecm e = init_ecm("x", {{"s", kOrient, 1.0}}, {"a", "b", "c", "d"}, {}, false);
        const ClipId st = *e.find_state(*e.find_sensing("s"), "open");
        for (const Edge& c : e.children(st)) CHECK(transition_probability(e, st, c.child) == doctest::Approx(0.25));
    }
    SUBCASE("single child is certain regardless of weight") {
        Ecm e = init_ecm("x", {{"s", kOrient, 12345.0}}, {"a"}, {}, false);
        CHECK(transition_probability(e, e.start(), *e.find_sensing("s")) == 1.0);
        const ClipId st = *e.find_state(*e.find_sensing("s"), "top");
        CHECK(transition_probability(e, st, *e.find_prep("a")) == 1.0);
    }
    SUBCASE("exp(alpha * accuracy) weights") {
        Ecm e = book_like();
        // Oracle: softmax of the exponents.
        const double a[3] = {9.3, 2.7, 4.0};
        double z = 0;
        for (double x : a) z += std::exp(x);
        const char* names[3] = {"slide", "poke", "press"};
        for (int i = 0; i < 3; ++i)
            CHECK(transition_probability(e, e.start(), *e.find_sensing(names[i])) == doctest::Approx(std::exp(a[i]) / z));
        // Frozen values.
        CHECK(std::abs(transition_probability(e, e.start(), *e.find_sensing("slide")) - 0.9937) < 5e-5);
        CHECK(std::abs(transition_probability(e, e.start(), *e.find_sensing("poke")) - 0.0014) < 5e-5);
        CHECK(std::abs(transition_probability(e, e.start(), *e.find_sensing("press")) - 0.0050) < 5e-5);
    }
    CHECK_THROWS_WITH(transition_probability(tiny(), 0, 4), "no such transition");
}

TEST_CASE("sample_child follows the weights") {
    SUBCASE("uniform prep choice over 10000 walks within 3 sigma") {
        Ecm e = book_like();
        const ClipId st = *e.find_state(*e.find_sensing("slide"), "bottom");
        Rng rng(11);
        std::map<ClipId, int> n;
        const int N = 10000;
        for (int i = 0; i < N; ++i) ++n[*sample_child(e, st, rng)];
        const double p = 1.0 / 6.0, sd = std::sqrt(N * p * (1 - p));
        CHECK(n.size() == 6);
        for (auto [c, k] : n) CHECK(std::abs(k - N * p) < 3 * sd);
    }
    SUBCASE("dominant weight") {
        Ecm e = book_like({1, 1, 1}, {"rot90", "rot180", "rot270", "nothing"});
        const ClipId st = *e.find_state(*e.find_sensing("slide"), "open");
        const ClipId big = *e.find_prep("rot180");
        e.set_weight(st, big, 1e6);
        CHECK(transition_probability(e, st, big) == doctest::Approx(1e6 / (1e6 + 600)));
        Rng rng(5);
        const int N = 100000;
        int hit = 0;
        for (int i = 0; i < N; ++i) hit += *sample_child(e, st, rng) == big;
        CHECK(static_cast<double>(hit) / N > 0.999);
    }
    SUBCASE("admissibility restricts and renormalizes") {
        Ecm e = tiny();
        const ClipId a = *e.find_state(1, "a");
        const ClipId q = *e.find_prep("q");
        Rng rng(3);
        for (int i = 0; i < 100; ++i) CHECK(*sample_child(e, a, rng, [&](ClipId c) { return c == q; }) == q);
        CHECK_FALSE(sample_child(e, a, rng, [](ClipId) { return false; }).has_value());
    }
    SUBCASE("single sensing action and single prep give the same path every call") {
        Ecm e = init_ecm("x", {{"s", {"only"}, 3.0}}, {"p"}, {}, false);
        Rng rng(1);
        const auto first = random_walk(e, e.find_state(1, "only"), rng);
        for (int i = 0; i < 20; ++i) CHECK(random_walk(e, e.find_state(1, "only"), rng) == first);
        CHECK(first.forced_transitions == std::vector<int>{2});
    }
}

TEST_CASE("random walk needs a state estimate") {
    Ecm e = tiny();
    Rng rng(1);
    CHECK_THROWS_WITH(random_walk(e, std::optional<ClipId>{}, rng), "state estimate required");
    CHECK_THROWS_WITH(random_walk(e, StateEstimator{}, rng), "state estimate required");
    CHECK_THROWS_AS(random_walk(e, std::optional<ClipId>{4}, rng), Error);  // a prep, not a state
    const auto w = random_walk(e, e.find_state(1, "b"), rng);
    CHECK(w.clip_ids[2] == *e.find_state(1, "b"));
    for (int k = 0; k < 3; ++k) CHECK(e.has_edge(w.clip_ids[k], w.clip_ids[k + 1]));
}

TEST_CASE("update rule examples") {
    PsParams p;
    SUBCASE("success on path: 200 -> 1200") {
        Ecm e = tiny();
        update_weights(e, path_of(e, "s", "a", "p"), 1000, p);
        CHECK(e.weight(2, 4) == 1200.0);
    }
    SUBCASE("failure on path: 200 -> 170") {
        Ecm e = tiny();
        update_weights(e, path_of(e, "s", "a", "p"), -30, p);
        CHECK(e.weight(2, 4) == 170.0);
    }
    SUBCASE("failure clamps at the floor: 25 -> 1.0") {
        Ecm e = tiny();
        update_weights(e, path_of(e, "s", "b", "q"), -30, p);
        CHECK(e.weight(3, 5) == 1.0);
    }
    SUBCASE("damping off path: 200 -> 180.1") {
        Ecm e = tiny();
        p.gamma = 0.1;
        update_weights(e, path_of(e, "s", "b", "q"), 1000, p);
        CHECK(e.weight(2, 4) == 180.1);
        CHECK(e.weight(2, 5) == 180.1);
    }
}

TEST_CASE("update touches exactly the path edges, including the classifier-forced one") {
    Ecm before = book_like();
    Ecm after = before;
    const auto path = path_of(after, "press", "open", "flip");
    update_weights(after, path, 1000, {});
    for (const Clip& c : before.clips()) {
        for (const Edge& e : before.children(c.id)) {
            bool on = false;
            for (int k = 0; k < 3; ++k) on |= path.clip_ids[k] == c.id && path.clip_ids[k + 1] == e.child;
            CHECK(after.weight(c.id, e.child) == (on ? e.weight + 1000 : e.weight));
        }
    }
}

TEST_CASE("damped update equals the independent per-edge formula") {
    Ecm e = book_like();
    PsParams p;
    p.gamma = 0.05;
    Rng rng(9);
    for (int step = 0; step < 30; ++step) {
        const Ecm before = e;
        const auto path = random_walk(e, [&](ClipId s) { return std::optional<ClipId>(e.children(s)[step % 4].child); }, rng);
        const double r = step % 3 ? 1000.0 : -30.0;
        update_weights(e, path, r, p);
        for (const Clip& c : before.clips())
            for (const Edge& ed : before.children(c.id)) {
                const bool on = (path.clip_ids[0] == c.id && path.clip_ids[1] == ed.child) ||
                                (path.clip_ids[1] == c.id && path.clip_ids[2] == ed.child) ||
                                (path.clip_ids[2] == c.id && path.clip_ids[3] == ed.child);
                const double want = std::max(1.0, ed.weight - 0.05 * (ed.weight - 1.0) + (on ? r : 0.0));
                CHECK(e.weight(c.id, ed.child) == doctest::Approx(want).epsilon(1e-12));
            }
    }
}

TEST_CASE("property: weights stay >= 1 and the ECM stays valid under random roll-outs") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        PsParams p;
        p.gamma = seed % 2 ? 0.0 : 0.01 * static_cast<double>(seed % 7);
        p.lambda_fail = -1000.0 * uniform01(rng);
        Ecm e = book_like({1 + 100 * uniform01(rng), 1.0, 3.0}, kPreps, p);
        for (int i = 0; i < 200; ++i) {
            const auto path = random_walk(
                e, [&](ClipId s) { return std::optional<ClipId>(e.children(s)[uniform_index(rng, 4)].child); }, rng);
            update_weights(e, path, bernoulli(rng, 0.5) ? p.lambda_succ : p.lambda_fail, p);
        }
        e.validate();
        for (const Clip& c : e.clips())
            for (const Edge& ed : e.children(c.id)) CHECK(ed.weight >= 1.0);
    }
}

TEST_CASE("initialization") {
    SUBCASE("one sensing action, 4 states x 6 preps -> 24 preparatory edges at h_init") {
        Ecm e = init_ecm("x", {{"slide", kOrient, 50.0}}, kPreps, {}, false);
        std::size_t n = 0;
        for (ClipId st : e.layer(3))
            for (const Edge& ed : e.children(st)) {
                ++n;
                CHECK(ed.weight == 200.0);
            }
        CHECK(n == 24);
        CHECK(transition_probability(e, e.start(), *e.find_sensing("slide")) == 1.0);
        e.validate();
    }
    SUBCASE("structure") {
        Ecm e = book_like();
        CHECK(e.layer(1).size() == 1);
        CHECK(e.layer(2).size() == 3);
        CHECK(e.layer(3).size() == 12);
        CHECK(e.layer(4).size() == 6);
        CHECK(e.edge_count() == 3 + 12 + 12 * 6);
        for (ClipId st : e.layer(3)) CHECK(e.parent_of(st).has_value());
        CHECK(e.weight(e.start(), *e.find_sensing("poke")) == doctest::Approx(std::exp(2.7)));
    }
    SUBCASE("discrimination below the floor is raised to 1") {
        Ecm e = init_ecm("x", {{"s", kOrient, 0.2}}, {"p"}, {}, false);
        CHECK(e.weight(e.start(), 1) == 1.0);
    }
    CHECK_THROWS_AS(init_ecm("x", {}, kPreps, {}, false), Error);
    CHECK_THROWS_AS(init_ecm("x", {{"s", kOrient, 1}}, {}, {}, false), Error);
    CHECK_THROWS_AS(init_ecm("x", {{"s", {}, 1}}, kPreps, {}, false), Error);
    CHECK_THROWS_AS(init_ecm("x", {{"s", kOrient, 1}}, {"a", "a"}, {}, false), Error);
    PsParams bad;
    bad.h_init = 0.5;
    CHECK_THROWS_AS(init_ecm("x", {{"s", kOrient, 1}}, kPreps, bad, false), Error);
}

TEST_CASE("adding a preparatory clip") {
    Ecm e = init_ecm("x", {{"s", kOrient, 1.0}}, {"a", "b", "c", "d", "e"}, {}, false);
    const auto edges = e.edge_count();
    const ClipId g = add_preparatory_clip(e, "grasp", {});
    CHECK(e.layer(4).size() == 6);
    CHECK(e.edge_count() == edges + 4);
    for (ClipId st : e.layer(3)) CHECK(e.weight(st, g) == 200.0);
    CHECK_THROWS_AS(add_preparatory_clip(e, "grasp", {}), Error);

    SUBCASE("converged state gives the new clip a small but positive chance") {
        Ecm c = init_ecm("x", {{"s", kOrient, 1.0}}, {"a", "b", "c", "d", "e"}, {}, false);
        const ClipId st = *c.find_state(1, "open");
        c.set_weight(st, *c.find_prep("b"), 1e5);
        const ClipId n = add_preparatory_clip(c, "new", {});
        const double p = transition_probability(c, st, n);
        CHECK(p == doctest::Approx(200.0 / (1e5 + 4 * 200.0 + 200.0)));
        CHECK(p > 0.0);
        CHECK(p < 0.01);
    }
}

TEST_CASE("structural guards") {
    Ecm e = tiny();
    CHECK_THROWS_AS(e.add_clip(ClipKind::start, "#2"), Error);
    CHECK_THROWS_AS(e.add_edge(0, 2, 10), Error);  // skips a layer
    CHECK_THROWS_AS(e.add_edge(1, 2, 10), Error);  // duplicate
    const ClipId s2 = e.add_clip(ClipKind::sensing_action, "s2");
    CHECK_THROWS_AS(e.add_edge(s2, 2, 10), Error);  // state already owned by s
    CHECK_THROWS_WITH(e.set_weight(2, 4, 0.5), "weight below floor");
    CHECK_THROWS_WITH(e.weight(2, 1), "no such transition");
    CHECK_THROWS_AS(e.clip(999), Error);
}

TEST_CASE("document round trip and parse errors") {
    Ecm e = book_like();
    e.set_semantic_tag(*e.find_state(*e.find_sensing("slide"), "open"), "open");
    Rng rng(4);
    for (int i = 0; i < 10; ++i)
        update_weights(e, random_walk(e, e.find_state(*e.find_sensing("slide"), "top"), rng), i % 2 ? 1000 : -30, {});
    const std::string doc = serialize_ecm(e);
    CHECK(deserialize_ecm(doc) == e);
    CHECK(serialize_ecm(deserialize_ecm(doc)) == doc);

    auto doc_of = [] { return nlohmann::json::parse(serialize_ecm(tiny())); };
    auto low = doc_of();
    for (auto& ed : low["edges"])
        if (ed["weight"] == 25.0) ed["weight"] = 0.5;
    CHECK_THROWS_WITH(deserialize_ecm(low.dump()), "weight below floor");

    auto layer5 = doc_of();
    layer5["clips"].back()["layer"] = 5;
    CHECK_THROWS_AS(deserialize_ecm(layer5.dump()), Error);

    auto dangling = doc_of();
    dangling["edges"].back()["to"] = 99;
    CHECK_THROWS_AS(deserialize_ecm(dangling.dump()), Error);

    CHECK_THROWS_AS(deserialize_ecm("{"), Error);
    CHECK_THROWS_AS(deserialize_ecm(R"({"format":"other","version":1})"), Error);
    auto v2 = doc_of();
    v2["version"] = 2;
    CHECK_THROWS_AS(deserialize_ecm(v2.dump()), Error);
}
