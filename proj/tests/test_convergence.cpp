#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "skillmem/convergence.hpp"
#include "skillmem/error.hpp"
#include "skillmem/world.hpp"

using namespace skillmem;

namespace {

double tail_mean(const std::vector<double>& c, std::size_t n) {
    return std::accumulate(c.end() - static_cast<long>(n), c.end(), 0.0) / static_cast<double>(n);
}

}  // namespace

TEST_CASE("abstract scenario validation") {
    AbstractScenario s;
    CHECK_NOTHROW(s.validate());
    s.num_preps = 3;
    CHECK_THROWS_AS(s.validate(), Error);
    s = {};
    s.sensing_accuracies[1].second = 1.2;
    CHECK_THROWS_AS(s.validate(), Error);
    s = {};
    s.p_p = -0.1;
    CHECK_THROWS_AS(s.validate(), Error);
    s = {};
    s.sensing_accuracies.clear();
    CHECK_THROWS_AS(s.validate(), Error);
    CHECK_THROWS_AS(run_population(AbstractScenario{}, 0, 10, 0.9, 1), Error);
}

TEST_CASE("abstract preps act like the book rotations") {
    AbstractScenario s;
    s.num_preps = 7;
    const auto labels = abstract_prep_labels(s);
    CHECK(labels == std::vector<std::string>{"rot90", "rot180", "rot270", "nothing", "noop-1", "noop-2", "noop-3"});
    for (int st = 0; st < 4; ++st) {
        for (int k = 0; k < 3; ++k)
            CHECK(abstract_prep_effect(s, k, st) == static_cast<int>(rotate(static_cast<Orientation>(st), k + 1)));
        for (int k = 3; k < 7; ++k) CHECK(abstract_prep_effect(s, k, st) == st);
    }
    CHECK(kGoalState == static_cast<int>(Orientation::binding));
    const Ecm e = build_abstract_ecm(s);
    CHECK(e.layer(4).size() == 7);
    CHECK(e.layer(3).size() == 12);
}

TEST_CASE("smoothing and threshold crossing") {
    const std::vector<double> c = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
    const auto s = smooth(c);
    // Oracle: truncated centered window of 11.
    for (std::size_t i = 0; i < c.size(); ++i) {
        const int lo = std::max(0, static_cast<int>(i) - 5), hi = std::min(14, static_cast<int>(i) + 5);
        double sum = 0;
        for (int j = lo; j <= hi; ++j) sum += c[j];
        CHECK(s[i] == doctest::Approx(sum / (hi - lo + 1)));
    }
    CHECK(s[7] == doctest::Approx(7.0));
    CHECK(smooth({}).empty());
    CHECK(first_crossing({0.1, 0.5, 0.9, 0.95}, 0.9) == std::optional<std::size_t>(3));
    CHECK_FALSE(first_crossing({0.1, 0.5}, 0.9).has_value());
    CHECK_THROWS_AS(smooth(c, 0), Error);
}

TEST_CASE("noise-free agents converge to certain success") {
    AbstractScenario s;
    for (auto& a : s.sensing_accuracies) a.second = 1.0;
    s.p_p = 1.0;
    s.num_preps = 4;
    const auto r = run_population(s, 1000, 3000, 0.9, 3, 2);
    CHECK(first_crossing(r.curve, 1.0).has_value());
    // Sensing actions that lose the early race are rarely walked, so their
    // state clips learn late; the tail decays slowly rather than snapping to 1.
    for (std::size_t i = 2000; i < r.smoothed.size(); ++i) CHECK(r.smoothed[i] >= 0.995);
}

TEST_CASE("first roll-out success matches the enumeration oracle") {
    for (int np : {4, 6, 20}) {
        AbstractScenario s;
        s.num_preps = np;
        const auto r = run_population(s, 20000, 1, 0.9, 11);
        const double want = oracle::first_rollout_success({0.93, 0.27, 0.40}, 10.0, 4, np, 0.98);
        CHECK_MESSAGE(std::abs(r.curve[0] - want) <= 0.01, "N_p=" << np << " got " << r.curve[0] << " want " << want);
    }
}

TEST_CASE("without learning the success rate stays at the chance baseline") {
    AbstractScenario s;
    s.params.lambda_succ = 1e-9;  // must be positive; negligible next to h_init
    s.params.lambda_fail = 0.0;
    const auto r = run_population(s, 2000, 100, 0.9, 5);
    const double want = oracle::first_rollout_success({0.93, 0.27, 0.40}, 10.0, 4, 6, 0.98);
    CHECK(std::abs(std::accumulate(r.curve.begin(), r.curve.end(), 0.0) / 100.0 - want) < 0.005);
}

TEST_CASE("population determinism") {
    AbstractScenario s;
    SUBCASE("one agent equals the single-agent run") {
        const auto r = run_population(s, 1, 200, 0.9, 42);
        Rng rng = agent_rng(42, 0);
        const auto bits = run_abstract_agent(s, 200, rng);
        for (std::size_t i = 0; i < 200; ++i) CHECK(r.curve[i] == (bits[i] ? 1.0 : 0.0));
    }
    SUBCASE("same seed, any thread count, same curve") {
        const auto a = run_population(s, 300, 150, 0.9, 7, 1);
        const auto b = run_population(s, 300, 150, 0.9, 7, 4);
        const auto c = run_population(s, 300, 150, 0.9, 7, 1);
        CHECK(a.curve == b.curve);
        CHECK(a.curve == c.curve);
        CHECK(a.n_r == b.n_r);
        CHECK(run_population(s, 300, 150, 0.9, 8).curve != a.curve);
    }
    SUBCASE("result shape") {
        const auto r = run_population(s, 50, 80, 0.5, 1);
        CHECK(r.curve.size() == 80);
        CHECK(r.smoothed.size() == 80);
        CHECK(r.agents == 50);
        for (double v : r.curve) CHECK((v >= 0.0 && v <= 1.0));
        CHECK(r.n_r == first_crossing(smooth(r.curve), 0.5));
        CHECK(r.n_r_raw == first_crossing(r.curve, 0.5));
    }
}

TEST_CASE("useless preps never raise the asymptote") {
    AbstractScenario a, b;
    a.num_preps = 6;
    b.num_preps = 12;
    const auto ra = run_population(a, 2000, 1500, 0.9, 21, 2);
    const auto rb = run_population(b, 2000, 1500, 0.9, 21, 2);
    CHECK(tail_mean(rb.curve, 200) <= tail_mean(ra.curve, 200) + 0.005);
}

TEST_CASE("per-point standard error with 10000 agents") {
    const auto r = run_population(AbstractScenario{}, 10000, 200, 0.9, 9, 2);
    for (double c : r.curve) CHECK(std::sqrt(c * (1 - c) / 10000.0) <= 0.007);
}

TEST_CASE("prep sweep") {
    AbstractScenario s;
    const auto empty = sweep_preps(s, {}, 10, 10, 0.9, 1);
    CHECK(empty.num_preps.empty());
    std::ostringstream e;
    write_sweep_csv(e, empty);
    CHECK(e.str() == "N_p,N_r\n");

    const auto sw = sweep_preps(s, {6, 4, 6, 5}, 20, 30, 0.3, 1);
    CHECK(sw.num_preps == std::vector<int>{6, 4, 5});
    CHECK(sw.warnings.size() == 1);
    CHECK(sw.results.size() == 3);
    CHECK(sw.results[0].curve == run_population(s, 20, 30, 0.3, 1).curve);

    std::ostringstream curve;
    write_curve_csv(curve, sw.results[0]);
    CHECK(curve.str().rfind("rollout,mean_success\n1,", 0) == 0);
    std::ostringstream table;
    write_sweep_csv(table, sw);
    const std::string text = table.str();
    CHECK(text.rfind("N_p,N_r\n6,", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}
