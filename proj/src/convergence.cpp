#include "skillmem/convergence.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "skillmem/error.hpp"
#include "skillmem/text.hpp"

namespace skillmem {

namespace {

std::string state_label(int i) {
    return "s" + std::to_string(i);
}

}  // namespace

void AbstractScenario::validate() const {
    if (sensing_accuracies.empty()) throw Error("abstract scenario needs at least one sensing action");
    for (const auto& [name, acc] : sensing_accuracies)
        if (!(acc >= 0.0 && acc <= 1.0)) throw Error("accuracy of '" + name + "' must lie in [0, 1]");
    if (num_states < 2) throw Error("abstract scenario needs at least 2 states");
    if (!(p_p >= 0.0 && p_p <= 1.0)) throw Error("p_p must lie in [0, 1]");
    if (num_preps < num_states)
        throw Error("N_p must be >= " + std::to_string(num_states) + " (the useful preps)");
    params.validate();
}

std::vector<std::string> abstract_prep_labels(const AbstractScenario& s) {
    std::vector<std::string> out;
    for (int k = 1; k < s.num_states; ++k)
        out.push_back(s.num_states == 4 ? "rot" + std::to_string(90 * k) : "shift" + std::to_string(k));
    out.push_back("nothing");
    for (int k = s.num_states; k < s.num_preps; ++k) out.push_back("noop-" + std::to_string(k - s.num_states + 1));
    return out;
}

int abstract_prep_effect(const AbstractScenario& s, int prep_index, int state) {
    if (prep_index < s.num_states - 1) return (state + prep_index + 1) % s.num_states;
    return state;
}

Ecm build_abstract_ecm(const AbstractScenario& s) {
    s.validate();
    std::vector<std::string> states;
    for (int i = 0; i < s.num_states; ++i) states.push_back(state_label(i));
    std::vector<SensingInit> sensing;
    for (const auto& [name, acc] : s.sensing_accuracies)
        sensing.push_back({name, states, std::exp(s.alpha * acc)});
    return init_ecm("abstract", sensing, abstract_prep_labels(s), s.params, false);
}

std::vector<bool> run_abstract_agent(const AbstractScenario& s, std::size_t rollouts, Rng& rng) {
    Ecm ecm = build_abstract_ecm(s);
    const auto n = static_cast<std::uint64_t>(s.num_states);

    // Index lookups so the loop stays free of string searches.
    std::vector<double> accuracy;
    std::vector<std::vector<ClipId>> state_clip;
    for (const auto& [name, acc] : s.sensing_accuracies) {
        const ClipId sid = *ecm.find_sensing(name);
        accuracy.resize(std::max<std::size_t>(accuracy.size(), sid + 1));
        state_clip.resize(accuracy.size());
        accuracy[sid] = acc;
        for (int i = 0; i < s.num_states; ++i) state_clip[sid].push_back(*ecm.find_state(sid, state_label(i)));
    }
    std::vector<int> prep_index(ecm.clips().size(), -1);
    const auto labels = abstract_prep_labels(s);
    for (std::size_t k = 0; k < labels.size(); ++k) prep_index[*ecm.find_prep(labels[k])] = static_cast<int>(k);

    std::vector<bool> out;
    out.reserve(rollouts);
    for (std::size_t r = 0; r < rollouts; ++r) {
        const int truth = static_cast<int>(uniform_index(rng, n));
        WalkPath path;
        path.clip_ids[0] = ecm.start();
        path.clip_ids[1] = *sample_child(ecm, ecm.start(), rng);
        const ClipId sid = path.clip_ids[1];
        int belief = truth;
        if (!bernoulli(rng, accuracy[sid]))
            belief = static_cast<int>((truth + 1 + uniform_index(rng, n - 1)) % n);
        path.clip_ids[2] = state_clip[sid][belief];
        path.forced_transitions = {2};
        path.clip_ids[3] = *sample_child(ecm, path.clip_ids[2], rng);
        const int after = abstract_prep_effect(s, prep_index[path.clip_ids[3]], truth);
        const bool success = after == kGoalState && bernoulli(rng, s.p_p);
        update_weights(ecm, path, success ? s.params.lambda_succ : s.params.lambda_fail, s.params);
        out.push_back(success);
    }
    return out;
}

Rng agent_rng(std::uint64_t seed, std::size_t index) {
    return Rng(derive_seed(seed, "agent", index));
}

std::vector<double> smooth(const std::vector<double>& curve, std::size_t window) {
    if (window == 0) throw Error("smoothing window must be >= 1");
    const std::size_t half = window / 2;
    std::vector<double> out(curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(curve.size(), i + half + 1);
        double sum = 0.0;
        for (std::size_t j = lo; j < hi; ++j) sum += curve[j];
        out[i] = sum / static_cast<double>(hi - lo);
    }
    return out;
}

std::optional<std::size_t> first_crossing(const std::vector<double>& curve, double threshold) {
    for (std::size_t i = 0; i < curve.size(); ++i)
        if (curve[i] >= threshold) return i + 1;
    return std::nullopt;
}

ConvergenceResult run_population(const AbstractScenario& s, std::size_t agents, std::size_t rollouts,
                                 double threshold, std::uint64_t seed, unsigned jobs) {
    if (agents == 0) throw Error("N_agents must be >= 1");
    s.validate();
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(agents)));

    // Integer counts make the sum independent of how agents are split across threads.
    std::vector<std::uint64_t> wins(rollouts, 0);
    std::mutex merge;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    auto worker = [&] {
        std::vector<std::uint64_t> local(rollouts, 0);
        try {
            for (std::size_t a; (a = next.fetch_add(1)) < agents;) {
                Rng rng = agent_rng(seed, a);
                const auto bits = run_abstract_agent(s, rollouts, rng);
                for (std::size_t r = 0; r < rollouts; ++r) local[r] += bits[r];
            }
        } catch (...) {
            std::lock_guard lock(merge);
            failure = std::current_exception();
        }
        std::lock_guard lock(merge);
        for (std::size_t r = 0; r < rollouts; ++r) wins[r] += local[r];
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    ConvergenceResult res;
    res.agents = agents;
    res.rollouts = rollouts;
    res.threshold = threshold;
    res.curve.resize(rollouts);
    for (std::size_t r = 0; r < rollouts; ++r)
        res.curve[r] = static_cast<double>(wins[r]) / static_cast<double>(agents);
    res.smoothed = smooth(res.curve);
    res.n_r = first_crossing(res.smoothed, threshold);
    res.n_r_raw = first_crossing(res.curve, threshold);
    return res;
}

SweepResult sweep_preps(const AbstractScenario& base, const std::vector<int>& num_preps, std::size_t agents,
                        std::size_t rollouts, double threshold, std::uint64_t seed, unsigned jobs) {
    SweepResult out;
    std::set<int> seen;
    for (int np : num_preps) {
        if (!seen.insert(np).second) {
            out.warnings.push_back("duplicate N_p " + std::to_string(np) + " ignored");
            continue;
        }
        AbstractScenario s = base;
        s.num_preps = np;
        out.num_preps.push_back(np);
        out.results.push_back(run_population(s, agents, rollouts, threshold, seed, jobs));
    }
    return out;
}

void write_curve_csv(std::ostream& out, const ConvergenceResult& result) {
    out << "rollout,mean_success\n";
    for (std::size_t r = 0; r < result.curve.size(); ++r) out << r + 1 << ',' << format_double(result.curve[r]) << '\n';
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
    out << "N_p,N_r\n";
    for (std::size_t i = 0; i < sweep.num_preps.size(); ++i) {
        out << sweep.num_preps[i] << ',';
        if (sweep.results[i].n_r) out << *sweep.results[i].n_r;
        out << '\n';
    }
}

}  // namespace skillmem
