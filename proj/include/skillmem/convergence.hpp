#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skillmem/ecm.hpp"
#include "skillmem/seeding.hpp"

namespace skillmem {

// Population study of an abstracted agent: classifier accuracies and the
// complex skill's success probability replace the simulated sensors.

struct AbstractScenario {
    std::vector<std::pair<std::string, double>> sensing_accuracies{{"slide", 0.93}, {"poke", 0.27}, {"press", 0.40}};
    int num_states = 4;
    double p_p = 0.98;
    // The first num_states preps are useful: rotations by 1..n-1 steps and
    // "nothing". Any further prep leaves the state unchanged.
    int num_preps = 6;
    double alpha = 10.0;
    PsParams params;

    void validate() const;
};

/// State index the complex skill needs (the binding orientation).
inline constexpr int kGoalState = 1;

/// Prep labels in clip order: rot1..rot{n-1} shown as rot90/rot180/rot270
/// for four states, then "nothing", then "noop-1", "noop-2", ...
std::vector<std::string> abstract_prep_labels(const AbstractScenario& scenario);
/// State reached when prep `prep_index` is applied to `state`.
int abstract_prep_effect(const AbstractScenario& scenario, int prep_index, int state);
Ecm build_abstract_ecm(const AbstractScenario& scenario);

/// One agent, `rollouts` roll-outs, returns the success bits.
std::vector<bool> run_abstract_agent(const AbstractScenario& scenario, std::size_t rollouts, Rng& rng);

/// Generator used for agent `index` of a population seeded with `seed`.
Rng agent_rng(std::uint64_t seed, std::size_t index);

struct ConvergenceResult {
    std::vector<double> curve;     // mean success per roll-out
    std::vector<double> smoothed;  // centered moving average
    std::size_t agents = 0;
    std::size_t rollouts = 0;
    double threshold = 0.0;
    std::optional<std::size_t> n_r;      // 1-based, from the smoothed curve
    std::optional<std::size_t> n_r_raw;  // 1-based, from the raw curve
};

inline constexpr std::size_t kSmoothingWindow = 11;

/// Centered moving average; the window is truncated at both ends.
std::vector<double> smooth(const std::vector<double>& curve, std::size_t window = kSmoothingWindow);
/// First 1-based index with value >= threshold.
std::optional<std::size_t> first_crossing(const std::vector<double>& curve, double threshold);

ConvergenceResult run_population(const AbstractScenario& scenario, std::size_t agents, std::size_t rollouts,
                                 double threshold, std::uint64_t seed, unsigned jobs = 1);

struct SweepResult {
    std::vector<int> num_preps;
    std::vector<ConvergenceResult> results;
    std::vector<std::string> warnings;
};

/// Runs the population once per distinct N_p, keeping the first occurrence order.
SweepResult sweep_preps(const AbstractScenario& base, const std::vector<int>& num_preps, std::size_t agents,
                        std::size_t rollouts, double threshold, std::uint64_t seed, unsigned jobs = 1);

// curve.csv: rollout,mean_success
void write_curve_csv(std::ostream& out, const ConvergenceResult& result);
// sweep.csv: N_p,N_r  (N_r empty when the threshold was never reached)
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

}  // namespace skillmem
