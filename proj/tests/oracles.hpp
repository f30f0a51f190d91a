#pragma once

// Independent reference implementations used as test oracles. They share no
// code with the library beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "skillmem/haptic.hpp"
#include "skillmem/world.hpp"

namespace oracle {

using skillmem::Dataset;
using skillmem::HapticTimeSeries;

// Linear interpolation onto n equally spaced instants, all 9 channels
// concatenated per step.
inline std::vector<double> raw_features(const HapticTimeSeries& ts, std::size_t n) {
    std::vector<double> out;
    const double t0 = ts.steps.front().t, t1 = ts.steps.back().t;
    std::size_t j = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n - 1);
        while (j + 2 < ts.steps.size() && ts.steps[j + 1].t < t) ++j;
        const auto& a = ts.steps[j];
        const auto& b = ts.steps[j + 1];
        const double w = std::clamp((t - a.t) / (b.t - a.t), 0.0, 1.0);
        for (int c = 0; c < 3; ++c) out.push_back(a.force[c] + w * (b.force[c] - a.force[c]));
        for (int c = 0; c < 3; ++c) out.push_back(a.torque[c] + w * (b.torque[c] - a.torque[c]));
        for (int c = 0; c < 3; ++c) out.push_back(a.position[c] + w * (b.position[c] - a.position[c]));
    }
    return out;
}

// Nearest class mean after per-dimension z-scoring on the training part.
// Folds: member r of each class (in data order) goes to fold r % k.
inline double nearest_centroid_cv(const Dataset& data, int k, std::size_t length = 100) {
    std::vector<std::vector<double>> x;
    for (const auto& ts : data) x.push_back(raw_features(ts, length));
    std::vector<int> fold(data.size());
    std::map<std::string, int> seen;
    for (std::size_t i = 0; i < data.size(); ++i) fold[i] = seen[*data[i].label]++ % k;
    const std::size_t d = x.front().size();

    double total = 0;
    for (int f = 0; f < k; ++f) {
        std::vector<double> mean(d, 0), sd(d, 0);
        std::size_t n = 0;
        for (std::size_t i = 0; i < data.size(); ++i)
            if (fold[i] != f) {
                ++n;
                for (std::size_t j = 0; j < d; ++j) mean[j] += x[i][j];
            }
        for (auto& m : mean) m /= static_cast<double>(n);
        for (std::size_t i = 0; i < data.size(); ++i)
            if (fold[i] != f)
                for (std::size_t j = 0; j < d; ++j) sd[j] += (x[i][j] - mean[j]) * (x[i][j] - mean[j]);
        for (auto& s : sd) s = std::sqrt(s / static_cast<double>(n));
        auto z = [&](const std::vector<double>& v) {
            std::vector<double> o(d);
            for (std::size_t j = 0; j < d; ++j) o[j] = sd[j] > 1e-12 ? (v[j] - mean[j]) / sd[j] : 0.0;
            return o;
        };
        std::map<std::string, std::vector<double>> centroid;
        std::map<std::string, int> count;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (fold[i] == f) continue;
            auto zi = z(x[i]);
            auto& c = centroid[*data[i].label];
            if (c.empty()) c.assign(d, 0.0);
            for (std::size_t j = 0; j < d; ++j) c[j] += zi[j];
            ++count[*data[i].label];
        }
        for (auto& [label, c] : centroid)
            for (auto& v : c) v /= count[label];
        int ok = 0, tested = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (fold[i] != f) continue;
            auto zi = z(x[i]);
            std::string best;
            double bd = INFINITY;
            for (const auto& [label, c] : centroid) {
                double dist = 0;
                for (std::size_t j = 0; j < d; ++j) dist += (zi[j] - c[j]) * (zi[j] - c[j]);
                if (dist < bd) {
                    bd = dist;
                    best = label;
                }
            }
            ok += best == *data[i].label;
            ++tested;
        }
        total += static_cast<double>(ok) / tested;
    }
    return total / k;
}

// Supervised samples of one sensing action: `per_class` series in every class.
inline Dataset labelled_samples(const skillmem::Scenario& sc, const std::string& action, std::size_t per_class,
                                skillmem::Rng& rng) {
    using namespace skillmem;
    const auto& a = sc.sensing_action(action);
    const auto& classes = aspect_classes(a.observes);
    Dataset out;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        WorldState w = sc.initial;
        if (a.observes == Aspect::orientation) w.orientation = static_cast<Orientation>(c);
        if (a.observes == Aspect::box_open) w.box_open = c == 1;
        if (a.observes == Aspect::grasp) w.grasped = c == 1;
        for (std::size_t i = 0; i < per_class; ++i) {
            auto ts = sense(w, a, rng, action + "-" + classes[c] + "-" + std::to_string(i));
            ts.label = classes[c];
            out.push_back(std::move(ts));
        }
    }
    return out;
}

// Success probability of the very first roll-out of the abstract agent,
// summed over the whole outcome tree: sensing pick x true state x
// classification outcome x prep pick. Prep k < n-1 shifts the state by k+1,
// every other prep keeps it; success needs state 1 afterwards and then p_p.
inline double first_rollout_success(const std::vector<double>& accuracy, double alpha, int n, int num_preps,
                                    double p_p) {
    double z = 0;
    for (double a : accuracy) z += std::max(1.0, std::exp(alpha * a));
    double total = 0;
    for (double a : accuracy) {
        const double p_sense = std::max(1.0, std::exp(alpha * a)) / z;
        for (int truth = 0; truth < n; ++truth)
            for (int belief = 0; belief < n; ++belief) {
                const double p_belief = belief == truth ? a : (1 - a) / (n - 1);
                for (int k = 0; k < num_preps; ++k) {
                    const int after = k < n - 1 ? (truth + k + 1) % n : truth;
                    if (after == 1) total += p_sense * (1.0 / n) * p_belief * (1.0 / num_preps) * p_p;
                }
            }
    }
    return total;
}

}  // namespace oracle
