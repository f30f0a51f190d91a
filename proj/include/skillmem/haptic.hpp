#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace skillmem {

// Haptic time series, feature extraction and the per-sensing-action state
// classifier.

using Vec3 = std::array<double, 3>;

struct HapticStep {
    double t = 0.0;
    Vec3 force{};
    Vec3 torque{};
    Vec3 position{};

    bool operator==(const HapticStep&) const = default;
};

inline constexpr std::size_t kChannels = 9;  // fx fy fz tx ty tz px py pz

struct HapticTimeSeries {
    std::string series_id;
    std::string sensing_action;
    std::optional<std::string> label;
    std::vector<HapticStep> steps;

    bool operator==(const HapticTimeSeries&) const = default;
};

using Dataset = std::vector<HapticTimeSeries>;
using FeatureVector = Eigen::VectorXd;

/// Per-channel mean and scale, pooled over all time steps of the training set.
/// A zero-variance channel keeps scale 0 and standardizes to 0.
struct ChannelStats {
    std::array<double, kChannels> mean{};
    std::array<double, kChannels> scale{};

    bool operator==(const ChannelStats&) const = default;
};

/// Linear-interpolation resample onto `length` equally spaced instants
/// spanning [t_first, t_last].
std::vector<HapticStep> resample(const HapticTimeSeries& ts, std::size_t length);

/// Resample, then concatenate (F, T, P) per step; the time channel is dropped.
/// With `stats`, each channel is standardized.
FeatureVector featurize(const HapticTimeSeries& ts, std::size_t length, const ChannelStats* stats = nullptr);

ChannelStats fit_channel_stats(const std::vector<FeatureVector>& raw);
FeatureVector standardize(const FeatureVector& raw, const ChannelStats& stats);

struct ClassifierConfig {
    std::size_t length = 100;
    int epochs = 50;
    double regularization = 1.0;
    std::uint64_t seed = 0;
};

/// Linear maximum-margin model: score = W x + b, one row per class,
/// trained against one-hot targets with a per-output hinge (margin) loss.
struct StateModel {
    std::string sensing_action;
    std::vector<std::string> classes;
    std::size_t length = 100;
    ChannelStats stats;
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
    std::string trained_on;  // dataset fingerprint
    double training_accuracy = 0.0;
    bool degenerate = false;  // no better than always predicting the majority class

    std::size_t feature_dim() const { return kChannels * length; }
};

struct Classification {
    std::size_t class_index = 0;
    std::string state;
    Eigen::VectorXd scores;
};

std::string dataset_fingerprint(const Dataset& data);

/// Labels in order of first appearance.
std::vector<std::string> class_labels(const Dataset& data);

StateModel train(const Dataset& data, const ClassifierConfig& config = {});

Classification classify(const StateModel& model, const HapticTimeSeries& ts);
Classification classify_features(const StateModel& model, const FeatureVector& standardized);

/// Stratified k-fold mean held-out accuracy.
double cross_validate(const Dataset& data, int folds, const ClassifierConfig& config = {});

/// exp(alpha * s)
double discrimination_score(double accuracy, double alpha);

struct DiscriminationScore {
    std::string sensing_action;
    double accuracy = 0.0;
    double alpha = 0.0;
    double score = 1.0;
};

/// Splits a multi-action dataset by sensing action, preserving row order.
std::vector<std::pair<std::string, Dataset>> split_by_action(const Dataset& data);

// Dataset CSV: series_id,sensing_action,label,t,fx,fy,fz,tx,ty,tz,px,py,pz
void write_dataset_csv(std::ostream& out, const Dataset& data);
Dataset read_dataset_csv(std::istream& in);

std::string serialize_model(const StateModel& model);
StateModel deserialize_model(const std::string& text);

}  // namespace skillmem
