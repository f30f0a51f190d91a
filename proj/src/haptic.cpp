#include "skillmem/haptic.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <json.hpp>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "skillmem/error.hpp"
#include "skillmem/seeding.hpp"
#include "skillmem/text.hpp"

namespace skillmem {

namespace {

constexpr std::string_view kDatasetHeader = "series_id,sensing_action,label,t,fx,fy,fz,tx,ty,tz,px,py,pz";
constexpr std::string_view kModelFormatName = "skillmem.state-model";
constexpr int kModelFormatVersion = 1;

void check_series(const HapticTimeSeries& ts) {
    if (ts.steps.empty()) throw Error("empty time series '" + ts.series_id + "'");
    if (ts.steps.size() < 2) throw Error("time series '" + ts.series_id + "' needs at least 2 steps");
    for (std::size_t k = 1; k < ts.steps.size(); ++k)
        if (!(ts.steps[k].t > ts.steps[k - 1].t))
            throw Error("time series '" + ts.series_id + "' has non-increasing timestamps");
}

std::array<double, kChannels> channels_of(const HapticStep& s) {
    return {s.force[0], s.force[1], s.force[2], s.torque[0], s.torque[1], s.torque[2],
            s.position[0], s.position[1], s.position[2]};
}

std::size_t argmax_lowest(const Eigen::VectorXd& v) {
    std::size_t best = 0;
    for (Eigen::Index k = 1; k < v.size(); ++k)
        if (v[k] > v[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(k);
    return best;
}

void check_training_set(const Dataset& data) {
    if (data.empty()) throw Error("empty training set");
    for (const auto& ts : data) {
        if (!ts.label) throw Error("training series '" + ts.series_id + "' is unlabeled");
        if (ts.sensing_action != data.front().sensing_action)
            throw Error("training set mixes sensing actions '" + data.front().sensing_action + "' and '" +
                        ts.sensing_action + "'");
    }
}

}  // namespace

std::vector<HapticStep> resample(const HapticTimeSeries& ts, std::size_t length) {
    check_series(ts);
    if (length < 2) throw Error("resample length must be >= 2");
    const auto& src = ts.steps;
    const double t0 = src.front().t;
    const double t1 = src.back().t;
    std::vector<HapticStep> out(length);
    std::size_t k = 0;
    for (std::size_t i = 0; i < length; ++i) {
        const double t = (i + 1 == length) ? t1 : t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(length - 1);
        while (k + 2 < src.size() && src[k + 1].t <= t) ++k;
        const HapticStep& a = src[k];
        const HapticStep& b = src[k + 1];
        const double w = std::clamp((t - a.t) / (b.t - a.t), 0.0, 1.0);
        HapticStep s;
        s.t = t;
        for (int c = 0; c < 3; ++c) {
            s.force[c] = a.force[c] + w * (b.force[c] - a.force[c]);
            s.torque[c] = a.torque[c] + w * (b.torque[c] - a.torque[c]);
            s.position[c] = a.position[c] + w * (b.position[c] - a.position[c]);
        }
        out[i] = s;
    }
    return out;
}

FeatureVector featurize(const HapticTimeSeries& ts, std::size_t length, const ChannelStats* stats) {
    const auto steps = resample(ts, length);
    FeatureVector v(static_cast<Eigen::Index>(kChannels * length));
    for (std::size_t i = 0; i < length; ++i) {
        const auto ch = channels_of(steps[i]);
        for (std::size_t c = 0; c < kChannels; ++c) v[static_cast<Eigen::Index>(i * kChannels + c)] = ch[c];
    }
    return stats ? standardize(v, *stats) : v;
}

ChannelStats fit_channel_stats(const std::vector<FeatureVector>& raw) {
    if (raw.empty()) throw Error("cannot fit channel statistics on an empty set");
    std::array<double, kChannels> sum{}, sq{};
    std::array<std::size_t, kChannels> count{};
    for (const auto& v : raw)
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const auto c = static_cast<std::size_t>(i) % kChannels;
            sum[c] += v[i];
            ++count[c];
        }
    ChannelStats st;
    for (std::size_t c = 0; c < kChannels; ++c) st.mean[c] = sum[c] / static_cast<double>(count[c]);
    for (const auto& v : raw)
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const auto c = static_cast<std::size_t>(i) % kChannels;
            const double d = v[i] - st.mean[c];
            sq[c] += d * d;
        }
    for (std::size_t c = 0; c < kChannels; ++c) {
        const double sd = std::sqrt(sq[c] / static_cast<double>(count[c]));
        // Relative cutoff so a constant channel with rounding noise still counts as constant.
        st.scale[c] = sd > 1e-12 * std::max(1.0, std::abs(st.mean[c])) ? sd : 0.0;
    }
    return st;
}

FeatureVector standardize(const FeatureVector& raw, const ChannelStats& stats) {
    FeatureVector out(raw.size());
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
        const auto c = static_cast<std::size_t>(i) % kChannels;
        out[i] = stats.scale[c] > 0.0 ? (raw[i] - stats.mean[c]) / stats.scale[c] : 0.0;
    }
    return out;
}

std::string dataset_fingerprint(const Dataset& data) {
    std::ostringstream ss;
    write_dataset_csv(ss, data);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(ss.str())));
    return buf;
}

std::vector<std::string> class_labels(const Dataset& data) {
    std::vector<std::string> labels;
    for (const auto& ts : data)
        if (ts.label && std::find(labels.begin(), labels.end(), *ts.label) == labels.end()) labels.push_back(*ts.label);
    return labels;
}

StateModel train(const Dataset& data, const ClassifierConfig& config) {
    check_training_set(data);
    if (config.epochs < 1) throw Error("epochs must be >= 1");
    if (!(config.regularization > 0.0)) throw Error("regularization must be > 0");

    StateModel model;
    model.sensing_action = data.front().sensing_action;
    model.classes = class_labels(data);
    model.length = config.length;
    if (model.classes.size() < 2) throw Error("nothing to discriminate");
    for (const auto& cls : model.classes) {
        const auto n = std::count_if(data.begin(), data.end(), [&](const auto& ts) { return *ts.label == cls; });
        if (n < 2) throw Error("class '" + cls + "' needs at least 2 samples");
    }

    std::vector<FeatureVector> raw;
    raw.reserve(data.size());
    for (const auto& ts : data) raw.push_back(featurize(ts, config.length));
    model.stats = fit_channel_stats(raw);

    const auto n = static_cast<Eigen::Index>(data.size());
    const auto d = static_cast<Eigen::Index>(model.feature_dim());
    const auto k = static_cast<Eigen::Index>(model.classes.size());
    Eigen::MatrixXd x(n, d);
    std::vector<std::size_t> y(data.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        x.row(i) = standardize(raw[static_cast<std::size_t>(i)], model.stats).transpose();
        const auto& lbl = *data[static_cast<std::size_t>(i)].label;
        y[static_cast<std::size_t>(i)] =
            static_cast<std::size_t>(std::find(model.classes.begin(), model.classes.end(), lbl) - model.classes.begin());
    }

    // Pegasos on the one-hot margin loss
    //   sum_c max(0, 1 - y_c s_c),  y_c = +1 for the labelled class, -1 otherwise,
    //   s = W x + b,
    // with step 1/(lambda t). The returned model is the average of the
    // final-epoch iterates.
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k, d);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    Eigen::MatrixXd w_avg = Eigen::MatrixXd::Zero(k, d);
    Eigen::VectorXd b_avg = Eigen::VectorXd::Zero(k);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, "classifier-shuffle"));
    const double lambda = config.regularization;
    double t = 0.0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
        const bool last_epoch = epoch + 1 == config.epochs;
        for (std::size_t idx : order) {
            t += 1.0;
            const double eta = 1.0 / (lambda * t);
            const auto row = x.row(static_cast<Eigen::Index>(idx));
            const Eigen::VectorXd s = w * row.transpose() + b;
            const auto yi = static_cast<Eigen::Index>(y[idx]);
            // The bias acts as a constant feature and shares the decay.
            w *= (1.0 - eta * lambda);
            b *= (1.0 - eta * lambda);
            for (Eigen::Index c = 0; c < k; ++c) {
                const double target = c == yi ? 1.0 : -1.0;
                if (target * s[c] < 1.0) {
                    w.row(c) += (eta * target) * row;
                    b[c] += eta * target;
                }
            }
            if (last_epoch) {
                w_avg += w;
                b_avg += b;
            }
        }
    }
    model.weights = w_avg / static_cast<double>(n);
    model.bias = b_avg / static_cast<double>(n);

    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (classify_features(model, x.row(i).transpose()).class_index == y[static_cast<std::size_t>(i)]) ++correct;
    model.training_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    std::map<std::size_t, std::size_t> counts;
    for (auto label : y) ++counts[label];
    std::size_t majority = 0;
    for (const auto& [label, c] : counts) majority = std::max(majority, c);
    model.degenerate = model.training_accuracy <= static_cast<double>(majority) / static_cast<double>(n) + 1e-12;
    model.trained_on = dataset_fingerprint(data);
    return model;
}

Classification classify_features(const StateModel& model, const FeatureVector& standardized) {
    if (standardized.size() != static_cast<Eigen::Index>(model.feature_dim()) || model.weights.cols() != standardized.size())
        throw Error("feature dimension mismatch: model expects " + std::to_string(model.weights.cols()) + ", got " +
                    std::to_string(standardized.size()));
    Classification out;
    out.scores = model.weights * standardized + model.bias;
    out.class_index = argmax_lowest(out.scores);
    out.state = model.classes[out.class_index];
    return out;
}

Classification classify(const StateModel& model, const HapticTimeSeries& ts) {
    if (ts.sensing_action != model.sensing_action)
        throw Error("series from sensing action '" + ts.sensing_action + "' given to model for '" +
                    model.sensing_action + "'");
    return classify_features(model, featurize(ts, model.length, &model.stats));
}

double cross_validate(const Dataset& data, int folds, const ClassifierConfig& config) {
    check_training_set(data);
    if (folds < 2) throw Error("cross-validation needs at least 2 folds");
    const auto labels = class_labels(data);
    if (labels.size() < 2) throw Error("nothing to discriminate");

    std::vector<int> fold_of(data.size(), -1);
    Rng rng(derive_seed(config.seed, "cross-validation"));
    for (const auto& cls : labels) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < data.size(); ++i)
            if (*data[i].label == cls) members.push_back(i);
        if (members.size() < static_cast<std::size_t>(folds))
            throw Error("class '" + cls + "' has " + std::to_string(members.size()) + " samples, fewer than " +
                        std::to_string(folds) + " folds");
        for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[uniform_index(rng, i)]);
        for (std::size_t r = 0; r < members.size(); ++r) fold_of[members[r]] = static_cast<int>(r % folds);
    }

    double total = 0.0;
    for (int f = 0; f < folds; ++f) {
        Dataset train_set, test_set;
        for (std::size_t i = 0; i < data.size(); ++i) (fold_of[i] == f ? test_set : train_set).push_back(data[i]);
        const StateModel model = train(train_set, config);
        std::size_t correct = 0;
        for (const auto& ts : test_set)
            if (classify(model, ts).state == *ts.label) ++correct;
        total += static_cast<double>(correct) / static_cast<double>(test_set.size());
    }
    return total / folds;
}

double discrimination_score(double accuracy, double alpha) {
    return std::exp(alpha * accuracy);
}

std::vector<std::pair<std::string, Dataset>> split_by_action(const Dataset& data) {
    std::vector<std::pair<std::string, Dataset>> out;
    for (const auto& ts : data) {
        auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == ts.sensing_action; });
        if (it == out.end()) {
            out.emplace_back(ts.sensing_action, Dataset{});
            it = std::prev(out.end());
        }
        it->second.push_back(ts);
    }
    return out;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
    out << kDatasetHeader << '\n';
    for (const auto& ts : data) {
        for (const auto& s : ts.steps) {
            out << ts.series_id << ',' << ts.sensing_action << ',' << ts.label.value_or("") << ',' << format_double(s.t);
            for (double v : channels_of(s)) out << ',' << format_double(v);
            out << '\n';
        }
    }
}

Dataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != kDatasetHeader)
        throw Error("dataset CSV must start with header '" + std::string(kDatasetHeader) + "'");
    Dataset data;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(trim(line), ',');
        if (cells.size() != 13)
            throw Error("dataset line " + std::to_string(line_no) + ": expected 13 fields, got " +
                        std::to_string(cells.size()));
        if (cells[0].empty()) throw Error("dataset line " + std::to_string(line_no) + ": empty series_id");
        if (data.empty() || data.back().series_id != cells[0]) {
            for (const auto& ts : data)
                if (ts.series_id == cells[0])
                    throw Error("dataset line " + std::to_string(line_no) + ": rows of series '" + cells[0] +
                                "' are not contiguous");
            HapticTimeSeries ts;
            ts.series_id = cells[0];
            ts.sensing_action = cells[1];
            if (!cells[2].empty()) ts.label = cells[2];
            data.push_back(std::move(ts));
        }
        auto& ts = data.back();
        if (ts.sensing_action != cells[1] || ts.label.value_or("") != cells[2])
            throw Error("dataset line " + std::to_string(line_no) + ": series '" + cells[0] +
                        "' changes sensing action or label");
        HapticStep s;
        try {
            s.t = parse_double(cells[3]);
            for (int c = 0; c < 3; ++c) {
                s.force[c] = parse_double(cells[4 + c]);
                s.torque[c] = parse_double(cells[7 + c]);
                s.position[c] = parse_double(cells[10 + c]);
            }
        } catch (const Error& e) {
            throw Error("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
        ts.steps.push_back(s);
    }
    for (const auto& ts : data) check_series(ts);
    return data;
}

std::string serialize_model(const StateModel& model) {
    nlohmann::ordered_json doc;
    doc["format"] = kModelFormatName;
    doc["version"] = kModelFormatVersion;
    doc["sensing_action"] = model.sensing_action;
    doc["classes"] = model.classes;
    doc["length"] = model.length;
    doc["channel_mean"] = model.stats.mean;
    doc["channel_scale"] = model.stats.scale;
    auto& rows = doc["weights"] = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < model.weights.rows(); ++r)
        rows.push_back(std::vector<double>(model.weights.row(r).begin(), model.weights.row(r).end()));
    doc["bias"] = std::vector<double>(model.bias.begin(), model.bias.end());
    doc["trained_on"] = model.trained_on;
    doc["training_accuracy"] = model.training_accuracy;
    doc["degenerate"] = model.degenerate;
    return doc.dump() + "\n";
}

StateModel deserialize_model(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.at("format").get<std::string>() != kModelFormatName) throw Error("not a state-model document");
        if (doc.at("version").get<int>() != kModelFormatVersion) throw Error("unsupported state-model version");
        StateModel m;
        m.sensing_action = doc.at("sensing_action").get<std::string>();
        m.classes = doc.at("classes").get<std::vector<std::string>>();
        m.length = doc.at("length").get<std::size_t>();
        m.stats.mean = doc.at("channel_mean").get<std::array<double, kChannels>>();
        m.stats.scale = doc.at("channel_scale").get<std::array<double, kChannels>>();
        const auto rows = doc.at("weights").get<std::vector<std::vector<double>>>();
        if (rows.size() != m.classes.size()) throw Error("weight rows do not match class count");
        m.weights.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.feature_dim()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != m.feature_dim()) throw Error("weight row has wrong dimension");
            for (std::size_t c = 0; c < rows[r].size(); ++c)
                m.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
        const auto bias = doc.at("bias").get<std::vector<double>>();
        if (bias.size() != m.classes.size()) throw Error("bias does not match class count");
        m.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));
        m.trained_on = doc.at("trained_on").get<std::string>();
        m.training_accuracy = doc.at("training_accuracy").get<double>();
        m.degenerate = doc.at("degenerate").get<bool>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("state-model schema violation: ") + e.what());
    }
}

}  // namespace skillmem
