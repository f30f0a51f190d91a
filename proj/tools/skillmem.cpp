// skillmem command-line tool.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <sstream>

#include "skillmem/agent.hpp"
#include "skillmem/convergence.hpp"
#include "skillmem/error.hpp"
#include "skillmem/svg.hpp"
#include "skillmem/text.hpp"

#ifndef SKILLMEM_VERSION
#define SKILLMEM_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace skillmem;

namespace {

constexpr const char* kOutEnv = "SKILLMEM_OUT";

json default_config() {
    const char* env = std::getenv(kOutEnv);
    return json{
        {"seed", 0},
        {"scenario", "book"},
        {"out", env && *env ? env : "."},
        {"params", {{"lambda_succ", 1000.0}, {"lambda_fail", -30.0}, {"h_init", 200.0}, {"gamma", 0.0}}},
        {"classifier", {{"alpha", 10.0}, {"length", 100}, {"folds", 5}, {"epochs", 50}, {"regularization", 1.0}}},
        {"data", {{"samples", 50}, {"supervised", false}, {"dataset", ""}}},
        {"confidence", {{"window", 100}, {"threshold", 0.9}}},
        {"play", {{"skill", ""}, {"max_rollouts", 300}, {"resume", false}}},
        {"exec", {{"skill", ""}, {"world", ""}, {"random_start", false}}},
        {"registry", {{"file", ""}}},
        {"converge",
         {{"agents", 10000},
          {"rollouts", 1500},
          {"preps", json::array({6})},
          {"threshold", 0.9},
          {"p_p", 0.98},
          {"accuracies", json::array({json::array({"slide", 0.93}), json::array({"poke", 0.27}), json::array({"press", 0.40})})},
          {"svg", false},
          {"jobs", 1}}},
    };
}

// Rejects keys the defaults do not know, so typos in config files surface.
void check_keys(const json& given, const json& known, const std::string& where) {
    if (!given.is_object()) return;
    for (const auto& [k, v] : given.items()) {
        if (!known.contains(k)) throw Error("unknown config key '" + where + "/" + k + "'");
        if (v.is_object() && known.at(k).is_object()) check_keys(v, known.at(k), where + "/" + k);
    }
}

// Flags bound to JSON pointers into the config; applied after the config file.
class Flags {
public:
    explicit Flags(json& cfg) : cfg_(cfg) {}

    template <class T>
    CLI::Option* option(CLI::App* app, const std::string& name, const std::string& ptr, const std::string& desc) {
        auto value = std::make_shared<T>();
        CLI::Option* opt = app->add_option(name, *value, desc);
        apply_.push_back([this, value, opt, ptr] {
            if (opt->count() > 0) cfg_[json::json_pointer(ptr)] = *value;
        });
        return opt;
    }

    CLI::Option* flag(CLI::App* app, const std::string& name, const std::string& ptr, const std::string& desc) {
        auto value = std::make_shared<bool>(false);
        CLI::Option* opt = app->add_flag(name, *value, desc);
        apply_.push_back([this, value, opt, ptr] {
            if (opt->count() > 0) cfg_[json::json_pointer(ptr)] = *value;
        });
        return opt;
    }

    void apply() {
        for (auto& f : apply_) f();
    }

private:
    json& cfg_;
    std::vector<std::function<void()>> apply_;
};

template <class T>
T get(const json& cfg, const std::string& ptr) {
    try {
        return cfg.at(json::json_pointer(ptr)).get<T>();
    } catch (const json::exception&) {
        throw Error("config value '" + ptr + "' is missing or has the wrong type");
    }
}

PsParams params_of(const json& cfg) {
    PsParams p;
    p.lambda_succ = get<double>(cfg, "/params/lambda_succ");
    p.lambda_fail = get<double>(cfg, "/params/lambda_fail");
    p.h_init = get<double>(cfg, "/params/h_init");
    p.gamma = get<double>(cfg, "/params/gamma");
    p.validate();
    return p;
}

AgentConfig agent_config_of(const json& cfg) {
    AgentConfig a;
    a.params = params_of(cfg);
    a.alpha = get<double>(cfg, "/classifier/alpha");
    a.folds = get<int>(cfg, "/classifier/folds");
    a.classifier.length = get<std::size_t>(cfg, "/classifier/length");
    a.classifier.epochs = get<int>(cfg, "/classifier/epochs");
    a.classifier.regularization = get<double>(cfg, "/classifier/regularization");
    a.classifier.seed = derive_seed(get<std::uint64_t>(cfg, "/seed"), "classifier");
    a.samples_per_state = get<std::size_t>(cfg, "/data/samples");
    a.supervised = get<bool>(cfg, "/data/supervised");
    a.confidence.window = get<std::size_t>(cfg, "/confidence/window");
    a.confidence.threshold = get<double>(cfg, "/confidence/threshold");
    if (a.classifier.length < 2) throw Error("--length must be >= 2");
    if (a.classifier.epochs < 1) throw Error("--epochs must be >= 1");
    if (a.samples_per_state == 0) throw Error("--samples must be >= 1");
    return a;
}

std::string fingerprint(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

struct Run {
    std::string command;
    json cfg;
    fs::path out;
    json outputs = json::object();

    fs::path path(const std::string& name) const { return out / name; }

    void write(const std::string& name, const std::string& contents) {
        const fs::path p = path(name);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        write_file(p.string(), contents);
        outputs[name] = fingerprint(contents);
    }

    // Effective config plus a manifest of everything written by this run.
    void finish() {
        const std::string config = cfg.dump(2) + "\n";
        write_file(path(command + ".config.json").string(), config);
        json m;
        m["tool"] = "skillmem";
        m["version"] = SKILLMEM_VERSION;
        m["command"] = command;
        m["seed"] = cfg.at("seed");
        m["params"] = cfg.at("params");
        m["config_fingerprint"] = fingerprint(config);
        m["outputs"] = outputs;
        std::string all;
        for (const auto& [k, v] : outputs.items()) all += k + ":" + v.get<std::string>() + "\n";
        m["fingerprint"] = fingerprint(all + config);
        write_file(path(command + ".manifest.json").string(), m.dump(2) + "\n");
    }
};

Run start_run(const std::string& command, const json& cfg) {
    Run run{command, cfg, fs::path(get<std::string>(cfg, "/out"))};
    fs::create_directories(run.out);
    return run;
}

std::string registry_path(const Run& run) {
    const auto f = get<std::string>(run.cfg, "/registry/file");
    return f.empty() ? run.path("registry.json").string() : f;
}

// ---------------------------------------------------------------- commands

void cmd_gen_data(const json& cfg) {
    Run run = start_run("gen-data", cfg);
    const Scenario scenario = load_scenario(get<std::string>(cfg, "/scenario"));
    const auto samples = get<std::size_t>(cfg, "/data/samples");
    if (samples == 0) throw Error("--samples must be >= 1");
    std::vector<std::string> actions;
    for (const auto* a : scenario.classified_sensing()) actions.push_back(a->id);
    Rng rng(derive_seed(get<std::uint64_t>(cfg, "/seed"), "gen-data"));
    const auto db = create_haptic_database(scenario, actions, samples, get<bool>(cfg, "/data/supervised"), rng);
    std::ostringstream csv;
    write_dataset_csv(csv, db.series);
    run.write("dataset.csv", csv.str());
    std::ostringstream truth;
    truth << "sensing_action,label,state\n";
    for (const auto& [key, state] : db.ground_truth) truth << key.first << ',' << key.second << ',' << state << '\n';
    run.write("ground_truth.csv", truth.str());
    run.finish();
    std::cout << "wrote " << db.series.size() << " series to " << run.path("dataset.csv").string() << "\n";
}

std::string dataset_path(const Run& run) {
    const auto d = get<std::string>(run.cfg, "/data/dataset");
    return d.empty() ? run.path("dataset.csv").string() : d;
}

Dataset load_dataset(const std::string& path) {
    std::istringstream in(read_file(path));
    return read_dataset_csv(in);
}

void cmd_train(const json& cfg) {
    Run run = start_run("train", cfg);
    const AgentConfig agent = agent_config_of(cfg);
    const auto trained = train_sensing(load_dataset(dataset_path(run)), agent);
    std::ostringstream report;
    report << "sensing_action,accuracy,alpha,score,degenerate\n";
    for (const auto& s : trained.scores) {
        const auto& model = trained.models.at(s.sensing_action);
        run.write("models/" + s.sensing_action + ".model.json", serialize_model(model));
        report << s.sensing_action << ',' << format_double(s.accuracy) << ',' << format_double(s.alpha) << ','
               << format_double(s.score) << ',' << (model.degenerate ? 1 : 0) << '\n';
    }
    run.write("discrimination.csv", report.str());
    run.finish();

    auto ranked = trained.scores;
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    std::printf("%-16s %9s %14s\n", "sensing action", "accuracy", "D");
    for (const auto& s : ranked) {
        std::printf("%-16s %9.4f %14.4f%s\n", s.sensing_action.c_str(), s.accuracy, s.score,
                    trained.models.at(s.sensing_action).degenerate ? "  (degenerate)" : "");
    }
}

SkillRegistry open_registry(const Run& run, bool must_exist) {
    const std::string path = registry_path(run);
    if (must_exist || fs::exists(path)) {
        if (!fs::exists(path)) throw Error("registry '" + path + "' does not exist");
        return deserialize_registry(read_file(path));
    }
    return SkillRegistry(load_scenario(get<std::string>(run.cfg, "/scenario")), params_of(run.cfg));
}

// Sensing models are shared by every skill of a registry: a new skill reuses
// the models of the first existing record, otherwise they are trained here.
SkillRecord make_record(const SkillRegistry& registry, const std::string& skill, const json& cfg) {
    const AgentConfig agent = agent_config_of(cfg);
    if (!registry.order().empty()) {
        const auto& first = registry.record(registry.order().front());
        std::map<std::pair<std::string, std::string>, std::string> tags;
        for (ClipId c : first.ecm.layer(3)) {
            const auto& clip = first.ecm.clip(c);
            if (clip.semantic_tag)
                tags[{first.ecm.clip(*first.ecm.parent_of(c)).label, clip.label}] = *clip.semantic_tag;
        }
        return new_skill_record(registry.scenario(), skill, first.models, first.scores, registry.params(), tags);
    }
    const auto dataset = get<std::string>(cfg, "/data/dataset");
    if (!dataset.empty()) {
        const auto trained = train_sensing(load_dataset(dataset), agent);
        return new_skill_record(registry.scenario(), skill, trained.models, trained.scores, registry.params());
    }
    Rng rng(derive_seed(get<std::uint64_t>(cfg, "/seed"), "database:" + skill));
    return new_skill_record(registry.scenario(), skill, agent, rng);
}

void cmd_play(const json& cfg) {
    Run run = start_run("play", cfg);
    const auto skill = get<std::string>(cfg, "/play/skill");
    if (skill.empty()) throw Error("--skill is required");
    const bool resume = get<bool>(cfg, "/play/resume");
    SkillRegistry registry = open_registry(run, resume);
    if (!resume && fs::exists(registry_path(run)) && registry.contains(skill))
        throw Error("skill '" + skill + "' already exists in the registry; pass --resume to continue playing it");
    (void)registry.scenario().complex_skill(skill);
    if (!registry.contains(skill)) registry.put(make_record(registry, skill, cfg));

    const AgentConfig agent = agent_config_of(cfg);
    const auto max_rollouts = get<std::size_t>(cfg, "/play/max_rollouts");
    const auto offset = registry.record(skill).rollouts;
    Rng rng(derive_seed(get<std::uint64_t>(cfg, "/seed"), "play:" + skill, offset));
    const auto result = play(registry, skill, max_rollouts, agent.confidence, rng);

    std::ostringstream log;
    write_rollout_csv(log, result.rollouts);
    run.write("rollouts.csv", log.str());
    const std::string reg = serialize_registry(registry);
    write_file(registry_path(run), reg);
    run.outputs["registry.json"] = fingerprint(reg);
    run.finish();

    const auto& rec = registry.record(skill);
    std::cout << skill << ": " << to_string(rec.status) << " after " << rec.rollouts << " roll-outs, confidence "
              << format_double(rec.confidence()) << "\n";
}

void cmd_exec(const json& cfg) {
    Run run = start_run("exec", cfg);
    const auto skill = get<std::string>(cfg, "/exec/skill");
    if (skill.empty()) throw Error("--skill is required");
    const SkillRegistry registry = open_registry(run, true);
    if (!registry.contains(skill)) throw Error("unknown skill '" + skill + "'");
    Rng rng(derive_seed(get<std::uint64_t>(cfg, "/seed"), "exec"));
    WorldState world = registry.scenario().initial;
    if (get<bool>(cfg, "/exec/random_start")) world = random_start_state(registry.scenario(), world, rng);
    world = apply_overrides(world, get<std::string>(cfg, "/exec/world"));

    const auto [r, after] = execute_skill(registry, skill, world, rng);
    const auto& ecm = registry.record(skill).ecm;
    std::string tag;
    if (r.path && ecm.clip(r.path->clip_ids[2]).semantic_tag) tag = " (" + *ecm.clip(r.path->clip_ids[2]).semantic_tag + ")";
    std::ostringstream trace;
    trace << "skill:   " << skill << "\n"
          << "world:   " << describe(world) << "\n"
          << "sensing: " << r.sensing << "\n"
          << "state:   " << r.estimated_state << tag << "\n"
          << "prep:    " << r.prep << "\n"
          << "outcome: " << (r.success ? "success" : "failure") << " (reward " << format_double(r.reward) << ")\n"
          << "after:   " << describe(after) << "\n";
    run.write("exec.txt", trace.str());
    run.finish();
    std::cout << trace.str();
}

void cmd_registry_show(const json& cfg) {
    Run run = start_run("registry", cfg);
    const SkillRegistry registry = open_registry(run, true);
    std::printf("scenario %s\n", registry.scenario().name.c_str());
    for (const auto& id : registry.order()) {
        const auto& rec = registry.record(id);
        std::printf("%-20s %-20s rollouts %-6zu confidence %.3f\n", id.c_str(), std::string(to_string(rec.status)).c_str(),
                    rec.rollouts, rec.confidence());
        std::string preps;
        for (ClipId p : rec.ecm.layer(4)) preps += (preps.empty() ? "" : ",") + rec.ecm.clip(p).label;
        std::printf("  preps: %s\n", preps.c_str());
        if (!rec.registered_into.empty()) {
            std::string into;
            for (const auto& t : rec.registered_into) into += (into.empty() ? "" : ",") + t;
            std::printf("  registered into: %s\n", into.c_str());
        }
    }
}

void cmd_registry_register(const json& cfg, const std::string& skill, const std::vector<std::string>& targets) {
    Run run = start_run("registry", cfg);
    SkillRegistry registry = open_registry(run, true);
    for (const auto& t : targets) {
        (void)registry.scenario().complex_skill(t);
        if (!registry.contains(t)) registry.put(make_record(registry, t, cfg));
    }
    for (const auto& w : register_as_prep(registry, skill, targets)) std::cerr << "warning: " << w << "\n";
    const std::string reg = serialize_registry(registry);
    write_file(registry_path(run), reg);
    run.outputs["registry.json"] = fingerprint(reg);
    run.finish();
    std::cout << "registered " << skill << " as preparatory skill\n";
}

void cmd_registry_ecm(const json& cfg, const std::string& skill) {
    Run run = start_run("registry", cfg);
    const SkillRegistry registry = open_registry(run, true);
    run.write(skill + ".ecm.json", serialize_ecm(registry.record(skill).ecm));
    run.finish();
    std::cout << "wrote " << run.path(skill + ".ecm.json").string() << "\n";
}

void cmd_converge(const json& cfg) {
    Run run = start_run("converge", cfg);
    AbstractScenario s;
    s.params = params_of(cfg);
    s.alpha = get<double>(cfg, "/classifier/alpha");
    s.p_p = get<double>(cfg, "/converge/p_p");
    s.sensing_accuracies = get<std::vector<std::pair<std::string, double>>>(cfg, "/converge/accuracies");
    const auto preps = get<std::vector<int>>(cfg, "/converge/preps");
    const auto agents = get<std::size_t>(cfg, "/converge/agents");
    const auto rollouts = get<std::size_t>(cfg, "/converge/rollouts");
    const auto threshold = get<double>(cfg, "/converge/threshold");
    const auto jobs = get<unsigned>(cfg, "/converge/jobs");
    if (agents == 0) throw Error("--agents must be >= 1");
    if (rollouts == 0) throw Error("--rollouts must be >= 1");

    const auto sweep = sweep_preps(s, preps, agents, rollouts, threshold, get<std::uint64_t>(cfg, "/seed"), jobs);
    for (const auto& w : sweep.warnings) std::cerr << "warning: " << w << "\n";

    std::vector<SvgSeries> series;
    for (std::size_t i = 0; i < sweep.num_preps.size(); ++i) {
        std::ostringstream curve;
        write_curve_csv(curve, sweep.results[i]);
        if (i == 0) run.write("curve.csv", curve.str());
        if (sweep.num_preps.size() > 1) run.write("curve_np" + std::to_string(sweep.num_preps[i]) + ".csv", curve.str());
        series.push_back({"N_p = " + std::to_string(sweep.num_preps[i]), sweep.results[i].curve});
    }
    std::ostringstream table;
    write_sweep_csv(table, sweep);
    run.write("sweep.csv", table.str());
    if (get<bool>(cfg, "/converge/svg") && !series.empty()) {
        series.push_back({"threshold " + format_double(threshold), std::vector<double>(rollouts, threshold)});
        run.write("curve.svg", svg_line_chart(series, "Mean success over " + std::to_string(agents) + " agents",
                                              "roll-out", "mean success"));
    }
    run.finish();

    std::printf("%5s %6s %10s %10s\n", "N_p", "N_r", "N_r(raw)", "tail mean");
    for (std::size_t i = 0; i < sweep.num_preps.size(); ++i) {
        const auto& r = sweep.results[i];
        const std::size_t tail = std::max<std::size_t>(1, r.curve.size() / 10);
        double mean = 0.0;
        for (std::size_t k = r.curve.size() - tail; k < r.curve.size(); ++k) mean += r.curve[k];
        mean /= static_cast<double>(tail);
        std::printf("%5d %6s %10s %10.4f\n", sweep.num_preps[i], r.n_r ? std::to_string(*r.n_r).c_str() : "-",
                    r.n_r_raw ? std::to_string(*r.n_r_raw).c_str() : "-", mean);
    }
}

std::string one_line(std::string msg) {
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    while (!msg.empty() && msg.back() == ' ') msg.pop_back();
    return msg;
}

}  // namespace

int main(int argc, char** argv) {
    json cfg = default_config();
    Flags flags(cfg);
    CLI::App app{"skillmem: skill composition with episodic compositional memory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", SKILLMEM_VERSION);
    std::string config_file;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "JSON config file; flags override its values");
        flags.option<std::uint64_t>(sub, "--seed", "/seed", "master seed");
        flags.option<std::string>(sub, "--out", "/out", std::string("output directory (default $") + kOutEnv + " or .)");
        flags.option<std::string>(sub, "--scenario", "/scenario", "book, box or a scenario file");
    };
    auto ps_flags = [&](CLI::App* sub) {
        flags.option<double>(sub, "--lambda-succ", "/params/lambda_succ", "reward on success");
        flags.option<double>(sub, "--lambda-fail", "/params/lambda_fail", "reward on failure");
        flags.option<double>(sub, "--h-init", "/params/h_init", "initial preparatory weight");
        flags.option<double>(sub, "--gamma", "/params/gamma", "forgetting rate");
    };
    auto classifier_flags = [&](CLI::App* sub) {
        flags.option<double>(sub, "--alpha", "/classifier/alpha", "discrimination exponent");
        flags.option<std::size_t>(sub, "--length", "/classifier/length", "resampled series length");
        flags.option<int>(sub, "--folds", "/classifier/folds", "cross-validation folds");
        flags.option<int>(sub, "--epochs", "/classifier/epochs", "training epochs");
        flags.option<double>(sub, "--regularization", "/classifier/regularization", "margin regularization");
        flags.option<std::string>(sub, "--dataset", "/data/dataset", "dataset CSV (default <out>/dataset.csv)");
    };
    auto data_flags = [&](CLI::App* sub) {
        flags.option<std::size_t>(sub, "--samples", "/data/samples", "samples per state and sensing action");
        flags.flag(sub, "--supervised", "/data/supervised", "label samples with their true class");
    };

    auto* gen = app.add_subcommand("gen-data", "generate a haptic dataset");
    common(gen);
    data_flags(gen);

    auto* tr = app.add_subcommand("train", "train state classifiers and report discrimination scores");
    common(tr);
    classifier_flags(tr);

    auto* pl = app.add_subcommand("play", "learn a complex skill by playing");
    common(pl);
    ps_flags(pl);
    classifier_flags(pl);
    data_flags(pl);
    flags.option<std::string>(pl, "--skill", "/play/skill", "complex skill id")->required();
    flags.option<std::size_t>(pl, "--max-rollouts", "/play/max_rollouts", "roll-out budget");
    flags.flag(pl, "--resume", "/play/resume", "continue from the registry file");
    flags.option<std::size_t>(pl, "--window", "/confidence/window", "confidence window");
    flags.option<double>(pl, "--threshold", "/confidence/threshold", "confidence threshold");
    flags.option<std::string>(pl, "--registry", "/registry/file", "registry file (default <out>/registry.json)");

    auto* ex = app.add_subcommand("exec", "execute a learned skill once");
    common(ex);
    flags.option<std::string>(ex, "--skill", "/exec/skill", "complex skill id")->required();
    flags.option<std::string>(ex, "--world", "/exec/world", "world overrides, e.g. orientation=open");
    flags.flag(ex, "--random-start", "/exec/random_start", "scramble the world before the overrides");
    flags.option<std::string>(ex, "--registry", "/registry/file", "registry file (default <out>/registry.json)");

    auto* rg = app.add_subcommand("registry", "inspect the skill registry and build hierarchies");
    rg->require_subcommand(1);
    auto* rg_show = rg->add_subcommand("show", "list skills");
    auto* rg_reg = rg->add_subcommand("register", "register a confident skill as preparatory skill of others");
    auto* rg_ecm = rg->add_subcommand("ecm", "export the ECM of a skill");
    std::string reg_skill;
    std::vector<std::string> reg_into;
    for (auto* sub : {rg_show, rg_reg, rg_ecm}) {
        common(sub);
        flags.option<std::string>(sub, "--registry", "/registry/file", "registry file (default <out>/registry.json)");
    }
    classifier_flags(rg_reg);
    data_flags(rg_reg);
    rg_reg->add_option("--skill", reg_skill, "skill to register")->required();
    rg_reg->add_option("--into", reg_into, "target skills")->required()->delimiter(',');
    rg_ecm->add_option("--skill", reg_skill, "skill")->required();

    auto* cv = app.add_subcommand("converge", "population convergence study");
    common(cv);
    ps_flags(cv);
    flags.option<double>(cv, "--alpha", "/classifier/alpha", "discrimination exponent");
    flags.option<std::size_t>(cv, "--agents", "/converge/agents", "number of agents");
    flags.option<std::size_t>(cv, "--rollouts", "/converge/rollouts", "roll-outs per agent");
    flags.option<std::vector<int>>(cv, "--preps", "/converge/preps", "N_p values, comma separated")->delimiter(',');
    flags.option<double>(cv, "--threshold", "/converge/threshold", "success threshold for N_r");
    flags.option<double>(cv, "--p-p", "/converge/p_p", "complex skill success probability");
    flags.flag(cv, "--svg", "/converge/svg", "also write curve.svg");
    flags.option<unsigned>(cv, "--jobs", "/converge/jobs", "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << one_line(e.what()) << "\n";
        return 2;
    }

    try {
        if (!config_file.empty()) {
            const json file = json::parse(read_file(config_file));
            check_keys(file, cfg, "");
            cfg.merge_patch(file);
        }
        flags.apply();

        if (*gen) cmd_gen_data(cfg);
        else if (*tr) cmd_train(cfg);
        else if (*pl) cmd_play(cfg);
        else if (*ex) cmd_exec(cfg);
        else if (*rg_show) cmd_registry_show(cfg);
        else if (*rg_reg) cmd_registry_register(cfg, reg_skill, reg_into);
        else if (*rg_ecm) cmd_registry_ecm(cfg, reg_skill);
        else if (*cv) cmd_converge(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << one_line(e.what()) << "\n";
        return 1;
    }
    return 0;
}
