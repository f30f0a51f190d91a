#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "skillmem/agent.hpp"
#include "skillmem/convergence.hpp"
#include "skillmem/ecm.hpp"
#include "skillmem/error.hpp"
#include "skillmem/haptic.hpp"
#include "skillmem/seeding.hpp"
#include "skillmem/world.hpp"

namespace py = pybind11;
using namespace skillmem;

namespace {

// Owns the registry and the generator so a Python session can interleave
// play / execute / register calls and stay reproducible.
class Session {
public:
    Session(const std::string& scenario, std::uint64_t seed, bool supervised, std::size_t samples)
        : registry_(load_scenario(scenario)), rng_(derive_seed(seed, "session")), seed_(seed) {
        config_.supervised = supervised;
        config_.samples_per_state = samples;
        config_.classifier.seed = derive_seed(seed, "classifier");
    }

    void add_skill(const std::string& id) {
        if (registry_.order().empty()) {
            registry_.put(new_skill_record(registry_.scenario(), id, config_, rng_));
            return;
        }
        const auto& first = registry_.record(registry_.order().front());
        std::map<std::pair<std::string, std::string>, std::string> tags;
        for (ClipId c : first.ecm.layer(3))
            if (first.ecm.clip(c).semantic_tag)
                tags[{first.ecm.clip(*first.ecm.parent_of(c)).label, first.ecm.clip(c).label}] =
                    *first.ecm.clip(c).semantic_tag;
        registry_.put(new_skill_record(registry_.scenario(), id, first.models, first.scores, registry_.params(), tags));
    }

    py::dict play(const std::string& id, std::size_t max_rollouts, std::size_t window, double threshold) {
        const auto res = skillmem::play(registry_, id, max_rollouts, {window, threshold}, rng_);
        std::ostringstream csv;
        write_rollout_csv(csv, res.rollouts);
        py::dict out;
        out["reached_confidence"] = res.reached_confidence;
        out["rollouts"] = res.rollouts.size();
        out["confidence"] = registry_.record(id).confidence();
        out["csv"] = csv.str();
        return out;
    }

    py::dict execute(const std::string& id, const std::string& world) {
        const WorldState start = apply_overrides(registry_.scenario().initial, world);
        const auto [r, after] = execute_skill(registry_, id, start, rng_);
        py::dict out;
        out["sensing"] = r.sensing;
        out["state"] = r.estimated_state;
        out["prep"] = r.prep;
        out["success"] = r.success;
        out["world"] = describe(after);
        return out;
    }

    std::vector<std::string> register_into(const std::string& id, const std::vector<std::string>& targets) {
        return register_as_prep(registry_, id, targets);
    }

    double prep_probability(const std::string& skill, const std::string& prep) const {
        return prep_selection_probability(registry_.record(skill).ecm, prep);
    }

    std::string status(const std::string& id) const { return std::string(to_string(registry_.record(id).status)); }
    std::string ecm_json(const std::string& id) const { return serialize_ecm(registry_.record(id).ecm); }
    std::string registry_json() const { return serialize_registry(registry_); }
    std::vector<std::string> skills() const { return registry_.order(); }
    std::uint64_t seed() const { return seed_; }

private:
    SkillRegistry registry_;
    Rng rng_;
    AgentConfig config_;
    std::uint64_t seed_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Haptic skill learning with episodic compositional memory";
    static py::exception<Error> error(m, "SkillmemError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    m.def("derive_seed", py::overload_cast<std::uint64_t, std::string_view>(&derive_seed), py::arg("master"),
          py::arg("purpose"));

    py::class_<PsParams>(m, "PsParams")
        .def(py::init<>())
        .def_readwrite("lambda_succ", &PsParams::lambda_succ)
        .def_readwrite("lambda_fail", &PsParams::lambda_fail)
        .def_readwrite("h_init", &PsParams::h_init)
        .def_readwrite("gamma", &PsParams::gamma)
        .def("validate", &PsParams::validate);

    // ECM documents travel as JSON text; these helpers inspect them.
    m.def("ecm_transition_probability", [](const std::string& doc, const std::string& from_label, const std::string& to_label) {
        const Ecm e = deserialize_ecm(doc);
        auto find = [&](const std::string& label) {
            for (const auto& c : e.clips())
                if (c.label == label) return c.id;
            throw Error("no clip labelled '" + label + "'");
        };
        return transition_probability(e, find(from_label), find(to_label));
    });
    m.def("ecm_prep_probability", [](const std::string& doc, const std::string& prep) {
        return prep_selection_probability(deserialize_ecm(doc), prep);
    });
    m.def("validate_ecm", [](const std::string& doc) { deserialize_ecm(doc).validate(); });

    m.def("scenario_json", [](const std::string& name) { return serialize_scenario(load_scenario(name)); },
          py::arg("name_or_path"));

    m.def(
        "generate_dataset",
        [](const std::string& scenario, std::uint64_t seed, std::size_t samples, bool supervised) {
            const Scenario sc = load_scenario(scenario);
            std::vector<std::string> actions;
            for (const auto* a : sc.classified_sensing()) actions.push_back(a->id);
            Rng rng(derive_seed(seed, "gen-data"));
            const auto db = create_haptic_database(sc, actions, samples, supervised, rng);
            std::ostringstream csv;
            write_dataset_csv(csv, db.series);
            return csv.str();
        },
        py::arg("scenario") = "book", py::arg("seed") = 0, py::arg("samples") = 50, py::arg("supervised") = false);

    m.def(
        "cross_validate_csv",
        [](const std::string& csv, int folds, std::uint64_t seed) {
            std::istringstream in(csv);
            ClassifierConfig cfg;
            cfg.seed = seed;
            std::map<std::string, double> out;
            for (const auto& [action, data] : split_by_action(read_dataset_csv(in))) out[action] = cross_validate(data, folds, cfg);
            return out;
        },
        py::arg("csv"), py::arg("folds") = 5, py::arg("seed") = 0);

    m.def("discrimination_score", &discrimination_score, py::arg("accuracy"), py::arg("alpha"));

    py::class_<AbstractScenario>(m, "AbstractScenario")
        .def(py::init<>())
        .def_readwrite("sensing_accuracies", &AbstractScenario::sensing_accuracies)
        .def_readwrite("num_states", &AbstractScenario::num_states)
        .def_readwrite("p_p", &AbstractScenario::p_p)
        .def_readwrite("num_preps", &AbstractScenario::num_preps)
        .def_readwrite("alpha", &AbstractScenario::alpha)
        .def_readwrite("params", &AbstractScenario::params)
        .def("validate", &AbstractScenario::validate);

    py::class_<ConvergenceResult>(m, "ConvergenceResult")
        .def_readonly("curve", &ConvergenceResult::curve)
        .def_readonly("smoothed", &ConvergenceResult::smoothed)
        .def_readonly("agents", &ConvergenceResult::agents)
        .def_readonly("rollouts", &ConvergenceResult::rollouts)
        .def_readonly("threshold", &ConvergenceResult::threshold)
        .def_readonly("n_r", &ConvergenceResult::n_r)
        .def_readonly("n_r_raw", &ConvergenceResult::n_r_raw);

    m.def("run_population", &run_population, py::arg("scenario"), py::arg("agents"), py::arg("rollouts"),
          py::arg("threshold") = 0.9, py::arg("seed") = 0, py::arg("jobs") = 1,
          py::call_guard<py::gil_scoped_release>());
    m.def(
        "sweep_preps",
        [](const AbstractScenario& s, const std::vector<int>& preps, std::size_t agents, std::size_t rollouts,
           double threshold, std::uint64_t seed, unsigned jobs) {
            SweepResult r;
            {
                py::gil_scoped_release release;
                r = sweep_preps(s, preps, agents, rollouts, threshold, seed, jobs);
            }
            std::vector<std::pair<int, std::optional<std::size_t>>> rows;
            for (std::size_t i = 0; i < r.num_preps.size(); ++i) rows.emplace_back(r.num_preps[i], r.results[i].n_r);
            return py::make_tuple(rows, r.warnings);
        },
        py::arg("scenario"), py::arg("num_preps"), py::arg("agents"), py::arg("rollouts"), py::arg("threshold") = 0.9,
        py::arg("seed") = 0, py::arg("jobs") = 1);
    m.def("smooth", &smooth, py::arg("curve"), py::arg("window") = kSmoothingWindow);
    m.def("first_crossing", &first_crossing, py::arg("curve"), py::arg("threshold"));

    py::class_<Session>(m, "Session")
        .def(py::init<const std::string&, std::uint64_t, bool, std::size_t>(), py::arg("scenario") = "book",
             py::arg("seed") = 0, py::arg("supervised") = false, py::arg("samples") = 50)
        .def("add_skill", &Session::add_skill, py::arg("skill"))
        .def("play", &Session::play, py::arg("skill"), py::arg("max_rollouts") = 1000, py::arg("window") = 100,
             py::arg("threshold") = 0.9)
        .def("execute", &Session::execute, py::arg("skill"), py::arg("world") = "")
        .def("register", &Session::register_into, py::arg("skill"), py::arg("into"))
        .def("prep_probability", &Session::prep_probability, py::arg("skill"), py::arg("prep"))
        .def("status", &Session::status, py::arg("skill"))
        .def("ecm_json", &Session::ecm_json, py::arg("skill"))
        .def("registry_json", &Session::registry_json)
        .def_property_readonly("skills", &Session::skills)
        .def_property_readonly("seed", &Session::seed);
}
