// Python bindings for the classification kernel: the value-level primitives
// (feature collections, time-interval memory, expert agents) plus the
// system-level operations (simulation, corpus generation, scenario runs).

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "macek/corpus.hpp"
#include "macek/errors.hpp"
#include "macek/preprocess.hpp"
#include "macek/scenario.hpp"
#include "macek/simulation.hpp"

namespace py = pybind11;
using namespace macek;

namespace {

std::ofstream checked_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io_error, "cannot open '" + path + "' for writing");
    return out;
}

py::object region_to_str(std::optional<Region> r) {
    if (!r) return py::none();
    return py::str(region_name(*r));
}

py::dict outcome_to_dict(const DispatchOutcome& outcome) {
    py::dict d;
    d["class_score"] = outcome.package.class_score;
    d["matched"] = outcome.package.matched;
    d["per_subconcept"] = outcome.package.per_subconcept;
    d["adopted"] = outcome.adopted;
    d["promotion_triggers"] = outcome.promotion_triggers;
    d["interest_events"] = outcome.interest_events;
    d["epoch_due"] = outcome.epoch_due;
    return d;
}

py::dict query_result_to_dict(const Simulation::QueryResult& r) {
    py::dict d;
    d["query_id"] = r.query_id;
    d["vector"] = r.vector;
    d["fallback"] = r.fallback;
    d["messages"] = r.messages;
    d["consultation"] = r.consultation;
    return d;
}

CorpusSpec spec_from_args(std::size_t classes, std::size_t base, std::size_t learnable,
                          std::size_t noise, std::size_t tags, std::size_t objects,
                          std::vector<double> mix, std::uint64_t seed) {
    if (mix.size() != 3) throw Error(ErrorCode::invalid_config, "mix must have three weights");
    CorpusSpec spec;
    spec.num_classes = classes;
    spec.base_per_class = base;
    spec.learnable_per_class = learnable;
    spec.noise_pool = noise;
    spec.tags_per_object = tags;
    spec.num_objects = objects;
    spec.mix = {mix[0], mix[1], mix[2]};
    spec.seed = seed;
    return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "multi-expert-agent object classification kernel";

    py::register_exception<Error>(m, "KernelError");

    py::class_<Thresholds>(m, "Thresholds")
        .def(py::init<double, double>(), py::arg("tau_k") = 0.7, py::arg("tau_m") = 0.3)
        .def_readonly("tau_k", &Thresholds::tau_k)
        .def_readonly("tau_m", &Thresholds::tau_m)
        .def("classify", [](const Thresholds& t, double p) { return region_name(t.classify(p)); });

    py::class_<FeatureCollection>(m, "FeatureCollection")
        .def(py::init<Thresholds, std::size_t>(), py::arg("thresholds") = Thresholds{},
             py::arg("capacity") = 0)
        .def("region_of",
             [](const FeatureCollection& c, const FeatureId& f) { return region_to_str(c.region_of(f)); })
        .def("probability",
             [](const FeatureCollection& c, const FeatureId& f) -> py::object {
                 auto p = c.probability(f);
                 if (!p) return py::none();
                 return py::float_(*p);
             })
        .def("insert_at_m_floor", &FeatureCollection::insert_at_m_floor)
        .def("insert_at_k_floor", &FeatureCollection::insert_at_k_floor)
        .def("adjust", &FeatureCollection::adjust)
        .def("set_probability", &FeatureCollection::set_probability)
        .def("entries", [](const FeatureCollection& c) { return c.entries(); })
        .def("__len__", &FeatureCollection::size)
        .def("__contains__", &FeatureCollection::contains);

    py::class_<TimeIntervalMemory>(m, "TimeIntervalMemory")
        .def(py::init<std::size_t>(), py::arg("window_size"))
        .def("record", &TimeIntervalMemory::record)
        .def("count", &TimeIntervalMemory::count)
        .def("seen_within_window", &TimeIntervalMemory::seen_within_window)
        .def("frequent_unknown_tags", &TimeIntervalMemory::frequent_unknown_tags, py::arg("known"),
             py::arg("theta"))
        .def_property_readonly("window_size", &TimeIntervalMemory::window_size)
        .def_property_readonly("slot_count", &TimeIntervalMemory::slot_count);

    py::class_<LearningParams>(m, "LearningParams")
        .def(py::init([](double alpha_r, double alpha_d, int theta, std::size_t window,
                         std::size_t epoch) {
                 LearningParams p;
                 p.alpha_r = alpha_r;
                 p.alpha_d = alpha_d;
                 p.theta = theta;
                 p.window = window;
                 p.epoch = epoch;
                 return p;
             }),
             py::arg("alpha_r") = 0.05, py::arg("alpha_d") = 0.05, py::arg("theta") = 5,
             py::arg("window") = 50, py::arg("epoch") = 0)
        .def_readwrite("alpha_r", &LearningParams::alpha_r)
        .def_readwrite("alpha_d", &LearningParams::alpha_d)
        .def_readwrite("theta", &LearningParams::theta)
        .def_readwrite("window", &LearningParams::window)
        .def_readwrite("epoch", &LearningParams::epoch);

    py::class_<ExpertAgent>(m, "ExpertAgent")
        .def(py::init<ClassId, Thresholds, LearningParams>(), py::arg("class_id"),
             py::arg("thresholds") = Thresholds{}, py::arg("params") = LearningParams{})
        .def_property_readonly("class_id", &ExpertAgent::class_id)
        .def("collection", py::overload_cast<>(&ExpertAgent::collection),
             py::return_value_policy::reference_internal)
        .def("score_query",
             [](const ExpertAgent& agent, const TagCollection& tags) {
                 auto pkg = agent.score_query(tags);
                 py::dict d;
                 d["class_id"] = pkg.class_id;
                 d["class_score"] = pkg.class_score;
                 d["per_subconcept"] = pkg.per_subconcept;
                 d["matched"] = pkg.matched;
                 return d;
             })
        .def("process_dispatch",
             [](ExpertAgent& agent, const TagCollection& tags) {
                 return outcome_to_dict(agent.process_dispatch(tags));
             })
        .def("epoch_decay", &ExpertAgent::epoch_decay)
        .def("promotion_candidates", &ExpertAgent::promotion_candidates)
        .def("k_promotion_trigger", &ExpertAgent::k_promotion_trigger)
        .def("handle_k_query", &ExpertAgent::handle_k_query)
        .def("handle_fall_notice", &ExpertAgent::handle_fall_notice)
        .def("set_subconcepts",
             [](ExpertAgent& agent, const std::vector<std::pair<std::string, std::set<FeatureId>>>& subs) {
                 std::vector<SubConcept> out;
                 for (const auto& [name, members] : subs) out.push_back({name, members});
                 agent.set_subconcepts(std::move(out));
             })
        .def_property_readonly("dispatches_processed", &ExpertAgent::dispatches_processed);

    py::class_<Simulation>(m, "Simulation")
        .def(py::init([](const std::vector<std::pair<ClassId, std::set<FeatureId>>>& base_sets,
                         const std::string& config_json) {
                 return std::make_unique<Simulation>(base_sets,
                                                     ScenarioConfig::from_json_string(config_json));
             }),
             py::arg("base_sets"), py::arg("config_json") = "{}")
        .def("submit",
             [](Simulation& sim, const TagCollection& tags) {
                 return query_result_to_dict(sim.submit(tags));
             })
        .def("classify", &Simulation::classify)
        .def("check_invariants", &Simulation::check_invariants)
        .def("registry", [](const Simulation& sim) { return sim.center().registry().entries(); })
        .def("agent_features",
             [](const Simulation& sim, const ClassId& c) {
                 return sim.agent_by_class(c).collection().entries();
             })
        .def("agent_region",
             [](const Simulation& sim, const ClassId& c, const FeatureId& f) {
                 return region_to_str(sim.agent_by_class(c).collection().region_of(f));
             })
        .def("sessions",
             [](const Simulation& sim) {
                 auto s = sim.total_sessions();
                 py::dict d;
                 d["opened"] = s.opened;
                 d["committed"] = s.committed;
                 d["aborted"] = s.aborted;
                 return d;
             })
        .def("save_snapshot",
             [](const Simulation& sim) {
                 std::ostringstream out;
                 sim.save_snapshot(out);
                 return out.str();
             })
        .def_static("restore_snapshot",
                    [](const std::string& text) {
                        std::istringstream in(text);
                        return Simulation::restore_snapshot(in);
                    })
        .def_property_readonly("agent_count", &Simulation::agent_count);

    m.def("preprocess_text", &preprocess_text, py::arg("text"),
          "lowercase, split on non-alphanumeric runs, deduplicate");

    m.def(
        "generate_corpus",
        [](std::size_t classes, std::size_t base, std::size_t learnable, std::size_t noise,
           std::size_t tags, std::size_t objects, std::vector<double> mix, std::uint64_t seed,
           const std::string& corpus_path, const std::string& manifest_path) {
            auto spec = spec_from_args(classes, base, learnable, noise, tags, objects, mix, seed);
            auto [records, manifest] = generate_corpus(spec);
            auto corpus_file = checked_out(corpus_path);
            write_corpus(corpus_file, records);
            auto manifest_file = checked_out(manifest_path);
            write_manifest(manifest_file, manifest);
            return records.size();
        },
        py::arg("classes"), py::arg("base"), py::arg("learnable") = 0, py::arg("noise") = 0,
        py::arg("tags") = 6, py::arg("objects") = 100,
        py::arg("mix") = std::vector<double>{1.0, 0.0, 0.0}, py::arg("seed") = 1,
        py::arg("corpus_path") = "corpus.tsv", py::arg("manifest_path") = "manifest.json");

    m.def(
        "run_scenario",
        [](const std::string& corpus_path, const std::string& manifest_path,
           const std::string& config_json, const std::string& metrics_path,
           const std::string& trace_path, const std::string& snapshot_path) {
            std::ifstream corpus_in(corpus_path);
            if (!corpus_in) throw Error(ErrorCode::io_error, "cannot read " + corpus_path);
            auto records = read_corpus(corpus_in);
            std::ifstream manifest_in(manifest_path);
            if (!manifest_in) throw Error(ErrorCode::io_error, "cannot read " + manifest_path);
            auto manifest = read_manifest(manifest_in);

            std::ofstream metrics, trace, snapshot;
            RunSinks sinks;
            if (!metrics_path.empty()) {
                metrics = checked_out(metrics_path);
                sinks.metrics = &metrics;
            }
            if (!trace_path.empty()) {
                trace = checked_out(trace_path);
                sinks.trace = &trace;
            }
            if (!snapshot_path.empty()) {
                snapshot = checked_out(snapshot_path);
                sinks.snapshot = &snapshot;
            }
            auto totals =
                run_scenario(records, manifest, ScenarioConfig::from_json_string(config_json), sinks);
            return totals.to_json_string();
        },
        py::arg("corpus_path"), py::arg("manifest_path"), py::arg("config_json") = "{}",
        py::arg("metrics_path") = "", py::arg("trace_path") = "", py::arg("snapshot_path") = "");

    m.def(
        "compare_baseline",
        [](const std::string& corpus_path, const std::string& manifest_path,
           const std::string& config_json) {
            std::ifstream corpus_in(corpus_path);
            if (!corpus_in) throw Error(ErrorCode::io_error, "cannot read " + corpus_path);
            auto records = read_corpus(corpus_in);
            std::ifstream manifest_in(manifest_path);
            if (!manifest_in) throw Error(ErrorCode::io_error, "cannot read " + manifest_path);
            auto manifest = read_manifest(manifest_in);
            auto report =
                compare_baseline(records, manifest, ScenarioConfig::from_json_string(config_json));
            return report.to_json_string();
        },
        py::arg("corpus_path"), py::arg("manifest_path"), py::arg("config_json") = "{}");
}
