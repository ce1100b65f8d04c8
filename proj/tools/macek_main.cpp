// macek CLI: synthetic corpora, deterministic scenario runs, single-object
// classification against a snapshot, agent inspection, and the broadcast
// baseline comparison.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "macek/corpus.hpp"
#include "macek/errors.hpp"
#include "macek/numeric_text.hpp"
#include "macek/preprocess.hpp"
#include "macek/scenario.hpp"
#include "macek/simulation.hpp"

using namespace macek;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io_error, "cannot open '" + path + "' for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "' for reading");
    return in;
}

// Mirrors ScenarioConfig onto CLI flags; a TOML/INI config file can set any
// of them and explicit flags win.
struct ConfigFlags {
    ScenarioConfig config;
    std::string dispatch = dispatch_kind_name(config.policy.kind);
    std::string consultation = consultation_mode_name(config.consultation);
    std::string mix = mix_rule_name(config.mix);

    void attach(CLI::App* cmd) {
        cmd->add_option("--tau-k", config.thresholds.tau_k, "K-region threshold");
        cmd->add_option("--tau-m", config.thresholds.tau_m, "M-region threshold");
        cmd->add_option("--alpha-r", config.learning.alpha_r, "reinforcement step");
        cmd->add_option("--alpha-d", config.learning.alpha_d, "epoch decay step");
        cmd->add_option("--theta", config.learning.theta, "window count before adoption");
        cmd->add_option("--window", config.learning.window, "time-interval memory size W");
        cmd->add_option("--epoch", config.learning.epoch, "decay period E (0 = W)");
        cmd->add_option("--dispatch", dispatch, "dispatch policy")
            ->check(CLI::IsMember({"top_k", "min_conf", "broadcast"}));
        cmd->add_option("--top-k", config.policy.top_k, "dispatch fan-out (0 = min(3, M))");
        cmd->add_option("--min-conf", config.policy.min_conf, "confidence floor for min_conf");
        cmd->add_option("--consultation", consultation, "owner discovery mode")
            ->check(CLI::IsMember({"lookup", "broadcast"}));
        cmd->add_option("--round-cap", config.round_cap, "fall rounds before a session aborts");
        cmd->add_option("--epsilon-fb", config.epsilon_fb, "fallback confidence weight");
        cmd->add_option("--mix-rule", mix, "likelihood mixing rule")
            ->check(CLI::IsMember({"product", "sum", "max"}));
        cmd->add_option("--seed", config.seed, "scheduler seed");
        cmd->set_config("--config", "", "read options from a key/value (TOML) file");
    }

    ScenarioConfig resolve() {
        config.policy.kind = dispatch_kind_from_name(dispatch);
        config.consultation = consultation_mode_from_name(consultation);
        config.mix = mix_rule_from_name(mix);
        config.validate();
        return config;
    }
};

struct RunFiles {
    std::string corpus_path, manifest_path;
    std::string metrics_path, trace_path, snapshot_path;

    void attach(CLI::App* cmd, bool with_outputs) {
        cmd->add_option("--corpus", corpus_path, "corpus file")->required();
        cmd->add_option("--manifest", manifest_path, "manifest file")->required();
        if (with_outputs) {
            cmd->add_option("--metrics", metrics_path, "metrics stream (one JSON record per line)");
            cmd->add_option("--trace", trace_path, "message trace file");
            cmd->add_option("--snapshot-out", snapshot_path, "final snapshot file");
        }
    }

    std::pair<std::vector<CorpusRecord>, Manifest> load() const {
        auto corpus_in = open_in(corpus_path);
        auto records = read_corpus(corpus_in);
        auto manifest_in = open_in(manifest_path);
        return {std::move(records), read_manifest(manifest_in)};
    }
};

TagCollection tags_from_flags(const std::string& tags_csv, const std::string& text) {
    if (!tags_csv.empty() && !text.empty()) {
        throw Error(ErrorCode::invalid_config, "--tags and --text are mutually exclusive");
    }
    if (!text.empty()) return preprocess_text(text);
    TagCollection tags;
    std::istringstream stream(tags_csv);
    std::string tag;
    while (std::getline(stream, tag, ',')) {
        if (!tag.empty()) tags.push_back(tag);
    }
    return preprocess_tags(std::move(tags));
}

nlohmann::json vector_json(const ClassificationVector& vec) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [c, likelihood] : vec) out.push_back({c, likelihood});
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-expert-agent object classification kernel"};
    app.require_subcommand(1);

    // gen-corpus -------------------------------------------------------------
    auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic tag corpus + manifest");
    CorpusSpec spec;
    std::vector<double> mix{0.5, 0.3, 0.2};
    std::string corpus_out, manifest_out;
    gen->add_option("--classes", spec.num_classes, "number of main classes M");
    gen->add_option("--base", spec.base_per_class, "planted base features per class");
    gen->add_option("--learnable", spec.learnable_per_class, "planted learnable features per class");
    gen->add_option("--noise", spec.noise_pool, "shared noise pool size");
    gen->add_option("--tags", spec.tags_per_object, "tags per object");
    gen->add_option("--objects", spec.num_objects, "corpus length Q");
    gen->add_option("--mix", mix, "base,learnable,noise draw weights")->delimiter(',')->expected(3);
    gen->add_option("--seed", spec.seed, "corpus seed");
    gen->add_option("--corpus-out", corpus_out, "corpus output path")->required();
    gen->add_option("--manifest-out", manifest_out, "manifest output path")->required();

    // run ---------------------------------------------------------------------
    auto* run = app.add_subcommand("run", "run a scenario over a corpus");
    ConfigFlags run_config;
    RunFiles run_files;
    bool no_summary = false;
    std::string invariants = "end";
    run_files.attach(run, true);
    run_config.attach(run);
    run->add_flag("--no-summary", no_summary, "suppress the human summary table");
    run->add_option("--check-invariants", invariants, "off | end | every-query")
        ->check(CLI::IsMember({"off", "end", "every-query"}));

    // classify ---------------------------------------------------------------
    auto* classify = app.add_subcommand("classify", "classify one object against a snapshot");
    std::string classify_snapshot, classify_tags, classify_text;
    classify->add_option("--snapshot", classify_snapshot, "snapshot file")->required();
    classify->add_option("--tags", classify_tags, "comma-separated tag collection");
    classify->add_option("--text", classify_text, "free text to preprocess into tags");

    // inspect ----------------------------------------------------------------
    auto* inspect = app.add_subcommand("inspect", "print an agent's K/M/D regions");
    std::string inspect_snapshot, inspect_agent, inspect_region;
    inspect->add_option("--snapshot", inspect_snapshot, "snapshot file")->required();
    inspect->add_option("--agent", inspect_agent, "class identifier")->required();
    inspect->add_option("--region", inspect_region, "limit to one region")
        ->check(CLI::IsMember({"K", "M", "D"}));

    // compare-baseline ---------------------------------------------------------
    auto* compare = app.add_subcommand("compare-baseline",
                                       "selective dispatch vs the consult-everyone baseline");
    ConfigFlags compare_config;
    RunFiles compare_files;
    std::string report_path, metrics_prefix, trace_prefix;
    compare_files.attach(compare, false);
    compare_config.attach(compare);
    compare->add_option("--report", report_path, "write the comparison report JSON here");
    compare->add_option("--metrics-prefix", metrics_prefix,
                        "write <prefix>.selective.jsonl and <prefix>.baseline.jsonl");
    compare->add_option("--trace-prefix", trace_prefix,
                        "write <prefix>.selective.trace and <prefix>.baseline.trace");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            spec.mix = {mix[0], mix[1], mix[2]};
            auto [records, manifest] = generate_corpus(spec);
            auto corpus_file = open_out(corpus_out);
            write_corpus(corpus_file, records);
            auto manifest_file = open_out(manifest_out);
            write_manifest(manifest_file, manifest);
            std::cout << "wrote " << records.size() << " objects to " << corpus_out << " and "
                      << manifest.classes.size() << " class plans to " << manifest_out << '\n';
        } else if (run->parsed()) {
            auto config = run_config.resolve();
            auto [records, manifest] = run_files.load();

            std::ofstream metrics_file, trace_file, snapshot_file;
            RunSinks sinks;
            if (!run_files.metrics_path.empty()) {
                metrics_file = open_out(run_files.metrics_path);
                sinks.metrics = &metrics_file;
            }
            if (!run_files.trace_path.empty()) {
                trace_file = open_out(run_files.trace_path);
                sinks.trace = &trace_file;
            }
            if (!run_files.snapshot_path.empty()) {
                snapshot_file = open_out(run_files.snapshot_path);
                sinks.snapshot = &snapshot_file;
            }
            if (!no_summary) sinks.summary = &std::cout;

            RunOptions options;
            options.invariants = invariants == "off"        ? InvariantCheck::off
                                 : invariants == "every-query" ? InvariantCheck::every_query
                                                               : InvariantCheck::at_end;
            run_scenario(records, manifest, config, sinks, options);
        } else if (classify->parsed()) {
            auto snapshot_in = open_in(classify_snapshot);
            auto sim = Simulation::restore_snapshot(snapshot_in);
            auto tags = tags_from_flags(classify_tags, classify_text);
            auto vec = sim->classify(tags);
            nlohmann::json out{{"tags", tags}, {"vector", vector_json(vec)}};
            std::cout << out.dump() << '\n';
        } else if (inspect->parsed()) {
            auto snapshot_in = open_in(inspect_snapshot);
            auto sim = Simulation::restore_snapshot(snapshot_in);
            const auto& agent = sim->agent_by_class(inspect_agent);
            std::cout << "agent " << agent.class_id() << ": " << agent.collection().size()
                      << " features, " << agent.dispatches_processed() << " dispatches, "
                      << agent.epochs_completed() << " epochs\n";
            for (Region r : {Region::K, Region::M, Region::D}) {
                if (!inspect_region.empty() && inspect_region != region_name(r)) continue;
                auto features = agent.collection().features_in_region(r);
                std::cout << region_name(r) << "-region (" << features.size() << ")\n";
                for (const auto& f : features) {
                    std::cout << "  " << f << ' '
                              << format_probability(*agent.collection().probability(f)) << '\n';
                }
            }
        } else if (compare->parsed()) {
            auto config = compare_config.resolve();
            auto [records, manifest] = compare_files.load();

            std::ofstream sm, st, bm, bt;
            RunSinks selective_sinks, baseline_sinks;
            if (!metrics_prefix.empty()) {
                sm = open_out(metrics_prefix + ".selective.jsonl");
                bm = open_out(metrics_prefix + ".baseline.jsonl");
                selective_sinks.metrics = &sm;
                baseline_sinks.metrics = &bm;
            }
            if (!trace_prefix.empty()) {
                st = open_out(trace_prefix + ".selective.trace");
                bt = open_out(trace_prefix + ".baseline.trace");
                selective_sinks.trace = &st;
                baseline_sinks.trace = &bt;
            }
            auto report = compare_baseline(records, manifest, config, selective_sinks, baseline_sinks);
            write_comparison_table(std::cout, report);
            if (!report_path.empty()) {
                auto report_file = open_out(report_path);
                report_file << report.to_json_string() << '\n';
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
