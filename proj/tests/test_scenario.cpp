#include <doctest.h>

#include <sstream>
#include <vector>

#include <json.hpp>

#include "macek/errors.hpp"
#include "macek/messages.hpp"
#include "macek/scenario.hpp"

using namespace macek;

namespace {

struct Fixture {
    std::vector<CorpusRecord> records;
    Manifest manifest;
    ScenarioConfig config;
};

Fixture learning_fixture(std::uint64_t seed = 7) {
    CorpusSpec spec;
    spec.num_classes = 3;
    spec.base_per_class = 3;
    spec.learnable_per_class = 2;
    spec.noise_pool = 5;
    spec.tags_per_object = 6;
    spec.num_objects = 150;
    spec.mix = {0.5, 0.3, 0.2};
    spec.seed = seed;

    Fixture fx;
    auto [records, manifest] = generate_corpus(spec);
    fx.records = std::move(records);
    fx.manifest = std::move(manifest);
    fx.config.seed = seed;
    fx.config.learning.window = 20;
    fx.config.learning.theta = 3;
    return fx;
}

}  // namespace

TEST_CASE("replaying a scenario yields byte-identical metrics and trace") {
    auto fx = learning_fixture();
    std::ostringstream metrics1, trace1, snap1, metrics2, trace2, snap2;
    auto totals1 = run_scenario(fx.records, fx.manifest, fx.config,
                                {&metrics1, &trace1, &snap1, nullptr});
    auto totals2 = run_scenario(fx.records, fx.manifest, fx.config,
                                {&metrics2, &trace2, &snap2, nullptr});
    CHECK(metrics1.str() == metrics2.str());
    CHECK(trace1.str() == trace2.str());
    CHECK(snap1.str() == snap2.str());
    CHECK(totals1.messages_total == totals2.messages_total);
    CHECK(totals1.accuracy == totals2.accuracy);

    // A different scheduler seed must still satisfy the invariants but is
    // allowed to interleave differently.
    auto other = fx.config;
    other.seed = fx.config.seed + 1;
    std::ostringstream trace3;
    run_scenario(fx.records, fx.manifest, other, {nullptr, &trace3, nullptr, nullptr});
    CHECK(trace3.str() != trace1.str());
}

TEST_CASE("metrics totals reconcile with the per-query records") {
    auto fx = learning_fixture(11);
    std::ostringstream metrics;
    auto totals = run_scenario(fx.records, fx.manifest, fx.config,
                               {&metrics, nullptr, nullptr, nullptr});

    std::istringstream stream(metrics.str());
    std::string line;
    std::uint64_t queries = 0, correct = 0, messages = 0, consultation = 0, fallbacks = 0;
    bool saw_totals = false;
    while (std::getline(stream, line)) {
        auto j = nlohmann::json::parse(line);
        if (j.at("type") == "query") {
            ++queries;
            messages += j.at("messages").get<std::uint64_t>();
            consultation += j.at("consultation").get<std::uint64_t>();
            if (j.at("predicted") == j.at("true_class")) ++correct;
            if (j.at("fallback").get<bool>()) ++fallbacks;
        } else if (j.at("type") == "totals") {
            saw_totals = true;
            CHECK(j.at("queries").get<std::uint64_t>() == totals.queries);
            CHECK(j.at("messages_total").get<std::uint64_t>() == totals.messages_total);
        }
    }
    CHECK(saw_totals);
    CHECK(queries == totals.queries);
    CHECK(correct == totals.correct);
    CHECK(messages == totals.messages_total);
    CHECK(consultation == totals.consultation_messages);
    CHECK(fallbacks == totals.fallback_queries);
}

TEST_CASE("in-run message counts equal an independent recount of the trace") {
    auto fx = learning_fixture(13);
    std::ostringstream trace;
    auto totals = run_scenario(fx.records, fx.manifest, fx.config,
                               {nullptr, &trace, nullptr, nullptr});
    std::istringstream replay(trace.str());
    auto counts = count_trace(replay);
    CHECK(counts.total == totals.messages_total);
    CHECK(counts.consultation == totals.consultation_messages);
    for (const auto& [variant, n] : totals.by_variant) {
        CHECK(counts.by_variant[variant] == n);
    }
    CHECK(counts.per_query.size() == totals.queries);
}

TEST_CASE("a separable corpus beats the random baseline computed in-run") {
    CorpusSpec spec;
    spec.num_classes = 4;
    spec.base_per_class = 3;
    spec.tags_per_object = 4;
    spec.num_objects = 200;
    spec.mix = {1.0, 0.0, 0.0};
    spec.seed = 3;
    auto [records, manifest] = generate_corpus(spec);
    ScenarioConfig config;
    config.seed = 3;
    auto totals = run_scenario(records, manifest, config);
    CHECK(totals.accuracy >= 1.0 / static_cast<double>(spec.num_classes));
    CHECK(totals.accuracy == 1.0);  // fully separable by construction
}

TEST_CASE("an empty corpus produces zero-query metrics and a bootstrap-only snapshot") {
    CorpusSpec spec;
    spec.num_classes = 2;
    spec.base_per_class = 2;
    spec.num_objects = 0;
    spec.mix = {1.0, 0.0, 0.0};
    auto [records, manifest] = generate_corpus(spec);
    ScenarioConfig config;
    std::ostringstream metrics, snapshot;
    auto totals = run_scenario(records, manifest, config, {&metrics, nullptr, &snapshot, nullptr});
    CHECK(totals.queries == 0);
    CHECK(totals.messages_total == 0);
    CHECK(totals.accuracy == 0.0);
    CHECK(snapshot.str().find("macek-snapshot 1") == 0);

    std::istringstream snap_in(snapshot.str());
    auto restored = Simulation::restore_snapshot(snap_in);
    CHECK(restored->agent_count() == 2);
    CHECK(restored->center().registry().size() == 4);
}

TEST_CASE("corpus classes missing from the manifest are a mismatch error") {
    auto fx = learning_fixture();
    fx.records.push_back({"rogue", "c9", {"tag"}});
    CHECK_THROWS_AS(run_scenario(fx.records, fx.manifest, fx.config), Error);
    try {
        run_scenario(fx.records, fx.manifest, fx.config);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::corpus_mismatch);
    }
}

TEST_CASE("snapshot mid-run, restore, and replay the identical trace tail") {
    auto fx = learning_fixture(21);
    REQUIRE(fx.records.size() >= 100);

    // Uninterrupted run.
    std::ostringstream full_trace;
    {
        Simulation sim(fx.manifest.bootstrap_sets(), fx.config);
        sim.set_trace(&full_trace);
        for (const auto& record : fx.records) sim.submit(record.tags);
    }

    // Same run, split by a snapshot/restore in the middle.
    std::ostringstream head_trace, snapshot;
    {
        Simulation sim(fx.manifest.bootstrap_sets(), fx.config);
        sim.set_trace(&head_trace);
        for (std::size_t i = 0; i < 60; ++i) sim.submit(fx.records[i].tags);
        sim.save_snapshot(snapshot);
    }
    std::istringstream snap_in(snapshot.str());
    auto restored = Simulation::restore_snapshot(snap_in);
    std::ostringstream tail_trace;
    restored->set_trace(&tail_trace);
    for (std::size_t i = 60; i < fx.records.size(); ++i) restored->submit(fx.records[i].tags);
    restored->check_invariants();

    CHECK(head_trace.str() + tail_trace.str() == full_trace.str());
}

TEST_CASE("snapshots refuse mid-consultation and reject corrupt headers") {
    ScenarioConfig config;
    Simulation sim({{"C1", {"a"}}}, config);
    std::ostringstream out;
    CHECK_NOTHROW(sim.save_snapshot(out));

    std::istringstream corrupt("macek-snapshot 999\nconfig {}\n");
    CHECK_THROWS_AS(Simulation::restore_snapshot(corrupt), Error);
    try {
        std::istringstream again("not a snapshot at all\n");
        Simulation::restore_snapshot(again);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::version_mismatch);
    }

    // Truncation anywhere inside the stream is a version-mismatch error,
    // never a partial restore.
    std::string full = out.str();
    for (std::size_t cut : {full.size() / 4, full.size() / 2, full.size() - 2}) {
        std::istringstream truncated(full.substr(0, cut));
        CHECK_THROWS_AS(Simulation::restore_snapshot(truncated), Error);
    }
}

TEST_CASE("restoring and re-saving reproduces the snapshot byte for byte") {
    auto fx = learning_fixture(37);
    Simulation sim(fx.manifest.bootstrap_sets(), fx.config);
    for (std::size_t i = 0; i < 80; ++i) sim.submit(fx.records[i].tags);

    std::ostringstream first;
    sim.save_snapshot(first);
    std::istringstream in(first.str());
    auto restored = Simulation::restore_snapshot(in);
    std::ostringstream second;
    restored->save_snapshot(second);
    CHECK(first.str() == second.str());
}

TEST_CASE("a parked consultation survives snapshot/restore") {
    // Stubborn-owner stalemate parks the requester's session, which is
    // exactly the state a long run snapshots in.
    ScenarioConfig config;
    config.learning.theta = 2;
    std::vector<std::pair<ClassId, std::set<FeatureId>>> sets{{"C1", {"a1", "w"}}, {"C2", {"b1"}}};
    Simulation sim(sets, config);
    for (int i = 0; i < 12; ++i) sim.submit({"a1", "b1", "w"});
    // Both agents adopt the other's tags too, so several contests are parked.
    REQUIRE(sim.active_sessions() >= 1);

    std::ostringstream snapshot;
    sim.save_snapshot(snapshot);
    std::istringstream snap_in(snapshot.str());
    auto restored = Simulation::restore_snapshot(snap_in);
    CHECK(restored->active_sessions() == sim.active_sessions());

    std::ostringstream t1, t2;
    sim.set_trace(&t1);
    restored->set_trace(&t2);
    for (int i = 0; i < 30; ++i) {
        sim.submit({"a1", "b1", "w"});
        restored->submit({"a1", "b1", "w"});
    }
    CHECK(t1.str() == t2.str());
    CHECK(sim.total_sessions().aborted == restored->total_sessions().aborted);
}

TEST_CASE("compare_baseline: single-agent system costs the same in both modes") {
    CorpusSpec spec;
    spec.num_classes = 1;
    spec.base_per_class = 3;
    spec.tags_per_object = 3;
    spec.num_objects = 40;
    spec.mix = {1.0, 0.0, 0.0};
    spec.seed = 5;
    auto [records, manifest] = generate_corpus(spec);
    ScenarioConfig config;
    config.seed = 5;
    auto report = compare_baseline(records, manifest, config);
    CHECK(report.selective.messages_total == report.baseline.messages_total);
    CHECK(report.selective.dispatch_messages == report.baseline.dispatch_messages);
}

TEST_CASE("compare_baseline: with top_k = M on an all-overlap corpus only consultation differs") {
    // Every query touches every class's base set, so selective dispatch with
    // top_k = M coincides with the broadcast dispatch.
    std::vector<CorpusRecord> records;
    for (int i = 0; i < 30; ++i) {
        records.push_back({"q" + std::to_string(i), i % 2 == 0 ? "c0" : "c1",
                           {"c0_b0", "c1_b0", "x" + std::to_string(i % 4)}});
    }
    CorpusSpec spec;
    spec.num_classes = 2;
    spec.base_per_class = 1;
    spec.num_objects = 30;
    spec.mix = {1.0, 0.0, 0.0};
    Manifest manifest = plan_corpus(spec);

    ScenarioConfig config;
    config.policy.top_k = 2;
    config.learning.theta = 2;
    config.learning.window = 10;
    auto report = compare_baseline(records, manifest, config);
    CHECK(report.selective.dispatch_messages == report.baseline.dispatch_messages);
}

TEST_CASE("comparison report serializes and tabulates") {
    auto fx = learning_fixture(31);
    fx.records.resize(60);
    auto report = compare_baseline(fx.records, fx.manifest, fx.config);
    auto j = nlohmann::json::parse(report.to_json_string());
    CHECK(j.at("type") == "comparison");
    CHECK(j.at("seed").get<std::uint64_t>() == fx.config.seed);
    CHECK(j.at("selective").at("messages_total").get<std::uint64_t>() ==
          report.selective.messages_total);
    std::ostringstream table;
    write_comparison_table(table, report);
    CHECK(table.str().find("messages per query") != std::string::npos);
}
