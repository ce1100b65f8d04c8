#include "macek/scenario.hpp"

#include <iomanip>
#include <ostream>
#include <set>

#include <json.hpp>

#include "macek/preprocess.hpp"

namespace macek {

namespace {

nlohmann::json totals_json(const RunTotals& totals) {
    return nlohmann::json{{"type", "totals"},
                          {"queries", totals.queries},
                          {"correct", totals.correct},
                          {"accuracy", totals.accuracy},
                          {"fallback_queries", totals.fallback_queries},
                          {"messages_total", totals.messages_total},
                          {"dispatch_messages", totals.dispatch_messages},
                          {"consultation_messages", totals.consultation_messages},
                          {"messages_per_query", totals.messages_per_query()},
                          {"by_variant", totals.by_variant},
                          {"sessions_opened", totals.sessions.opened},
                          {"sessions_committed", totals.sessions.committed},
                          {"sessions_aborted", totals.sessions.aborted},
                          {"stale_drops", totals.stale_drops}};
}

}  // namespace

std::string RunTotals::to_json_string() const { return totals_json(*this).dump(); }

RunTotals run_scenario(const std::vector<CorpusRecord>& records, const Manifest& manifest,
                       const ScenarioConfig& config, const RunSinks& sinks,
                       const RunOptions& options) {
    config.validate();

    // Every corpus class must be bootstrapped, or the dispatch table and the
    // metrics would silently disagree with the corpus.
    std::set<ClassId> known;
    for (const auto& plan : manifest.classes) known.insert(plan.id);
    for (const auto& record : records) {
        if (known.count(record.true_class) == 0) {
            throw Error(ErrorCode::corpus_mismatch,
                        "corpus object " + record.object_id + " has class " + record.true_class +
                            " which is not in the manifest");
        }
    }

    Simulation sim(manifest.bootstrap_sets(), config);
    sim.set_trace(sinks.trace);

    RunTotals totals;
    for (const auto& record : records) {
        auto result = sim.submit(preprocess_tags(record.tags));

        ++totals.queries;
        const ClassId& predicted = result.vector.front().first;
        if (predicted == record.true_class) ++totals.correct;
        if (result.fallback) ++totals.fallback_queries;

        if (sinks.metrics != nullptr) {
            nlohmann::json vec = nlohmann::json::array();
            for (const auto& [c, likelihood] : result.vector) {
                vec.push_back({c, likelihood});
            }
            nlohmann::json line{{"type", "query"},        {"id", record.object_id},
                                {"query_id", result.query_id}, {"true_class", record.true_class},
                                {"predicted", predicted},  {"vector", vec},
                                {"messages", result.messages}, {"consultation", result.consultation},
                                {"fallback", result.fallback}};
            *sinks.metrics << line.dump() << '\n';
            for (const auto& epoch : result.epochs) {
                nlohmann::json e{{"type", "epoch"},
                                 {"agent", epoch.agent},
                                 {"epoch", epoch.epoch_index},
                                 {"k", epoch.sizes.k},
                                 {"m", epoch.sizes.m},
                                 {"d", epoch.sizes.d},
                                 {"sessions_opened", epoch.sessions.opened},
                                 {"sessions_committed", epoch.sessions.committed},
                                 {"sessions_aborted", epoch.sessions.aborted}};
                *sinks.metrics << e.dump() << '\n';
            }
        }
        if (options.invariants == InvariantCheck::every_query) sim.check_invariants();
    }

    if (options.invariants != InvariantCheck::off) sim.check_invariants();

    totals.accuracy = totals.queries == 0
                          ? 0.0
                          : static_cast<double>(totals.correct) / static_cast<double>(totals.queries);
    totals.messages_total = sim.counters().total;
    totals.consultation_messages = sim.counters().consultation;
    totals.dispatch_messages = totals.messages_total - totals.consultation_messages;
    for (int t = 0; t < kMsgTypeCount; ++t) {
        auto n = sim.counters().by_type[static_cast<std::size_t>(t)];
        if (n != 0) totals.by_variant[msg_type_name(static_cast<MsgType>(t))] = n;
    }
    totals.sessions = sim.total_sessions();
    totals.stale_drops = sim.stale_drops();

    if (sinks.metrics != nullptr) *sinks.metrics << totals.to_json_string() << '\n';
    if (sinks.snapshot != nullptr) sim.save_snapshot(*sinks.snapshot);
    if (sinks.summary != nullptr) write_summary_table(*sinks.summary, totals);
    return totals;
}

ComparisonReport compare_baseline(const std::vector<CorpusRecord>& records,
                                  const Manifest& manifest, const ScenarioConfig& config,
                                  const RunSinks& selective_sinks, const RunSinks& baseline_sinks) {
    ScenarioConfig baseline_config = config;
    baseline_config.policy.kind = DispatchPolicy::Kind::broadcast;
    baseline_config.consultation = ConsultationMode::broadcast;

    if (baseline_config.seed != config.seed) {
        throw Error(ErrorCode::invalid_config, "comparison runs must share the scheduler seed");
    }

    ComparisonReport report;
    report.seed = config.seed;
    report.selective = run_scenario(records, manifest, config, selective_sinks);
    report.baseline = run_scenario(records, manifest, baseline_config, baseline_sinks);
    report.message_ratio = report.baseline.messages_total == 0
                               ? 0.0
                               : static_cast<double>(report.selective.messages_total) /
                                     static_cast<double>(report.baseline.messages_total);
    report.consultation_ratio = report.baseline.consultation_messages == 0
                                    ? 0.0
                                    : static_cast<double>(report.selective.consultation_messages) /
                                          static_cast<double>(report.baseline.consultation_messages);
    return report;
}

std::string ComparisonReport::to_json_string() const {
    nlohmann::json j{{"type", "comparison"},
                     {"seed", seed},
                     {"selective", totals_json(selective)},
                     {"baseline", totals_json(baseline)},
                     {"message_ratio", message_ratio},
                     {"consultation_ratio", consultation_ratio}};
    return j.dump();
}

void write_summary_table(std::ostream& out, const RunTotals& totals) {
    out << "queries            " << totals.queries << '\n';
    out << "accuracy           " << std::fixed << std::setprecision(4) << totals.accuracy << '\n';
    out << "fallback queries   " << totals.fallback_queries << '\n';
    out << "messages total     " << totals.messages_total << '\n';
    out << "  dispatch         " << totals.dispatch_messages << '\n';
    out << "  consultation     " << totals.consultation_messages << '\n';
    out << "messages per query " << std::setprecision(3) << totals.messages_per_query() << '\n';
    out << "sessions           " << totals.sessions.opened << " opened, " << totals.sessions.committed
        << " committed, " << totals.sessions.aborted << " aborted\n";
    out.unsetf(std::ios::floatfield);
    out << std::setprecision(6);
}

void write_comparison_table(std::ostream& out, const ComparisonReport& report) {
    auto row = [&](const char* label, std::uint64_t a, std::uint64_t b) {
        out << std::left << std::setw(22) << label << std::right << std::setw(12) << a
            << std::setw(14) << b << '\n';
    };
    out << std::left << std::setw(22) << "" << std::right << std::setw(12) << "selective"
        << std::setw(14) << "broadcast" << '\n';
    row("messages total", report.selective.messages_total, report.baseline.messages_total);
    row("dispatch messages", report.selective.dispatch_messages, report.baseline.dispatch_messages);
    row("consultation msgs", report.selective.consultation_messages,
        report.baseline.consultation_messages);
    row("sessions opened", report.selective.sessions.opened, report.baseline.sessions.opened);
    out << std::left << std::setw(22) << "messages per query" << std::right << std::setw(12)
        << std::fixed << std::setprecision(2) << report.selective.messages_per_query()
        << std::setw(14) << report.baseline.messages_per_query() << '\n';
    out << std::left << std::setw(22) << "accuracy" << std::right << std::setw(12)
        << std::setprecision(4) << report.selective.accuracy << std::setw(14)
        << report.baseline.accuracy << '\n';
    out.unsetf(std::ios::floatfield);
    out << std::setprecision(6);
    out << "message ratio (selective/broadcast):      " << report.message_ratio << '\n';
    out << "consultation ratio (selective/broadcast): " << report.consultation_ratio << '\n';
}

}  // namespace macek
