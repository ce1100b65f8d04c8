#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "macek/config.hpp"
#include "macek/corpus.hpp"
#include "macek/simulation.hpp"

namespace macek {

// End-of-run roll-up; every number is recomputable from the per-query
// records on the metrics stream.
struct RunTotals {
    std::uint64_t queries = 0;
    std::uint64_t correct = 0;
    double accuracy = 0.0;
    std::uint64_t fallback_queries = 0;
    std::uint64_t messages_total = 0;
    std::uint64_t dispatch_messages = 0;      // Dispatch + Result
    std::uint64_t consultation_messages = 0;  // everything else
    std::map<std::string, std::uint64_t> by_variant;
    SessionStats sessions;
    std::uint64_t stale_drops = 0;

    double messages_per_query() const {
        return queries == 0 ? 0.0 : static_cast<double>(messages_total) / static_cast<double>(queries);
    }
    std::string to_json_string() const;
};

struct RunSinks {
    std::ostream* metrics = nullptr;   // one JSON record per line
    std::ostream* trace = nullptr;     // one record per delivered message
    std::ostream* snapshot = nullptr;  // final state, written at quiescence
    std::ostream* summary = nullptr;   // human table
};

// When to re-assert the global invariants (K-disjointness, registry
// equality). every_query is what the fuzz suite runs.
enum class InvariantCheck { off, at_end, every_query };

struct RunOptions {
    InvariantCheck invariants = InvariantCheck::at_end;
};

// Streams every corpus object through preprocess -> dispatch ->
// process_dispatch -> aggregate under the seeded scheduler. Fully
// deterministic given (corpus, config).
RunTotals run_scenario(const std::vector<CorpusRecord>& records, const Manifest& manifest,
                       const ScenarioConfig& config, const RunSinks& sinks = {},
                       const RunOptions& options = {});

// Same corpus and seed twice: the configured selective run against the
// broadcast-dispatch/broadcast-consultation baseline.
struct ComparisonReport {
    RunTotals selective;
    RunTotals baseline;
    double message_ratio = 0.0;       // selective / baseline, total messages
    double consultation_ratio = 0.0;  // selective / baseline, consultation only
    std::uint64_t seed = 0;

    std::string to_json_string() const;
};

ComparisonReport compare_baseline(const std::vector<CorpusRecord>& records,
                                  const Manifest& manifest, const ScenarioConfig& config,
                                  const RunSinks& selective_sinks = {},
                                  const RunSinks& baseline_sinks = {});

void write_summary_table(std::ostream& out, const RunTotals& totals);
void write_comparison_table(std::ostream& out, const ComparisonReport& report);

}  // namespace macek
