#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "macek/center_agent.hpp"
#include "macek/config.hpp"
#include "macek/messages.hpp"
#include "macek/promotion.hpp"

namespace macek {

struct MessageCounters {
    std::array<std::uint64_t, kMsgTypeCount> by_type{};
    std::uint64_t total = 0;
    std::uint64_t consultation = 0;

    std::uint64_t of(MsgType t) const { return by_type[static_cast<std::size_t>(t)]; }
};

struct SessionStats {
    std::uint64_t opened = 0;
    std::uint64_t committed = 0;
    std::uint64_t aborted = 0;
};

// Emitted whenever an agent finishes a decay sweep.
struct EpochRecord {
    ClassId agent;
    std::uint64_t epoch_index = 0;
    RegionSizes sizes;
    SessionStats sessions;  // deltas within the finished epoch
};

// The whole kernel under a deterministic scheduler: the CenterAgent, the
// expert agents, per-ordered-pair FIFO channels with no loss or duplication,
// and the promotion sessions. Delivery order across different channels is
// randomized from the seed; that interleaving is what the fuzz tests sweep.
class Simulation {
public:
    Simulation(const std::vector<std::pair<ClassId, std::set<FeatureId>>>& base_sets,
               const ScenarioConfig& config);

    // Parked sessions keep a pointer to the roster; the simulation stays put.
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    struct QueryResult {
        std::uint64_t query_id = 0;
        ClassificationVector vector;
        bool fallback = false;
        std::uint64_t messages = 0;       // delivered while this query settled
        std::uint64_t consultation = 0;
        std::vector<EpochRecord> epochs;  // decay sweeps that fired in the window
    };

    // Injects one query, runs the scheduler to quiescence, returns the
    // aggregated vector. Tags must be nonempty.
    QueryResult submit(const TagCollection& tags);

    // Read-only classification against the current state: same dispatch and
    // scoring, no learning, no messages.
    ClassificationVector classify(const TagCollection& tags) const;

    const ScenarioConfig& config() const { return config_; }
    const CenterAgent& center() const { return center_; }
    std::size_t agent_count() const { return agents_.size(); }
    const ExpertAgent& agent(std::size_t i) const { return agents_[i]; }
    const ExpertAgent& agent_by_class(const ClassId& c) const;
    const std::vector<ClassId>& roster() const { return roster_; }

    const MessageCounters& counters() const { return counters_; }
    SessionStats total_sessions() const;
    std::uint64_t stale_drops() const { return stale_drops_; }
    std::uint64_t step() const { return step_; }
    std::uint64_t active_sessions() const;

    void set_trace(std::ostream* trace) { trace_ = trace; }

    // No queued messages and no session awaiting a reply. Sessions parked on
    // an interest event do not block quiescence; their state is pure data.
    bool quiescent() const;

    // Asserts K-region disjointness across agents and registry/K-union
    // equality. Call at quiescent points only. Throws on violation.
    void check_invariants() const;

    // Versioned full-state snapshot. Refuses (snapshot_busy) unless
    // quiescent.
    void save_snapshot(std::ostream& out) const;
    static std::unique_ptr<Simulation> restore_snapshot(std::istream& in);

private:
    struct AgentRuntime {
        std::map<FeatureId, PromotionSession> sessions;
        SessionStats stats;
        SessionStats epoch_mark;  // stats at the last epoch boundary
    };

    struct PendingQuery {
        std::uint64_t id = 0;
        std::vector<DispatchTarget> targets;
        std::map<ClassId, ResultPackage> results;
        bool fallback = false;
    };

    // Channel index is a pure function of the endpoint pair so the
    // scheduler's choice order survives snapshot/restore.
    int channel_index(int from, int to) const;
    void occupancy_add(int channel, int delta);
    int select_nonempty(std::uint64_t rank) const;
    void send(Message m);
    void deliver_one();
    void run_to_quiescence();
    void handle_center(const Message& m);
    void handle_agent(int index, const Message& m);
    void handle_agent_dispatch(int index, const Message& m);
    void route_session_reply(int index, const Message& m);
    void start_session(int index, const FeatureId& f);
    void finish_session(int index, PromotionSession& session);
    void trace_delivery(const Message& m);
    int index_of(const ClassId& c) const;
    std::string endpoint_name(int index) const;

    ScenarioConfig config_;
    CenterAgent center_;
    std::vector<ExpertAgent> agents_;
    std::vector<AgentRuntime> runtimes_;
    std::vector<ClassId> roster_;
    std::map<ClassId, int> roster_index_;

    // (M+1)^2 ordered-pair FIFO channels. The scheduler picks the r-th
    // lowest-index nonempty channel; the Fenwick tree makes that selection
    // O(log channels) without changing which channel is picked.
    std::vector<std::deque<Message>> channels_;
    std::vector<std::uint32_t> occupancy_;  // Fenwick tree over channel indices
    std::uint64_t nonempty_count_ = 0;

    std::optional<PendingQuery> pending_;
    std::optional<ClassificationVector> completed_;

    std::mt19937_64 scheduler_;
    MessageCounters counters_;
    std::vector<EpochRecord> epoch_events_;
    std::uint64_t step_ = 0;
    std::uint64_t next_query_id_ = 1;
    std::uint64_t next_session_id_ = 1;
    std::uint64_t stale_drops_ = 0;
    std::ostream* trace_ = nullptr;

    friend struct SnapshotIo;
};

}  // namespace macek
