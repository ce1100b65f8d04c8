#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "macek/expert_agent.hpp"
#include "macek/types.hpp"

namespace macek {

// Endpoint index: kCenter for the CenterAgent, 0..M-1 for expert agents.
inline constexpr int kCenter = -1;

enum class MsgType : std::uint8_t {
    dispatch,
    result,
    owner_query,
    owner_reply,
    kregion_query,
    kregion_reply,
    fall_notice,
    fall_ack,
    registry_commit,
    commit_ack,
    registry_remove,
};

inline constexpr int kMsgTypeCount = 11;

const char* msg_type_name(MsgType t);

// Dispatch and Result are pair traffic; everything else is consultation
// traffic spent on keeping the K-regions disjoint.
bool is_consultation(MsgType t);

struct Message {
    MsgType type{};
    int from = kCenter;
    int to = kCenter;
    std::uint64_t query_id = 0;    // dispatch / result
    std::uint64_t session_id = 0;  // consultation correlator (0 = none)
    FeatureId feature;             // consultation / removal subject
    ClassId class_id;              // commit/remove payload; owner_reply owner
    bool flag = false;             // kregion_reply.in_k / fall_ack.left_k /
                                   // commit_ack.ok / owner_reply.has_owner
    double confidence = 0.0;       // dispatch
    bool fallback = false;         // dispatch
    std::vector<FeatureId> tags;   // dispatch
    ResultPackage package;         // result
};

// One line per delivered message: step, variant, sender, recipient, key.
std::string trace_key(const Message& m);

// Offline recount of a trace stream, the counting oracle for the in-run
// message tallies.
struct SessionCount {
    std::string requester;
    FeatureId feature;
    std::uint64_t messages = 0;
};

struct TraceCounts {
    std::map<std::string, std::uint64_t> by_variant;
    std::map<std::uint64_t, std::uint64_t> per_query;      // query id -> messages
    std::map<std::uint64_t, SessionCount> per_session;     // session id -> tally
    std::uint64_t total = 0;
    std::uint64_t consultation = 0;
};

TraceCounts count_trace(std::istream& trace);

}  // namespace macek
