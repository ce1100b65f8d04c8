#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "macek/messages.hpp"
#include "macek/types.hpp"

namespace macek {

// How an agent discovers the current K-owner of a feature: one registry
// lookup at the CenterAgent (default), or a question to every peer (the
// consult-everyone baseline).
enum class ConsultationMode { lookup, broadcast };

// The raise/fall consultation for lifting one feature over the M/K border.
// Owned by the requesting agent; at most one active session per feature.
//
// States map onto the protocol: lookup (owner discovery in flight),
// falling_wait_ack / falling_parked (fall procedure: awaiting the owner's
// ack, or paused until the requester re-observes the feature), committing,
// done, aborted. Every transition returns the messages to send.
class PromotionSession {
public:
    enum class State { lookup, falling_wait_ack, falling_parked, committing, done, aborted };

    PromotionSession(std::uint64_t id, int requester, ClassId requester_class, FeatureId feature,
                     ConsultationMode mode, int round_cap, const std::vector<ClassId>* roster);

    std::vector<Message> start();
    std::vector<Message> on_owner_reply(bool has_owner, const ClassId& owner);
    std::vector<Message> on_kregion_reply(int from, bool in_k);
    std::vector<Message> on_fall_ack(bool left_k);
    std::vector<Message> on_commit_ack(bool ok);

    // The requester saw the feature again while the fall is parked: one more
    // fall round. Interest is what drives the alpha reductions.
    std::vector<Message> on_interest();

    State state() const { return state_; }
    bool finished() const { return state_ == State::done || state_ == State::aborted; }
    bool awaiting_message() const {
        return state_ == State::lookup || state_ == State::falling_wait_ack ||
               state_ == State::committing;
    }
    std::uint64_t id() const { return id_; }
    const FeatureId& feature() const { return feature_; }
    int rounds() const { return rounds_; }
    int round_cap() const { return round_cap_; }
    int owner_target() const { return owner_target_; }

    // Snapshot restore of a parked session.
    static PromotionSession restore_parked(std::uint64_t id, int requester, ClassId requester_class,
                                           FeatureId feature, ConsultationMode mode, int round_cap,
                                           const std::vector<ClassId>* roster, int owner_target,
                                           int rounds);

private:
    std::vector<Message> begin_lookup();
    std::vector<Message> begin_fall(int owner_index);
    Message make(MsgType type, int to) const;
    void require(State expected, const char* op) const;

    std::uint64_t id_;
    int requester_;
    ClassId requester_class_;
    FeatureId feature_;
    ConsultationMode mode_;
    int round_cap_;
    const std::vector<ClassId>* roster_;
    State state_ = State::lookup;
    int rounds_ = 0;
    int owner_target_ = kCenter;     // agent currently being fallen
    int pending_replies_ = 0;        // broadcast mode: outstanding kregion replies
    std::set<int> claimers_;         // broadcast mode: peers that answered in-K
    bool started_ = false;
};

}  // namespace macek
