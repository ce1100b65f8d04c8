#include "macek/promotion.hpp"

#include <algorithm>

#include "macek/errors.hpp"

namespace macek {

PromotionSession::PromotionSession(std::uint64_t id, int requester, ClassId requester_class,
                                   FeatureId feature, ConsultationMode mode, int round_cap,
                                   const std::vector<ClassId>* roster)
    : id_(id),
      requester_(requester),
      requester_class_(std::move(requester_class)),
      feature_(std::move(feature)),
      mode_(mode),
      round_cap_(round_cap),
      roster_(roster) {}

Message PromotionSession::make(MsgType type, int to) const {
    Message m;
    m.type = type;
    m.from = requester_;
    m.to = to;
    m.feature = feature_;
    m.session_id = id_;
    return m;
}

void PromotionSession::require(State expected, const char* op) const {
    if (state_ != expected) {
        throw Error(ErrorCode::stale_state,
                    std::string(op) + " for feature '" + feature_ + "' in the wrong session state");
    }
}

std::vector<Message> PromotionSession::start() {
    if (started_) {
        throw Error(ErrorCode::duplicate_session,
                    "promotion session for '" + feature_ + "' already active");
    }
    started_ = true;
    return begin_lookup();
}

std::vector<Message> PromotionSession::begin_lookup() {
    state_ = State::lookup;
    std::vector<Message> out;
    if (mode_ == ConsultationMode::lookup) {
        out.push_back(make(MsgType::owner_query, kCenter));
        return out;
    }
    // Baseline: ask every peer whether it holds the feature in its K-region.
    pending_replies_ = 0;
    claimers_.clear();
    for (int peer = 0; peer < static_cast<int>(roster_->size()); ++peer) {
        if (peer == requester_) continue;
        out.push_back(make(MsgType::kregion_query, peer));
        ++pending_replies_;
    }
    if (pending_replies_ == 0) {
        // Single-agent system: nothing to consult, go straight to commit.
        state_ = State::committing;
        Message commit = make(MsgType::registry_commit, kCenter);
        commit.class_id = requester_class_;
        out.push_back(commit);
    }
    return out;
}

std::vector<Message> PromotionSession::begin_fall(int owner_index) {
    if (rounds_ >= round_cap_) {
        // The cap bounds every fall round, including rediscovery rounds
        // after a stale registry answer; past it the feature simply stays
        // at its held M probability.
        state_ = State::aborted;
        return {};
    }
    state_ = State::falling_wait_ack;
    owner_target_ = owner_index;
    ++rounds_;
    return {make(MsgType::fall_notice, owner_index)};
}

std::vector<Message> PromotionSession::on_owner_reply(bool has_owner, const ClassId& owner) {
    require(State::lookup, "owner reply");
    if (mode_ != ConsultationMode::lookup) {
        throw Error(ErrorCode::stale_state, "owner reply in broadcast mode");
    }
    if (!has_owner) {
        state_ = State::committing;
        Message commit = make(MsgType::registry_commit, kCenter);
        commit.class_id = requester_class_;
        return {commit};
    }
    auto it = std::find(roster_->begin(), roster_->end(), owner);
    if (it == roster_->end()) {
        throw Error(ErrorCode::stale_state, "owner reply names unknown class " + owner);
    }
    return begin_fall(static_cast<int>(it - roster_->begin()));
}

std::vector<Message> PromotionSession::on_kregion_reply(int from, bool in_k) {
    require(State::lookup, "k-region reply");
    if (mode_ != ConsultationMode::broadcast) {
        throw Error(ErrorCode::stale_state, "k-region reply in lookup mode");
    }
    if (pending_replies_ == 0) throw Error(ErrorCode::stale_state, "unexpected k-region reply");
    --pending_replies_;
    if (in_k) claimers_.insert(from);
    if (pending_replies_ > 0) return {};

    if (claimers_.empty()) {
        state_ = State::committing;
        Message commit = make(MsgType::registry_commit, kCenter);
        commit.class_id = requester_class_;
        return {commit};
    }
    // Fall the lowest-index claimer first; the post-fall re-broadcast finds
    // any others.
    int owner = *claimers_.begin();
    claimers_.clear();
    return begin_fall(owner);
}

std::vector<Message> PromotionSession::on_fall_ack(bool left_k) {
    require(State::falling_wait_ack, "fall ack");
    if (left_k) {
        // The owner dropped out of K; look again in case someone else holds
        // the feature by now.
        return begin_lookup();
    }
    if (rounds_ >= round_cap_) {
        state_ = State::aborted;
        return {};
    }
    state_ = State::falling_parked;
    return {};
}

std::vector<Message> PromotionSession::on_interest() {
    require(State::falling_parked, "interest event");
    return begin_fall(owner_target_);
}

std::vector<Message> PromotionSession::on_commit_ack(bool ok) {
    require(State::committing, "commit ack");
    if (ok) {
        state_ = State::done;
        return {};
    }
    // Lost the arbitration race; rediscover the new owner and resume falling.
    return begin_lookup();
}

PromotionSession PromotionSession::restore_parked(std::uint64_t id, int requester,
                                                  ClassId requester_class, FeatureId feature,
                                                  ConsultationMode mode, int round_cap,
                                                  const std::vector<ClassId>* roster,
                                                  int owner_target, int rounds) {
    PromotionSession s(id, requester, std::move(requester_class), std::move(feature), mode,
                       round_cap, roster);
    s.started_ = true;
    s.state_ = State::falling_parked;
    s.owner_target_ = owner_target;
    s.rounds_ = rounds;
    return s;
}

}  // namespace macek
