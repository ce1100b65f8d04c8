#include "macek/simulation.hpp"

#include <ostream>
#include <sstream>
#include <stdexcept>

#include "macek/numeric_text.hpp"

namespace macek {

Simulation::Simulation(const std::vector<std::pair<ClassId, std::set<FeatureId>>>& base_sets,
                       const ScenarioConfig& config)
    : config_(config),
      center_(CenterAgent({}, config.policy, config.mix, config.epsilon_fb)),
      scheduler_(config.seed) {
    config_.validate();

    auto booted = bootstrap(base_sets, config_.thresholds, config_.learning, config_.policy,
                            config_.mix, config_.epsilon_fb);
    center_ = std::move(booted.center);
    agents_ = std::move(booted.agents);
    roster_ = center_.classes();
    for (std::size_t i = 0; i < roster_.size(); ++i) {
        roster_index_[roster_[i]] = static_cast<int>(i);
    }
    runtimes_.resize(agents_.size());
    channels_.resize((roster_.size() + 1) * (roster_.size() + 1));
    occupancy_.assign(channels_.size() + 1, 0);
}

void Simulation::occupancy_add(int channel, int delta) {
    for (std::size_t i = static_cast<std::size_t>(channel) + 1; i < occupancy_.size(); i += i & (~i + 1)) {
        occupancy_[i] = static_cast<std::uint32_t>(static_cast<int>(occupancy_[i]) + delta);
    }
}

int Simulation::select_nonempty(std::uint64_t rank) const {
    // Smallest channel index whose nonempty-prefix count reaches rank + 1.
    std::uint64_t target = rank + 1;
    std::size_t pos = 0;
    std::size_t step = 1;
    while (step * 2 < occupancy_.size()) step *= 2;
    for (; step > 0; step /= 2) {
        std::size_t next = pos + step;
        if (next < occupancy_.size() && occupancy_[next] < target) {
            pos = next;
            target -= occupancy_[next];
        }
    }
    return static_cast<int>(pos);  // Fenwick is 1-based; pos is the 0-based channel
}

int Simulation::channel_index(int from, int to) const {
    const int n = static_cast<int>(roster_.size()) + 1;
    return (from + 1) * n + (to + 1);
}

int Simulation::index_of(const ClassId& c) const {
    auto it = roster_index_.find(c);
    if (it == roster_index_.end()) {
        throw Error(ErrorCode::corpus_mismatch, "unknown class " + c);
    }
    return it->second;
}

std::string Simulation::endpoint_name(int index) const {
    return index == kCenter ? std::string("center") : roster_.at(static_cast<std::size_t>(index));
}

const ExpertAgent& Simulation::agent_by_class(const ClassId& c) const {
    return agents_[static_cast<std::size_t>(index_of(c))];
}

void Simulation::send(Message m) {
    int ch = channel_index(m.from, m.to);
    auto& queue = channels_[static_cast<std::size_t>(ch)];
    if (queue.empty()) {
        occupancy_add(ch, 1);
        ++nonempty_count_;
    }
    queue.push_back(std::move(m));
}

void Simulation::trace_delivery(const Message& m) {
    if (trace_ == nullptr) return;
    *trace_ << step_ << '\t' << msg_type_name(m.type) << '\t' << endpoint_name(m.from) << '\t'
            << endpoint_name(m.to) << '\t' << trace_key(m) << '\n';
}

void Simulation::deliver_one() {
    const int ch = select_nonempty(uniform_below(scheduler_, nonempty_count_));
    auto& queue = channels_[static_cast<std::size_t>(ch)];
    Message m = std::move(queue.front());
    queue.pop_front();
    if (queue.empty()) {
        occupancy_add(ch, -1);
        --nonempty_count_;
    }

    ++step_;
    ++counters_.total;
    ++counters_.by_type[static_cast<std::size_t>(m.type)];
    if (is_consultation(m.type)) ++counters_.consultation;
    trace_delivery(m);

    if (m.to == kCenter) {
        handle_center(m);
    } else {
        handle_agent(m.to, m);
    }
}

void Simulation::run_to_quiescence() {
    while (nonempty_count_ != 0) deliver_one();
}

Simulation::QueryResult Simulation::submit(const TagCollection& tags) {
    if (pending_) throw std::logic_error("submit while a query is still settling");

    auto targets = center_.dispatch(tags);
    PendingQuery pending;
    pending.id = next_query_id_++;
    pending.targets = targets;
    pending.fallback = !targets.empty() && targets.front().fallback;
    pending_ = std::move(pending);

    const std::uint64_t messages_before = counters_.total;
    const std::uint64_t consult_before = counters_.consultation;
    epoch_events_.clear();

    for (const auto& target : targets) {
        Message m;
        m.type = MsgType::dispatch;
        m.from = kCenter;
        m.to = index_of(target.class_id);
        m.query_id = pending_->id;
        m.tags = tags;
        m.confidence = target.confidence;
        m.fallback = target.fallback;
        send(std::move(m));
    }
    run_to_quiescence();

    if (!completed_) throw std::logic_error("query settled without an aggregated vector");

    QueryResult result;
    result.query_id = pending_->id;
    result.vector = std::move(*completed_);
    result.fallback = pending_->fallback;
    result.messages = counters_.total - messages_before;
    result.consultation = counters_.consultation - consult_before;
    result.epochs = std::move(epoch_events_);
    epoch_events_.clear();
    pending_.reset();
    completed_.reset();
    return result;
}

ClassificationVector Simulation::classify(const TagCollection& tags) const {
    auto targets = center_.dispatch(tags);
    std::vector<std::pair<ResultPackage, DispatchTarget>> results;
    results.reserve(targets.size());
    for (const auto& target : targets) {
        const auto& agent = agents_[static_cast<std::size_t>(index_of(target.class_id))];
        results.emplace_back(agent.score_query(tags), target);
    }
    return center_.aggregate(results);
}

void Simulation::handle_center(const Message& m) {
    switch (m.type) {
        case MsgType::result: {
            if (!pending_ || pending_->id != m.query_id) {
                ++stale_drops_;
                return;
            }
            pending_->results[m.package.class_id] = m.package;
            if (pending_->results.size() == pending_->targets.size()) {
                std::vector<std::pair<ResultPackage, DispatchTarget>> results;
                results.reserve(pending_->targets.size());
                for (const auto& target : pending_->targets) {
                    results.emplace_back(pending_->results.at(target.class_id), target);
                }
                completed_ = center_.aggregate(results);
            }
            return;
        }
        case MsgType::owner_query: {
            Message reply;
            reply.type = MsgType::owner_reply;
            reply.from = kCenter;
            reply.to = m.from;
            reply.feature = m.feature;
            reply.session_id = m.session_id;
            auto owner = center_.registry().owner(m.feature);
            reply.flag = owner.has_value();
            if (owner) reply.class_id = *owner;
            send(std::move(reply));
            return;
        }
        case MsgType::registry_commit: {
            auto outcome = center_.registry().commit(m.feature, m.class_id);
            Message ack;
            ack.type = MsgType::commit_ack;
            ack.from = kCenter;
            ack.to = m.from;
            ack.feature = m.feature;
            ack.session_id = m.session_id;
            ack.flag = outcome == BaseFeatureRegistry::Commit::ok;
            send(std::move(ack));
            return;
        }
        case MsgType::registry_remove:
            center_.registry().remove(m.feature, m.class_id);
            return;
        default:
            ++stale_drops_;
            return;
    }
}

void Simulation::handle_agent(int index, const Message& m) {
    auto& agent = agents_[static_cast<std::size_t>(index)];
    switch (m.type) {
        case MsgType::dispatch:
            handle_agent_dispatch(index, m);
            return;
        case MsgType::kregion_query: {
            Message reply;
            reply.type = MsgType::kregion_reply;
            reply.from = index;
            reply.to = m.from;
            reply.feature = m.feature;
            reply.session_id = m.session_id;
            reply.flag = agent.handle_k_query(m.feature);
            send(std::move(reply));
            return;
        }
        case MsgType::fall_notice: {
            auto& runtime = runtimes_[static_cast<std::size_t>(index)];
            bool left_k;
            bool clean_registry;
            try {
                left_k = agent.handle_fall_notice(m.feature);
                clean_registry = left_k;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::not_in_k) throw;
                auto it = runtime.sessions.find(m.feature);
                if (it != runtime.sessions.end() &&
                    it->second.state() == PromotionSession::State::committing) {
                    // The requester found us in the registry because our own
                    // commit was just accepted; the ack is still in flight
                    // and the copy sits held in M. Keep the claim and let the
                    // requester retry against the real K copy.
                    left_k = false;
                    clean_registry = false;
                } else {
                    // Genuinely stale registry: we no longer hold the feature
                    // in K. Report it as already-left and clean up.
                    left_k = true;
                    clean_registry = true;
                }
            }
            Message ack;
            ack.type = MsgType::fall_ack;
            ack.from = index;
            ack.to = m.from;
            ack.feature = m.feature;
            ack.session_id = m.session_id;
            ack.flag = left_k;
            send(std::move(ack));
            if (clean_registry) {
                Message remove;
                remove.type = MsgType::registry_remove;
                remove.from = index;
                remove.to = kCenter;
                remove.feature = m.feature;
                remove.class_id = roster_[static_cast<std::size_t>(index)];
                remove.session_id = m.session_id;
                send(std::move(remove));
            }
            return;
        }
        case MsgType::owner_reply:
        case MsgType::kregion_reply:
        case MsgType::fall_ack:
        case MsgType::commit_ack:
            route_session_reply(index, m);
            return;
        default:
            ++stale_drops_;
            return;
    }
}

void Simulation::handle_agent_dispatch(int index, const Message& m) {
    auto& agent = agents_[static_cast<std::size_t>(index)];
    auto& runtime = runtimes_[static_cast<std::size_t>(index)];

    DispatchOutcome outcome = agent.process_dispatch(m.tags);

    Message reply;
    reply.type = MsgType::result;
    reply.from = index;
    reply.to = kCenter;
    reply.query_id = m.query_id;
    reply.package = std::move(outcome.package);
    send(std::move(reply));

    for (const auto& f : outcome.promotion_triggers) start_session(index, f);

    for (const auto& f : outcome.interest_events) {
        auto it = runtime.sessions.find(f);
        if (it == runtime.sessions.end()) continue;
        auto& session = it->second;
        if (session.state() != PromotionSession::State::falling_parked) continue;
        for (auto& msg : session.on_interest()) send(std::move(msg));
        if (session.finished()) finish_session(index, session);
    }

    if (outcome.epoch_due) {
        auto left_k = agent.epoch_decay();
        for (const auto& f : left_k) {
            Message remove;
            remove.type = MsgType::registry_remove;
            remove.from = index;
            remove.to = kCenter;
            remove.feature = f;
            remove.class_id = roster_[static_cast<std::size_t>(index)];
            send(std::move(remove));
        }
        EpochRecord record;
        record.agent = roster_[static_cast<std::size_t>(index)];
        record.epoch_index = agent.epochs_completed();
        record.sizes = agent.collection().region_sizes();
        record.sessions.opened = runtime.stats.opened - runtime.epoch_mark.opened;
        record.sessions.committed = runtime.stats.committed - runtime.epoch_mark.committed;
        record.sessions.aborted = runtime.stats.aborted - runtime.epoch_mark.aborted;
        runtime.epoch_mark = runtime.stats;
        epoch_events_.push_back(std::move(record));
    }
}

void Simulation::start_session(int index, const FeatureId& f) {
    auto& runtime = runtimes_[static_cast<std::size_t>(index)];
    if (runtime.sessions.count(f) != 0) {
        throw Error(ErrorCode::duplicate_session,
                    "agent " + roster_[static_cast<std::size_t>(index)] +
                        " already has a session for '" + f + "'");
    }
    PromotionSession session(next_session_id_++, index, roster_[static_cast<std::size_t>(index)], f,
                             config_.consultation, config_.round_cap, &roster_);
    agents_[static_cast<std::size_t>(index)].hold_for_promotion(f);
    ++runtime.stats.opened;
    auto [it, inserted] = runtime.sessions.emplace(f, std::move(session));
    for (auto& msg : it->second.start()) send(std::move(msg));
    if (it->second.finished()) finish_session(index, it->second);
}

void Simulation::route_session_reply(int index, const Message& m) {
    auto& runtime = runtimes_[static_cast<std::size_t>(index)];
    auto it = runtime.sessions.find(m.feature);
    if (it == runtime.sessions.end()) {
        ++stale_drops_;
        return;
    }
    auto& session = it->second;
    std::vector<Message> out;
    try {
        switch (m.type) {
            case MsgType::owner_reply: out = session.on_owner_reply(m.flag, m.class_id); break;
            case MsgType::kregion_reply: out = session.on_kregion_reply(m.from, m.flag); break;
            case MsgType::fall_ack: out = session.on_fall_ack(m.flag); break;
            case MsgType::commit_ack: out = session.on_commit_ack(m.flag); break;
            default: ++stale_drops_; return;
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::stale_state) throw;
        ++stale_drops_;
        return;
    }
    for (auto& msg : out) send(std::move(msg));
    if (session.finished()) finish_session(index, session);
}

void Simulation::finish_session(int index, PromotionSession& session) {
    auto& runtime = runtimes_[static_cast<std::size_t>(index)];
    auto& agent = agents_[static_cast<std::size_t>(index)];
    if (session.state() == PromotionSession::State::done) {
        agent.release_committed(session.feature());
        ++runtime.stats.committed;
    } else {
        agent.release_aborted(session.feature());
        ++runtime.stats.aborted;
    }
    runtime.sessions.erase(session.feature());
}

SessionStats Simulation::total_sessions() const {
    SessionStats total;
    for (const auto& runtime : runtimes_) {
        total.opened += runtime.stats.opened;
        total.committed += runtime.stats.committed;
        total.aborted += runtime.stats.aborted;
    }
    return total;
}

std::uint64_t Simulation::active_sessions() const {
    std::uint64_t n = 0;
    for (const auto& runtime : runtimes_) n += runtime.sessions.size();
    return n;
}

bool Simulation::quiescent() const {
    if (nonempty_count_ != 0 || pending_) return false;
    for (const auto& runtime : runtimes_) {
        for (const auto& [f, session] : runtime.sessions) {
            if (session.awaiting_message()) return false;
        }
    }
    return true;
}

void Simulation::check_invariants() const {
    if (nonempty_count_ != 0) {
        throw std::logic_error("invariant check with messages in flight");
    }
    std::map<FeatureId, ClassId> k_union;
    for (const auto& agent : agents_) {
        for (const auto& f : agent.collection().features_in_region(Region::K)) {
            auto [it, inserted] = k_union.emplace(f, agent.class_id());
            if (!inserted) {
                throw std::runtime_error("feature '" + f + "' is in the K-region of both " +
                                         it->second + " and " + agent.class_id());
            }
        }
    }
    if (k_union != center_.registry().entries()) {
        std::ostringstream msg;
        msg << "registry (" << center_.registry().size() << " entries) does not equal the union of "
            << "K-regions (" << k_union.size() << " entries)";
        for (const auto& [f, c] : k_union) {
            auto owner = center_.registry().owner(f);
            if (!owner || *owner != c) msg << "; K has " << f << "->" << c;
        }
        for (const auto& [f, c] : center_.registry().entries()) {
            auto it = k_union.find(f);
            if (it == k_union.end() || it->second != c) msg << "; registry has " << f << "->" << c;
        }
        throw std::runtime_error(msg.str());
    }
}

}  // namespace macek
