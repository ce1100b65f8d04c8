#include "macek/expert_agent.hpp"

#include <algorithm>
#include <sstream>

#include "macek/errors.hpp"

namespace macek {

void LearningParams::validate(const Thresholds& thresholds) const {
    if (!(alpha_r > 0.0) || alpha_r > 1.0) {
        throw Error(ErrorCode::invalid_config, "alpha_r must be in (0,1]");
    }
    if (alpha_r >= thresholds.tau_k - thresholds.tau_m) {
        // A single reinforcement must not be able to carry a D feature past
        // tau_k; the M/K border consultation is the only road into K.
        throw Error(ErrorCode::invalid_config,
                    "alpha_r must be smaller than tau_k - tau_m");
    }
    if (alpha_d < 0.0 || alpha_d > 1.0) {
        throw Error(ErrorCode::invalid_config, "alpha_d must be in [0,1]");
    }
    if (theta < 1) throw Error(ErrorCode::invalid_config, "theta must be >= 1");
    if (window == 0) throw Error(ErrorCode::invalid_config, "window must be >= 1");
}

ExpertAgent::ExpertAgent(ClassId class_id, Thresholds thresholds, LearningParams params)
    : class_id_(std::move(class_id)), collection_(thresholds), tim_(params.window), params_(params) {
    params_.validate(thresholds);
}

namespace {

double matched_sum(const FeatureCollection& collection, const std::vector<FeatureId>& tags,
                   const std::set<FeatureId>* members,
                   std::vector<std::pair<FeatureId, double>>* matched) {
    double sum = 0.0;
    for (const auto& t : tags) {
        if (members != nullptr && members->count(t) == 0) continue;
        auto p = collection.probability(t);
        if (!p) continue;
        Region r = collection.thresholds().classify(*p);
        if (r == Region::D) continue;  // dormant features carry no evidence
        sum += *p;
        if (matched != nullptr) matched->emplace_back(t, *p);
    }
    return sum;
}

}  // namespace

ResultPackage ExpertAgent::score_query(const TagCollection& tags) const {
    if (tags.empty()) {
        throw Error(ErrorCode::empty_query, "agent " + class_id_ + " received an empty query");
    }
    const std::vector<FeatureId> query = distinct_tags(tags);
    const double denom = static_cast<double>(query.size());

    ResultPackage pkg;
    pkg.class_id = class_id_;
    const double whole = matched_sum(collection_, query, nullptr, &pkg.matched) / denom;

    if (subconcepts_.empty()) {
        pkg.class_score = whole;
        return pkg;
    }
    double best = 0.0;
    for (const auto& sub : subconcepts_) {
        double s = matched_sum(collection_, query, &sub.members, nullptr) / denom;
        pkg.per_subconcept.emplace_back(sub.name, s);
        best = std::max(best, s);
    }
    pkg.class_score = best;
    return pkg;
}

DispatchOutcome ExpertAgent::process_dispatch(const TagCollection& tags) {
    DispatchOutcome out;
    out.package = score_query(tags);  // validates nonempty; pre-update snapshot

    tim_.record(tags);

    const double tau_k = collection_.thresholds().tau_k;
    for (const auto& t : distinct_tags(tags)) {
        auto p = collection_.probability(t);
        if (!p) continue;  // unknown tags only enter the TIM
        if (is_held(t)) {
            out.interest_events.push_back(t);
            continue;
        }
        Region r = collection_.thresholds().classify(*p);
        if (r == Region::M && *p + params_.alpha_r >= tau_k) {
            // Border crossing wants a consultation; the probability is held
            // in place of this reinforcement until the session resolves.
            out.promotion_triggers.push_back(t);
            continue;
        }
        collection_.adjust(t, params_.alpha_r);
    }

    out.adopted = adopt_promotion_candidates();

    ++dispatches_;
    out.epoch_due = dispatches_ % params_.resolved_epoch() == 0;
    return out;
}

std::vector<FeatureId> ExpertAgent::epoch_decay() {
    std::vector<FeatureId> left_k;
    if (params_.alpha_d > 0.0) {
        const double tau_k = collection_.thresholds().tau_k;
        for (const auto& [f, p] : collection_.entries()) {
            if (is_held(f)) continue;
            if (tim_.seen_within_window(f)) continue;
            bool was_k = p >= tau_k;
            double now = collection_.adjust(f, -params_.alpha_d);
            if (was_k && now < tau_k) left_k.push_back(f);
        }
    }
    ++epochs_;
    return left_k;
}

std::set<FeatureId> ExpertAgent::promotion_candidates() const {
    std::set<FeatureId> known;
    for (const auto& [f, p] : collection_.entries()) known.insert(f);
    return tim_.frequent_unknown_tags(known, params_.theta);
}

std::vector<FeatureId> ExpertAgent::adopt_promotion_candidates() {
    std::vector<FeatureId> adopted;
    for (const auto& f : promotion_candidates()) {
        auto evicted = collection_.insert_at_m_floor(f);
        if (evicted) {
            held_.erase(*evicted);
            sync_subconcepts();
        }
        if (!subconcepts_.empty()) learned_subconcept().members.insert(f);
        adopted.push_back(f);
    }
    return adopted;
}

bool ExpertAgent::k_promotion_trigger(const FeatureId& f) const {
    auto r = collection_.region_of(f);
    if (!r || *r != Region::M) {
        throw Error(ErrorCode::not_in_m,
                    "k-promotion trigger is defined for M-region features; '" + f + "' is " +
                        (r ? region_name(*r) : "absent"));
    }
    return *collection_.probability(f) + params_.alpha_r >= collection_.thresholds().tau_k;
}

bool ExpertAgent::handle_k_query(const FeatureId& f) const {
    auto r = collection_.region_of(f);
    return r && *r == Region::K;
}

bool ExpertAgent::handle_fall_notice(const FeatureId& f) {
    auto r = collection_.region_of(f);
    if (!r || *r != Region::K) {
        throw Error(ErrorCode::not_in_k,
                    "fall notice for '" + f + "' which is " + (r ? region_name(*r) : "absent") +
                        " in agent " + class_id_);
    }
    // The requester's interest pushes our copy down by the same step the
    // raise procedure climbs with.
    double now = collection_.adjust(f, -params_.alpha_r);
    return now < collection_.thresholds().tau_k;
}

void ExpertAgent::hold_for_promotion(const FeatureId& f) { held_.insert(f); }

void ExpertAgent::release_committed(const FeatureId& f) {
    held_.erase(f);
    auto evicted = collection_.insert_at_k_floor(f);
    if (evicted) {
        held_.erase(*evicted);
        sync_subconcepts();
    }
}

void ExpertAgent::release_aborted(const FeatureId& f) { held_.erase(f); }

void ExpertAgent::restore_counters(std::uint64_t dispatches, std::uint64_t epochs) {
    dispatches_ = dispatches;
    epochs_ = epochs;
}

void ExpertAgent::set_subconcepts(std::vector<SubConcept> subconcepts) {
    for (const auto& sub : subconcepts) {
        for (const auto& f : sub.members) {
            if (!collection_.contains(f)) {
                throw Error(ErrorCode::invalid_config, "subconcept '" + sub.name +
                                                           "' references unknown feature '" + f + "'");
            }
        }
    }
    subconcepts_ = std::move(subconcepts);
}

void ExpertAgent::sync_subconcepts() {
    for (auto& sub : subconcepts_) {
        for (auto it = sub.members.begin(); it != sub.members.end();) {
            if (!collection_.contains(*it)) {
                it = sub.members.erase(it);
            } else {
                ++it;
            }
        }
    }
}

SubConcept& ExpertAgent::learned_subconcept() {
    for (auto& sub : subconcepts_) {
        if (sub.name == "learned") return sub;
    }
    subconcepts_.push_back(SubConcept{"learned", {}});
    return subconcepts_.back();
}

}  // namespace macek
