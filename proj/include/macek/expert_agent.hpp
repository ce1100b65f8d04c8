#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "macek/feature_collection.hpp"
#include "macek/time_interval_memory.hpp"
#include "macek/types.hpp"

namespace macek {

// Learning dynamics of one expert agent. The paper's single step symbol is
// split into an upward step (reinforcement, also used by the fall procedure)
// and a downward step (epoch decay); both default to the same value.
struct LearningParams {
    double alpha_r = 0.05;    // reinforcement step per observed occurrence
    double alpha_d = 0.05;    // decay step per epoch for unseen features
    int theta = 5;            // window occurrences before a tag is adopted
    std::size_t window = 50;  // TIM window W, in queries
    std::size_t epoch = 0;    // decay period E, in dispatches; 0 means W

    std::size_t resolved_epoch() const { return epoch != 0 ? epoch : window; }
    void validate(const Thresholds& thresholds) const;
};

// A named child concept: a subset of the agent's feature keys.
struct SubConcept {
    std::string name;
    std::set<FeatureId> members;
};

// What an agent sends back for one dispatched query.
struct ResultPackage {
    ClassId class_id;
    double class_score = 0.0;
    std::vector<std::pair<std::string, double>> per_subconcept;
    std::vector<std::pair<FeatureId, double>> matched;  // K/M features hit by the query
};

// Everything one dispatch changed or asked for, beyond the reply itself.
struct DispatchOutcome {
    ResultPackage package;                       // scored on the pre-update state
    std::vector<FeatureId> adopted;              // new candidates inserted at the M floor
    std::vector<FeatureId> promotion_triggers;   // M features held at the K border
    std::vector<FeatureId> interest_events;      // reobserved features with a held promotion
    bool epoch_due = false;                      // caller should run epoch_decay now
};

// One willing-to-be-expert agent for a single main class. Sequential state
// machine: one inbound message at a time, never shared.
class ExpertAgent {
public:
    ExpertAgent(ClassId class_id, Thresholds thresholds, LearningParams params);

    const ClassId& class_id() const { return class_id_; }
    const FeatureCollection& collection() const { return collection_; }
    FeatureCollection& collection() { return collection_; }
    const TimeIntervalMemory& tim() const { return tim_; }
    const LearningParams& params() const { return params_; }
    const std::vector<SubConcept>& subconcepts() const { return subconcepts_; }
    std::uint64_t dispatches_processed() const { return dispatches_; }

    // Pure scoring: sum of matched K/M probabilities over the count of
    // distinct query tags; subconcept scores use the same denominator over
    // their members; the class score is the max subconcept score when
    // subconcepts exist, otherwise the whole-collection score.
    ResultPackage score_query(const TagCollection& tags) const;

    // Score on the pre-update snapshot, then record the tags in the TIM,
    // reinforce every known tag (any region; a held feature logs an interest
    // event instead, an M feature about to cross tau_k becomes a promotion
    // trigger), and finally adopt frequent unknown tags at the M floor.
    DispatchOutcome process_dispatch(const TagCollection& tags);

    // Decay sweep for features absent from the window. Returns the features
    // that left the K-region (the caller owes the registry a removal notice).
    std::vector<FeatureId> epoch_decay();

    // Frequent unknown tags right now (pure view of the TIM).
    std::set<FeatureId> promotion_candidates() const;

    // Inserts every current candidate at the M floor and returns them.
    std::vector<FeatureId> adopt_promotion_candidates();

    // True iff one more reinforcement would reach tau_k. f must be in M.
    bool k_promotion_trigger(const FeatureId& f) const;

    // Peer consultation probe: is f in this agent's K-region? Read-only.
    bool handle_k_query(const FeatureId& f) const;

    // Fall procedure step applied to this agent's K copy of f. Returns true
    // when the new probability left the K-region. Throws not_in_k when f is
    // absent or not in K (the protocol treats that as already-left).
    bool handle_fall_notice(const FeatureId& f);

    // Promotion-session bookkeeping: a held feature is neither reinforced
    // nor decayed until its consultation resolves.
    void hold_for_promotion(const FeatureId& f);
    void release_committed(const FeatureId& f);  // insert at K floor + unhold
    void release_aborted(const FeatureId& f);    // keep held probability + unhold
    bool is_held(const FeatureId& f) const { return held_.count(f) != 0; }
    const std::set<FeatureId>& held_features() const { return held_; }

    std::uint64_t epochs_completed() const { return epochs_; }

    // Static groupings set after the collection is populated; every member
    // must already be a collection key.
    void set_subconcepts(std::vector<SubConcept> subconcepts);

    // Snapshot restore hooks.
    void restore_counters(std::uint64_t dispatches, std::uint64_t epochs);
    void restore_tim(TimeIntervalMemory tim) { tim_ = std::move(tim); }

private:
    void sync_subconcepts();
    SubConcept& learned_subconcept();

    ClassId class_id_;
    FeatureCollection collection_;
    TimeIntervalMemory tim_;
    std::vector<SubConcept> subconcepts_;
    LearningParams params_;
    std::set<FeatureId> held_;
    std::uint64_t dispatches_ = 0;
    std::uint64_t epochs_ = 0;
};

}  // namespace macek
