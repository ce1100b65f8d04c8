#pragma once

#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "macek/expert_agent.hpp"
#include "macek/types.hpp"

namespace macek {

// CenterAgent's estimate that a query belongs to a class: the fraction of
// distinct query tags owned by that class in the base-feature registry.
struct DegreeOfConfidence {
    ClassId class_id;
    double value = 0.0;
};

// One dispatch decision entry. fallback marks the zero-confidence broadcast
// used when no class knows any query tag.
struct DispatchTarget {
    ClassId class_id;
    double confidence = 0.0;
    bool fallback = false;
};

// Ordered (class, likelihood) pairs, descending likelihood, ties broken by
// class identifier. One entry per dispatched agent.
using ClassificationVector = std::vector<std::pair<ClassId, double>>;

// How a result's class score is mixed with the degree of confidence.
enum class MixRule { product, sum, max };

struct DispatchPolicy {
    enum class Kind { top_k, min_conf, broadcast };
    Kind kind = Kind::top_k;
    int top_k = 0;  // 0 = auto: min(3, M)
    double min_conf = 0.0;

    void validate() const;
};

// Map feature -> owning class: the disjoint union of all K-regions. The map
// structure is itself the disjointness guarantee; at quiescence it equals
// { (f, C_i) : f in K-region of Ag_i }.
class BaseFeatureRegistry {
public:
    enum class Commit { ok, conflict };

    std::optional<ClassId> owner(const FeatureId& f) const;

    // First committer wins; re-commit by the current owner is idempotent.
    Commit commit(const FeatureId& f, const ClassId& class_id);

    // Removes the mapping only when class_id is the current owner; a stale
    // notice is a no-op.
    void remove(const FeatureId& f, const ClassId& class_id);

    std::size_t size() const { return owner_.size(); }
    const std::map<FeatureId, ClassId>& entries() const { return owner_; }

private:
    std::map<FeatureId, ClassId> owner_;
};

// The moderator: holds the registry, computes confidences, picks dispatch
// targets, and mixes returned packages into the output vector. Registry
// mutations are serialized through it; that serialization is the promotion
// arbitration mechanism.
class CenterAgent {
public:
    CenterAgent(std::vector<ClassId> classes, DispatchPolicy policy = {},
                MixRule mix = MixRule::product, double epsilon_fb = 0.01);

    const std::vector<ClassId>& classes() const { return classes_; }
    BaseFeatureRegistry& registry() { return registry_; }
    const BaseFeatureRegistry& registry() const { return registry_; }
    const DispatchPolicy& policy() const { return policy_; }
    MixRule mix_rule() const { return mix_; }
    double epsilon_fb() const { return epsilon_fb_; }

    DegreeOfConfidence confidence(const TagCollection& tags, const ClassId& class_id) const;

    // Confidence for every class, zero-confidence classes dropped, policy
    // applied, ties broken by class identifier. Falls back to broadcasting
    // to every agent (confidence 0, fallback flag) when nothing matches.
    std::vector<DispatchTarget> dispatch(const TagCollection& tags) const;

    // likelihood(C) = mix(confidence, class_score); fallback entries use
    // epsilon_fb in place of the confidence so cold queries still rank.
    ClassificationVector aggregate(
        const std::vector<std::pair<ResultPackage, DispatchTarget>>& results) const;

    int resolved_top_k() const;

private:
    std::vector<ClassId> classes_;
    BaseFeatureRegistry registry_;
    DispatchPolicy policy_;
    MixRule mix_;
    double epsilon_fb_;
};

struct BootstrapResult {
    CenterAgent center;
    std::vector<ExpertAgent> agents;
};

// Registers the pairwise-disjoint base-feature sets and hands each agent its
// collection with every base feature at exactly the K floor.
BootstrapResult bootstrap(const std::vector<std::pair<ClassId, std::set<FeatureId>>>& base_sets,
                          const Thresholds& thresholds, const LearningParams& params,
                          const DispatchPolicy& policy = {}, MixRule mix = MixRule::product,
                          double epsilon_fb = 0.01);

}  // namespace macek
