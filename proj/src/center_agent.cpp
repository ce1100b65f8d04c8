#include "macek/center_agent.hpp"

#include <algorithm>

#include "macek/errors.hpp"

namespace macek {

void DispatchPolicy::validate() const {
    switch (kind) {
        case Kind::top_k:
            if (top_k < 0) throw Error(ErrorCode::invalid_config, "top_k must be >= 1 (0 = auto)");
            break;
        case Kind::min_conf:
            if (!(min_conf > 0.0) || min_conf > 1.0) {
                throw Error(ErrorCode::invalid_config, "min_conf must be in (0,1]");
            }
            break;
        case Kind::broadcast:
            break;
    }
}

std::optional<ClassId> BaseFeatureRegistry::owner(const FeatureId& f) const {
    auto it = owner_.find(f);
    if (it == owner_.end()) return std::nullopt;
    return it->second;
}

BaseFeatureRegistry::Commit BaseFeatureRegistry::commit(const FeatureId& f, const ClassId& class_id) {
    auto [it, inserted] = owner_.emplace(f, class_id);
    if (inserted || it->second == class_id) return Commit::ok;
    return Commit::conflict;
}

void BaseFeatureRegistry::remove(const FeatureId& f, const ClassId& class_id) {
    auto it = owner_.find(f);
    if (it != owner_.end() && it->second == class_id) owner_.erase(it);
}

CenterAgent::CenterAgent(std::vector<ClassId> classes, DispatchPolicy policy, MixRule mix,
                         double epsilon_fb)
    : classes_(std::move(classes)), policy_(policy), mix_(mix), epsilon_fb_(epsilon_fb) {
    policy_.validate();
    if (!(epsilon_fb_ > 0.0) || epsilon_fb_ > 1.0) {
        throw Error(ErrorCode::invalid_config, "epsilon_fb must be in (0,1]");
    }
}

DegreeOfConfidence CenterAgent::confidence(const TagCollection& tags, const ClassId& class_id) const {
    if (tags.empty()) throw Error(ErrorCode::empty_query, "confidence of an empty query");
    const auto query = distinct_tags(tags);
    std::size_t owned = 0;
    for (const auto& t : query) {
        auto o = registry_.owner(t);
        if (o && *o == class_id) ++owned;
    }
    return {class_id, static_cast<double>(owned) / static_cast<double>(query.size())};
}

int CenterAgent::resolved_top_k() const {
    if (policy_.top_k > 0) return policy_.top_k;
    return static_cast<int>(std::min<std::size_t>(3, classes_.size()));
}

std::vector<DispatchTarget> CenterAgent::dispatch(const TagCollection& tags) const {
    if (tags.empty()) throw Error(ErrorCode::empty_query, "dispatch of an empty query");

    std::vector<DispatchTarget> ranked;
    ranked.reserve(classes_.size());
    for (const auto& c : classes_) {
        ranked.push_back({c, confidence(tags, c).value, false});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        return a.class_id < b.class_id;
    });

    if (policy_.kind == DispatchPolicy::Kind::broadcast) {
        // Consult-everyone baseline; zero-confidence entries still reach the
        // agents and are mixed with the fallback weight.
        for (auto& t : ranked) t.fallback = t.confidence == 0.0;
        return ranked;
    }

    std::vector<DispatchTarget> selected;
    for (const auto& t : ranked) {
        if (t.confidence == 0.0) break;
        if (policy_.kind == DispatchPolicy::Kind::top_k &&
            selected.size() >= static_cast<std::size_t>(resolved_top_k())) {
            break;
        }
        if (policy_.kind == DispatchPolicy::Kind::min_conf && t.confidence < policy_.min_conf) break;
        selected.push_back(t);
    }
    if (selected.empty()) {
        // Nobody knows any tag: broadcast so the query is still answered and
        // every time-interval memory sees the unknown tags.
        for (auto& t : ranked) {
            t.fallback = true;
            selected.push_back(t);
        }
    }
    return selected;
}

ClassificationVector CenterAgent::aggregate(
    const std::vector<std::pair<ResultPackage, DispatchTarget>>& results) const {
    ClassificationVector vec;
    std::set<ClassId> seen;
    for (const auto& [pkg, target] : results) {
        if (!seen.insert(pkg.class_id).second) {
            throw Error(ErrorCode::duplicate_class,
                        "class " + pkg.class_id + " appears twice in the result set");
        }
        const double conf = target.fallback ? epsilon_fb_ : target.confidence;
        double likelihood = 0.0;
        switch (mix_) {
            case MixRule::product: likelihood = conf * pkg.class_score; break;
            case MixRule::sum: likelihood = std::min(1.0, conf + pkg.class_score); break;
            case MixRule::max: likelihood = std::max(conf, pkg.class_score); break;
        }
        vec.emplace_back(pkg.class_id, likelihood);
    }
    std::stable_sort(vec.begin(), vec.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return vec;
}

BootstrapResult bootstrap(const std::vector<std::pair<ClassId, std::set<FeatureId>>>& base_sets,
                          const Thresholds& thresholds, const LearningParams& params,
                          const DispatchPolicy& policy, MixRule mix, double epsilon_fb) {
    std::vector<ClassId> classes;
    std::set<ClassId> unique_classes;
    for (const auto& [class_id, features] : base_sets) {
        if (class_id.empty() || class_id == "center") {
            throw Error(ErrorCode::invalid_config, "'" + class_id + "' is not a usable class id");
        }
        if (!unique_classes.insert(class_id).second) {
            throw Error(ErrorCode::duplicate_class, "class " + class_id + " listed twice");
        }
        classes.push_back(class_id);
    }

    BootstrapResult result{CenterAgent(classes, policy, mix, epsilon_fb), {}};
    for (const auto& [class_id, features] : base_sets) {
        ExpertAgent agent(class_id, thresholds, params);
        for (const auto& f : features) {
            auto existing = result.center.registry().owner(f);
            if (existing) {
                throw Error(ErrorCode::feature_overlap, "base feature '" + f + "' planted for both " +
                                                            *existing + " and " + class_id);
            }
            result.center.registry().commit(f, class_id);
            agent.collection().insert_at_k_floor(f);
        }
        result.agents.push_back(std::move(agent));
    }
    return result;
}

}  // namespace macek
