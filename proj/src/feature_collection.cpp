#include "macek/feature_collection.hpp"

#include <algorithm>

#include "macek/errors.hpp"

namespace macek {

std::optional<double> FeatureCollection::probability(const FeatureId& f) const {
    auto it = entries_.find(f);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::optional<Region> FeatureCollection::region_of(const FeatureId& f) const {
    auto it = entries_.find(f);
    if (it == entries_.end()) return std::nullopt;
    return thresholds_.classify(it->second);
}

std::optional<FeatureId> FeatureCollection::insert_at_m_floor(const FeatureId& f) {
    if (contains(f)) {
        throw Error(ErrorCode::duplicate_feature,
                    "'" + f + "' is already in the collection; M-floor insertion is for new candidates");
    }
    auto evicted = make_room();
    entries_.emplace(f, thresholds_.tau_m);
    return evicted;
}

std::optional<FeatureId> FeatureCollection::insert_at_k_floor(const FeatureId& f) {
    auto it = entries_.find(f);
    if (it != entries_.end()) {
        Region r = thresholds_.classify(it->second);
        if (r != Region::M) {
            throw Error(ErrorCode::illegal_promotion,
                        "'" + f + "' is in region " + region_name(r) +
                            "; only absent or M-region features may take the K floor");
        }
        it->second = thresholds_.tau_k;
        return std::nullopt;
    }
    auto evicted = make_room();
    entries_.emplace(f, thresholds_.tau_k);
    return evicted;
}

double FeatureCollection::adjust(const FeatureId& f, double delta) {
    auto it = entries_.find(f);
    if (it == entries_.end()) {
        throw Error(ErrorCode::unknown_feature, "cannot adjust '" + f + "': not in the collection");
    }
    double next = std::clamp(it->second + delta, 0.0, 1.0);
    // Stepping in alpha increments accumulates round-half-even residue; mass
    // below one part in 2^33 is rounding noise, and collapsing it keeps the
    // closed-form step counts at the zero floor exact.
    if (next < 0x1.0p-33) next = 0.0;
    it->second = next;
    return it->second;
}

void FeatureCollection::set_probability(const FeatureId& f, double p) {
    if (p < 0.0 || p > 1.0) {
        throw Error(ErrorCode::invalid_config, "probability out of [0,1] for '" + f + "'");
    }
    entries_[f] = p;
}

RegionSizes FeatureCollection::region_sizes() const {
    RegionSizes sizes;
    for (const auto& [f, p] : entries_) {
        switch (thresholds_.classify(p)) {
            case Region::K: ++sizes.k; break;
            case Region::M: ++sizes.m; break;
            case Region::D: ++sizes.d; break;
        }
    }
    return sizes;
}

std::vector<FeatureId> FeatureCollection::features_in_region(Region r) const {
    std::vector<FeatureId> out;
    for (const auto& [f, p] : entries_) {
        if (thresholds_.classify(p) == r) out.push_back(f);
    }
    return out;
}

std::optional<FeatureId> FeatureCollection::make_room() {
    if (capacity_ == 0 || entries_.size() < capacity_) return std::nullopt;
    // Evict the lowest-probability non-K entry; ties go to the
    // lexicographically last token. K entries are registry-backed and are
    // never displaced, so an all-K table simply grows past the bound.
    auto victim = entries_.end();
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
        if (thresholds_.classify(it->second) == Region::K) continue;
        if (victim == entries_.end() || it->second <= victim->second) victim = it;
    }
    if (victim == entries_.end()) return std::nullopt;
    FeatureId evicted = victim->first;
    entries_.erase(victim);
    return evicted;
}

}  // namespace macek
