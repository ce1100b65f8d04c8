#include "macek/time_interval_memory.hpp"

#include "macek/errors.hpp"

namespace macek {

TimeIntervalMemory::TimeIntervalMemory(std::size_t window_size) : window_size_(window_size) {
    if (window_size_ == 0) {
        throw Error(ErrorCode::invalid_config, "time-interval memory window must be positive");
    }
}

void TimeIntervalMemory::record(const TagCollection& tags) {
    std::vector<FeatureId> slot = distinct_tags(tags);
    for (const auto& f : slot) ++counts_[f];
    slots_.push_back(std::move(slot));
    if (slots_.size() > window_size_) {
        for (const auto& f : slots_.front()) {
            auto it = counts_.find(f);
            if (--it->second == 0) counts_.erase(it);
        }
        slots_.pop_front();
    }
}

int TimeIntervalMemory::count(const FeatureId& f) const {
    auto it = counts_.find(f);
    return it == counts_.end() ? 0 : it->second;
}

std::set<FeatureId> TimeIntervalMemory::frequent_unknown_tags(const std::set<FeatureId>& known,
                                                              int theta) const {
    std::set<FeatureId> out;
    for (const auto& [f, n] : counts_) {
        if (n >= theta && known.count(f) == 0) out.insert(f);
    }
    return out;
}

}  // namespace macek
