#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <set>
#include <vector>

#include "macek/types.hpp"

namespace macek {

// Sliding window over the most recently dispatched queries. The window unit
// is a count of queries; each slot keeps the query's tag SET (within-query
// duplicates collapse, density means "number of recent queries containing
// the tag"). Eviction is strictly FIFO.
class TimeIntervalMemory {
public:
    explicit TimeIntervalMemory(std::size_t window_size);

    std::size_t window_size() const { return window_size_; }
    std::size_t slot_count() const { return slots_.size(); }

    void record(const TagCollection& tags);

    int count(const FeatureId& f) const;
    bool seen_within_window(const FeatureId& f) const { return count(f) >= 1; }

    // Tags with count >= theta that the caller does not already know.
    std::set<FeatureId> frequent_unknown_tags(const std::set<FeatureId>& known, int theta) const;

    // Oldest first; each slot sorted and duplicate-free.
    const std::deque<std::vector<FeatureId>>& slots() const { return slots_; }

private:
    std::size_t window_size_;
    std::deque<std::vector<FeatureId>> slots_;
    std::map<FeatureId, int> counts_;
};

}  // namespace macek
