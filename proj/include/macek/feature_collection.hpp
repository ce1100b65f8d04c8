#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "macek/types.hpp"

namespace macek {

struct RegionSizes {
    std::size_t k = 0;
    std::size_t m = 0;
    std::size_t d = 0;
};

// An expert agent's table of (feature, probability) entries. Regions are
// always derived from the probability and the thresholds, never stored.
// Entries are retained even when they fall into D, so a dormant feature can
// climb back; an optional capacity bound (off by default, capacity == 0)
// evicts the lowest-probability non-K entry when the table is full.
class FeatureCollection {
public:
    explicit FeatureCollection(Thresholds thresholds = {}, std::size_t capacity = 0)
        : thresholds_(thresholds), capacity_(capacity) {}

    const Thresholds& thresholds() const { return thresholds_; }
    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool contains(const FeatureId& f) const { return entries_.count(f) != 0; }

    std::optional<double> probability(const FeatureId& f) const;

    // K/M/D per the derived-region rule; nullopt when f is not present.
    std::optional<Region> region_of(const FeatureId& f) const;

    // Admits a new candidate at exactly the M-region floor (tau_m).
    // Returns the evicted feature when the capacity bound displaced one.
    std::optional<FeatureId> insert_at_m_floor(const FeatureId& f);

    // Promotes f to exactly the K-region floor (tau_k). f must be absent or
    // currently in M; promoting out of D would bypass the decay dynamics.
    std::optional<FeatureId> insert_at_k_floor(const FeatureId& f);

    // p(f) <- clamp(p(f) + delta, 0, 1). The entry is kept whatever region
    // it lands in. Returns the new probability.
    double adjust(const FeatureId& f, double delta);

    // Direct assignment, used by snapshot restore and tests.
    void set_probability(const FeatureId& f, double p);

    const std::map<FeatureId, double>& entries() const { return entries_; }
    RegionSizes region_sizes() const;
    std::vector<FeatureId> features_in_region(Region r) const;

private:
    std::optional<FeatureId> make_room();

    std::map<FeatureId, double> entries_;
    Thresholds thresholds_;
    std::size_t capacity_;
};

}  // namespace macek
