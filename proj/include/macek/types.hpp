#pragma once

#include <string>
#include <vector>

#include "macek/errors.hpp"

namespace macek {

// A feature (a "tag" once extracted from a query object) is an opaque token.
// Equality is exact token equality.
using FeatureId = std::string;

// Main-class identifier; one expert agent per class.
using ClassId = std::string;

// The multiset of tags extracted from one query object, in extraction order.
// Duplicates are collapsed only at the point of use (scoring, confidence,
// window recording), never in the collection itself.
using TagCollection = std::vector<FeatureId>;

// Sorted distinct view of a tag collection.
std::vector<FeatureId> distinct_tags(const TagCollection& tags);

// Probability bands of a feature collection, ordered D < M < K so that the
// region is monotone in the probability.
enum class Region { D = 0, M = 1, K = 2 };

const char* region_name(Region r);

// The two governing thresholds. K is closed from below: a feature sitting
// exactly at tau_k is in K, one exactly at tau_m is in M, so both region
// floors are representable probabilities.
struct Thresholds {
    double tau_k = 0.7;
    double tau_m = 0.3;

    Thresholds() = default;
    Thresholds(double k, double m);  // validates 0 < tau_m < tau_k <= 1

    Region classify(double p) const {
        if (p >= tau_k) return Region::K;
        if (p >= tau_m) return Region::M;
        return Region::D;
    }
};

}  // namespace macek
