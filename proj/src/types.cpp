#include "macek/types.hpp"

#include <algorithm>
#include <sstream>

namespace macek {

std::vector<FeatureId> distinct_tags(const TagCollection& tags) {
    std::vector<FeatureId> out(tags.begin(), tags.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

const char* region_name(Region r) {
    switch (r) {
        case Region::D: return "D";
        case Region::M: return "M";
        case Region::K: return "K";
    }
    return "?";
}

Thresholds::Thresholds(double k, double m) : tau_k(k), tau_m(m) {
    if (!(tau_m > 0.0) || !(tau_m < tau_k) || !(tau_k <= 1.0)) {
        std::ostringstream msg;
        msg << "thresholds must satisfy 0 < tau_m < tau_k <= 1, got tau_k=" << tau_k
            << " tau_m=" << tau_m;
        throw Error(ErrorCode::invalid_config, msg.str());
    }
}

}  // namespace macek
