#pragma once

#include <cstdint>
#include <string>

#include "macek/center_agent.hpp"
#include "macek/expert_agent.hpp"
#include "macek/promotion.hpp"
#include "macek/types.hpp"

namespace macek {

const char* mix_rule_name(MixRule m);
MixRule mix_rule_from_name(const std::string& name);
const char* consultation_mode_name(ConsultationMode m);
ConsultationMode consultation_mode_from_name(const std::string& name);
const char* dispatch_kind_name(DispatchPolicy::Kind k);
DispatchPolicy::Kind dispatch_kind_from_name(const std::string& name);

// Everything a scenario run depends on besides the corpus itself. The seed
// drives the message scheduler; the corpus carries its own.
struct ScenarioConfig {
    Thresholds thresholds{};
    LearningParams learning{};
    DispatchPolicy policy{};
    ConsultationMode consultation = ConsultationMode::lookup;
    int round_cap = 20;
    double epsilon_fb = 0.01;
    MixRule mix = MixRule::product;
    std::uint64_t seed = 1;

    void validate() const;

    std::string to_json_string() const;
    static ScenarioConfig from_json_string(const std::string& text);
};

}  // namespace macek
