#include "macek/config.hpp"

#include <json.hpp>

#include "macek/errors.hpp"

namespace macek {

const char* mix_rule_name(MixRule m) {
    switch (m) {
        case MixRule::product: return "product";
        case MixRule::sum: return "sum";
        case MixRule::max: return "max";
    }
    return "?";
}

MixRule mix_rule_from_name(const std::string& name) {
    if (name == "product") return MixRule::product;
    if (name == "sum") return MixRule::sum;
    if (name == "max") return MixRule::max;
    throw Error(ErrorCode::invalid_config, "unknown mix rule '" + name + "'");
}

const char* consultation_mode_name(ConsultationMode m) {
    return m == ConsultationMode::lookup ? "lookup" : "broadcast";
}

ConsultationMode consultation_mode_from_name(const std::string& name) {
    if (name == "lookup") return ConsultationMode::lookup;
    if (name == "broadcast") return ConsultationMode::broadcast;
    throw Error(ErrorCode::invalid_config, "unknown consultation mode '" + name + "'");
}

const char* dispatch_kind_name(DispatchPolicy::Kind k) {
    switch (k) {
        case DispatchPolicy::Kind::top_k: return "top_k";
        case DispatchPolicy::Kind::min_conf: return "min_conf";
        case DispatchPolicy::Kind::broadcast: return "broadcast";
    }
    return "?";
}

DispatchPolicy::Kind dispatch_kind_from_name(const std::string& name) {
    if (name == "top_k") return DispatchPolicy::Kind::top_k;
    if (name == "min_conf") return DispatchPolicy::Kind::min_conf;
    if (name == "broadcast") return DispatchPolicy::Kind::broadcast;
    throw Error(ErrorCode::invalid_config, "unknown dispatch policy '" + name + "'");
}

void ScenarioConfig::validate() const {
    Thresholds checked(thresholds.tau_k, thresholds.tau_m);  // revalidates the pair
    learning.validate(checked);
    policy.validate();
    if (round_cap < 1) throw Error(ErrorCode::invalid_config, "round_cap must be >= 1");
    if (!(epsilon_fb > 0.0) || epsilon_fb > 1.0) {
        throw Error(ErrorCode::invalid_config, "epsilon_fb must be in (0,1]");
    }
}

std::string ScenarioConfig::to_json_string() const {
    nlohmann::json j{{"tau_k", thresholds.tau_k},
                     {"tau_m", thresholds.tau_m},
                     {"alpha_r", learning.alpha_r},
                     {"alpha_d", learning.alpha_d},
                     {"theta", learning.theta},
                     {"window", learning.window},
                     {"epoch", learning.epoch},
                     {"dispatch", dispatch_kind_name(policy.kind)},
                     {"top_k", policy.top_k},
                     {"min_conf", policy.min_conf},
                     {"consultation", consultation_mode_name(consultation)},
                     {"round_cap", round_cap},
                     {"epsilon_fb", epsilon_fb},
                     {"mix", mix_rule_name(mix)},
                     {"seed", seed}};
    return j.dump();
}

ScenarioConfig ScenarioConfig::from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::invalid_config, std::string("config is not valid JSON: ") + e.what());
    }
    ScenarioConfig config;
    try {
        config.thresholds.tau_k = j.value("tau_k", config.thresholds.tau_k);
        config.thresholds.tau_m = j.value("tau_m", config.thresholds.tau_m);
        config.learning.alpha_r = j.value("alpha_r", config.learning.alpha_r);
        config.learning.alpha_d = j.value("alpha_d", config.learning.alpha_d);
        config.learning.theta = j.value("theta", config.learning.theta);
        config.learning.window = j.value("window", config.learning.window);
        config.learning.epoch = j.value("epoch", config.learning.epoch);
        config.policy.kind = dispatch_kind_from_name(
            j.value("dispatch", std::string(dispatch_kind_name(config.policy.kind))));
        config.policy.top_k = j.value("top_k", config.policy.top_k);
        config.policy.min_conf = j.value("min_conf", config.policy.min_conf);
        config.consultation = consultation_mode_from_name(
            j.value("consultation", std::string(consultation_mode_name(config.consultation))));
        config.round_cap = j.value("round_cap", config.round_cap);
        config.epsilon_fb = j.value("epsilon_fb", config.epsilon_fb);
        config.mix = mix_rule_from_name(j.value("mix", std::string(mix_rule_name(config.mix))));
        config.seed = j.value("seed", config.seed);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::invalid_config, std::string("bad config field: ") + e.what());
    }
    config.validate();
    return config;
}

}  // namespace macek
