#pragma once

#include <stdexcept>
#include <string>

namespace macek {

// Every failure the kernel can signal. Protocol-normal outcomes (an absent
// feature, a commit conflict) are NOT errors and are returned as values.
enum class ErrorCode {
    duplicate_feature,
    illegal_promotion,
    unknown_feature,
    not_in_m,
    not_in_k,
    empty_query,
    feature_overlap,
    duplicate_class,
    duplicate_session,
    stale_state,
    invalid_config,
    invalid_corpus,
    corpus_mismatch,
    snapshot_busy,
    version_mismatch,
    io_error,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace macek
