#include "macek/errors.hpp"

namespace macek {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::duplicate_feature: return "duplicate-feature";
        case ErrorCode::illegal_promotion: return "illegal-promotion";
        case ErrorCode::unknown_feature: return "unknown-feature";
        case ErrorCode::not_in_m: return "not-in-m";
        case ErrorCode::not_in_k: return "not-in-k";
        case ErrorCode::empty_query: return "empty-query";
        case ErrorCode::feature_overlap: return "feature-overlap";
        case ErrorCode::duplicate_class: return "duplicate-class";
        case ErrorCode::duplicate_session: return "duplicate-session";
        case ErrorCode::stale_state: return "stale-state";
        case ErrorCode::invalid_config: return "invalid-config";
        case ErrorCode::invalid_corpus: return "invalid-corpus";
        case ErrorCode::corpus_mismatch: return "corpus-mismatch";
        case ErrorCode::snapshot_busy: return "snapshot-busy";
        case ErrorCode::version_mismatch: return "version-mismatch";
        case ErrorCode::io_error: return "io-error";
    }
    return "unknown-error";
}

}  // namespace macek
