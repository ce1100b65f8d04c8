#include "macek/messages.hpp"

#include <istream>
#include <sstream>

#include "macek/errors.hpp"

namespace macek {

const char* msg_type_name(MsgType t) {
    switch (t) {
        case MsgType::dispatch: return "Dispatch";
        case MsgType::result: return "Result";
        case MsgType::owner_query: return "OwnerQuery";
        case MsgType::owner_reply: return "OwnerReply";
        case MsgType::kregion_query: return "KRegionQuery";
        case MsgType::kregion_reply: return "KRegionReply";
        case MsgType::fall_notice: return "FallNotice";
        case MsgType::fall_ack: return "FallAck";
        case MsgType::registry_commit: return "RegistryCommit";
        case MsgType::commit_ack: return "CommitAck";
        case MsgType::registry_remove: return "RegistryRemove";
    }
    return "?";
}

bool is_consultation(MsgType t) {
    return t != MsgType::dispatch && t != MsgType::result;
}

std::string trace_key(const Message& m) {
    std::ostringstream key;
    switch (m.type) {
        case MsgType::dispatch:
        case MsgType::result:
            key << "q=" << m.query_id;
            break;
        case MsgType::registry_remove:
            key << "f=" << m.feature;
            if (m.session_id != 0) key << " s=" << m.session_id;
            break;
        default:
            key << "f=" << m.feature << " s=" << m.session_id;
            break;
    }
    return key.str();
}

TraceCounts count_trace(std::istream& trace) {
    TraceCounts counts;
    std::string line;
    while (std::getline(trace, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::uint64_t step = 0;
        std::string variant, from, to, token;
        if (!(fields >> step >> variant >> from >> to)) {
            throw Error(ErrorCode::io_error, "malformed trace line: " + line);
        }
        ++counts.by_variant[variant];
        ++counts.total;
        bool dispatch_like = variant == "Dispatch" || variant == "Result";
        if (!dispatch_like) ++counts.consultation;

        std::uint64_t query = 0, session = 0;
        std::string feature;
        while (fields >> token) {
            if (token.rfind("q=", 0) == 0) query = std::stoull(token.substr(2));
            else if (token.rfind("s=", 0) == 0) session = std::stoull(token.substr(2));
            else if (token.rfind("f=", 0) == 0) feature = token.substr(2);
        }
        if (dispatch_like) ++counts.per_query[query];
        if (session != 0) {
            auto& s = counts.per_session[session];
            ++s.messages;
            if (s.feature.empty()) s.feature = feature;
            // The session requester is whichever endpoint started it; the
            // first message of a session always originates there.
            if (s.requester.empty()) s.requester = from;
        }
    }
    return counts;
}

}  // namespace macek
