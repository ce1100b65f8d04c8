#include "macek/preprocess.hpp"

#include <cctype>
#include <set>

#include "macek/errors.hpp"

namespace macek {

TagCollection preprocess_text(const std::string& text) {
    TagCollection tags;
    std::set<std::string> seen;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            if (seen.insert(current).second) tags.push_back(current);
            current.clear();
        }
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    if (tags.empty()) {
        throw Error(ErrorCode::empty_query, "no tags survived preprocessing of '" + text + "'");
    }
    return tags;
}

TagCollection preprocess_tags(TagCollection tags) {
    if (tags.empty()) throw Error(ErrorCode::empty_query, "object has no tags");
    return tags;
}

}  // namespace macek
