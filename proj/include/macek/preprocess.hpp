#pragma once

#include <string>

#include "macek/types.hpp"

namespace macek {

// Free text to a tag collection: lowercase, split on non-alphanumeric runs,
// duplicates collapsed (first occurrence kept). Errors when nothing survives.
TagCollection preprocess_text(const std::string& text);

// Corpus records pass through unchanged; only the nonempty precondition is
// enforced.
TagCollection preprocess_tags(TagCollection tags);

}  // namespace macek
