#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "macek/types.hpp"

namespace macek {

struct MixWeights {
    double base = 0.5;
    double learnable = 0.3;
    double noise = 0.2;
};

// Synthetic corpus recipe. Deterministic given the seed: per object the
// generator draws the class, then tags_per_object tags; each tag draw picks
// the category against the mix, then a uniform member of that pool. Base and
// learnable pools belong to the object's class, the noise pool is shared.
struct CorpusSpec {
    std::size_t num_classes = 2;
    std::size_t base_per_class = 3;
    std::size_t learnable_per_class = 0;
    std::size_t noise_pool = 0;
    std::size_t tags_per_object = 6;
    std::size_t num_objects = 100;
    MixWeights mix;
    std::uint64_t seed = 1;

    void validate() const;
};

struct ClassPlan {
    ClassId id;
    std::vector<FeatureId> base;       // planted bootstrap features
    std::vector<FeatureId> learnable;  // planted but not bootstrapped
};

// The planted sets, recorded for bootstrap and later evaluation.
struct Manifest {
    int version = 1;
    CorpusSpec spec;
    std::vector<ClassPlan> classes;
    std::vector<FeatureId> noise;

    std::vector<std::pair<ClassId, std::set<FeatureId>>> bootstrap_sets() const;
};

struct CorpusRecord {
    std::string object_id;
    ClassId true_class;
    TagCollection tags;
};

// Deterministic feature naming for a spec, independent of the tag draws.
Manifest plan_corpus(const CorpusSpec& spec);

std::pair<std::vector<CorpusRecord>, Manifest> generate_corpus(const CorpusSpec& spec);

// Line format: object_id <TAB> true_class <TAB> tag,tag,...
void write_corpus(std::ostream& out, const std::vector<CorpusRecord>& records);
std::vector<CorpusRecord> read_corpus(std::istream& in);

void write_manifest(std::ostream& out, const Manifest& manifest);
Manifest read_manifest(std::istream& in);

}  // namespace macek
