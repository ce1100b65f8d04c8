#include "macek/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "macek/errors.hpp"
#include "macek/numeric_text.hpp"

namespace macek {

namespace {

std::string zero_padded(std::size_t value, std::size_t width) {
    std::string s = std::to_string(value);
    while (s.size() < width) s.insert(s.begin(), '0');
    return s;
}

std::size_t digits(std::size_t n) { return std::to_string(n).size(); }

bool valid_token(const std::string& token) {
    if (token.empty()) return false;
    for (unsigned char c : token) {
        if (std::isspace(c) || c == ',') return false;
    }
    return true;
}

}  // namespace

void CorpusSpec::validate() const {
    if (num_classes == 0) throw Error(ErrorCode::invalid_config, "num_classes must be positive");
    if (base_per_class == 0) throw Error(ErrorCode::invalid_config, "base_per_class must be positive");
    if (tags_per_object == 0) {
        throw Error(ErrorCode::invalid_config, "tags_per_object must be positive");
    }
    if (mix.base < 0 || mix.learnable < 0 || mix.noise < 0) {
        throw Error(ErrorCode::invalid_config, "mix weights must be nonnegative");
    }
    double sum = mix.base + mix.learnable + mix.noise;
    if (std::abs(sum - 1.0) > 1e-9) {
        throw Error(ErrorCode::invalid_config, "mix weights must sum to 1");
    }
    if (mix.learnable > 0 && learnable_per_class == 0) {
        throw Error(ErrorCode::invalid_config, "learnable mix weight with no learnable features");
    }
    if (mix.noise > 0 && noise_pool == 0) {
        throw Error(ErrorCode::invalid_config, "noise mix weight with an empty noise pool");
    }
}

Manifest plan_corpus(const CorpusSpec& spec) {
    spec.validate();
    Manifest manifest;
    manifest.spec = spec;
    const std::size_t class_width = digits(spec.num_classes - 1);
    for (std::size_t i = 0; i < spec.num_classes; ++i) {
        ClassPlan plan;
        plan.id = "c" + zero_padded(i, class_width);
        for (std::size_t j = 0; j < spec.base_per_class; ++j) {
            plan.base.push_back(plan.id + "_b" + std::to_string(j));
        }
        for (std::size_t j = 0; j < spec.learnable_per_class; ++j) {
            plan.learnable.push_back(plan.id + "_l" + std::to_string(j));
        }
        manifest.classes.push_back(std::move(plan));
    }
    for (std::size_t j = 0; j < spec.noise_pool; ++j) {
        manifest.noise.push_back("n" + std::to_string(j));
    }
    return manifest;
}

std::vector<std::pair<ClassId, std::set<FeatureId>>> Manifest::bootstrap_sets() const {
    std::vector<std::pair<ClassId, std::set<FeatureId>>> sets;
    sets.reserve(classes.size());
    for (const auto& plan : classes) {
        sets.emplace_back(plan.id, std::set<FeatureId>(plan.base.begin(), plan.base.end()));
    }
    return sets;
}

std::pair<std::vector<CorpusRecord>, Manifest> generate_corpus(const CorpusSpec& spec) {
    Manifest manifest = plan_corpus(spec);
    std::mt19937_64 rng(spec.seed);
    std::vector<CorpusRecord> records;
    records.reserve(spec.num_objects);
    const std::size_t id_width = spec.num_objects > 0 ? digits(spec.num_objects - 1) : 1;

    // Draw order per object: class index, then per tag the category against
    // the cumulative mix, then a uniform pool member.
    for (std::size_t k = 0; k < spec.num_objects; ++k) {
        const std::size_t class_index = uniform_below(rng, spec.num_classes);
        const ClassPlan& plan = manifest.classes[class_index];
        CorpusRecord record;
        record.object_id = "q" + zero_padded(k, id_width);
        record.true_class = plan.id;
        for (std::size_t t = 0; t < spec.tags_per_object; ++t) {
            const double u = uniform_real(rng);
            if (u < spec.mix.base) {
                record.tags.push_back(plan.base[uniform_below(rng, plan.base.size())]);
            } else if (u < spec.mix.base + spec.mix.learnable) {
                record.tags.push_back(plan.learnable[uniform_below(rng, plan.learnable.size())]);
            } else {
                record.tags.push_back(manifest.noise[uniform_below(rng, manifest.noise.size())]);
            }
        }
        records.push_back(std::move(record));
    }
    return {std::move(records), std::move(manifest)};
}

void write_corpus(std::ostream& out, const std::vector<CorpusRecord>& records) {
    for (const auto& record : records) {
        out << record.object_id << '\t' << record.true_class << '\t';
        for (std::size_t i = 0; i < record.tags.size(); ++i) {
            if (i != 0) out << ',';
            out << record.tags[i];
        }
        out << '\n';
    }
}

std::vector<CorpusRecord> read_corpus(std::istream& in) {
    std::vector<CorpusRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream fields(line);
        CorpusRecord record;
        std::string tag_list;
        if (!std::getline(fields, record.object_id, '\t') ||
            !std::getline(fields, record.true_class, '\t') || !std::getline(fields, tag_list)) {
            throw Error(ErrorCode::invalid_corpus,
                        "line " + std::to_string(line_no) + " is not id<TAB>class<TAB>tags");
        }
        if (!valid_token(record.object_id) || !valid_token(record.true_class)) {
            throw Error(ErrorCode::invalid_corpus, "bad tokens on line " + std::to_string(line_no));
        }
        std::istringstream tags(tag_list);
        std::string tag;
        while (std::getline(tags, tag, ',')) {
            if (!valid_token(tag)) {
                throw Error(ErrorCode::invalid_corpus,
                            "bad tag '" + tag + "' on line " + std::to_string(line_no));
            }
            record.tags.push_back(tag);
        }
        if (record.tags.empty()) {
            throw Error(ErrorCode::invalid_corpus, "no tags on line " + std::to_string(line_no));
        }
        records.push_back(std::move(record));
    }
    return records;
}

void write_manifest(std::ostream& out, const Manifest& manifest) {
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& plan : manifest.classes) {
        classes.push_back({{"id", plan.id}, {"base", plan.base}, {"learnable", plan.learnable}});
    }
    nlohmann::json j{{"version", manifest.version},
                     {"spec",
                      {{"num_classes", manifest.spec.num_classes},
                       {"base_per_class", manifest.spec.base_per_class},
                       {"learnable_per_class", manifest.spec.learnable_per_class},
                       {"noise_pool", manifest.spec.noise_pool},
                       {"tags_per_object", manifest.spec.tags_per_object},
                       {"num_objects", manifest.spec.num_objects},
                       {"mix_base", manifest.spec.mix.base},
                       {"mix_learnable", manifest.spec.mix.learnable},
                       {"mix_noise", manifest.spec.mix.noise},
                       {"seed", manifest.spec.seed}}},
                     {"classes", classes},
                     {"noise", manifest.noise}};
    out << j.dump(2) << '\n';
}

Manifest read_manifest(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::invalid_corpus, std::string("manifest is not valid JSON: ") + e.what());
    }
    Manifest manifest;
    try {
        manifest.version = j.at("version").get<int>();
        if (manifest.version != 1) {
            throw Error(ErrorCode::version_mismatch,
                        "manifest version " + std::to_string(manifest.version));
        }
        const auto& spec = j.at("spec");
        manifest.spec.num_classes = spec.at("num_classes").get<std::size_t>();
        manifest.spec.base_per_class = spec.at("base_per_class").get<std::size_t>();
        manifest.spec.learnable_per_class = spec.at("learnable_per_class").get<std::size_t>();
        manifest.spec.noise_pool = spec.at("noise_pool").get<std::size_t>();
        manifest.spec.tags_per_object = spec.at("tags_per_object").get<std::size_t>();
        manifest.spec.num_objects = spec.at("num_objects").get<std::size_t>();
        manifest.spec.mix.base = spec.at("mix_base").get<double>();
        manifest.spec.mix.learnable = spec.at("mix_learnable").get<double>();
        manifest.spec.mix.noise = spec.at("mix_noise").get<double>();
        manifest.spec.seed = spec.at("seed").get<std::uint64_t>();
        for (const auto& entry : j.at("classes")) {
            ClassPlan plan;
            plan.id = entry.at("id").get<std::string>();
            plan.base = entry.at("base").get<std::vector<std::string>>();
            plan.learnable = entry.at("learnable").get<std::vector<std::string>>();
            manifest.classes.push_back(std::move(plan));
        }
        manifest.noise = j.at("noise").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::invalid_corpus, std::string("bad manifest field: ") + e.what());
    }
    return manifest;
}

}  // namespace macek
