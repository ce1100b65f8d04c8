#include <doctest.h>

#include <algorithm>
#include <random>

#include "macek/center_agent.hpp"
#include "macek/errors.hpp"

using namespace macek;

namespace {

CenterAgent make_center(std::vector<std::pair<FeatureId, ClassId>> owners,
                        std::vector<ClassId> classes, DispatchPolicy policy = {},
                        MixRule mix = MixRule::product, double eps = 0.01) {
    CenterAgent center(std::move(classes), policy, mix, eps);
    for (const auto& [f, c] : owners) center.registry().commit(f, c);
    return center;
}

}  // namespace

TEST_CASE("bootstrap plants base features at the K floor and fills the registry") {
    auto result = bootstrap({{"C1", {"a", "b"}}, {"C2", {"c"}}, {"C3", {}}},
                            Thresholds(0.7, 0.3), LearningParams{});
    CHECK(result.center.registry().owner("a") == ClassId("C1"));
    CHECK(result.center.registry().owner("b") == ClassId("C1"));
    CHECK(result.center.registry().owner("c") == ClassId("C2"));
    REQUIRE(result.agents.size() == 3);
    CHECK(result.agents[0].collection().probability("a") == 0.7);
    CHECK(result.agents[0].collection().region_of("a") == Region::K);
    CHECK(result.agents[1].collection().probability("c") == 0.7);
    CHECK(result.agents[2].collection().size() == 0);  // degenerate class is fine
}

TEST_CASE("bootstrap rejects overlapping base sets, naming both classes") {
    try {
        bootstrap({{"C1", {"a"}}, {"C2", {"a"}}}, Thresholds(0.7, 0.3), LearningParams{});
        FAIL("expected feature_overlap");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::feature_overlap);
        std::string what = e.what();
        CHECK(what.find("a") != std::string::npos);
        CHECK(what.find("C1") != std::string::npos);
        CHECK(what.find("C2") != std::string::npos);
    }
    CHECK_THROWS_AS(bootstrap({{"C1", {}}, {"C1", {}}}, Thresholds(0.7, 0.3), LearningParams{}),
                    Error);
}

TEST_CASE("confidence is the owned fraction of distinct tags") {
    auto center = make_center({{"a", "C1"}, {"b", "C1"}}, {"C1", "C2"});
    CHECK(center.confidence({"a", "b", "c", "d"}, "C1").value == 0.5);
    CHECK(center.confidence({"a", "b", "c", "d"}, "C2").value == 0.0);
    CHECK(center.confidence({"a"}, "C1").value == 1.0);
    CHECK(center.confidence({"a", "a", "b"}, "C1").value == 1.0);  // duplicates collapse
    CHECK_THROWS_AS(center.confidence({}, "C1"), Error);
}

TEST_CASE("dispatch keeps the k highest nonzero-confidence classes") {
    DispatchPolicy policy;
    policy.top_k = 2;
    auto center = make_center({{"a", "C1"}, {"b", "C1"}, {"c", "C2"}}, {"C1", "C2", "C3"}, policy);
    auto targets = center.dispatch({"a", "b", "c", "z"});
    REQUIRE(targets.size() == 2);
    CHECK(targets[0].class_id == "C1");
    CHECK(targets[0].confidence == 0.5);
    CHECK(targets[1].class_id == "C2");
    CHECK(targets[1].confidence == 0.25);
    CHECK_FALSE(targets[0].fallback);
}

TEST_CASE("dispatch falls back to a full broadcast when nothing matches") {
    auto center = make_center({{"a", "C1"}}, {"C1", "C2", "C3"});
    auto targets = center.dispatch({"unknown1", "unknown2"});
    REQUIRE(targets.size() == 3);
    for (const auto& t : targets) {
        CHECK(t.confidence == 0.0);
        CHECK(t.fallback);
    }
}

TEST_CASE("dispatch ties break toward the lower class identifier") {
    DispatchPolicy policy;
    policy.top_k = 1;
    auto center = make_center({{"a", "C2"}, {"b", "C1"}}, {"C1", "C2"}, policy);
    auto targets = center.dispatch({"a", "b"});  // both classes at 0.5
    REQUIRE(targets.size() == 1);
    CHECK(targets[0].class_id == "C1");
}

TEST_CASE("min_conf policy keeps every class at or above the bar") {
    DispatchPolicy policy;
    policy.kind = DispatchPolicy::Kind::min_conf;
    policy.min_conf = 0.5;
    auto center = make_center({{"a", "C1"}, {"b", "C2"}, {"c", "C3"}}, {"C1", "C2", "C3"}, policy);
    auto targets = center.dispatch({"a", "b"});
    REQUIRE(targets.size() == 2);  // C1 and C2 at 0.5; C3 at 0
    CHECK(targets[0].class_id == "C1");
    CHECK(targets[1].class_id == "C2");
}

TEST_CASE("dispatch output is never empty and bounded by the policy") {
    std::mt19937_64 rng(3);
    DispatchPolicy policy;
    policy.top_k = 3;
    auto center = make_center({{"f0", "C1"}, {"f1", "C2"}, {"f2", "C3"}, {"f3", "C4"}},
                              {"C1", "C2", "C3", "C4", "C5"}, policy);
    std::vector<FeatureId> pool{"f0", "f1", "f2", "f3", "u0", "u1", "u2"};
    for (int i = 0; i < 200; ++i) {
        TagCollection tags;
        std::size_t n = 1 + rng() % 4;
        for (std::size_t j = 0; j < n; ++j) tags.push_back(pool[rng() % pool.size()]);
        auto targets = center.dispatch(tags);
        CHECK(!targets.empty());
        CHECK(targets.size() <= std::max<std::size_t>(3, center.classes().size()));
    }
}

TEST_CASE("aggregate multiplies confidence into the class score and sorts") {
    auto center = make_center({}, {"C1", "C2"});
    ResultPackage r1{"C1", 0.4, {}, {}};
    ResultPackage r2{"C2", 0.9, {}, {}};
    auto vec = center.aggregate({{r1, {"C1", 0.5, false}}, {r2, {"C2", 0.1, false}}});
    REQUIRE(vec.size() == 2);
    CHECK(vec[0].first == "C1");
    CHECK(vec[0].second == 0.5 * 0.4);
    CHECK(vec[1].first == "C2");
    CHECK(vec[1].second == 0.1 * 0.9);
}

TEST_CASE("aggregate: single result, ties, duplicates, fallback weight") {
    auto center = make_center({}, {"C1", "C2"});
    ResultPackage solo{"C2", 0.5, {}, {}};
    auto vec = center.aggregate({{solo, {"C2", 0.8, false}}});
    REQUIRE(vec.size() == 1);
    CHECK(vec[0].first == "C2");

    ResultPackage a{"C1", 0.4, {}, {}};
    ResultPackage b{"C2", 0.4, {}, {}};
    auto tied = center.aggregate({{b, {"C2", 0.5, false}}, {a, {"C1", 0.5, false}}});
    CHECK(tied[0].first == "C1");  // equal likelihoods, lower id first

    CHECK_THROWS_AS(center.aggregate({{a, {"C1", 0.5, false}}, {a, {"C1", 0.5, false}}}), Error);

    auto fb = center.aggregate({{a, {"C1", 0.0, true}}});
    CHECK(fb[0].second == 0.01 * 0.4);  // epsilon_fb replaces the zero confidence
}

TEST_CASE("aggregate is permutation invariant") {
    std::mt19937_64 rng(17);
    auto center = make_center({}, {"C1", "C2", "C3", "C4"});
    std::vector<std::pair<ResultPackage, DispatchTarget>> results;
    int i = 0;
    for (const auto& c : center.classes()) {
        double score = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        double conf = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        results.push_back({ResultPackage{c, score, {}, {}}, DispatchTarget{c, conf, false}});
        ++i;
    }
    auto expected = center.aggregate(results);
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(results.begin(), results.end(), rng);
        CHECK(center.aggregate(results) == expected);
    }
}

TEST_CASE("sum and max mixing rules stay within [0,1]") {
    auto sum_center = make_center({}, {"C1"}, {}, MixRule::sum);
    ResultPackage r{"C1", 0.9, {}, {}};
    auto vec = sum_center.aggregate({{r, {"C1", 0.8, false}}});
    CHECK(vec[0].second == 1.0);  // clamped sum

    auto max_center = make_center({}, {"C1"}, {}, MixRule::max);
    auto mx = max_center.aggregate({{r, {"C1", 0.8, false}}});
    CHECK(mx[0].second == 0.9);
}

TEST_CASE("registry commit arbitration: first wins, idempotent re-commit") {
    BaseFeatureRegistry registry;
    CHECK(registry.commit("f", "C3") == BaseFeatureRegistry::Commit::ok);
    CHECK(registry.commit("f", "C1") == BaseFeatureRegistry::Commit::conflict);
    CHECK(registry.owner("f") == ClassId("C3"));
    CHECK(registry.commit("f", "C3") == BaseFeatureRegistry::Commit::ok);
}

TEST_CASE("registry remove is owner-guarded") {
    BaseFeatureRegistry registry;
    registry.commit("f", "C1");
    registry.remove("f", "C2");  // stale notice, no-op
    CHECK(registry.owner("f") == ClassId("C1"));
    registry.remove("f", "C1");
    CHECK_FALSE(registry.owner("f").has_value());
    registry.remove("f", "C1");  // removing an unowned feature is a no-op
    CHECK(registry.size() == 0);
}

TEST_CASE("registry stays a function under random commit/remove interleavings") {
    std::mt19937_64 rng(29);
    BaseFeatureRegistry registry;
    std::vector<FeatureId> features{"f0", "f1", "f2"};
    std::vector<ClassId> classes{"C1", "C2", "C3"};
    for (int step = 0; step < 2000; ++step) {
        const auto& f = features[rng() % features.size()];
        const auto& c = classes[rng() % classes.size()];
        if (rng() % 2 == 0) {
            registry.commit(f, c);
        } else {
            registry.remove(f, c);
        }
        CHECK(registry.size() <= features.size());
    }
}

TEST_CASE("confidence rank is monotone when an owned tag replaces an unowned one") {
    std::mt19937_64 rng(41);
    auto center = make_center({{"a0", "C1"}, {"a1", "C1"}, {"b0", "C2"}, {"b1", "C2"}},
                              {"C1", "C2"});
    for (int trial = 0; trial < 100; ++trial) {
        TagCollection tags{"u0", "u1"};
        if (rng() % 2) tags.push_back("b0");
        double before = center.confidence(tags, "C1").value;
        double rival_before = center.confidence(tags, "C2").value;
        TagCollection swapped = tags;
        swapped[0] = "a0";  // replace an unowned tag, |set(tags)| unchanged
        double after = center.confidence(swapped, "C1").value;
        double rival_after = center.confidence(swapped, "C2").value;
        CHECK(after >= before);
        CHECK(rival_after == rival_before);
    }
}

TEST_CASE("policy validation") {
    DispatchPolicy ok;
    CHECK_NOTHROW(ok.validate());
    DispatchPolicy bad;
    bad.kind = DispatchPolicy::Kind::min_conf;
    bad.min_conf = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad.min_conf = 1.5;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("auto top_k resolves to min(3, M)") {
    auto small = make_center({}, {"C1", "C2"});
    CHECK(small.resolved_top_k() == 2);
    auto big = make_center({}, {"C1", "C2", "C3", "C4"});
    CHECK(big.resolved_top_k() == 3);
}
