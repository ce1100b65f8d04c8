// Versioned text snapshot of the whole kernel: config, scheduler state,
// registry, and per-agent sections (features, window, subconcepts, parked
// promotion sessions). Probabilities use the shortest exact decimal form so
// a restored run replays the identical trace.

#include <istream>
#include <ostream>
#include <sstream>

#include "macek/numeric_text.hpp"
#include "macek/simulation.hpp"

namespace macek {

namespace {

constexpr const char* kHeader = "macek-snapshot 1";

void require_token(const std::string& token, const char* what) {
    if (token.empty()) throw Error(ErrorCode::io_error, std::string("empty ") + what);
    for (unsigned char c : token) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            throw Error(ErrorCode::io_error,
                        std::string(what) + " '" + token + "' cannot be serialized");
        }
    }
}

std::string expect_line(std::istream& in, const char* what) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorCode::version_mismatch, std::string("snapshot truncated before ") + what);
    }
    return line;
}

std::istringstream expect_record(std::istream& in, const char* keyword) {
    std::string line = expect_line(in, keyword);
    std::istringstream fields(line);
    std::string head;
    fields >> head;
    if (head != keyword) {
        throw Error(ErrorCode::version_mismatch,
                    "expected '" + std::string(keyword) + "' record, found '" + head + "'");
    }
    return fields;
}

}  // namespace

struct SnapshotIo {
    static void save(const Simulation& sim, std::ostream& out) {
        if (!sim.quiescent()) {
            throw Error(ErrorCode::snapshot_busy,
                        "snapshot refused: messages in flight or a consultation awaiting a reply");
        }
        out << kHeader << '\n';
        out << "config " << sim.config_.to_json_string() << '\n';
        out << "state " << sim.step_ << ' ' << sim.next_query_id_ << ' ' << sim.next_session_id_
            << ' ' << sim.stale_drops_ << '\n';
        out << "rng " << sim.scheduler_ << '\n';

        out << "registry " << sim.center_.registry().size() << '\n';
        for (const auto& [f, c] : sim.center_.registry().entries()) {
            require_token(f, "feature");
            require_token(c, "class");
            out << "r " << f << ' ' << c << '\n';
        }

        out << "agents " << sim.agents_.size() << '\n';
        for (std::size_t i = 0; i < sim.agents_.size(); ++i) {
            const auto& agent = sim.agents_[i];
            const auto& runtime = sim.runtimes_[i];
            require_token(agent.class_id(), "class");
            out << "agent " << agent.class_id() << '\n';
            out << "counters " << agent.dispatches_processed() << ' ' << agent.epochs_completed()
                << ' ' << runtime.stats.opened << ' ' << runtime.stats.committed << ' '
                << runtime.stats.aborted << ' ' << runtime.epoch_mark.opened << ' '
                << runtime.epoch_mark.committed << ' ' << runtime.epoch_mark.aborted << '\n';

            out << "features " << agent.collection().size() << '\n';
            for (const auto& [f, p] : agent.collection().entries()) {
                require_token(f, "feature");
                out << "f " << f << ' ' << format_probability(p) << '\n';
            }

            out << "tim " << agent.tim().window_size() << ' ' << agent.tim().slot_count() << '\n';
            for (const auto& slot : agent.tim().slots()) {
                out << "s " << slot.size();
                for (const auto& f : slot) {
                    require_token(f, "tag");
                    out << ' ' << f;
                }
                out << '\n';
            }

            out << "subconcepts " << agent.subconcepts().size() << '\n';
            for (const auto& sub : agent.subconcepts()) {
                require_token(sub.name, "subconcept name");
                out << "c " << sub.name << ' ' << sub.members.size();
                for (const auto& f : sub.members) out << ' ' << f;
                out << '\n';
            }

            out << "parked " << runtime.sessions.size() << '\n';
            for (const auto& [f, session] : runtime.sessions) {
                out << "p " << f << ' ' << session.id() << ' ' << session.owner_target() << ' '
                    << session.rounds() << '\n';
            }
            out << "end-agent\n";
        }
        out << "end-snapshot\n";
        if (!out) throw Error(ErrorCode::io_error, "snapshot write failed");
    }

    static std::unique_ptr<Simulation> restore(std::istream& in) {
        if (expect_line(in, "header") != kHeader) {
            throw Error(ErrorCode::version_mismatch, "not a macek snapshot, or wrong version");
        }
        std::string config_line = expect_line(in, "config");
        if (config_line.rfind("config ", 0) != 0) {
            throw Error(ErrorCode::version_mismatch, "missing config record");
        }
        ScenarioConfig config = ScenarioConfig::from_json_string(config_line.substr(7));

        std::uint64_t step = 0, next_query = 0, next_session = 0, stale = 0;
        {
            auto fields = expect_record(in, "state");
            if (!(fields >> step >> next_query >> next_session >> stale)) {
                throw Error(ErrorCode::version_mismatch, "bad state record");
            }
        }
        std::mt19937_64 scheduler;
        {
            std::string line = expect_line(in, "rng");
            if (line.rfind("rng ", 0) != 0) {
                throw Error(ErrorCode::version_mismatch, "missing rng record");
            }
            std::istringstream fields(line.substr(4));
            fields >> scheduler;
            if (fields.fail()) throw Error(ErrorCode::version_mismatch, "bad rng record");
        }

        std::size_t registry_count = 0;
        {
            auto fields = expect_record(in, "registry");
            fields >> registry_count;
        }
        std::vector<std::pair<FeatureId, ClassId>> registry_entries(registry_count);
        for (auto& [f, c] : registry_entries) {
            auto fields = expect_record(in, "r");
            if (!(fields >> f >> c)) throw Error(ErrorCode::version_mismatch, "bad registry record");
        }

        std::size_t agent_count = 0;
        {
            auto fields = expect_record(in, "agents");
            fields >> agent_count;
        }

        struct AgentSection {
            ClassId class_id;
            std::uint64_t dispatches = 0, epochs = 0;
            SessionStats stats, epoch_mark;
            std::vector<std::pair<FeatureId, double>> features;
            std::size_t window = 0;
            std::vector<std::vector<FeatureId>> slots;
            std::vector<SubConcept> subconcepts;
            struct Parked {
                FeatureId feature;
                std::uint64_t id = 0;
                int owner = kCenter;
                int rounds = 0;
            };
            std::vector<Parked> parked;
        };

        std::vector<AgentSection> sections(agent_count);
        for (auto& section : sections) {
            {
                auto fields = expect_record(in, "agent");
                if (!(fields >> section.class_id)) {
                    throw Error(ErrorCode::version_mismatch, "bad agent record");
                }
            }
            {
                auto fields = expect_record(in, "counters");
                if (!(fields >> section.dispatches >> section.epochs >> section.stats.opened >>
                      section.stats.committed >> section.stats.aborted >>
                      section.epoch_mark.opened >> section.epoch_mark.committed >>
                      section.epoch_mark.aborted)) {
                    throw Error(ErrorCode::version_mismatch, "bad counters record");
                }
            }
            std::size_t feature_count = 0;
            expect_record(in, "features") >> feature_count;
            section.features.resize(feature_count);
            for (auto& [f, p] : section.features) {
                auto fields = expect_record(in, "f");
                std::string prob;
                if (!(fields >> f >> prob)) {
                    throw Error(ErrorCode::version_mismatch, "bad feature record");
                }
                p = parse_probability(prob);
            }
            std::size_t slot_count = 0;
            {
                auto fields = expect_record(in, "tim");
                if (!(fields >> section.window >> slot_count)) {
                    throw Error(ErrorCode::version_mismatch, "bad tim record");
                }
            }
            section.slots.resize(slot_count);
            for (auto& slot : section.slots) {
                auto fields = expect_record(in, "s");
                std::size_t n = 0;
                fields >> n;
                slot.resize(n);
                for (auto& f : slot) {
                    if (!(fields >> f)) throw Error(ErrorCode::version_mismatch, "bad slot record");
                }
            }
            std::size_t sub_count = 0;
            expect_record(in, "subconcepts") >> sub_count;
            section.subconcepts.resize(sub_count);
            for (auto& sub : section.subconcepts) {
                auto fields = expect_record(in, "c");
                std::size_t n = 0;
                fields >> sub.name >> n;
                for (std::size_t j = 0; j < n; ++j) {
                    FeatureId f;
                    if (!(fields >> f)) {
                        throw Error(ErrorCode::version_mismatch, "bad subconcept record");
                    }
                    sub.members.insert(std::move(f));
                }
            }
            std::size_t parked_count = 0;
            expect_record(in, "parked") >> parked_count;
            section.parked.resize(parked_count);
            for (auto& parked : section.parked) {
                auto fields = expect_record(in, "p");
                if (!(fields >> parked.feature >> parked.id >> parked.owner >> parked.rounds)) {
                    throw Error(ErrorCode::version_mismatch, "bad parked-session record");
                }
            }
            expect_record(in, "end-agent");
        }
        expect_record(in, "end-snapshot");

        // Rebuild: empty bootstrap under the saved config, then splice the
        // recorded state back in.
        std::vector<std::pair<ClassId, std::set<FeatureId>>> empty_sets;
        empty_sets.reserve(sections.size());
        for (const auto& section : sections) empty_sets.emplace_back(section.class_id, std::set<FeatureId>{});
        auto sim = std::unique_ptr<Simulation>(new Simulation(empty_sets, config));

        sim->step_ = step;
        sim->next_query_id_ = next_query;
        sim->next_session_id_ = next_session;
        sim->stale_drops_ = stale;
        sim->scheduler_ = scheduler;
        for (const auto& [f, c] : registry_entries) sim->center_.registry().commit(f, c);

        for (std::size_t i = 0; i < sections.size(); ++i) {
            auto& section = sections[i];
            auto& agent = sim->agents_[i];
            auto& runtime = sim->runtimes_[i];
            for (const auto& [f, p] : section.features) agent.collection().set_probability(f, p);
            TimeIntervalMemory tim(section.window);
            for (const auto& slot : section.slots) tim.record(slot);
            agent.restore_tim(std::move(tim));
            agent.set_subconcepts(std::move(section.subconcepts));
            agent.restore_counters(section.dispatches, section.epochs);
            runtime.stats = section.stats;
            runtime.epoch_mark = section.epoch_mark;
            for (const auto& parked : section.parked) {
                agent.hold_for_promotion(parked.feature);
                runtime.sessions.emplace(
                    parked.feature,
                    PromotionSession::restore_parked(parked.id, static_cast<int>(i),
                                                     section.class_id, parked.feature,
                                                     config.consultation, config.round_cap,
                                                     &sim->roster_, parked.owner, parked.rounds));
            }
        }
        return sim;
    }
};

void Simulation::save_snapshot(std::ostream& out) const { SnapshotIo::save(*this, out); }

std::unique_ptr<Simulation> Simulation::restore_snapshot(std::istream& in) {
    return SnapshotIo::restore(in);
}

}  // namespace macek
