#include "cid/pipeline.hpp"

#include "cid/error.hpp"
#include "cid/text.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <map>
#include <mutex>
#include <thread>

namespace cid::pipeline {

namespace ch = challenger;

std::string make_record_id(std::size_t index, const enquirer::BaseQuery& q) {
    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "%04zu", index);
    std::string slug;
    for (char c : q.context.source_id) {
        const auto u = static_cast<unsigned char>(c);
        slug.push_back(std::isalnum(u) || c == '-' || c == '_' ? c : '_');
        if (slug.size() == 48) break;
    }
    return slug.empty() ? std::string(prefix) : std::string(prefix) + "-" + slug;
}

namespace {

struct Stage {
    const char* name;
};

constexpr Stage kBase{"base"};
constexpr Stage kEnquiry{"enquiry"};
constexpr Stage kExplanations{"explanation_parse"};
constexpr Stage kGeneration{"generation"};
constexpr Stage kMutation{"mutation"};
constexpr Stage kChallenge{"challenge"};

struct StageFailure {
    const char* stage;
    std::string what;
};

template <class F>
auto run_stage(Stage s, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw StageFailure{s.name, e.what()};
    }
}

/// Returns the chosen redundant sentence, falling back from MR1 to MR2 when
/// the knowledge base has nothing to offer.
std::optional<ch::ChallengeQuestion> mutate_one(const ch::ChallengeQuestion& basic, ch::Relation relation,
                                                const std::string& clause, const ch::KnowledgeBase& kb,
                                                const std::vector<ch::ChallengeQuestion>& peers,
                                                const embed::EmbeddingProvider& embedder, std::string& skip) {
    std::vector<ch::Relation> order{relation};
    if (relation == ch::Relation::MR1) order.push_back(ch::Relation::MR2);
    for (auto r : order) {
        try {
            const auto choice = ch::select_redundant_sentence(basic, r, kb, peers, embedder);
            return ch::mutate_question(basic, choice.sentence, clause, r, choice.source_id);
        } catch (const NoCandidateError& e) {
            skip = e.what();
        }
    }
    return std::nullopt;
}

}  // namespace

Interrogation interrogate(const enquirer::BaseQuery& query, const std::string& record_id,
                          const PipelineConfig& config, const Dependencies& deps) {
    if (config.clauses.empty()) throw PreconditionError("at least one clause is required");
    query.validate();

    Interrogation out;
    auto& rec = out.record;
    rec.record_id = record_id;
    rec.base_query = query;
    rec.backend_id = deps.gateway.backend()->id();
    rec.model_name = config.params.model_name;
    rec.transcript = store::BenchmarkStore::transcript_relpath(record_id);
    if (config.clock) rec.started_at = config.clock();

    auto session = deps.gateway.open_session(true, config.params, record_id + "/interrogate");
    rec.interrogation_session = session.id();
    std::vector<std::optional<gateway::ChatSession>> generation_sessions;

    ch::KnowledgeBase kb;
    if (deps.knowledge_base != nullptr) kb = *deps.knowledge_base;

    try {
        rec.base_prompt = enquirer::build_base_prompt(query);
        rec.base_response = run_stage(kBase, [&] { return session.send(rec.base_prompt); });

        rec.enquiry_prompt = enquirer::build_enquiry_prompt(query, *rec.base_response, config.enquiry_style);
        rec.enquiry_response = run_stage(kEnquiry, [&] { return session.send(rec.enquiry_prompt); });

        const auto explanations =
            run_stage(kExplanations, [&] { return enquirer::parse_explanations(*rec.enquiry_response, record_id); });

        for (const auto& e : explanations) {
            auto& trace = rec.explanations.emplace_back();
            trace.explanation = e;
            trace.generation_session = record_id + "/generate-" + std::to_string(e.index);

            auto& gen = generation_sessions.emplace_back();
            const auto basic = run_stage(kGeneration, [&] {
                return ch::generate_basic_challenges(deps.gateway, config.generator_params, e,
                                                     trace.generation_session, &gen);
            });
            for (const auto& q : basic) trace.basic.push_back(ChallengeExchange{q, std::nullopt});

            std::vector<ch::ChallengeQuestion> mutated;
            run_stage(kMutation, [&] {
                for (const auto& q : basic) {
                    const auto k = static_cast<std::size_t>(q.kind);
                    std::string skip;
                    auto m = mutate_one(q, config.relations[k], config.clauses[k % config.clauses.size()], kb,
                                        basic, deps.embedder, skip);
                    if (m) {
                        mutated.push_back(std::move(*m));
                    } else {
                        trace.mutation_skips.push_back(MutationSkip{q.kind, skip});
                    }
                }
                return 0;
            });
            // Features need all three; a partial set is not worth asking about.
            if (!trace.mutation_skips.empty()) mutated.clear();
            for (const auto& q : mutated) trace.mutated.push_back(ChallengeExchange{q, std::nullopt});

            std::vector<ch::ChallengeQuestion> asked = basic;
            asked.insert(asked.end(), mutated.begin(), mutated.end());
            run_stage(kChallenge, [&] {
                return ch::run_challenges(session, asked, [&](std::size_t i, const ch::ChallengeResponse& r) {
                    auto& slot = i < 3 ? trace.basic[i] : trace.mutated[i - 3];
                    slot.response = r.text;
                });
            });

            for (const auto& q : basic) {
                kb.add(q.text, q.parent_explanation + "/" + std::string(ch::kind_word(q.kind)), deps.embedder);
            }
        }
    } catch (const StageFailure& f) {
        rec.status = RecordStatus::Quarantined;
        rec.failed_stage = f.stage;
        rec.error = f.what;
    }

    out.transcript = gateway::record_transcript(session);
    for (const auto& g : generation_sessions) {
        if (!g) continue;
        auto part = gateway::record_transcript(*g);
        out.transcript.insert(out.transcript.end(), part.begin(), part.end());
    }
    if (config.clock) rec.finished_at = config.clock();
    return out;
}

nlohmann::json BatchReport::to_json() const {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json j{{"record_id", e.record_id},
                         {"status", e.status == RecordStatus::Complete ? "complete" : "quarantined"},
                         {"explanations", e.explanations}};
        if (!e.failed_stage.empty()) j["failed_stage"] = e.failed_stage;
        if (!e.error.empty()) j["error"] = e.error;
        list.push_back(std::move(j));
    }
    return {{"completed", completed},
            {"quarantined", quarantined},
            {"failed", failed},
            {"explanation_count", explanation_count},
            {"records", std::move(list)}};
}

BatchReport run_benchmark(const std::vector<enquirer::BaseQuery>& queries, const PipelineConfig& config,
                          const Dependencies& deps, const store::BenchmarkStore& store) {
    BatchReport report;
    report.entries.resize(queries.size());
    std::vector<std::vector<ch::ChallengeQuestion>> corpus(queries.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < queries.size(); i = next++) {
            auto& entry = report.entries[i];
            entry.record_id = make_record_id(i, queries[i]);
            try {
                auto result = interrogate(queries[i], entry.record_id, config, deps);
                store.save_transcript(entry.record_id, result.transcript);
                store.save_record(result.record);
                entry.status = result.record.status;
                entry.failed_stage = result.record.failed_stage;
                entry.error = result.record.error;
                entry.explanations = result.record.explanations.size();
                for (const auto& t : result.record.explanations) {
                    for (const auto& x : t.basic) corpus[i].push_back(x.question);
                }
            } catch (const std::exception& e) {
                entry.status = RecordStatus::Quarantined;
                entry.failed_stage = "store";
                entry.error = e.what();
            }
        }
    };

    const std::size_t n_threads = std::clamp<std::size_t>(config.concurrency, 1, std::max<std::size_t>(queries.size(), 1));
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    for (const auto& e : report.entries) {
        if (e.failed_stage == "store") {
            ++report.failed;
        } else if (e.status == RecordStatus::Complete) {
            ++report.completed;
        } else {
            ++report.quarantined;
        }
        report.explanation_count += e.explanations;
    }

    ch::KnowledgeBase kb;
    if (deps.knowledge_base != nullptr) kb = *deps.knowledge_base;
    for (const auto& list : corpus) {
        for (const auto& q : list) {
            kb.add(q.text, q.parent_explanation + "/" + std::string(ch::kind_word(q.kind)), deps.embedder);
        }
    }
    kb.save(store.root() / "knowledge_base.json");
    return report;
}

nlohmann::json DetectionReport::to_json() const {
    nlohmann::json list = nlohmann::json::array();
    const auto names = decider::feature_names();
    for (const auto& v : verdicts) {
        nlohmann::json j{{"explanation_index", v.explanation_index}, {"explanation_ref", v.explanation_ref}};
        if (v.prediction) {
            j["label"] = decider::label_name(v.prediction->label);
            j["score"] = v.prediction->score;
        }
        if (v.features) {
            nlohmann::json f = nlohmann::json::object();
            for (std::size_t i = 0; i < names.size(); ++i) f[names[i]] = v.features->values[i];
            j["features"] = std::move(f);
        }
        if (!v.skip_reason.empty()) j["skipped"] = v.skip_reason;
        list.push_back(std::move(j));
    }
    nlohmann::json out{{"record_id", record_id}, {"verdicts", std::move(list)}};
    if (!reason.empty()) out["skipped"] = reason;
    return out;
}

DetectionReport detect(const InterrogationRecord& record, const decider::DetectionModel& model,
                       const embed::EmbeddingProvider& embedder) {
    const auto canonical = decider::feature_names();
    std::vector<std::size_t> columns;
    for (const auto& name : model.feature_names) {
        const auto it = std::find(canonical.begin(), canonical.end(), name);
        if (it == canonical.end()) throw PreconditionError("model uses unknown feature '" + name + "'");
        columns.push_back(static_cast<std::size_t>(it - canonical.begin()));
    }

    DetectionReport out;
    out.record_id = record.record_id;
    if (record.status == RecordStatus::Quarantined) {
        out.reason = "record quarantined at stage " + record.failed_stage;
        return out;
    }
    for (const auto& trace : record.explanations) {
        Verdict v;
        v.explanation_index = trace.explanation.index;
        v.explanation_ref = trace.ref();
        try {
            const auto fv = decider::extract_features(trace, embedder);
            std::vector<double> x;
            x.reserve(columns.size());
            for (auto c : columns) x.push_back(fv.values[c]);
            v.prediction = decider::predict(model, x);
            v.features = fv;
        } catch (const Error& e) {
            v.skip_reason = e.what();
        }
        out.verdicts.push_back(std::move(v));
    }
    return out;
}

}  // namespace cid::pipeline
