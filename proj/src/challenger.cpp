#include "cid/challenger.hpp"

#include "cid/error.hpp"
#include "cid/text.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace cid::challenger {

namespace fs = std::filesystem;

std::string_view kind_word(ChallengeKind k) noexcept {
    switch (k) {
        case ChallengeKind::Why: return "Why";
        case ChallengeKind::How: return "How";
        case ChallengeKind::Really: return "Really";
    }
    return "Why";
}

ChallengeKind parse_kind(std::string_view s) {
    const auto lower = text::to_lower_ascii(text::trim(s));
    for (auto k : kAllKinds) {
        if (lower == text::to_lower_ascii(kind_word(k))) return k;
    }
    throw PreconditionError("unknown challenge kind '" + std::string(s) + "'");
}

std::string_view stage_name(Stage s) noexcept { return s == Stage::Basic ? "basic" : "mutated"; }

Stage parse_stage(std::string_view s) {
    const auto lower = text::to_lower_ascii(text::trim(s));
    if (lower == "basic") return Stage::Basic;
    if (lower == "mutated" || lower == "mutation") return Stage::Mutated;
    throw PreconditionError("unknown stage '" + std::string(s) + "'");
}

std::string_view relation_name(Relation r) noexcept { return r == Relation::MR1 ? "MR1" : "MR2"; }

Relation parse_relation(std::string_view s) {
    const auto lower = text::to_lower_ascii(text::trim(s));
    if (lower == "mr1") return Relation::MR1;
    if (lower == "mr2") return Relation::MR2;
    throw PreconditionError("unknown metamorphic relation '" + std::string(s) + "'");
}

bool KnowledgeBase::add(std::string sentence, std::string source_id,
                        const embed::EmbeddingProvider& embedder) {
    if (text::is_blank(sentence)) throw PreconditionError("knowledge-base sentence must not be empty");
    for (const auto& e : entries_) {
        if (e.sentence == sentence) return false;
    }
    auto embedding = embedder.embed(sentence);
    entries_.push_back(KnowledgeEntry{std::move(sentence), std::move(source_id), std::move(embedding)});
    return true;
}

KnowledgeBase KnowledgeBase::from_json(const nlohmann::json& j, const embed::EmbeddingProvider& embedder,
                                       const std::string& origin) {
    if (!j.is_array()) throw SchemaError(origin, "knowledge base must be a JSON array");
    KnowledgeBase kb;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& item = j[i];
        if (!item.is_object() || !item.contains("sentence") || !item["sentence"].is_string()) {
            throw SchemaError(origin, "entry " + std::to_string(i) + " lacks a \"sentence\" string");
        }
        std::string source = item.value("source_id", std::string{});
        kb.add(item["sentence"].get<std::string>(), std::move(source), embedder);
    }
    return kb;
}

KnowledgeBase KnowledgeBase::load(const fs::path& path, const embed::EmbeddingProvider& embedder) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError("cannot read knowledge base " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    auto j = nlohmann::json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) throw SchemaError(path.string(), "knowledge base is not valid JSON");
    return from_json(j, embedder, path.string());
}

nlohmann::json KnowledgeBase::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries_) arr.push_back({{"sentence", e.sentence}, {"source_id", e.source_id}});
    return arr;
}

void KnowledgeBase::save(const fs::path& path) const {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot write knowledge base " + path.string());
    out << text::canonical_json(to_json());
}

std::vector<std::string> default_clauses() {
    return {"I heard that", "No matter what", "I do not care", "without considering"};
}

std::array<Relation, 3> default_relations() { return {Relation::MR1, Relation::MR2, Relation::MR1}; }

std::string build_generation_prompt(ChallengeKind kind, const enquirer::Explanation& explanation) {
    if (text::is_blank(explanation.body)) throw PreconditionError("explanation body must not be empty");
    return "Generate a question that starts with " + std::string(kind_word(kind)) +
           " to challenge the following " + explanation.body;
}

std::string strip_generated_question(std::string_view reply) {
    auto s = text::trim(reply);
    struct Pair {
        std::string_view open, close;
    };
    static constexpr Pair kPairs[] = {
        {"\"", "\""}, {"'", "'"}, {"`", "`"}, {"\xE2\x80\x9C", "\xE2\x80\x9D"}, {"\xE2\x80\x98", "\xE2\x80\x99"},
    };
    for (const auto& p : kPairs) {
        if (s.size() >= p.open.size() + p.close.size() && s.starts_with(p.open) && s.ends_with(p.close)) {
            s = text::trim(s.substr(p.open.size(), s.size() - p.open.size() - p.close.size()));
            break;
        }
    }
    return std::string(s);
}

std::vector<ChallengeQuestion> generate_basic_challenges(gateway::Gateway& gateway,
                                                         const gateway::GenerationParams& params,
                                                         const enquirer::Explanation& explanation,
                                                         const std::string& session_label,
                                                         std::optional<gateway::ChatSession>* session_out) {
    const std::string parent = explanation.record_id + "#" + std::to_string(explanation.index);
    std::optional<gateway::ChatSession> local;
    auto& session = session_out != nullptr ? *session_out : local;
    session.emplace(gateway.open_session(true, params, session_label));

    std::vector<ChallengeQuestion> out;
    for (auto kind : kAllKinds) {
        const auto reply = session->send(build_generation_prompt(kind, explanation));
        auto q = strip_generated_question(reply);
        if (q.empty()) {
            throw GenerationError(std::string(kind_word(kind)) + " question generation for " + parent +
                                  " returned nothing");
        }
        out.push_back(ChallengeQuestion{kind, Stage::Basic, std::move(q), parent, std::nullopt});
    }
    return out;
}

RedundantChoice select_redundant_sentence(const ChallengeQuestion& basic, Relation relation,
                                          const KnowledgeBase& kb,
                                          const std::vector<ChallengeQuestion>& peers,
                                          const embed::EmbeddingProvider& embedder) {
    const auto target = embedder.embed(basic.text);
    std::optional<RedundantChoice> best;
    auto consider = [&](std::size_t index, const std::string& sentence, const std::string& source,
                        const embed::Embedding& candidate) {
        if (sentence == basic.text) return;
        const double sim = embed::cosine_similarity(target, candidate);
        if (!best || sim > best->similarity) best = RedundantChoice{sentence, source, index, sim};
    };

    if (relation == Relation::MR1) {
        const auto& entries = kb.entries();
        for (std::size_t i = 0; i < entries.size(); ++i) {
            consider(i, entries[i].sentence, entries[i].source_id, entries[i].embedding);
        }
    } else {
        for (std::size_t i = 0; i < peers.size(); ++i) {
            const auto& p = peers[i];
            if (p.text == basic.text) continue;
            const std::string source = p.parent_explanation + "/" + std::string(kind_word(p.kind));
            consider(i, p.text, source, embedder.embed(p.text));
        }
    }
    if (!best) {
        throw NoCandidateError(std::string(relation_name(relation)) + " has no candidate sentence for '" +
                               basic.text + "'");
    }
    return *best;
}

std::string question_stem(std::string_view basic_text) {
    auto s = text::trim(basic_text);
    while (!s.empty() && s.back() == '?') s = text::trim(s.substr(0, s.size() - 1));
    return std::string(s);
}

namespace {
std::string normalize_redundant(std::string_view sentence) {
    auto s = text::trim(sentence);
    while (!s.empty() && std::string_view(".?!;:,").find(s.back()) != std::string_view::npos) {
        s = text::trim(s.substr(0, s.size() - 1));
    }
    std::string out(s);
    // Lower "How might ..." to "how might ..." but leave "NLTK ..." alone.
    if (out.size() > 1 && std::isupper(static_cast<unsigned char>(out[0])) &&
        std::islower(static_cast<unsigned char>(out[1]))) {
        out[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[0])));
    }
    return out;
}
}  // namespace

ChallengeQuestion mutate_question(const ChallengeQuestion& basic, std::string_view redundant_sentence,
                                  std::string_view clause, Relation relation, std::string source_id) {
    const auto stem = question_stem(basic.text);
    const auto redundant = normalize_redundant(redundant_sentence);
    const auto joint = std::string(text::trim(clause));
    if (stem.empty() || redundant.empty() || joint.empty()) {
        throw PreconditionError("mutation needs a question, a redundant sentence and a clause");
    }
    ChallengeQuestion out;
    out.kind = basic.kind;
    out.stage = Stage::Mutated;
    out.text = stem + " " + joint + " " + redundant + "?";
    out.parent_explanation = basic.parent_explanation;
    out.mutation = MutationInfo{relation, std::string(redundant_sentence), joint, std::move(source_id)};
    return out;
}

std::vector<ChallengeResponse> run_challenges(
    gateway::ChatSession& session, const std::vector<ChallengeQuestion>& questions,
    const std::function<void(std::size_t, const ChallengeResponse&)>& on_response) {
    std::vector<ChallengeResponse> out;
    out.reserve(questions.size());
    for (const auto& q : questions) {
        out.push_back(ChallengeResponse{q.kind, q.stage, session.send(q.text)});
        if (on_response) on_response(out.size() - 1, out.back());
    }
    return out;
}

}  // namespace cid::challenger
