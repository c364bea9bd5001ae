#pragma once
// Challenge questions: generation in an isolated session, metamorphic
// mutation by redundant-clause insertion, and asking them.

#include "cid/embed/embedder.hpp"
#include "cid/enquirer.hpp"
#include "cid/gateway/chat.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cid::challenger {

enum class ChallengeKind { Why = 0, How = 1, Really = 2 };
inline constexpr std::array<ChallengeKind, 3> kAllKinds = {ChallengeKind::Why, ChallengeKind::How,
                                                          ChallengeKind::Really};

enum class Stage { Basic, Mutated };

/// MR1 draws the redundant sentence from a knowledge base, MR2 from the
/// other basic challenge questions.
enum class Relation { MR1, MR2 };

std::string_view kind_word(ChallengeKind k) noexcept;  // "Why", "How", "Really"
ChallengeKind parse_kind(std::string_view s);          // case-insensitive
std::string_view stage_name(Stage s) noexcept;         // "basic", "mutated"
Stage parse_stage(std::string_view s);
std::string_view relation_name(Relation r) noexcept;   // "MR1", "MR2"
Relation parse_relation(std::string_view s);

struct MutationInfo {
    Relation relation = Relation::MR1;
    std::string redundant_sentence;
    std::string clause;
    std::string source_id;

    bool operator==(const MutationInfo&) const = default;
};

struct ChallengeQuestion {
    ChallengeKind kind = ChallengeKind::Why;
    Stage stage = Stage::Basic;
    std::string text;
    /// "<record_id>#<explanation index>"
    std::string parent_explanation;
    /// Present exactly when stage == Mutated.
    std::optional<MutationInfo> mutation;

    bool operator==(const ChallengeQuestion&) const = default;
};

struct ChallengeResponse {
    ChallengeKind kind;
    Stage stage;
    std::string text;

    bool operator==(const ChallengeResponse&) const = default;
};

struct KnowledgeEntry {
    std::string sentence;
    std::string source_id;
    embed::Embedding embedding;
};

class KnowledgeBase {
public:
    /// Returns false (and keeps the first) when the sentence is already present.
    bool add(std::string sentence, std::string source_id, const embed::EmbeddingProvider& embedder);

    const std::vector<KnowledgeEntry>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t size() const noexcept { return entries_.size(); }

    /// JSON array of {"sentence","source_id"}; embeddings are computed on load.
    static KnowledgeBase load(const std::filesystem::path& path, const embed::EmbeddingProvider& embedder);
    static KnowledgeBase from_json(const nlohmann::json& j, const embed::EmbeddingProvider& embedder,
                                   const std::string& origin = "knowledge base");
    nlohmann::json to_json() const;
    void save(const std::filesystem::path& path) const;

private:
    std::vector<KnowledgeEntry> entries_;
};

/// Default subordinate clauses. A question of kind k uses clauses[k % size].
std::vector<std::string> default_clauses();
/// Default MR per kind: Why=MR1, How=MR2, Really=MR1.
std::array<Relation, 3> default_relations();

std::string build_generation_prompt(ChallengeKind kind, const enquirer::Explanation& explanation);

/// Trims whitespace, removes one symmetric pair of wrapping quotes, trims again.
std::string strip_generated_question(std::string_view reply);

/// Opens one fresh session (id `session_label`) and asks it for the Why,
/// How and Really questions in that order. Throws GenerationError on an empty
/// reply; `session_out` receives the session either way.
std::vector<ChallengeQuestion> generate_basic_challenges(gateway::Gateway& gateway,
                                                         const gateway::GenerationParams& params,
                                                         const enquirer::Explanation& explanation,
                                                         const std::string& session_label,
                                                         std::optional<gateway::ChatSession>* session_out = nullptr);

struct RedundantChoice {
    std::string sentence;
    std::string source_id;
    std::size_t candidate_index = 0;
    double similarity = 0.0;
};

/// Argmax-cosine candidate against embed(basic.text); ties go to the lowest
/// index. MR1 candidates are the knowledge-base sentences, MR2 candidates the
/// peer questions. Candidates whose text equals the basic question are
/// excluded. Throws NoCandidateError when nothing is left.
RedundantChoice select_redundant_sentence(const ChallengeQuestion& basic, Relation relation,
                                          const KnowledgeBase& kb,
                                          const std::vector<ChallengeQuestion>& peers,
                                          const embed::EmbeddingProvider& embedder);

/// The basic question without its trailing '?' and whitespace. This stem
/// appears verbatim at the start of every mutation.
std::string question_stem(std::string_view basic_text);

/// stem + " " + clause + " " + redundant sentence (trailing punctuation
/// dropped, leading capital lowered for ordinary words) + "?".
ChallengeQuestion mutate_question(const ChallengeQuestion& basic, std::string_view redundant_sentence,
                                  std::string_view clause, Relation relation, std::string source_id);

/// Asks each question in order in `session` and pairs replies positionally.
/// `on_response`, when given, sees each reply as soon as it arrives, so a
/// caller keeps the answered prefix if a later turn fails.
std::vector<ChallengeResponse> run_challenges(
    gateway::ChatSession& session, const std::vector<ChallengeQuestion>& questions,
    const std::function<void(std::size_t, const ChallengeResponse&)>& on_response = {});

}  // namespace cid::challenger
