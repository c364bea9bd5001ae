#pragma once
// The materialized state of one interrogation and its canonical JSON form.

#include "cid/challenger.hpp"
#include "cid/enquirer.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace cid {

inline constexpr int kSchemaVersion = 1;

struct ChallengeExchange {
    challenger::ChallengeQuestion question;
    /// Absent when the turn was never completed (quarantined record).
    std::optional<std::string> response;

    bool operator==(const ChallengeExchange&) const = default;
};

struct MutationSkip {
    challenger::ChallengeKind kind;
    std::string reason;

    bool operator==(const MutationSkip&) const = default;
};

struct ExplanationTrace {
    enquirer::Explanation explanation;
    std::string generation_session;
    /// Canonical Why, How, Really order in both lists.
    std::vector<ChallengeExchange> basic;
    std::vector<ChallengeExchange> mutated;
    std::vector<MutationSkip> mutation_skips;

    /// 3 basic and 3 mutated exchanges, all answered.
    bool complete() const noexcept;
    std::string ref() const;  // "<record_id>#<index>"

    bool operator==(const ExplanationTrace&) const = default;
};

enum class RecordStatus { Complete, Quarantined };

struct InterrogationRecord {
    std::string record_id;
    enquirer::BaseQuery base_query;
    std::string backend_id;
    std::string model_name;

    std::string base_prompt;
    std::optional<std::string> base_response;
    std::string enquiry_prompt;
    std::optional<std::string> enquiry_response;
    std::vector<ExplanationTrace> explanations;

    std::string interrogation_session;
    /// Path of the JSONL transcript relative to the store root.
    std::string transcript;

    RecordStatus status = RecordStatus::Complete;
    /// Name of the stage that failed; empty when complete.
    std::string failed_stage;
    std::string error;

    /// ISO-8601 UTC; empty when the run used a deterministic clock.
    std::string started_at;
    std::string finished_at;

    /// Throws SchemaError(origin, ...) on a broken invariant.
    void validate(const std::string& origin = "record") const;
    std::size_t challenge_response_count() const noexcept;

    bool operator==(const InterrogationRecord&) const = default;
};

nlohmann::json to_json(const enquirer::BaseQuery& q);
enquirer::BaseQuery base_query_from_json(const nlohmann::json& j, const std::string& origin);

nlohmann::json to_json(const InterrogationRecord& r);
InterrogationRecord record_from_json(const nlohmann::json& j, const std::string& origin);

}  // namespace cid
