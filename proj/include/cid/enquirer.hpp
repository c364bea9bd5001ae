#pragma once
// Base question, base response, and splitting the response into explanations.

#include "cid/gateway/chat.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cid::enquirer {

/// Library-selection aspects with a fixed base-question template each.
enum class Factor {
    ActiveMaintenance,
    Documentation,
    EaseOfUse,
    Feature,
    Performance,
    Security,
    Stability,
    Custom,
};

std::string_view factor_name(Factor f) noexcept;
/// Accepts the names above, case-insensitive, plus "active_maintenance",
/// "ease_of_use" style spellings.
Factor parse_factor(std::string_view name);

struct ContextDoc {
    std::string source_id;
    std::string title;
    std::string question;
    std::string answer;

    bool operator==(const ContextDoc&) const = default;
};

struct BaseQuery {
    Factor factor = Factor::EaseOfUse;
    /// Required for Factor::Feature; fills the [x] slot.
    std::optional<std::string> feature_name;
    /// Required for Factor::Custom. A literal "[x]" is replaced by feature_name when given.
    std::optional<std::string> custom_template;
    ContextDoc context;

    /// Throws PreconditionError when an invariant does not hold.
    void validate() const;
    bool operator==(const BaseQuery&) const = default;
};

struct Explanation {
    std::size_t index = 0;
    std::string title;
    std::string body;
    std::string record_id;

    bool operator==(const Explanation&) const = default;
};

enum class EnquiryStyle {
    /// Title/explanation JSON request used for the benchmark.
    Json,
    /// Generic "justify your answer" wording, still asking for the JSON shape.
    Justify,
};

/// The template text with any [x] slot filled, e.g. "How easy it is to use the library".
std::string base_question_text(const BaseQuery& q);

/// "Question: ...\nAnswer: ...". The title, when present, heads the question line.
std::string render_context(const ContextDoc& c);

std::string build_base_prompt(const BaseQuery& q);

std::string build_enquiry_prompt(const BaseQuery& q, std::string_view base_response,
                                 EnquiryStyle style = EnquiryStyle::Json);

/// Sends the base prompt. The session should be fresh for this record.
std::string ask_base(gateway::ChatSession& session, const BaseQuery& q);

/// Parses the enquiry reply: as-is, then with code fences and surrounding
/// prose removed, then the first balanced [...] span. Entries may be
/// {"title","explanation"} objects or bare strings; a missing title is
/// derived from the first words of the body. Throws ExplanationParseError.
std::vector<Explanation> parse_explanations(std::string_view raw, std::string_view record_id = {});

std::string serialize_explanations(const std::vector<Explanation>& explanations);

}  // namespace cid::enquirer
