#pragma once
// The 24 similarity features of one explanation, in canonical order:
//   0-5   explanation vs each challenge response   (basic Why/How/Really, then mutated)
//   6-11  response vs response, pairs (Why,How) (Why,Really) (How,Really); basic then mutated
//   12-17 question vs its own response            (basic Why/How/Really, then mutated)
//   18-23 question vs question, same pairs as 6-11

#include "cid/challenger.hpp"
#include "cid/embed/embedder.hpp"
#include "cid/record.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cid::decider {

inline constexpr std::size_t kFeatureCount = 24;

enum class FeatureCategory { ExplanationResponse, ResponseResponse, QuestionResponse, QuestionQuestion };

struct FeatureSpec {
    std::string_view name;
    FeatureCategory category;
    challenger::Stage stage;
    /// Bit k set when the feature involves a question or response of kind k.
    std::uint8_t kinds;

    bool involves(challenger::ChallengeKind k) const noexcept {
        return (kinds & (1U << static_cast<unsigned>(k))) != 0;
    }
};

const std::array<FeatureSpec, kFeatureCount>& feature_specs();
std::vector<std::string> feature_names();

struct FeatureVector {
    std::array<double, kFeatureCount> values{};

    bool operator==(const FeatureVector&) const = default;
};

/// Throws FeatureExtractionSkipped unless the trace has 3 basic and 3
/// mutated answered challenges. Embedding errors (e.g. a reply with no
/// tokens) propagate as EmbeddingError.
FeatureVector extract_features(const ExplanationTrace& trace, const embed::EmbeddingProvider& embedder);
FeatureVector extract_features(const InterrogationRecord& record, std::size_t explanation_index,
                               const embed::EmbeddingProvider& embedder);

}  // namespace cid::decider
