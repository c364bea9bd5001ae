#include "cid/decider/features.hpp"

#include "cid/error.hpp"

namespace cid::decider {

namespace {

using challenger::Stage;
using Cat = FeatureCategory;

constexpr std::uint8_t kWhy = 1U << 0;
constexpr std::uint8_t kHow = 1U << 1;
constexpr std::uint8_t kReally = 1U << 2;

constexpr std::array<std::pair<std::size_t, std::size_t>, 3> kPairs = {{{0, 1}, {0, 2}, {1, 2}}};

constexpr std::array<FeatureSpec, kFeatureCount> kSpecs = {{
    {"er_basic_why", Cat::ExplanationResponse, Stage::Basic, kWhy},
    {"er_basic_how", Cat::ExplanationResponse, Stage::Basic, kHow},
    {"er_basic_really", Cat::ExplanationResponse, Stage::Basic, kReally},
    {"er_mutated_why", Cat::ExplanationResponse, Stage::Mutated, kWhy},
    {"er_mutated_how", Cat::ExplanationResponse, Stage::Mutated, kHow},
    {"er_mutated_really", Cat::ExplanationResponse, Stage::Mutated, kReally},
    {"rr_basic_why_how", Cat::ResponseResponse, Stage::Basic, kWhy | kHow},
    {"rr_basic_why_really", Cat::ResponseResponse, Stage::Basic, kWhy | kReally},
    {"rr_basic_how_really", Cat::ResponseResponse, Stage::Basic, kHow | kReally},
    {"rr_mutated_why_how", Cat::ResponseResponse, Stage::Mutated, kWhy | kHow},
    {"rr_mutated_why_really", Cat::ResponseResponse, Stage::Mutated, kWhy | kReally},
    {"rr_mutated_how_really", Cat::ResponseResponse, Stage::Mutated, kHow | kReally},
    {"qr_basic_why", Cat::QuestionResponse, Stage::Basic, kWhy},
    {"qr_basic_how", Cat::QuestionResponse, Stage::Basic, kHow},
    {"qr_basic_really", Cat::QuestionResponse, Stage::Basic, kReally},
    {"qr_mutated_why", Cat::QuestionResponse, Stage::Mutated, kWhy},
    {"qr_mutated_how", Cat::QuestionResponse, Stage::Mutated, kHow},
    {"qr_mutated_really", Cat::QuestionResponse, Stage::Mutated, kReally},
    {"qq_basic_why_how", Cat::QuestionQuestion, Stage::Basic, kWhy | kHow},
    {"qq_basic_why_really", Cat::QuestionQuestion, Stage::Basic, kWhy | kReally},
    {"qq_basic_how_really", Cat::QuestionQuestion, Stage::Basic, kHow | kReally},
    {"qq_mutated_why_how", Cat::QuestionQuestion, Stage::Mutated, kWhy | kHow},
    {"qq_mutated_why_really", Cat::QuestionQuestion, Stage::Mutated, kWhy | kReally},
    {"qq_mutated_how_really", Cat::QuestionQuestion, Stage::Mutated, kHow | kReally},
}};

}  // namespace

const std::array<FeatureSpec, kFeatureCount>& feature_specs() { return kSpecs; }

std::vector<std::string> feature_names() {
    std::vector<std::string> out;
    for (const auto& s : kSpecs) out.emplace_back(s.name);
    return out;
}

FeatureVector extract_features(const ExplanationTrace& trace, const embed::EmbeddingProvider& embedder) {
    if (!trace.complete()) {
        throw FeatureExtractionSkipped("explanation " + trace.ref() +
                                       " lacks 3 basic and 3 mutated answered challenges");
    }
    const auto explanation = embedder.embed(trace.explanation.body);
    // [stage][kind]
    std::array<std::array<embed::Embedding, 3>, 2> q;
    std::array<std::array<embed::Embedding, 3>, 2> r;
    for (std::size_t k = 0; k < 3; ++k) {
        q[0][k] = embedder.embed(trace.basic[k].question.text);
        r[0][k] = embedder.embed(*trace.basic[k].response);
        q[1][k] = embedder.embed(trace.mutated[k].question.text);
        r[1][k] = embedder.embed(*trace.mutated[k].response);
    }

    FeatureVector fv;
    auto& v = fv.values;
    for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t k = 0; k < 3; ++k) {
            v[0 + 3 * s + k] = embed::cosine_similarity(explanation, r[s][k]);
            v[12 + 3 * s + k] = embed::cosine_similarity(q[s][k], r[s][k]);
        }
        for (std::size_t p = 0; p < kPairs.size(); ++p) {
            const auto [a, b] = kPairs[p];
            v[6 + 3 * s + p] = embed::cosine_similarity(r[s][a], r[s][b]);
            v[18 + 3 * s + p] = embed::cosine_similarity(q[s][a], q[s][b]);
        }
    }
    return fv;
}

FeatureVector extract_features(const InterrogationRecord& record, std::size_t explanation_index,
                               const embed::EmbeddingProvider& embedder) {
    if (explanation_index >= record.explanations.size()) {
        throw PreconditionError("record " + record.record_id + " has no explanation " +
                                std::to_string(explanation_index));
    }
    return extract_features(record.explanations[explanation_index], embedder);
}

}  // namespace cid::decider
