#pragma once
// One interrogation end to end, batches of them, and detection on a
// finished record.
//
// Stage order per record: base -> enquiry -> explanations, then for each
// explanation: generation (fresh session) -> mutation -> challenge. A
// failing stage quarantines the record; everything gathered before it is kept.

#include "cid/challenger.hpp"
#include "cid/decider/features.hpp"
#include "cid/decider/model.hpp"
#include "cid/embed/embedder.hpp"
#include "cid/enquirer.hpp"
#include "cid/gateway/chat.hpp"
#include "cid/gateway/transcript.hpp"
#include "cid/record.hpp"
#include "cid/store.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cid::pipeline {

struct PipelineConfig {
    gateway::GenerationParams params;
    gateway::GenerationParams generator_params;
    enquirer::EnquiryStyle enquiry_style = enquirer::EnquiryStyle::Json;
    std::vector<std::string> clauses = challenger::default_clauses();
    std::array<challenger::Relation, 3> relations = challenger::default_relations();
    std::size_t concurrency = 4;
    /// Returns an ISO-8601 timestamp. Unset: records carry no timestamps.
    std::function<std::string()> clock;
};

struct Dependencies {
    gateway::Gateway& gateway;
    const embed::EmbeddingProvider& embedder;
    /// Static MR1 knowledge base; may be null or empty.
    const challenger::KnowledgeBase* knowledge_base = nullptr;
};

struct Interrogation {
    InterrogationRecord record;
    std::vector<gateway::TranscriptEntry> transcript;
};

/// "<index:04>-<sanitized source_id>", or just the index without a source id.
std::string make_record_id(std::size_t index, const enquirer::BaseQuery& q);

/// Session ids are "<record_id>/interrogate" and "<record_id>/generate-<i>",
/// so a replay backend can serve them again.
Interrogation interrogate(const enquirer::BaseQuery& query, const std::string& record_id,
                          const PipelineConfig& config, const Dependencies& deps);

struct BatchEntry {
    std::string record_id;
    RecordStatus status = RecordStatus::Complete;
    std::string failed_stage;
    std::size_t explanations = 0;
    /// Set when the entry could not even be stored.
    std::string error;
};

struct BatchReport {
    std::size_t completed = 0;
    std::size_t quarantined = 0;
    std::size_t failed = 0;
    std::size_t explanation_count = 0;
    std::vector<BatchEntry> entries;

    nlohmann::json to_json() const;
};

/// Interrogates every query with at most config.concurrency records in
/// flight, persists records and transcripts, and writes the accumulated
/// basic-challenge corpus to <root>/knowledge_base.json. One entry failing
/// never stops the others.
BatchReport run_benchmark(const std::vector<enquirer::BaseQuery>& queries, const PipelineConfig& config,
                          const Dependencies& deps, const store::BenchmarkStore& store);

struct Verdict {
    std::size_t explanation_index = 0;
    std::string explanation_ref;
    std::optional<decider::Prediction> prediction;
    std::optional<decider::FeatureVector> features;
    std::string skip_reason;
};

struct DetectionReport {
    std::string record_id;
    std::vector<Verdict> verdicts;
    /// Non-empty when the whole record was skipped.
    std::string reason;

    nlohmann::json to_json() const;
};

/// The model may use any subset of the canonical features, matched by name.
DetectionReport detect(const InterrogationRecord& record, const decider::DetectionModel& model,
                       const embed::EmbeddingProvider& embedder);

}  // namespace cid::pipeline
