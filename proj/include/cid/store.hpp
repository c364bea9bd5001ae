#pragma once
// On-disk layout of a benchmark run. Everything is canonical JSON (or JSONL
// / CSV) under one root:
//   records/<id>.json  transcripts/<id>.jsonl  labels/  features/  models/  reports/

#include "cid/decider/dataset.hpp"
#include "cid/embed/embedder.hpp"
#include "cid/gateway/transcript.hpp"
#include "cid/record.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace cid::store {

namespace fs = std::filesystem;

/// Reads a benchmark input file: JSON array of
/// {source_id, title, question, answer, factor, feature_name?, template?}.
std::vector<enquirer::BaseQuery> load_benchmark(const fs::path& path);

class BenchmarkStore {
public:
    explicit BenchmarkStore(fs::path root);

    const fs::path& root() const noexcept { return root_; }
    fs::path records_dir() const { return root_ / "records"; }
    fs::path transcripts_dir() const { return root_ / "transcripts"; }
    fs::path labels_dir() const { return root_ / "labels"; }
    fs::path features_dir() const { return root_ / "features"; }
    fs::path models_dir() const { return root_ / "models"; }
    fs::path reports_dir() const { return root_ / "reports"; }

    fs::path record_path(const std::string& record_id) const;
    /// Relative to root, as stored inside the record.
    static std::string transcript_relpath(const std::string& record_id);

    /// Append-only: writing a record whose file already exists succeeds only
    /// if the bytes are identical.
    void save_record(const InterrogationRecord& r) const;
    InterrogationRecord load_record(const std::string& record_id) const;
    /// Sorted by record id.
    std::vector<std::string> record_ids() const;
    std::vector<InterrogationRecord> load_records() const;

    /// Same append-only rule as records.
    void save_transcript(const std::string& record_id, const std::vector<gateway::TranscriptEntry>& entries) const;
    std::vector<gateway::TranscriptEntry> load_transcript(const InterrogationRecord& r) const;

    /// Writes (or overwrites) a canonical JSON report under reports/.
    void save_report(const std::string& name, const nlohmann::json& report) const;

private:
    fs::path root_;
};

/// Validates and parses a record file.
InterrogationRecord load_record_file(const fs::path& path);

struct LabelEntry {
    std::string record_id;
    std::size_t explanation_index = 0;
    decider::Label label = decider::Label::Correct;
    std::string annotator_id;

    bool operator==(const LabelEntry&) const = default;
};

struct LabelFile {
    std::vector<LabelEntry> entries;

    /// At most one label per (record, explanation).
    void validate(const std::string& origin = "labels") const;
    static LabelFile load(const fs::path& path);
    static LabelFile from_json(const nlohmann::json& j, const std::string& origin);
    nlohmann::json to_json() const;
    void save(const fs::path& path) const;
};

struct JoinedExample {
    const InterrogationRecord* record;
    std::size_t explanation_index;
    decider::Label label;

    const ExplanationTrace& trace() const { return record->explanations[explanation_index]; }
};

struct JoinResult {
    /// Ordered by (record_id, explanation_index).
    std::vector<JoinedExample> examples;
    /// "<record_id>#<index>" of every explanation without a label.
    std::vector<std::string> unlabeled;
};

/// Inner join. Labels pointing at a missing record or explanation raise
/// StoreError listing every offender.
JoinResult join_labels(const std::vector<InterrogationRecord>& records, const LabelFile& labels);

struct ExportResult {
    decider::Dataset dataset;
    /// (explanation ref, reason) for labeled explanations that yielded no row.
    std::vector<std::pair<std::string, std::string>> skipped;
    std::vector<std::string> unlabeled;
};

/// One row per labeled explanation with a complete challenge set, ordered
/// by (record_id, explanation_index), with the canonical 24 columns.
ExportResult export_features(const std::vector<InterrogationRecord>& records, const LabelFile& labels,
                             const embed::EmbeddingProvider& embedder);

/// Brings externally produced feature tables into the canonical layout.
class ReplicationAdapter {
public:
    virtual ~ReplicationAdapter() = default;
    virtual decider::Dataset import(const fs::path& path) const = 0;
};

/// Reads a CSV with a header row and renames columns per a mapping:
///   {"features": {"<canonical name>": "<source column>", ...},   // all 24
///    "label": {"column": "...", "correct": "<value>", "incorrect": "<value>"},
///    "ref": "<source column>"}                                   // optional
class MappedCsvAdapter : public ReplicationAdapter {
public:
    explicit MappedCsvAdapter(nlohmann::json mapping);
    static MappedCsvAdapter from_file(const fs::path& mapping_path);

    decider::Dataset import(const fs::path& path) const override;

private:
    nlohmann::json mapping_;
};

}  // namespace cid::store
