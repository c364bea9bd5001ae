#include "cid/store.hpp"

#include "cid/decider/features.hpp"
#include "cid/error.hpp"
#include "cid/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace cid::store {

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

nlohmann::json read_json(const fs::path& path) {
    auto j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw SchemaError(path.string(), "not valid JSON");
    return j;
}

/// Writes via a temporary file and rename. With `append_only`, an existing
/// file must already hold exactly these bytes.
void write_file(const fs::path& path, const std::string& content, bool append_only) {
    if (append_only && fs::exists(path)) {
        if (read_file(path) == content) return;
        throw StoreError("refusing to overwrite " + path.string() + " (store is append-only)");
    }
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StoreError("cannot write " + tmp.string());
        out << content;
        if (!out) throw StoreError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

void check_record_id(const std::string& id) {
    if (id.empty() || id.find_first_of("/\\") != std::string::npos || id == "." || id == "..") {
        throw PreconditionError("record id '" + id + "' is not a valid file name");
    }
}

}  // namespace

std::vector<enquirer::BaseQuery> load_benchmark(const fs::path& path) {
    const auto j = read_json(path);
    if (!j.is_array()) throw SchemaError(path.string(), "benchmark must be a JSON array");
    std::vector<enquirer::BaseQuery> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(base_query_from_json(j[i], path.string() + "[" + std::to_string(i) + "]"));
    }
    return out;
}

BenchmarkStore::BenchmarkStore(fs::path root) : root_(std::move(root)) {}

fs::path BenchmarkStore::record_path(const std::string& record_id) const {
    check_record_id(record_id);
    return records_dir() / (record_id + ".json");
}

std::string BenchmarkStore::transcript_relpath(const std::string& record_id) {
    check_record_id(record_id);
    return "transcripts/" + record_id + ".jsonl";
}

void BenchmarkStore::save_record(const InterrogationRecord& r) const {
    r.validate(r.record_id);
    write_file(record_path(r.record_id), text::canonical_json(to_json(r)), true);
}

InterrogationRecord load_record_file(const fs::path& path) {
    if (!fs::exists(path)) throw StoreError("no record file at " + path.string());
    return record_from_json(read_json(path), path.string());
}

InterrogationRecord BenchmarkStore::load_record(const std::string& record_id) const {
    return load_record_file(record_path(record_id));
}

std::vector<std::string> BenchmarkStore::record_ids() const {
    std::vector<std::string> ids;
    if (!fs::is_directory(records_dir())) return ids;
    for (const auto& entry : fs::directory_iterator(records_dir())) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            ids.push_back(entry.path().stem().string());
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<InterrogationRecord> BenchmarkStore::load_records() const {
    std::vector<InterrogationRecord> out;
    for (const auto& id : record_ids()) out.push_back(load_record(id));
    return out;
}

void BenchmarkStore::save_transcript(const std::string& record_id,
                                     const std::vector<gateway::TranscriptEntry>& entries) const {
    write_file(root_ / transcript_relpath(record_id), gateway::to_jsonl(entries), true);
}

std::vector<gateway::TranscriptEntry> BenchmarkStore::load_transcript(const InterrogationRecord& r) const {
    const auto path = root_ / r.transcript;
    if (!fs::exists(path)) throw StoreError("record " + r.record_id + " references missing transcript " + path.string());
    return gateway::read_transcript(path);
}

void BenchmarkStore::save_report(const std::string& name, const nlohmann::json& report) const {
    check_record_id(name);
    write_file(reports_dir() / (name + ".json"), text::canonical_json(report), false);
}

void LabelFile::validate(const std::string& origin) const {
    std::set<std::pair<std::string, std::size_t>> seen;
    for (const auto& e : entries) {
        if (!seen.emplace(e.record_id, e.explanation_index).second) {
            throw SchemaError(origin, "duplicate label for " + e.record_id + "#" + std::to_string(e.explanation_index));
        }
    }
}

LabelFile LabelFile::from_json(const nlohmann::json& j, const std::string& origin) {
    // Either {"schema_version": 1, "entries": [...]} or a bare array.
    const nlohmann::json* arr = &j;
    if (j.is_object()) {
        if (j.value("schema_version", 1) != kSchemaVersion) throw SchemaError(origin, "unsupported schema_version");
        if (!j.contains("entries")) throw SchemaError(origin, "missing entries");
        arr = &j["entries"];
    }
    if (!arr->is_array()) throw SchemaError(origin, "labels must be an array");
    LabelFile f;
    for (std::size_t i = 0; i < arr->size(); ++i) {
        const auto& e = (*arr)[i];
        const std::string where = origin + ": entries[" + std::to_string(i) + "]";
        try {
            f.entries.push_back(LabelEntry{e.at("record_id").get<std::string>(),
                                           e.at("explanation_index").get<std::size_t>(),
                                           decider::parse_label(e.at("label").get<std::string>()),
                                           e.value("annotator_id", std::string{})});
        } catch (const nlohmann::json::exception& ex) {
            throw SchemaError(where, ex.what());
        } catch (const PreconditionError& ex) {
            throw SchemaError(where, ex.what());
        }
    }
    f.validate(origin);
    return f;
}

LabelFile LabelFile::load(const fs::path& path) { return from_json(read_json(path), path.string()); }

nlohmann::json LabelFile::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries) {
        arr.push_back({{"record_id", e.record_id},
                       {"explanation_index", e.explanation_index},
                       {"label", decider::label_name(e.label)},
                       {"annotator_id", e.annotator_id}});
    }
    return {{"schema_version", kSchemaVersion}, {"entries", std::move(arr)}};
}

void LabelFile::save(const fs::path& path) const {
    validate(path.string());
    write_file(path, text::canonical_json(to_json()), false);
}

JoinResult join_labels(const std::vector<InterrogationRecord>& records, const LabelFile& labels) {
    labels.validate();
    std::map<std::string, const InterrogationRecord*> by_id;
    for (const auto& r : records) by_id[r.record_id] = &r;

    std::map<std::pair<std::string, std::size_t>, decider::Label> label_of;
    std::vector<std::string> dangling;
    for (const auto& e : labels.entries) {
        const auto it = by_id.find(e.record_id);
        if (it == by_id.end() || e.explanation_index >= it->second->explanations.size()) {
            dangling.push_back(e.record_id + "#" + std::to_string(e.explanation_index));
            continue;
        }
        label_of[{e.record_id, e.explanation_index}] = e.label;
    }
    if (!dangling.empty()) {
        std::string list;
        for (const auto& d : dangling) list += (list.empty() ? "" : ", ") + d;
        throw StoreError("labels reference unknown explanations: " + list);
    }

    JoinResult out;
    for (const auto& [id, record] : by_id) {
        for (std::size_t i = 0; i < record->explanations.size(); ++i) {
            if (auto it = label_of.find({id, i}); it != label_of.end()) {
                out.examples.push_back(JoinedExample{record, i, it->second});
            } else {
                out.unlabeled.push_back(id + "#" + std::to_string(i));
            }
        }
    }
    return out;
}

ExportResult export_features(const std::vector<InterrogationRecord>& records, const LabelFile& labels,
                             const embed::EmbeddingProvider& embedder) {
    const auto joined = join_labels(records, labels);
    ExportResult out;
    out.dataset.feature_names = decider::feature_names();
    out.unlabeled = joined.unlabeled;
    for (const auto& ex : joined.examples) {
        const auto& trace = ex.trace();
        if (ex.record->status == RecordStatus::Quarantined) {
            out.skipped.emplace_back(trace.ref(), "record quarantined at stage " + ex.record->failed_stage);
            continue;
        }
        try {
            const auto fv = decider::extract_features(trace, embedder);
            out.dataset.examples.push_back(
                decider::LabeledExample{std::vector<double>(fv.values.begin(), fv.values.end()), ex.label, trace.ref()});
        } catch (const Error& e) {
            out.skipped.emplace_back(trace.ref(), e.what());
        }
    }
    return out;
}

MappedCsvAdapter::MappedCsvAdapter(nlohmann::json mapping) : mapping_(std::move(mapping)) {
    if (!mapping_.is_object() || !mapping_.contains("features") || !mapping_["features"].is_object() ||
        !mapping_.contains("label") || !mapping_["label"].is_object()) {
        throw SchemaError("mapping", "needs \"features\" and \"label\" objects");
    }
    for (const auto& name : decider::feature_names()) {
        if (!mapping_["features"].contains(name)) throw SchemaError("mapping", "no source column for " + name);
    }
}

MappedCsvAdapter MappedCsvAdapter::from_file(const fs::path& mapping_path) {
    return MappedCsvAdapter(read_json(mapping_path));
}

decider::Dataset MappedCsvAdapter::import(const fs::path& path) const {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path.string(), "empty file");
    const auto header = text::split_csv_line(line);
    auto column = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw SchemaError(path.string(), "missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };

    decider::Dataset d;
    d.feature_names = decider::feature_names();
    std::vector<std::size_t> feature_cols;
    for (const auto& name : d.feature_names) feature_cols.push_back(column(mapping_["features"][name].get<std::string>()));
    const auto& lab = mapping_["label"];
    const std::size_t label_col = column(lab.at("column").get<std::string>());
    const std::string correct_value = lab.value("correct", std::string("correct"));
    const std::string incorrect_value = lab.value("incorrect", std::string("incorrect"));
    const bool has_ref = mapping_.contains("ref");
    const std::size_t ref_col = has_ref ? column(mapping_["ref"].get<std::string>()) : 0;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::is_blank(line)) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        const auto fields = text::split_csv_line(line);
        if (fields.size() != header.size()) throw SchemaError(where, "wrong field count");
        decider::LabeledExample e;
        for (auto c : feature_cols) {
            const std::string cell(text::trim(fields[c]));
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (cell.empty() || used != cell.size() || !std::isfinite(v)) {
                throw SchemaError(where, "not a number: '" + fields[c] + "'");
            }
            e.features.push_back(v);
        }
        const auto raw_label = std::string(text::trim(fields[label_col]));
        if (raw_label == correct_value) {
            e.label = decider::Label::Correct;
        } else if (raw_label == incorrect_value) {
            e.label = decider::Label::Incorrect;
        } else {
            throw SchemaError(where, "unknown label value '" + raw_label + "'");
        }
        e.explanation_ref = has_ref ? fields[ref_col] : "row" + std::to_string(line_no - 1);
        d.examples.push_back(std::move(e));
    }
    d.validate();
    return d;
}

}  // namespace cid::store
