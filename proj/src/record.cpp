#include "cid/record.hpp"

#include "cid/error.hpp"
#include "cid/text.hpp"

namespace cid {

using nlohmann::json;
namespace ch = challenger;

bool ExplanationTrace::complete() const noexcept {
    if (basic.size() != 3 || mutated.size() != 3) return false;
    for (const auto* list : {&basic, &mutated}) {
        for (const auto& x : *list) {
            if (!x.response) return false;
        }
    }
    return true;
}

std::string ExplanationTrace::ref() const {
    return explanation.record_id + "#" + std::to_string(explanation.index);
}

std::size_t InterrogationRecord::challenge_response_count() const noexcept {
    std::size_t n = 0;
    for (const auto& e : explanations) {
        for (const auto* list : {&e.basic, &e.mutated}) {
            for (const auto& x : *list) n += x.response ? 1 : 0;
        }
    }
    return n;
}

void InterrogationRecord::validate(const std::string& origin) const {
    if (text::is_blank(record_id)) throw SchemaError(origin, "record_id is empty");
    try {
        base_query.validate();
    } catch (const PreconditionError& e) {
        throw SchemaError(origin, std::string("base_query: ") + e.what());
    }
    for (std::size_t i = 0; i < explanations.size(); ++i) {
        const auto& t = explanations[i];
        const std::string where = "explanations[" + std::to_string(i) + "]";
        if (t.explanation.index != i) throw SchemaError(origin, where + ": indices are not contiguous from 0");
        if (t.explanation.record_id != record_id) throw SchemaError(origin, where + ": belongs to another record");
        if (text::is_blank(t.explanation.title) || text::is_blank(t.explanation.body)) {
            throw SchemaError(origin, where + ": empty title or body");
        }
        if (t.basic.size() > 3 || t.mutated.size() > 3) throw SchemaError(origin, where + ": too many challenges");
        for (std::size_t k = 0; k < t.basic.size(); ++k) {
            const auto& q = t.basic[k].question;
            if (q.stage != ch::Stage::Basic || q.mutation || static_cast<std::size_t>(q.kind) != k) {
                throw SchemaError(origin, where + ": malformed basic challenge " + std::to_string(k));
            }
        }
        for (std::size_t k = 0; k < t.mutated.size(); ++k) {
            const auto& q = t.mutated[k].question;
            if (q.stage != ch::Stage::Mutated || !q.mutation || static_cast<std::size_t>(q.kind) != k) {
                throw SchemaError(origin, where + ": malformed mutated challenge " + std::to_string(k));
            }
        }
    }
    if (status == RecordStatus::Quarantined && failed_stage.empty()) {
        throw SchemaError(origin, "quarantined record without failed_stage");
    }
    if (status == RecordStatus::Complete && !failed_stage.empty()) {
        throw SchemaError(origin, "complete record with failed_stage");
    }
}

namespace {

json opt(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> opt_string(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<std::string>();
}

json to_json(const ch::ChallengeQuestion& q) {
    json j = {{"kind", ch::kind_word(q.kind)},
              {"stage", ch::stage_name(q.stage)},
              {"text", q.text},
              {"parent_explanation", q.parent_explanation}};
    if (q.mutation) {
        j["mutation"] = {{"relation", ch::relation_name(q.mutation->relation)},
                         {"redundant_sentence", q.mutation->redundant_sentence},
                         {"clause", q.mutation->clause},
                         {"source_id", q.mutation->source_id}};
    }
    return j;
}

ch::ChallengeQuestion question_from_json(const json& j) {
    ch::ChallengeQuestion q;
    q.kind = ch::parse_kind(j.at("kind").get<std::string>());
    q.stage = ch::parse_stage(j.at("stage").get<std::string>());
    q.text = j.at("text").get<std::string>();
    q.parent_explanation = j.at("parent_explanation").get<std::string>();
    if (j.contains("mutation") && !j["mutation"].is_null()) {
        const auto& m = j["mutation"];
        q.mutation = ch::MutationInfo{ch::parse_relation(m.at("relation").get<std::string>()),
                                      m.at("redundant_sentence").get<std::string>(),
                                      m.at("clause").get<std::string>(),
                                      m.at("source_id").get<std::string>()};
    }
    return q;
}

json exchanges_to_json(const std::vector<ChallengeExchange>& xs) {
    json arr = json::array();
    for (const auto& x : xs) arr.push_back({{"question", to_json(x.question)}, {"response", opt(x.response)}});
    return arr;
}

std::vector<ChallengeExchange> exchanges_from_json(const json& arr) {
    std::vector<ChallengeExchange> out;
    for (const auto& x : arr) out.push_back({question_from_json(x.at("question")), opt_string(x, "response")});
    return out;
}

}  // namespace

json to_json(const enquirer::BaseQuery& q) {
    json j = {{"factor", enquirer::factor_name(q.factor)},
              {"source_id", q.context.source_id},
              {"title", q.context.title},
              {"question", q.context.question},
              {"answer", q.context.answer}};
    if (q.feature_name) j["feature_name"] = *q.feature_name;
    if (q.custom_template) j["template"] = *q.custom_template;
    return j;
}

enquirer::BaseQuery base_query_from_json(const json& j, const std::string& origin) {
    try {
        enquirer::BaseQuery q;
        q.context.source_id = j.value("source_id", std::string{});
        q.context.title = j.value("title", std::string{});
        q.context.question = j.at("question").get<std::string>();
        q.context.answer = j.at("answer").get<std::string>();
        q.feature_name = opt_string(j, "feature_name");
        q.custom_template = opt_string(j, "template");
        if (j.contains("factor")) {
            q.factor = enquirer::parse_factor(j["factor"].get<std::string>());
        } else if (q.custom_template) {
            q.factor = enquirer::Factor::Custom;
        } else {
            throw SchemaError(origin, "entry has neither factor nor template");
        }
        q.validate();
        return q;
    } catch (const json::exception& e) {
        throw SchemaError(origin, e.what());
    } catch (const PreconditionError& e) {
        throw SchemaError(origin, e.what());
    }
}

json to_json(const InterrogationRecord& r) {
    json explanations = json::array();
    for (const auto& t : r.explanations) {
        json skips = json::array();
        for (const auto& s : t.mutation_skips) skips.push_back({{"kind", ch::kind_word(s.kind)}, {"reason", s.reason}});
        explanations.push_back({{"index", t.explanation.index},
                                {"title", t.explanation.title},
                                {"body", t.explanation.body},
                                {"generation_session", t.generation_session},
                                {"basic", exchanges_to_json(t.basic)},
                                {"mutated", exchanges_to_json(t.mutated)},
                                {"mutation_skips", std::move(skips)}});
    }
    json j = {{"schema_version", kSchemaVersion},
              {"record_id", r.record_id},
              {"status", r.status == RecordStatus::Complete ? "complete" : "quarantined"},
              {"failed_stage", r.failed_stage.empty() ? json(nullptr) : json(r.failed_stage)},
              {"error", r.error.empty() ? json(nullptr) : json(r.error)},
              {"backend", r.backend_id},
              {"model", r.model_name},
              {"base_query", to_json(r.base_query)},
              {"base_prompt", r.base_prompt},
              {"base_response", opt(r.base_response)},
              {"enquiry_prompt", r.enquiry_prompt},
              {"enquiry_response", opt(r.enquiry_response)},
              {"explanations", std::move(explanations)},
              {"sessions", {{"interrogation", r.interrogation_session}}},
              {"transcript", r.transcript}};
    if (!r.started_at.empty() || !r.finished_at.empty()) {
        j["timestamps"] = {{"started", r.started_at}, {"finished", r.finished_at}};
    }
    return j;
}

InterrogationRecord record_from_json(const json& j, const std::string& origin) {
    if (!j.is_object()) throw SchemaError(origin, "record is not a JSON object");
    if (!j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
        throw SchemaError(origin, "missing schema_version");
    }
    if (j["schema_version"].get<int>() != kSchemaVersion) {
        throw SchemaError(origin, "schema_version " + std::to_string(j["schema_version"].get<int>()) +
                                      " is not supported (expected " + std::to_string(kSchemaVersion) + ")");
    }
    InterrogationRecord r;
    try {
        r.record_id = j.at("record_id").get<std::string>();
        const auto status = j.at("status").get<std::string>();
        if (status == "complete") {
            r.status = RecordStatus::Complete;
        } else if (status == "quarantined") {
            r.status = RecordStatus::Quarantined;
        } else {
            throw SchemaError(origin, "unknown status '" + status + "'");
        }
        r.failed_stage = opt_string(j, "failed_stage").value_or("");
        r.error = opt_string(j, "error").value_or("");
        r.backend_id = j.at("backend").get<std::string>();
        r.model_name = j.at("model").get<std::string>();
        r.base_query = base_query_from_json(j.at("base_query"), origin + ": base_query");
        r.base_prompt = j.at("base_prompt").get<std::string>();
        r.base_response = opt_string(j, "base_response");
        r.enquiry_prompt = j.at("enquiry_prompt").get<std::string>();
        r.enquiry_response = opt_string(j, "enquiry_response");
        for (const auto& e : j.at("explanations")) {
            ExplanationTrace t;
            t.explanation = enquirer::Explanation{e.at("index").get<std::size_t>(), e.at("title").get<std::string>(),
                                                  e.at("body").get<std::string>(), r.record_id};
            t.generation_session = e.at("generation_session").get<std::string>();
            t.basic = exchanges_from_json(e.at("basic"));
            t.mutated = exchanges_from_json(e.at("mutated"));
            for (const auto& s : e.at("mutation_skips")) {
                t.mutation_skips.push_back({ch::parse_kind(s.at("kind").get<std::string>()),
                                            s.at("reason").get<std::string>()});
            }
            r.explanations.push_back(std::move(t));
        }
        r.interrogation_session = j.at("sessions").at("interrogation").get<std::string>();
        r.transcript = j.at("transcript").get<std::string>();
        if (j.contains("timestamps")) {
            r.started_at = j["timestamps"].value("started", std::string{});
            r.finished_at = j["timestamps"].value("finished", std::string{});
        }
    } catch (const json::exception& e) {
        throw SchemaError(origin, e.what());
    } catch (const PreconditionError& e) {
        throw SchemaError(origin, e.what());
    }
    r.validate(origin);
    return r;
}

}  // namespace cid
