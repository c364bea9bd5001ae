#include "cid/enquirer.hpp"

#include "cid/error.hpp"
#include "cid/text.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <optional>
#include <variant>

namespace cid::enquirer {

namespace {

constexpr std::string_view kFeatureSlot = "[x]";

struct FactorInfo {
    Factor factor;
    std::string_view name;
    std::string_view question;
};

constexpr std::array<FactorInfo, 7> kFactors = {{
    {Factor::ActiveMaintenance, "ActiveMaintenance", "How actively the library is maintained"},
    {Factor::Documentation, "Documentation", "How is the documentation of the library"},
    {Factor::EaseOfUse, "EaseOfUse", "How easy it is to use the library"},
    {Factor::Feature, "Feature", "How well does this library support [x] feature"},
    {Factor::Performance, "Performance", "How is the performance of the library"},
    {Factor::Security, "Security", "How is the security of the library"},
    {Factor::Stability, "Stability", "How stable or well tested is the library"},
}};

constexpr std::string_view kJsonEnquiry =
    "Provide explanation for the answer. Each reason separately with title in 4 words and the "
    "explanation in 50 words. Respond strictly in JSON [{\"title\":x, \"explanation\":y}] strictly "
    "based on the previous conversation (question, answer):";

constexpr std::string_view kJustifyEnquiry =
    "Justify your answer. If the answer has multiple pieces of information, provide separate "
    "reasoning for each of them. Respond strictly in JSON [{\"title\":x, \"explanation\":y}] "
    "strictly based on the previous conversation (question, answer):";

std::string squash(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c != '_' && c != ' ' && c != '-') out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::string replace_slot(std::string tmpl, const std::string& value) {
    for (auto pos = tmpl.find(kFeatureSlot); pos != std::string::npos;
         pos = tmpl.find(kFeatureSlot, pos + value.size())) {
        tmpl.replace(pos, kFeatureSlot.size(), value);
    }
    return tmpl;
}

std::string derive_title(std::string_view body) {
    std::string title;
    std::size_t words = 0;
    for (const auto& w : text::tokenize(body)) {
        if (words++ == 4) break;
        if (!title.empty()) title.push_back(' ');
        title += w;
    }
    return title.empty() ? std::string("Explanation") : title;
}

std::optional<std::string> string_field(const nlohmann::json& obj, std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
        if (auto it = obj.find(k); it != obj.end() && it->is_string()) {
            return it->get<std::string>();
        }
    }
    return std::nullopt;
}

/// Normalizes a parsed document to the explanation array, if it has that shape.
std::optional<nlohmann::json> as_explanation_array(const nlohmann::json& j) {
    if (j.is_array()) return std::optional<nlohmann::json>(std::in_place, j);
    if (j.is_object()) {
        if (j.contains("explanation")) return nlohmann::json::array({j});
        const nlohmann::json* only_array = nullptr;
        for (const auto& [key, value] : j.items()) {
            if (value.is_array()) {
                if (only_array != nullptr) return std::nullopt;
                only_array = &value;
            }
        }
        if (only_array != nullptr) return std::optional<nlohmann::json>(std::in_place, *only_array);
    }
    return std::nullopt;
}

std::optional<nlohmann::json> try_parse(std::string_view s) {
    auto j = nlohmann::json::parse(s.begin(), s.end(), nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    return as_explanation_array(j);
}

/// Contents of the first ``` fence (language tag dropped), else the span
/// from the first '[' or '{' to the last ']' or '}'.
std::string strip_decoration(std::string_view raw) {
    if (const auto open = raw.find("```"); open != std::string_view::npos) {
        auto body_start = raw.find('\n', open);
        if (body_start != std::string_view::npos) {
            ++body_start;
            const auto close = raw.find("```", body_start);
            return std::string(raw.substr(body_start, close == std::string_view::npos
                                                          ? std::string_view::npos
                                                          : close - body_start));
        }
    }
    const auto first = raw.find_first_of("[{");
    const auto last = raw.find_last_of("]}");
    if (first == std::string_view::npos || last == std::string_view::npos || last < first) {
        return std::string(raw);
    }
    return std::string(raw.substr(first, last - first + 1));
}

/// Every balanced [...] span, in order of its opening bracket.
std::vector<std::string_view> balanced_arrays(std::string_view raw) {
    std::vector<std::string_view> out;
    for (auto start = raw.find('['); start != std::string_view::npos; start = raw.find('[', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            const char c = raw[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '[') {
                ++depth;
            } else if (c == ']') {
                if (--depth == 0) {
                    out.push_back(raw.substr(start, i - start + 1));
                    break;
                }
            }
        }
    }
    return out;
}

/// Builds the list from a parsed array; on a shape problem returns the reason.
std::variant<std::vector<Explanation>, std::string> to_explanations(const nlohmann::json& arr,
                                                                    std::string_view record_id) {
    if (arr.empty()) return std::string("explanation array is empty");
    std::vector<Explanation> out;
    for (const auto& item : arr) {
        std::string body;
        std::string title;
        if (item.is_string()) {
            body = item.get<std::string>();
        } else if (item.is_object()) {
            body = string_field(item, {"explanation", "body", "reason"}).value_or("");
            title = string_field(item, {"title"}).value_or("");
        } else {
            return std::string("explanation entry is neither object nor string");
        }
        body = std::string(text::trim(body));
        title = std::string(text::trim(title));
        if (body.empty()) return std::string("explanation entry has no text");
        if (title.empty()) title = derive_title(body);
        out.push_back(Explanation{out.size(), std::move(title), std::move(body), std::string(record_id)});
    }
    return out;
}

}  // namespace

std::string_view factor_name(Factor f) noexcept {
    if (f == Factor::Custom) return "Custom";
    for (const auto& info : kFactors) {
        if (info.factor == f) return info.name;
    }
    return "Custom";
}

Factor parse_factor(std::string_view name) {
    const auto key = squash(name);
    if (key == "custom") return Factor::Custom;
    for (const auto& info : kFactors) {
        if (squash(info.name) == key) return info.factor;
    }
    if (key == "activemaint") return Factor::ActiveMaintenance;
    throw PreconditionError("unknown factor '" + std::string(name) + "'");
}

void BaseQuery::validate() const {
    if (factor == Factor::Feature && (!feature_name || text::is_blank(*feature_name))) {
        throw PreconditionError("Feature factor requires a feature_name");
    }
    if (factor == Factor::Custom && (!custom_template || text::is_blank(*custom_template))) {
        throw PreconditionError("Custom factor requires a non-empty template");
    }
    if (text::is_blank(context.question)) throw PreconditionError("context question must not be empty");
    if (text::is_blank(context.answer)) throw PreconditionError("context answer must not be empty");
}

std::string base_question_text(const BaseQuery& q) {
    q.validate();
    std::string tmpl;
    if (q.factor == Factor::Custom) {
        tmpl = *q.custom_template;
    } else {
        for (const auto& info : kFactors) {
            if (info.factor == q.factor) tmpl = info.question;
        }
    }
    if (q.feature_name) tmpl = replace_slot(std::move(tmpl), *q.feature_name);
    return tmpl;
}

std::string render_context(const ContextDoc& c) {
    std::string out = "Question: ";
    if (!text::is_blank(c.title)) {
        out += text::trim(c.title);
        out += "\n";
    }
    out += text::trim(c.question);
    out += "\nAnswer: ";
    out += text::trim(c.answer);
    return out;
}

std::string build_base_prompt(const BaseQuery& q) {
    return "Respond in less than 200 words " + base_question_text(q) +
           " strictly based on the following conversation (question, answer): " +
           render_context(q.context);
}

std::string build_enquiry_prompt(const BaseQuery& q, std::string_view base_response,
                                 EnquiryStyle style) {
    std::string out(style == EnquiryStyle::Json ? kJsonEnquiry : kJustifyEnquiry);
    out += "\n\n";
    out += render_context(q.context);
    out += "\n\n";
    out += base_question_text(q);
    out += "\n";
    out += base_response;
    return out;
}

std::string ask_base(gateway::ChatSession& session, const BaseQuery& q) {
    return session.send(build_base_prompt(q));
}

std::vector<Explanation> parse_explanations(std::string_view raw, std::string_view record_id) {
    if (text::is_blank(raw)) throw ExplanationParseError("empty explanation reply", std::string(raw));

    std::vector<std::string> candidates{std::string(raw), strip_decoration(raw)};
    for (auto span : balanced_arrays(raw)) candidates.emplace_back(span);

    std::optional<std::string> shape_error;
    for (const auto& c : candidates) {
        auto arr = try_parse(c);
        if (!arr) continue;
        auto result = to_explanations(*arr, record_id);
        if (auto* list = std::get_if<std::vector<Explanation>>(&result)) return std::move(*list);
        if (!shape_error) shape_error = std::get<std::string>(result);
    }
    throw ExplanationParseError(shape_error.value_or("explanation reply is not a JSON array"), std::string(raw));
}

std::string serialize_explanations(const std::vector<Explanation>& explanations) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : explanations) arr.push_back({{"title", e.title}, {"explanation", e.body}});
    return arr.dump();
}

}  // namespace cid::enquirer
