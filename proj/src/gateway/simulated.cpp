#include "cid/gateway/backends.hpp"

#include "cid/error.hpp"
#include "cid/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>

namespace cid::gateway {

namespace {

constexpr std::string_view kBasePrefix = "Respond in less than 200 words ";
constexpr std::string_view kBaseInfix = " strictly based on the following conversation";
constexpr std::string_view kEnquiryMarker = "Respond strictly in JSON";
constexpr std::string_view kGeneratePrefix = "Generate a question that starts with ";
constexpr std::string_view kGenerateInfix = " to challenge the following ";

std::vector<std::string> words_of(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string join_words(const std::vector<std::string>& w, std::size_t from, std::size_t count) {
    std::string out;
    for (std::size_t i = from; i < std::min(w.size(), from + count); ++i) {
        if (!out.empty()) out.push_back(' ');
        out += w[i];
    }
    return out;
}

std::string strip_punct_tail(std::string s) {
    while (!s.empty() && std::string_view(".?!,;:").find(s.back()) != std::string_view::npos) {
        s.pop_back();
    }
    return s;
}

std::string section_after(std::string_view prompt, std::string_view marker) {
    const auto pos = prompt.rfind(marker);
    if (pos == std::string_view::npos) return {};
    auto rest = prompt.substr(pos + marker.size());
    const auto end = rest.find('\n');
    return std::string(text::trim(rest.substr(0, end)));
}

std::string lower_first(std::string s) {
    if (s.size() > 1 && std::isupper(static_cast<unsigned char>(s[0])) &&
        std::islower(static_cast<unsigned char>(s[1]))) {
        s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
    }
    return s;
}

std::string base_reply(std::string_view prompt) {
    auto q_end = prompt.find(kBaseInfix);
    std::string question(prompt.substr(kBasePrefix.size(), q_end == std::string_view::npos
                                                                 ? 0
                                                                 : q_end - kBasePrefix.size()));
    const auto answer = words_of(section_after(prompt, "Answer:"));
    std::string reply = "Regarding " + lower_first(question) + ", the conversation suggests that ";
    reply += answer.empty() ? std::string("the answer gives little detail")
                            : strip_punct_tail(join_words(answer, 0, 40));
    reply += ". The accepted answer is specific to the user's situation.";
    return reply;
}

std::string enquiry_reply(std::string_view prompt) {
    const auto h = text::fnv1a64(prompt);
    auto words = words_of(section_after(prompt, "Answer:"));
    if (words.size() < 6) {
        for (const char* w : {"the", "library", "handles", "this", "use", "case", "well"}) {
            words.emplace_back(w);
        }
    }
    static constexpr std::array<std::string_view, 4> kTitles = {
        "Answer Addresses Question", "Library Behaviour Explained", "Documented Usage Pattern",
        "Community Support Available"};
    static constexpr std::array<std::string_view, 4> kLeads = {
        "The accepted answer explains that ", "According to the conversation, ",
        "The user was told that ", "The library documentation implies that "};
    const std::size_t count = 3 + (h % 2);
    const std::size_t span = std::max<std::size_t>(5, words.size() / count);
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t from = (i * span) % words.size();
        std::string body = std::string(kLeads[(h + i) % kLeads.size()]) +
                           strip_punct_tail(join_words(words, from, 12)) + ".";
        arr.push_back({{"explanation", body}, {"title", std::string(kTitles[(h + i) % kTitles.size()])}});
    }
    std::string json = arr.dump();
    // Some model replies come wrapped in markdown fences.
    if ((h >> 8) % 3 == 0) return "```json\n" + json + "\n```";
    return json;
}

std::string generation_reply(std::string_view prompt) {
    const auto rest = prompt.substr(kGeneratePrefix.size());
    const auto infix = rest.find(kGenerateInfix);
    const std::string kind(rest.substr(0, infix));
    const std::string body(
        infix == std::string_view::npos ? rest : rest.substr(infix + kGenerateInfix.size()));
    const auto words = words_of(body);
    const std::string gist = strip_punct_tail(lower_first(join_words(words, 0, 12)));
    std::string q;
    if (kind == "Why") {
        q = "Why is it the case that " + gist + "?";
    } else if (kind == "How") {
        q = "How does the conversation show that " + gist + "?";
    } else {
        q = kind + ", is it certain that " + gist + "?";
    }
    if (text::fnv1a64(prompt) % 2 == 1) return "\"" + q + "\"";
    return q;
}

std::string challenge_reply(std::string_view prompt) {
    const auto h = text::fnv1a64(prompt);
    const auto words = words_of(prompt);
    const std::size_t from = words.size() > 6 ? (h % (words.size() - 6)) : 0;
    const std::string gist = strip_punct_tail(lower_first(join_words(words, from, 8)));
    static constexpr std::array<std::string_view, 5> kForms = {
        "The conversation indicates that {}.",
        "No direct answer is available; the post does not say {}.",
        "This is hard to determine, although the answer mentions {}.",
        "Yes, the accepted answer supports that {}.",
        "No information is provided about {} beyond the original question."};
    std::string form(kForms[h % kForms.size()]);
    form.replace(form.find("{}"), 2, gist);
    return form;
}

}  // namespace

std::string simulated_reply(std::span<const ChatMessage> messages) {
    if (messages.empty()) throw PreconditionError("simulated backend: empty request");
    const std::string& prompt = messages.back().content;
    if (prompt.starts_with(kBasePrefix)) return base_reply(prompt);
    if (prompt.starts_with(kGeneratePrefix)) return generation_reply(prompt);
    if (prompt.find(kEnquiryMarker) != std::string::npos) return enquiry_reply(prompt);
    return challenge_reply(prompt);
}

}  // namespace cid::gateway
