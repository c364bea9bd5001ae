#include "cid/gateway/backends.hpp"

#include "cid/error.hpp"
#include "cid/http.hpp"

namespace cid::gateway {

MockBackend::MockBackend(std::map<std::string, std::string> table, Responder fallback,
                         std::string id)
    : table_(std::move(table)), fallback_(std::move(fallback)), id_(std::move(id)) {}

void MockBackend::set_fault(Fault fault) {
    std::lock_guard lock(mutex_);
    fault_ = std::move(fault);
}

std::string MockBackend::complete(std::string_view session_id,
                                  std::span<const ChatMessage> messages,
                                  const GenerationParams& /*params*/) {
    Fault fault;
    {
        std::lock_guard lock(mutex_);
        log_.push_back(LoggedRequest{std::string(session_id),
                                     std::vector<ChatMessage>(messages.begin(), messages.end())});
        fault = fault_;
    }
    if (fault) fault(session_id, messages);

    if (messages.empty()) throw PreconditionError("mock backend: empty request");
    const std::string& prompt = messages.back().content;
    if (auto it = table_.find(prompt); it != table_.end()) return it->second;
    if (fallback_) return fallback_(messages);
    throw MalformedReplyError("mock backend has no reply for prompt: " + prompt.substr(0, 80));
}

std::vector<LoggedRequest> MockBackend::request_log() const {
    std::lock_guard lock(mutex_);
    return log_;
}

std::vector<LoggedRequest> MockBackend::requests_for(std::string_view session_id) const {
    std::lock_guard lock(mutex_);
    std::vector<LoggedRequest> out;
    for (const auto& r : log_) {
        if (r.session_id == session_id) out.push_back(r);
    }
    return out;
}

std::shared_ptr<MockBackend> make_simulated_backend() {
    return std::make_shared<MockBackend>(std::map<std::string, std::string>{}, &simulated_reply,
                                         "simulated");
}

OpenAiBackend::OpenAiBackend(OpenAiConfig config) : config_(std::move(config)) {
    http::parse_url(config_.url);
}

nlohmann::json OpenAiBackend::request_body(std::span<const ChatMessage> messages,
                                           const GenerationParams& params) {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages) {
        msgs.push_back({{"role", role_name(m.role)}, {"content", m.content}});
    }
    return {{"model", params.model_name},
            {"messages", std::move(msgs)},
            {"temperature", params.temperature},
            {"max_tokens", params.max_tokens}};
}

std::string OpenAiBackend::parse_reply(const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
        throw MalformedReplyError("chat backend reply is not JSON: " + body.substr(0, 200));
    }
    const auto* content = [&]() -> const nlohmann::json* {
        if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() ||
            j["choices"].empty()) {
            return nullptr;
        }
        const auto& first = j["choices"][0];
        if (!first.is_object() || !first.contains("message") || !first["message"].is_object()) {
            return nullptr;
        }
        const auto& msg = first["message"];
        if (!msg.contains("content") || !msg["content"].is_string()) return nullptr;
        return &msg["content"];
    }();
    if (content == nullptr) {
        throw MalformedReplyError("chat backend reply lacks choices[0].message.content");
    }
    return content->get<std::string>();
}

std::string OpenAiBackend::complete(std::string_view /*session_id*/,
                                    std::span<const ChatMessage> messages,
                                    const GenerationParams& params) {
    const std::string body = request_body(messages, params).dump();
    const std::string reply = http::post_json(config_.url, body,
                                              http::env_or_empty(config_.api_key_env),
                                              config_.timeout_seconds);
    return parse_reply(reply);
}

}  // namespace cid::gateway
