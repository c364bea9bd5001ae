#pragma once

#include "cid/gateway/chat.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cid::gateway {

/// What a backend actually saw for one request.
struct LoggedRequest {
    std::string session_id;
    std::vector<ChatMessage> messages;
};

/// Deterministic in-process backend. Looks the last user prompt up in a
/// fixed table, otherwise asks the responder. Every request is logged.
class MockBackend : public ChatBackend {
public:
    using Responder = std::function<std::string(std::span<const ChatMessage>)>;
    /// May throw to simulate backend failures.
    using Fault = std::function<void(std::string_view session_id, std::span<const ChatMessage>)>;

    explicit MockBackend(std::map<std::string, std::string> table = {}, Responder fallback = {},
                         std::string id = "mock");

    std::string id() const override { return id_; }
    std::string complete(std::string_view session_id, std::span<const ChatMessage> messages,
                         const GenerationParams& params) override;

    void set_fault(Fault fault);
    std::vector<LoggedRequest> request_log() const;
    std::vector<LoggedRequest> requests_for(std::string_view session_id) const;

private:
    std::map<std::string, std::string> table_;
    Responder fallback_;
    Fault fault_;
    std::string id_;
    mutable std::mutex mutex_;
    std::vector<LoggedRequest> log_;
};

/// Rule-based stand-in for a chat model. Recognizes the base, enquiry,
/// question-generation and challenge prompts and answers each with text
/// derived deterministically from the prompt.
std::string simulated_reply(std::span<const ChatMessage> messages);
std::shared_ptr<MockBackend> make_simulated_backend();

struct OpenAiConfig {
    /// Full chat-completions URL, e.g. https://api.openai.com/v1/chat/completions
    std::string url;
    /// Name of the environment variable holding the API key. Empty means no auth header.
    std::string api_key_env = "OPENAI_API_KEY";
    int timeout_seconds = 60;
};

/// OpenAI-compatible chat-completions client over HTTP(S).
class OpenAiBackend : public ChatBackend {
public:
    explicit OpenAiBackend(OpenAiConfig config);

    std::string id() const override { return "openai:" + config_.url; }
    std::string complete(std::string_view session_id, std::span<const ChatMessage> messages,
                         const GenerationParams& params) override;

    static nlohmann::json request_body(std::span<const ChatMessage> messages,
                                       const GenerationParams& params);
    /// Extracts choices[0].message.content; throws MalformedReplyError.
    static std::string parse_reply(const std::string& body);

private:
    OpenAiConfig config_;
};

}  // namespace cid::gateway
