#pragma once
// Sessioned access to chat-completion backends.

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace cid::gateway {

enum class Role { System, User, Assistant };

std::string_view role_name(Role role) noexcept;
/// Throws cid::PreconditionError on anything but system/user/assistant.
Role parse_role(std::string_view name);

struct ChatMessage {
    Role role;
    std::string content;

    /// Validating constructor: content must be non-blank.
    static ChatMessage make(Role role, std::string content);

    bool operator==(const ChatMessage&) const = default;
};

struct GenerationParams {
    double temperature = 0.0;
    int max_tokens = 512;
    std::string model_name = "gpt-3.5-turbo-0301";

    void validate() const;
    bool operator==(const GenerationParams&) const = default;
};

/// A chat-completion provider. Implementations must tolerate concurrent
/// calls for different sessions.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;

    virtual std::string id() const = 0;

    /// `messages` is the whole visible history of `session_id`, ending with
    /// the new user turn. Returns the assistant reply verbatim.
    virtual std::string complete(std::string_view session_id,
                                 std::span<const ChatMessage> messages,
                                 const GenerationParams& params) = 0;
};

struct RetryPolicy {
    /// Retries after the first attempt; the n-th retry waits base_delay * 2^(n-1).
    int max_retries = 3;
    std::chrono::milliseconds base_delay{1000};
    /// Injectable for tests. Defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleep;
};

class Gateway;

/// One conversation. Not internally synchronized: callers keep at most one
/// send in flight per session.
class ChatSession {
public:
    const std::string& id() const noexcept { return id_; }
    const std::vector<ChatMessage>& messages() const noexcept { return messages_; }
    const GenerationParams& params() const noexcept { return params_; }
    std::string backend_id() const;
    bool is_open() const noexcept { return open_; }
    void close() noexcept { open_ = false; }

    /// Appends the prompt and the reply to the history on success only. A
    /// failed send leaves the history untouched.
    std::string send(std::string_view prompt);

private:
    friend class Gateway;
    ChatSession(std::string id, std::shared_ptr<ChatBackend> backend, GenerationParams params,
                RetryPolicy retry, std::vector<ChatMessage> preamble);

    std::string id_;
    std::shared_ptr<ChatBackend> backend_;
    GenerationParams params_;
    RetryPolicy retry_;
    std::vector<ChatMessage> messages_;
    bool open_ = true;
};

class Gateway {
public:
    explicit Gateway(std::shared_ptr<ChatBackend> backend, RetryPolicy retry = {});

    /// Fresh sessions start with no messages at all. Non-fresh sessions start
    /// with the configured system preamble, if any. `label` becomes the
    /// session id; it must not have been issued before by this gateway.
    ChatSession open_session(bool fresh, const GenerationParams& params, std::string label = {});

    void set_system_preamble(std::string text);
    const std::shared_ptr<ChatBackend>& backend() const noexcept { return backend_; }

private:
    std::shared_ptr<ChatBackend> backend_;
    RetryPolicy retry_;
    std::string preamble_;
    std::mutex mutex_;
    std::unordered_set<std::string> issued_;
    std::size_t counter_ = 0;
};

}  // namespace cid::gateway
