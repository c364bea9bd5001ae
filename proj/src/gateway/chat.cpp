#include "cid/gateway/chat.hpp"

#include "cid/error.hpp"
#include "cid/text.hpp"

#include <cmath>
#include <thread>

namespace cid::gateway {

std::string_view role_name(Role role) noexcept {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

Role parse_role(std::string_view name) {
    if (name == "system") return Role::System;
    if (name == "user") return Role::User;
    if (name == "assistant") return Role::Assistant;
    throw PreconditionError("unknown chat role '" + std::string(name) + "'");
}

ChatMessage ChatMessage::make(Role role, std::string content) {
    if (text::is_blank(content)) {
        throw PreconditionError("chat message content must not be empty");
    }
    return ChatMessage{role, std::move(content)};
}

void GenerationParams::validate() const {
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
        throw PreconditionError("temperature must be a finite value >= 0");
    }
    if (max_tokens < 1) throw PreconditionError("max_tokens must be >= 1");
    if (text::is_blank(model_name)) throw PreconditionError("model_name must not be empty");
}

ChatSession::ChatSession(std::string id, std::shared_ptr<ChatBackend> backend,
                         GenerationParams params, RetryPolicy retry,
                         std::vector<ChatMessage> preamble)
    : id_(std::move(id)),
      backend_(std::move(backend)),
      params_(std::move(params)),
      retry_(std::move(retry)),
      messages_(std::move(preamble)) {}

std::string ChatSession::backend_id() const { return backend_->id(); }

std::string ChatSession::send(std::string_view prompt) {
    if (!open_) throw PreconditionError("send on closed session " + id_);
    if (text::is_blank(prompt)) throw PreconditionError("prompt must not be empty");

    std::vector<ChatMessage> request = messages_;
    request.push_back(ChatMessage{Role::User, std::string(prompt)});

    for (int attempt = 0;; ++attempt) {
        try {
            std::string reply = backend_->complete(id_, request, params_);
            if (text::is_blank(reply)) {
                throw MalformedReplyError("backend " + backend_->id() +
                                          " returned an empty reply in session " + id_);
            }
            messages_.push_back(std::move(request.back()));
            messages_.push_back(ChatMessage{Role::Assistant, reply});
            return reply;
        } catch (const TransportError& e) {
            if (!e.retryable() || attempt >= retry_.max_retries) throw;
            const auto delay = retry_.base_delay * (1LL << attempt);
            if (retry_.sleep) {
                retry_.sleep(delay);
            } else {
                std::this_thread::sleep_for(delay);
            }
        }
    }
}

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, RetryPolicy retry)
    : backend_(std::move(backend)), retry_(std::move(retry)) {
    if (!backend_) throw PreconditionError("gateway needs a backend");
}

void Gateway::set_system_preamble(std::string text) { preamble_ = std::move(text); }

ChatSession Gateway::open_session(bool fresh, const GenerationParams& params, std::string label) {
    params.validate();
    std::string id;
    {
        std::lock_guard lock(mutex_);
        if (label.empty()) {
            do {
                id = "session-" + std::to_string(++counter_);
            } while (issued_.contains(id));
        } else {
            if (issued_.contains(label)) {
                throw PreconditionError("session id '" + label + "' already issued");
            }
            id = std::move(label);
        }
        issued_.insert(id);
    }
    std::vector<ChatMessage> preamble;
    if (!fresh && !text::is_blank(preamble_)) {
        preamble.push_back(ChatMessage{Role::System, preamble_});
    }
    return ChatSession(std::move(id), backend_, params, retry_, std::move(preamble));
}

}  // namespace cid::gateway
