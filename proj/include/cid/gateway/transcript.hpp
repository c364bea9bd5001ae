#pragma once
// JSON Lines transcripts: one {"prompt","response","session_id","turn"}
// object per exchange. Recording then replaying is lossless.

#include "cid/gateway/chat.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace cid::gateway {

struct TranscriptEntry {
    std::string session_id;
    std::size_t turn = 0;  // zero-based exchange index within the session
    std::string prompt;
    std::string response;

    bool operator==(const TranscriptEntry&) const = default;
};

/// Exchanges of a session in order. A leading system message is not an exchange.
std::vector<TranscriptEntry> record_transcript(const ChatSession& session);

std::string to_jsonl(const std::vector<TranscriptEntry>& entries);
/// Throws SchemaError naming `origin` and the line number on bad input.
std::vector<TranscriptEntry> parse_jsonl(const std::string& content, const std::string& origin);

void write_transcript(const std::filesystem::path& path, const std::vector<TranscriptEntry>& entries);
std::vector<TranscriptEntry> read_transcript(const std::filesystem::path& path);
/// Every *.jsonl file under `path` (or `path` itself when it is a file).
std::vector<TranscriptEntry> read_transcripts(const std::filesystem::path& path);

/// Serves recorded responses. A prompt that differs from the recording, a
/// turn past the end of it or an unknown session raises ReplayDivergenceError.
class ReplayBackend : public ChatBackend {
public:
    explicit ReplayBackend(const std::vector<TranscriptEntry>& entries, std::string id = "replay");

    std::string id() const override { return id_; }
    std::string complete(std::string_view session_id, std::span<const ChatMessage> messages,
                         const GenerationParams& params) override;

    std::size_t session_count() const noexcept { return sessions_.size(); }

private:
    std::map<std::string, std::vector<TranscriptEntry>, std::less<>> sessions_;
    std::string id_;
};

}  // namespace cid::gateway
