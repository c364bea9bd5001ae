#include "cid/gateway/transcript.hpp"

#include "cid/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace cid::gateway {

namespace fs = std::filesystem;

std::vector<TranscriptEntry> record_transcript(const ChatSession& session) {
    const auto& msgs = session.messages();
    std::size_t i = 0;
    if (i < msgs.size() && msgs[i].role == Role::System) ++i;
    std::vector<TranscriptEntry> out;
    for (; i + 1 < msgs.size(); i += 2) {
        if (msgs[i].role != Role::User || msgs[i + 1].role != Role::Assistant) {
            throw PreconditionError("session " + session.id() + " history does not alternate");
        }
        out.push_back(TranscriptEntry{session.id(), out.size(), msgs[i].content, msgs[i + 1].content});
    }
    return out;
}

std::string to_jsonl(const std::vector<TranscriptEntry>& entries) {
    std::string out;
    for (const auto& e : entries) {
        const nlohmann::json line = {{"session_id", e.session_id},
                                     {"turn", e.turn},
                                     {"prompt", e.prompt},
                                     {"response", e.response}};
        out += line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
        out.push_back('\n');
    }
    return out;
}

std::vector<TranscriptEntry> parse_jsonl(const std::string& content, const std::string& origin) {
    std::vector<TranscriptEntry> out;
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        try {
            const auto j = nlohmann::json::parse(line);
            out.push_back(TranscriptEntry{j.at("session_id").get<std::string>(),
                                          j.at("turn").get<std::size_t>(),
                                          j.at("prompt").get<std::string>(),
                                          j.at("response").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(where, std::string("bad transcript line: ") + e.what());
        }
    }
    return out;
}

void write_transcript(const fs::path& path, const std::vector<TranscriptEntry>& entries) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot write transcript " + path.string());
    out << to_jsonl(entries);
}

std::vector<TranscriptEntry> read_transcript(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError("cannot read transcript " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_jsonl(buf.str(), path.string());
}

std::vector<TranscriptEntry> read_transcripts(const fs::path& path) {
    if (fs::is_regular_file(path)) return read_transcript(path);
    if (!fs::is_directory(path)) throw StoreError("no transcript file or directory at " + path.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(path)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<TranscriptEntry> all;
    for (const auto& f : files) {
        auto part = read_transcript(f);
        all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return all;
}

ReplayBackend::ReplayBackend(const std::vector<TranscriptEntry>& entries, std::string id)
    : id_(std::move(id)) {
    for (const auto& e : entries) sessions_[e.session_id].push_back(e);
    for (auto& [session, turns] : sessions_) {
        std::sort(turns.begin(), turns.end(),
                  [](const TranscriptEntry& a, const TranscriptEntry& b) { return a.turn < b.turn; });
        for (std::size_t i = 0; i < turns.size(); ++i) {
            if (turns[i].turn != i) {
                throw SchemaError(session, "transcript turns are not contiguous from 0");
            }
        }
    }
}

std::string ReplayBackend::complete(std::string_view session_id,
                                    std::span<const ChatMessage> messages,
                                    const GenerationParams& /*params*/) {
    const std::size_t turn = static_cast<std::size_t>(
        std::count_if(messages.begin(), messages.end(),
                      [](const ChatMessage& m) { return m.role == Role::User; }));
    if (turn == 0) throw PreconditionError("replay: request without a user message");
    const std::size_t index = turn - 1;

    const auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
        throw ReplayDivergenceError(std::string(session_id), index,
                                    "replay divergence: no recording for session '" +
                                        std::string(session_id) + "'");
    }
    const auto& turns = it->second;
    if (index >= turns.size()) {
        throw ReplayDivergenceError(std::string(session_id), index,
                                    "replay divergence in session '" + std::string(session_id) +
                                        "' at prompt " + std::to_string(index) +
                                        ": recording has only " + std::to_string(turns.size()) +
                                        " exchanges");
    }
    if (turns[index].prompt != messages.back().content) {
        throw ReplayDivergenceError(std::string(session_id), index,
                                    "replay divergence in session '" + std::string(session_id) +
                                        "' at prompt " + std::to_string(index));
    }
    return turns[index].response;
}

}  // namespace cid::gateway
