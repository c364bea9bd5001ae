#pragma once
// JSON run configuration and the factories that turn it into live objects.
//
// {
//   "backend":    {"kind": "simulated|openai|replay", "url", "api_key_env", "model",
//                  "temperature", "max_tokens", "retries", "timeout_seconds", "replay"},
//   "embedder":   {"kind": "hashed|remote", "dim", "url", "model", "api_key_env", "cache_dir"},
//   "challenger": {"clauses": [...], "relations": ["MR1","MR2","MR1"], "kb": "path"},
//   "decider":    {"l2", "learning_rate", "epochs", "class_weighting", "seed", "folds"},
//   "pipeline":   {"concurrency"}
// }
// Every key is optional; unknown keys are rejected.

#include "cid/decider/model.hpp"
#include "cid/embed/embedder.hpp"
#include "cid/gateway/chat.hpp"
#include "cid/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

namespace cid::config {

struct BackendConfig {
    std::string kind = "simulated";
    std::string url = "https://api.openai.com/v1/chat/completions";
    std::string api_key_env = "OPENAI_API_KEY";
    std::string model = "gpt-3.5-turbo-0301";
    double temperature = 0.0;
    int max_tokens = 512;
    int retries = 3;
    int timeout_seconds = 60;
    /// Transcript file or directory served by the replay backend.
    std::string replay;
};

struct EmbedderConfig {
    std::string kind = "hashed";
    std::size_t dim = 256;
    std::string url = "https://api.openai.com/v1/embeddings";
    std::string model = "text-embedding-3-small";
    std::string api_key_env = "OPENAI_API_KEY";
    std::string cache_dir;
};

struct Config {
    BackendConfig backend;
    EmbedderConfig embedder;
    std::vector<std::string> clauses = challenger::default_clauses();
    std::array<challenger::Relation, 3> relations = challenger::default_relations();
    std::string kb_path;
    decider::Hyperparams hyperparams;
    std::uint64_t seed = 42;
    std::size_t folds = 10;
    std::size_t concurrency = 4;
};

Config config_from_json(const nlohmann::json& j, const std::string& origin = "config");
Config load_config(const std::filesystem::path& path);

/// Live OpenAI backends stamp records with wall-clock time; the others do not.
bool backend_is_deterministic(const BackendConfig& c);

std::shared_ptr<gateway::ChatBackend> make_backend(const BackendConfig& c);
std::shared_ptr<const embed::EmbeddingProvider> make_embedder(const EmbedderConfig& c);
gateway::RetryPolicy make_retry_policy(const BackendConfig& c);
pipeline::PipelineConfig make_pipeline_config(const Config& c);

/// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_now();

}  // namespace cid::config
