#include "cid/config.hpp"

#include "cid/error.hpp"
#include "cid/gateway/backends.hpp"
#include "cid/gateway/transcript.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

namespace cid::config {

namespace {

using json = nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw SchemaError(where, "must be an object");
    for (const auto& [k, v] : j.items()) {
        if (!allowed.count(k)) throw SchemaError(where, "unknown key '" + k + "'");
    }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(where + "." + key, e.what());
    }
}

}  // namespace

Config config_from_json(const json& j, const std::string& origin) {
    Config c;
    check_keys(j, {"backend", "embedder", "challenger", "decider", "pipeline"}, origin);

    if (j.contains("backend")) {
        const auto& b = j["backend"];
        const auto where = origin + ".backend";
        check_keys(b, {"kind", "url", "api_key_env", "model", "temperature", "max_tokens", "retries",
                       "timeout_seconds", "replay"},
                   where);
        read(b, "kind", c.backend.kind, where);
        read(b, "url", c.backend.url, where);
        read(b, "api_key_env", c.backend.api_key_env, where);
        read(b, "model", c.backend.model, where);
        read(b, "temperature", c.backend.temperature, where);
        read(b, "max_tokens", c.backend.max_tokens, where);
        read(b, "retries", c.backend.retries, where);
        read(b, "timeout_seconds", c.backend.timeout_seconds, where);
        read(b, "replay", c.backend.replay, where);
    }
    if (j.contains("embedder")) {
        const auto& e = j["embedder"];
        const auto where = origin + ".embedder";
        check_keys(e, {"kind", "dim", "url", "model", "api_key_env", "cache_dir"}, where);
        read(e, "kind", c.embedder.kind, where);
        read(e, "dim", c.embedder.dim, where);
        read(e, "url", c.embedder.url, where);
        read(e, "model", c.embedder.model, where);
        read(e, "api_key_env", c.embedder.api_key_env, where);
        read(e, "cache_dir", c.embedder.cache_dir, where);
    }
    if (j.contains("challenger")) {
        const auto& ch = j["challenger"];
        const auto where = origin + ".challenger";
        check_keys(ch, {"clauses", "relations", "kb"}, where);
        read(ch, "clauses", c.clauses, where);
        if (ch.contains("relations")) {
            std::vector<std::string> names;
            read(ch, "relations", names, where);
            if (names.size() != 3) throw SchemaError(where + ".relations", "needs one entry per kind (Why, How, Really)");
            for (std::size_t i = 0; i < 3; ++i) {
                try {
                    c.relations[i] = challenger::parse_relation(names[i]);
                } catch (const PreconditionError& e) {
                    throw SchemaError(where + ".relations", e.what());
                }
            }
        }
        read(ch, "kb", c.kb_path, where);
    }
    if (j.contains("decider")) {
        const auto& d = j["decider"];
        const auto where = origin + ".decider";
        check_keys(d, {"l2", "learning_rate", "epochs", "class_weighting", "seed", "folds"}, where);
        read(d, "l2", c.hyperparams.l2, where);
        read(d, "learning_rate", c.hyperparams.learning_rate, where);
        read(d, "epochs", c.hyperparams.epochs, where);
        read(d, "class_weighting", c.hyperparams.class_weighting, where);
        read(d, "seed", c.seed, where);
        read(d, "folds", c.folds, where);
    }
    if (j.contains("pipeline")) {
        const auto& p = j["pipeline"];
        const auto where = origin + ".pipeline";
        check_keys(p, {"concurrency"}, where);
        read(p, "concurrency", c.concurrency, where);
    }

    if (c.clauses.empty()) throw SchemaError(origin, "challenger.clauses must not be empty");
    if (c.concurrency == 0) throw SchemaError(origin, "pipeline.concurrency must be at least 1");
    if (c.backend.retries < 0) throw SchemaError(origin, "backend.retries must be >= 0");
    if (c.embedder.dim == 0) throw SchemaError(origin, "embedder.dim must be positive");
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError("cannot read config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    auto j = json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) throw SchemaError(path.string(), "config is not valid JSON");
    return config_from_json(j, path.string());
}

bool backend_is_deterministic(const BackendConfig& c) { return c.kind != "openai"; }

std::shared_ptr<gateway::ChatBackend> make_backend(const BackendConfig& c) {
    if (c.kind == "simulated" || c.kind == "mock") return gateway::make_simulated_backend();
    if (c.kind == "replay") {
        if (c.replay.empty()) throw PreconditionError("replay backend needs a transcript path");
        return std::make_shared<gateway::ReplayBackend>(gateway::read_transcripts(c.replay));
    }
    if (c.kind == "openai") {
        gateway::OpenAiConfig oc;
        oc.url = c.url;
        oc.api_key_env = c.api_key_env;
        oc.timeout_seconds = c.timeout_seconds;
        return std::make_shared<gateway::OpenAiBackend>(oc);
    }
    throw PreconditionError("unknown backend kind '" + c.kind + "'");
}

std::shared_ptr<const embed::EmbeddingProvider> make_embedder(const EmbedderConfig& c) {
    std::shared_ptr<const embed::EmbeddingProvider> p;
    if (c.kind == "hashed") {
        p = std::make_shared<embed::HashedBagOfTokens>(c.dim);
    } else if (c.kind == "remote") {
        embed::RemoteEmbeddingConfig rc;
        rc.url = c.url;
        rc.model = c.model;
        rc.api_key_env = c.api_key_env;
        p = std::make_shared<embed::RemoteEmbeddingProvider>(rc);
    } else {
        throw PreconditionError("unknown embedder kind '" + c.kind + "'");
    }
    if (!c.cache_dir.empty()) p = std::make_shared<embed::CachedProvider>(p, c.cache_dir);
    return p;
}

gateway::RetryPolicy make_retry_policy(const BackendConfig& c) {
    gateway::RetryPolicy r;
    r.max_retries = c.retries;
    return r;
}

pipeline::PipelineConfig make_pipeline_config(const Config& c) {
    pipeline::PipelineConfig p;
    p.params.model_name = c.backend.model;
    p.params.temperature = c.backend.temperature;
    p.params.max_tokens = c.backend.max_tokens;
    p.params.validate();
    p.generator_params = p.params;
    p.clauses = c.clauses;
    p.relations = c.relations;
    p.concurrency = c.concurrency;
    if (!backend_is_deterministic(c.backend)) p.clock = utc_now;
    return p;
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace cid::config
