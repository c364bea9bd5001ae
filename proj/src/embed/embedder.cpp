#include "cid/embed/embedder.hpp"

#include "cid/error.hpp"
#include "cid/http.hpp"
#include "cid/simd/kernels.hpp"
#include "cid/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cid::embed {

namespace fs = std::filesystem;

namespace {
void require_text(std::string_view text) {
    if (text::is_blank(text)) throw PreconditionError("cannot embed empty text");
}
}  // namespace

HashedBagOfTokens::HashedBagOfTokens(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw PreconditionError("embedding dimension must be positive");
}

std::string HashedBagOfTokens::id() const { return "hashed-bow-" + std::to_string(dim_); }

std::size_t HashedBagOfTokens::bucket_of(std::string_view token) const noexcept {
    return static_cast<std::size_t>(text::fnv1a64(token) % dim_);
}

Embedding HashedBagOfTokens::embed(std::string_view text) const {
    require_text(text);
    std::vector<double> v(dim_, 0.0);
    for (const auto& token : text::tokenize(text)) v[bucket_of(token)] += 1.0;
    const double norm = std::sqrt(simd::squared_norm(v));
    if (norm > 0.0) {
        for (double& x : v) x /= norm;
    }
    return Embedding{std::move(v), id()};
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingConfig config)
    : config_(std::move(config)) {
    http::parse_url(config_.url);
}

std::size_t RemoteEmbeddingProvider::dim() const {
    std::lock_guard lock(mutex_);
    return dim_;
}

Embedding RemoteEmbeddingProvider::parse_reply(const std::string& body,
                                               const std::string& provider_id) {
    try {
        const auto j = nlohmann::json::parse(body);
        auto values = j.at("data").at(0).at("embedding").get<std::vector<double>>();
        if (values.empty()) throw MalformedReplyError("embedding reply has an empty vector");
        for (double x : values) {
            if (!std::isfinite(x)) throw MalformedReplyError("embedding reply has a non-finite value");
        }
        return Embedding{std::move(values), provider_id};
    } catch (const nlohmann::json::exception& e) {
        throw MalformedReplyError(std::string("bad embedding reply: ") + e.what());
    }
}

Embedding RemoteEmbeddingProvider::embed(std::string_view text) const {
    require_text(text);
    const nlohmann::json body = {{"model", config_.model}, {"input", std::string(text)}};
    const auto reply = http::post_json(config_.url, body.dump(),
                                       http::env_or_empty(config_.api_key_env),
                                       config_.timeout_seconds);
    auto e = parse_reply(reply, id());
    std::lock_guard lock(mutex_);
    if (dim_ == 0) dim_ = e.dim();
    if (e.dim() != dim_) {
        throw EmbeddingError("remote embedding dimension changed from " + std::to_string(dim_) +
                             " to " + std::to_string(e.dim()));
    }
    return e;
}

CachedProvider::CachedProvider(std::shared_ptr<const EmbeddingProvider> inner, fs::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
    if (!inner_) throw PreconditionError("cache needs an inner provider");
}

fs::path CachedProvider::entry_path(std::string_view text) const {
    // Provider ids may contain ':' or '/', hash them into the file name too.
    const std::string key = text::sha256_hex(inner_->id()).substr(0, 16) + "-" + text::sha256_hex(text);
    return dir_ / (key + ".json");
}

Embedding CachedProvider::embed(std::string_view text) const {
    require_text(text);
    const auto path = entry_path(text);
    {
        std::lock_guard lock(mutex_);
        if (std::ifstream in(path, std::ios::binary); in) {
            std::ostringstream buf;
            buf << in.rdbuf();
            try {
                const auto j = nlohmann::json::parse(buf.str());
                if (j.at("provider_id").get<std::string>() == inner_->id()) {
                    return Embedding{j.at("values").get<std::vector<double>>(), inner_->id()};
                }
            } catch (const nlohmann::json::exception&) {
                // Unreadable entry: recompute and overwrite below.
            }
        }
    }
    auto e = inner_->embed(text);
    std::lock_guard lock(mutex_);
    fs::create_directories(dir_);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << nlohmann::json{{"provider_id", e.provider_id}, {"values", e.values}}.dump();
    return e;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw EmbeddingError("cosine: dimension mismatch " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    }
    const double na = simd::squared_norm(a);
    const double nb = simd::squared_norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw EmbeddingError("cosine: similarity with an all-zero vector is undefined");
    }
    const double c = simd::dot(a, b) / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
    return cosine_similarity(std::span<const double>(a.values), std::span<const double>(b.values));
}

}  // namespace cid::embed
