#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cid::embed {

struct Embedding {
    std::vector<double> values;
    std::string provider_id;

    std::size_t dim() const noexcept { return values.size(); }
    bool operator==(const Embedding&) const = default;
};

/// Text to fixed-dimension vector. Implementations are deterministic for a
/// given text and safe to share between threads.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string id() const = 0;
    virtual std::size_t dim() const = 0;
    /// Throws PreconditionError on blank text.
    virtual Embedding embed(std::string_view text) const = 0;
};

/// Offline provider: lowercased alphanumeric tokens are hashed (FNV-1a) into
/// `dim` buckets, counted, and the count vector is L2-normalized. Cosine
/// between two texts is then their token-multiset overlap, up to bucket
/// collisions. Text with no tokens maps to the zero vector.
class HashedBagOfTokens : public EmbeddingProvider {
public:
    explicit HashedBagOfTokens(std::size_t dim = 256);

    std::string id() const override;
    std::size_t dim() const override { return dim_; }
    Embedding embed(std::string_view text) const override;

    std::size_t bucket_of(std::string_view token) const noexcept;

private:
    std::size_t dim_;
};

struct RemoteEmbeddingConfig {
    /// OpenAI-compatible embeddings URL, e.g. https://api.openai.com/v1/embeddings
    std::string url;
    std::string model = "text-embedding-3-small";
    std::string api_key_env = "OPENAI_API_KEY";
    int timeout_seconds = 60;
};

/// POST {"model","input"} and read data[0].embedding.
class RemoteEmbeddingProvider : public EmbeddingProvider {
public:
    explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig config);

    std::string id() const override { return "remote:" + config_.model; }
    /// Unknown until the first call; 0 before that.
    std::size_t dim() const override;
    Embedding embed(std::string_view text) const override;

    static Embedding parse_reply(const std::string& body, const std::string& provider_id);

private:
    RemoteEmbeddingConfig config_;
    mutable std::mutex mutex_;
    mutable std::size_t dim_ = 0;
};

/// Wraps a provider with an on-disk cache: one JSON file per
/// (provider id, sha256(text)) under `dir`. Cached vectors are stored with
/// round-trip precision, so results are unchanged.
class CachedProvider : public EmbeddingProvider {
public:
    CachedProvider(std::shared_ptr<const EmbeddingProvider> inner, std::filesystem::path dir);

    std::string id() const override { return inner_->id(); }
    std::size_t dim() const override { return inner_->dim(); }
    Embedding embed(std::string_view text) const override;

    std::filesystem::path entry_path(std::string_view text) const;

private:
    std::shared_ptr<const EmbeddingProvider> inner_;
    std::filesystem::path dir_;
    mutable std::mutex mutex_;
};

/// dot(a,b) / (|a| |b|), clamped to [-1, 1]. Throws EmbeddingError on a
/// dimension mismatch or an all-zero vector.
double cosine_similarity(const Embedding& a, const Embedding& b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace cid::embed
