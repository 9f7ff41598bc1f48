#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace autograph {

using Embedding = std::vector<double>;

/// Returns 0 when either vector is all zeros. Throws DimensionError on
/// mismatched lengths.
double cosine(const Embedding& a, const Embedding& b);

template <typename Id>
struct Scored {
    Id id;
    double score;
};

/// The `k` candidates with highest cosine to `query`, descending, ties broken
/// by ascending id.
template <typename Id>
std::vector<Scored<Id>> top_k_similar(const Embedding& query,
                                      const std::vector<std::pair<Id, Embedding>>& candidates,
                                      std::size_t k) {
    std::vector<Scored<Id>> scored;
    scored.reserve(candidates.size());
    for (const auto& [id, vec] : candidates) scored.push_back({id, cosine(query, vec)});
    auto better = [](const Scored<Id>& a, const Scored<Id>& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    };
    k = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                      scored.end(), better);
    scored.resize(k);
    return scored;
}

/// Shareable across threads.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    /// One vector per input text, all of dimension().
    virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) const = 0;
    virtual std::size_t dimension() const = 0;
    /// Distinguishes cache entries between providers.
    virtual std::string id() const = 0;

    Embedding embed_one(const std::string& text) const { return embed({text}).front(); }
};

/// Deterministic provider for tests and offline runs. Each lowercase
/// alphanumeric token is hashed into a signed bucket; the bucket vector is
/// L2-normalized. Text without tokens falls back to a pseudo-random unit
/// vector seeded by the whole string.
class MockEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit MockEmbeddingProvider(std::size_t dimension = 256);

    std::vector<Embedding> embed(const std::vector<std::string>& texts) const override;
    std::size_t dimension() const override { return dim_; }
    std::string id() const override { return "mock-" + std::to_string(dim_); }

private:
    std::size_t dim_;
};

struct RemoteEmbeddingConfig {
    std::string endpoint;  // base URL, e.g. http://host:8000/v1
    std::string model;
    std::string api_key;
    std::size_t batch_size = 64;
    int max_retries = 3;
    int backoff_ms = 200;
    int timeout_s = 60;
};

/// OpenAI-compatible `/embeddings` client.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig config);

    std::vector<Embedding> embed(const std::vector<std::string>& texts) const override;
    std::size_t dimension() const override;
    std::string id() const override { return config_.model + "@" + config_.endpoint; }

private:
    std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) const;

    RemoteEmbeddingConfig config_;
    mutable std::mutex dim_mutex_;
    mutable std::size_t dim_ = 0;
};

/// Memoizes another provider keyed by (provider id, text hash). When given a
/// path the cache is loaded from and appended to a JSONL file.
class CachedEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit CachedEmbeddingProvider(std::shared_ptr<const EmbeddingProvider> inner,
                                     std::filesystem::path cache_file = {});

    std::vector<Embedding> embed(const std::vector<std::string>& texts) const override;
    std::size_t dimension() const override { return inner_->dimension(); }
    std::string id() const override { return inner_->id(); }

    std::size_t hits() const;
    std::size_t misses() const;

private:
    std::string key(const std::string& text) const;

    std::shared_ptr<const EmbeddingProvider> inner_;
    std::filesystem::path file_;
    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<std::string, Embedding> cache_;
    mutable std::size_t hits_ = 0;
    mutable std::size_t misses_ = 0;
};

}  // namespace autograph
