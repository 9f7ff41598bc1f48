#include "autograph/embed.hpp"

#include <cctype>
#include <cmath>
#include <fstream>

#include <spdlog/spdlog.h>

#include "autograph/errors.hpp"
#include "autograph/util.hpp"

namespace autograph {

double cosine(const Embedding& a, const Embedding& b) {
    if (a.size() != b.size())
        throw DimensionError("cosine: dimension mismatch " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Embedding mock_vector(const std::string& text, std::size_t dim) {
    Embedding v(dim, 0.0);
    std::string token;
    bool any = false;
    auto flush = [&] {
        if (token.empty()) return;
        std::uint64_t h = fnv1a64(token);
        v[h % dim] += (h >> 63) ? -1.0 : 1.0;
        any = true;
        token.clear();
    };
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)) || (static_cast<unsigned char>(c) & 0x80)) {
            token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            flush();
        }
    }
    flush();

    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (!any || norm == 0.0) {
        // Tokens cancelled out or none at all.
        std::uint64_t state = fnv1a64(text, 0x84222325cbf29ce4ULL);
        norm = 0.0;
        for (auto& x : v) {
            x = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53 * 2.0 - 1.0;
            norm += x * x;
        }
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

}  // namespace

MockEmbeddingProvider::MockEmbeddingProvider(std::size_t dimension) : dim_(dimension) {
    if (dim_ == 0) throw ConfigError("embedding dimension must be positive");
}

std::vector<Embedding> MockEmbeddingProvider::embed(const std::vector<std::string>& texts) const {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(mock_vector(t, dim_));
    return out;
}

CachedEmbeddingProvider::CachedEmbeddingProvider(std::shared_ptr<const EmbeddingProvider> inner,
                                                 std::filesystem::path cache_file)
    : inner_(std::move(inner)), file_(std::move(cache_file)) {
    if (file_.empty() || !std::filesystem::exists(file_)) return;
    std::ifstream in(file_);
    std::string line;
    std::size_t loaded = 0;
    while (std::getline(in, line)) {
        auto j = json::parse(line, nullptr, false);
        // A torn final line from an interrupted run is skipped.
        if (j.is_discarded() || !j.contains("k") || !j.contains("v")) continue;
        cache_[j["k"].get<std::string>()] = j["v"].get<Embedding>();
        ++loaded;
    }
    spdlog::debug("embedding cache: loaded {} entries from {}", loaded, file_.string());
}

std::string CachedEmbeddingProvider::key(const std::string& text) const {
    return inner_->id() + ":" + hex64(fnv1a64(text)) + hex64(fnv1a64(text, 0x9e3779b97f4a7c15ULL));
}

std::vector<Embedding> CachedEmbeddingProvider::embed(const std::vector<std::string>& texts) const {
    std::vector<Embedding> out(texts.size());
    std::vector<std::size_t> missing;
    {
        std::shared_lock lock(mutex_);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            auto it = cache_.find(key(texts[i]));
            if (it != cache_.end()) {
                out[i] = it->second;
            } else {
                missing.push_back(i);
            }
        }
    }
    if (missing.empty()) {
        std::unique_lock lock(mutex_);
        hits_ += texts.size();
        return out;
    }

    std::vector<std::string> batch;
    batch.reserve(missing.size());
    for (auto i : missing) batch.push_back(texts[i]);
    auto fresh = inner_->embed(batch);

    std::unique_lock lock(mutex_);
    hits_ += texts.size() - missing.size();
    misses_ += missing.size();
    std::ofstream file;
    if (!file_.empty()) file.open(file_, std::ios::app);
    for (std::size_t j = 0; j < missing.size(); ++j) {
        out[missing[j]] = fresh[j];
        auto k = key(batch[j]);
        if (cache_.emplace(k, fresh[j]).second && file.is_open())
            file << canonical_dump({{"k", k}, {"v", fresh[j]}}) << '\n';
    }
    return out;
}

std::size_t CachedEmbeddingProvider::hits() const {
    std::shared_lock lock(mutex_);
    return hits_;
}

std::size_t CachedEmbeddingProvider::misses() const {
    std::shared_lock lock(mutex_);
    return misses_;
}

}  // namespace autograph
