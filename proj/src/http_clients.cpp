// Remote embedding and chat clients over OpenAI-compatible HTTP endpoints.

#include <cmath>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "autograph/embed.hpp"
#include "autograph/errors.hpp"
#include "autograph/llm.hpp"

namespace autograph {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;    // base path without trailing slash
};

Endpoint split_url(const std::string& url) {
    auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
    auto slash = url.find('/', scheme + 3);
    Endpoint e;
    e.origin = url.substr(0, slash);
    e.path = slash == std::string::npos ? "" : url.substr(slash);
    while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
    return e;
}

// POSTs JSON and returns the parsed body. Transport errors, 429 and 5xx are
// retried with exponential backoff; other 4xx fail immediately.
json post_json(const std::string& base_url, const std::string& route, const json& body,
               const std::string& api_key, int max_retries, int backoff_ms, int timeout_s) {
    Endpoint ep = split_url(base_url);
    httplib::Client client(ep.origin);
    client.set_connection_timeout(timeout_s, 0);
    client.set_read_timeout(timeout_s, 0);
    client.set_write_timeout(timeout_s, 0);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

    const std::string payload = body.dump();
    const int attempts = std::max(1, max_retries + 1);
    std::string last_error;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        auto res = client.Post(ep.path + route, headers, payload, "application/json");
        if (res && res->status >= 200 && res->status < 300) {
            auto j = json::parse(res->body, nullptr, false);
            if (j.is_discarded()) throw ProviderError("non-JSON response from " + base_url + route);
            return j;
        }
        if (res && res->status >= 400 && res->status < 500 && res->status != 429) {
            throw ProviderError("HTTP " + std::to_string(res->status) + " from " + base_url +
                                route + ": " + res->body.substr(0, 200));
        }
        last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
        spdlog::warn("POST {}{} failed ({}), attempt {}/{}", base_url, route, last_error, attempt,
                     attempts);
        if (attempt < attempts)
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms << (attempt - 1)));
    }
    throw TransportError("POST " + base_url + route + ": " + last_error, attempts);
}

}  // namespace

// ---------------------------------------------------------------------------

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingConfig config)
    : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw ConfigError("remote embedding provider needs an endpoint");
    if (config_.batch_size == 0) config_.batch_size = 1;
}

std::vector<Embedding> RemoteEmbeddingProvider::embed_batch(
    const std::vector<std::string>& texts) const {
    json body = {{"input", texts}};
    if (!config_.model.empty()) body["model"] = config_.model;
    json res = post_json(config_.endpoint, "/embeddings", body, config_.api_key,
                         config_.max_retries, config_.backoff_ms, config_.timeout_s);
    if (!res.contains("data") || !res["data"].is_array() || res["data"].size() != texts.size())
        throw ProviderError("embedding response has " +
                            std::to_string(res.value("data", json::array()).size()) +
                            " vectors for " + std::to_string(texts.size()) + " inputs");
    std::vector<Embedding> out(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const auto& item = res["data"][i];
        std::size_t index = item.value("index", i);
        if (index >= texts.size()) throw ProviderError("embedding index out of range");
        out[index] = item.at("embedding").get<Embedding>();
    }
    return out;
}

std::vector<Embedding> RemoteEmbeddingProvider::embed(const std::vector<std::string>& texts) const {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += config_.batch_size) {
        std::vector<std::string> batch(
            texts.begin() + static_cast<std::ptrdiff_t>(start),
            texts.begin() + static_cast<std::ptrdiff_t>(std::min(texts.size(), start + config_.batch_size)));
        for (auto& v : embed_batch(batch)) out.push_back(std::move(v));
    }
    std::lock_guard lock(dim_mutex_);
    for (const auto& v : out) {
        if (v.empty()) throw ProviderError("empty embedding vector");
        for (double x : v) {
            if (!std::isfinite(x)) throw ProviderError("non-finite embedding value");
        }
        if (dim_ == 0) dim_ = v.size();
        if (v.size() != dim_)
            throw ProviderError("embedding dimension changed from " + std::to_string(dim_) +
                                " to " + std::to_string(v.size()));
    }
    return out;
}

std::size_t RemoteEmbeddingProvider::dimension() const {
    {
        std::lock_guard lock(dim_mutex_);
        if (dim_ != 0) return dim_;
    }
    return embed({"dimension probe"}).front().size();
}

// ---------------------------------------------------------------------------

RemoteChatGateway::RemoteChatGateway(RemoteChatConfig config)
    : config_(std::move(config)), slots_(std::clamp(config_.max_concurrency, 1, 1024)) {
    if (config_.endpoint.empty()) throw ConfigError("remote chat gateway needs an endpoint");
}

RemoteChatGateway::~RemoteChatGateway() = default;

ChatResponse RemoteChatGateway::complete(std::string_view template_name, const Bindings& bindings,
                                         const Decoding& decoding) const {
    std::string prompt = prompt_template(template_name).render(bindings);
    json body = {{"model", config_.model},
                 {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                 {"temperature", decoding.temperature},
                 {"max_tokens", decoding.max_tokens}};
    if (decoding.seed) body["seed"] = *decoding.seed;

    slots_.acquire();
    json res;
    try {
        res = post_json(config_.endpoint, "/chat/completions", body, config_.api_key,
                        config_.max_retries, config_.backoff_ms, config_.timeout_s);
    } catch (...) {
        slots_.release();
        throw;
    }
    slots_.release();

    if (!res.contains("choices") || !res["choices"].is_array() || res["choices"].empty())
        throw ProviderError("chat response without choices");
    const auto& choice = res["choices"][0];
    ChatResponse r;
    bool has_content = choice.contains("message") && choice["message"].contains("content") &&
                       choice["message"]["content"].is_string();
    if (has_content) r.text = choice["message"]["content"].get<std::string>();
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string())
        r.finish_reason = choice["finish_reason"].get<std::string>();
    if (res.contains("usage") && res["usage"].is_object())
        r.usage_tokens = res["usage"].value("total_tokens", 0LL);
    if (!r.truncated() && !has_content) throw ProviderError("chat response without message content");

    if (!config_.transcript_file.empty()) {
        std::lock_guard lock(log_mutex_);
        std::ofstream out(config_.transcript_file, std::ios::app);
        out << canonical_dump({{"template", template_name}, {"request", body}, {"response", res}})
            << '\n';
    }
    return r;
}

}  // namespace autograph
