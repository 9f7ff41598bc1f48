#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "autograph/embed.hpp"
#include "autograph/grpo.hpp"
#include "autograph/llm.hpp"
#include "autograph/retriever.hpp"

namespace autograph {

struct DecodingConfig {
    double temperature = 0.0;
    int max_tokens = 512;
    long long seed = -1;  // negative: do not send a seed

    Decoding decoding() const;
};

struct LlmConfig {
    std::string kind = "scripted";  // scripted | remote
    std::string script;             // scripted gateway fixture
    std::string endpoint = "http://127.0.0.1:8000/v1";
    std::string model = "Qwen2.5-7B-Instruct";
    std::string api_key_env = "AUTOGRAPH_LLM_API_KEY";
    int max_retries = 3;
    int backoff_ms = 200;
    int timeout_s = 120;
    int max_concurrency = 8;
    std::string transcript_path;
    std::string cache_path;  // response cache for resumable builds
};

struct EmbeddingConfig {
    std::string kind = "mock";  // mock | remote
    std::size_t dim = 256;
    std::string endpoint = "http://127.0.0.1:8001/v1";
    std::string model = "Qwen3-Embedding-0.6B";
    std::string api_key_env = "AUTOGRAPH_EMBED_API_KEY";
    std::size_t batch_size = 64;
    int max_retries = 3;
    int backoff_ms = 200;
    int timeout_s = 60;
    std::string cache_path;
};

struct RewardConfig {
    double lambda_rep = 1.0;
    double hard_cap = 0.3;
    bool apply_repetition_penalty = true;
    int training_hops = 3;
};

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    int threads = 16;
    std::string bearer_token;
    std::string request_log;  // one JSON line per request
};

struct PathsConfig {
    std::string dataset;
    std::string dataset_format = "generic_jsonl";
    std::string corpus;               // passage manifest
    std::string constructor_outputs;  // optional JSONL {"id","output"} per passage
    std::string graph_store = "graphs";
    std::string graph_id;
    std::string runs_dir = "runs";
};

struct EvalConfig {
    std::size_t recall_k = 5;
    std::size_t workers = 1;
};

/// Resolved run configuration. Sources apply in the order defaults, config
/// file, environment, command-line flags.
struct RunConfig {
    LlmConfig llm;
    EmbeddingConfig embedding;
    DecodingConfig constructor{0.0, 2048, -1};
    DecodingConfig judge{0.0, 16, -1};
    DecodingConfig answer{0.0, 512, -1};
    DecodingConfig mcq{0.0, 1024, -1};
    RetrieverSpec retriever;
    RewardConfig reward;
    GRPOConfig grpo;
    ServerConfig server;
    PathsConfig paths;
    EvalConfig eval;

    /// Overlays the keys present in `j`; unknown keys raise ConfigError.
    void merge(const json& j);
    void apply_env();
    static RunConfig load(const std::filesystem::path& file);

    json to_json() const;
    /// First 12 hex chars of the SHA-256 of to_json().
    std::string hash() const;
};

std::shared_ptr<const ChatGateway> make_gateway(const LlmConfig& config);
std::shared_ptr<const EmbeddingProvider> make_embedder(const EmbeddingConfig& config);

}  // namespace autograph
