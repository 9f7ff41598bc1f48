#include "autograph/config.hpp"

#include <cstdlib>
#include <fstream>

#include "autograph/errors.hpp"

namespace autograph {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DecodingConfig, temperature, max_tokens, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LlmConfig, kind, script, endpoint, model,
                                                api_key_env, max_retries, backoff_ms, timeout_s,
                                                max_concurrency, transcript_path, cache_path)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EmbeddingConfig, kind, dim, endpoint, model,
                                                api_key_env, batch_size, max_retries, backoff_ms,
                                                timeout_s, cache_path)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RewardConfig, lambda_rep, hard_cap,
                                                apply_repetition_penalty, training_hops)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GRPOConfig, clip_epsilon, std_floor)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ServerConfig, host, port, threads, bearer_token,
                                                request_log)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PathsConfig, dataset, dataset_format, corpus,
                                                constructor_outputs, graph_store, graph_id, runs_dir)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EvalConfig, recall_k, workers)

Decoding DecodingConfig::decoding() const {
    Decoding d;
    d.temperature = temperature;
    d.max_tokens = max_tokens;
    if (seed >= 0) d.seed = seed;
    return d;
}

namespace {

void check_keys(const json& incoming, const json& known, const std::string& section) {
    if (!incoming.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, _] : incoming.items()) {
        if (!known.contains(key))
            throw ConfigError("unknown config key '" + section + "." + key + "'");
    }
}

template <typename T>
void overlay(T& target, const json& incoming, const std::string& section) {
    json current = target;
    check_keys(incoming, current, section);
    current.update(incoming);
    try {
        target = current.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config section '" + section + "': " + e.what());
    }
}

}  // namespace

void RunConfig::merge(const json& j) {
    check_keys(j, to_json(), "root");
    if (j.contains("llm")) overlay(llm, j["llm"], "llm");
    if (j.contains("embedding")) overlay(embedding, j["embedding"], "embedding");
    if (j.contains("constructor")) overlay(constructor, j["constructor"], "constructor");
    if (j.contains("judge")) overlay(judge, j["judge"], "judge");
    if (j.contains("answer")) overlay(answer, j["answer"], "answer");
    if (j.contains("mcq")) overlay(mcq, j["mcq"], "mcq");
    if (j.contains("reward")) overlay(reward, j["reward"], "reward");
    if (j.contains("grpo")) overlay(grpo, j["grpo"], "grpo");
    if (j.contains("server")) overlay(server, j["server"], "server");
    if (j.contains("paths")) overlay(paths, j["paths"], "paths");
    if (j.contains("eval")) overlay(eval, j["eval"], "eval");
    if (j.contains("retriever")) {
        json known = retriever.to_json();
        check_keys(j["retriever"], known, "retriever");
        if (j["retriever"].contains("ppr")) check_keys(j["retriever"]["ppr"], known["ppr"], "retriever.ppr");
        retriever.update_from_json(j["retriever"]);
    }
    if (reward.lambda_rep < 0.0) throw ConfigError("reward.lambda_rep must be non-negative");
    if (!(reward.hard_cap > 0.0 && reward.hard_cap <= 1.0))
        throw ConfigError("reward.hard_cap must lie in (0, 1]");
    if (!(grpo.clip_epsilon > 0.0)) throw ConfigError("grpo.clip_epsilon must be positive");
}

void RunConfig::apply_env() {
    auto env = [](const char* name) -> const char* {
        const char* v = std::getenv(name);
        return (v && *v) ? v : nullptr;
    };
    if (auto v = env("AUTOGRAPH_LLM_KIND")) llm.kind = v;
    if (auto v = env("AUTOGRAPH_LLM_SCRIPT")) llm.script = v;
    if (auto v = env("AUTOGRAPH_LLM_ENDPOINT")) llm.endpoint = v;
    if (auto v = env("AUTOGRAPH_LLM_MODEL")) llm.model = v;
    if (auto v = env("AUTOGRAPH_EMBED_KIND")) embedding.kind = v;
    if (auto v = env("AUTOGRAPH_EMBED_ENDPOINT")) embedding.endpoint = v;
    if (auto v = env("AUTOGRAPH_EMBED_MODEL")) embedding.model = v;
    if (auto v = env("AUTOGRAPH_HOST")) server.host = v;
    if (auto v = env("AUTOGRAPH_PORT")) {
        try {
            server.port = std::stoi(v);
        } catch (const std::exception&) {
            throw ConfigError(std::string("AUTOGRAPH_PORT is not a number: ") + v);
        }
    }
    if (auto v = env("AUTOGRAPH_BEARER_TOKEN")) server.bearer_token = v;
    if (auto v = env("AUTOGRAPH_GRAPH_STORE")) paths.graph_store = v;
}

RunConfig RunConfig::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file.string());
    auto j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file " + file.string() + " is not valid JSON");
    RunConfig cfg;
    cfg.merge(j);
    return cfg;
}

json RunConfig::to_json() const {
    json j = {{"llm", llm},
              {"embedding", embedding},
              {"constructor", constructor},
              {"judge", judge},
              {"answer", answer},
              {"mcq", mcq},
              {"retriever", retriever.to_json()},
              {"reward", reward},
              {"grpo", grpo},
              {"server", server},
              {"paths", paths},
              {"eval", eval}};
    if (!server.bearer_token.empty()) j["server"]["bearer_token"] = "<redacted>";
    return j;
}

std::string RunConfig::hash() const {
    return sha256_hex(canonical_dump(to_json())).substr(0, 12);
}

std::shared_ptr<const ChatGateway> make_gateway(const LlmConfig& config) {
    std::shared_ptr<const ChatGateway> gw;
    if (config.kind == "scripted") {
        if (config.script.empty()) throw ConfigError("llm.kind=scripted needs llm.script");
        gw = std::make_shared<ScriptedGateway>(ScriptedGateway::from_file(config.script));
    } else if (config.kind == "remote") {
        RemoteChatConfig rc;
        rc.endpoint = config.endpoint;
        rc.model = config.model;
        if (const char* key = std::getenv(config.api_key_env.c_str())) rc.api_key = key;
        rc.max_retries = config.max_retries;
        rc.backoff_ms = config.backoff_ms;
        rc.timeout_s = config.timeout_s;
        rc.max_concurrency = config.max_concurrency;
        rc.transcript_file = config.transcript_path;
        gw = std::make_shared<RemoteChatGateway>(rc);
    } else {
        throw ConfigError("unknown llm.kind '" + config.kind + "'");
    }
    if (!config.cache_path.empty()) gw = std::make_shared<CachingGateway>(gw, config.cache_path);
    return gw;
}

std::shared_ptr<const EmbeddingProvider> make_embedder(const EmbeddingConfig& config) {
    std::shared_ptr<const EmbeddingProvider> p;
    if (config.kind == "mock") {
        p = std::make_shared<MockEmbeddingProvider>(config.dim);
    } else if (config.kind == "remote") {
        RemoteEmbeddingConfig rc;
        rc.endpoint = config.endpoint;
        rc.model = config.model;
        if (const char* key = std::getenv(config.api_key_env.c_str())) rc.api_key = key;
        rc.batch_size = config.batch_size;
        rc.max_retries = config.max_retries;
        rc.backoff_ms = config.backoff_ms;
        rc.timeout_s = config.timeout_s;
        p = std::make_shared<RemoteEmbeddingProvider>(rc);
    } else {
        throw ConfigError("unknown embedding.kind '" + config.kind + "'");
    }
    // The cache always fronts the provider; without a path it is in-memory.
    return std::make_shared<CachedEmbeddingProvider>(p, config.cache_path);
}

}  // namespace autograph
