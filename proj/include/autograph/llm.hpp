#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "autograph/util.hpp"

namespace autograph {

using Bindings = std::map<std::string, std::string>;

/// A prompt with `{name}` placeholders. Placeholder names may contain spaces
/// ("{triples string}").
class PromptTemplate {
public:
    PromptTemplate(std::string name, std::string text);

    const std::string& name() const { return name_; }
    const std::string& text() const { return text_; }
    const std::vector<std::string>& placeholders() const { return placeholders_; }

    /// Throws TemplateError naming the first unbound placeholder.
    std::string render(const Bindings& bindings) const;

private:
    std::string name_;
    std::string text_;
    std::vector<std::string> placeholders_;
};

namespace templates {
inline constexpr std::string_view kConstruct = "construct";
inline constexpr std::string_view kDeducibleJudge = "deducible_judge";
inline constexpr std::string_view kAnswerGraph = "answer_graph";
inline constexpr std::string_view kAnswerText = "answer_text";
inline constexpr std::string_view kMcqGenerate = "mcq_generate";
inline constexpr std::string_view kMcqAnswer = "mcq_answer";
// Not one of the pipeline prompts: used only by the llm_ner anchor mode.
inline constexpr std::string_view kEntityExtract = "entity_extract";
}  // namespace templates

/// The six pipeline prompts plus the auxiliary entity-extraction prompt.
const PromptTemplate& prompt_template(std::string_view name);
std::vector<std::string> template_names();

struct Decoding {
    double temperature = 0.0;
    int max_tokens = 512;
    std::optional<long long> seed;
};

struct ChatResponse {
    std::string text;
    std::string finish_reason = "stop";
    long long usage_tokens = 0;

    bool truncated() const { return finish_reason != "stop"; }
};

struct TranscriptEntry {
    std::string template_name;
    std::string bindings_hash;
    std::string prompt;
    std::string response;
    std::string finish_reason;
};

/// Stable hash of a binding map; the scripted gateway keys on it.
std::string bindings_hash(const Bindings& bindings);

/// Chat-completion backend. Implementations are shareable across threads.
class ChatGateway {
public:
    virtual ~ChatGateway() = default;

    /// Renders `template_name` with `bindings` and sends it. Unbound
    /// placeholders raise TemplateError before any network traffic.
    virtual ChatResponse complete(std::string_view template_name, const Bindings& bindings,
                                  const Decoding& decoding) const = 0;
};

/// Deterministic test double. Rules are tried in order: exact bindings hash,
/// then substring rules, then a per-template default. No match raises
/// ProviderError.
class ScriptedGateway final : public ChatGateway {
public:
    struct Rule {
        std::string template_name;
        std::optional<std::string> bindings_hash;
        Bindings contains;  // binding name -> required substring
        bool is_default = false;
        ChatResponse response;
    };

    ScriptedGateway() = default;
    explicit ScriptedGateway(std::vector<Rule> rules,
                             std::chrono::milliseconds delay = std::chrono::milliseconds(0));
    ScriptedGateway(ScriptedGateway&& other) noexcept
        : rules_(std::move(other.rules_)),
          responder_(std::move(other.responder_)),
          delay_(other.delay_),
          calls_(other.calls_.load()) {}

    /// `{"delay_ms":0,"responses":[{"template":..,"bindings":{..}|"when":{..}|"default":true,
    ///   "response":"..","finish_reason":"stop"}]}`
    static ScriptedGateway from_json(const json& script);
    static ScriptedGateway from_file(const std::filesystem::path& path);

    /// Catch-all callback consulted before the default rules.
    using Responder = std::function<std::optional<std::string>(std::string_view, const Bindings&)>;
    void set_responder(Responder responder) { responder_ = std::move(responder); }

    void add(Rule rule) { rules_.push_back(std::move(rule)); }
    void respond(std::string template_name, Bindings contains, std::string text);
    void respond_default(std::string template_name, std::string text);

    ChatResponse complete(std::string_view template_name, const Bindings& bindings,
                          const Decoding& decoding) const override;

    std::size_t calls() const { return calls_.load(); }

private:
    std::vector<Rule> rules_;
    Responder responder_;
    std::chrono::milliseconds delay_{0};
    mutable std::atomic<std::size_t> calls_{0};
};

/// Per-caller transcript wrapper around a shared gateway. Each request in the
/// server gets its own instance, so transcripts never interleave.
class RecordingGateway final : public ChatGateway {
public:
    explicit RecordingGateway(const ChatGateway& inner) : inner_(inner) {}

    ChatResponse complete(std::string_view template_name, const Bindings& bindings,
                          const Decoding& decoding) const override;

    std::vector<TranscriptEntry> transcript() const;
    std::size_t count(std::string_view template_name) const;
    /// One JSON object per line.
    std::string transcript_jsonl() const;

private:
    const ChatGateway& inner_;
    mutable std::mutex mutex_;
    mutable std::vector<TranscriptEntry> entries_;
};

/// Persists responses keyed by (template, bindings, decoding) to a JSONL file
/// so interrupted corpus builds can resume without repeating calls.
class CachingGateway final : public ChatGateway {
public:
    CachingGateway(std::shared_ptr<const ChatGateway> inner, std::filesystem::path cache_file);

    ChatResponse complete(std::string_view template_name, const Bindings& bindings,
                          const Decoding& decoding) const override;

    std::size_t hits() const { return hits_.load(); }

private:
    std::shared_ptr<const ChatGateway> inner_;
    std::filesystem::path file_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, ChatResponse> cache_;
    mutable std::atomic<std::size_t> hits_{0};
};

struct RemoteChatConfig {
    std::string endpoint;  // base URL, e.g. http://host:8000/v1
    std::string model;
    std::string api_key;
    int max_retries = 3;
    int backoff_ms = 200;
    int timeout_s = 120;
    int max_concurrency = 8;
    std::filesystem::path transcript_file;  // optional JSONL request/response log
};

/// OpenAI-compatible `/chat/completions` client. Retries transport failures
/// and 5xx/429 answers with exponential backoff; the rendered prompt is sent
/// as a single user message.
class RemoteChatGateway final : public ChatGateway {
public:
    explicit RemoteChatGateway(RemoteChatConfig config);
    ~RemoteChatGateway() override;

    ChatResponse complete(std::string_view template_name, const Bindings& bindings,
                          const Decoding& decoding) const override;

private:
    RemoteChatConfig config_;
    mutable std::counting_semaphore<1024> slots_;
    mutable std::mutex log_mutex_;
};

struct FinalAnswer {
    std::string text;
    bool fallback = false;  // no "Answer:" marker was present
};

/// Text after the last "Answer:" marker, trimmed; the whole reply otherwise.
FinalAnswer extract_final_answer(std::string_view response_text);

}  // namespace autograph
