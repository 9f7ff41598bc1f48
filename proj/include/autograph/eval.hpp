#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "autograph/kg.hpp"
#include "autograph/llm.hpp"
#include "autograph/retriever.hpp"
#include "autograph/reward.hpp"

namespace autograph {

/// Lowercase, drop ASCII punctuation and the articles a/an/the, split on
/// whitespace.
std::vector<std::string> normalize_answer_tokens(std::string_view text);

/// Token-level F1 between normalized answers. Both empty scores 1, exactly
/// one empty scores 0.
double answer_f1(std::string_view prediction, std::string_view gold);

// recall@k is the very same function the indexing reward uses.
using ::autograph::recall_at_k;

struct SampleResult {
    std::string id;
    std::map<std::string, double> metrics;
    std::vector<std::string> flags;
    std::string prediction;
};

struct EvalReport {
    std::vector<SampleResult> per_sample;
    std::map<std::string, double> aggregates;
    json config_snapshot = json::object();

    /// Recomputes aggregates as per-metric means over the samples that carry
    /// the metric, and orders samples by id.
    void finalize();
    json to_json() const;
    /// Fixed-width text table, one row per sample plus a mean row.
    std::string table() const;
};

struct EvalOptions {
    Decoding answer_decoding{0.0, 512, std::nullopt};
    std::size_t recall_k = 5;
    std::size_t workers = 1;
};

/// Retrieve, answer with the matching prompt, extract, score. Gateway
/// failures mark the sample (f1 = 0, "gateway_error") and the run goes on.
EvalReport run_qa_eval(const KnowledgeGraph& graph, const std::vector<QASample>& samples,
                       const RetrieverSpec& spec, const ChatGateway& gateway,
                       const EmbeddingProvider& embedder, const EvalOptions& options = {},
                       const json& config_snapshot = json::object());

struct Mcq {
    std::string question;
    std::vector<std::string> options;  // exactly four, labels stripped
    int answer = 0;                    // 0..3
};

/// "A", "a", "A.", "(b)", "C: text" -> 0..3.
std::optional<int> parse_answer_letter(std::string_view text);

/// Valid MCQs from generator output. Throws ParseError when no JSON array is
/// present.
std::vector<Mcq> parse_mcqs(std::string_view raw);

/// Per passage: generate MCQs from the passage, answer each with only the
/// passage's own triples as context, report accuracy. Passages whose MCQ
/// output is unusable are flagged "mcq_malformed" and carry no metrics.
EvalReport mcq_intrinsic_harness(const std::vector<Passage>& passages, const KnowledgeGraph& graph,
                                 const ChatGateway& gateway, const Decoding& decoding = {},
                                 const json& config_snapshot = json::object());

}  // namespace autograph
