#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "autograph/embed.hpp"
#include "autograph/kg.hpp"
#include "autograph/llm.hpp"

namespace autograph {

enum class EvidenceKind { Subgraph, DenseTriples, TogPaths };
enum class AnchorMode { StringMatch, LlmNer };

std::string to_string(EvidenceKind kind);
std::string to_string(AnchorMode mode);
AnchorMode parse_anchor_mode(std::string_view name);

/// Ranked structured evidence. `items[i]` is the linearization of `paths[i]`:
/// "(s, r, o)" per triple, triples of a path joined by " → ".
struct GraphEvidence {
    EvidenceKind kind = EvidenceKind::Subgraph;
    std::vector<std::string> items;
    std::vector<double> scores;
    std::vector<std::vector<Triple>> paths;

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
    void truncate(std::size_t n);
    /// Newline-joined items, the `{triples string}` prompt context.
    std::string context() const;
    json to_json() const;
};

/// Graph entities occurring as whole words in the normalized query.
std::set<std::string> string_match_anchors(const KnowledgeGraph& graph, std::string_view query);

/// Entities named by the LLM for `query`, normalized. Malformed replies yield
/// no anchors.
std::set<std::string> llm_anchors(std::string_view query, const ChatGateway& gateway,
                                  const Decoding& decoding = {});

/// k-hop neighborhood around the query's anchors; every score is 1.
/// `gateway` is required only for AnchorMode::LlmNer.
GraphEvidence subgraph_retrieve(const KnowledgeGraph& graph, std::string_view query, int hops,
                                AnchorMode mode = AnchorMode::StringMatch,
                                const ChatGateway* gateway = nullptr);

/// Top-k fact edges by cosine between the query and "s r o".
GraphEvidence dense_triple_retrieve(const KnowledgeGraph& graph, std::string_view query,
                                    std::size_t k, const EmbeddingProvider& embedder);

struct TogParams {
    std::size_t width = 3;
    std::size_t depth = 3;
    std::size_t k_paths = 10;
};

/// Beam search over edges from the query's anchors, in either direction.
///
/// Each beam keeps its `width` best continuations (edge cosine to the query,
/// ties by triple order); the `width` best extended paths overall (mean edge
/// score, ties by edge sequence) survive to the next level. Paths never
/// revisit a node. Paths that cannot be extended, plus the survivors of the
/// last level, form the result pool, from which the best `k_paths` are
/// returned.
GraphEvidence tog_beam_search(const KnowledgeGraph& graph, std::string_view query,
                              const TogParams& params, const EmbeddingProvider& embedder);

}  // namespace autograph
