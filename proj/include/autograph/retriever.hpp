#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "autograph/retrieve_graph.hpp"
#include "autograph/retrieve_text.hpp"

namespace autograph {

enum class RetrieverKind { Subgraph, DenseTriples, Tog, Ppr };

std::string to_string(RetrieverKind kind);
/// Accepts subgraph, dense_triples (dense), tog, ppr (hipporag).
RetrieverKind parse_retriever_kind(std::string_view name);

/// Everything needed to run one retriever the same way in scoring,
/// evaluation and the inspection endpoint.
struct RetrieverSpec {
    RetrieverKind kind = RetrieverKind::Subgraph;
    int hops = 1;
    AnchorMode anchor_mode = AnchorMode::StringMatch;
    std::size_t k = 10;          // dense triples
    TogParams tog;               // width/depth/k_paths
    std::size_t top_n = 5;       // ppr passages
    PPRConfig ppr;
    std::size_t max_items = 10;  // cap on graph evidence handed to the answerer

    bool is_text() const { return kind == RetrieverKind::Ppr; }

    /// Missing keys keep their current values.
    void update_from_json(const json& j);
    json to_json() const;
};

using Retrieval = std::variant<GraphEvidence, PassageRanking>;

/// Dispatches on spec.kind. Graph evidence is not truncated here.
Retrieval run_retriever(const KnowledgeGraph& graph, std::string_view query,
                        const RetrieverSpec& spec, const EmbeddingProvider& embedder,
                        const ChatGateway* gateway = nullptr);

json retrieval_to_json(const Retrieval& r);

}  // namespace autograph
