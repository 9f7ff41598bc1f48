#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "autograph/embed.hpp"
#include "autograph/kg.hpp"

namespace autograph {

struct PPRConfig {
    double damping = 0.85;
    double tolerance = 1e-8;
    int max_iterations = 100;
    std::size_t seed_triples_k = 10;

    /// Throws ConfigError when a field is out of range.
    void validate() const;
};

enum class NodeKind { Entity, Passage };

/// A node of the PPR graph. Entities and passages never collide.
struct NodeRef {
    NodeKind kind;
    std::string label;

    auto operator<=>(const NodeRef&) const = default;
};

using NodeScores = std::map<NodeRef, double>;

/// Undirected view used by PPR: entity–entity through fact edges and
/// entity–passage through provenance edges. Parallel edges and self-loops
/// are dropped, so transitions are uniform over distinct neighbours.
class TransitionGraph {
public:
    explicit TransitionGraph(const KnowledgeGraph& graph);

    std::size_t size() const { return nodes_.size(); }
    const std::vector<NodeRef>& nodes() const { return nodes_; }
    const std::vector<std::vector<std::size_t>>& neighbours() const { return adj_; }
    /// Throws ReferenceError for an unknown node.
    std::size_t index_of(const NodeRef& node) const;

private:
    std::vector<NodeRef> nodes_;
    std::map<NodeRef, std::size_t> index_;
    std::vector<std::vector<std::size_t>> adj_;
};

/// Personalization mass over entities from the query's top-k similar fact
/// edges: each edge adds its (non-negative) similarity to both endpoints, then
/// mass is normalized. All-zero similarities fall back to uniform mass over
/// the selected endpoints. Throws EmptySeedError for a graph without facts.
NodeScores seed_personalization(const KnowledgeGraph& graph, std::string_view query,
                                std::size_t k, const EmbeddingProvider& embedder);

/// Power iteration with teleport to `personalization`; dangling mass is
/// redirected to the personalization as well.
NodeScores personalized_pagerank(const KnowledgeGraph& graph, const NodeScores& personalization,
                                 const PPRConfig& config);

/// Same, over a prebuilt transition graph and dense vectors.
std::vector<double> personalized_pagerank(const TransitionGraph& graph,
                                          const std::vector<double>& personalization,
                                          const PPRConfig& config, int* iterations = nullptr);

struct PassageRanking {
    struct Entry {
        std::string passage_id;
        double score;
    };
    std::vector<Entry> ranked;

    std::vector<std::string> ids() const;
    json to_json() const;
};

/// Passages ordered by PPR mass, ties by ascending id, truncated to `top_n`.
/// Passages with zero mass (not connected to any seeded fact) are not
/// retrieved; a graph without facts yields an empty ranking.
PassageRanking rank_passages(const KnowledgeGraph& graph, std::string_view query,
                             std::size_t top_n, const PPRConfig& config,
                             const EmbeddingProvider& embedder);

/// "id: text" blocks for the `{Retrieved Texts}` prompt slot.
std::string passages_context(const KnowledgeGraph& graph, const PassageRanking& ranking);

}  // namespace autograph
