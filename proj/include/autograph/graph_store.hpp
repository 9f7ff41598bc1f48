#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "autograph/kg.hpp"
#include "autograph/llm.hpp"

namespace autograph {

struct GraphStats {
    std::size_t entity_nodes = 0;
    std::size_t passage_nodes = 0;
    std::size_t fact_edges = 0;
    std::size_t provenance_edges = 0;

    json to_json() const;
};

GraphStats graph_stats(const KnowledgeGraph& graph);

/// First 16 hex chars of the graph's content hash.
std::string graph_id(const KnowledgeGraph& graph);

/// Content-addressed directory of graphs: `<root>/<id>/{edges,passages}.jsonl`.
/// Loaded graphs are cached and shared read-only.
class GraphStore {
public:
    explicit GraphStore(std::filesystem::path root);

    /// Persists the graph and returns its id. Storing identical content again
    /// is a no-op; an existing id whose stored content differs raises
    /// ConflictError.
    std::string put(const KnowledgeGraph& graph);

    /// Throws ReferenceError for an unknown id.
    std::shared_ptr<const KnowledgeGraph> get(const std::string& id) const;
    bool contains(const std::string& id) const;

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path dir_for(const std::string& id) const;

    std::filesystem::path root_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, std::shared_ptr<const KnowledgeGraph>> cache_;
};

struct PassageFailure {
    std::string passage_id;
    std::string message;
};

struct ConstructionResult {
    KnowledgeGraph graph;
    std::vector<PassageFailure> failures;
    std::size_t malformed_count = 0;
    std::size_t gateway_calls = 0;
};

/// Builds a corpus graph. A passage's raw output comes from `outputs` when
/// present, otherwise from the construction prompt through `gateway`.
/// Passages whose output cannot be obtained or parsed are logged as failures
/// and contribute no facts; if every passage fails, the last error is
/// rethrown. An empty corpus is a DataError.
ConstructionResult construct_graph(const std::vector<Passage>& passages,
                                   const std::map<std::string, std::string>& outputs,
                                   const ChatGateway* gateway, const Decoding& decoding);

/// JSONL `{"id","output"}` per passage.
std::map<std::string, std::string> load_constructor_outputs(const std::filesystem::path& path);

}  // namespace autograph
