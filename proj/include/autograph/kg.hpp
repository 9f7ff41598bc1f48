#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "autograph/util.hpp"

namespace autograph {

/// One (subject, relation, object) fact as emitted by a constructor model.
struct Triple {
    std::string subject;
    std::string relation;
    std::string object;

    auto operator<=>(const Triple&) const = default;
};

/// Builds a triple, throwing DataError if any field is empty after trimming.
Triple make_triple(std::string_view subject, std::string_view relation, std::string_view object);

/// "(s, r, o)"
std::string linearize(const Triple& t);
/// "s r o", the text that gets embedded for similarity scoring.
std::string embedding_text(const Triple& t);

struct Passage {
    std::string id;
    std::string text;
    std::string source_doc;

    auto operator<=>(const Passage&) const = default;
};

struct QASample {
    std::string id;
    std::string query;
    std::string gold_answer;
    std::vector<Passage> context_passages;
    std::set<std::string> gold_passage_ids;
};

/// Throws DataError when gold ids are not a subset of the context passage ids.
void validate(const QASample& sample);

struct FactEdge {
    std::string subject;
    std::string relation;
    std::string object;
    std::string source_passage;

    Triple triple() const { return {subject, relation, object}; }
    auto operator<=>(const FactEdge&) const = default;
};

struct ProvenanceEdge {
    std::string entity;
    std::string passage;

    auto operator<=>(const ProvenanceEdge&) const = default;
};

struct ParsedTriples {
    std::vector<Triple> triples;
    std::size_t malformed_count = 0;
};

/// Extracts triples from raw constructor output. Elements of the first JSON
/// array that lack a key or carry an empty value are counted and dropped.
/// Throws ParseError when the text holds no JSON array at all.
ParsedTriples parse_triples(std::string_view raw_output);

/// Inverse of parse_triples for well-formed lists.
std::string serialize_triples(const std::vector<Triple>& triples);

/// Trim, collapse internal whitespace, case-fold. Throws NormalizationError
/// when nothing is left.
std::string normalize_entity(std::string_view label);

/// Entity + passage graph. Immutable once built; every accessor is safe to
/// call concurrently.
///
/// Fact edges are kept once per source passage and stored sorted by
/// (subject, relation, object, source). Entity labels are normalized, and
/// entity and passage ids live in separate namespaces.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    const std::set<std::string>& entity_nodes() const { return entities_; }
    const std::map<std::string, Passage>& passages() const { return passages_; }
    std::vector<std::string> passage_ids() const;
    const std::vector<FactEdge>& fact_edges() const { return facts_; }
    const std::vector<ProvenanceEdge>& provenance_edges() const { return provenance_; }

    bool has_entity(const std::string& label) const { return entities_.count(label) > 0; }
    bool has_passage(const std::string& id) const { return passages_.count(id) > 0; }

    /// Indices into fact_edges() touching `entity` as subject or object.
    const std::vector<std::size_t>& incident_edges(const std::string& entity) const;

    bool operator==(const KnowledgeGraph& other) const;

    /// Line-delimited JSON, one `{"s","r","o","src"}` record per fact edge.
    std::string edges_jsonl() const;
    /// Line-delimited JSON passage manifest `{"id","text","source_doc"}`.
    std::string passages_jsonl() const;
    /// SHA-256 over both serializations; identical graphs share an id.
    std::string content_id() const;

    void save(const std::filesystem::path& edges_file,
              const std::filesystem::path& passages_file) const;
    static KnowledgeGraph load(const std::filesystem::path& edges_file,
                               const std::filesystem::path& passages_file);
    static KnowledgeGraph from_jsonl(std::string_view edges, std::string_view passages);

private:
    friend KnowledgeGraph build_graph(
        const std::vector<std::pair<std::string, std::vector<Triple>>>&,
        const std::vector<Passage>&);

    void index();

    std::set<std::string> entities_;
    std::map<std::string, Passage> passages_;
    std::vector<FactEdge> facts_;
    std::vector<ProvenanceEdge> provenance_;
    std::map<std::string, std::vector<std::size_t>> incidence_;
};

/// Merges per-passage triples into one corpus graph. Throws ReferenceError
/// for a passage id that is not among `passages`.
KnowledgeGraph build_graph(
    const std::vector<std::pair<std::string, std::vector<Triple>>>& per_passage_triples,
    const std::vector<Passage>& passages);

/// Triples whose two endpoints both lie within `k` undirected hops of some
/// anchor. Anchors are normalized first; unknown anchors are ignored.
/// Result is deduplicated and sorted.
std::vector<Triple> khop_neighborhood(const KnowledgeGraph& graph,
                                      const std::set<std::string>& anchors, int k);

}  // namespace autograph
