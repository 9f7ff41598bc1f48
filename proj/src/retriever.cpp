#include "autograph/retriever.hpp"

#include "autograph/errors.hpp"

namespace autograph {

std::string to_string(RetrieverKind kind) {
    switch (kind) {
        case RetrieverKind::Subgraph: return "subgraph";
        case RetrieverKind::DenseTriples: return "dense_triples";
        case RetrieverKind::Tog: return "tog";
        case RetrieverKind::Ppr: return "ppr";
    }
    return "unknown";
}

RetrieverKind parse_retriever_kind(std::string_view name) {
    if (name == "subgraph") return RetrieverKind::Subgraph;
    if (name == "dense_triples" || name == "dense") return RetrieverKind::DenseTriples;
    if (name == "tog") return RetrieverKind::Tog;
    if (name == "ppr" || name == "hipporag") return RetrieverKind::Ppr;
    throw ConfigError("unknown retriever '" + std::string(name) + "'");
}

void RetrieverSpec::update_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("retriever spec must be a JSON object");
    try {
        if (j.contains("kind")) kind = parse_retriever_kind(j["kind"].get<std::string>());
        hops = j.value("hops", hops);
        if (j.contains("anchor_mode"))
            anchor_mode = parse_anchor_mode(j["anchor_mode"].get<std::string>());
        k = j.value("k", k);
        tog.width = j.value("width", tog.width);
        tog.depth = j.value("depth", tog.depth);
        tog.k_paths = j.value("k_paths", tog.k_paths);
        top_n = j.value("top_n", top_n);
        max_items = j.value("max_items", max_items);
        if (j.contains("ppr")) {
            const auto& p = j["ppr"];
            ppr.damping = p.value("damping", ppr.damping);
            ppr.tolerance = p.value("tolerance", ppr.tolerance);
            ppr.max_iterations = p.value("max_iterations", ppr.max_iterations);
            ppr.seed_triples_k = p.value("seed_triples_k", ppr.seed_triples_k);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("retriever spec: ") + e.what());
    }
    if (hops < 1) throw ConfigError("retriever hops must be >= 1");
    ppr.validate();
}

json RetrieverSpec::to_json() const {
    return {{"kind", to_string(kind)},
            {"hops", hops},
            {"anchor_mode", to_string(anchor_mode)},
            {"k", k},
            {"width", tog.width},
            {"depth", tog.depth},
            {"k_paths", tog.k_paths},
            {"top_n", top_n},
            {"max_items", max_items},
            {"ppr",
             {{"damping", ppr.damping},
              {"tolerance", ppr.tolerance},
              {"max_iterations", ppr.max_iterations},
              {"seed_triples_k", ppr.seed_triples_k}}}};
}

Retrieval run_retriever(const KnowledgeGraph& graph, std::string_view query,
                        const RetrieverSpec& spec, const EmbeddingProvider& embedder,
                        const ChatGateway* gateway) {
    switch (spec.kind) {
        case RetrieverKind::Subgraph:
            return subgraph_retrieve(graph, query, spec.hops, spec.anchor_mode, gateway);
        case RetrieverKind::DenseTriples:
            return dense_triple_retrieve(graph, query, spec.k, embedder);
        case RetrieverKind::Tog:
            return tog_beam_search(graph, query, spec.tog, embedder);
        case RetrieverKind::Ppr:
            return rank_passages(graph, query, spec.top_n, spec.ppr, embedder);
    }
    throw ConfigError("unhandled retriever kind");
}

json retrieval_to_json(const Retrieval& r) {
    if (const auto* ev = std::get_if<GraphEvidence>(&r)) return ev->to_json();
    return std::get<PassageRanking>(r).to_json();
}

}  // namespace autograph
