#include "autograph/retrieve_graph.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>

#include "autograph/errors.hpp"

namespace autograph {

std::string to_string(EvidenceKind kind) {
    switch (kind) {
        case EvidenceKind::Subgraph: return "subgraph";
        case EvidenceKind::DenseTriples: return "dense_triples";
        case EvidenceKind::TogPaths: return "tog_paths";
    }
    return "unknown";
}

std::string to_string(AnchorMode mode) {
    return mode == AnchorMode::StringMatch ? "string_match" : "llm_ner";
}

AnchorMode parse_anchor_mode(std::string_view name) {
    if (name == "string_match") return AnchorMode::StringMatch;
    if (name == "llm_ner") return AnchorMode::LlmNer;
    throw ConfigError("unknown anchor mode '" + std::string(name) + "'");
}

void GraphEvidence::truncate(std::size_t n) {
    if (items.size() <= n) return;
    items.resize(n);
    scores.resize(n);
    paths.resize(n);
}

std::string GraphEvidence::context() const {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += '\n';
        out += items[i];
    }
    return out;
}

json GraphEvidence::to_json() const {
    return {{"kind", to_string(kind)}, {"items", items}, {"scores", scores}};
}

namespace {

bool word_char(char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || u >= 0x80;
}

bool contains_whole_word(std::string_view haystack, std::string_view needle) {
    for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + 1)) {
        bool left = pos == 0 || !word_char(haystack[pos - 1]) || !word_char(needle.front());
        std::size_t end = pos + needle.size();
        bool right = end == haystack.size() || !word_char(haystack[end]) || !word_char(needle.back());
        if (left && right) return true;
    }
    return false;
}

GraphEvidence from_triples(EvidenceKind kind, std::vector<Triple> triples,
                           std::vector<double> scores) {
    GraphEvidence ev;
    ev.kind = kind;
    ev.scores = std::move(scores);
    for (auto& t : triples) {
        ev.items.push_back(linearize(t));
        ev.paths.push_back({std::move(t)});
    }
    return ev;
}

}  // namespace

std::set<std::string> string_match_anchors(const KnowledgeGraph& graph, std::string_view query) {
    std::string q = ascii_lower(collapse_whitespace(query));
    std::set<std::string> anchors;
    for (const auto& label : graph.entity_nodes()) {
        if (label.size() <= q.size() && contains_whole_word(q, label)) anchors.insert(label);
    }
    return anchors;
}

std::set<std::string> llm_anchors(std::string_view query, const ChatGateway& gateway,
                                  const Decoding& decoding) {
    auto reply = gateway.complete(templates::kEntityExtract, {{"question", std::string(query)}},
                                  decoding);
    std::set<std::string> anchors;
    auto array = extract_first_json_array(reply.text);
    if (!array) return anchors;
    for (const auto& e : *array) {
        if (!e.is_string()) continue;
        try {
            anchors.insert(normalize_entity(e.get<std::string>()));
        } catch (const NormalizationError&) {
        }
    }
    return anchors;
}

GraphEvidence subgraph_retrieve(const KnowledgeGraph& graph, std::string_view query, int hops,
                                AnchorMode mode, const ChatGateway* gateway) {
    if (hops < 1) throw ConfigError("subgraph retrieval needs hops >= 1");
    std::set<std::string> anchors;
    if (mode == AnchorMode::StringMatch) {
        anchors = string_match_anchors(graph, query);
    } else {
        if (!gateway) throw ConfigError("llm_ner anchor mode needs a chat gateway");
        anchors = llm_anchors(query, *gateway);
    }
    auto triples = khop_neighborhood(graph, anchors, hops);
    std::vector<double> scores(triples.size(), 1.0);
    return from_triples(EvidenceKind::Subgraph, std::move(triples), std::move(scores));
}

GraphEvidence dense_triple_retrieve(const KnowledgeGraph& graph, std::string_view query,
                                    std::size_t k, const EmbeddingProvider& embedder) {
    if (k < 1) throw ConfigError("dense triple retrieval needs k >= 1");
    const auto& facts = graph.fact_edges();
    if (facts.empty()) return from_triples(EvidenceKind::DenseTriples, {}, {});

    std::vector<std::string> texts;
    texts.reserve(facts.size() + 1);
    texts.emplace_back(query);
    for (const auto& f : facts) texts.push_back(embedding_text(f.triple()));
    auto vecs = embedder.embed(texts);

    std::vector<std::pair<std::size_t, Embedding>> candidates;
    candidates.reserve(facts.size());
    for (std::size_t i = 0; i < facts.size(); ++i) candidates.emplace_back(i, std::move(vecs[i + 1]));
    auto top = top_k_similar(vecs[0], candidates, k);

    std::vector<Triple> triples;
    std::vector<double> scores;
    for (const auto& s : top) {
        triples.push_back(facts[s.id].triple());
        scores.push_back(s.score);
    }
    return from_triples(EvidenceKind::DenseTriples, std::move(triples), std::move(scores));
}

namespace {

struct Path {
    std::vector<std::size_t> edges;  // indices into the unique-triple list
    std::vector<std::string> nodes;  // start node followed by each hop's endpoint
    double sum = 0.0;

    double mean() const { return edges.empty() ? 0.0 : sum / static_cast<double>(edges.size()); }
};

bool path_better(const Path& a, const Path& b) {
    double ma = a.mean();
    double mb = b.mean();
    if (ma != mb) return ma > mb;
    if (a.edges != b.edges) return a.edges < b.edges;
    return a.nodes < b.nodes;
}

}  // namespace

GraphEvidence tog_beam_search(const KnowledgeGraph& graph, std::string_view query,
                              const TogParams& params, const EmbeddingProvider& embedder) {
    if (params.width < 1 || params.depth < 1)
        throw ConfigError("ToG beam search needs width >= 1 and depth >= 1");
    GraphEvidence ev;
    ev.kind = EvidenceKind::TogPaths;

    auto anchors = string_match_anchors(graph, query);
    if (anchors.empty()) return ev;

    // Identical triples from different passages collapse into one edge.
    std::vector<Triple> unique;
    std::map<std::string, std::vector<std::size_t>> incident;
    for (const auto& f : graph.fact_edges()) {
        Triple t = f.triple();
        if (!unique.empty() && unique.back() == t) continue;
        std::size_t idx = unique.size();
        unique.push_back(std::move(t));
        incident[unique.back().subject].push_back(idx);
        if (unique.back().object != unique.back().subject)
            incident[unique.back().object].push_back(idx);
    }

    std::vector<std::string> texts;
    texts.reserve(unique.size() + 1);
    texts.emplace_back(query);
    for (const auto& t : unique) texts.push_back(embedding_text(t));
    auto vecs = embedder.embed(texts);
    std::vector<double> edge_score(unique.size());
    for (std::size_t i = 0; i < unique.size(); ++i) edge_score[i] = cosine(vecs[0], vecs[i + 1]);

    std::vector<Path> beams;
    for (const auto& a : anchors) beams.push_back({{}, {a}, 0.0});

    std::vector<Path> pool;
    for (std::size_t level = 0; level < params.depth && !beams.empty(); ++level) {
        std::vector<Path> extended;
        for (const auto& beam : beams) {
            const std::string& tail = beam.nodes.back();
            std::vector<std::pair<std::size_t, std::string>> options;
            auto it = incident.find(tail);
            if (it != incident.end()) {
                for (std::size_t ei : it->second) {
                    const Triple& t = unique[ei];
                    const std::string& next = t.subject == tail ? t.object : t.subject;
                    if (std::find(beam.nodes.begin(), beam.nodes.end(), next) != beam.nodes.end())
                        continue;
                    options.emplace_back(ei, next);
                }
            }
            if (options.empty()) {
                if (!beam.edges.empty()) pool.push_back(beam);
                continue;
            }
            std::sort(options.begin(), options.end(), [&](const auto& a, const auto& b) {
                if (edge_score[a.first] != edge_score[b.first])
                    return edge_score[a.first] > edge_score[b.first];
                return a.first < b.first;
            });
            if (options.size() > params.width) options.resize(params.width);
            for (auto& [ei, next] : options) {
                Path p = beam;
                p.edges.push_back(ei);
                p.nodes.push_back(next);
                p.sum += edge_score[ei];
                extended.push_back(std::move(p));
            }
        }
        std::sort(extended.begin(), extended.end(), path_better);
        if (extended.size() > params.width) extended.resize(params.width);
        beams = std::move(extended);
    }
    for (auto& b : beams) pool.push_back(std::move(b));

    std::sort(pool.begin(), pool.end(), path_better);
    if (pool.size() > params.k_paths) pool.resize(params.k_paths);

    for (const auto& p : pool) {
        std::vector<Triple> triples;
        std::string item;
        for (std::size_t i = 0; i < p.edges.size(); ++i) {
            triples.push_back(unique[p.edges[i]]);
            if (i) item += " → ";
            item += linearize(triples.back());
        }
        ev.items.push_back(std::move(item));
        ev.scores.push_back(p.mean());
        ev.paths.push_back(std::move(triples));
    }
    return ev;
}

}  // namespace autograph
