#include "autograph/retrieve_text.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "autograph/errors.hpp"

namespace autograph {

void PPRConfig::validate() const {
    if (!(damping > 0.0 && damping < 1.0)) throw ConfigError("PPR damping must lie in (0, 1)");
    if (!(tolerance > 0.0)) throw ConfigError("PPR tolerance must be positive");
    if (max_iterations < 1) throw ConfigError("PPR max_iterations must be positive");
    if (seed_triples_k < 1) throw ConfigError("PPR seed_triples_k must be positive");
}

TransitionGraph::TransitionGraph(const KnowledgeGraph& graph) {
    for (const auto& e : graph.entity_nodes()) nodes_.push_back({NodeKind::Entity, e});
    for (const auto& [id, _] : graph.passages()) nodes_.push_back({NodeKind::Passage, id});
    for (std::size_t i = 0; i < nodes_.size(); ++i) index_.emplace(nodes_[i], i);

    std::vector<std::set<std::size_t>> adj(nodes_.size());
    auto link = [&](std::size_t a, std::size_t b) {
        if (a == b) return;
        adj[a].insert(b);
        adj[b].insert(a);
    };
    for (const auto& f : graph.fact_edges())
        link(index_of({NodeKind::Entity, f.subject}), index_of({NodeKind::Entity, f.object}));
    for (const auto& p : graph.provenance_edges())
        link(index_of({NodeKind::Entity, p.entity}), index_of({NodeKind::Passage, p.passage}));

    adj_.reserve(adj.size());
    for (auto& s : adj) adj_.emplace_back(s.begin(), s.end());
}

std::size_t TransitionGraph::index_of(const NodeRef& node) const {
    auto it = index_.find(node);
    if (it == index_.end()) throw ReferenceError("node '" + node.label + "' not in graph");
    return it->second;
}

NodeScores seed_personalization(const KnowledgeGraph& graph, std::string_view query,
                                std::size_t k, const EmbeddingProvider& embedder) {
    const auto& facts = graph.fact_edges();
    if (facts.empty()) throw EmptySeedError("graph has no fact edges to seed from");
    if (k < 1) throw ConfigError("seed_triples_k must be positive");

    std::vector<std::string> texts;
    texts.reserve(facts.size() + 1);
    texts.emplace_back(query);
    for (const auto& f : facts) texts.push_back(embedding_text(f.triple()));
    auto vecs = embedder.embed(texts);
    std::vector<std::pair<std::size_t, Embedding>> candidates;
    candidates.reserve(facts.size());
    for (std::size_t i = 0; i < facts.size(); ++i) candidates.emplace_back(i, std::move(vecs[i + 1]));
    auto top = top_k_similar(vecs[0], candidates, k);

    NodeScores mass;
    double total = 0.0;
    for (const auto& s : top) {
        double w = std::max(0.0, s.score);
        mass[{NodeKind::Entity, facts[s.id].subject}] += w;
        mass[{NodeKind::Entity, facts[s.id].object}] += w;
        total += 2.0 * w;
    }
    if (total <= 0.0) {
        for (auto& [_, v] : mass) v = 1.0 / static_cast<double>(mass.size());
        return mass;
    }
    for (auto& [_, v] : mass) v /= total;
    return mass;
}

std::vector<double> personalized_pagerank(const TransitionGraph& graph,
                                          const std::vector<double>& personalization,
                                          const PPRConfig& config, int* iterations) {
    config.validate();
    const std::size_t n = graph.size();
    if (personalization.size() != n) throw DimensionError("personalization size != node count");
    double sum = 0.0;
    for (double v : personalization) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw DataError("personalization mass must be finite and non-negative");
        sum += v;
    }
    if (sum == 0.0) throw EmptySeedError("personalization has empty support");
    if (std::abs(sum - 1.0) > 1e-9) throw DataError("personalization must sum to 1");

    const auto& adj = graph.neighbours();
    const double d = config.damping;
    std::vector<double> x = personalization;
    std::vector<double> next(n);
    int it = 0;
    while (it < config.max_iterations) {
        ++it;
        double dangling = 0.0;
        for (std::size_t i = 0; i < n; ++i) next[i] = (1.0 - d) * personalization[i];
        for (std::size_t i = 0; i < n; ++i) {
            if (adj[i].empty()) {
                dangling += x[i];
                continue;
            }
            double share = d * x[i] / static_cast<double>(adj[i].size());
            for (std::size_t j : adj[i]) next[j] += share;
        }
        if (dangling > 0.0) {
            for (std::size_t i = 0; i < n; ++i) next[i] += d * dangling * personalization[i];
        }
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) change += std::abs(next[i] - x[i]);
        x.swap(next);
        if (change < config.tolerance) break;
    }
    if (iterations) *iterations = it;
    return x;
}

NodeScores personalized_pagerank(const KnowledgeGraph& graph, const NodeScores& personalization,
                                 const PPRConfig& config) {
    if (personalization.empty()) throw EmptySeedError("personalization is empty");
    TransitionGraph tg(graph);
    std::vector<double> p(tg.size(), 0.0);
    for (const auto& [node, v] : personalization) p[tg.index_of(node)] += v;
    auto x = personalized_pagerank(tg, p, config);
    NodeScores out;
    for (std::size_t i = 0; i < tg.size(); ++i) out.emplace(tg.nodes()[i], x[i]);
    return out;
}

std::vector<std::string> PassageRanking::ids() const {
    std::vector<std::string> out;
    out.reserve(ranked.size());
    for (const auto& e : ranked) out.push_back(e.passage_id);
    return out;
}

json PassageRanking::to_json() const {
    json arr = json::array();
    for (const auto& e : ranked) arr.push_back({{"passage_id", e.passage_id}, {"score", e.score}});
    return {{"ranked", arr}};
}

PassageRanking rank_passages(const KnowledgeGraph& graph, std::string_view query,
                             std::size_t top_n, const PPRConfig& config,
                             const EmbeddingProvider& embedder) {
    PassageRanking ranking;
    if (graph.fact_edges().empty() || top_n == 0) return ranking;

    auto seeds = seed_personalization(graph, query, config.seed_triples_k, embedder);
    auto scores = personalized_pagerank(graph, seeds, config);

    std::set<std::string> connected;
    for (const auto& p : graph.provenance_edges()) connected.insert(p.passage);

    for (const auto& [node, score] : scores) {
        if (node.kind != NodeKind::Passage) continue;
        // Quantized so that structurally symmetric passages tie exactly
        // despite summation-order noise; PPR itself is only 1e-8 accurate.
        double q = std::round(score * 1e12) / 1e12;
        if (!connected.count(node.label) || q <= 0.0) continue;
        ranking.ranked.push_back({node.label, q});
    }
    std::sort(ranking.ranked.begin(), ranking.ranked.end(), [](const auto& a, const auto& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.passage_id < b.passage_id;
    });
    if (ranking.ranked.size() > top_n) ranking.ranked.resize(top_n);
    return ranking;
}

std::string passages_context(const KnowledgeGraph& graph, const PassageRanking& ranking) {
    std::string out;
    for (const auto& e : ranking.ranked) {
        if (!out.empty()) out += '\n';
        auto it = graph.passages().find(e.passage_id);
        out += e.passage_id + ": " + (it == graph.passages().end() ? "" : it->second.text);
    }
    return out;
}

}  // namespace autograph
