#include <numeric>
#include <random>

#include "support/oracles.hpp"

#include <doctest.h>

#include "autograph/errors.hpp"
#include "autograph/retrieve_graph.hpp"
#include "autograph/retrieve_text.hpp"

using namespace autograph;

namespace {

using PerPassage = std::vector<std::pair<std::string, std::vector<Triple>>>;

KnowledgeGraph graph_of(const PerPassage& per) {
    std::vector<Passage> ps;
    for (const auto& [id, _] : per) ps.push_back({id, "text of " + id, ""});
    return build_graph(per, ps);
}

// Exact vectors for chosen texts; anything else is orthogonal to the first
// axis, so its cosine with a first-axis query is 0.
class TableEmbedder final : public EmbeddingProvider {
public:
    explicit TableEmbedder(std::map<std::string, Embedding> table, std::size_t dim = 4)
        : table_(std::move(table)), dim_(dim) {}
    std::vector<Embedding> embed(const std::vector<std::string>& texts) const override {
        std::vector<Embedding> out;
        for (const auto& t : texts) {
            auto it = table_.find(t);
            if (it != table_.end()) {
                out.push_back(it->second);
            } else {
                Embedding v(dim_, 0.0);
                v.back() = 1.0;
                out.push_back(v);
            }
        }
        return out;
    }
    std::size_t dimension() const override { return dim_; }
    std::string id() const override { return "table"; }

private:
    std::map<std::string, Embedding> table_;
    std::size_t dim_;
};

// Unit vector with cosine `c` to the first axis.
Embedding at_cos(double c, std::size_t dim = 4) {
    Embedding v(dim, 0.0);
    v[0] = c;
    v[1] = std::sqrt(1.0 - c * c);
    return v;
}

Embedding axis0(std::size_t dim = 4) {
    Embedding v(dim, 0.0);
    v[0] = 1.0;
    return v;
}

std::set<Triple> as_set(const GraphEvidence& ev) {
    std::set<Triple> s;
    for (const auto& p : ev.paths) s.insert(p.at(0));
    return s;
}

std::string query_naming(std::mt19937_64& rng, int entities, int count) {
    std::string q = "which";
    for (int i = 0; i < count; ++i) q += " " + oracle::entity_label(static_cast<int>(rng() % entities));
    return q + " r0 r1";
}

std::set<std::string> oracle_anchors(const KnowledgeGraph& g, const std::string& q) {
    std::set<std::string> out;
    std::istringstream in(q);
    std::string w;
    while (in >> w) {
        if (g.entity_nodes().count(w)) out.insert(w);
    }
    return out;
}

const PerPassage kGoose = {
    {"p3", {{"The Goose Woman", "directed by", "Clarence Brown"}}},
    {"p4", {{"Clarence Brown", "died in", "1987"}}},
    {"p9", {{"Paris", "capital of", "France"}}},
};

PerPassage chain(int len) {
    std::vector<Triple> ts;
    for (int i = 0; i < len; ++i)
        ts.push_back({std::string(1, static_cast<char>('a' + i)), "r",
                      std::string(1, static_cast<char>('a' + i + 1))});
    return {{"p1", ts}};
}

}  // namespace

TEST_SUITE("subgraph") {

TEST_CASE("goose woman, one hop") {
    auto g = graph_of(kGoose);
    auto ev = subgraph_retrieve(g, "who directed The Goose Woman", 1);
    CHECK(ev.kind == EvidenceKind::Subgraph);
    REQUIRE(ev.size() == 1);
    CHECK(ev.items[0] == "(the goose woman, directed by, clarence brown)");
    CHECK(ev.scores[0] == 1.0);
    CHECK(ev.context() == ev.items[0]);

    auto two = subgraph_retrieve(g, "who directed The Goose Woman", 2);
    CHECK(two.size() == 2);
    CHECK(subgraph_retrieve(g, "nothing in here", 3).empty());
    CHECK_THROWS_AS(subgraph_retrieve(g, "x", 0), ConfigError);
}

TEST_CASE("three hops cover a three-chain") {
    auto g = graph_of(chain(3));
    CHECK(subgraph_retrieve(g, "start at a", 1).size() == 1);
    CHECK(subgraph_retrieve(g, "start at a", 3).size() == 3);
}

TEST_CASE("anchors match whole words only") {
    auto g = graph_of({{"p1", {{"a", "r", "banana"}, {"ban", "r", "x"}}}});
    CHECK(string_match_anchors(g, "a banana split") == std::set<std::string>{"a", "banana"});
    CHECK(string_match_anchors(g, "bananas") == std::set<std::string>{});
    CHECK(string_match_anchors(g, "BAN-x") == std::set<std::string>{"ban", "x"});
}

TEST_CASE("llm_ner anchors") {
    auto g = graph_of(kGoose);
    ScriptedGateway gw;
    gw.respond("entity_extract", {{"question", "goose"}}, R"(["  The Goose   Woman "])");
    gw.respond_default("entity_extract", "no idea");
    auto ev = subgraph_retrieve(g, "who made the goose film", 1, AnchorMode::LlmNer, &gw);
    REQUIRE(ev.size() == 1);
    CHECK(ev.paths[0][0].object == "clarence brown");
    CHECK(subgraph_retrieve(g, "Paris?", 1, AnchorMode::LlmNer, &gw).empty());
    CHECK_THROWS_AS(subgraph_retrieve(g, "q", 1, AnchorMode::LlmNer, nullptr), ConfigError);
    CHECK(parse_anchor_mode("llm_ner") == AnchorMode::LlmNer);
    CHECK_THROWS_AS(parse_anchor_mode("regex"), ConfigError);
}

TEST_CASE("subgraph equals BFS oracle and grows with hops") {
    std::mt19937_64 rng(21);
    for (int it = 0; it < 100; ++it) {
        oracle::RandomGraphSpec spec{8 + static_cast<int>(rng() % 8), 3, 5 + static_cast<int>(rng() % 20), 3};
        auto g = oracle::random_graph(rng, spec);
        auto q = query_naming(rng, spec.entities, 2);
        auto anchors = oracle_anchors(g, q);
        std::set<Triple> prev;
        for (int k = 1; k <= 4; ++k) {
            auto got = as_set(subgraph_retrieve(g, q, k));
            CHECK(got == oracle::khop(g, anchors, k));
            CHECK(std::includes(got.begin(), got.end(), prev.begin(), prev.end()));
            prev = got;
        }
    }
}

}  // TEST_SUITE

TEST_SUITE("dense") {

TEST_CASE("fewer edges than k") {
    auto g = graph_of({{"p1", {{"a", "r", "b"}, {"b", "r", "c"}}}, {"p2", {{"c", "r", "d"}, {"d", "r", "e"}}}});
    MockEmbeddingProvider m;
    auto ev = dense_triple_retrieve(g, "a r b", 10, m);
    CHECK(ev.size() == 4);
    CHECK(ev.items[0] == "(a, r, b)");
    CHECK_THROWS_AS(dense_triple_retrieve(g, "q", 0, m), ConfigError);
    CHECK(dense_triple_retrieve(graph_of({{"p1", {}}}), "q", 3, m).empty());
}

TEST_CASE("duplicate linearizations keep a fixed order") {
    auto g = graph_of({{"p1", {{"x", "r", "y"}}}, {"p2", {{"x", "r", "y"}}}, {"p3", {{"z", "q", "w"}}}});
    MockEmbeddingProvider m;
    auto a = dense_triple_retrieve(g, "x y", 3, m);
    auto b = dense_triple_retrieve(g, "x y", 3, m);
    CHECK(a.items == b.items);
    CHECK(a.scores == b.scores);
    CHECK(a.items[0] == "(x, r, y)");
    CHECK(a.items[1] == "(x, r, y)");
    CHECK(a.scores[0] == a.scores[1]);
}

TEST_CASE("dense retrieval matches a brute-force cosine sort") {
    std::mt19937_64 rng(5);
    MockEmbeddingProvider m;
    for (int it = 0; it < 100; ++it) {
        oracle::RandomGraphSpec spec{12, 4, 30, 5};
        auto g = oracle::random_graph(rng, spec);
        auto q = query_naming(rng, spec.entities, 3);
        std::size_t k = 1 + rng() % 12;
        auto qv = m.embed_one(q);
        std::vector<std::pair<double, std::size_t>> ref;
        const auto& facts = g.fact_edges();
        for (std::size_t i = 0; i < facts.size(); ++i) {
            auto v = m.embed_one(facts[i].subject + " " + facts[i].relation + " " + facts[i].object);
            double dot = 0;
            for (std::size_t d = 0; d < v.size(); ++d) dot += v[d] * qv[d];  // both unit norm
            ref.push_back({-dot, i});
        }
        std::sort(ref.begin(), ref.end());
        auto ev = dense_triple_retrieve(g, q, k, m);
        REQUIRE(ev.size() == std::min(k, facts.size()));
        for (std::size_t i = 0; i < ev.size(); ++i) {
            CHECK(ev.scores[i] == doctest::Approx(-ref[i].first).epsilon(1e-9));
            if (i + 1 < ev.size()) CHECK(ev.scores[i] >= ev.scores[i + 1]);
        }
        // Exact identity wherever scores are separated from their neighbours.
        for (std::size_t i = 0; i < ev.size(); ++i) {
            bool isolated = (i == 0 || std::abs(ref[i].first - ref[i - 1].first) > 1e-9) &&
                            (i + 1 >= ref.size() || std::abs(ref[i].first - ref[i + 1].first) > 1e-9);
            if (isolated) CHECK(ev.items[i] == linearize(facts[ref[i].second].triple()));
        }
    }
}

}  // TEST_SUITE

TEST_SUITE("tog") {

TEST_CASE("star, width 3, depth 1 keeps the three best edges") {
    PerPassage star = {{"p1",
                        {{"hub", "r1", "a"}, {"hub", "r2", "b"}, {"hub", "r3", "c"}, {"hub", "r4", "d"}, {"hub", "r5", "e"}}}};
    auto g = graph_of(star);
    TableEmbedder emb({{"hub query", axis0()},
                       {"hub r1 a", at_cos(0.1)},
                       {"hub r2 b", at_cos(0.9)},
                       {"hub r3 c", at_cos(0.5)},
                       {"hub r4 d", at_cos(0.7)},
                       {"hub r5 e", at_cos(0.3)}});
    auto ev = tog_beam_search(g, "hub query", {3, 1, 10}, emb);
    REQUIRE(ev.size() == 3);
    CHECK(ev.items[0] == "(hub, r2, b)");
    CHECK(ev.items[1] == "(hub, r4, d)");
    CHECK(ev.items[2] == "(hub, r3, c)");
    CHECK(ev.scores[0] == doctest::Approx(0.9));
    CHECK(ev.kind == EvidenceKind::TogPaths);
}

TEST_CASE("chain is found in full and reverse edges are walked") {
    PerPassage torres = {
        {"p1", {{"Los Pagares de Mendieta", "directed by", "Leopoldo Torres Ríos"}}},
        {"p2", {{"Leopoldo Torres Ríos", "father of", "Leopoldo Torre Nilsson"}}},
        {"p3", {{"Leopoldo Torre Nilsson", "born in", "Buenos Aires"}}},
    };
    auto g = graph_of(torres);
    MockEmbeddingProvider m;
    auto ev = tog_beam_search(g, "Who is the child of the director of Los Pagares de Mendieta?", {3, 3, 10}, m);
    REQUIRE_FALSE(ev.empty());
    CHECK(ev.items[0] ==
          "(los pagares de mendieta, directed by, leopoldo torres ríos) → "
          "(leopoldo torres ríos, father of, leopoldo torre nilsson) → "
          "(leopoldo torre nilsson, born in, buenos aires)");

    // starting from the far end walks every edge against its direction
    auto back = tog_beam_search(g, "something about buenos aires", {3, 3, 10}, m);
    REQUIRE(back.size() == 1);
    CHECK(back.paths[0].size() == 3);
    CHECK(back.paths[0][0].object == "buenos aires");
}

TEST_CASE("no anchors, bad params") {
    auto g = graph_of(kGoose);
    MockEmbeddingProvider m;
    CHECK(tog_beam_search(g, "unrelated", {}, m).empty());
    CHECK_THROWS_AS(tog_beam_search(g, "paris", {0, 3, 10}, m), ConfigError);
    CHECK_THROWS_AS(tog_beam_search(g, "paris", {3, 0, 10}, m), ConfigError);
}

TEST_CASE("beam search equals the enumeration oracle on random graphs") {
    std::mt19937_64 rng(99);
    MockEmbeddingProvider m;
    for (int it = 0; it < 100; ++it) {
        oracle::RandomGraphSpec spec{4 + static_cast<int>(rng() % 9), 3, 4 + static_cast<int>(rng() % 14), 3};
        spec.allow_self_loops = (it % 10 == 0);
        auto g = oracle::random_graph(rng, spec);
        auto q = query_naming(rng, spec.entities, 1 + static_cast<int>(rng() % 2));
        TogParams p{1 + rng() % 4, 1 + rng() % 3, 1 + rng() % 10};
        CAPTURE(it);
        auto in = oracle::tog_input(g, q, m);
        auto expect = oracle::tog(in, oracle_anchors(g, q), p.width, p.depth, p.k_paths);
        auto got = tog_beam_search(g, q, p, m);
        REQUIRE(got.size() == expect.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got.paths[i] == expect[i].edges);
            CHECK(got.items[i] == oracle::linearize_path(expect[i].edges));
            CHECK(got.scores[i] == doctest::Approx(expect[i].mean()).epsilon(1e-12));
        }
    }
}

TEST_CASE("with unbounded width every maximal path is returned") {
    std::mt19937_64 rng(1234);
    MockEmbeddingProvider m;
    for (int it = 0; it < 50; ++it) {
        oracle::RandomGraphSpec spec{4 + static_cast<int>(rng() % 6), 2, 3 + static_cast<int>(rng() % 8), 2};
        auto g = oracle::random_graph(rng, spec);
        auto q = query_naming(rng, spec.entities, 2);
        std::size_t depth = 1 + rng() % 3;
        auto in = oracle::tog_input(g, q, m);
        auto expect = oracle::all_maximal_paths(in, oracle_anchors(g, q), depth);
        auto got = tog_beam_search(g, q, {100000, depth, 100000}, m);
        REQUIRE(got.size() == expect.size());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got.paths[i] == expect[i].edges);
    }
}

TEST_CASE("paths are connected, acyclic and start at an anchor") {
    std::mt19937_64 rng(77);
    MockEmbeddingProvider m;
    for (int it = 0; it < 100; ++it) {
        oracle::RandomGraphSpec spec{6 + static_cast<int>(rng() % 10), 3, 10 + static_cast<int>(rng() % 20), 3};
        auto g = oracle::random_graph(rng, spec);
        auto q = query_naming(rng, spec.entities, 2);
        auto anchors = oracle_anchors(g, q);
        std::set<Triple> edges;
        for (const auto& f : g.fact_edges()) edges.insert(f.triple());
        auto ev = tog_beam_search(g, q, {3, 3, 10}, m);
        CHECK(ev.size() <= 10);
        CHECK(tog_beam_search(g, q, {3, 3, 10}, m).items == ev.items);
        for (const auto& path : ev.paths) {
            REQUIRE_FALSE(path.empty());
            // recover the node walk from the first anchor that fits
            bool ok = false;
            for (const auto& a : anchors) {
                std::vector<std::string> nodes = {a};
                bool walk = true;
                for (const auto& t : path) {
                    if (!edges.count(t)) {
                        walk = false;
                        break;
                    }
                    if (t.subject == nodes.back()) nodes.push_back(t.object);
                    else if (t.object == nodes.back()) nodes.push_back(t.subject);
                    else {
                        walk = false;
                        break;
                    }
                }
                if (!walk) continue;
                std::set<std::string> uniq(nodes.begin(), nodes.end());
                if (uniq.size() == nodes.size()) ok = true;
            }
            CHECK(ok);
        }
    }
}

}  // TEST_SUITE

TEST_SUITE("ppr") {

TEST_CASE("seed personalization examples") {
    auto one = graph_of({{"p1", {{"a", "r", "b"}}}});
    TableEmbedder e1({{"q", axis0()}, {"a r b", at_cos(0.8)}});
    auto s = seed_personalization(one, "q", 1, e1);
    REQUIRE(s.size() == 2);
    CHECK(s[{NodeKind::Entity, "a"}] == doctest::Approx(0.5));
    CHECK(s[{NodeKind::Entity, "b"}] == doctest::Approx(0.5));

    auto two = graph_of({{"p1", {{"a", "r", "b"}, {"c", "r", "d"}}}});
    TableEmbedder e2({{"q", axis0()}, {"a r b", at_cos(0.6)}, {"c r d", at_cos(0.2)}});
    s = seed_personalization(two, "q", 10, e2);
    CHECK(s[{NodeKind::Entity, "a"}] == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(s[{NodeKind::Entity, "b"}] == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(s[{NodeKind::Entity, "c"}] == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(s[{NodeKind::Entity, "d"}] == doctest::Approx(0.125).epsilon(1e-12));

    // k=1 keeps only the best edge
    s = seed_personalization(two, "q", 1, e2);
    CHECK(s.size() == 2);
    CHECK(s.count({NodeKind::Entity, "a"}) == 1);

    TableEmbedder neg({{"q", axis0()}, {"a r b", at_cos(-0.6)}, {"c r d", at_cos(-0.2)}});
    s = seed_personalization(two, "q", 10, neg);
    REQUIRE(s.size() == 4);
    for (const auto& [_, v] : s) CHECK(v == doctest::Approx(0.25));

    CHECK_THROWS_AS(seed_personalization(graph_of({{"p1", {}}}), "q", 3, e1), EmptySeedError);
}

TEST_CASE("tiny graphs") {
    // a lone passage with all the mass stays put
    auto lone = graph_of({{"p1", {}}});
    auto x = personalized_pagerank(lone, {{{NodeKind::Passage, "p1"}, 1.0}}, {});
    CHECK(x.at({NodeKind::Passage, "p1"}) == doctest::Approx(1.0));

    KnowledgeGraph pair = build_graph({{"p1", {{"a", "r", "b"}}}}, {{"p1", "", ""}});
    TransitionGraph tg(pair);
    // a, b, p1: a triangle, symmetric in a and b
    auto v = personalized_pagerank(tg, {0.5, 0.5, 0.0}, {});
    CHECK(v[0] == doctest::Approx(v[1]).epsilon(1e-12));

    CHECK_THROWS_AS(personalized_pagerank(tg, {0.5, 0.5}, {}), DimensionError);
    CHECK_THROWS_AS(personalized_pagerank(tg, {0.0, 0.0, 0.0}, {}), EmptySeedError);
    CHECK_THROWS_AS(personalized_pagerank(tg, {0.7, 0.7, 0.0}, {}), DataError);
    CHECK_THROWS_AS(personalized_pagerank(tg, {-0.5, 1.5, 0.0}, {}), DataError);
    PPRConfig bad;
    bad.damping = 1.0;
    CHECK_THROWS_AS(personalized_pagerank(tg, {0.5, 0.5, 0.0}, bad), ConfigError);
    CHECK_THROWS_AS(personalized_pagerank(pair, {{{NodeKind::Entity, "zz"}, 1.0}}, {}), ReferenceError);
}

TEST_CASE("symmetric two-node graph") {
    // two entity nodes joined by one edge, no passages linked
    TransitionGraph tg(build_graph({{"p1", {{"a", "r", "b"}}}}, {{"p1", "", ""}}));
    auto v = personalized_pagerank(tg, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {});
    double sum = v[0] + v[1] + v[2];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    for (double x : v) CHECK(x == doctest::Approx(1.0 / 3).epsilon(1e-6));
}

TEST_CASE("matches the dense solve on random graphs") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 1);
    PPRConfig cfg;
    cfg.tolerance = 1e-12;
    cfg.max_iterations = 1000;
    for (int it = 0; it < 200; ++it) {
        oracle::RandomGraphSpec spec{2 + static_cast<int>(rng() % 8), 1 + static_cast<int>(rng() % 4),
                                     1 + static_cast<int>(rng() % 12), 2};
        auto g = oracle::random_graph(rng, spec);
        auto d = oracle::dense_graph(g);
        TransitionGraph tg(g);
        REQUIRE(tg.size() == d.names.size());
        Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<int>(tg.size()));
        std::vector<double> pv(tg.size(), 0.0);
        double total = 0;
        for (std::size_t i = 0; i < tg.size(); ++i) {
            double w = rng() % 3 == 0 ? u(rng) : 0.0;
            pv[i] = w;
            total += w;
        }
        if (total == 0) pv[rng() % tg.size()] = total = 1.0;
        for (auto& w : pv) w /= total;
        for (std::size_t i = 0; i < tg.size(); ++i) p[d.index.at(oracle::node_key(tg.nodes()[i]))] = pv[i];
        auto want = oracle::ppr_solve(d, p, cfg.damping);
        auto got = personalized_pagerank(tg, pv, cfg);
        double l1 = 0, sum = 0;
        for (std::size_t i = 0; i < tg.size(); ++i) {
            l1 += std::abs(got[i] - want[d.index.at(oracle::node_key(tg.nodes()[i]))]);
            sum += got[i];
            CHECK(got[i] >= 0.0);
        }
        CHECK(l1 < 1e-6);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("relabeling entities permutes the scores") {
    std::mt19937_64 rng(31);
    MockEmbeddingProvider m;
    for (int it = 0; it < 50; ++it) {
        oracle::RandomGraphSpec spec{8, 3, 12, 2};
        auto g = oracle::random_graph(rng, spec);
        std::vector<int> perm(spec.entities);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        auto rename = [&](const std::string& e) { return "x" + std::to_string(perm[std::stoi(e.substr(1))]); };
        PerPassage per;
        std::map<std::string, std::vector<Triple>> by;
        for (const auto& f : g.fact_edges()) by[f.source_passage].push_back({rename(f.subject), f.relation, rename(f.object)});
        per.assign(by.begin(), by.end());
        auto h = build_graph(per, oracle::make_passages(spec.passages));

        NodeScores pg, ph;
        int seeds = 0;
        for (const auto& e : g.entity_nodes()) {
            if (rng() % 2 == 0 || seeds == 0) {
                pg[{NodeKind::Entity, e}] = 1.0;
                ph[{NodeKind::Entity, rename(e)}] = 1.0;
                ++seeds;
            }
        }
        for (auto& [_, v] : pg) v /= seeds;
        for (auto& [_, v] : ph) v /= seeds;
        auto xg = personalized_pagerank(g, pg, {});
        auto xh = personalized_pagerank(h, ph, {});
        for (const auto& [node, v] : xg) {
            NodeRef other = node.kind == NodeKind::Entity ? NodeRef{NodeKind::Entity, rename(node.label)} : node;
            CHECK(xh.at(other) == doctest::Approx(v).epsilon(1e-9));
        }
    }
}

TEST_CASE("adding seed mass to an entity never lowers its score") {
    std::mt19937_64 rng(64);
    std::uniform_real_distribution<double> u(0.05, 1);
    PPRConfig cfg;
    cfg.tolerance = 1e-13;
    cfg.max_iterations = 2000;
    for (int it = 0; it < 100; ++it) {
        oracle::RandomGraphSpec spec{3 + static_cast<int>(rng() % 6), 2, 2 + static_cast<int>(rng() % 10), 2};
        auto g = oracle::random_graph(rng, spec);
        TransitionGraph tg(g);
        std::vector<double> p(tg.size(), 0.0);
        double total = 0;
        for (std::size_t i = 0; i < tg.size(); ++i) {
            if (tg.nodes()[i].kind == NodeKind::Entity && rng() % 2 == 0) total += p[i] = u(rng);
        }
        if (total == 0) total = p[0] = 1.0;
        for (auto& w : p) w /= total;
        std::size_t e = rng() % g.entity_nodes().size();  // entities come first
        auto before = personalized_pagerank(tg, p, cfg);
        auto q = p;
        q[e] += u(rng);
        double s = 0;
        for (double w : q) s += w;
        for (auto& w : q) w /= s;
        auto after = personalized_pagerank(tg, q, cfg);
        CHECK(after[e] >= before[e] - 1e-12);

        auto d = oracle::dense_graph(g);
        Eigen::VectorXd qe(static_cast<int>(tg.size()));
        for (std::size_t i = 0; i < tg.size(); ++i) qe[d.index.at(oracle::node_key(tg.nodes()[i]))] = q[i];
        CHECK(std::abs(oracle::ppr_solve(d, qe, cfg.damping)[d.index.at(oracle::node_key(tg.nodes()[e]))] - after[e]) < 1e-9);
    }
}

}  // TEST_SUITE

TEST_SUITE("rank_passages") {

TEST_CASE("only the connected passage is ranked") {
    auto g = graph_of({{"p1", {{"a", "r", "b"}}}, {"p2", {{"c", "s", "d"}}}});
    TableEmbedder emb({{"q", axis0()}, {"a r b", at_cos(0.9)}, {"c s d", at_cos(-0.5)}});
    PPRConfig cfg;
    cfg.seed_triples_k = 1;
    auto r = rank_passages(g, "q", 5, cfg, emb);
    REQUIRE(r.ranked.size() == 1);
    CHECK(r.ranked[0].passage_id == "p1");
    CHECK(r.ranked[0].score > 0);
    CHECK(passages_context(g, r) == "p1: text of p1");
    CHECK(rank_passages(g, "q", 0, cfg, emb).ranked.empty());
    CHECK(rank_passages(graph_of({{"p1", {}}}), "q", 5, cfg, emb).ranked.empty());
}

TEST_CASE("symmetric passages tie by id") {
    auto g = graph_of({{"pb", {{"a", "r", "b"}}}, {"pa", {{"a", "r", "b"}}}});
    MockEmbeddingProvider m;
    auto r = rank_passages(g, "a b", 5, {}, m);
    REQUIRE(r.ranked.size() == 2);
    CHECK(r.ranked[0].score == r.ranked[1].score);
    CHECK(r.ids() == std::vector<std::string>{"pa", "pb"});
    CHECK(r.to_json()["ranked"][0]["passage_id"] == "pa");
}

TEST_CASE("bipartite toy graph ordering follows the dense oracle") {
    PerPassage per = {
        {"p1", {{"e1", "r", "e2"}}},
        {"p2", {{"e2", "r", "e3"}, {"e3", "r", "e4"}}},
        {"p3", {{"e4", "r", "e5"}}},
        {"p4", {{"e5", "r", "e6"}, {"e6", "r", "e1"}}},
    };
    auto g = graph_of(per);
    MockEmbeddingProvider m;
    PPRConfig cfg;
    for (const std::string q : {"e1 e2", "e3", "e5 e6 r", "e4 r e5"}) {
        CAPTURE(q);
        auto seeds = seed_personalization(g, q, cfg.seed_triples_k, m);
        auto d = oracle::dense_graph(g);
        Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<int>(d.names.size()));
        for (const auto& [n, v] : seeds) p[d.index.at(oracle::node_key(n))] = v;
        auto x = oracle::ppr_solve(d, p, cfg.damping);
        std::vector<std::pair<double, std::string>> ref;
        for (const std::string id : {"p1", "p2", "p3", "p4"}) {
            double s = x[d.index.at("P:" + id)];
            if (s > 1e-12) ref.push_back({-std::round(s * 1e9), id});
        }
        std::sort(ref.begin(), ref.end());
        auto r = rank_passages(g, q, 4, cfg, m);
        REQUIRE(r.ranked.size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) CHECK(r.ranked[i].passage_id == ref[i].second);
    }
}

TEST_CASE("ranking is deterministic and truncated") {
    std::mt19937_64 rng(3);
    MockEmbeddingProvider m;
    for (int it = 0; it < 30; ++it) {
        auto g = oracle::random_graph(rng, {10, 6, 15, 3});
        auto q = query_naming(rng, 10, 2);
        auto a = rank_passages(g, q, 3, {}, m);
        auto b = rank_passages(g, q, 3, {}, m);
        CHECK(a.to_json() == b.to_json());
        CHECK(a.ranked.size() <= 3);
        for (std::size_t i = 0; i + 1 < a.ranked.size(); ++i) CHECK(a.ranked[i].score >= a.ranked[i + 1].score);
    }
}

}  // TEST_SUITE
