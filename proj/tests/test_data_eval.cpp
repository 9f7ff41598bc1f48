#include <random>

#include "support/oracles.hpp"
#include "support/toy.hpp"

#include <doctest.h>

#include "autograph/data.hpp"
#include "autograph/errors.hpp"
#include "autograph/eval.hpp"

using namespace autograph;

namespace {

Passage P(std::string id, std::string text) { return {std::move(id), std::move(text), ""}; }

DatasetRecord record_with(std::vector<Passage> gold, std::vector<Passage> others) {
    DatasetRecord r;
    r.id = "r";
    r.question = "who founded the quill observatory";
    r.answer = "ada quill";
    r.supporting_passages = gold;
    r.candidate_passages = gold;
    for (auto& p : others) r.candidate_passages.push_back(p);
    return r;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("generic jsonl with a bad record") {
    auto ds = load_dataset(oracle::fixture("data/generic.jsonl"), DatasetFormat::GenericJsonl);
    REQUIRE(ds.records.size() == 2);
    REQUIRE(ds.errors.size() == 1);
    CHECK(ds.errors[0].index == 2);
    CHECK(ds.errors[0].record_id == "g2");
    CHECK(ds.errors[0].message.find("answer") != std::string::npos);
    const auto& g1 = ds.records[0];
    CHECK(g1.id == "g1");
    CHECK(g1.gold_ids() == std::set<std::string>{"a"});
    CHECK(g1.candidate_passages.size() == 2);
    auto s = g1.to_sample();
    CHECK(s.query == g1.question);
    CHECK(s.gold_passage_ids == std::set<std::string>{"a"});
}

TEST_CASE("two generic records") {
    std::string two =
        R"({"id":1,"question":"q","answer":"a","passages":[{"text":"t","is_gold":true}]})"
        "\n\n"
        R"({"id":"2","question":"q","answer":"a","passages":[]})"
        "\n";
    auto ds = parse_dataset(two, DatasetFormat::GenericJsonl);
    REQUIRE(ds.records.size() == 2);
    CHECK(ds.records[0].id == "1");
    CHECK(ds.records[0].candidate_passages[0].id == "1#0");
    CHECK(ds.errors.empty());
    // round trip through the canonical line
    auto again = parse_dataset(to_generic_json(ds.records[0]).dump(), DatasetFormat::GenericJsonl);
    REQUIRE(again.records.size() == 1);
    CHECK(again.records[0].candidate_passages == ds.records[0].candidate_passages);
    CHECK(again.records[0].gold_ids() == ds.records[0].gold_ids());
}

TEST_CASE("record-level errors") {
    std::string lines =
        R"({"id":"a","question":"q","answer":"x","passages":[{"id":"p","text":"t"},{"id":"p","text":"u"}]})"
        "\n"
        R"([1,2])"
        "\n"
        R"({"id":"b","question":"q","answer":"x","passages":[]})"
        "\n"
        R"({"id":"b","question":"q","answer":"x","passages":[]})"
        "\n";
    auto ds = parse_dataset(lines, DatasetFormat::GenericJsonl);
    CHECK(ds.records.size() == 1);
    CHECK(ds.errors.size() == 3);
    CHECK_THROWS_AS(parse_dataset("{not json\n", DatasetFormat::GenericJsonl), ParseError);
    CHECK_THROWS_AS(load_dataset("/nonexistent/file.jsonl", DatasetFormat::GenericJsonl), ParseError);
    CHECK_THROWS_AS(parse_dataset_format("csv"), ConfigError);
    CHECK(parse_dataset_format("hotpot_json") == DatasetFormat::HotpotJson);
}

TEST_CASE("hotpot: supporting titles become gold passages") {
    auto ds = load_dataset(oracle::fixture("data/hotpot.json"), DatasetFormat::HotpotJson);
    REQUIRE(ds.records.size() == 2);
    REQUIRE(ds.errors.size() == 1);
    CHECK(ds.errors[0].record_id == "h2");
    const auto& h1 = ds.records[0];
    CHECK(h1.id == "h1");
    REQUIRE(h1.candidate_passages.size() == 3);
    CHECK(h1.candidate_passages[0].id == "h1#0");
    CHECK(h1.candidate_passages[0].source_doc == "Ada Quill");
    CHECK(h1.candidate_passages[0].text == "Ada Quill was an astronomer. She founded the Quill Observatory.");
    CHECK(h1.gold_ids() == std::set<std::string>{"h1#0", "h1#1"});
    CHECK(ds.records[1].gold_ids() == std::set<std::string>{"h3#0"});
}

TEST_CASE("musique: is_supporting marks gold") {
    auto ds = load_dataset(oracle::fixture("data/musique.jsonl"), DatasetFormat::MusiqueJson);
    REQUIRE(ds.records.size() == 1);
    CHECK(ds.errors.size() == 1);
    CHECK(ds.records[0].gold_ids() == std::set<std::string>{"2hop__1#0", "2hop__1#2"});
    CHECK(ds.records[0].answer == "Salt Hollow");
}

TEST_CASE("corpus manifest round trip and union") {
    auto dir = std::filesystem::temp_directory_path() / "autograph_tests";
    std::filesystem::create_directories(dir);
    auto path = dir / ("manifest-" + std::to_string(::getpid()) + ".jsonl");
    std::vector<Passage> ps = {{"b", "two", "B"}, {"a", "one \"quoted\"", ""}};
    save_corpus_manifest(path, ps);
    CHECK(load_corpus_manifest(path) == ps);

    auto ds = load_dataset(oracle::fixture("data/generic.jsonl"), DatasetFormat::GenericJsonl);
    auto u = union_corpus(ds.records);
    REQUIRE(u.size() == 3);
    CHECK(u[0].id == "a");
    CHECK(u[1].id == "b");
    CHECK(u[2].id == "c");
}

TEST_CASE("hard negative: argmax, ties, all gold") {
    MockEmbeddingProvider m;
    auto rec = record_with({P("g", "Ada Quill founded the Quill Observatory")}, {});
    std::vector<Passage> corpus = {rec.supporting_passages[0], P("x", "Quill Observatory founded in Marrow Bay"),
                                   P("y", "A lighthouse painted white"), P("z", "Bread recipes")};
    CHECK(mine_hard_negative(rec, corpus, m).id == "x");

    std::vector<Passage> same = {rec.supporting_passages[0], P("n2", "zzz qqq"), P("n1", "zzz qqq")};
    CHECK(mine_hard_negative(rec, same, m).id == "n1");

    CHECK_THROWS_AS(mine_hard_negative(rec, {rec.supporting_passages[0]}, m), DataError);
}

TEST_CASE("hard negative on a 50-passage corpus matches an exhaustive scan") {
    MockEmbeddingProvider m;
    std::mt19937_64 rng(50);
    const std::vector<std::string> words = {"quill", "observatory", "ada", "bay", "lighthouse", "tern",
                                            "founded", "white", "salt", "hollow", "born", "city"};
    for (int it = 0; it < 20; ++it) {
        std::vector<Passage> corpus;
        for (int i = 0; i < 50; ++i) {
            std::string text;
            for (int w = 0; w < 4; ++w) text += words[rng() % words.size()] + " ";
            corpus.push_back(P("d" + std::to_string(100 + i), text));
        }
        auto rec = record_with({corpus[rng() % 50], corpus[rng() % 50]}, {});
        if (rec.supporting_passages[0].id == rec.supporting_passages[1].id) rec.supporting_passages.pop_back();
        auto gold = rec.gold_ids();
        auto qv = m.embed_one(rec.question);
        std::string best;
        double best_s = -2;
        for (const auto& p : corpus) {
            if (gold.count(p.id)) continue;
            auto v = m.embed_one(p.text);
            double s = 0;
            for (std::size_t d = 0; d < v.size(); ++d) s += v[d] * qv[d];
            if (s > best_s + 1e-12 || (std::abs(s - best_s) <= 1e-12 && p.id < best)) {
                best_s = s;
                best = p.id;
            }
        }
        CHECK(mine_hard_negative(rec, corpus, m).id == best);
    }
}

TEST_CASE("pool assembly") {
    std::vector<Passage> distract;
    for (int i = 0; i < 20; ++i) distract.push_back(P("d" + std::to_string(10 + i), "x"));
    auto rec = record_with({P("g1", "a"), P("g2", "b")}, distract);

    auto pool = assemble_pool(rec, 15, true, P("hn", "hard"));
    CHECK(pool.record.candidate_passages.size() == 15);
    std::set<std::string> ids;
    for (const auto& p : pool.record.candidate_passages) ids.insert(p.id);
    CHECK(ids.count("g1"));
    CHECK(ids.count("g2"));
    CHECK(ids.count("hn"));
    CHECK(std::is_sorted(pool.record.candidate_passages.begin(), pool.record.candidate_passages.end(),
                         [](const Passage& a, const Passage& b) { return a.id < b.id; }));
    CHECK_FALSE(pool.short_of_target);
    CHECK(pool.record.gold_ids() == std::set<std::string>{"g1", "g2"});

    auto without = assemble_pool(rec, 15, false, P("hn", "hard"));
    CHECK(without.record.candidate_passages.size() == 15);
    for (const auto& p : without.record.candidate_passages) CHECK(p.id != "hn");

    auto gold_only = assemble_pool(record_with({P("g1", "a"), P("g2", "b")}, {}), 2, true);
    CHECK(gold_only.record.candidate_passages.size() == 2);
    CHECK(gold_only.record.candidate_passages == gold_only.record.supporting_passages);

    auto shorter = assemble_pool(record_with({P("g1", "a")}, {P("d1", "x")}), 15, false);
    CHECK(shorter.short_of_target);
    CHECK(shorter.record.candidate_passages.size() == 2);
    CHECK_THROWS_AS(assemble_pool(rec, 1, false), DataError);
}

}  // TEST_SUITE

TEST_SUITE("eval") {

TEST_CASE("answer F1 examples") {
    CHECK(answer_f1("Barack Obama", "Obama") == doctest::Approx(2.0 / 3.0));
    CHECK(answer_f1("Clarence Brown", "Clarence Brown") == 1.0);
    CHECK(answer_f1("The Clarence Brown", "Clarence Brown") == 1.0);
    CHECK(answer_f1("clarence, brown!", "Clarence Brown") == 1.0);
    CHECK(answer_f1("", "") == 1.0);
    CHECK(answer_f1("the", "x") == 0.0);
    CHECK(answer_f1("1987", "1988") == 0.0);
    CHECK(normalize_answer_tokens("An  apple, a THE Pie.") == std::vector<std::string>{"apple", "pie"});
}

TEST_CASE("answer F1 is symmetric and bounded") {
    std::mt19937_64 rng(9);
    const std::vector<std::string> w = {"a", "the", "brown", "clarence", "1987", "paris", "Paris,", "x"};
    for (int it = 0; it < 500; ++it) {
        std::string a, b;
        for (std::size_t i = rng() % 5; i > 0; --i) a += w[rng() % w.size()] + " ";
        for (std::size_t i = rng() % 5; i > 0; --i) b += w[rng() % w.size()] + " ";
        double f = answer_f1(a, b);
        CHECK(f == doctest::Approx(answer_f1(b, a)).epsilon(1e-15));
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
    }
}

TEST_CASE("recall@k matches the intersection oracle") {
    PassageRanking r;
    for (const std::string id : {"p1", "p2", "p3", "p4", "p5"}) r.ranked.push_back({id, 1.0});
    CHECK(recall_at_k(r, {"p1", "p2", "p3", "p4", "p5"}, 5) == 1.0);
    std::mt19937_64 rng(15);
    for (int it = 0; it < 300; ++it) {
        std::vector<std::string> ids;
        for (int i = 0; i < 8; ++i) ids.push_back("p" + std::to_string(i));
        std::shuffle(ids.begin(), ids.end(), rng);
        PassageRanking pr;
        for (std::size_t i = 0; i < rng() % 8; ++i) pr.ranked.push_back({ids[i], 0.5});
        std::set<std::string> gold;
        for (int i = 0; i < 8; ++i) {
            if (rng() % 3 == 0) gold.insert("p" + std::to_string(i));
        }
        if (gold.empty()) gold.insert("p0");
        std::size_t k = 1 + rng() % 8;
        CHECK(recall_at_k(pr, gold, k) == oracle::recall(pr.ids(), gold, k));
    }
}

TEST_CASE("toy run with the subgraph retriever matches the golden report") {
    auto g = toy::graph();
    auto gw = toy::gateway();
    MockEmbeddingProvider m;
    RetrieverSpec spec;
    spec.kind = RetrieverKind::Subgraph;
    spec.hops = 1;
    auto golden = json::parse(oracle::slurp(toy::dir() / "eval_subgraph_1hop.golden.json"));
    auto report = run_qa_eval(g, toy::samples(), spec, gw, m);
    CHECK(report.to_json() == golden);
    // workers do not change the result
    EvalOptions par;
    par.workers = 3;
    CHECK(run_qa_eval(g, toy::samples(), spec, gw, m, par).to_json() == golden);
    CHECK(report.table().find("mean") != std::string::npos);
}

TEST_CASE("toy run, three hops answers everything") {
    auto g = toy::graph();
    auto gw = toy::gateway();
    MockEmbeddingProvider m;
    RetrieverSpec spec;
    spec.hops = 3;
    auto report = run_qa_eval(g, toy::samples(), spec, gw, m);
    CHECK(report.aggregates.at("f1") == 1.0);
    CHECK(report.per_sample[0].prediction == "Leopoldo Torre Nilsson");
    CHECK(report.per_sample[2].prediction == "1987");
}

TEST_CASE("empty sample list gives an empty report") {
    auto gw = toy::gateway();
    MockEmbeddingProvider m;
    auto report = run_qa_eval(toy::graph(), {}, RetrieverSpec{}, gw, m);
    CHECK(report.per_sample.empty());
    CHECK(report.aggregates.empty());
}

TEST_CASE("text mode reports recall@5 per sample") {
    auto g = toy::graph();
    auto gw = toy::gateway();
    MockEmbeddingProvider m;
    RetrieverSpec spec;
    spec.kind = RetrieverKind::Ppr;
    auto report = run_qa_eval(g, toy::samples(), spec, gw, m);
    REQUIRE(report.per_sample.size() == 3);
    for (const auto& s : report.per_sample) CHECK(s.metrics.count("recall@5") == 1);
    CHECK(report.aggregates.count("recall@5") == 1);
}

TEST_CASE("gateway failures are flagged, not fatal") {
    ScriptedGateway empty;  // no rules at all
    MockEmbeddingProvider m;
    RetrieverSpec spec;
    spec.hops = 2;
    auto report = run_qa_eval(toy::graph(), toy::samples(), spec, empty, m);
    REQUIRE(report.per_sample.size() == 3);
    for (const auto& s : report.per_sample) {
        CHECK(s.metrics.at("f1") == 0.0);
        CHECK(s.flags == std::vector<std::string>{"gateway_error"});
    }
}

TEST_CASE("answer letters") {
    CHECK(parse_answer_letter("A") == 0);
    CHECK(parse_answer_letter("A.") == 0);
    CHECK(parse_answer_letter("a") == 0);
    CHECK(parse_answer_letter(" (b) ") == 1);
    CHECK(parse_answer_letter("C: 1987") == 2);
    CHECK(parse_answer_letter("D") == 3);
    CHECK_FALSE(parse_answer_letter("E"));
    CHECK_FALSE(parse_answer_letter("Answer"));
    CHECK_FALSE(parse_answer_letter(""));
}

TEST_CASE("MCQ harness: five questions, four right") {
    json qs = json::array();
    for (int i = 0; i < 5; ++i) {
        qs.push_back({{"question", "Q" + std::to_string(i) + "?"},
                      {"options", {"A: w", "B: x", "C: y", "D: z"}},
                      {"answer", i == 4 ? "D" : "B"}});
    }
    ScriptedGateway gw;
    gw.respond_default("mcq_generate", qs.dump());
    gw.respond_default("mcq_answer", "B");
    RecordingGateway rec(gw);
    KnowledgeGraph g = build_graph({{"p1", {{"a", "r", "b"}}}, {"p2", {{"c", "r", "d"}}}},
                                   {{"p1", "text one", ""}, {"p2", "text two", ""}});
    auto report = mcq_intrinsic_harness({{"p1", "text one", ""}}, g, rec);
    REQUIRE(report.per_sample.size() == 1);
    CHECK(report.per_sample[0].metrics.at("accuracy") == doctest::Approx(0.8));
    CHECK(report.aggregates.at("accuracy") == doctest::Approx(0.8));
    // answering sees only the passage's own triples, options without labels
    auto t = rec.transcript();
    REQUIRE(t.size() == 6);
    CHECK(t[1].prompt.find("(a, r, b)") != std::string::npos);
    CHECK(t[1].prompt.find("(c, r, d)") == std::string::npos);
    CHECK(t[1].prompt.find("A: w") == std::string::npos);
}

TEST_CASE("MCQ harness: malformed output is skipped") {
    ScriptedGateway gw;
    gw.respond("mcq_generate", {{"passage", "bad"}}, "I cannot write questions.");
    gw.respond("mcq_generate", {{"passage", "wrong shape"}}, R"([{"question":"q","options":["a","b"],"answer":"A"}])");
    gw.respond_default("mcq_generate", R"j([{"question":"q","options":["a","b","c","d"],"answer":"(c)"}])j");
    gw.respond_default("mcq_answer", "c.");
    KnowledgeGraph g = build_graph({}, {{"p1", "bad", ""}, {"p2", "fine", ""}, {"p3", "wrong shape", ""}});
    auto report = mcq_intrinsic_harness({{"p1", "bad", ""}, {"p2", "fine", ""}, {"p3", "wrong shape", ""}}, g, gw);
    REQUIRE(report.per_sample.size() == 3);
    CHECK(report.per_sample[0].flags == std::vector<std::string>{"mcq_malformed"});
    CHECK(report.per_sample[0].metrics.empty());
    CHECK(report.per_sample[2].flags == std::vector<std::string>{"mcq_malformed"});
    CHECK(report.aggregates.at("accuracy") == 1.0);
}

TEST_CASE("toy MCQ run") {
    auto g = toy::graph();
    auto gw = toy::gateway();
    std::vector<Passage> ps;
    for (const auto& [_, p] : g.passages()) ps.push_back(p);
    auto report = mcq_intrinsic_harness(ps, g, gw);
    CHECK(report.aggregates.at("accuracy") == 1.0);
    CHECK(report.per_sample.size() == 4);
}

}  // TEST_SUITE
