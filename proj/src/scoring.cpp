#include "autograph/scoring.hpp"

#include <chrono>
#include <exception>
#include <thread>

#include <spdlog/spdlog.h>

#include "autograph/grpo.hpp"
#include "autograph/retrieve_graph.hpp"
#include "autograph/retrieve_text.hpp"
#include "autograph/reward.hpp"

namespace autograph {

std::string to_string(RewardMode mode) {
    return mode == RewardMode::KnowledgeCarrying ? "knowledge_carrying" : "knowledge_indexing";
}

ScoreParams ScoreParams::from_config(const RunConfig& config) {
    ScoreParams p;
    p.hops = config.reward.training_hops;
    p.anchor_mode = config.retriever.anchor_mode;
    p.ppr = config.retriever.ppr;
    p.lambda_rep = config.reward.lambda_rep;
    p.hard_cap = config.reward.hard_cap;
    p.apply_repetition_penalty = config.reward.apply_repetition_penalty;
    p.std_floor = config.grpo.std_floor;
    p.judge = config.judge.decoding();
    return p;
}

void ScoreParams::update_from_json(const json& j) {
    if (!j.is_object()) throw RequestError(400, "params must be an object");
    static const std::set<std::string> known{"hops",       "anchor_mode", "ppr",
                                             "lambda_rep", "hard_cap",    "apply_repetition_penalty",
                                             "std_floor",  "include_transcript"};
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw RequestError(400, "unknown params key '" + key + "'");
    }
    try {
        hops = j.value("hops", hops);
        if (j.contains("anchor_mode")) anchor_mode = parse_anchor_mode(j["anchor_mode"].get<std::string>());
        if (j.contains("ppr")) {
            const auto& p = j["ppr"];
            if (!p.is_object()) throw RequestError(400, "params.ppr must be an object");
            ppr.damping = p.value("damping", ppr.damping);
            ppr.tolerance = p.value("tolerance", ppr.tolerance);
            ppr.max_iterations = p.value("max_iterations", ppr.max_iterations);
            ppr.seed_triples_k = p.value("seed_triples_k", ppr.seed_triples_k);
        }
        lambda_rep = j.value("lambda_rep", lambda_rep);
        hard_cap = j.value("hard_cap", hard_cap);
        apply_repetition_penalty = j.value("apply_repetition_penalty", apply_repetition_penalty);
        std_floor = j.value("std_floor", std_floor);
        include_transcript = j.value("include_transcript", include_transcript);
    } catch (const json::exception& e) {
        throw RequestError(400, std::string("params: ") + e.what());
    } catch (const ConfigError& e) {
        throw RequestError(400, std::string("params: ") + e.what());
    }
    if (hops < 1) throw RequestError(422, "params.hops must be >= 1");
    if (lambda_rep < 0.0) throw RequestError(422, "params.lambda_rep must be non-negative");
    if (!(hard_cap > 0.0 && hard_cap <= 1.0)) throw RequestError(422, "params.hard_cap must lie in (0, 1]");
    if (!(std_floor >= 0.0)) throw RequestError(422, "params.std_floor must be non-negative");
    try {
        ppr.validate();
    } catch (const ConfigError& e) {
        throw RequestError(422, e.what());
    }
}

json ScoreParams::to_json() const {
    return {{"hops", hops},
            {"anchor_mode", to_string(anchor_mode)},
            {"ppr",
             {{"damping", ppr.damping},
              {"tolerance", ppr.tolerance},
              {"max_iterations", ppr.max_iterations},
              {"seed_triples_k", ppr.seed_triples_k}}},
            {"lambda_rep", lambda_rep},
            {"hard_cap", hard_cap},
            {"apply_repetition_penalty", apply_repetition_penalty},
            {"std_floor", std_floor},
            {"include_transcript", include_transcript}};
}

namespace {

std::string require_string(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end()) throw RequestError(400, std::string("missing field '") + key + "'");
    if (!it->is_string()) throw RequestError(400, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

std::vector<Passage> parse_passages(const json& body) {
    auto it = body.find("passages");
    if (it == body.end() || !it->is_array()) throw RequestError(400, "'passages' must be an array");
    std::vector<Passage> out;
    std::set<std::string> seen;
    for (const auto& p : *it) {
        Passage passage;
        if (p.is_object() && p.contains("id") && p["id"].is_string() && p.contains("text") &&
            p["text"].is_string()) {
            passage.id = p["id"].get<std::string>();
            passage.text = p["text"].get<std::string>();
            if (auto s = p.find("source_doc"); s != p.end() && s->is_string()) passage.source_doc = *s;
        } else if (p.is_array() && p.size() == 2 && p[0].is_string() && p[1].is_string()) {
            passage.id = p[0].get<std::string>();
            passage.text = p[1].get<std::string>();
        } else {
            throw RequestError(400, "each passage must be {\"id\",\"text\"} or [id, text]");
        }
        if (passage.id.empty()) throw RequestError(422, "passage id must not be empty");
        if (!seen.insert(passage.id).second)
            throw RequestError(422, "duplicate passage id '" + passage.id + "'");
        out.push_back(std::move(passage));
    }
    if (out.empty()) throw RequestError(422, "'passages' must not be empty");
    return out;
}

Generation parse_generation(const json& g, const std::vector<Passage>& passages, RewardMode mode,
                            std::size_t index) {
    std::string where = "generations[" + std::to_string(index) + "]";
    Generation out;
    if (g.is_string()) {
        if (mode == RewardMode::KnowledgeIndexing)
            throw RequestError(422, where + ": indexing mode needs per-passage outputs");
        out.emplace_back(passages.front().id, g.get<std::string>());
    } else if (g.is_array()) {
        if (g.size() != passages.size())
            throw RequestError(422, where + ": expected one output per passage");
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!g[i].is_string()) throw RequestError(400, where + ": outputs must be strings");
            out.emplace_back(passages[i].id, g[i].get<std::string>());
        }
    } else if (g.is_object()) {
        std::set<std::string> ids;
        for (const auto& p : passages) ids.insert(p.id);
        for (const auto& [pid, raw] : g.items()) {
            if (!ids.count(pid)) throw RequestError(422, where + ": unknown passage id '" + pid + "'");
            if (!raw.is_string()) throw RequestError(400, where + ": outputs must be strings");
            out.emplace_back(pid, raw.get<std::string>());
        }
    } else {
        throw RequestError(400, where + ": must be a string, array or object");
    }
    return out;
}

}  // namespace

ScoreRequest ScoreRequest::from_json(const json& body, const ScoreParams& defaults) {
    if (!body.is_object()) throw RequestError(400, "request body must be a JSON object");
    static const std::set<std::string> known{"query",      "gold_answer", "gold_passage_ids", "passages",
                                             "generations", "mode",       "params"};
    for (const auto& [key, _] : body.items()) {
        if (!known.count(key)) throw RequestError(400, "unknown field '" + key + "'");
    }

    ScoreRequest req;
    req.params = defaults;
    req.query = require_string(body, "query");
    std::string mode = require_string(body, "mode");
    if (mode == "knowledge_carrying") {
        req.mode = RewardMode::KnowledgeCarrying;
    } else if (mode == "knowledge_indexing") {
        req.mode = RewardMode::KnowledgeIndexing;
    } else {
        throw RequestError(422, "unknown mode '" + mode + "'");
    }
    if (trim(req.query).empty()) throw RequestError(422, "query must not be empty");

    if (auto it = body.find("gold_answer"); it != body.end()) {
        if (!it->is_string()) throw RequestError(400, "field 'gold_answer' must be a string");
        req.gold_answer = it->get<std::string>();
    }
    if (auto it = body.find("gold_passage_ids"); it != body.end()) {
        if (!it->is_array()) throw RequestError(400, "field 'gold_passage_ids' must be an array");
        for (const auto& id : *it) {
            if (!id.is_string()) throw RequestError(400, "gold passage ids must be strings");
            req.gold_passage_ids.insert(id.get<std::string>());
        }
    }
    req.passages = parse_passages(body);
    if (body.contains("params")) req.params.update_from_json(body["params"]);

    if (req.mode == RewardMode::KnowledgeCarrying) {
        if (trim(req.gold_answer).empty())
            throw RequestError(422, "knowledge_carrying mode requires gold_answer");
    } else {
        if (req.gold_passage_ids.empty())
            throw RequestError(422, "knowledge_indexing mode requires gold_passage_ids");
        std::set<std::string> ids;
        for (const auto& p : req.passages) ids.insert(p.id);
        for (const auto& g : req.gold_passage_ids) {
            if (!ids.count(g)) throw RequestError(422, "gold passage '" + g + "' is not among passages");
        }
    }

    auto gens = body.find("generations");
    if (gens == body.end() || !gens->is_array()) throw RequestError(400, "'generations' must be an array");
    if (gens->empty()) throw RequestError(422, "at least one generation is required");
    for (std::size_t i = 0; i < gens->size(); ++i)
        req.generations.push_back(parse_generation((*gens)[i], req.passages, req.mode, i));
    return req;
}

json ScoreResponse::to_json_without_timing() const {
    json gens = json::array();
    for (const auto& g : per_generation) {
        gens.push_back({{"reward", g.reward},
                        {"penalized_reward", g.penalized_reward},
                        {"p_rep", g.p_rep},
                        {"parse_malformed_count", g.parse_malformed_count},
                        {"evidence_size", g.evidence_size},
                        {"flags", g.flags}});
    }
    json j = {{"per_generation", gens}};
    if (advantages) j["advantages"] = *advantages;
    if (transcript) j["transcript"] = *transcript;
    return j;
}

json ScoreResponse::to_json() const {
    json j = to_json_without_timing();
    j["timing_ms"] = timing_ms;
    return j;
}

namespace {

struct GenerationRun {
    GenerationScore score;
    long long elapsed_ms = 0;
    std::vector<TranscriptEntry> transcript;
};

GenerationRun score_generation(const ScoreRequest& req, const Generation& gen,
                               const ChatGateway& gateway, const EmbeddingProvider& embedder) {
    auto start = std::chrono::steady_clock::now();
    GenerationRun run;
    GenerationScore& s = run.score;
    RecordingGateway recorder(gateway);

    std::vector<std::pair<std::string, std::vector<Triple>>> per_passage;
    std::vector<Triple> all;
    bool parse_failed = false;
    for (const auto& [pid, raw] : gen) {
        try {
            ParsedTriples parsed = parse_triples(raw);
            s.parse_malformed_count += parsed.malformed_count;
            all.insert(all.end(), parsed.triples.begin(), parsed.triples.end());
            per_passage.emplace_back(pid, std::move(parsed.triples));
        } catch (const ParseError&) {
            parse_failed = true;
        }
    }
    if (parse_failed) s.flags.push_back("parse_error");

    try {
        KnowledgeGraph graph = build_graph(per_passage, req.passages);
        RepetitionStats rep = repetition_penalty(all);
        s.p_rep = rep.p_rep;

        RewardOutcome raw;
        if (req.mode == RewardMode::KnowledgeCarrying) {
            GraphEvidence evidence =
                subgraph_retrieve(graph, req.query, req.params.hops, req.params.anchor_mode, &recorder);
            s.evidence_size = evidence.size();
            raw = knowledge_carrying_reward(req.query, req.gold_answer, evidence, recorder,
                                            req.params.judge);
        } else {
            std::size_t n = req.gold_passage_ids.size();
            PassageRanking ranking = rank_passages(graph, req.query, n, req.params.ppr, embedder);
            s.evidence_size = ranking.ranked.size();
            raw = knowledge_indexing_reward(ranking, req.gold_passage_ids, n);
        }

        RewardOutcome final_outcome = raw;
        if (req.params.apply_repetition_penalty) {
            final_outcome = compose_reward(raw, s.p_rep, req.params.lambda_rep, req.params.hard_cap);
        } else {
            final_outcome.penalized_value = raw.value;
        }
        s.reward = raw.value;
        s.penalized_reward = final_outcome.penalized_value;
        for (const char* flag : {"empty_evidence", "judge_format_error", "hard_capped"}) {
            auto it = final_outcome.components.find(flag);
            if (it != final_outcome.components.end() && it->second != 0.0) s.flags.emplace_back(flag);
        }
    } catch (const DataError& e) {
        spdlog::debug("generation scored 0: {}", e.what());
        s.reward = 0.0;
        s.penalized_reward = 0.0;
        s.flags.push_back("graph_error");
    }

    run.transcript = recorder.transcript();
    run.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    return run;
}

}  // namespace

ScoreResponse score(const ScoreRequest& request, const ChatGateway& gateway,
                    const EmbeddingProvider& embedder) {
    const std::size_t g = request.generations.size();
    std::vector<GenerationRun> runs(g);
    std::vector<std::exception_ptr> errors(g);

    auto one = [&](std::size_t i) {
        try {
            runs[i] = score_generation(request, request.generations[i], gateway, embedder);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    if (g == 1) {
        one(0);
    } else {
        std::vector<std::jthread> workers;
        workers.reserve(g);
        for (std::size_t i = 0; i < g; ++i) workers.emplace_back(one, i);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    ScoreResponse resp;
    std::vector<double> penalized;
    json transcript = json::array();
    for (std::size_t i = 0; i < g; ++i) {
        resp.per_generation.push_back(runs[i].score);
        resp.timing_ms.push_back(runs[i].elapsed_ms);
        penalized.push_back(runs[i].score.penalized_reward);
        for (const auto& t : runs[i].transcript) {
            transcript.push_back({{"generation", i},
                                  {"template", t.template_name},
                                  {"bindings_hash", t.bindings_hash},
                                  {"prompt", t.prompt},
                                  {"response", t.response},
                                  {"finish_reason", t.finish_reason}});
        }
    }
    if (g >= 2) resp.advantages = group_advantages(penalized, request.params.std_floor);
    if (request.params.include_transcript) resp.transcript = std::move(transcript);
    return resp;
}

}  // namespace autograph
