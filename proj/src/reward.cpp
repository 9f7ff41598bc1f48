#include "autograph/reward.hpp"

#include <algorithm>
#include <cctype>

#include "autograph/errors.hpp"

namespace autograph {

json RewardOutcome::to_json() const {
    json j = {{"value", value}, {"penalized_value", penalized_value}, {"components", components}};
    if (judge_transcript_ref) j["judge_transcript_ref"] = *judge_transcript_ref;
    return j;
}

double recall_at_k(const PassageRanking& ranking, const std::set<std::string>& gold_ids,
                   std::size_t k) {
    if (gold_ids.empty()) throw ConfigError("recall needs a non-empty gold passage set");
    if (k < 1) throw ConfigError("recall needs k >= 1");
    std::set<std::string> top;
    for (std::size_t i = 0; i < ranking.ranked.size() && i < k; ++i)
        top.insert(ranking.ranked[i].passage_id);
    std::size_t hit = 0;
    for (const auto& g : gold_ids) hit += top.count(g);
    return static_cast<double>(hit) / static_cast<double>(gold_ids.size());
}

JudgeVerdict parse_judge_verdict(std::string_view reply) {
    std::string s = ascii_lower(trim(reply));
    auto strip = [](char c) {
        return std::ispunct(static_cast<unsigned char>(c)) || std::isspace(static_cast<unsigned char>(c));
    };
    while (!s.empty() && strip(s.back())) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && strip(s[b])) ++b;
    s.erase(0, b);
    if (s == "yes") return JudgeVerdict::Yes;
    if (s == "no") return JudgeVerdict::No;
    return JudgeVerdict::Malformed;
}

RewardOutcome knowledge_carrying_reward(std::string_view query, std::string_view gold_answer,
                                        const GraphEvidence& evidence, const ChatGateway& gateway,
                                        const Decoding& decoding) {
    RewardOutcome out;
    out.components["judge_called"] = 0.0;
    if (evidence.empty()) {
        out.components["empty_evidence"] = 1.0;
        return out;
    }
    Bindings b = {{"triples string", evidence.context()},
                  {"query", std::string(query)},
                  {"answer", std::string(gold_answer)}};
    out.judge_transcript_ref = bindings_hash(b);
    ChatResponse reply = gateway.complete(templates::kDeducibleJudge, b, decoding);
    out.components["judge_called"] = 1.0;

    JudgeVerdict v = reply.truncated() ? JudgeVerdict::Malformed : parse_judge_verdict(reply.text);
    if (v == JudgeVerdict::Malformed) {
        out.components["judge_format_error"] = 1.0;
    } else {
        out.value = v == JudgeVerdict::Yes ? 1.0 : 0.0;
    }
    out.penalized_value = out.value;
    return out;
}

RewardOutcome knowledge_indexing_reward(const PassageRanking& ranking,
                                        const std::set<std::string>& gold_passage_ids,
                                        std::size_t k) {
    RewardOutcome out;
    out.value = recall_at_k(ranking, gold_passage_ids, k);
    out.penalized_value = out.value;
    return out;
}

RepetitionStats repetition_penalty(const std::vector<Triple>& triples) {
    if (triples.empty()) return {};
    std::set<Triple> unique;
    for (const auto& t : triples) {
        try {
            unique.insert({normalize_entity(t.subject), normalize_entity(t.relation),
                           normalize_entity(t.object)});
        } catch (const NormalizationError&) {
            unique.insert(t);
        }
    }
    double total = static_cast<double>(triples.size());
    return {(total - static_cast<double>(unique.size())) / total, unique.size()};
}

RewardOutcome compose_reward(const RewardOutcome& raw, double p_rep, double lambda_rep,
                             double hard_cap) {
    if (lambda_rep < 0.0) throw ConfigError("lambda_rep must be non-negative");
    if (!(hard_cap > 0.0 && hard_cap <= 1.0)) throw ConfigError("hard_cap must lie in (0, 1]");
    RewardOutcome out = raw;
    out.components["raw_reward"] = raw.value;
    out.components["p_rep"] = p_rep;
    if (p_rep > hard_cap) {
        out.penalized_value = 0.0;
        out.components["hard_capped"] = 1.0;
    } else {
        out.penalized_value = std::max(0.0, raw.value - lambda_rep * p_rep);
    }
    return out;
}

}  // namespace autograph
