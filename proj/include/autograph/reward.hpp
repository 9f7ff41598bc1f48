#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "autograph/kg.hpp"
#include "autograph/llm.hpp"
#include "autograph/retrieve_graph.hpp"
#include "autograph/retrieve_text.hpp"

namespace autograph {

struct RewardOutcome {
    double value = 0.0;            // in [0, 1], before any penalty
    double penalized_value = 0.0;  // <= value
    std::map<std::string, double> components;
    std::optional<std::string> judge_transcript_ref;

    json to_json() const;
};

/// |top-k(ranking) ∩ gold| / |gold|. Shared by the indexing reward and the
/// recall@k evaluation metric. Throws ConfigError for an empty gold set.
double recall_at_k(const PassageRanking& ranking, const std::set<std::string>& gold_ids,
                   std::size_t k);

/// Judge verdict on whether `gold_answer` is deducible from the evidence.
/// Empty evidence scores 0 without calling the judge. Replies other than
/// yes/no (case-insensitive, trailing punctuation ignored) score 0 and set
/// components["judge_format_error"]. Transport failures propagate.
RewardOutcome knowledge_carrying_reward(std::string_view query, std::string_view gold_answer,
                                        const GraphEvidence& evidence, const ChatGateway& gateway,
                                        const Decoding& decoding = {0.0, 16, std::nullopt});

/// Fraction of gold passages recovered in the top-k of the ranking.
RewardOutcome knowledge_indexing_reward(const PassageRanking& ranking,
                                        const std::set<std::string>& gold_passage_ids,
                                        std::size_t k);

struct RepetitionStats {
    double p_rep = 0.0;
    std::size_t unique_count = 0;
};

/// (|T_gen| - |T_unique|) / |T_gen|, uniqueness on normalized fields.
RepetitionStats repetition_penalty(const std::vector<Triple>& triples);

/// Zero above the hard cap; otherwise max(0, value - lambda * p_rep).
RewardOutcome compose_reward(const RewardOutcome& raw, double p_rep, double lambda_rep = 1.0,
                             double hard_cap = 0.3);

enum class JudgeVerdict { Yes, No, Malformed };
JudgeVerdict parse_judge_verdict(std::string_view reply);

}  // namespace autograph
