#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "autograph/config.hpp"
#include "autograph/errors.hpp"
#include "autograph/kg.hpp"

namespace autograph {

// A score request that cannot be served. status is 400 for a malformed body
// and 422 for a well-formed body whose fields do not fit the mode.
class RequestError : public DataError {
public:
    RequestError(int status, const std::string& what) : DataError(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

enum class RewardMode { KnowledgeCarrying, KnowledgeIndexing };

std::string to_string(RewardMode mode);

/// Constructor output for one rollout, split by source passage.
using Generation = std::vector<std::pair<std::string, std::string>>;  // passage id -> raw text

struct ScoreParams {
    int hops = 3;
    AnchorMode anchor_mode = AnchorMode::StringMatch;
    PPRConfig ppr;
    double lambda_rep = 1.0;
    double hard_cap = 0.3;
    bool apply_repetition_penalty = true;
    double std_floor = 1e-6;
    Decoding judge{0.0, 16, std::nullopt};
    bool include_transcript = false;

    static ScoreParams from_config(const RunConfig& config);
    /// Overlays request-level overrides; unknown keys are a 400.
    void update_from_json(const json& j);
    json to_json() const;
};

struct ScoreRequest {
    std::string query;
    std::string gold_answer;
    std::set<std::string> gold_passage_ids;
    std::vector<Passage> passages;
    std::vector<Generation> generations;
    RewardMode mode = RewardMode::KnowledgeCarrying;
    ScoreParams params;

    /// Generations may be a string (carrying mode, attributed to the first
    /// passage), an array parallel to `passages`, or an object keyed by
    /// passage id. Throws RequestError.
    static ScoreRequest from_json(const json& body, const ScoreParams& defaults = {});
};

struct GenerationScore {
    double reward = 0.0;
    double penalized_reward = 0.0;
    double p_rep = 0.0;
    std::size_t parse_malformed_count = 0;
    std::size_t evidence_size = 0;
    std::vector<std::string> flags;
};

struct ScoreResponse {
    std::vector<GenerationScore> per_generation;
    std::optional<std::vector<double>> advantages;  // only when G >= 2
    std::vector<long long> timing_ms;
    std::optional<json> transcript;

    json to_json() const;
    /// Same body without timing_ms, for byte comparisons.
    json to_json_without_timing() const;
};

/// Runs construction-to-reward for every generation against a request-local
/// graph. Per-generation data problems score 0 and are flagged; judge
/// transport failures propagate.
ScoreResponse score(const ScoreRequest& request, const ChatGateway& gateway,
                    const EmbeddingProvider& embedder);

}  // namespace autograph
