#pragma once

#include <span>
#include <string>
#include <vector>

#include "autograph/util.hpp"

namespace autograph {

/// G sampled generations for one query.
struct RolloutGroup {
    std::vector<double> rewards;
    std::vector<std::vector<double>> token_logprobs_new;
    std::vector<std::vector<double>> token_logprobs_old;

    /// G >= 2, aligned shapes, finite values. Throws DataError otherwise.
    void validate() const;

    /// `{"rewards":[..],"logp_new":[[..]],"logp_old":[[..]]}`
    static RolloutGroup from_json(const json& j);
    json to_json() const;
};

struct GRPOConfig {
    double clip_epsilon = 0.2;
    double std_floor = 1e-6;
};

/// (R_i - mean) / std with the population std. A group whose std falls
/// below `std_floor` gets all-zero advantages.
std::vector<double> group_advantages(std::span<const double> rewards, double std_floor = 1e-6);

/// exp(logp_new - logp_old), elementwise.
std::vector<double> token_ratios(std::span<const double> logp_new, std::span<const double> logp_old);

/// min(r * A, clip(r, 1 - eps, 1 + eps) * A)
double clipped_surrogate(double ratio, double advantage, double epsilon);

/// Clipped surrogate averaged over each sample's tokens, then over the group.
/// There is no KL term.
double grpo_objective(const RolloutGroup& group, const GRPOConfig& config);

}  // namespace autograph
