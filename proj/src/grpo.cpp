#include "autograph/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "autograph/errors.hpp"

namespace autograph {

namespace {
void require_finite(std::span<const double> xs, const char* what) {
    for (double x : xs) {
        if (!std::isfinite(x)) throw DataError(std::string(what) + " contains a non-finite value");
    }
}
}  // namespace

void RolloutGroup::validate() const {
    if (rewards.size() < 2) throw DataError("rollout group needs at least 2 samples");
    if (token_logprobs_new.size() != rewards.size() || token_logprobs_old.size() != rewards.size())
        throw DataError("rollout group: log-prob sequences must match the number of rewards");
    require_finite(rewards, "rewards");
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        if (token_logprobs_new[i].size() != token_logprobs_old[i].size())
            throw DataError("rollout group: sample " + std::to_string(i) +
                            " has mismatched new/old lengths");
        require_finite(token_logprobs_new[i], "logp_new");
        require_finite(token_logprobs_old[i], "logp_old");
    }
}

RolloutGroup RolloutGroup::from_json(const json& j) {
    RolloutGroup g;
    try {
        g.rewards = j.at("rewards").get<std::vector<double>>();
        g.token_logprobs_new = j.at("logp_new").get<std::vector<std::vector<double>>>();
        g.token_logprobs_old = j.at("logp_old").get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("rollout group: ") + e.what());
    }
    return g;
}

json RolloutGroup::to_json() const {
    return {{"rewards", rewards}, {"logp_new", token_logprobs_new}, {"logp_old", token_logprobs_old}};
}

std::vector<double> group_advantages(std::span<const double> rewards, double std_floor) {
    if (rewards.size() < 2) throw DataError("group advantages need at least 2 rewards");
    require_finite(rewards, "rewards");
    const double n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    double sd = std::sqrt(var / n);

    std::vector<double> adv(rewards.size(), 0.0);
    if (sd < std_floor) return adv;
    for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / sd;
    return adv;
}

std::vector<double> token_ratios(std::span<const double> logp_new, std::span<const double> logp_old) {
    if (logp_new.size() != logp_old.size())
        throw DataError("token ratios: length mismatch " + std::to_string(logp_new.size()) + " vs " +
                        std::to_string(logp_old.size()));
    require_finite(logp_new, "logp_new");
    require_finite(logp_old, "logp_old");
    std::vector<double> out(logp_new.size());
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = std::exp(logp_new[t] - logp_old[t]);
    return out;
}

double clipped_surrogate(double ratio, double advantage, double epsilon) {
    double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    return std::min(ratio * advantage, clipped * advantage);
}

double grpo_objective(const RolloutGroup& group, const GRPOConfig& config) {
    group.validate();
    if (!(config.clip_epsilon > 0.0)) throw ConfigError("clip_epsilon must be positive");
    auto adv = group_advantages(group.rewards, config.std_floor);
    double total = 0.0;
    for (std::size_t i = 0; i < group.rewards.size(); ++i) {
        auto ratios = token_ratios(group.token_logprobs_new[i], group.token_logprobs_old[i]);
        if (ratios.empty()) continue;
        double sum = 0.0;
        for (double r : ratios) sum += clipped_surrogate(r, adv[i], config.clip_epsilon);
        total += sum / static_cast<double>(ratios.size());
    }
    return total / static_cast<double>(group.rewards.size());
}

}  // namespace autograph
