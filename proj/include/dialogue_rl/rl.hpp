#pragma once

#include "dialogue_rl/mmi.hpp"
#include "dialogue_rl/simulator.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace dialogue_rl::rl {

using corpus::TokenSeq;
using seq2seq::ModelParams;

struct CurriculumStage {
    int epoch = 0;
    int max_turns = 2;
};

struct RlConfig {
    /// Simulated-turn schedule; must start at 2 turns and end at 5.
    std::vector<CurriculumStage> curriculum = {{0, 2}, {3, 3}, {6, 4}, {9, 5}};
    int candidates_per_step = 5;
    double lr = 0.02;
    double baseline_lr = 0.05;
    int branch_budget = 125;
    bool use_baseline = true;
    /// Weight each action by the return from that action onward instead of
    /// the whole-episode return. Off by default.
    bool reward_to_go = false;
    int batch_messages = 8;
    int max_len = 16;
    double temperature = 1.0;
    int epochs = 12;
    std::uint64_t seed = 0;
    bool verbose = false;

    void validate() const;
    int max_turns_at(int epoch) const;
};

/// Undiscounted sum of the agent's per-turn reward totals.
double episode_return(const simulator::SimulatedDialogue& dialogue, int agent);

struct PgStepStats {
    double mean_return = 0.0;
    double grad_norm = 0.0;
    int trajectories = 0;
};

/// One likelihood-ratio update over a batch of recorded trajectories: every
/// action is weighted by its acting agent's episode return minus the baseline
/// prediction for that (state, action). The baseline regresses toward the
/// return separately and never feeds gradients into the policy.
PgStepStats policy_gradient_step(const std::vector<simulator::SimulatedDialogue>& batch,
                                 ModelParams& policy, mmi::BaselineNet* baseline,
                                 const RlConfig& cfg);

struct EpochLog {
    int epoch = 0;
    double mean_return = 0.0;
    double mean_len = 0.0;
    double distinct1 = 0.0;
    double distinct2 = 0.0;
    int max_turns = 0;
};

struct TrainRlResult {
    std::vector<EpochLog> log;
};

/// Policy-gradient training over self-play rollouts from the starter
/// messages, following the turn curriculum. Writes one log line per epoch
/// ("epoch\tmean_return\tmean_len\tdistinct1\tdistinct2") to log_stream when
/// given.
TrainRlResult train_rl(ModelParams& policy, const std::vector<TokenSeq>& starters,
                       const rewards::RewardContext& reward_ctx, mmi::BaselineNet& baseline,
                       const RlConfig& cfg, std::ostream* log_stream);

} // namespace dialogue_rl::rl
