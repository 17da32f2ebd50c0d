#include "dialogue_rl/rl.hpp"

#include "dialogue_rl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace dialogue_rl::rl {

using rewards::strip_eos;
using simulator::SimulatedDialogue;

void RlConfig::validate() const {
    require(!curriculum.empty(), "RlConfig: empty curriculum");
    require(curriculum.front().epoch == 0, "RlConfig: curriculum must start at epoch 0");
    require(curriculum.front().max_turns == 2, "RlConfig: curriculum must start at 2 turns");
    require(curriculum.back().max_turns == 5, "RlConfig: curriculum must end at 5 turns");
    for (std::size_t i = 0; i < curriculum.size(); ++i) {
        require(curriculum[i].max_turns >= 2 && curriculum[i].max_turns <= 5,
                "RlConfig: curriculum turns outside [2,5]");
        if (i > 0) {
            require(curriculum[i].epoch > curriculum[i - 1].epoch,
                    "RlConfig: curriculum epochs must increase");
            require(curriculum[i].max_turns >= curriculum[i - 1].max_turns,
                    "RlConfig: curriculum turns must not decrease");
        }
    }
    require(candidates_per_step >= 1, "RlConfig: candidates_per_step must be >= 1");
    require(lr > 0.0, "RlConfig: lr must be positive");
    require(branch_budget >= 1, "RlConfig: branch_budget must be >= 1");
    require(batch_messages >= 1, "RlConfig: batch_messages must be >= 1");
    require(epochs >= 0, "RlConfig: negative epochs");
}

int RlConfig::max_turns_at(int epoch) const {
    int turns = curriculum.front().max_turns;
    for (const CurriculumStage& stage : curriculum) {
        if (epoch >= stage.epoch) {
            turns = stage.max_turns;
        }
    }
    return turns;
}

double episode_return(const SimulatedDialogue& dialogue, int agent) {
    double total = 0.0;
    bool seen = false;
    for (const simulator::Turn& turn : dialogue.turns) {
        if (turn.agent == agent) {
            total += turn.reward.total;
            seen = true;
        }
    }
    require(seen, "episode_return: dialogue has no turn by that agent");
    return total;
}

PgStepStats policy_gradient_step(const std::vector<SimulatedDialogue>& batch, ModelParams& policy,
                                 mmi::BaselineNet* baseline, const RlConfig& cfg) {
    require(!batch.empty(), "policy_gradient_step: empty batch");

    struct Action {
        const simulator::Turn* turn = nullptr;
        double weight = 0.0; // agent return (or reward-to-go) minus baseline
        Vector src_summary;
        Vector act_summary;
    };

    PgStepStats stats;
    std::vector<Action> actions;
    for (const SimulatedDialogue& d : batch) {
        double returns[2] = {0.0, 0.0};
        for (const simulator::Turn& t : d.turns) {
            returns[t.agent - 1] += t.reward.total;
        }
        stats.mean_return += returns[0] + returns[1];
        ++stats.trajectories;

        double to_go[2] = {returns[0], returns[1]};
        for (const simulator::Turn& t : d.turns) {
            Action a;
            a.turn = &t;
            a.weight = cfg.reward_to_go ? to_go[t.agent - 1] : returns[t.agent - 1];
            to_go[t.agent - 1] -= t.reward.total;
            actions.push_back(std::move(a));
        }
    }
    stats.mean_return /= static_cast<double>(stats.trajectories);

    if (baseline != nullptr && cfg.use_baseline) {
        // Summaries under the live policy; computed forward-only so the
        // baseline never leaks gradients into it.
        const int n_actions = static_cast<int>(actions.size());
        std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 4)
        for (int i = 0; i < n_actions; ++i) {
            try {
                Action& a = actions[static_cast<std::size_t>(i)];
                a.src_summary = seq2seq::encode(a.turn->state.to_source(), policy).summary;
                a.act_summary =
                    seq2seq::encode(rewards::action_source(a.turn->tokens), policy).summary;
            } catch (...) {
#pragma omp critical
                if (!error) {
                    error = std::current_exception();
                }
            }
        }
        if (error) {
            std::rethrow_exception(error);
        }
        for (Action& a : actions) {
            const double target = a.weight;
            const double value = baseline->update(a.src_summary, a.act_summary, target,
                                                  cfg.baseline_lr);
            a.weight -= value;
        }
    }

    ModelParams grads = ModelParams::zeros_like(policy);
    const double loss = seq2seq::accumulate_grads_parallel(
        static_cast<int>(actions.size()), grads, [&](int i, ModelParams& g) {
            const Action& a = actions[static_cast<std::size_t>(i)];
            const std::vector<double> w(a.turn->tokens.size(), a.weight);
            return seq2seq::forced_sequence_loss(a.turn->state.to_source(), a.turn->tokens, w,
                                                 policy, &g);
        });
    if (!std::isfinite(loss)) {
        throw std::runtime_error("policy_gradient_step: non-finite gradient, training diverged");
    }

    stats.grad_norm = clip_global_norm(grads, seq2seq::kClipNorm);
    sgd_update(policy, grads, cfg.lr);
    return stats;
}

TrainRlResult train_rl(ModelParams& policy, const std::vector<TokenSeq>& starters,
                       const rewards::RewardContext& reward_ctx, mmi::BaselineNet& baseline,
                       const RlConfig& cfg, std::ostream* log_stream) {
    cfg.validate();
    require(!starters.empty(), "train_rl: empty starter set");

    TrainRlResult result;
    const int n = static_cast<int>(starters.size());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const int max_turns = cfg.max_turns_at(epoch);

        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng = derive_rng(cfg.seed, 0xE70C4ull + static_cast<std::uint64_t>(epoch));
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.below(static_cast<std::uint32_t>(i + 1)));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        double epoch_return = 0.0;
        double epoch_len = 0.0;
        int epoch_dialogues = 0;
        std::vector<TokenSeq> epoch_outputs;

        for (int base = 0; base < n; base += cfg.batch_messages) {
            const int count = std::min(cfg.batch_messages, n - base);

            std::vector<simulator::SimulateResult> rollouts(static_cast<std::size_t>(count));
            std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
            for (int j = 0; j < count; ++j) {
                try {
                    simulator::SimulateOptions opt;
                    opt.max_turns = max_turns;
                    opt.candidates_per_step = cfg.candidates_per_step;
                    opt.mode = simulator::GenMode::sample;
                    opt.branch_budget = cfg.branch_budget;
                    opt.temperature = cfg.temperature;
                    opt.max_len = cfg.max_len;
                    opt.seed = splitmix64(
                        cfg.seed ^ splitmix64(static_cast<std::uint64_t>(epoch) * 1000003ull +
                                              static_cast<std::uint64_t>(
                                                  order[static_cast<std::size_t>(base + j)])));
                    rollouts[static_cast<std::size_t>(j)] = simulator::simulate(
                        starters[static_cast<std::size_t>(
                            order[static_cast<std::size_t>(base + j)])],
                        policy, reward_ctx, opt);
                } catch (...) {
#pragma omp critical
                    if (!error) {
                        error = std::current_exception();
                    }
                }
            }
            if (error) {
                std::rethrow_exception(error);
            }

            std::vector<SimulatedDialogue> batch;
            for (int j = 0; j < count; ++j) {
                auto& r = rollouts[static_cast<std::size_t>(j)];
                for (auto& d : r.dialogues) {
                    epoch_len += static_cast<double>(d.turns.size());
                    ++epoch_dialogues;
                    batch.push_back(std::move(d));
                }
            }
            if (batch.empty()) {
                continue;
            }
            for (const SimulatedDialogue& d : batch) {
                for (const simulator::Turn& t : d.turns) {
                    epoch_outputs.push_back(strip_eos(t.tokens));
                }
            }

            const PgStepStats step =
                policy_gradient_step(batch, policy, cfg.use_baseline ? &baseline : nullptr, cfg);
            epoch_return += step.mean_return * static_cast<double>(step.trajectories);
        }

        EpochLog log;
        log.epoch = epoch;
        log.max_turns = max_turns;
        log.mean_return = epoch_dialogues > 0 ? epoch_return / epoch_dialogues : 0.0;
        log.mean_len = epoch_dialogues > 0 ? epoch_len / epoch_dialogues : 0.0;
        log.distinct1 = epoch_outputs.empty() ? 0.0 : eval::distinct_n(epoch_outputs, 1);
        log.distinct2 = epoch_outputs.empty() ? 0.0 : eval::distinct_n(epoch_outputs, 2);
        result.log.push_back(log);

        if (log_stream != nullptr) {
            char line[160];
            std::snprintf(line, sizeof(line), "%d\t%.6f\t%.6f\t%.6f\t%.6f\n", log.epoch,
                          log.mean_return, log.mean_len, log.distinct1, log.distinct2);
            (*log_stream) << line;
            log_stream->flush();
        }
        if (cfg.verbose) {
            std::printf("rl epoch %d  turns=%d  mean_return=%.4f  mean_len=%.3f\n", epoch,
                        max_turns, log.mean_return, log.mean_len);
        }
    }
    return result;
}

} // namespace dialogue_rl::rl
