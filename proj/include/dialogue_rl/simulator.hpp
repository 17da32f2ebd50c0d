#pragma once

#include "dialogue_rl/rewards.hpp"
#include "dialogue_rl/seq2seq.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dialogue_rl::simulator {

using corpus::DialogueState;
using corpus::TokenSeq;

enum class Termination { none, dull, repetition, max_turns };

const char* termination_name(Termination t);

/// One generated turn of a simulated conversation.
struct Turn {
    int agent = 1; // alternates, 1 first
    TokenSeq tokens; // EOS-terminated
    double log_prob = 0.0; // raw sequence log-prob under the acting policy
    rewards::RewardBreakdown reward;
    DialogueState state; // state the action was taken in
};

struct SimulatedDialogue {
    TokenSeq initial_message;
    std::vector<Turn> turns;
    Termination termination = Termination::none;
};

enum class GenMode { sample, beam };

struct SimulateOptions {
    int max_turns = 5;
    int candidates_per_step = 5;
    GenMode mode = GenMode::sample;
    /// Leaf-branch budget per initial message; lowest-log-prob branches are
    /// pruned depth-first beyond it.
    int branch_budget = 125;
    double temperature = 1.0;
    int max_len = 16;
    std::uint64_t seed = 0;
    bool compute_rewards = true;
};

struct SimulateResult {
    std::vector<SimulatedDialogue> dialogues; // one per surviving leaf branch
    int generated_turns = 0; // distinct actions generated across the branch tree
};

/// Two-agent self-play from one initial message. Agents share the policy and
/// alternate; each step spawns candidates_per_step branches (sampled in
/// training mode, beam top-k in beam mode). Branches stop on a dull turn, on
/// a >0.8 same-agent overlap, or at the turn budget.
SimulateResult simulate(const TokenSeq& initial, const seq2seq::ModelParams& policy,
                        const rewards::RewardContext& reward_ctx, const SimulateOptions& opt);

/// True iff u, ignoring the trailing EOS, exactly equals a dull phrase.
bool is_dull(const TokenSeq& u, const rewards::DullList& dull);

/// Unique-token overlap |set1 & set2| / min(|set1|, |set2|), EOS excluded.
double overlap_ratio(const TokenSeq& u1, const TokenSeq& u2);

/// Termination rule on the latest turn: dull match first, then same-agent
/// overlap above 0.8, then the turn budget (ignored when max_turns <= 0).
std::optional<Termination> should_terminate(const SimulatedDialogue& history,
                                            const rewards::DullList& dull, int max_turns = -1);

/// Policy abstraction for evaluation-time dialogues: maps a state to an
/// EOS-terminated turn.
using Responder = std::function<TokenSeq(const DialogueState&)>;

struct EvalDialogue {
    std::vector<TokenSeq> turns;
    Termination termination = Termination::none;
    /// Turns before the terminating dull/repetitive turn.
    int counted_turns = 0;
};

/// Single-path dialogue under a deterministic responder with the standard
/// termination rules; used by the evaluation metrics.
EvalDialogue run_eval_dialogue(const Responder& responder, const TokenSeq& initial,
                               const rewards::DullList& dull, int max_turns);

/// Transcript form: "A: ..." / "B: ..." lines plus a trailing comment with
/// branch id and termination reason.
std::string format_transcript(const SimulatedDialogue& d, const corpus::Vocab& vocab,
                              int branch_id);

} // namespace dialogue_rl::simulator
