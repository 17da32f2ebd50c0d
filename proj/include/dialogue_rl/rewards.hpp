#pragma once

#include "dialogue_rl/corpus.hpp"
#include "dialogue_rl/seq2seq.hpp"

#include <string>
#include <vector>

namespace dialogue_rl::rewards {

using corpus::DialogueState;
using corpus::TokenSeq;

/// The fixed list of conversation-closing phrases. Phrases are stored
/// EOS-terminated.
struct DullList {
    std::vector<TokenSeq> phrases;

    static DullList from_strings(const std::vector<std::string>& lines,
                                 const corpus::Vocab& vocab);
    /// The built-in eight phrases.
    static DullList defaults(const corpus::Vocab& vocab);
    /// One phrase per line.
    static DullList from_file(const std::string& path, const corpus::Vocab& vocab);
};

struct RewardWeights {
    double ease = 0.25;
    double flow = 0.25;
    double coherence = 0.5;

    /// Weights must be non-negative and sum to 1 (within 1e-9).
    void validate() const;
};

struct RewardBreakdown {
    double r1 = 0.0;
    double r2 = 0.0;
    double r3 = 0.0;
    double total = 0.0;
};

/// Mean over dull phrases of the negative length-scaled log-likelihood of
/// producing that phrase in response to `action`.
double r1_ease_of_answering(const TokenSeq& action, const seq2seq::ModelParams& fwd,
                            const DullList& dull);

/// -log of the cosine similarity between two turn representations, clamped
/// below at epsilon so the reward stays finite for non-positive cosines.
double r2_information_flow(const Vector& h_prev, const Vector& h_curr, double epsilon);

/// Length-scaled forward log p(action | state) plus backward log p(q | action)
/// -- the same quantity mmi::mmi_score computes.
double r3_coherence(const TokenSeq& action, const DialogueState& state,
                    const seq2seq::ModelParams& fwd, const seq2seq::ModelParams& bwd);

/// Frozen scoring models plus the reward configuration. The models are the
/// MLE/MMI likelihood models, not the live policy.
struct RewardContext {
    const seq2seq::ModelParams* fwd = nullptr;
    const seq2seq::ModelParams* bwd = nullptr;
    DullList dull;
    RewardWeights weights;
    double cos_epsilon = 1e-8;
};

/// lambda1 r1 + lambda2 r2 + lambda3 r3.
double weighted_total(const RewardWeights& weights, double r1, double r2, double r3);

/// Weighted combination of the three rewards for an action taken in a state.
/// r2 compares the acting agent's previous turn with the action (0 when the
/// agent has no previous turn yet).
RewardBreakdown combined_reward(const TokenSeq& action, const DialogueState& state,
                                const RewardContext& ctx);

/// Strips one trailing EOS if present.
TokenSeq strip_eos(const TokenSeq& seq);

/// An action as an encoder input: the EOS-stripped tokens, or the raw
/// sequence when stripping would leave nothing (a bare-EOS action).
TokenSeq action_source(const TokenSeq& action);

} // namespace dialogue_rl::rewards
