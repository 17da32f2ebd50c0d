#pragma once

#include "dialogue_rl/rewards.hpp"
#include "dialogue_rl/seq2seq.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace dialogue_rl::mmi {

using corpus::DialogueState;
using corpus::TokenSeq;
using seq2seq::Hypothesis;
using seq2seq::ModelParams;

/// Mutual-information score of an action in a state: length-scaled forward
/// log p(a | state) plus length-scaled backward log p(q | a).
double mmi_score(const TokenSeq& action, const DialogueState& state, const ModelParams& fwd,
                 const ModelParams& bwd);

/// Reorders an n-best list by descending mmi_score; ties keep input order.
std::vector<Hypothesis> rerank_nbest(const std::vector<Hypothesis>& nbest,
                                     const DialogueState& state, const ModelParams& fwd,
                                     const ModelParams& bwd);

/// Recovers [own_prev, other_last] from a concatenated training source (the
/// part after the last EOS separator is the other agent's turn).
DialogueState state_from_source(const TokenSeq& source);

/// Small value head mapping (source summary ++ target summary) to a scalar,
/// regressed toward the observed reward. Its gradients never touch the
/// policy.
struct BaselineNet {
    Matrix w1; // hidden x 2d
    Matrix b1; // hidden x 1
    Matrix w2; // 1 x hidden
    Matrix b2; // 1 x 1

    static BaselineNet init(int summary_dim, int hidden, Rng& rng);

    double predict(const Vector& src_summary, const Vector& tgt_summary) const;

    /// One squared-error SGD step toward `target`; returns the prediction
    /// before the update.
    double update(const Vector& src_summary, const Vector& tgt_summary, double target, double lr);
};

struct MmiRlConfig {
    int epochs = 18;
    double lr = 0.03;
    double baseline_lr = 0.05;
    int batch_size = 16;
    int max_len = 16;
    /// Starting value of the MLE-token curriculum; decremented by 1 per
    /// epoch down to 0.
    int anneal_start = 16;
    double temperature = 1.0;
    std::uint64_t seed = 0;
    bool use_baseline = true;
    bool verbose = false;
};

/// Candidate scorer used by the REINFORCE step. Defaults to mmi_score with
/// the frozen fwd/bwd models; tests may substitute arbitrary rewards.
using CandidateScorer =
    std::function<double(const TokenSeq& action, const corpus::TrainPair& pair)>;

struct MmiRlStats {
    std::vector<double> epoch_mean_reward;
    std::vector<int> epoch_mle_tokens;
};

/// Fine-tunes `policy` toward maximum-mutual-information responses: samples
/// one candidate per source, scores it with the frozen models, and applies
/// the likelihood-ratio update with the baseline value subtracted. The first
/// L target tokens stay under the MLE loss, with L annealed to zero.
MmiRlStats train_mmi_rl(ModelParams& policy, const ModelParams& score_fwd,
                        const ModelParams& score_bwd, BaselineNet& baseline,
                        const std::vector<corpus::TrainPair>& dataset, const MmiRlConfig& cfg,
                        const CandidateScorer& scorer = nullptr);

} // namespace dialogue_rl::mmi
