#include "dialogue_rl/rewards.hpp"

#include <cmath>

namespace dialogue_rl::rewards {

using corpus::Vocab;

TokenSeq strip_eos(const TokenSeq& seq) {
    if (!seq.empty() && seq.back() == Vocab::eos_id) {
        return TokenSeq(seq.begin(), seq.end() - 1);
    }
    return seq;
}

TokenSeq action_source(const TokenSeq& action) {
    TokenSeq src = strip_eos(action);
    if (src.empty()) {
        return action;
    }
    return src;
}

DullList DullList::from_strings(const std::vector<std::string>& lines,
                                const corpus::Vocab& vocab) {
    require(!lines.empty(), "DullList: empty phrase list");
    DullList list;
    for (const std::string& line : lines) {
        TokenSeq phrase = corpus::encode_text(line, vocab);
        require(!phrase.empty(), "DullList: empty phrase");
        phrase.push_back(Vocab::eos_id);
        list.phrases.push_back(std::move(phrase));
    }
    return list;
}

DullList DullList::defaults(const corpus::Vocab& vocab) {
    return from_strings(corpus::default_dull_phrases(), vocab);
}

DullList DullList::from_file(const std::string& path, const corpus::Vocab& vocab) {
    return from_strings(corpus::read_lines(path), vocab);
}

void RewardWeights::validate() const {
    require(ease >= 0.0 && flow >= 0.0 && coherence >= 0.0,
            "RewardWeights: weights must be non-negative");
    require(std::fabs(ease + flow + coherence - 1.0) <= 1e-9,
            "RewardWeights: weights must sum to 1");
}

double r1_ease_of_answering(const TokenSeq& action, const seq2seq::ModelParams& fwd,
                            const DullList& dull) {
    require(!action.empty() && action.back() == Vocab::eos_id, "r1: action must end with EOS");
    require(!dull.phrases.empty(), "r1: empty dull list");

    const seq2seq::EncodedSource enc = seq2seq::encode(action_source(action), fwd);
    double sum = 0.0;
    for (const TokenSeq& phrase : dull.phrases) {
        sum += seq2seq::scored_log_prob(enc, phrase, fwd, true);
    }
    return -sum / static_cast<double>(dull.phrases.size());
}

double r2_information_flow(const Vector& h_prev, const Vector& h_curr, double epsilon) {
    require(epsilon > 0.0, "r2: epsilon must be positive");
    require(h_prev.size() == h_curr.size() && !h_prev.empty(), "r2: dimension mismatch");

    double dot = 0.0;
    double n1 = 0.0;
    double n2 = 0.0;
    for (std::size_t i = 0; i < h_prev.size(); ++i) {
        dot += h_prev[i] * h_curr[i];
        n1 += h_prev[i] * h_prev[i];
        n2 += h_curr[i] * h_curr[i];
    }
    require(n1 > 0.0 && n2 > 0.0, "r2: zero-norm vector");
    // clamp into (epsilon, 1] so the reward is finite and never negative
    const double cosine = std::min(dot / (std::sqrt(n1) * std::sqrt(n2)), 1.0);
    return -std::log(std::max(cosine, epsilon));
}

double weighted_total(const RewardWeights& weights, double r1, double r2, double r3) {
    return weights.ease * r1 + weights.flow * r2 + weights.coherence * r3;
}

double r3_coherence(const TokenSeq& action, const DialogueState& state,
                    const seq2seq::ModelParams& fwd, const seq2seq::ModelParams& bwd) {
    require(!action.empty() && action.back() == Vocab::eos_id, "r3: action must end with EOS");
    require(!state.other_last.empty(), "r3: state q is empty");

    const double forward = seq2seq::sequence_log_prob(state.to_source(), action, fwd, true);

    TokenSeq back_target = state.other_last;
    back_target.push_back(Vocab::eos_id);
    const double backward =
        seq2seq::sequence_log_prob(action_source(action), back_target, bwd, true);

    return forward + backward;
}

RewardBreakdown combined_reward(const TokenSeq& action, const DialogueState& state,
                                const RewardContext& ctx) {
    require(ctx.fwd != nullptr && ctx.bwd != nullptr, "combined_reward: missing scoring models");
    ctx.weights.validate();

    RewardBreakdown out;
    out.r1 = r1_ease_of_answering(action, *ctx.fwd, ctx.dull);
    if (!state.own_prev.empty()) {
        const seq2seq::EncodedSource prev = seq2seq::encode(state.own_prev, *ctx.fwd);
        const seq2seq::EncodedSource curr = seq2seq::encode(action_source(action), *ctx.fwd);
        out.r2 = r2_information_flow(prev.summary, curr.summary, ctx.cos_epsilon);
    }
    out.r3 = r3_coherence(action, state, *ctx.fwd, *ctx.bwd);
    out.total = weighted_total(ctx.weights, out.r1, out.r2, out.r3);
    return out;
}

} // namespace dialogue_rl::rewards
