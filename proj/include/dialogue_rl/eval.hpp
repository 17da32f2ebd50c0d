#pragma once

#include "dialogue_rl/simulator.hpp"

#include <string>
#include <vector>

namespace dialogue_rl::eval {

using corpus::TokenSeq;

struct EvalReport {
    std::string model_id;
    double mean_turns = 0.0;
    double distinct1 = 0.0;
    double distinct2 = 0.0;
    int n_inputs = 0;
};

/// Distinct n-grams (within each response, EOS excluded) divided by the
/// total non-EOS tokens across all responses. n is 1 or 2.
double distinct_n(const std::vector<TokenSeq>& responses, int n);

/// How a model decodes at evaluation time: beam top-1, with an optional MMI
/// rerank of the n-best when rerank models are set.
struct EvalPolicy {
    const seq2seq::ModelParams* params = nullptr;
    const seq2seq::ModelParams* rerank_fwd = nullptr; // scorer; defaults to params
    const seq2seq::ModelParams* rerank_bwd = nullptr; // enables reranking when set
    int beam_width = 10;
    int max_len = 16;
};

/// Responder wrapping the evaluation decode rule.
simulator::Responder make_responder(const EvalPolicy& policy);

/// Mean number of turns generated before termination over one evaluation
/// dialogue per input (the terminating dull/repetitive turn does not count).
double avg_dialogue_length(const simulator::Responder& responder,
                           const std::vector<TokenSeq>& inputs, const rewards::DullList& dull,
                           int max_turns = 8);
double avg_dialogue_length(const EvalPolicy& policy, const std::vector<TokenSeq>& inputs,
                           const rewards::DullList& dull, int max_turns = 8);

/// The model's decoded response to each input (single turn).
std::vector<TokenSeq> first_responses(const EvalPolicy& policy,
                                      const std::vector<TokenSeq>& inputs);

struct NamedModel {
    std::string id;
    EvalPolicy policy;
};

/// One report per model over the identical inputs: simulated length plus
/// distinct-1/2 over the first responses. Deterministic.
std::vector<EvalReport> compare_models(const std::vector<NamedModel>& models,
                                       const std::vector<TokenSeq>& inputs,
                                       const rewards::DullList& dull, int max_turns = 8);

/// Human-readable table plus machine-readable key=value lines.
std::string format_reports(const std::vector<EvalReport>& reports);

} // namespace dialogue_rl::eval
