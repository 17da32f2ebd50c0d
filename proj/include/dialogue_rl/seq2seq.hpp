#pragma once

#include "dialogue_rl/corpus.hpp"
#include "dialogue_rl/numerics.hpp"
#include "dialogue_rl/rng.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace dialogue_rl::seq2seq {

using corpus::TokenSeq;
using corpus::TrainPair;
using numerics::LstmParams;

/// All trainable arrays of the encoder-decoder policy. One layer each side;
/// attention is a bilinear score between decoder and encoder states, and the
/// output head projects tanh(W_c [h_dec ; context] + b_c) to the vocabulary.
struct ModelParams {
    int vocab_size = 0;
    int hidden_size = 0;

    Matrix embedding; // V x d
    LstmParams encoder;
    LstmParams decoder;
    Matrix attn_w;    // d x d
    Matrix combine_w; // d x 2d
    Matrix combine_b; // d x 1
    Matrix out_w;     // V x d
    Matrix out_b;     // V x 1

    static ModelParams shaped(int vocab_size, int hidden_size);
    static ModelParams init(int vocab_size, int hidden_size, Rng& rng, double scale = 0.08);
    static ModelParams zeros_like(const ModelParams& other);

    /// Named views over every trainable array, in the fixed checkpoint order.
    std::vector<std::pair<std::string, Matrix*>> param_views();
    std::vector<std::pair<std::string, const Matrix*>> param_views() const;

    std::size_t param_count() const;
};

// grads += g
void add_grads(ModelParams& grads, const ModelParams& g);
// Scales grads so the global L2 norm is at most max_norm; returns the norm
// before clipping.
double clip_global_norm(ModelParams& grads, double max_norm);
// params -= lr * grads
void sgd_update(ModelParams& params, const ModelParams& grads, double lr);

/// Encoder output for one source sequence.
struct EncodedSource {
    Matrix states;  // L x d hidden state per source position
    Vector final_h; // d
    Vector final_c; // d
    Vector summary; // arithmetic mean of the per-position states
};

EncodedSource encode(const TokenSeq& source, const ModelParams& p);

/// Mutable decoder recurrent state.
struct DecState {
    Vector h;
    Vector c;
};

DecState initial_dec_state(const EncodedSource& enc);

/// One decoder step: consumes the previous token, advances the state and
/// returns the distribution over the vocabulary. Attention weights are
/// written to attn_out when provided.
Vector decode_step(const EncodedSource& enc, int prev_token, DecState& state,
                   const ModelParams& p, Vector* attn_out = nullptr);

/// Sum over target positions of log p(target_t | source, target_<t), teacher
/// forced; divided by the target token count when length_scaled. Target must
/// end with EOS.
double sequence_log_prob(const TokenSeq& source, const TokenSeq& target, const ModelParams& p,
                         bool length_scaled);

/// Same, but against an already-encoded source (rewards score many targets
/// per source).
double scored_log_prob(const EncodedSource& enc, const TokenSeq& target, const ModelParams& p,
                       bool length_scaled);

struct Hypothesis {
    TokenSeq tokens; // ends with EOS once finished
    double log_prob = 0.0;
    bool finished = false;
};

/// Decode-time constraints. min_len masks EOS until that many tokens have
/// been emitted (the simulator uses 1 to keep turns non-empty); the recorded
/// log-probabilities always refer to the unmasked policy.
struct GenOptions {
    int min_len = 0;
    bool force_eos = false; // sample(): close unterminated sequences with EOS
};

/// Standard beam expansion ranked by raw summed log-prob. Finished
/// hypotheses retire to the result pool; hypotheses still open at max_len
/// (tokens including EOS) take a forced EOS step, with that step's
/// log-probability counted. Returns up to `width` hypotheses, best first.
std::vector<Hypothesis> beam_search(const TokenSeq& source, int width, int max_len,
                                    const ModelParams& p, const GenOptions& opt = {});

struct SampleResult {
    TokenSeq tokens;
    double log_prob = 0.0;  // under the temperature-1 policy
    bool terminated = false; // EOS emitted (or forced via force_eos)
};

/// Ancestral sampling from the temperature-scaled softmax. Temperatures
/// below 1e-3 decode greedily. Without force_eos the sequence may come back
/// unterminated at max_len, in which case log_prob covers exactly the emitted
/// tokens.
SampleResult sample(const TokenSeq& source, double temperature, int max_len,
                    const ModelParams& p, Rng& rng, const GenOptions& opt = {});

/// Teacher-forced weighted cross-entropy: sum_t weights[t] * -log
/// p(target[t]). Accumulates exact parameter gradients into *grads when
/// given. Powers both the MLE objective (uniform weights) and the
/// likelihood-ratio updates (advantage weights).
double forced_sequence_loss(const TokenSeq& source, const TokenSeq& target,
                            const std::vector<double>& weights, const ModelParams& p,
                            ModelParams* grads);

struct MleStepResult {
    double mean_loss = 0.0;
    double grad_norm = 0.0;
};

/// One SGD step of mean per-token cross-entropy over the batch with global
/// gradient-norm clipping at 5.0. Per-pair gradients are computed in
/// parallel and reduced in batch order, so results do not depend on the
/// thread count.
MleStepResult mle_step(const std::vector<TrainPair>& batch, ModelParams& p, double lr);

/// Shared block size for deterministic parallel gradient accumulation.
constexpr int kGradBlock = 16;
constexpr double kClipNorm = 5.0;

/// Runs item_fn(i, grads_i) for i in [0, n) in parallel blocks of kGradBlock,
/// each item into its own buffer, and reduces buffers and returned losses in
/// ascending item order. Results are bit-identical for any thread count.
double accumulate_grads_parallel(int n, ModelParams& total,
                                 const std::function<double(int, ModelParams&)>& item_fn);

} // namespace dialogue_rl::seq2seq
