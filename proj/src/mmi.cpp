#include "dialogue_rl/mmi.hpp"

#include "dialogue_rl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace dialogue_rl::mmi {

using corpus::Vocab;
using rewards::strip_eos;

double mmi_score(const TokenSeq& action, const DialogueState& state, const ModelParams& fwd,
                 const ModelParams& bwd) {
    // Identical computation to rewards::r3_coherence, exposed as the
    // reranking / fine-tuning objective.
    return rewards::r3_coherence(action, state, fwd, bwd);
}

std::vector<Hypothesis> rerank_nbest(const std::vector<Hypothesis>& nbest,
                                     const DialogueState& state, const ModelParams& fwd,
                                     const ModelParams& bwd) {
    require(!nbest.empty(), "rerank_nbest: empty n-best list");

    std::vector<double> scores(nbest.size());
    for (std::size_t i = 0; i < nbest.size(); ++i) {
        scores[i] = mmi_score(nbest[i].tokens, state, fwd, bwd);
    }
    std::vector<std::size_t> order(nbest.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<Hypothesis> out;
    out.reserve(nbest.size());
    for (std::size_t idx : order) {
        out.push_back(nbest[idx]);
    }
    return out;
}

BaselineNet BaselineNet::init(int summary_dim, int hidden, Rng& rng) {
    require(summary_dim > 0 && hidden > 0, "BaselineNet: sizes must be positive");
    BaselineNet net;
    net.w1 = Matrix(hidden, 2 * summary_dim);
    net.b1 = Matrix(hidden, 1);
    net.w2 = Matrix(1, hidden);
    net.b2 = Matrix(1, 1);
    for (Matrix* m : {&net.w1, &net.b1, &net.w2, &net.b2}) {
        for (double& v : m->data) {
            v = rng.uniform(-0.08, 0.08);
        }
    }
    return net;
}

namespace {

Vector baseline_input(const Vector& src_summary, const Vector& tgt_summary) {
    Vector in;
    in.reserve(src_summary.size() + tgt_summary.size());
    in.insert(in.end(), src_summary.begin(), src_summary.end());
    in.insert(in.end(), tgt_summary.begin(), tgt_summary.end());
    return in;
}

} // namespace

double BaselineNet::predict(const Vector& src_summary, const Vector& tgt_summary) const {
    const Vector in = baseline_input(src_summary, tgt_summary);
    require(static_cast<int>(in.size()) == w1.cols, "BaselineNet: input dim mismatch");
    Vector a1 = numerics::affine(in, w1, b1.data);
    for (double& v : a1) {
        v = std::tanh(v);
    }
    const Vector out = numerics::affine(a1, w2, b2.data);
    return out[0];
}

double BaselineNet::update(const Vector& src_summary, const Vector& tgt_summary, double target,
                           double lr) {
    const Vector in = baseline_input(src_summary, tgt_summary);
    Vector z1 = numerics::affine(in, w1, b1.data);
    Vector a1 = z1;
    for (double& v : a1) {
        v = std::tanh(v);
    }
    const Vector out = numerics::affine(a1, w2, b2.data);
    const double pred = out[0];

    // squared error, d/dout = 2 (pred - target)
    const double dout = 2.0 * (pred - target);
    Vector da1(a1.size(), 0.0);
    for (std::size_t j = 0; j < a1.size(); ++j) {
        da1[j] = dout * w2.at(0, static_cast<int>(j)) * (1.0 - a1[j] * a1[j]);
    }

    for (std::size_t j = 0; j < a1.size(); ++j) {
        w2.at(0, static_cast<int>(j)) -= lr * dout * a1[j];
    }
    b2.data[0] -= lr * dout;
    for (int r = 0; r < w1.rows; ++r) {
        const double g = da1[static_cast<std::size_t>(r)];
        kernels::axpy(w1.cols, -lr * g, in.data(), w1.row(r));
        b1.data[static_cast<std::size_t>(r)] -= lr * g;
    }
    return pred;
}

DialogueState state_from_source(const TokenSeq& source) {
    DialogueState state;
    auto it = std::find(source.rbegin(), source.rend(), Vocab::eos_id);
    if (it == source.rend()) {
        state.other_last = source;
    } else {
        const std::size_t sep = source.size() - 1 - static_cast<std::size_t>(it - source.rbegin());
        state.own_prev.assign(source.begin(), source.begin() + static_cast<long>(sep));
        state.other_last.assign(source.begin() + static_cast<long>(sep) + 1, source.end());
    }
    return state;
}

namespace {

// Teacher-forces `prefix`, then samples the continuation; returns the full
// candidate (prefix + sampled suffix, EOS-terminated) with the log-prob of
// the whole sequence under the unscaled policy.
seq2seq::SampleResult sample_with_prefix(const TokenSeq& source, const TokenSeq& prefix,
                                         const ModelParams& policy, double temperature,
                                         int max_len, Rng& rng) {
    const seq2seq::EncodedSource enc = seq2seq::encode(source, policy);
    seq2seq::DecState state = seq2seq::initial_dec_state(enc);

    seq2seq::SampleResult result;
    int prev = Vocab::bos_id;
    for (int tok : prefix) {
        const Vector probs = seq2seq::decode_step(enc, prev, state, policy);
        result.log_prob += std::log(std::max(probs[static_cast<std::size_t>(tok)], 1e-300));
        result.tokens.push_back(tok);
        prev = tok;
        if (tok == Vocab::eos_id) {
            result.terminated = true;
            return result;
        }
    }

    while (static_cast<int>(result.tokens.size()) < max_len - 1) {
        const Vector probs = seq2seq::decode_step(enc, prev, state, policy);
        const double draw = rng.uniform01();
        double acc = 0.0;
        int tok = policy.vocab_size - 1;
        if (temperature == 1.0) {
            for (int i = 0; i < policy.vocab_size; ++i) {
                acc += probs[static_cast<std::size_t>(i)];
                if (draw < acc) {
                    tok = i;
                    break;
                }
            }
        } else {
            Vector scaled(probs.size());
            double mx = -1e300;
            for (std::size_t i = 0; i < probs.size(); ++i) {
                scaled[i] = std::log(std::max(probs[i], 1e-300)) / temperature;
                mx = std::max(mx, scaled[i]);
            }
            double total = 0.0;
            for (double& v : scaled) {
                v = std::exp(v - mx);
                total += v;
            }
            double acc2 = 0.0;
            const double draw2 = draw * total;
            for (int i = 0; i < policy.vocab_size; ++i) {
                acc2 += scaled[static_cast<std::size_t>(i)];
                if (draw2 < acc2) {
                    tok = i;
                    break;
                }
            }
        }
        result.tokens.push_back(tok);
        result.log_prob += std::log(std::max(probs[static_cast<std::size_t>(tok)], 1e-300));
        prev = tok;
        if (tok == Vocab::eos_id) {
            result.terminated = true;
            return result;
        }
    }

    // close the sequence, counting the EOS step's probability
    const Vector probs = seq2seq::decode_step(enc, prev, state, policy);
    result.tokens.push_back(Vocab::eos_id);
    result.log_prob += std::log(std::max(probs[static_cast<std::size_t>(Vocab::eos_id)], 1e-300));
    result.terminated = true;
    return result;
}

} // namespace

MmiRlStats train_mmi_rl(ModelParams& policy, const ModelParams& score_fwd,
                        const ModelParams& score_bwd, BaselineNet& baseline,
                        const std::vector<corpus::TrainPair>& dataset, const MmiRlConfig& cfg,
                        const CandidateScorer& scorer) {
    require(!dataset.empty(), "train_mmi_rl: empty dataset");
    require(cfg.lr > 0.0, "train_mmi_rl: lr must be positive");
    require(cfg.epochs >= 0, "train_mmi_rl: negative epochs");

    CandidateScorer score = scorer;
    if (!score) {
        score = [&](const TokenSeq& action, const corpus::TrainPair& pair) {
            return mmi_score(action, state_from_source(pair.source), score_fwd, score_bwd);
        };
    }

    MmiRlStats stats;
    const int n = static_cast<int>(dataset.size());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const int mle_tokens = std::max(0, cfg.anneal_start - epoch);

        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng = derive_rng(cfg.seed, 0xC0FFEEull + static_cast<std::uint64_t>(epoch));
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.below(static_cast<std::uint32_t>(i + 1)));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        double epoch_reward = 0.0;
        int epoch_samples = 0;

        for (int base = 0; base < n; base += cfg.batch_size) {
            const int count = std::min(cfg.batch_size, n - base);

            struct Item {
                TokenSeq candidate;
                int forced = 0; // tokens under the MLE loss
                double reward = 0.0;
                Vector src_summary;
                Vector cand_summary;
            };
            std::vector<Item> items(static_cast<std::size_t>(count));
            std::exception_ptr error;

#pragma omp parallel for schedule(dynamic, 1)
            for (int j = 0; j < count; ++j) {
                try {
                    const corpus::TrainPair& pair = dataset[static_cast<std::size_t>(
                        order[static_cast<std::size_t>(base + j)])];
                    Item& item = items[static_cast<std::size_t>(j)];

                    const int target_len = static_cast<int>(pair.target.size());
                    item.forced = std::min(mle_tokens, target_len);
                    Rng rng = derive_rng(
                        cfg.seed, 0x5A11ull + static_cast<std::uint64_t>(epoch) * 1000003ull +
                                      static_cast<std::uint64_t>(base + j));
                    if (item.forced >= target_len) {
                        item.candidate = pair.target;
                    } else {
                        const TokenSeq prefix(pair.target.begin(),
                                              pair.target.begin() + item.forced);
                        item.candidate = sample_with_prefix(pair.source, prefix, policy,
                                                            cfg.temperature, cfg.max_len, rng)
                                             .tokens;
                    }
                    item.reward = score(item.candidate, pair);
                    if (cfg.use_baseline) {
                        item.src_summary = seq2seq::encode(pair.source, policy).summary;
                        item.cand_summary =
                            seq2seq::encode(rewards::action_source(item.candidate), policy)
                                .summary;
                    }
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

            // Baseline predictions and regression, serial in batch order; the
            // policy parameters are untouched here.
            std::vector<double> advantage(static_cast<std::size_t>(count));
            for (int j = 0; j < count; ++j) {
                Item& item = items[static_cast<std::size_t>(j)];
                double b = 0.0;
                if (cfg.use_baseline) {
                    b = baseline.update(item.src_summary, item.cand_summary, item.reward,
                                        cfg.baseline_lr);
                }
                advantage[static_cast<std::size_t>(j)] = item.reward - b;
                epoch_reward += item.reward;
                ++epoch_samples;
            }

            ModelParams grads = ModelParams::zeros_like(policy);
            const double loss = seq2seq::accumulate_grads_parallel(
                count, grads, [&](int j, ModelParams& g) {
                    const Item& item = items[static_cast<std::size_t>(j)];
                    const corpus::TrainPair& pair = dataset[static_cast<std::size_t>(
                        order[static_cast<std::size_t>(base + j)])];
                    std::vector<double> w(item.candidate.size());
                    for (std::size_t t = 0; t < w.size(); ++t) {
                        w[t] = static_cast<int>(t) < item.forced
                                   ? 1.0
                                   : advantage[static_cast<std::size_t>(j)];
                    }
                    return seq2seq::forced_sequence_loss(pair.source, item.candidate, w, policy,
                                                         &g);
                });
            if (!std::isfinite(loss)) {
                throw std::runtime_error("train_mmi_rl: non-finite loss, training diverged");
            }
            clip_global_norm(grads, seq2seq::kClipNorm);
            sgd_update(policy, grads, cfg.lr);
        }

        stats.epoch_mean_reward.push_back(epoch_reward / std::max(1, epoch_samples));
        stats.epoch_mle_tokens.push_back(mle_tokens);
        if (cfg.verbose) {
            std::printf("mmi epoch %d  L=%d  mean_m=%.4f\n", epoch, mle_tokens,
                        stats.epoch_mean_reward.back());
        }
    }
    return stats;
}

} // namespace dialogue_rl::mmi
