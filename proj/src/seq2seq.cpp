#include "dialogue_rl/seq2seq.hpp"

#include "dialogue_rl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace dialogue_rl::seq2seq {

using corpus::Vocab;
using numerics::LstmCache;

namespace {

void init_matrix(Matrix& m, Rng& rng, double scale) {
    for (double& v : m.data) {
        v = rng.uniform(-scale, scale);
    }
}

struct StepTrace {
    LstmCache lstm;
    Vector u;     // W_a^T h_dec
    Vector attn;  // weights over source positions
    Vector ctx;   // attention context
    Vector cat;   // [h_dec ; ctx]
    Vector comb;  // tanh combine output
    Vector probs; // output distribution
};

struct EncodeTrace {
    std::vector<LstmCache> steps;
};

} // namespace

ModelParams ModelParams::shaped(int vocab_size, int hidden_size) {
    require(vocab_size > 0 && hidden_size > 0, "ModelParams: sizes must be positive");
    ModelParams p;
    p.vocab_size = vocab_size;
    p.hidden_size = hidden_size;
    p.embedding = Matrix(vocab_size, hidden_size);
    p.encoder = LstmParams::zeros(hidden_size, hidden_size);
    p.decoder = LstmParams::zeros(hidden_size, hidden_size);
    p.attn_w = Matrix(hidden_size, hidden_size);
    p.combine_w = Matrix(hidden_size, 2 * hidden_size);
    p.combine_b = Matrix(hidden_size, 1);
    p.out_w = Matrix(vocab_size, hidden_size);
    p.out_b = Matrix(vocab_size, 1);
    return p;
}

ModelParams ModelParams::init(int vocab_size, int hidden_size, Rng& rng, double scale) {
    ModelParams p = shaped(vocab_size, hidden_size);
    for (auto& [name, m] : p.param_views()) {
        (void)name;
        init_matrix(*m, rng, scale);
    }
    // forget-gate bias starts open
    for (int j = 0; j < hidden_size; ++j) {
        p.encoder.b.data[hidden_size + j] = 1.0;
        p.decoder.b.data[hidden_size + j] = 1.0;
    }
    return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
    return shaped(other.vocab_size, other.hidden_size);
}

std::vector<std::pair<std::string, Matrix*>> ModelParams::param_views() {
    return {
        {"embedding", &embedding}, {"enc_wx", &encoder.w_x}, {"enc_wh", &encoder.w_h},
        {"enc_b", &encoder.b},     {"dec_wx", &decoder.w_x}, {"dec_wh", &decoder.w_h},
        {"dec_b", &decoder.b},     {"attn_w", &attn_w},      {"comb_w", &combine_w},
        {"comb_b", &combine_b},    {"out_w", &out_w},        {"out_b", &out_b},
    };
}

std::vector<std::pair<std::string, const Matrix*>> ModelParams::param_views() const {
    auto views = const_cast<ModelParams*>(this)->param_views();
    std::vector<std::pair<std::string, const Matrix*>> out;
    out.reserve(views.size());
    for (auto& [name, m] : views) {
        out.emplace_back(name, m);
    }
    return out;
}

std::size_t ModelParams::param_count() const {
    std::size_t n = 0;
    for (const auto& [name, m] : param_views()) {
        (void)name;
        n += m->size();
    }
    return n;
}

void add_grads(ModelParams& grads, const ModelParams& g) {
    auto dst = grads.param_views();
    auto src = g.param_views();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        require(dst[i].second->same_shape(*src[i].second), "add_grads: shape mismatch");
        kernels::add_inplace(static_cast<int>(dst[i].second->size()), src[i].second->data.data(),
                             dst[i].second->data.data(), kernels::Exec::serial);
    }
}

double clip_global_norm(ModelParams& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& [name, m] : grads.param_views()) {
        (void)name;
        sq += kernels::dot(static_cast<int>(m->size()), m->data.data(), m->data.data());
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (auto& [name, m] : grads.param_views()) {
            (void)name;
            for (double& v : m->data) {
                v *= scale;
            }
        }
    }
    return norm;
}

void sgd_update(ModelParams& params, const ModelParams& grads, double lr) {
    auto dst = params.param_views();
    auto src = grads.param_views();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        kernels::axpy(static_cast<int>(dst[i].second->size()), -lr, src[i].second->data.data(),
                      dst[i].second->data.data());
    }
}

namespace {

EncodedSource encode_traced(const TokenSeq& source, const ModelParams& p, EncodeTrace* trace) {
    require(!source.empty(), "encode: empty source");
    const int d = p.hidden_size;
    const int len = static_cast<int>(source.size());

    EncodedSource enc;
    enc.states = Matrix(len, d);
    Vector h(d, 0.0);
    Vector c(d, 0.0);
    if (trace != nullptr) {
        trace->steps.resize(static_cast<std::size_t>(len));
    }

    for (int t = 0; t < len; ++t) {
        const int tok = source[static_cast<std::size_t>(t)];
        require(tok >= 0 && tok < p.vocab_size, "encode: token id out of range");
        Vector x(p.embedding.row(tok), p.embedding.row(tok) + d);
        Vector h_next;
        Vector c_next;
        numerics::lstm_cell(x, h, c, p.encoder, h_next, c_next,
                            trace != nullptr ? &trace->steps[static_cast<std::size_t>(t)] : nullptr);
        h = std::move(h_next);
        c = std::move(c_next);
        std::copy(h.begin(), h.end(), enc.states.row(t));
    }

    enc.final_h = h;
    enc.final_c = std::move(c);
    enc.summary.assign(static_cast<std::size_t>(d), 0.0);
    for (int t = 0; t < len; ++t) {
        kernels::axpy(d, 1.0, enc.states.row(t), enc.summary.data());
    }
    for (double& v : enc.summary) {
        v /= static_cast<double>(len);
    }
    return enc;
}

// One decoder step against an encoded source. Fills the trace when training.
Vector decode_one(const EncodedSource& enc, int prev_token, DecState& state, const ModelParams& p,
                  StepTrace* trace, Vector* attn_out) {
    const int d = p.hidden_size;
    require(prev_token >= 0 && prev_token < p.vocab_size, "decode_step: token id out of range");
    require(static_cast<int>(state.h.size()) == d, "decode_step: state dim mismatch");

    Vector x(p.embedding.row(prev_token), p.embedding.row(prev_token) + d);
    LstmCache local_cache;
    LstmCache* cache = trace != nullptr ? &trace->lstm : &local_cache;
    Vector h_next;
    Vector c_next;
    numerics::lstm_cell(x, state.h, state.c, p.decoder, h_next, c_next, cache);
    state.h = std::move(h_next);
    state.c = std::move(c_next);

    // bilinear attention: score_l = h_dec^T W_a e_l = (W_a^T h_dec) . e_l
    const int len = enc.states.rows;
    Vector u(static_cast<std::size_t>(d), 0.0);
    kernels::matvec_t_acc(p.attn_w, state.h.data(), u.data(), kernels::pick(p.attn_w.size()));
    Vector scores(static_cast<std::size_t>(len));
    for (int l = 0; l < len; ++l) {
        scores[static_cast<std::size_t>(l)] = kernels::dot(d, u.data(), enc.states.row(l));
    }
    numerics::softmax_inplace(scores);

    Vector ctx(static_cast<std::size_t>(d), 0.0);
    for (int l = 0; l < len; ++l) {
        kernels::axpy(d, scores[static_cast<std::size_t>(l)], enc.states.row(l), ctx.data());
    }

    Vector cat(static_cast<std::size_t>(2 * d));
    std::copy(state.h.begin(), state.h.end(), cat.begin());
    std::copy(ctx.begin(), ctx.end(), cat.begin() + d);

    Vector comb = numerics::affine(cat, p.combine_w, p.combine_b.data);
    for (double& v : comb) {
        v = std::tanh(v);
    }

    Vector probs = numerics::affine(comb, p.out_w, p.out_b.data);
    numerics::softmax_inplace(probs);

    if (attn_out != nullptr) {
        *attn_out = scores;
    }
    if (trace != nullptr) {
        trace->u = std::move(u);
        trace->attn = std::move(scores);
        trace->ctx = std::move(ctx);
        trace->cat = std::move(cat);
        trace->comb = std::move(comb);
        trace->probs = probs;
    }
    return probs;
}

double safe_log(double p) {
    return std::log(std::max(p, 1e-300));
}

} // namespace

EncodedSource encode(const TokenSeq& source, const ModelParams& p) {
    return encode_traced(source, p, nullptr);
}

DecState initial_dec_state(const EncodedSource& enc) {
    return DecState{enc.final_h, enc.final_c};
}

Vector decode_step(const EncodedSource& enc, int prev_token, DecState& state, const ModelParams& p,
                   Vector* attn_out) {
    return decode_one(enc, prev_token, state, p, nullptr, attn_out);
}

double scored_log_prob(const EncodedSource& enc, const TokenSeq& target, const ModelParams& p,
                       bool length_scaled) {
    require(!target.empty() && target.back() == Vocab::eos_id,
            "sequence_log_prob: target must end with EOS");
    DecState state = initial_dec_state(enc);
    double total = 0.0;
    int prev = Vocab::bos_id;
    for (int tok : target) {
        const Vector probs = decode_one(enc, prev, state, p, nullptr, nullptr);
        total += safe_log(probs[static_cast<std::size_t>(tok)]);
        prev = tok;
    }
    if (length_scaled) {
        total /= static_cast<double>(target.size());
    }
    return total;
}

double sequence_log_prob(const TokenSeq& source, const TokenSeq& target, const ModelParams& p,
                         bool length_scaled) {
    const EncodedSource enc = encode(source, p);
    return scored_log_prob(enc, target, p, length_scaled);
}

double forced_sequence_loss(const TokenSeq& source, const TokenSeq& target,
                            const std::vector<double>& weights, const ModelParams& p,
                            ModelParams* grads) {
    require(!target.empty(), "forced_sequence_loss: empty target");
    require(weights.size() == target.size(), "forced_sequence_loss: weights length mismatch");
    const int d = p.hidden_size;
    const int n_steps = static_cast<int>(target.size());

    EncodeTrace enc_trace;
    const EncodedSource enc = encode_traced(source, p, grads != nullptr ? &enc_trace : nullptr);
    DecState state = initial_dec_state(enc);

    std::vector<StepTrace> steps(grads != nullptr ? static_cast<std::size_t>(n_steps) : 0);
    double loss = 0.0;
    Vector probs;
    for (int t = 0; t < n_steps; ++t) {
        const int prev = t == 0 ? Vocab::bos_id : target[static_cast<std::size_t>(t - 1)];
        StepTrace* trace = grads != nullptr ? &steps[static_cast<std::size_t>(t)] : nullptr;
        probs = decode_one(enc, prev, state, p, trace, nullptr);
        loss -= weights[static_cast<std::size_t>(t)] *
                safe_log(probs[static_cast<std::size_t>(target[static_cast<std::size_t>(t)])]);
    }
    if (grads == nullptr) {
        return loss;
    }

    const int len = enc.states.rows;
    Matrix d_enc_states(len, d);  // upstream grads on per-position encoder states
    Vector dh_rec(static_cast<std::size_t>(d), 0.0);
    Vector dc_rec(static_cast<std::size_t>(d), 0.0);

    const auto exec = kernels::pick(p.out_w.size());
    for (int t = n_steps - 1; t >= 0; --t) {
        const StepTrace& st = steps[static_cast<std::size_t>(t)];
        const double w = weights[static_cast<std::size_t>(t)];
        const int y = target[static_cast<std::size_t>(t)];

        // d loss / d logits = w * (probs - onehot(y))
        Vector dlogits = st.probs;
        for (double& v : dlogits) {
            v *= w;
        }
        dlogits[static_cast<std::size_t>(y)] -= w;

        // output projection
        Vector dcomb(static_cast<std::size_t>(d), 0.0);
        kernels::outer_acc(grads->out_w, dlogits.data(), st.comb.data(), exec);
        for (int j = 0; j < p.vocab_size; ++j) {
            grads->out_b.data[static_cast<std::size_t>(j)] += dlogits[static_cast<std::size_t>(j)];
        }
        kernels::matvec_t_acc(p.out_w, dlogits.data(), dcomb.data(), exec);

        // tanh combine layer
        for (int j = 0; j < d; ++j) {
            dcomb[static_cast<std::size_t>(j)] *=
                1.0 - st.comb[static_cast<std::size_t>(j)] * st.comb[static_cast<std::size_t>(j)];
        }
        Vector dcat(static_cast<std::size_t>(2 * d), 0.0);
        kernels::outer_acc(grads->combine_w, dcomb.data(), st.cat.data(),
                           kernels::pick(p.combine_w.size()));
        for (int j = 0; j < d; ++j) {
            grads->combine_b.data[static_cast<std::size_t>(j)] += dcomb[static_cast<std::size_t>(j)];
        }
        kernels::matvec_t_acc(p.combine_w, dcomb.data(), dcat.data(),
                              kernels::pick(p.combine_w.size()));

        Vector dh(dcat.begin(), dcat.begin() + d);
        Vector dctx(dcat.begin() + d, dcat.end());
        kernels::axpy(d, 1.0, dh_rec.data(), dh.data());

        // attention: ctx = sum_l attn_l e_l, attn = softmax(scores),
        // scores_l = u . e_l, u = W_a^T h_dec
        Vector dattn(static_cast<std::size_t>(len));
        for (int l = 0; l < len; ++l) {
            dattn[static_cast<std::size_t>(l)] = kernels::dot(d, dctx.data(), enc.states.row(l));
            kernels::axpy(d, st.attn[static_cast<std::size_t>(l)], dctx.data(), d_enc_states.row(l));
        }
        double dot_ad = 0.0;
        for (int l = 0; l < len; ++l) {
            dot_ad += st.attn[static_cast<std::size_t>(l)] * dattn[static_cast<std::size_t>(l)];
        }
        Vector dscores(static_cast<std::size_t>(len));
        for (int l = 0; l < len; ++l) {
            dscores[static_cast<std::size_t>(l)] =
                st.attn[static_cast<std::size_t>(l)] * (dattn[static_cast<std::size_t>(l)] - dot_ad);
        }
        Vector du(static_cast<std::size_t>(d), 0.0);
        for (int l = 0; l < len; ++l) {
            kernels::axpy(d, dscores[static_cast<std::size_t>(l)], enc.states.row(l), du.data());
            kernels::axpy(d, dscores[static_cast<std::size_t>(l)], st.u.data(), d_enc_states.row(l));
        }
        kernels::outer_acc(grads->attn_w, st.lstm.h.data(), du.data(), kernels::pick(p.attn_w.size()));
        kernels::matvec_acc(p.attn_w, du.data(), dh.data(), kernels::pick(p.attn_w.size()));

        // decoder cell
        Vector dx(static_cast<std::size_t>(d), 0.0);
        Vector dh_prev(static_cast<std::size_t>(d), 0.0);
        Vector dc_prev(static_cast<std::size_t>(d), 0.0);
        numerics::lstm_cell_backward(st.lstm, p.decoder, dh, dc_rec, grads->decoder, dx, dh_prev,
                                     dc_prev);
        dh_rec = std::move(dh_prev);
        dc_rec = std::move(dc_prev);

        const int prev = t == 0 ? Vocab::bos_id : target[static_cast<std::size_t>(t - 1)];
        kernels::axpy(d, 1.0, dx.data(), grads->embedding.row(prev));
    }

    // decoder initial state came from the encoder's final state
    kernels::axpy(d, 1.0, dh_rec.data(), d_enc_states.row(len - 1));
    Vector denc_c = dc_rec;

    Vector dh_enc(static_cast<std::size_t>(d), 0.0);
    for (int t = len - 1; t >= 0; --t) {
        Vector dh(d_enc_states.row(t), d_enc_states.row(t) + d);
        kernels::axpy(d, 1.0, dh_enc.data(), dh.data());

        Vector dx(static_cast<std::size_t>(d), 0.0);
        Vector dh_prev(static_cast<std::size_t>(d), 0.0);
        Vector dc_prev(static_cast<std::size_t>(d), 0.0);
        numerics::lstm_cell_backward(enc_trace.steps[static_cast<std::size_t>(t)], p.encoder, dh,
                                     denc_c, grads->encoder, dx, dh_prev, dc_prev);
        dh_enc = std::move(dh_prev);
        denc_c = std::move(dc_prev);
        kernels::axpy(d, 1.0, dx.data(), grads->embedding.row(source[static_cast<std::size_t>(t)]));
    }

    return loss;
}

std::vector<Hypothesis> beam_search(const TokenSeq& source, int width, int max_len,
                                    const ModelParams& p, const GenOptions& opt) {
    require(width >= 1, "beam_search: width must be >= 1");
    require(max_len >= 1, "beam_search: max_len must be >= 1");

    const EncodedSource enc = encode(source, p);

    struct Live {
        Hypothesis hyp;
        DecState state;
    };
    std::vector<Live> live;
    live.push_back({Hypothesis{}, initial_dec_state(enc)});
    std::vector<Hypothesis> pool;

    for (int step = 0; step < max_len && !live.empty(); ++step) {
        const bool last_step = step == max_len - 1;

        struct Child {
            double log_prob;
            int parent;
            int token;
        };
        std::vector<Child> children;
        std::vector<DecState> advanced(live.size());
        std::vector<Vector> dists(live.size());
        for (std::size_t i = 0; i < live.size(); ++i) {
            const int prev = live[i].hyp.tokens.empty() ? Vocab::bos_id : live[i].hyp.tokens.back();
            advanced[i] = live[i].state;
            dists[i] = decode_one(enc, prev, advanced[i], p, nullptr, nullptr);
        }
        for (std::size_t i = 0; i < live.size(); ++i) {
            const int emitted = static_cast<int>(live[i].hyp.tokens.size());
            if (last_step) {
                // forced close: only the EOS child, probability counted
                children.push_back({live[i].hyp.log_prob +
                                        safe_log(dists[i][static_cast<std::size_t>(Vocab::eos_id)]),
                                    static_cast<int>(i), Vocab::eos_id});
                continue;
            }
            for (int tok = 0; tok < p.vocab_size; ++tok) {
                if (tok == Vocab::eos_id && emitted < opt.min_len) {
                    continue;
                }
                children.push_back(
                    {live[i].hyp.log_prob + safe_log(dists[i][static_cast<std::size_t>(tok)]),
                     static_cast<int>(i), tok});
            }
        }

        // Finished children compete for beam slots like everything else, so
        // width 1 reduces to greedy decoding.
        const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(width),
                                                       children.size());
        std::partial_sort(children.begin(), children.begin() + static_cast<long>(keep),
                          children.end(), [](const Child& a, const Child& b) {
                              if (a.log_prob != b.log_prob) {
                                  return a.log_prob > b.log_prob;
                              }
                              if (a.parent != b.parent) {
                                  return a.parent < b.parent;
                              }
                              return a.token < b.token;
                          });
        children.resize(keep);

        std::vector<Live> next;
        next.reserve(keep);
        for (const Child& ch : children) {
            Hypothesis hyp = live[static_cast<std::size_t>(ch.parent)].hyp;
            hyp.tokens.push_back(ch.token);
            hyp.log_prob = ch.log_prob;
            if (ch.token == Vocab::eos_id) {
                hyp.finished = true;
                pool.push_back(std::move(hyp));
            } else {
                next.push_back({std::move(hyp), advanced[static_cast<std::size_t>(ch.parent)]});
            }
        }
        live = std::move(next);
    }

    std::sort(pool.begin(), pool.end(), [](const Hypothesis& a, const Hypothesis& b) {
        if (a.log_prob != b.log_prob) {
            return a.log_prob > b.log_prob;
        }
        if (a.tokens.size() != b.tokens.size()) {
            return a.tokens.size() < b.tokens.size();
        }
        return a.tokens < b.tokens;
    });
    if (pool.size() > static_cast<std::size_t>(width)) {
        pool.resize(static_cast<std::size_t>(width));
    }
    return pool;
}

SampleResult sample(const TokenSeq& source, double temperature, int max_len, const ModelParams& p,
                    Rng& rng, const GenOptions& opt) {
    require(temperature > 0.0, "sample: temperature must be positive");
    require(max_len >= 1, "sample: max_len must be >= 1");

    const EncodedSource enc = encode(source, p);
    DecState state = initial_dec_state(enc);
    SampleResult result;
    const bool greedy = temperature < 1e-3;

    int prev = Vocab::bos_id;
    for (int step = 0; step < max_len; ++step) {
        const Vector probs = decode_one(enc, prev, state, p, nullptr, nullptr);
        const bool mask_eos = static_cast<int>(result.tokens.size()) < opt.min_len;

        int tok;
        if (greedy) {
            tok = -1;
            double best = -1.0;
            for (int i = 0; i < p.vocab_size; ++i) {
                if (mask_eos && i == Vocab::eos_id) {
                    continue;
                }
                if (probs[static_cast<std::size_t>(i)] > best) {
                    best = probs[static_cast<std::size_t>(i)];
                    tok = i;
                }
            }
        } else {
            // q_i proportional to p_i^(1/T), computed via shifted logs
            Vector scaled(probs.size());
            double mx = -1e300;
            for (std::size_t i = 0; i < probs.size(); ++i) {
                if (mask_eos && static_cast<int>(i) == Vocab::eos_id) {
                    scaled[i] = -1e300;
                    continue;
                }
                scaled[i] = safe_log(probs[i]) / temperature;
                mx = std::max(mx, scaled[i]);
            }
            double total = 0.0;
            for (double& v : scaled) {
                v = std::exp(v - mx);
                total += v;
            }
            const double draw = rng.uniform01() * total;
            double acc = 0.0;
            tok = p.vocab_size - 1;
            for (int i = 0; i < p.vocab_size; ++i) {
                acc += scaled[static_cast<std::size_t>(i)];
                if (draw < acc) {
                    tok = i;
                    break;
                }
            }
        }

        result.tokens.push_back(tok);
        result.log_prob += safe_log(probs[static_cast<std::size_t>(tok)]);
        if (tok == Vocab::eos_id) {
            result.terminated = true;
            break;
        }
        prev = tok;
    }

    if (!result.terminated && opt.force_eos) {
        const Vector probs = decode_one(enc, prev, state, p, nullptr, nullptr);
        result.tokens.push_back(Vocab::eos_id);
        result.log_prob += safe_log(probs[static_cast<std::size_t>(Vocab::eos_id)]);
        result.terminated = true;
    }
    return result;
}

double accumulate_grads_parallel(int n, ModelParams& total,
                                 const std::function<double(int, ModelParams&)>& item_fn) {
    double loss = 0.0;
    std::exception_ptr error;
    int error_index = n;

    std::vector<ModelParams> buffers;
    buffers.reserve(static_cast<std::size_t>(std::min(n, kGradBlock)));
    std::vector<double> item_loss(static_cast<std::size_t>(std::min(n, kGradBlock)), 0.0);

    for (int base = 0; base < n; base += kGradBlock) {
        const int count = std::min(kGradBlock, n - base);
        while (static_cast<int>(buffers.size()) < count) {
            buffers.push_back(ModelParams::zeros_like(total));
        }
        for (int j = 0; j < count; ++j) {
            for (auto& [name, m] : buffers[static_cast<std::size_t>(j)].param_views()) {
                (void)name;
                m->fill(0.0);
            }
        }
#pragma omp parallel for schedule(dynamic, 1)
        for (int j = 0; j < count; ++j) {
            try {
                item_loss[static_cast<std::size_t>(j)] =
                    item_fn(base + j, buffers[static_cast<std::size_t>(j)]);
            } catch (...) {
#pragma omp critical
                if (base + j < error_index) {
                    error_index = base + j;
                    error = std::current_exception();
                }
            }
        }
        if (error) {
            std::rethrow_exception(error);
        }
        for (int j = 0; j < count; ++j) {
            loss += item_loss[static_cast<std::size_t>(j)];
            add_grads(total, buffers[static_cast<std::size_t>(j)]);
        }
    }
    return loss;
}

MleStepResult mle_step(const std::vector<TrainPair>& batch, ModelParams& p, double lr) {
    require(!batch.empty(), "mle_step: empty batch");
    require(lr >= 0.0, "mle_step: negative learning rate");

    ModelParams grads = ModelParams::zeros_like(p);
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    const double loss = accumulate_grads_parallel(
        static_cast<int>(batch.size()), grads, [&](int i, ModelParams& g) {
            const TrainPair& pair = batch[static_cast<std::size_t>(i)];
            const std::vector<double> w(pair.target.size(),
                                        inv_batch / static_cast<double>(pair.target.size()));
            return forced_sequence_loss(pair.source, pair.target, w, p, &g);
        });

    if (!std::isfinite(loss)) {
        throw std::runtime_error("mle_step: non-finite loss, training diverged");
    }

    MleStepResult result;
    result.mean_loss = loss;
    result.grad_norm = clip_global_norm(grads, kClipNorm);
    if (lr > 0.0) {
        sgd_update(p, grads, lr);
    }
    return result;
}

} // namespace dialogue_rl::seq2seq
