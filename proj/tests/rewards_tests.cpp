#include "dialogue_rl/rewards.hpp"

#include "dialogue_rl/mmi.hpp"

#include <doctest.h>

#include <cmath>

using namespace dialogue_rl;
using namespace dialogue_rl::rewards;
using corpus::TokenSeq;
using corpus::Vocab;

namespace {

seq2seq::ModelParams tiny_model(int vocab, int hidden, std::uint64_t seed) {
    Rng rng(seed);
    return seq2seq::ModelParams::init(vocab, hidden, rng, 0.4);
}

corpus::Vocab tiny_vocab() {
    std::vector<corpus::Dialogue> corpus_data = {{corpus::default_dull_phrases()}};
    corpus_data[0].turns.push_back("where are you going today friend");
    return corpus::build_vocab(corpus_data, 2000);
}

} // namespace

TEST_CASE("r2 of identical vectors is zero") {
    CHECK(r2_information_flow({1, 2, 3}, {1, 2, 3}, 1e-8) == doctest::Approx(0.0));
    // positively parallel vectors too
    CHECK(r2_information_flow({1, 2, 3}, {2, 4, 6}, 1e-8) == doctest::Approx(0.0));
}

TEST_CASE("r2 clamps orthogonal vectors at epsilon") {
    const double r = r2_information_flow({1, 0}, {0, 1}, 1e-8);
    CHECK(r == doctest::Approx(-std::log(1e-8)).epsilon(1e-9));
    CHECK(r == doctest::Approx(18.4207).epsilon(1e-4));
    // anti-parallel clamps the same way
    CHECK(r2_information_flow({1, 0}, {-1, 0}, 1e-8) == doctest::Approx(18.4207).epsilon(1e-4));
}

TEST_CASE("r2 hand-computed cosine") {
    const double r = r2_information_flow({1, 0}, {1, 1}, 1e-8);
    CHECK(r == doctest::Approx(-std::log(1.0 / std::sqrt(2.0))).epsilon(1e-9));
    CHECK(r == doctest::Approx(0.34657).epsilon(1e-4));
}

TEST_CASE("r2 rejects zero vectors and bad epsilon") {
    CHECK_THROWS_AS(r2_information_flow({0, 0}, {1, 1}, 1e-8), std::invalid_argument);
    CHECK_THROWS_AS(r2_information_flow({1, 0}, {1, 1}, 0.0), std::invalid_argument);
}

TEST_CASE("r2 is non-negative for random vectors") {
    Rng rng(40);
    for (int trial = 0; trial < 100; ++trial) {
        Vector a(4);
        Vector b(4);
        for (int j = 0; j < 4; ++j) {
            a[static_cast<std::size_t>(j)] = rng.uniform(-1.0, 1.0);
            b[static_cast<std::size_t>(j)] = rng.uniform(-1.0, 1.0);
        }
        const double r = r2_information_flow(a, b, 1e-8);
        CHECK(r >= 0.0);
        CHECK(std::isfinite(r));
    }
}

TEST_CASE("r1 forced arithmetic with a single one-token dull phrase") {
    // uniform-output model: every token has probability 1/V
    seq2seq::ModelParams p = tiny_model(100, 4, 50);
    p.out_w.fill(0.0);
    p.out_b.fill(0.0);

    DullList dull;
    dull.phrases.push_back({Vocab::eos_id}); // single token incl. EOS

    const TokenSeq action = {7, Vocab::eos_id};
    const double r = r1_ease_of_answering(action, p, dull);
    CHECK(r == doctest::Approx(-std::log(0.01)).epsilon(1e-9));
    CHECK(r == doctest::Approx(4.60517).epsilon(1e-5));
}

TEST_CASE("r1 averages independent length-scaled log-probs over the list") {
    const corpus::Vocab vocab = tiny_vocab();
    const seq2seq::ModelParams fwd = tiny_model(vocab.size(), 6, 51);
    const DullList dull = DullList::defaults(vocab);
    REQUIRE(dull.phrases.size() == 8);

    const TokenSeq action = corpus::encode_text("where are you going today", vocab);
    TokenSeq action_eos = action;
    action_eos.push_back(Vocab::eos_id);

    double expect = 0.0;
    for (const TokenSeq& phrase : dull.phrases) {
        expect += seq2seq::sequence_log_prob(action, phrase, fwd, true);
    }
    expect = -expect / 8.0;
    CHECK(r1_ease_of_answering(action_eos, fwd, dull) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("r1 strictly decreases when a dull phrase gets more likely") {
    const corpus::Vocab vocab = tiny_vocab();
    seq2seq::ModelParams fwd = tiny_model(vocab.size(), 6, 52);
    const DullList dull = DullList::defaults(vocab);
    const TokenSeq action = corpus::encode_text("where are you going", vocab);
    TokenSeq action_eos = action;
    action_eos.push_back(Vocab::eos_id);

    const double before = r1_ease_of_answering(action_eos, fwd, dull);

    // nudge the output bias toward the first token of the canonical phrase
    const int first_tok = dull.phrases.front().front();
    fwd.out_b.data[static_cast<std::size_t>(first_tok)] += 2.0;
    const double after = r1_ease_of_answering(action_eos, fwd, dull);
    CHECK(after < before);
}

TEST_CASE("r3 matches the scaling arithmetic of its two terms") {
    const corpus::Vocab vocab = tiny_vocab();
    const seq2seq::ModelParams fwd = tiny_model(vocab.size(), 5, 53);
    const seq2seq::ModelParams bwd = tiny_model(vocab.size(), 5, 54);

    DialogueState state;
    state.own_prev = corpus::encode_text("where are you going", vocab);
    state.other_last = corpus::encode_text("i have no idea", vocab);
    TokenSeq action = corpus::encode_text("you know what i mean", vocab);
    action.push_back(Vocab::eos_id);

    const double fwd_term = seq2seq::sequence_log_prob(state.to_source(), action, fwd, true);
    TokenSeq back_target = state.other_last;
    back_target.push_back(Vocab::eos_id);
    const double bwd_term =
        seq2seq::sequence_log_prob(strip_eos(action), back_target, bwd, true);

    CHECK(r3_coherence(action, state, fwd, bwd) ==
          doctest::Approx(fwd_term + bwd_term).epsilon(1e-12));
}

TEST_CASE("r3 equals mmi_score bitwise on 50 random triples") {
    const corpus::Vocab vocab = tiny_vocab();
    const seq2seq::ModelParams fwd = tiny_model(vocab.size(), 5, 55);
    const seq2seq::ModelParams bwd = tiny_model(vocab.size(), 5, 56);

    Rng rng(57);
    const int v = vocab.size();
    for (int trial = 0; trial < 50; ++trial) {
        DialogueState state;
        const int np = static_cast<int>(rng.below(4));
        for (int i = 0; i < np; ++i) {
            state.own_prev.push_back(4 + static_cast<int>(rng.below(static_cast<std::uint32_t>(v - 4))));
        }
        const int nq = 1 + static_cast<int>(rng.below(4));
        for (int i = 0; i < nq; ++i) {
            state.other_last.push_back(4 + static_cast<int>(rng.below(static_cast<std::uint32_t>(v - 4))));
        }
        TokenSeq action;
        const int na = 1 + static_cast<int>(rng.below(5));
        for (int i = 0; i < na; ++i) {
            action.push_back(4 + static_cast<int>(rng.below(static_cast<std::uint32_t>(v - 4))));
        }
        action.push_back(Vocab::eos_id);

        const double a = r3_coherence(action, state, fwd, bwd);
        const double b = mmi::mmi_score(action, state, fwd, bwd);
        CHECK(a == b); // bitwise
    }
}

TEST_CASE("combined_reward weights the components and defaults to (0.25,0.25,0.5)") {
    RewardWeights w;
    CHECK(w.ease == doctest::Approx(0.25));
    CHECK(w.flow == doctest::Approx(0.25));
    CHECK(w.coherence == doctest::Approx(0.5));
    w.validate();

    CHECK(0.25 * 4.0 + 0.25 * 4.0 + 0.5 * 2.0 == doctest::Approx(3.0));

    RewardWeights bad;
    bad.ease = 0.5;
    bad.flow = 0.5;
    bad.coherence = 0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("combined_reward composes the three components") {
    const corpus::Vocab vocab = tiny_vocab();
    const seq2seq::ModelParams fwd = tiny_model(vocab.size(), 5, 58);
    const seq2seq::ModelParams bwd = tiny_model(vocab.size(), 5, 59);

    RewardContext ctx;
    ctx.fwd = &fwd;
    ctx.bwd = &bwd;
    ctx.dull = DullList::defaults(vocab);

    DialogueState state;
    state.own_prev = corpus::encode_text("how old are you", vocab);
    state.other_last = corpus::encode_text("i am going home", vocab);
    TokenSeq action = corpus::encode_text("what do you mean", vocab);
    action.push_back(Vocab::eos_id);

    const RewardBreakdown r = combined_reward(action, state, ctx);
    CHECK(r.total ==
          doctest::Approx(0.25 * r.r1 + 0.25 * r.r2 + 0.5 * r.r3).epsilon(1e-12));
    CHECK(std::isfinite(r.total));
    CHECK(r.r2 >= 0.0);

    // linearity in each component under different weights
    RewardContext ctx2 = ctx;
    ctx2.weights.ease = 0.1;
    ctx2.weights.flow = 0.2;
    ctx2.weights.coherence = 0.7;
    const RewardBreakdown r2 = combined_reward(action, state, ctx2);
    CHECK(r2.r1 == doctest::Approx(r.r1));
    CHECK(r2.total == doctest::Approx(0.1 * r.r1 + 0.2 * r.r2 + 0.7 * r.r3).epsilon(1e-12));

    // empty own_prev drops the information-flow term
    DialogueState first;
    first.other_last = state.other_last;
    const RewardBreakdown rf = combined_reward(action, first, ctx);
    CHECK(rf.r2 == 0.0);
}

TEST_CASE("dull list loads from strings and validates") {
    const corpus::Vocab vocab = tiny_vocab();
    const DullList dull = DullList::defaults(vocab);
    REQUIRE(dull.phrases.size() == 8);
    for (const TokenSeq& p : dull.phrases) {
        REQUIRE(!p.empty());
        CHECK(p.back() == Vocab::eos_id);
        CHECK(p.size() >= 2);
    }
    CHECK_THROWS_AS(DullList::from_strings({}, vocab), std::invalid_argument);
}
