#include "dialogue_rl/eval.hpp"

#include <doctest.h>

#include <algorithm>

using namespace dialogue_rl;
using namespace dialogue_rl::eval;
using corpus::TokenSeq;
using corpus::Vocab;

namespace {

corpus::Vocab shared_vocab() {
    std::vector<corpus::Dialogue> data = {{corpus::default_dull_phrases()}};
    data[0].turns.push_back("alpha beta gamma delta this varies a lot here");
    return corpus::build_vocab(data, 2000);
}

} // namespace

TEST_CASE("distinct_n hand-counted examples") {
    // single response "a a a": one distinct unigram over three tokens
    CHECK(distinct_n({{4, 4, 4}}, 1) == doctest::Approx(1.0 / 3.0));

    // responses "a b" and "a c": distinct1 3/4, distinct2 2/4
    const std::vector<TokenSeq> two = {{4, 5}, {4, 6}};
    CHECK(distinct_n(two, 1) == doctest::Approx(0.75));
    CHECK(distinct_n(two, 2) == doctest::Approx(0.5));
}

TEST_CASE("distinct_n excludes EOS and never crosses response boundaries") {
    const std::vector<TokenSeq> with_eos = {{4, 5, Vocab::eos_id}, {4, 6, Vocab::eos_id}};
    CHECK(distinct_n(with_eos, 1) == doctest::Approx(0.75));
    CHECK(distinct_n(with_eos, 2) == doctest::Approx(0.5));

    // the bigram (5,6) would only exist across the boundary
    const std::vector<TokenSeq> split = {{4, 5}, {6, 7}};
    CHECK(distinct_n(split, 2) == doctest::Approx(2.0 / 4.0));
}

TEST_CASE("duplicating every response exactly halves distinct_n") {
    const std::vector<TokenSeq> base = {{4, 5, 6}, {4, 7}, {8, 9, 10, 11}};
    std::vector<TokenSeq> doubled = base;
    doubled.insert(doubled.end(), base.begin(), base.end());

    CHECK(distinct_n(doubled, 1) == doctest::Approx(distinct_n(base, 1) / 2.0));
    CHECK(distinct_n(doubled, 2) == doctest::Approx(distinct_n(base, 2) / 2.0));
}

TEST_CASE("distinct_n is permutation invariant") {
    std::vector<TokenSeq> responses = {{4, 5}, {6}, {7, 8, 9}, {4, 6}};
    const double d1 = distinct_n(responses, 1);
    const double d2 = distinct_n(responses, 2);
    std::reverse(responses.begin(), responses.end());
    CHECK(distinct_n(responses, 1) == d1);
    CHECK(distinct_n(responses, 2) == d2);
}

TEST_CASE("avg_dialogue_length on scripted policies") {
    const corpus::Vocab vocab = shared_vocab();
    const rewards::DullList dull = rewards::DullList::defaults(vocab);
    const std::vector<TokenSeq> inputs = {corpus::encode_text("alpha beta", vocab)};

    const std::vector<std::string> script = {"gamma delta here", "this varies a lot",
                                             "alpha gamma varies", "i don't know"};
    int call = 0;
    const simulator::Responder scripted = [&](const corpus::DialogueState&) {
        TokenSeq t = corpus::encode_text(script[static_cast<std::size_t>(call++)], vocab);
        t.push_back(Vocab::eos_id);
        return t;
    };
    CHECK(avg_dialogue_length(scripted, inputs, dull, 8) == doctest::Approx(3.0));

    const simulator::Responder dull_policy = [&](const corpus::DialogueState&) {
        TokenSeq t = corpus::encode_text("i have no idea", vocab);
        t.push_back(Vocab::eos_id);
        return t;
    };
    CHECK(avg_dialogue_length(dull_policy, inputs, dull, 8) == doctest::Approx(0.0));
}

TEST_CASE("mean length never exceeds the turn cap") {
    const corpus::Vocab vocab = shared_vocab();
    const rewards::DullList dull = rewards::DullList::defaults(vocab);
    const std::vector<TokenSeq> inputs = {corpus::encode_text("alpha", vocab)};

    // endlessly varied policy: the reply depends only on the state, cycling
    // three mutually disjoint turns so no termination rule ever fires
    const std::vector<std::string> cycle = {"beta gamma", "delta varies", "lot here"};
    const simulator::Responder responder = [&](const corpus::DialogueState& state) {
        const std::string last = corpus::decode_tokens(state.other_last, vocab);
        std::size_t next = 0;
        for (std::size_t i = 0; i < cycle.size(); ++i) {
            if (cycle[i] == last) {
                next = (i + 1) % cycle.size();
            }
        }
        TokenSeq t = corpus::encode_text(cycle[next], vocab);
        t.push_back(Vocab::eos_id);
        return t;
    };
    const double len = avg_dialogue_length(responder, inputs, dull, 8);
    CHECK(len <= 8.0);
    CHECK(len == doctest::Approx(8.0)); // nothing terminates early
}

TEST_CASE("compare_models is deterministic and matches direct metric calls") {
    const corpus::Vocab vocab = shared_vocab();
    Rng rng(301);
    const seq2seq::ModelParams model =
        seq2seq::ModelParams::init(vocab.size(), 6, rng, 0.4);
    const rewards::DullList dull = rewards::DullList::defaults(vocab);

    std::vector<TokenSeq> inputs;
    inputs.push_back(corpus::encode_text("alpha beta gamma", vocab));
    inputs.push_back(corpus::encode_text("delta here", vocab));

    NamedModel nm;
    nm.id = "random";
    nm.policy.params = &model;
    nm.policy.beam_width = 4;
    nm.policy.max_len = 6;

    const auto one = compare_models({nm}, inputs, dull, 6);
    REQUIRE(one.size() == 1);

    NamedModel nm2 = nm;
    nm2.id = "random-again";
    const auto two = compare_models({nm, nm2}, inputs, dull, 6);
    REQUIRE(two.size() == 2);
    CHECK(two[0].mean_turns == two[1].mean_turns);
    CHECK(two[0].distinct1 == two[1].distinct1);
    CHECK(two[0].distinct2 == two[1].distinct2);

    // composition oracle
    CHECK(one[0].mean_turns == doctest::Approx(avg_dialogue_length(nm.policy, inputs, dull, 6)));
    const auto responses = first_responses(nm.policy, inputs);
    CHECK(one[0].distinct1 == doctest::Approx(distinct_n(responses, 1)));
    CHECK(one[0].distinct2 == doctest::Approx(distinct_n(responses, 2)));
    CHECK(one[0].n_inputs == 2);
}

TEST_CASE("compare_models rejects vocab mismatches") {
    const corpus::Vocab vocab = shared_vocab();
    Rng rng(302);
    const seq2seq::ModelParams a = seq2seq::ModelParams::init(vocab.size(), 4, rng, 0.4);
    const seq2seq::ModelParams b = seq2seq::ModelParams::init(vocab.size() + 3, 4, rng, 0.4);

    NamedModel ma;
    ma.id = "a";
    ma.policy.params = &a;
    NamedModel mb;
    mb.id = "b";
    mb.policy.params = &b;
    CHECK_THROWS_AS(compare_models({ma, mb}, {{4}}, rewards::DullList::defaults(vocab), 4),
                    std::invalid_argument);
}

TEST_CASE("report formatting carries machine-readable lines") {
    EvalReport r;
    r.model_id = "rl:model.ckpt";
    r.mean_turns = 4.5;
    r.distinct1 = 0.017;
    r.distinct2 = 0.041;
    r.n_inputs = 200;
    const std::string text = format_reports({r});
    CHECK(text.find("model=rl:model.ckpt") != std::string::npos);
    CHECK(text.find("mean_turns=4.500000") != std::string::npos);
    CHECK(text.find("distinct1=0.017000") != std::string::npos);
    CHECK(text.find("n_inputs=200") != std::string::npos);
}
