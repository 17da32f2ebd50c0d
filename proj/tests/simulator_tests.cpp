#include "dialogue_rl/simulator.hpp"

#include <doctest.h>

#include <cmath>

using namespace dialogue_rl;
using namespace dialogue_rl::simulator;
using corpus::TokenSeq;
using corpus::Vocab;

namespace {

seq2seq::ModelParams tiny_model(int vocab, int hidden, std::uint64_t seed) {
    Rng rng(seed);
    return seq2seq::ModelParams::init(vocab, hidden, rng, 0.4);
}

rewards::DullList dull_of(std::vector<TokenSeq> phrases) {
    rewards::DullList d;
    for (TokenSeq& p : phrases) {
        p.push_back(Vocab::eos_id);
        d.phrases.push_back(p);
    }
    return d;
}

corpus::Vocab shared_vocab() {
    std::vector<corpus::Dialogue> data = {{corpus::default_dull_phrases()}};
    data[0].turns.push_back("i have a good idea friend");
    data[0].turns.push_back("where are you going today");
    return corpus::build_vocab(data, 2000);
}

} // namespace

TEST_CASE("is_dull matches the configured phrases exactly") {
    const corpus::Vocab vocab = shared_vocab();
    const rewards::DullList dull = rewards::DullList::defaults(vocab);

    TokenSeq yes = corpus::encode_text("i have no idea", vocab);
    yes.push_back(Vocab::eos_id);
    CHECK(is_dull(yes, dull));

    TokenSeq no = corpus::encode_text("i have a good idea", vocab);
    no.push_back(Vocab::eos_id);
    CHECK_FALSE(is_dull(no, dull));

    // every configured phrase maps to true, with or without the trailing EOS
    for (const TokenSeq& phrase : dull.phrases) {
        CHECK(is_dull(phrase, dull));
        CHECK(is_dull(rewards::strip_eos(phrase), dull));
    }
}

TEST_CASE("overlap_ratio set arithmetic") {
    CHECK(overlap_ratio({4, 5, 6}, {4, 5, 6}) == doctest::Approx(1.0));
    CHECK(overlap_ratio({4, 5}, {6, 7}) == doctest::Approx(0.0));

    // "a b c d e" vs "a b c d x": 4 shared over min size 5
    CHECK(overlap_ratio({4, 5, 6, 7, 8}, {4, 5, 6, 7, 9}) == doctest::Approx(0.8));

    // duplicates collapse to unique tokens; EOS is ignored
    CHECK(overlap_ratio({4, 4, 5, Vocab::eos_id}, {4, 5, 5}) == doctest::Approx(1.0));

    // asymmetric sizes use the smaller set
    CHECK(overlap_ratio({4, 5, 6, 7}, {4, 5}) == doctest::Approx(1.0));

    CHECK_THROWS_AS(overlap_ratio({}, {4}), std::invalid_argument);
    CHECK_THROWS_AS(overlap_ratio({4}, {Vocab::eos_id}), std::invalid_argument);
}

TEST_CASE("overlap boundary: exactly 0.8 continues, 0.81 terminates") {
    // 100-token utterances sharing 81 tokens -> ratio exactly 0.81
    TokenSeq u1;
    TokenSeq u2;
    for (int i = 0; i < 100; ++i) {
        u1.push_back(100 + i);
    }
    for (int i = 0; i < 81; ++i) {
        u2.push_back(100 + i);
    }
    for (int i = 0; i < 19; ++i) {
        u2.push_back(300 + i);
    }
    CHECK(overlap_ratio(u1, u2) == doctest::Approx(0.81));
    CHECK(overlap_ratio(u1, u2) > 0.8);

    const rewards::DullList dull = dull_of({{9}});
    SimulatedDialogue d;
    d.initial_message = {8};

    auto turn_with = [](const TokenSeq& toks, int agent) {
        Turn t;
        t.agent = agent;
        t.tokens = toks;
        t.tokens.push_back(Vocab::eos_id);
        return t;
    };

    // same agent (turns 0 and 2): exactly 0.8 -> continue
    d.turns = {turn_with({4, 5, 6, 7, 10}, 1), turn_with({20}, 2),
               turn_with({4, 5, 6, 7, 11}, 1)};
    CHECK_FALSE(should_terminate(d, dull).has_value());

    // 0.81 -> repetition
    d.turns = {turn_with(u1, 1), turn_with({20}, 2), turn_with(u2, 1)};
    const auto term = should_terminate(d, dull);
    REQUIRE(term.has_value());
    CHECK(*term == Termination::repetition);
}

TEST_CASE("should_terminate covers dull, repetition, budget and none") {
    const corpus::Vocab vocab = shared_vocab();
    const rewards::DullList dull = rewards::DullList::defaults(vocab);

    auto turn_of = [&](const std::string& text, int agent) {
        Turn t;
        t.agent = agent;
        t.tokens = corpus::encode_text(text, vocab);
        t.tokens.push_back(Vocab::eos_id);
        return t;
    };

    SimulatedDialogue d;
    d.initial_message = corpus::encode_text("where are you going", vocab);

    // latest turn dull
    d.turns = {turn_of("i don't know", 1)};
    REQUIRE(should_terminate(d, dull).has_value());
    CHECK(*should_terminate(d, dull) == Termination::dull);

    // agent repeats itself two own-turns apart ("see you later" loop)
    d.turns = {turn_of("see you later", 1), turn_of("talking to you", 2),
               turn_of("see you later", 1)};
    REQUIRE(should_terminate(d, dull).has_value());
    CHECK(*should_terminate(d, dull) == Termination::repetition);

    // the second responder's first turn is compared against the initial message
    d.turns = {turn_of("good idea friend", 1), turn_of("where are you going", 2)};
    REQUIRE(should_terminate(d, dull).has_value());
    CHECK(*should_terminate(d, dull) == Termination::repetition);

    // fresh varied dialogue: nothing fires
    d.turns = {turn_of("i have a good idea", 1), turn_of("you know about it", 2)};
    CHECK_FALSE(should_terminate(d, dull).has_value());

    // budget exhausted
    CHECK(*should_terminate(d, dull, 2) == Termination::max_turns);
    CHECK_FALSE(should_terminate(d, dull, 3).has_value());
}

TEST_CASE("simulate with one candidate and one turn records exactly one response") {
    const seq2seq::ModelParams policy = tiny_model(10, 4, 90);
    rewards::RewardContext ctx;
    ctx.dull = dull_of({{9, 9, 9}}); // never matched by accident
    SimulateOptions opt;
    opt.max_turns = 1;
    opt.candidates_per_step = 1;
    opt.compute_rewards = false;
    opt.max_len = 5;
    opt.seed = 4;

    const auto result = simulate({4, 5}, policy, ctx, opt);
    REQUIRE(result.dialogues.size() == 1);
    CHECK(result.generated_turns == 1);
    CHECK(result.dialogues[0].turns.size() == 1);
    CHECK(result.dialogues[0].turns[0].agent == 1);
    CHECK(result.dialogues[0].termination == Termination::max_turns);
    CHECK(result.dialogues[0].turns[0].state.own_prev.empty());
    CHECK(result.dialogues[0].turns[0].state.other_last == TokenSeq{4, 5});
}

TEST_CASE("branching: 5 candidates over 2 turns records 5 + 25 turns") {
    // seed picked so no branch terminates early; dull phrase is unreachable
    const seq2seq::ModelParams policy = tiny_model(30, 6, 91);
    rewards::RewardContext ctx;
    ctx.dull = dull_of({{29, 29, 29, 29, 29, 29, 29}});
    SimulateOptions opt;
    opt.max_turns = 2;
    opt.candidates_per_step = 5;
    opt.branch_budget = 1000;
    opt.compute_rewards = false;
    opt.max_len = 6;
    opt.seed = 11;

    const auto result = simulate({4, 5, 6}, policy, ctx, opt);
    bool all_max = true;
    for (const auto& d : result.dialogues) {
        all_max = all_max && d.termination == Termination::max_turns;
    }
    if (all_max) {
        CHECK(result.dialogues.size() == 25);
        CHECK(result.generated_turns == 30);
    } else {
        // early termination only shrinks the tree
        CHECK(result.dialogues.size() <= 25);
        CHECK(result.generated_turns <= 30);
    }

    // agents alternate starting with agent 1
    for (const auto& d : result.dialogues) {
        for (std::size_t j = 0; j < d.turns.size(); ++j) {
            CHECK(d.turns[j].agent == static_cast<int>(j % 2) + 1);
        }
    }
}

TEST_CASE("a policy that always answers dull terminates after one turn") {
    const corpus::Vocab vocab = shared_vocab();
    seq2seq::ModelParams policy = tiny_model(vocab.size(), 6, 92);

    // drive the model toward emitting exactly "i don't know"
    const TokenSeq phrase = corpus::encode_text("i don't know", vocab);
    corpus::TrainPair pair;
    pair.source = corpus::encode_text("where are you going", vocab);
    pair.target = phrase;
    pair.target.push_back(Vocab::eos_id);
    for (int i = 0; i < 300; ++i) {
        seq2seq::mle_step({pair}, policy, 1.0);
    }

    rewards::RewardContext ctx;
    ctx.dull = rewards::DullList::defaults(vocab);
    SimulateOptions opt;
    opt.max_turns = 5;
    opt.candidates_per_step = 1;
    opt.mode = GenMode::beam;
    opt.compute_rewards = false;
    opt.max_len = 8;

    const auto result = simulate(pair.source, policy, ctx, opt);
    REQUIRE(result.dialogues.size() == 1);
    CHECK(result.dialogues[0].turns.size() == 1);
    CHECK(result.dialogues[0].termination == Termination::dull);
}

TEST_CASE("recorded log_probs equal sequence_log_prob of the recorded state and turn") {
    const seq2seq::ModelParams policy = tiny_model(16, 5, 93);
    rewards::RewardContext ctx;
    ctx.dull = dull_of({{15, 15, 15, 15, 15}});
    SimulateOptions opt;
    opt.max_turns = 3;
    opt.candidates_per_step = 2;
    opt.compute_rewards = false;
    opt.max_len = 5;
    opt.seed = 21;

    const auto result = simulate({4, 7}, policy, ctx, opt);
    REQUIRE(!result.dialogues.empty());
    for (const auto& d : result.dialogues) {
        for (const auto& t : d.turns) {
            const double lp =
                seq2seq::sequence_log_prob(t.state.to_source(), t.tokens, policy, false);
            CHECK(std::fabs(lp - t.log_prob) < 1e-10);
        }
    }
}

TEST_CASE("termination is monotone: no prefix of a branch already terminated") {
    const seq2seq::ModelParams policy = tiny_model(16, 5, 94);
    rewards::RewardContext ctx;
    ctx.dull = dull_of({{15, 14}});
    SimulateOptions opt;
    opt.max_turns = 4;
    opt.candidates_per_step = 2;
    opt.compute_rewards = false;
    opt.max_len = 5;
    opt.seed = 33;

    const auto result = simulate({4, 7, 9}, policy, ctx, opt);
    for (const auto& d : result.dialogues) {
        CHECK(d.termination != Termination::none);
        SimulatedDialogue prefix;
        prefix.initial_message = d.initial_message;
        for (std::size_t j = 0; j + 1 < d.turns.size(); ++j) {
            prefix.turns.push_back(d.turns[j]);
            CHECK_FALSE(should_terminate(prefix, ctx.dull, opt.max_turns).has_value());
        }
    }
}

TEST_CASE("branch budget prunes to the configured number of leaves") {
    const seq2seq::ModelParams policy = tiny_model(24, 5, 95);
    rewards::RewardContext ctx;
    ctx.dull = dull_of({{23, 23, 23, 23, 23}});
    SimulateOptions opt;
    opt.max_turns = 3;
    opt.candidates_per_step = 5;
    opt.branch_budget = 10;
    opt.compute_rewards = false;
    opt.max_len = 5;
    opt.seed = 55;

    const auto result = simulate({4}, policy, ctx, opt);
    CHECK(result.dialogues.size() <= 10);
    CHECK(result.dialogues.size() >= 1);
}

TEST_CASE("run_eval_dialogue counts turns before the terminating turn") {
    const corpus::Vocab vocab = shared_vocab();
    const rewards::DullList dull = rewards::DullList::defaults(vocab);
    const TokenSeq initial = corpus::encode_text("where are you going", vocab);

    // scripted: three varied turns, then a dull one
    const std::vector<std::string> script = {"good idea friend", "you know about it",
                                             "i have a good idea", "i don't know"};
    int call = 0;
    const Responder scripted = [&](const corpus::DialogueState&) {
        TokenSeq t = corpus::encode_text(script[static_cast<std::size_t>(call++)], vocab);
        t.push_back(Vocab::eos_id);
        return t;
    };
    const auto d = run_eval_dialogue(scripted, initial, dull, 8);
    CHECK(d.termination == Termination::dull);
    CHECK(d.turns.size() == 4);
    CHECK(d.counted_turns == 3);

    // immediately dull: zero counted turns
    const Responder dull_only = [&](const corpus::DialogueState&) {
        TokenSeq t = corpus::encode_text("i don't know", vocab);
        t.push_back(Vocab::eos_id);
        return t;
    };
    CHECK(run_eval_dialogue(dull_only, initial, dull, 8).counted_turns == 0);
}

TEST_CASE("transcripts carry speakers, branch id and termination reason") {
    const corpus::Vocab vocab = shared_vocab();
    SimulatedDialogue d;
    d.initial_message = corpus::encode_text("where are you going", vocab);
    Turn t;
    t.agent = 1;
    t.tokens = corpus::encode_text("i don't know", vocab);
    t.tokens.push_back(Vocab::eos_id);
    d.turns.push_back(t);
    d.termination = Termination::dull;

    const std::string text = format_transcript(d, vocab, 3);
    CHECK(text.find("A: where are you going") != std::string::npos);
    CHECK(text.find("B: i don't know") != std::string::npos);
    CHECK(text.find("# branch 3 termination=dull") != std::string::npos);
}
