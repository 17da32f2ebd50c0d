#include "dialogue_rl/corpus.hpp"
#include "dialogue_rl/rng.hpp"

#include <doctest.h>

#include <map>
#include <set>
#include <stdexcept>

using namespace dialogue_rl;
using namespace dialogue_rl::corpus;

TEST_CASE("tokenize lowercases, splits and detaches punctuation") {
    CHECK(tokenize("Where are you going?") ==
          std::vector<std::string>{"where", "are", "you", "going", "?"});
    CHECK(tokenize("i don't know.") == std::vector<std::string>{"i", "don't", "know", "."});
    CHECK(tokenize("  hello,world ") == std::vector<std::string>{"hello", ",", "world"});
    CHECK(tokenize("") == std::vector<std::string>{});
}

TEST_CASE("detokenize round-trips whitespace-normalized text") {
    Rng rng(3);
    const std::vector<std::string> words = {"a", "b", "don't", "?", "going", "home", "."};
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::string> toks;
        const int n = 1 + static_cast<int>(rng.below(10));
        for (int i = 0; i < n; ++i) {
            toks.push_back(words[rng.below(static_cast<std::uint32_t>(words.size()))]);
        }
        const std::string text = detokenize(toks);
        CHECK(tokenize(text) == toks);
        CHECK(detokenize(tokenize(text)) == text);
    }
}

TEST_CASE("build_vocab keeps reserved ids and frequent tokens") {
    const std::vector<Dialogue> corpus = {{{"a a b", "a"}}};
    const Vocab v = build_vocab(corpus, 10);
    CHECK(v.size() == 6);
    CHECK(v.token(Vocab::pad_id) == "<pad>");
    CHECK(v.token(Vocab::bos_id) == "<bos>");
    CHECK(v.token(Vocab::eos_id) == "<eos>");
    CHECK(v.token(Vocab::unk_id) == "<unk>");
    CHECK(v.contains("a"));
    CHECK(v.contains("b"));
    CHECK(v.id("a") == 4); // most frequent first
    CHECK(v.id("zzz") == Vocab::unk_id);
}

TEST_CASE("build_vocab breaks frequency ties lexicographically") {
    const std::vector<Dialogue> corpus = {{{"b a b a", "x"}}};
    const Vocab v = build_vocab(corpus, 5);
    CHECK(v.size() == 5);
    CHECK(v.contains("a"));
    CHECK_FALSE(v.contains("b"));
    CHECK_FALSE(v.contains("x"));
}

TEST_CASE("build_vocab rejects an empty corpus") {
    CHECK_THROWS_AS(build_vocab({}, 10), std::invalid_argument);
}

TEST_CASE("make_pairs builds one pair per response turn") {
    const std::vector<Dialogue> corpus = {{{"a b", "c d", "e"}}};
    const Vocab v = build_vocab(corpus, 50);
    const auto pairs = make_pairs(corpus, v);
    REQUIRE(pairs.size() == 2);

    CHECK(pairs[0].source == encode_text("a b", v));
    TokenSeq t0 = encode_text("c d", v);
    t0.push_back(Vocab::eos_id);
    CHECK(pairs[0].target == t0);

    // second source: previous two turns joined by the EOS separator
    TokenSeq src1 = encode_text("a b", v);
    src1.push_back(Vocab::eos_id);
    for (int id : encode_text("c d", v)) {
        src1.push_back(id);
    }
    CHECK(pairs[1].source == src1);
}

TEST_CASE("make_pairs counts turns-minus-one per dialogue and skips short ones") {
    std::vector<Dialogue> corpus;
    corpus.push_back({{"a", "b"}});
    corpus.push_back({{"a", "b", "a"}});
    corpus.push_back({{"a", "b", "a", "b"}});
    corpus.push_back({{"only one turn"}});
    const Vocab v = build_vocab(corpus, 50);
    CHECK(make_pairs(corpus, v).size() == 1 + 2 + 3);
}

TEST_CASE("synthetic corpus is deterministic") {
    const auto a = gen_synthetic_corpus(1, 50);
    const auto b = gen_synthetic_corpus(1, 50);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].turns == b[i].turns);
    }
    const auto c = gen_synthetic_corpus(2, 50);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size() && !any_diff; ++i) {
        any_diff = a[i].turns != c[i].turns;
    }
    CHECK(any_diff);
}

TEST_CASE("synthetic corpus hits the dull-response fraction and vocab budget") {
    const auto dialogues = gen_synthetic_corpus(7, 500);
    CHECK(dialogues.size() == 500);

    std::set<std::string> dull(default_dull_phrases().begin(), default_dull_phrases().end());
    int targets = 0;
    int dull_targets = 0;
    std::set<std::string> words;
    for (const auto& d : dialogues) {
        CHECK(d.turns.size() >= 2);
        for (std::size_t i = 0; i < d.turns.size(); ++i) {
            CHECK_FALSE(d.turns[i].empty());
            for (const auto& w : tokenize(d.turns[i])) {
                words.insert(w);
            }
            if (i >= 1) {
                ++targets;
                dull_targets += dull.count(d.turns[i]) != 0 ? 1 : 0;
            }
        }
    }
    CHECK(static_cast<double>(dull_targets) / targets >= 0.10);
    CHECK(words.size() <= 200);
}

TEST_CASE("synthetic corpus token frequencies match an independent recount") {
    const auto dialogues = gen_synthetic_corpus(7, 120);
    const Vocab v = build_vocab(dialogues, 2000);

    // recount from scratch over the emitted text
    std::map<std::string, long long> freq;
    for (const auto& d : dialogues) {
        for (const auto& turn : d.turns) {
            for (const auto& tok : tokenize(turn)) {
                ++freq[tok];
            }
        }
    }
    CHECK(v.size() == static_cast<int>(freq.size()) + Vocab::reserved_count);

    // encode/decode round trip over every turn
    for (const auto& d : dialogues) {
        for (const auto& turn : d.turns) {
            const TokenSeq ids = encode_text(turn, v);
            CHECK(decode_tokens(ids, v) == turn);
        }
    }
}

TEST_CASE("corpus file round trip") {
    const auto dialogues = gen_synthetic_corpus(42, 20);
    const std::string path = "/tmp/dialogue_rl_corpus_test.txt";
    write_corpus_file(dialogues, path);
    const auto loaded = read_corpus_file(path);
    REQUIRE(loaded.size() == dialogues.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].turns == dialogues[i].turns);
    }
}

TEST_CASE("dialogue state source uses the EOS separator") {
    DialogueState s;
    s.own_prev = {10, 11};
    s.other_last = {12};
    CHECK(s.to_source() == TokenSeq{10, 11, Vocab::eos_id, 12});

    DialogueState first;
    first.other_last = {12};
    CHECK(first.to_source() == TokenSeq{12});
}
