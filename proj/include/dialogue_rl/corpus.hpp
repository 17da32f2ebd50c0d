#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace dialogue_rl::seq2seq {
struct ModelParams;
}

namespace dialogue_rl::corpus {

/// An utterance as vocabulary ids.
using TokenSeq = std::vector<int>;

/// Lowercases, splits on whitespace and detaches punctuation into separate
/// tokens. Apostrophes are kept inside words so contractions survive as one
/// token.
std::vector<std::string> tokenize(const std::string& text);

/// Inverse of tokenize for whitespace-normalized text: joins with single
/// spaces.
std::string detokenize(const std::vector<std::string>& tokens);

/// Token <-> id map with fixed reserved ids.
struct Vocab {
    static constexpr int pad_id = 0;
    static constexpr int bos_id = 1;
    static constexpr int eos_id = 2;
    static constexpr int unk_id = 3;
    static constexpr int reserved_count = 4;

    std::vector<std::string> id_to_token;
    std::unordered_map<std::string, int> token_to_id;

    int size() const { return static_cast<int>(id_to_token.size()); }

    /// Id of a token, unk for out-of-vocabulary.
    int id(const std::string& token) const;
    const std::string& token(int id) const;
    bool contains(const std::string& token) const { return token_to_id.count(token) != 0; }

    /// Rebuild from a full id-ordered token list (checkpoint load).
    static Vocab from_tokens(const std::vector<std::string>& tokens);
};

struct Dialogue {
    std::vector<std::string> turns;
};

/// Source is the encoded two-turn context, target the encoded next turn with
/// a trailing EOS.
struct TrainPair {
    TokenSeq source;
    TokenSeq target;
};

/// The two most recent turns seen by an acting agent: its own previous turn
/// (may be empty only for the very first response) and the other side's last
/// turn.
struct DialogueState {
    TokenSeq own_prev;
    TokenSeq other_last;

    /// Encoder input: own_prev, an EOS separator, then other_last; just
    /// other_last when own_prev is empty.
    TokenSeq to_source() const;
};

/// Keeps the `max_size - 4` most frequent tokens (ties broken
/// lexicographically); everything else maps to unk.
Vocab build_vocab(const std::vector<Dialogue>& dialogues, int max_size);

TokenSeq encode_tokens(const std::vector<std::string>& tokens, const Vocab& vocab);
TokenSeq encode_text(const std::string& text, const Vocab& vocab);

/// Textual form of a token sequence; reserved tokens are skipped.
std::string decode_tokens(const TokenSeq& seq, const Vocab& vocab);

/// One pair per turn t_i (i >= 1): source is the previous two turns joined by
/// an EOS separator (just the previous turn for i = 1), truncated from the
/// left to max_src_len; target is turn t_i plus EOS. Dialogues with fewer
/// than two turns contribute nothing.
std::vector<TrainPair> make_pairs(const std::vector<Dialogue>& dialogues, const Vocab& vocab,
                                  int max_src_len = 40);

/// Knobs of the synthetic dialogue generator. The defaults aim for the
/// pathologies the trained models are supposed to reproduce: frequent dull
/// answers, echo loops, and context-correlated informative answers.
struct SyntheticOptions {
    double dull_after_statement = 0.55;
    double dull_after_question = 0.33;
    double canonical_dull_share = 0.55;
    double composite_answer_prob = 0.33;
    double loop_prob = 0.10;
    int max_turns = 8;
};

/// Deterministic template-grammar corpus over a small vocabulary. Dialogues
/// open with a question, mostly alternate question/answer, and a controlled
/// fraction of turns is drawn from the dull list.
std::vector<Dialogue> gen_synthetic_corpus(std::uint64_t seed, int n_dialogues,
                                           const SyntheticOptions& opt = {});

/// The dull phrases baked into the synthetic generator and the default
/// reward configuration. The first entry is the canonical one used by the
/// starter filter.
const std::vector<std::string>& default_dull_phrases();

/// Scores every pair's source by the length-scaled log-likelihood of the
/// canonical dull phrase (dull.front()) as a response and keeps the
/// ceil(keep_fraction * n) sources with the lowest score, in input order.
std::vector<TokenSeq> filter_easy_starters(const std::vector<TrainPair>& pairs,
                                           const seq2seq::ModelParams& forward_model,
                                           const std::vector<TokenSeq>& dull,
                                           double keep_fraction);

// Corpus file format: one utterance per line, dialogues separated by a blank
// line, UTF-8.
std::vector<Dialogue> read_corpus_file(const std::string& path);
void write_corpus_file(const std::vector<Dialogue>& dialogues, const std::string& path);

/// One message per line (used for simulate / evaluate inputs).
std::vector<std::string> read_lines(const std::string& path);

} // namespace dialogue_rl::corpus
