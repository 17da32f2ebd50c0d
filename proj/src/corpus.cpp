#include "dialogue_rl/corpus.hpp"

#include "dialogue_rl/matrix.hpp"
#include "dialogue_rl/rng.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <stdexcept>

namespace dialogue_rl::corpus {

namespace {

bool is_word_char(unsigned char c) {
    // Apostrophe stays inside words ("don't"); any other punctuation splits.
    return !std::ispunct(c) || c == '\'';
}

const char* kReservedTokens[] = {"<pad>", "<bos>", "<eos>", "<unk>"};

} // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    };
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            flush();
        } else if (!is_word_char(c)) {
            flush();
            out.emplace_back(1, static_cast<char>(c));
        } else {
            cur.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    return out;
}

std::string detokenize(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) {
            out.push_back(' ');
        }
        out += tokens[i];
    }
    return out;
}

int Vocab::id(const std::string& token) const {
    auto it = token_to_id.find(token);
    return it == token_to_id.end() ? unk_id : it->second;
}

const std::string& Vocab::token(int id) const {
    require(id >= 0 && id < size(), "Vocab::token: id out of range");
    return id_to_token[static_cast<std::size_t>(id)];
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens) {
    require(static_cast<int>(tokens.size()) >= reserved_count, "Vocab: token list too short");
    for (int i = 0; i < reserved_count; ++i) {
        require(tokens[static_cast<std::size_t>(i)] == kReservedTokens[i],
                "Vocab: reserved token mismatch");
    }
    Vocab v;
    v.id_to_token = tokens;
    for (int i = 0; i < v.size(); ++i) {
        v.token_to_id.emplace(v.id_to_token[static_cast<std::size_t>(i)], i);
    }
    return v;
}

Vocab build_vocab(const std::vector<Dialogue>& dialogues, int max_size) {
    require(max_size > Vocab::reserved_count, "build_vocab: max_size must exceed reserved ids");
    require(!dialogues.empty(), "build_vocab: empty corpus");

    // std::map keeps candidate iteration lexicographic, which settles ties.
    std::map<std::string, long long> freq;
    for (const Dialogue& d : dialogues) {
        for (const std::string& turn : d.turns) {
            for (const std::string& tok : tokenize(turn)) {
                ++freq[tok];
            }
        }
    }

    std::vector<std::pair<std::string, long long>> items(freq.begin(), freq.end());
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    Vocab v;
    for (const char* t : kReservedTokens) {
        v.id_to_token.emplace_back(t);
    }
    const std::size_t budget = static_cast<std::size_t>(max_size - Vocab::reserved_count);
    for (std::size_t i = 0; i < items.size() && i < budget; ++i) {
        v.id_to_token.push_back(items[i].first);
    }
    for (int i = 0; i < v.size(); ++i) {
        v.token_to_id.emplace(v.id_to_token[static_cast<std::size_t>(i)], i);
    }
    return v;
}

TokenSeq encode_tokens(const std::vector<std::string>& tokens, const Vocab& vocab) {
    TokenSeq seq;
    seq.reserve(tokens.size());
    for (const std::string& t : tokens) {
        seq.push_back(vocab.id(t));
    }
    return seq;
}

TokenSeq encode_text(const std::string& text, const Vocab& vocab) {
    return encode_tokens(tokenize(text), vocab);
}

std::string decode_tokens(const TokenSeq& seq, const Vocab& vocab) {
    std::vector<std::string> toks;
    for (int id : seq) {
        if (id >= Vocab::reserved_count) {
            toks.push_back(vocab.token(id));
        } else if (id == Vocab::unk_id) {
            toks.emplace_back("<unk>");
        }
    }
    return detokenize(toks);
}

TokenSeq DialogueState::to_source() const {
    if (own_prev.empty()) {
        return other_last;
    }
    TokenSeq src = own_prev;
    src.push_back(Vocab::eos_id);
    src.insert(src.end(), other_last.begin(), other_last.end());
    return src;
}

std::vector<TrainPair> make_pairs(const std::vector<Dialogue>& dialogues, const Vocab& vocab,
                                  int max_src_len) {
    require(max_src_len > 0, "make_pairs: max_src_len must be positive");
    std::vector<TrainPair> pairs;
    for (const Dialogue& d : dialogues) {
        if (d.turns.size() < 2) {
            continue;
        }
        std::vector<TokenSeq> encoded;
        encoded.reserve(d.turns.size());
        for (const std::string& turn : d.turns) {
            encoded.push_back(encode_text(turn, vocab));
        }
        for (std::size_t i = 1; i < encoded.size(); ++i) {
            TrainPair p;
            if (i >= 2) {
                p.source = encoded[i - 2];
                p.source.push_back(Vocab::eos_id);
            }
            p.source.insert(p.source.end(), encoded[i - 1].begin(), encoded[i - 1].end());
            if (static_cast<int>(p.source.size()) > max_src_len) {
                p.source.erase(p.source.begin(),
                               p.source.end() - max_src_len);
            }
            p.target = encoded[i];
            p.target.push_back(Vocab::eos_id);
            pairs.push_back(std::move(p));
        }
    }
    return pairs;
}

// ---------------------------------------------------------------------------
// Synthetic corpus grammar
// ---------------------------------------------------------------------------

namespace {

struct Topic {
    std::vector<const char*> questions;
    std::vector<const char*> answers;
    const char* follow_question;
    std::vector<const char*> follow_answers;
};

const std::vector<Topic>& topics() {
    static const std::vector<Topic> t = {
        {{"where are you going ?", "where are you going today ?", "where are you headed ?"},
         {"i am going to the market", "i am going to the station", "i am going to the library",
          "i am going home"},
         "why are you going there ?",
         {"i need to buy some food", "i am meeting a friend", "i want to read a book"}},
        {{"how old are you ?", "how old are you now ?"},
         {"i am sixteen", "i am twenty", "i am thirty"},
         "when is your birthday ?",
         {"my birthday is in june", "my birthday is in october"}},
        {{"what is your name ?", "who are you ?"},
         {"my name is daniel", "my name is alice", "my name is john"},
         "where does your family live ?",
         {"my family lives in the city", "my family lives near the sea"}},
        {{"what is your favorite food ?", "what do you like to eat ?"},
         {"i love rice and fish", "i love fresh bread", "i love hot soup"},
         "can you cook it ?",
         {"yes i cook every day", "no but my mother can"}},
        {{"what do you do for work ?", "where do you work ?"},
         {"i work at the school", "i work at the hospital", "i drive a truck"},
         "do you like your job ?",
         {"yes i like it a lot", "it is hard but fine"}},
        {{"how is the weather today ?", "is it cold outside ?"},
         {"it is sunny and warm", "it is raining again", "it is very cold"},
         "will it change tomorrow ?",
         {"i think it will clear up", "i hope it gets better"}},
        {{"do you like music ?", "what music do you play ?"},
         {"i play the guitar", "i sing old songs", "i listen to the radio"},
         "can you play for me ?",
         {"yes i can play tonight", "maybe another time"}},
        {{"do you play football ?", "what sport do you play ?"},
         {"i play football every week", "i prefer tennis", "i run in the park"},
         "is your team any good ?",
         {"we win most games", "we lost last time"}},
        {{"what are you doing tonight ?", "any plans for tonight ?"},
         {"i am watching a movie", "i am cooking dinner", "i am staying home"},
         "can i join you ?",
         {"yes please come over", "sorry not tonight"}},
        {{"how are you feeling ?", "are you all right ?"},
         {"i am feeling great", "i am a little tired", "i feel much better"},
         "what happened to you ?",
         {"i had a long day", "i did not sleep well"}},
    };
    return t;
}

const std::vector<const char*>& opener_prefixes() {
    static const std::vector<const char*> p = {"hey", "so", "well", "listen"};
    return p;
}

const std::vector<const char*>& loop_lines() {
    static const std::vector<const char*> l = {"see you later", "good bye", "ok then"};
    return l;
}

const char* kWhyAskTail = "why do you ask ?";
const char* kAboutYouTail = "what about you ?";

const std::vector<const char*>& why_ask_answers() {
    static const std::vector<const char*> a = {"i am just curious", "no real reason"};
    return a;
}

std::string pick_dull(Rng& rng, double canonical_share) {
    const auto& dull = default_dull_phrases();
    const double r = rng.uniform01();
    if (r < canonical_share) {
        return dull[0];
    }
    if (r < canonical_share + 0.15) {
        return dull[2]; // "i don't know"
    }
    // remaining mass uniform over the other six
    static const int others[] = {1, 3, 4, 5, 6, 7};
    return dull[others[rng.below(6)]];
}

// Answers correlate with the question variant so context-sensitive decoding
// has something to pick up on.
std::string pick_answer(const Topic& t, int variant, Rng& rng) {
    const int n = static_cast<int>(t.answers.size());
    if (rng.uniform01() < 0.55) {
        return t.answers[static_cast<std::size_t>(variant % n)];
    }
    return t.answers[rng.below(static_cast<std::uint32_t>(n))];
}

} // namespace

const std::vector<std::string>& default_dull_phrases() {
    static const std::vector<std::string> phrases = {
        "i don't know what you are talking about",
        "i have no idea",
        "i don't know",
        "i don't know what you mean",
        "you don't know what you are saying",
        "i'm not sure",
        "i can't help you",
        "you know what i mean",
    };
    return phrases;
}

std::vector<Dialogue> gen_synthetic_corpus(std::uint64_t seed, int n_dialogues,
                                           const SyntheticOptions& opt) {
    require(n_dialogues > 0, "gen_synthetic_corpus: n_dialogues must be positive");

    std::vector<Dialogue> out;
    out.reserve(static_cast<std::size_t>(n_dialogues));

    for (int di = 0; di < n_dialogues; ++di) {
        Rng rng = derive_rng(seed, static_cast<std::uint64_t>(di));
        Dialogue d;

        const int topic_idx = static_cast<int>(rng.below(static_cast<std::uint32_t>(topics().size())));
        const Topic* topic = &topics()[static_cast<std::size_t>(topic_idx)];
        int variant = static_cast<int>(rng.below(static_cast<std::uint32_t>(topic->questions.size())));

        std::string opener = topic->questions[static_cast<std::size_t>(variant)];
        if (rng.uniform01() < 0.35) {
            opener = std::string(opener_prefixes()[rng.below(4)]) + " " + opener;
        }
        d.turns.push_back(opener);

        // What the next speaker is facing.
        enum class Pending { answer_topic, answer_follow, answer_why, react };
        Pending pending = Pending::answer_topic;
        bool ended = false;

        while (!ended && static_cast<int>(d.turns.size()) < opt.max_turns) {
            switch (pending) {
                case Pending::answer_topic: {
                    if (rng.uniform01() < opt.dull_after_question) {
                        d.turns.push_back(pick_dull(rng, opt.canonical_dull_share));
                        if (rng.uniform01() < 0.4 && static_cast<int>(d.turns.size()) < opt.max_turns) {
                            d.turns.push_back(default_dull_phrases()[4]);
                        }
                        ended = true;
                        break;
                    }
                    std::string ans = pick_answer(*topic, variant, rng);
                    if (rng.uniform01() < opt.composite_answer_prob) {
                        const double r = rng.uniform01();
                        if (r < 0.4) {
                            ans += " . ";
                            ans += topic->follow_question;
                            pending = Pending::answer_follow;
                        } else if (r < 0.7) {
                            ans += " . ";
                            ans += kAboutYouTail;
                            variant = static_cast<int>(
                                rng.below(static_cast<std::uint32_t>(topic->questions.size())));
                            pending = Pending::answer_topic;
                        } else {
                            ans += " . ";
                            ans += kWhyAskTail;
                            pending = Pending::answer_why;
                        }
                    } else {
                        pending = Pending::react;
                    }
                    d.turns.push_back(ans);
                    break;
                }
                case Pending::answer_follow: {
                    if (rng.uniform01() < opt.dull_after_question) {
                        d.turns.push_back(pick_dull(rng, opt.canonical_dull_share));
                        ended = true;
                        break;
                    }
                    d.turns.push_back(topic->follow_answers[rng.below(
                        static_cast<std::uint32_t>(topic->follow_answers.size()))]);
                    pending = Pending::react;
                    break;
                }
                case Pending::answer_why: {
                    d.turns.push_back(why_ask_answers()[rng.below(2)]);
                    pending = Pending::react;
                    break;
                }
                case Pending::react: {
                    const double r = rng.uniform01();
                    if (r < opt.dull_after_statement) {
                        d.turns.push_back(pick_dull(rng, opt.canonical_dull_share));
                        if (rng.uniform01() < 0.4 && static_cast<int>(d.turns.size()) < opt.max_turns) {
                            d.turns.push_back(default_dull_phrases()[4]);
                        }
                        ended = true;
                    } else if (r < opt.dull_after_statement + opt.loop_prob) {
                        const char* line = loop_lines()[rng.below(3)];
                        const int reps = 3 + static_cast<int>(rng.below(2));
                        for (int k = 0; k < reps && static_cast<int>(d.turns.size()) < opt.max_turns;
                             ++k) {
                            d.turns.push_back(line);
                        }
                        ended = true;
                    } else if (r < opt.dull_after_statement + opt.loop_prob + 0.20) {
                        d.turns.push_back(topic->follow_question);
                        pending = Pending::answer_follow;
                    } else {
                        // topic shift
                        const int nt = static_cast<int>(rng.below(
                            static_cast<std::uint32_t>(topics().size())));
                        topic = &topics()[static_cast<std::size_t>(nt)];
                        variant = static_cast<int>(
                            rng.below(static_cast<std::uint32_t>(topic->questions.size())));
                        d.turns.push_back(topic->questions[static_cast<std::size_t>(variant)]);
                        pending = Pending::answer_topic;
                    }
                    break;
                }
            }
        }

        if (d.turns.size() < 2) {
            d.turns.push_back(pick_answer(*topic, variant, rng));
        }
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<Dialogue> read_corpus_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open corpus file: " + path);
    }
    std::vector<Dialogue> dialogues;
    Dialogue cur;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            if (!cur.turns.empty()) {
                dialogues.push_back(std::move(cur));
                cur = Dialogue{};
            }
        } else {
            cur.turns.push_back(line);
        }
    }
    if (!cur.turns.empty()) {
        dialogues.push_back(std::move(cur));
    }
    return dialogues;
}

void write_corpus_file(const std::vector<Dialogue>& dialogues, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write corpus file: " + path);
    }
    for (std::size_t i = 0; i < dialogues.size(); ++i) {
        if (i > 0) {
            out << "\n";
        }
        for (const std::string& turn : dialogues[i].turns) {
            out << turn << "\n";
        }
    }
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open file: " + path);
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            lines.push_back(line);
        }
    }
    return lines;
}

} // namespace dialogue_rl::corpus
