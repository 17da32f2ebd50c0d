#include "dialogue_rl/simulator.hpp"

#include "dialogue_rl/mmi.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace dialogue_rl::simulator {

using corpus::Vocab;
using rewards::strip_eos;

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::none: return "none";
        case Termination::dull: return "dull";
        case Termination::repetition: return "repetition";
        case Termination::max_turns: return "max_turns";
    }
    return "unknown";
}

bool is_dull(const TokenSeq& u, const rewards::DullList& dull) {
    const TokenSeq stripped = strip_eos(u);
    for (const TokenSeq& phrase : dull.phrases) {
        if (stripped == strip_eos(phrase)) {
            return true;
        }
    }
    return false;
}

double overlap_ratio(const TokenSeq& u1, const TokenSeq& u2) {
    std::set<int> s1;
    std::set<int> s2;
    for (int t : u1) {
        if (t != Vocab::eos_id) {
            s1.insert(t);
        }
    }
    for (int t : u2) {
        if (t != Vocab::eos_id) {
            s2.insert(t);
        }
    }
    require(!s1.empty() && !s2.empty(), "overlap_ratio: empty utterance");

    std::size_t shared = 0;
    for (int t : s1) {
        shared += s2.count(t);
    }
    return static_cast<double>(shared) /
           static_cast<double>(std::min(s1.size(), s2.size()));
}

std::optional<Termination> should_terminate(const SimulatedDialogue& history,
                                            const rewards::DullList& dull, int max_turns) {
    if (history.turns.empty()) {
        return std::nullopt;
    }
    const Turn& last = history.turns.back();
    if (is_dull(last.tokens, dull)) {
        return Termination::dull;
    }

    // Same agent's previous utterance: two turns back, or the initial
    // message for the second responder's first turn.
    const std::size_t j = history.turns.size() - 1;
    const TokenSeq* prev_same = nullptr;
    if (j >= 2) {
        prev_same = &history.turns[j - 2].tokens;
    } else if (j == 1) {
        prev_same = &history.initial_message;
    }
    if (prev_same != nullptr && !prev_same->empty() &&
        overlap_ratio(strip_eos(last.tokens), strip_eos(*prev_same)) > 0.8) {
        return Termination::repetition;
    }

    if (max_turns > 0 && static_cast<int>(history.turns.size()) >= max_turns) {
        return Termination::max_turns;
    }
    return std::nullopt;
}

namespace {

DialogueState next_state(const SimulatedDialogue& d) {
    DialogueState state;
    const std::size_t j = d.turns.size();
    if (j == 0) {
        state.other_last = d.initial_message;
    } else if (j == 1) {
        state.own_prev = d.initial_message;
        state.other_last = strip_eos(d.turns[0].tokens);
    } else {
        state.own_prev = strip_eos(d.turns[j - 2].tokens);
        state.other_last = strip_eos(d.turns[j - 1].tokens);
    }
    return state;
}

struct TreeWalker {
    const seq2seq::ModelParams& policy;
    const rewards::RewardContext& reward_ctx;
    const SimulateOptions& opt;
    Rng rng;
    SimulateResult result;

    void expand(SimulatedDialogue& dialogue) {
        if (static_cast<int>(result.dialogues.size()) >= opt.branch_budget) {
            return;
        }
        const DialogueState state = next_state(dialogue);
        const TokenSeq source = state.to_source();
        const int agent = static_cast<int>(dialogue.turns.size()) % 2 == 0 ? 1 : 2;

        struct Candidate {
            TokenSeq tokens;
            double log_prob;
        };
        std::vector<Candidate> candidates;
        if (opt.mode == GenMode::beam) {
            seq2seq::GenOptions gen;
            gen.min_len = 1;
            const auto nbest = seq2seq::beam_search(
                source, std::max(opt.candidates_per_step, 1), opt.max_len, policy, gen);
            for (const auto& hyp : nbest) {
                candidates.push_back({hyp.tokens, hyp.log_prob});
            }
        } else {
            seq2seq::GenOptions gen;
            gen.min_len = 1;
            gen.force_eos = true;
            for (int k = 0; k < opt.candidates_per_step; ++k) {
                auto s = seq2seq::sample(source, opt.temperature, opt.max_len, policy, rng, gen);
                candidates.push_back({std::move(s.tokens), s.log_prob});
            }
            std::stable_sort(candidates.begin(), candidates.end(),
                             [](const Candidate& a, const Candidate& b) {
                                 return a.log_prob > b.log_prob;
                             });
        }

        for (const Candidate& cand : candidates) {
            if (static_cast<int>(result.dialogues.size()) >= opt.branch_budget) {
                break;
            }
            ++result.generated_turns;

            Turn turn;
            turn.agent = agent;
            turn.tokens = cand.tokens;
            turn.log_prob = cand.log_prob;
            turn.state = state;
            if (opt.compute_rewards) {
                turn.reward = rewards::combined_reward(cand.tokens, state, reward_ctx);
            }

            dialogue.turns.push_back(std::move(turn));
            const auto term = should_terminate(dialogue, reward_ctx.dull, opt.max_turns);
            if (term.has_value()) {
                dialogue.termination = *term;
                result.dialogues.push_back(dialogue);
                dialogue.termination = Termination::none;
            } else {
                expand(dialogue);
            }
            dialogue.turns.pop_back();
        }
    }
};

} // namespace

SimulateResult simulate(const TokenSeq& initial, const seq2seq::ModelParams& policy,
                        const rewards::RewardContext& reward_ctx, const SimulateOptions& opt) {
    require(opt.max_turns >= 1, "simulate: max_turns must be >= 1");
    require(opt.candidates_per_step >= 1, "simulate: candidates_per_step must be >= 1");
    require(opt.branch_budget >= 1, "simulate: branch_budget must be >= 1");
    require(!initial.empty(), "simulate: empty initial message");

    TreeWalker walker{policy, reward_ctx, opt, Rng(derive_rng(opt.seed, 0x51Dull)), {}};
    SimulatedDialogue root;
    root.initial_message = initial;
    walker.expand(root);
    return std::move(walker.result);
}

EvalDialogue run_eval_dialogue(const Responder& responder, const TokenSeq& initial,
                               const rewards::DullList& dull, int max_turns) {
    require(max_turns >= 1, "run_eval_dialogue: max_turns must be >= 1");
    require(!initial.empty(), "run_eval_dialogue: empty initial message");

    SimulatedDialogue sim;
    sim.initial_message = initial;
    EvalDialogue out;

    for (int i = 0; i < max_turns; ++i) {
        const DialogueState state = next_state(sim);
        Turn turn;
        turn.agent = i % 2 == 0 ? 1 : 2;
        turn.tokens = responder(state);
        require(!turn.tokens.empty(), "run_eval_dialogue: responder returned empty turn");
        sim.turns.push_back(std::move(turn));

        const auto term = should_terminate(sim, dull, max_turns);
        if (term.has_value()) {
            out.termination = *term;
            break;
        }
    }

    for (const Turn& t : sim.turns) {
        out.turns.push_back(t.tokens);
    }
    out.counted_turns = static_cast<int>(out.turns.size());
    if (out.termination == Termination::dull || out.termination == Termination::repetition) {
        --out.counted_turns;
    }
    return out;
}

std::string format_transcript(const SimulatedDialogue& d, const corpus::Vocab& vocab,
                              int branch_id) {
    std::ostringstream out;
    out << "A: " << corpus::decode_tokens(d.initial_message, vocab) << "\n";
    for (const Turn& t : d.turns) {
        out << (t.agent == 1 ? "B: " : "A: ") << corpus::decode_tokens(t.tokens, vocab) << "\n";
    }
    out << "# branch " << branch_id << " termination=" << termination_name(d.termination) << "\n";
    return out.str();
}

} // namespace dialogue_rl::simulator
