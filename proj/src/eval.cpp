#include "dialogue_rl/eval.hpp"

#include "dialogue_rl/mmi.hpp"

#include <cstdio>
#include <set>
#include <sstream>
#include <utility>

namespace dialogue_rl::eval {

using corpus::Vocab;

double distinct_n(const std::vector<TokenSeq>& responses, int n) {
    require(n == 1 || n == 2, "distinct_n: n must be 1 or 2");
    require(!responses.empty(), "distinct_n: empty response list");

    std::set<std::pair<int, int>> grams;
    long long total_tokens = 0;
    for (const TokenSeq& r : responses) {
        TokenSeq clean;
        for (int t : r) {
            if (t != Vocab::eos_id) {
                clean.push_back(t);
            }
        }
        total_tokens += static_cast<long long>(clean.size());
        if (n == 1) {
            for (int t : clean) {
                grams.emplace(t, -1);
            }
        } else {
            for (std::size_t i = 0; i + 1 < clean.size(); ++i) {
                grams.emplace(clean[i], clean[i + 1]);
            }
        }
    }
    if (total_tokens == 0) {
        return 0.0;
    }
    return static_cast<double>(grams.size()) / static_cast<double>(total_tokens);
}

simulator::Responder make_responder(const EvalPolicy& policy) {
    require(policy.params != nullptr, "make_responder: missing model");
    const EvalPolicy p = policy;
    return [p](const corpus::DialogueState& state) -> TokenSeq {
        seq2seq::GenOptions gen;
        gen.min_len = 1;
        auto nbest = seq2seq::beam_search(state.to_source(), p.beam_width, p.max_len, *p.params,
                                          gen);
        require(!nbest.empty(), "eval responder: empty beam result");
        if (p.rerank_bwd != nullptr) {
            const seq2seq::ModelParams* fwd = p.rerank_fwd != nullptr ? p.rerank_fwd : p.params;
            nbest = mmi::rerank_nbest(nbest, state, *fwd, *p.rerank_bwd);
        }
        return nbest.front().tokens;
    };
}

double avg_dialogue_length(const simulator::Responder& responder,
                           const std::vector<TokenSeq>& inputs, const rewards::DullList& dull,
                           int max_turns) {
    require(!inputs.empty(), "avg_dialogue_length: empty inputs");
    const int n = static_cast<int>(inputs.size());
    std::vector<int> counted(static_cast<std::size_t>(n), 0);
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) {
        const auto d = simulator::run_eval_dialogue(responder, inputs[static_cast<std::size_t>(i)],
                                                    dull, max_turns);
        counted[static_cast<std::size_t>(i)] = d.counted_turns;
    }
    long long total = 0;
    for (int c : counted) {
        total += c;
    }
    return static_cast<double>(total) / static_cast<double>(n);
}

double avg_dialogue_length(const EvalPolicy& policy, const std::vector<TokenSeq>& inputs,
                           const rewards::DullList& dull, int max_turns) {
    return avg_dialogue_length(make_responder(policy), inputs, dull, max_turns);
}

std::vector<TokenSeq> first_responses(const EvalPolicy& policy,
                                      const std::vector<TokenSeq>& inputs) {
    const simulator::Responder responder = make_responder(policy);
    const int n = static_cast<int>(inputs.size());
    std::vector<TokenSeq> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) {
        corpus::DialogueState state;
        state.other_last = inputs[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(i)] = responder(state);
    }
    return out;
}

std::vector<EvalReport> compare_models(const std::vector<NamedModel>& models,
                                       const std::vector<TokenSeq>& inputs,
                                       const rewards::DullList& dull, int max_turns) {
    require(!models.empty(), "compare_models: no models");
    for (const NamedModel& m : models) {
        require(m.policy.params != nullptr, "compare_models: missing model params");
        require(m.policy.params->vocab_size == models.front().policy.params->vocab_size,
                "compare_models: vocab mismatch across models");
    }

    std::vector<EvalReport> reports;
    for (const NamedModel& m : models) {
        EvalReport r;
        r.model_id = m.id;
        r.n_inputs = static_cast<int>(inputs.size());
        r.mean_turns = avg_dialogue_length(m.policy, inputs, dull, max_turns);
        const auto responses = first_responses(m.policy, inputs);
        r.distinct1 = distinct_n(responses, 1);
        r.distinct2 = distinct_n(responses, 2);
        reports.push_back(std::move(r));
    }
    return reports;
}

std::string format_reports(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    out << "model            mean_turns  distinct1  distinct2  n_inputs\n";
    for (const EvalReport& r : reports) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-16s %10.3f %10.4f %10.4f %9d\n", r.model_id.c_str(),
                      r.mean_turns, r.distinct1, r.distinct2, r.n_inputs);
        out << line;
    }
    for (const EvalReport& r : reports) {
        char line[200];
        std::snprintf(line, sizeof(line),
                      "model=%s mean_turns=%.6f distinct1=%.6f distinct2=%.6f n_inputs=%d\n",
                      r.model_id.c_str(), r.mean_turns, r.distinct1, r.distinct2, r.n_inputs);
        out << line;
    }
    return out.str();
}

} // namespace dialogue_rl::eval
