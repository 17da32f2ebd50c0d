#include "dialogue_rl/corpus.hpp"

#include "dialogue_rl/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dialogue_rl::corpus {

std::vector<TokenSeq> filter_easy_starters(const std::vector<TrainPair>& pairs,
                                           const seq2seq::ModelParams& forward_model,
                                           const std::vector<TokenSeq>& dull,
                                           double keep_fraction) {
    require(!dull.empty(), "filter_easy_starters: empty dull list");
    require(keep_fraction > 0.0 && keep_fraction <= 1.0,
            "filter_easy_starters: keep_fraction must be in (0,1]");
    if (pairs.empty()) {
        return {};
    }

    TokenSeq canonical = dull.front();
    require(!canonical.empty(), "filter_easy_starters: empty dull phrase");
    if (canonical.back() != Vocab::eos_id) {
        canonical.push_back(Vocab::eos_id);
    }

    const int n = static_cast<int>(pairs.size());
    std::vector<double> scores(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < n; ++i) {
        scores[static_cast<std::size_t>(i)] = seq2seq::sequence_log_prob(
            pairs[static_cast<std::size_t>(i)].source, canonical, forward_model, true);
    }

    const int keep = static_cast<int>(
        std::ceil(keep_fraction * static_cast<double>(n)));
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double sa = scores[static_cast<std::size_t>(a)];
        const double sb = scores[static_cast<std::size_t>(b)];
        if (sa != sb) {
            return sa < sb;
        }
        return a < b;
    });
    order.resize(static_cast<std::size_t>(std::min(keep, n)));
    std::sort(order.begin(), order.end());

    std::vector<TokenSeq> kept;
    kept.reserve(order.size());
    for (int idx : order) {
        kept.push_back(pairs[static_cast<std::size_t>(idx)].source);
    }
    return kept;
}

} // namespace dialogue_rl::corpus
