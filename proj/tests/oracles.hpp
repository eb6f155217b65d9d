#pragma once

// Independent brute-force reference implementations used as test oracles.
// These deliberately avoid the library's algorithmic paths (forward-backward,
// token_agreement, the decode loop) and recompute everything the slow way.

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "dvote/answer.hpp"
#include "dvote/core.hpp"
#include "dvote/denoiser.hpp"
#include "dvote/markov.hpp"

namespace oracles {

using dvote::MarkovSpec;
using dvote::MaskedSequence;
using dvote::TokenId;

// Conditional marginals by enumerating every completion of the masked
// positions and normalizing joint chain probabilities. Exponential in the
// number of masks; callers keep L and V small.
inline std::map<std::size_t, std::vector<double>> brute_force_conditionals(
    const MarkovSpec& spec, const MaskedSequence& seq) {
    const std::size_t v = spec.initial.size();
    const std::size_t p_len = seq.prompt().size();
    const std::size_t total = p_len + seq.gen_len();

    std::vector<std::size_t> masked;
    for (std::size_t i = 0; i < seq.gen_len(); ++i) {
        if (seq.is_masked(i)) masked.push_back(i);
    }

    std::map<std::size_t, std::vector<double>> sums;
    for (std::size_t pos : masked) sums[pos] = std::vector<double>(v, 0.0);
    double total_prob = 0.0;

    std::vector<TokenId> fill(masked.size(), 0);
    while (true) {
        std::vector<TokenId> x(total);
        for (std::size_t k = 0; k < p_len; ++k) x[k] = seq.prompt()[k];
        for (std::size_t i = 0; i < seq.gen_len(); ++i) x[p_len + i] = seq.token(i);
        for (std::size_t m = 0; m < masked.size(); ++m) x[p_len + masked[m]] = fill[m];

        double prob = spec.initial[static_cast<std::size_t>(x[0])];
        for (std::size_t k = 1; k < total; ++k) {
            prob *= spec.transition[static_cast<std::size_t>(x[k - 1])]
                                   [static_cast<std::size_t>(x[k])];
        }
        total_prob += prob;
        for (std::size_t m = 0; m < masked.size(); ++m) {
            sums[masked[m]][static_cast<std::size_t>(fill[m])] += prob;
        }

        std::size_t digit = 0;
        while (digit < fill.size()) {
            if (++fill[digit] < static_cast<TokenId>(v)) break;
            fill[digit] = 0;
            ++digit;
        }
        if (digit == fill.size()) break;
        if (fill.empty()) break;
    }

    for (auto& [pos, row] : sums) {
        for (double& p : row) p /= total_prob;
    }
    return sums;
}

// Position-by-position counter for NUPR@k, structured differently from
// token_agreement (no modal bookkeeping, direct per-token counting).
inline double brute_nupr(const std::vector<std::vector<TokenId>>& samples, std::size_t k) {
    const std::size_t len = samples.front().size();
    std::size_t hits = 0;
    for (std::size_t pos = 0; pos < len; ++pos) {
        bool non_unique = false;
        for (std::size_t a = 0; a < samples.size() && !non_unique; ++a) {
            std::size_t same = 0;
            for (std::size_t b = 0; b < samples.size(); ++b) {
                same += (samples[b][pos] == samples[a][pos]);
            }
            non_unique = same >= k;
        }
        hits += non_unique;
    }
    return static_cast<double>(hits) / static_cast<double>(len);
}

// Modal-vote fraction recomputed with plain counting over rendered keys.
inline double brute_consistency_level(const std::vector<dvote::Answer>& answers) {
    std::size_t best = 0;
    for (std::size_t a = 0; a < answers.size(); ++a) {
        std::size_t same = 0;
        for (std::size_t b = 0; b < answers.size(); ++b) {
            const bool equal = answers[a].parseable == answers[b].parseable &&
                               (!answers[a].parseable || answers[a].value == answers[b].value);
            same += equal;
        }
        best = std::max(best, same);
    }
    return static_cast<double>(best) / static_cast<double>(answers.size());
}

// P(Binomial(n, p) >= m)
inline double binomial_tail(int n, double p, int m) {
    double total = 0.0;
    for (int j = m; j <= n; ++j) {
        double c = 1.0;
        for (int i = 0; i < j; ++i) c = c * (n - i) / (i + 1);
        total += c * std::pow(p, j) * std::pow(1.0 - p, n - j);
    }
    return total;
}

// Cyclic successor chain: token t moves to (t + 1) mod V with certainty.
// From a one-hot start the trajectory is fully forced, which makes every
// conditional one-hot — the deterministic test bed.
inline MarkovSpec cyclic_chain(std::int32_t vocab, TokenId start) {
    MarkovSpec spec;
    const std::size_t v = static_cast<std::size_t>(vocab);
    spec.initial.assign(v, 0.0);
    spec.initial[static_cast<std::size_t>(start)] = 1.0;
    spec.transition.assign(v, std::vector<double>(v, 0.0));
    for (std::size_t r = 0; r < v; ++r) spec.transition[r][(r + 1) % v] = 1.0;
    return spec;
}

}  // namespace oracles
