#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dvote/answer.hpp"
#include "dvote/core.hpp"
#include "dvote/errors.hpp"

namespace dvote {

// Completed generations collected for one prompt, with their extracted
// answers. All samples share the generation length and vocabulary.
struct SampleSet {
    std::vector<std::vector<TokenId>> samples;
    std::vector<Answer> answers;

    std::size_t count() const { return samples.size(); }

    std::size_t gen_len() const {
        return samples.empty() ? 0 : samples.front().size();
    }

    void validate() const {
        if (samples.size() != answers.size())
            throw DomainError("SampleSet: answers must parallel samples");
        for (const auto& s : samples) {
            if (s.size() != gen_len()) throw DomainError("SampleSet: samples differ in length");
            for (TokenId t : s) {
                if (t < 0) throw DomainError("SampleSet: sample is not fully committed");
            }
        }
    }
};

// Thresholds for the cross-sample agreement rules. tau_frac and min_agree
// quantify "agreement across samples" for token retention, tau_ans quantifies
// answer dominance for the answer-clause retention, c_stop is the
// answer-convergence stop (0 disables it), and k is the default NUPR order.
struct ConsistencyParams {
    double tau_frac = 0.5;
    std::size_t min_agree = 2;
    std::size_t k = 2;
    std::size_t c_stop = 2;  // 0 disables the answer stop
    double tau_ans = 0.5;
    bool count_only_stop = false;  // relax the strict-majority requirement

    void validate() const {
        if (!(tau_frac > 0.0) || tau_frac > 1.0) throw ConfigError("tau_frac must be in (0, 1]");
        if (min_agree < 2) throw ConfigError("min_agree must be >= 2");
        if (k < 1) throw ConfigError("k must be >= 1");
        if (c_stop == 1) throw ConfigError("c_stop must be >= 2 (or 0 to disable)");
        if (!(tau_ans > 0.0) || tau_ans > 1.0) throw ConfigError("tau_ans must be in (0, 1]");
    }
};

struct PositionAgreement {
    TokenId modal = 0;
    std::size_t count = 0;
};

// Most frequent token and its count at every position; ties go to the lowest
// token id, so the result is independent of sample order.
inline std::vector<PositionAgreement> token_agreement(const SampleSet& set) {
    if (set.count() == 0) throw DomainError("token_agreement: need >= 1 sample");
    const std::size_t len = set.gen_len();
    std::vector<PositionAgreement> out(len);
    std::map<TokenId, std::size_t> counts;
    for (std::size_t i = 0; i < len; ++i) {
        counts.clear();
        for (const auto& sample : set.samples) ++counts[sample[i]];
        PositionAgreement best{0, 0};
        for (const auto& [tok, count] : counts) {
            if (count > best.count) best = {tok, count};  // ascending keys keep lowest id on ties
        }
        out[i] = best;
    }
    return out;
}

// Fraction of positions where at least k of the K samples share a token.
inline double nupr_at_k(const SampleSet& set, std::size_t k) {
    if (k < 1 || k > set.count()) throw DomainError("nupr_at_k: k must be in [1, K]");
    const auto agreement = token_agreement(set);
    std::size_t hits = 0;
    for (const auto& a : agreement) hits += (a.count >= k);
    return static_cast<double>(hits) / static_cast<double>(agreement.size());
}

// Fraction of votes received by the most frequent answer. Unparseable
// answers participate as one distinct value.
inline double voting_consistency_level(std::span<const Answer> answers) {
    if (answers.empty()) throw DomainError("voting_consistency_level: need >= 1 answer");
    std::map<std::string, std::size_t> counts;
    for (const Answer& a : answers) {
        ++counts[a.parseable ? "=" + a.value : std::string("!")];
    }
    std::size_t best = 0;
    for (const auto& [key, count] : counts) best = std::max(best, count);
    return static_cast<double>(best) / static_cast<double>(answers.size());
}

namespace detail {

struct ModalAnswer {
    std::string value;
    std::size_t count = 0;  // 0 when no parseable answer exists
};

// Modal parseable answer, ties to the lexicographically smallest value.
inline ModalAnswer modal_parseable(std::span<const Answer> answers) {
    std::map<std::string, std::size_t> counts;
    for (const Answer& a : answers) {
        if (a.parseable) ++counts[a.value];
    }
    ModalAnswer best;
    for (const auto& [value, count] : counts) {
        if (count > best.count) best = {value, count};
    }
    return best;
}

}  // namespace detail

// The remask mask m: m[i] = true means position i is regenerated in the next
// sample, false means the modal token is retained. A position is retained
// when its modal count reaches max(min_agree, ceil(tau_frac * K)); when the
// modal parseable answer dominates (count >= ceil(tau_ans * K) and a strict
// majority of samples, K >= 2), positions where all of that answer's samples
// agree are retained as well.
inline std::vector<bool> compute_remask_mask(const SampleSet& set, const ConsistencyParams& params) {
    if (set.count() == 0) throw DomainError("compute_remask_mask: need >= 1 prior sample");
    set.validate();
    const std::size_t bigk = set.count();
    const std::size_t len = set.gen_len();
    const auto agreement = token_agreement(set);

    const std::size_t frac_threshold =
        static_cast<std::size_t>(std::ceil(params.tau_frac * static_cast<double>(bigk)));
    const std::size_t threshold = std::max(params.min_agree, frac_threshold);

    std::vector<bool> remask(len, true);
    for (std::size_t i = 0; i < len; ++i) {
        if (agreement[i].count >= threshold) remask[i] = false;
    }

    const auto modal = detail::modal_parseable(set.answers);
    const std::size_t ans_threshold =
        static_cast<std::size_t>(std::ceil(params.tau_ans * static_cast<double>(bigk)));
    if (bigk >= 2 && modal.count >= ans_threshold && 2 * modal.count > bigk) {
        std::vector<std::size_t> modal_samples;
        for (std::size_t s = 0; s < bigk; ++s) {
            if (set.answers[s].parseable && set.answers[s].value == modal.value) {
                modal_samples.push_back(s);
            }
        }
        for (std::size_t i = 0; i < len; ++i) {
            if (!remask[i]) continue;
            const TokenId first = set.samples[modal_samples.front()][i];
            bool agree = true;
            for (std::size_t s : modal_samples) {
                if (set.samples[s][i] != first) {
                    agree = false;
                    break;
                }
            }
            if (agree) remask[i] = false;
        }
    }
    return remask;
}

// True once the modal parseable answer has count >= c_stop and (unless
// relaxed) a strict majority of the collected samples.
inline bool check_answer_stop(std::span<const Answer> answers, const ConsistencyParams& params) {
    if (params.c_stop == 0) return false;
    const auto modal = detail::modal_parseable(answers);
    if (modal.count < params.c_stop) return false;
    if (!params.count_only_stop && 2 * modal.count <= answers.size()) return false;
    return true;
}

// True when cross-sample agreement leaves nothing to remask.
inline bool check_token_stop(const SampleSet& set, const ConsistencyParams& params) {
    if (set.count() < 2) throw DomainError("check_token_stop: need >= 2 samples");
    const auto mask = compute_remask_mask(set, params);
    for (bool m : mask) {
        if (m) return false;
    }
    return true;
}

}  // namespace dvote
