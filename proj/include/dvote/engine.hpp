#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dvote/answer.hpp"
#include "dvote/consistency.hpp"
#include "dvote/core.hpp"
#include "dvote/decode.hpp"
#include "dvote/denoiser.hpp"
#include "dvote/log.hpp"
#include "dvote/rng.hpp"

namespace dvote {

enum class StopReason { answer_converged, token_converged, budget_exhausted };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::answer_converged: return "answer_converged";
        case StopReason::token_converged: return "token_converged";
        case StopReason::budget_exhausted: return "budget_exhausted";
    }
    return "unknown";
}

struct RunResult {
    Answer final_answer;
    std::size_t samples_used = 0;
    StepLedger steps;
    std::vector<Answer> per_sample_answers;
    StopReason stop_reason = StopReason::budget_exhausted;
    std::vector<std::vector<bool>> m_history;  // one mask per iteration with priors
    std::vector<std::vector<TokenId>> samples;  // the completed generations (X_all)

    bool operator==(const RunResult& other) const {
        return final_answer == other.final_answer && samples_used == other.samples_used &&
               steps == other.steps && per_sample_answers == other.per_sample_answers &&
               stop_reason == other.stop_reason && m_history == other.m_history &&
               samples == other.samples;
    }
};

// The dVoting loop: sample, analyze cross-sample consistency, remask the
// uncertain positions, resample, and stop early once the answers converge or
// no position needs remasking; the final prediction is the majority vote over
// everything collected. The first iteration has no priors and decodes a fully
// masked sequence. Sample i draws from its own generator seeded with
// seed ^ splitmix64(i), so any sample is reproducible in isolation.
inline RunResult dvoting_run(const std::vector<TokenId>& prompt,
                             const GenerationConfig& cfg,
                             const ConsistencyParams& cparams,
                             const Denoiser& denoiser,
                             const BlockSchedule& schedule,
                             const ExtractorSpec& extractor) {
    cfg.validate();
    cparams.validate();

    RunResult result;
    SampleSet collected;
    result.stop_reason = StopReason::budget_exhausted;

    for (std::size_t i = 1; i <= cfg.max_samples; ++i) {
        MaskedSequence seq(prompt, cfg.gen_len);
        if (!collected.samples.empty()) {
            const std::vector<bool> m = compute_remask_mask(collected, cparams);
            result.m_history.push_back(m);
            if (check_answer_stop(collected.answers, cparams)) {
                result.stop_reason = StopReason::answer_converged;
                break;
            }
            bool any_remask = false;
            const auto agreement = token_agreement(collected);
            for (std::size_t pos = 0; pos < cfg.gen_len; ++pos) {
                if (m[pos]) {
                    any_remask = true;
                } else {
                    seq.commit(pos, agreement[pos].modal);
                }
            }
            if (!any_remask) {
                result.stop_reason = StopReason::token_converged;
                break;
            }
        }

        Rng rng(derive_seed(cfg.seed, i));
        result.steps.start_sample();
        try {
            decode_sequence(seq, schedule, cfg, denoiser, rng, result.steps);
        } catch (const DenoiserError& e) {
            log_warn("sample " + std::to_string(i) + " discarded: " + e.what());
            continue;
        }
        collected.samples.push_back(seq.gen());
        collected.answers.push_back(extract_answer(seq.gen(), extractor));
    }

    if (collected.samples.empty()) {
        throw DenoiserError("dvoting_run: no sample completed successfully");
    }
    result.samples_used = collected.samples.size();
    result.per_sample_answers = collected.answers;
    result.samples = collected.samples;
    result.final_answer = majority_vote(collected.answers);
    return result;
}

}  // namespace dvote
