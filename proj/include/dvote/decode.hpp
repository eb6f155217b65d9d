#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "dvote/core.hpp"
#include "dvote/denoiser.hpp"
#include "dvote/distributions.hpp"
#include "dvote/rng.hpp"

namespace dvote {

// One committed token, with the predictive entropy that admitted it and the
// index of the denoiser call that produced it.
struct CommitDecision {
    std::size_t position = 0;
    TokenId token = 0;
    double entropy = 0.0;
    std::uint64_t step_index = 0;
};

// How a denoiser call's distributions are turned into a commit set:
// - entropy threshold: commit every position with H < alpha; if none clears
//   the bar, commit the argmin-entropy position so each call makes progress.
// - per-step quota: commit the k lowest-entropy positions (the "full steps"
//   baseline is quota 1, the "half steps" voting baseline is quota 2).
struct CommitPolicy {
    enum class Kind { entropy_threshold, per_step_quota };

    Kind kind = Kind::entropy_threshold;
    double alpha = 0.3;
    std::size_t quota = 1;

    static CommitPolicy entropy(double alpha) { return {Kind::entropy_threshold, alpha, 1}; }
    static CommitPolicy per_step(std::size_t quota) {
        if (quota == 0) throw DomainError("per-step quota must be >= 1");
        return {Kind::per_step_quota, 0.0, quota};
    }
};

// Positions whose entropy is strictly below alpha; empty set falls back to
// the argmin-entropy position (ties to the lowest position index), so every
// denoiser call commits at least one token.
inline std::vector<std::size_t> select_commit_set(const DistributionSet& dists, double alpha) {
    if (dists.empty()) throw DomainError("select_commit_set: empty distribution set");
    std::vector<std::size_t> below;
    std::size_t argmin_pos = 0;
    double min_h = std::numeric_limits<double>::infinity();
    for (const auto& [pos, row] : dists.entries()) {
        const double h = shannon_entropy(row);
        if (h < alpha) below.push_back(pos);
        if (h < min_h) {  // map iteration is ascending, so ties keep the lowest pos
            min_h = h;
            argmin_pos = pos;
        }
    }
    if (below.empty()) below.push_back(argmin_pos);
    return below;
}

// The k lowest-entropy positions, ties to the lowest position index.
inline std::vector<std::size_t> select_lowest_entropy(const DistributionSet& dists, std::size_t k) {
    if (dists.empty()) throw DomainError("select_lowest_entropy: empty distribution set");
    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(dists.size());
    for (const auto& [pos, row] : dists.entries()) {
        ranked.emplace_back(shannon_entropy(row), pos);
    }
    std::stable_sort(ranked.begin(), ranked.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) out.push_back(ranked[i].second);
    std::sort(out.begin(), out.end());
    return out;
}

struct DecodeResult {
    std::vector<CommitDecision> decisions;
    std::uint64_t steps = 0;  // denoiser calls charged by this decode
};

// Fill every masked position of `seq`. Blocks are processed left to right;
// within a block, each loop iteration makes one denoiser call over the
// block's masked positions, selects the commit set under `policy`, and
// samples each committed token from its temperature-adjusted (and optionally
// top-p-filtered) distribution — argmax when temperature is 0. Blocks with no
// masks cost nothing; retained tokens are never overwritten.
inline DecodeResult decode_sequence(MaskedSequence& seq,
                                    const BlockSchedule& schedule,
                                    const GenerationConfig& cfg,
                                    const CommitPolicy& policy,
                                    const Denoiser& denoiser,
                                    Rng& rng,
                                    StepLedger& ledger) {
    DecodeResult result;
    const std::size_t vocab = static_cast<std::size_t>(denoiser.vocab().size);
    for (const Block& block : schedule.blocks()) {
        while (true) {
            const std::vector<std::size_t> masked = seq.masked_in(block.begin, block.end);
            if (masked.empty()) break;
            DistributionSet dists = denoiser.predict(seq, masked, cfg.temperature, ledger);
            dists.validate(vocab);
            if (cfg.top_p < 1.0) {
                for (auto& [pos, row] : dists.entries()) row = apply_top_p(row, cfg.top_p);
            }
            ++result.steps;
            const std::vector<std::size_t> commits =
                policy.kind == CommitPolicy::Kind::entropy_threshold
                    ? select_commit_set(dists, policy.alpha)
                    : select_lowest_entropy(dists, policy.quota);
            for (std::size_t pos : commits) {
                const std::vector<double>& row = dists.at(pos);
                const TokenId tok = static_cast<TokenId>(rng.categorical(row));
                seq.commit(pos, tok);
                result.decisions.push_back({pos, tok, shannon_entropy(row), result.steps});
            }
        }
    }
    return result;
}

inline DecodeResult decode_sequence(MaskedSequence& seq,
                                    const BlockSchedule& schedule,
                                    const GenerationConfig& cfg,
                                    const Denoiser& denoiser,
                                    Rng& rng,
                                    StepLedger& ledger) {
    return decode_sequence(seq, schedule, cfg, CommitPolicy::entropy(cfg.alpha), denoiser, rng,
                           ledger);
}

}  // namespace dvote
