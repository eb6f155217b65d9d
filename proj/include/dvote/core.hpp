#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dvote/errors.hpp"
#include "dvote/rng.hpp"

namespace dvote {

using TokenId = std::int32_t;

// Ordinary token ids are [0, size); the reserved mask token is id `size`.
struct VocabSpec {
    std::int32_t size = 0;

    TokenId mask_id() const { return size; }

    void validate() const {
        if (size < 2) throw ConfigError("vocab size must be >= 2, got " + std::to_string(size));
    }

    bool is_ordinary(TokenId t) const { return t >= 0 && t < size; }
};

// Token buffer with per-position mask state: a fixed prompt plus a
// generation region of fixed length whose slots are committed ids or masked.
// Slots only ever flip masked<->committed; committed ids are never mutated
// in place.
class MaskedSequence {
public:
    static constexpr TokenId kMasked = -1;

    MaskedSequence(std::vector<TokenId> prompt, std::size_t gen_len)
        : prompt_(std::move(prompt)), gen_(gen_len, kMasked) {
        if (gen_len == 0) throw DomainError("generation length must be positive");
    }

    static MaskedSequence committed(std::vector<TokenId> prompt, std::vector<TokenId> gen) {
        MaskedSequence seq(std::move(prompt), gen.size());
        for (std::size_t i = 0; i < gen.size(); ++i) {
            if (gen[i] < 0) throw DomainError("committed() requires ordinary token ids");
        }
        seq.gen_ = std::move(gen);
        return seq;
    }

    const std::vector<TokenId>& prompt() const { return prompt_; }
    const std::vector<TokenId>& gen() const { return gen_; }
    std::size_t gen_len() const { return gen_.size(); }

    bool is_masked(std::size_t pos) const { return gen_.at(pos) == kMasked; }
    TokenId token(std::size_t pos) const { return gen_.at(pos); }

    void commit(std::size_t pos, TokenId tok) {
        if (!is_masked(pos)) throw std::logic_error("commit() on an already-committed slot");
        if (tok < 0) throw DomainError("commit() requires an ordinary token id");
        gen_[pos] = tok;
    }

    void remask(std::size_t pos) {
        if (is_masked(pos)) throw std::logic_error("remask() on an already-masked slot");
        gen_[pos] = kMasked;
    }

    std::size_t masked_count() const {
        std::size_t n = 0;
        for (TokenId t : gen_) n += (t == kMasked);
        return n;
    }

    bool fully_committed() const { return masked_count() == 0; }

    std::vector<std::size_t> masked_in(std::size_t begin, std::size_t end) const {
        std::vector<std::size_t> out;
        for (std::size_t i = begin; i < end && i < gen_.size(); ++i) {
            if (gen_[i] == kMasked) out.push_back(i);
        }
        return out;
    }

private:
    std::vector<TokenId> prompt_;
    std::vector<TokenId> gen_;
};

struct Block {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
};

// Contiguous ascending half-open ranges partitioning [0, gen_len) exactly;
// every block has length block_size except possibly the last.
class BlockSchedule {
public:
    BlockSchedule(std::size_t block_size, std::vector<Block> blocks)
        : block_size_(block_size), blocks_(std::move(blocks)) {}

    std::size_t block_size() const { return block_size_; }
    const std::vector<Block>& blocks() const { return blocks_; }

private:
    std::size_t block_size_;
    std::vector<Block> blocks_;
};

inline BlockSchedule make_schedule(std::size_t gen_len, std::size_t block_size) {
    if (gen_len == 0) throw DomainError("make_schedule: gen_len must be >= 1");
    if (block_size == 0) throw DomainError("make_schedule: block_size must be >= 1");
    std::vector<Block> blocks;
    for (std::size_t begin = 0; begin < gen_len; begin += block_size) {
        blocks.push_back({begin, std::min(begin + block_size, gen_len)});
    }
    return BlockSchedule(block_size, std::move(blocks));
}

// Inference configuration. Defaults mirror the reference setup: entropy
// threshold 0.3 nats, temperature 0.6, sample budget 5, (gen_len, block_size)
// paired as 128/8, 256/16, 512/32.
struct GenerationConfig {
    std::size_t gen_len = 128;
    std::size_t block_size = 8;
    double alpha = 0.3;        // entropy threshold in nats; may be infinity
    double temperature = 0.6;  // 0 means greedy argmax
    double top_p = 1.0;        // optional nucleus filter; 1.0 disables
    std::size_t max_samples = 5;
    std::size_t stop_count = 2;  // answer-convergence stop; 0 disables
    double tau_frac = 0.5;       // retention fraction for the remask rule
    std::uint64_t seed = 0;

    static std::size_t default_block_for(std::size_t gen_len) {
        if (gen_len == 128) return 8;
        if (gen_len == 256) return 16;
        if (gen_len == 512) return 32;
        return std::max<std::size_t>(1, (gen_len + 15) / 16);
    }

    void validate() const {
        if (gen_len == 0) throw ConfigError("gen_len must be >= 1");
        if (block_size == 0) throw ConfigError("block_size must be >= 1");
        if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0 (or inf)");
        if (!(temperature >= 0.0) || !std::isfinite(temperature))
            throw ConfigError("temperature must be finite and >= 0");
        if (!(top_p > 0.0) || top_p > 1.0) throw ConfigError("top_p must be in (0, 1]");
        if (max_samples == 0) throw ConfigError("max_samples must be >= 1");
        if (stop_count == 1) throw ConfigError("stop_count must be >= 2 (or 0 to disable)");
        if (!(tau_frac > 0.0) || tau_frac > 1.0) throw ConfigError("tau_frac must be in (0, 1]");
    }
};

// Exact count of denoiser forward invocations, the unit of all reported
// step figures. Increments by exactly one per forward; per_sample tracks the
// split across decoded samples.
class StepLedger {
public:
    void start_sample() { per_sample_.push_back(0); }

    void add_forward() {
        if (per_sample_.empty()) per_sample_.push_back(0);
        ++per_sample_.back();
        ++forwards_;
    }

    std::uint64_t forwards() const { return forwards_; }
    const std::vector<std::uint64_t>& per_sample() const { return per_sample_; }

    bool operator==(const StepLedger& other) const {
        return forwards_ == other.forwards_ && per_sample_ == other.per_sample_;
    }

private:
    std::uint64_t forwards_ = 0;
    std::vector<std::uint64_t> per_sample_;
};

// Forward corruption: independently mask each generation position with
// probability t. Test-fixture path only; decoding always starts from fully
// masked blocks.
inline MaskedSequence mask_sequence(const MaskedSequence& x0, double t, Rng& rng) {
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("mask intensity t must be in [0, 1]");
    if (!x0.fully_committed()) throw DomainError("mask_sequence requires a fully committed input");
    MaskedSequence out = x0;
    for (std::size_t i = 0; i < out.gen_len(); ++i) {
        if (rng.uniform() < t) out.remask(i);
    }
    return out;
}

}  // namespace dvote
