#pragma once

#include <span>
#include <string>
#include <vector>

#include "dvote/core.hpp"
#include "dvote/distributions.hpp"

namespace dvote {

// A denoiser scores the requested masked generation positions of a sequence
// in one forward pass, returning one temperature-adjusted categorical
// distribution per position. Exactly one ledger increment per successful
// call, no matter how many positions are scored. Implementations are
// read-only after construction and safe to share across concurrent runs.
class Denoiser {
public:
    virtual ~Denoiser() = default;

    virtual DistributionSet predict(const MaskedSequence& seq,
                                    std::span<const std::size_t> positions,
                                    double temperature,
                                    StepLedger& ledger) const = 0;

    virtual const VocabSpec& vocab() const = 0;
};

// Baseline implementation: every entry is 1/V regardless of context or
// temperature (the uniform distribution is a fixed point of the power
// transform, so the temperature is deliberately not applied).
class UniformDenoiser final : public Denoiser {
public:
    explicit UniformDenoiser(VocabSpec vocab) : vocab_(vocab) { vocab_.validate(); }

    DistributionSet predict(const MaskedSequence& seq,
                            std::span<const std::size_t> positions,
                            double /*temperature*/,
                            StepLedger& ledger) const override {
        if (positions.empty()) throw DomainError("predict: no positions requested");
        DistributionSet out;
        const std::vector<double> uniform(static_cast<std::size_t>(vocab_.size),
                                          1.0 / vocab_.size);
        for (std::size_t pos : positions) {
            if (!seq.is_masked(pos)) throw DomainError("predict: position is not masked");
            out.add(pos, uniform);
        }
        ledger.add_forward();
        return out;
    }

    const VocabSpec& vocab() const override { return vocab_; }

private:
    VocabSpec vocab_;
};

}  // namespace dvote
