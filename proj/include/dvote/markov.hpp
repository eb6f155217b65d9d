#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "dvote/denoiser.hpp"

namespace dvote {

// Order-1 Markov chain over the token vocabulary. Stands in for a trained
// denoiser: its conditionals are exactly computable, so every downstream
// behavior stays verifiable against enumeration.
struct MarkovSpec {
    std::vector<double> initial;                  // length V
    std::vector<std::vector<double>> transition;  // V rows of length V

    std::int32_t vocab_size() const { return static_cast<std::int32_t>(initial.size()); }

    void validate() const {
        const std::size_t v = initial.size();
        if (v < 2) throw DomainError("MarkovSpec: vocab must be >= 2");
        if (transition.size() != v) throw DomainError("MarkovSpec: transition must be VxV");
        auto check_row = [v](std::span<const double> row, const char* what) {
            if (row.size() != v) throw DomainError(std::string("MarkovSpec: ") + what + " has wrong arity");
            double sum = 0.0;
            for (double p : row) {
                if (!(p >= 0.0)) throw DomainError(std::string("MarkovSpec: ") + what + " has a negative entry");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw DomainError(std::string("MarkovSpec: ") + what + " does not sum to 1");
        };
        check_row(initial, "initial");
        for (const auto& row : transition) check_row(row, "transition row");
    }
};

namespace detail {

// Constraint row for one absolute chain position: one-hot for committed
// tokens, all-ones for masked slots.
inline void fill_constraint(std::vector<double>& c, TokenId tok, std::size_t v) {
    if (tok >= 0) {
        std::fill(c.begin(), c.end(), 0.0);
        c[static_cast<std::size_t>(tok)] = 1.0;
    } else {
        std::fill(c.begin(), c.end(), 1.0);
    }
    (void)v;
}

}  // namespace detail

// True conditional marginals of the chain at the requested generation
// positions given every committed token (prompt and retained generation
// slots alike), via scaled forward-backward in O(M * V^2). The chain spans
// prompt ++ gen as one sequence with `initial` at absolute position 0.
inline DistributionSet exact_conditionals(const MarkovSpec& spec,
                                          const MaskedSequence& seq,
                                          std::span<const std::size_t> positions) {
    spec.validate();
    const std::size_t v = spec.initial.size();
    const std::size_t p_len = seq.prompt().size();
    const std::size_t m = p_len + seq.gen_len();

    auto token_at = [&](std::size_t k) -> TokenId {
        return k < p_len ? seq.prompt()[k] : seq.token(k - p_len);
    };

    std::vector<std::vector<double>> alpha(m, std::vector<double>(v));
    std::vector<double> c(v);

    detail::fill_constraint(c, token_at(0), v);
    double scale = 0.0;
    for (std::size_t x = 0; x < v; ++x) {
        alpha[0][x] = spec.initial[x] * c[x];
        scale += alpha[0][x];
    }
    if (scale <= 0.0) throw DomainError("exact_conditionals: committed tokens have zero probability");
    for (double& a : alpha[0]) a /= scale;

    for (std::size_t k = 1; k < m; ++k) {
        detail::fill_constraint(c, token_at(k), v);
        scale = 0.0;
        for (std::size_t x = 0; x < v; ++x) {
            if (c[x] == 0.0) {
                alpha[k][x] = 0.0;
                continue;
            }
            double acc = 0.0;
            for (std::size_t u = 0; u < v; ++u) acc += alpha[k - 1][u] * spec.transition[u][x];
            alpha[k][x] = acc * c[x];
            scale += alpha[k][x];
        }
        if (scale <= 0.0) throw DomainError("exact_conditionals: committed tokens have zero probability");
        for (double& a : alpha[k]) a /= scale;
    }

    std::vector<std::vector<double>> beta(m, std::vector<double>(v, 1.0));
    for (std::size_t k = m - 1; k-- > 0;) {
        detail::fill_constraint(c, token_at(k + 1), v);
        scale = 0.0;
        for (std::size_t x = 0; x < v; ++x) {
            double acc = 0.0;
            for (std::size_t u = 0; u < v; ++u) acc += spec.transition[x][u] * c[u] * beta[k + 1][u];
            beta[k][x] = acc;
            scale += acc;
        }
        if (scale <= 0.0) throw DomainError("exact_conditionals: committed tokens have zero probability");
        for (double& b : beta[k]) b /= scale;
    }

    DistributionSet out;
    for (std::size_t pos : positions) {
        if (!seq.is_masked(pos)) throw DomainError("exact_conditionals: position is not masked");
        const std::size_t k = p_len + pos;
        std::vector<double> marginal(v);
        double sum = 0.0;
        for (std::size_t x = 0; x < v; ++x) {
            marginal[x] = alpha[k][x] * beta[k][x];
            sum += marginal[x];
        }
        if (sum <= 0.0) throw DomainError("exact_conditionals: zero-probability conditional");
        for (double& p : marginal) p /= sum;
        out.add(pos, std::move(marginal));
    }
    return out;
}

// Exact-inference oracle denoiser: forward-backward conditionals followed by
// the temperature transform.
class ExactMarkovDenoiser final : public Denoiser {
public:
    explicit ExactMarkovDenoiser(MarkovSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
        vocab_ = VocabSpec{spec_.vocab_size()};
    }

    DistributionSet predict(const MaskedSequence& seq,
                            std::span<const std::size_t> positions,
                            double temperature,
                            StepLedger& ledger) const override {
        if (positions.empty()) throw DomainError("predict: no positions requested");
        DistributionSet out = exact_conditionals(spec_, seq, positions);
        for (auto& [pos, row] : out.entries()) row = apply_temperature(row, temperature);
        ledger.add_forward();
        return out;
    }

    const VocabSpec& vocab() const override { return vocab_; }
    const MarkovSpec& spec() const { return spec_; }

private:
    MarkovSpec spec_;
    VocabSpec vocab_;
};

// Oracle conditionals mixed with uniform noise, (1-eps) * p + eps / V, then
// temperature. The mixing rate controls per-token error so voting gains are
// measurable on synthetic suites.
class PerturbedDenoiser final : public Denoiser {
public:
    PerturbedDenoiser(MarkovSpec spec, double epsilon)
        : spec_(std::move(spec)), epsilon_(epsilon) {
        spec_.validate();
        if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must be in [0, 1]");
        vocab_ = VocabSpec{spec_.vocab_size()};
    }

    DistributionSet predict(const MaskedSequence& seq,
                            std::span<const std::size_t> positions,
                            double temperature,
                            StepLedger& ledger) const override {
        if (positions.empty()) throw DomainError("predict: no positions requested");
        DistributionSet out = exact_conditionals(spec_, seq, positions);
        const double u = epsilon_ / static_cast<double>(vocab_.size);
        for (auto& [pos, row] : out.entries()) {
            for (double& p : row) p = (1.0 - epsilon_) * p + u;
            row = apply_temperature(row, temperature);
        }
        ledger.add_forward();
        return out;
    }

    const VocabSpec& vocab() const override { return vocab_; }

private:
    MarkovSpec spec_;
    double epsilon_;
    VocabSpec vocab_;
};

// Test-bed denoiser with an exactly controlled per-answer error rate: behaves
// like the exact oracle everywhere except at one designated position, where it
// returns a fixed distribution (correct token w.p. 1-eps, the rest spread over
// the given distractors). The injected row is final — independent of context
// and temperature — so each decoded sample's answer is wrong with probability
// exactly eps, i.i.d. across samples.
class AnswerNoiseDenoiser final : public Denoiser {
public:
    AnswerNoiseDenoiser(MarkovSpec spec, std::size_t answer_pos, TokenId correct,
                        std::vector<TokenId> distractors, double epsilon)
        : inner_(std::move(spec)),
          answer_pos_(answer_pos),
          injected_(static_cast<std::size_t>(inner_.vocab().size), 0.0) {
        if (distractors.empty()) throw DomainError("AnswerNoiseDenoiser: need >= 1 distractor");
        if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must be in [0, 1]");
        injected_[static_cast<std::size_t>(correct)] = 1.0 - epsilon;
        for (TokenId d : distractors) {
            injected_.at(static_cast<std::size_t>(d)) += epsilon / distractors.size();
        }
    }

    DistributionSet predict(const MaskedSequence& seq,
                            std::span<const std::size_t> positions,
                            double temperature,
                            StepLedger& ledger) const override {
        if (positions.empty()) throw DomainError("predict: no positions requested");
        DistributionSet out = exact_conditionals(inner_.spec(), seq, positions);
        for (auto& [pos, row] : out.entries()) {
            if (pos == answer_pos_) {
                row = injected_;
            } else {
                row = apply_temperature(row, temperature);
            }
        }
        ledger.add_forward();
        return out;
    }

    const VocabSpec& vocab() const override { return inner_.vocab(); }

private:
    ExactMarkovDenoiser inner_;
    std::size_t answer_pos_;
    std::vector<double> injected_;
};

}  // namespace dvote
