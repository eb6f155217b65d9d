#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "dvote/core.hpp"
#include "dvote/errors.hpp"

namespace dvote {

// Per-masked-position categorical distributions returned by one denoiser
// forward pass. Keys are exactly the (generation-relative) positions the
// caller requested; every row is non-negative and sums to 1 within 1e-9.
class DistributionSet {
public:
    using Map = std::map<std::size_t, std::vector<double>>;

    void add(std::size_t pos, std::vector<double> probs) { entries_[pos] = std::move(probs); }

    const std::vector<double>& at(std::size_t pos) const {
        auto it = entries_.find(pos);
        if (it == entries_.end()) throw DomainError("DistributionSet: no entry for position");
        return it->second;
    }

    bool contains(std::size_t pos) const { return entries_.count(pos) != 0; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const Map& entries() const { return entries_; }
    Map& entries() { return entries_; }

    void validate(std::size_t vocab) const {
        for (const auto& [pos, row] : entries_) {
            if (row.size() != vocab) throw DomainError("DistributionSet: row has wrong arity");
            double sum = 0.0;
            for (double p : row) {
                if (!(p >= 0.0)) throw DomainError("DistributionSet: negative probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw DomainError("DistributionSet: row does not sum to 1");
        }
    }

private:
    Map entries_;
};

// -sum p ln p with 0 ln 0 = 0, in nats.
inline double shannon_entropy(std::span<const double> dist) {
    double h = 0.0;
    for (double p : dist) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

// Renormalized dist^(1/T). T=1 is the identity; T=0 returns a one-hot on the
// argmax with ties going to the lowest token id.
inline std::vector<double> apply_temperature(std::span<const double> dist, double temperature) {
    std::vector<double> out(dist.begin(), dist.end());
    if (temperature == 1.0) return out;
    if (temperature == 0.0) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < out.size(); ++i) {
            if (out[i] > out[best]) best = i;
        }
        std::fill(out.begin(), out.end(), 0.0);
        out[best] = 1.0;
        return out;
    }
    // Work in log space for stability at small T.
    const double inv_t = 1.0 / temperature;
    double max_log = -std::numeric_limits<double>::infinity();
    std::vector<double> logs(out.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] > 0.0) {
            logs[i] = inv_t * std::log(out[i]);
            max_log = std::max(max_log, logs[i]);
        }
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::isinf(logs[i]) ? 0.0 : std::exp(logs[i] - max_log);
        sum += out[i];
    }
    for (double& p : out) p /= sum;
    return out;
}

// Nucleus filter: keep the smallest set of highest-probability tokens whose
// cumulative mass reaches p, zero the rest, renormalize. Ties by token id.
inline std::vector<double> apply_top_p(std::span<const double> dist, double top_p) {
    std::vector<double> out(dist.begin(), dist.end());
    if (top_p >= 1.0) return out;
    std::vector<std::size_t> order(out.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return out[a] > out[b]; });
    double cum = 0.0;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        cum += out[order[i]];
        kept = i + 1;
        if (cum >= top_p) break;
    }
    std::vector<double> filtered(out.size(), 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < kept; ++i) {
        filtered[order[i]] = out[order[i]];
        sum += out[order[i]];
    }
    for (double& p : filtered) p /= sum;
    return filtered;
}

// Numerically stable softmax over raw logits (natural-log domain).
inline std::vector<double> softmax(std::span<const double> logits) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (double l : logits) max_logit = std::max(max_logit, l);
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - max_logit);
        sum += out[i];
    }
    for (double& p : out) p /= sum;
    return out;
}

}  // namespace dvote
