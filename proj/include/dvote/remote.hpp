#pragma once

#include <cmath>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dvote/denoiser.hpp"
#include "dvote/distributions.hpp"
#include "dvote/log.hpp"

namespace dvote {

// HTTP client for the remote denoiser protocol:
//   POST /v1/logits  {"tokens": [int], "masked": [int], "temperature": float}
//   -> {"logits": [[float x V]]}, rows aligned with the masked list.
// Tokens carry mask slots as mask_id (= V); masked positions are 0-based into
// the tokens array (prompt included). Raw logits become probabilities via
// softmax and then the temperature power transform. A malformed response is a
// protocol error and aborts the sample — nothing is silently substituted.
// Requests on one client are serialized; use one client per connection for
// concurrency.
class RemoteDenoiser final : public Denoiser {
public:
    RemoteDenoiser(std::string base_url, VocabSpec vocab, int transport_retries = 1,
                   int timeout_seconds = 30)
        : vocab_(vocab),
          base_url_(std::move(base_url)),
          retries_(transport_retries),
          client_(base_url_) {
        vocab_.validate();
        client_.set_connection_timeout(timeout_seconds, 0);
        client_.set_read_timeout(timeout_seconds, 0);
    }

    DistributionSet predict(const MaskedSequence& seq,
                            std::span<const std::size_t> positions,
                            double temperature,
                            StepLedger& ledger) const override {
        if (positions.empty()) throw DomainError("predict: no positions requested");

        nlohmann::json request;
        auto& tokens = request["tokens"] = nlohmann::json::array();
        for (TokenId t : seq.prompt()) tokens.push_back(t);
        for (std::size_t i = 0; i < seq.gen_len(); ++i) {
            tokens.push_back(seq.is_masked(i) ? vocab_.mask_id() : seq.token(i));
        }
        auto& masked = request["masked"] = nlohmann::json::array();
        for (std::size_t pos : positions) {
            if (!seq.is_masked(pos)) throw DomainError("predict: position is not masked");
            masked.push_back(seq.prompt().size() + pos);
        }
        request["temperature"] = temperature;
        const std::string body = request.dump();

        httplib::Result res;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            for (int attempt = 0;; ++attempt) {
                res = client_.Post("/v1/logits", body, "application/json");
                if (res) break;
                if (attempt >= retries_) {
                    throw TransportError("remote denoiser unreachable: " + base_url_);
                }
                log_warn("remote request failed, retrying (" + base_url_ + ")");
            }
        }
        if (res->status != 200) {
            throw ProtocolError("remote denoiser returned HTTP " + std::to_string(res->status));
        }

        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("remote response is not valid JSON: ") + e.what());
        }
        if (!reply.contains("logits") || !reply["logits"].is_array() ||
            reply["logits"].size() != positions.size()) {
            throw ProtocolError("remote response has wrong logits arity");
        }

        DistributionSet out;
        for (std::size_t i = 0; i < positions.size(); ++i) {
            const auto& row_json = reply["logits"][i];
            if (!row_json.is_array() || row_json.size() != static_cast<std::size_t>(vocab_.size)) {
                throw ProtocolError("remote logits row has wrong arity");
            }
            std::vector<double> logits;
            logits.reserve(row_json.size());
            for (const auto& x : row_json) {
                if (!x.is_number()) throw ProtocolError("remote logits row has a non-number");
                const double val = x.get<double>();
                if (!std::isfinite(val)) throw ProtocolError("remote logits row has a non-finite value");
                logits.push_back(val);
            }
            std::vector<double> probs = softmax(logits);
            out.add(positions[i], apply_temperature(probs, temperature));
        }
        ledger.add_forward();
        return out;
    }

    const VocabSpec& vocab() const override { return vocab_; }

private:
    VocabSpec vocab_;
    std::string base_url_;
    int retries_;
    mutable httplib::Client client_;
    mutable std::mutex mutex_;
};

struct ServeCheckResult {
    bool ok = false;
    std::string message;
};

// Validates a remote endpoint against the wire protocol with a one-mask probe.
inline ServeCheckResult serve_check(const std::string& url, VocabSpec vocab) {
    try {
        RemoteDenoiser remote(url, vocab, /*transport_retries=*/0, /*timeout_seconds=*/10);
        MaskedSequence probe({0}, 1);
        StepLedger ledger;
        const std::vector<std::size_t> positions{0};
        DistributionSet dists = remote.predict(probe, positions, 1.0, ledger);
        dists.validate(static_cast<std::size_t>(vocab.size));
        return {true, "ok: 1 masked position scored, arity " + std::to_string(vocab.size)};
    } catch (const Error& e) {
        return {false, e.what()};
    }
}

}  // namespace dvote
