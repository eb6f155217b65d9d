#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "dvote/core.hpp"
#include "dvote/errors.hpp"

namespace dvote {

// Canonical form: purely numeric strings lose leading zeros (but keep one
// digit), everything else is unchanged. Idempotent by construction.
inline std::string canonicalize_answer(std::string_view raw) {
    if (raw.empty()) return std::string(raw);
    bool numeric = true;
    for (char ch : raw) {
        if (ch < '0' || ch > '9') {
            numeric = false;
            break;
        }
    }
    if (!numeric) return std::string(raw);
    std::size_t first = 0;
    while (first + 1 < raw.size() && raw[first] == '0') ++first;
    return std::string(raw.substr(first));
}

struct Answer {
    std::string value;
    bool parseable = false;

    static Answer parsed(std::string v) { return {canonicalize_answer(v), true}; }
    static Answer none() { return {"", false}; }

    bool operator==(const Answer& other) const {
        if (parseable != other.parseable) return false;
        // all unparseable answers are one value
        return !parseable || value == other.value;
    }
};

// Answer extraction rule for synthetic tasks: the token subsequence after the
// last occurrence of the separator token, rendered as concatenated decimal
// ids and canonicalized. No separator, or nothing after it, is unparseable.
struct ExtractorSpec {
    TokenId separator = 0;
};

inline Answer extract_answer(std::span<const TokenId> gen, const ExtractorSpec& extractor) {
    std::size_t sep_pos = gen.size();
    for (std::size_t i = 0; i < gen.size(); ++i) {
        if (gen[i] < 0) throw DomainError("extract_answer: sample is not fully committed");
        if (gen[i] == extractor.separator) sep_pos = i;
    }
    if (sep_pos == gen.size()) return Answer::none();      // no separator
    if (sep_pos + 1 == gen.size()) return Answer::none();  // nothing after it
    std::string raw;
    for (std::size_t i = sep_pos + 1; i < gen.size(); ++i) raw += std::to_string(gen[i]);
    return Answer::parsed(raw);
}

// Modal parseable answer; ties go to the tied answer whose first occurrence
// index is smallest. If nothing parsed, the first unparseable answer wins.
inline Answer majority_vote(std::span<const Answer> answers) {
    if (answers.empty()) throw DomainError("majority_vote: empty answer list");
    std::map<std::string, int> counts;
    for (const Answer& a : answers) {
        if (a.parseable) ++counts[a.value];
    }
    if (counts.empty()) {
        for (const Answer& a : answers) {
            if (!a.parseable) return a;
        }
    }
    int best = 0;
    for (const auto& [value, count] : counts) best = std::max(best, count);
    for (const Answer& a : answers) {
        if (a.parseable && counts[a.value] == best) return a;
    }
    return answers[0];  // unreachable
}

}  // namespace dvote
