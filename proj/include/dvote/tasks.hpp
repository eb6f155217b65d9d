#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dvote/answer.hpp"
#include "dvote/core.hpp"
#include "dvote/decode.hpp"
#include "dvote/errors.hpp"
#include "dvote/markov.hpp"
#include "dvote/rng.hpp"

namespace dvote {

// Generator descriptor for a synthetic question: a seeded peaked Markov chain
// plus a realization seed. The prompt, gold answer, and oracle denoiser are
// all reproducible from these fields alone.
struct SyntheticSpec {
    std::int32_t vocab = 12;
    std::size_t gen_len = 32;
    std::size_t prompt_len = 8;
    double peak = 0.9;  // probability mass on each row's dominant successor
    std::uint64_t chain_seed = 0;
    TokenId sep_id = 11;
    std::uint64_t seed = 0;  // realization seed

    void validate() const {
        if (vocab < 2) throw TaskError("synthetic: vocab must be >= 2");
        if (gen_len < 3) throw TaskError("synthetic: gen_len must be >= 3");
        if (!(peak >= 1.0 / vocab) || peak >= 1.0) throw TaskError("synthetic: peak must be in [1/V, 1)");
        if (sep_id < 0 || sep_id >= vocab) throw TaskError("synthetic: sep_id out of range");
    }
};

enum class AnswerType { numeric, choice, string_ };

inline const char* to_string(AnswerType t) {
    switch (t) {
        case AnswerType::numeric: return "numeric";
        case AnswerType::choice: return "choice";
        case AnswerType::string_: return "string";
    }
    return "string";
}

inline AnswerType answer_type_from(const std::string& s) {
    if (s == "numeric") return AnswerType::numeric;
    if (s == "choice") return AnswerType::choice;
    if (s == "string") return AnswerType::string_;
    throw TaskError("unknown answer_type: " + s);
}

struct TaskRecord {
    std::string id;
    std::optional<std::vector<TokenId>> literal_prompt;  // exactly one of the two is set
    std::optional<SyntheticSpec> synthetic;
    std::string gold;  // canonical
    AnswerType answer_type = AnswerType::string_;
};

// Row-stochastic chain whose dominant successors form one full cycle over
// the vocabulary (a seeded random cyclic order), remaining mass spread
// uniformly. The full cycle keeps every token — the separator in particular —
// reachable from any greedy trajectory. Uniform initial.
inline MarkovSpec build_peaked_chain(std::int32_t vocab, double peak, std::uint64_t chain_seed) {
    const std::size_t v = static_cast<std::size_t>(vocab);
    std::vector<std::size_t> order(v);
    for (std::size_t i = 0; i < v; ++i) order[i] = i;
    Rng rng(splitmix64(chain_seed));
    for (std::size_t i = v - 1; i > 0; --i) {
        std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1));
        if (j > i) j = i;
        std::swap(order[i], order[j]);
    }
    MarkovSpec spec;
    spec.initial.assign(v, 1.0 / v);
    const double rest = (1.0 - peak) / static_cast<double>(v - 1);
    spec.transition.assign(v, std::vector<double>(v, rest));
    for (std::size_t i = 0; i < v; ++i) {
        spec.transition[order[i]][order[(i + 1) % v]] = peak;
    }
    return spec;
}

inline std::vector<TokenId> sample_chain(const MarkovSpec& spec, std::size_t length, Rng& rng) {
    std::vector<TokenId> out;
    out.reserve(length);
    TokenId cur = static_cast<TokenId>(rng.categorical(spec.initial));
    out.push_back(cur);
    for (std::size_t i = 1; i < length; ++i) {
        cur = static_cast<TokenId>(rng.categorical(spec.transition[static_cast<std::size_t>(cur)]));
        out.push_back(cur);
    }
    return out;
}

struct RealizedQuestion {
    std::vector<TokenId> prompt;
    Answer gold;
};

// A question is a chain-sampled prompt; its gold answer is the answer of the
// deterministic greedy (T=0, one-commit-per-step) reference decode, i.e. the
// mode of the model's own answer distribution. Sampling at the run
// temperature deviates from that mode with prompt-dependent probability, and
// voting is measured on how reliably it recovers it. Prompts whose greedy
// completion has no parseable answer are rejected; everything is
// deterministic in `seed`.
inline RealizedQuestion realize_synthetic(const SyntheticSpec& spec, const MarkovSpec& chain) {
    spec.validate();
    if (spec.prompt_len == 0) throw TaskError("synthetic: prompt_len must be >= 1");
    const ExactMarkovDenoiser oracle(chain);
    Rng rng(splitmix64(spec.seed));
    GenerationConfig greedy_cfg;
    greedy_cfg.gen_len = spec.gen_len;
    greedy_cfg.block_size = spec.gen_len;  // T=0 commits strictly left-to-right anyway
    greedy_cfg.temperature = 0.0;
    greedy_cfg.alpha = 0.0;
    const BlockSchedule schedule = make_schedule(spec.gen_len, spec.gen_len);
    for (int attempt = 0; attempt < 64; ++attempt) {
        std::vector<TokenId> prompt = sample_chain(chain, spec.prompt_len, rng);
        MaskedSequence seq(prompt, spec.gen_len);
        StepLedger ledger;
        Rng decode_rng(0);
        decode_sequence(seq, schedule, greedy_cfg, CommitPolicy::per_step(1), oracle, decode_rng,
                        ledger);
        Answer gold = extract_answer(seq.gen(), ExtractorSpec{spec.sep_id});
        if (gold.parseable) return {std::move(prompt), std::move(gold)};
    }
    throw TaskError("synthetic: greedy completion has no parseable answer for this chain");
}

inline nlohmann::json to_json(const SyntheticSpec& s) {
    return nlohmann::json{{"vocab", s.vocab},         {"gen_len", s.gen_len},
                          {"prompt_len", s.prompt_len}, {"peak", s.peak},
                          {"chain_seed", s.chain_seed}, {"sep_id", s.sep_id},
                          {"seed", s.seed}};
}

inline SyntheticSpec synthetic_from_json(const nlohmann::json& j) {
    SyntheticSpec s;
    s.vocab = j.at("vocab").get<std::int32_t>();
    s.gen_len = j.at("gen_len").get<std::size_t>();
    s.prompt_len = j.at("prompt_len").get<std::size_t>();
    s.peak = j.at("peak").get<double>();
    s.chain_seed = j.at("chain_seed").get<std::uint64_t>();
    s.sep_id = j.at("sep_id").get<TokenId>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.validate();
    return s;
}

// JSON-lines task ingestion with line numbers attached to every diagnostic.
inline std::vector<TaskRecord> ingest_tasks(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TaskError("cannot open task file: " + path);
    std::vector<TaskRecord> tasks;
    std::map<std::string, std::size_t> seen;  // id -> line number
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw TaskError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        try {
            TaskRecord task;
            task.id = j.at("id").get<std::string>();
            if (task.id.empty()) throw TaskError("empty id");
            const auto& prompt = j.at("prompt");
            if (prompt.is_array()) {
                task.literal_prompt = prompt.get<std::vector<TokenId>>();
            } else if (prompt.is_object() && prompt.contains("synthetic")) {
                task.synthetic = synthetic_from_json(prompt.at("synthetic"));
            } else {
                throw TaskError("prompt must be an id array or {\"synthetic\": {...}}");
            }
            task.gold = canonicalize_answer(j.at("gold").get<std::string>());
            if (task.gold.empty()) throw TaskError("gold answer must be parseable (non-empty)");
            task.answer_type = answer_type_from(j.at("answer_type").get<std::string>());
            auto [it, inserted] = seen.emplace(task.id, line_no);
            if (!inserted) {
                throw TaskError("duplicate id '" + task.id + "' (lines " +
                                std::to_string(it->second) + " and " + std::to_string(line_no) + ")");
            }
            tasks.push_back(std::move(task));
        } catch (const nlohmann::json::exception& e) {
            throw TaskError("line " + std::to_string(line_no) + ": " + e.what());
        } catch (const TaskError& e) {
            std::string msg = e.what();
            if (msg.rfind("line ", 0) == 0 || msg.rfind("duplicate", 0) == 0) throw;
            throw TaskError("line " + std::to_string(line_no) + ": " + msg);
        }
    }
    return tasks;
}

struct SynthOptions {
    std::int32_t vocab = 12;
    std::size_t gen_len = 32;
    std::size_t prompt_len = 8;
    double peak = 0.9;
    std::size_t count = 100;
    std::uint64_t seed = 0;
};

// Emits `count` synthetic questions sharing one chain; the gold answer is the
// realization's own suffix token.
inline std::vector<TaskRecord> make_synthetic_tasks(const SynthOptions& opt) {
    SyntheticSpec base;
    base.vocab = opt.vocab;
    base.gen_len = opt.gen_len;
    base.prompt_len = opt.prompt_len;
    base.peak = opt.peak;
    base.chain_seed = opt.seed;
    base.sep_id = opt.vocab - 1;
    base.validate();
    const MarkovSpec chain = build_peaked_chain(base.vocab, base.peak, base.chain_seed);
    std::vector<TaskRecord> tasks;
    tasks.reserve(opt.count);
    for (std::size_t q = 0; q < opt.count; ++q) {
        SyntheticSpec spec = base;
        spec.seed = derive_seed(opt.seed, q + 1);
        const RealizedQuestion question = realize_synthetic(spec, chain);
        TaskRecord task;
        char id[32];
        std::snprintf(id, sizeof(id), "synth-%05zu", q);
        task.id = id;
        task.synthetic = spec;
        task.gold = question.gold.value;
        task.answer_type = AnswerType::numeric;
        tasks.push_back(std::move(task));
    }
    return tasks;
}

inline void write_tasks(const std::vector<TaskRecord>& tasks, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw TaskError("cannot write task file: " + path);
    for (const TaskRecord& task : tasks) {
        nlohmann::json j;
        j["id"] = task.id;
        if (task.synthetic) {
            j["prompt"] = nlohmann::json{{"synthetic", to_json(*task.synthetic)}};
        } else {
            j["prompt"] = *task.literal_prompt;
        }
        j["gold"] = task.gold;
        j["answer_type"] = to_string(task.answer_type);
        out << j.dump() << "\n";
    }
}

}  // namespace dvote
