#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "dvote/decode.hpp"
#include "dvote/engine.hpp"
#include "dvote/log.hpp"
#include "dvote/remote.hpp"
#include "dvote/report.hpp"
#include "dvote/tasks.hpp"

namespace dvote {

struct RunOptions {
    Method method = Method::dvoting;
    GenerationConfig cfg;
    ConsistencyParams cparams;
    double epsilon = 0.0;  // perturbed-oracle mixing rate for synthetic tasks
    int jobs = 1;
    std::string remote_url;     // denoiser for literal-prompt tasks
    std::int32_t remote_vocab = 16;
    TokenId literal_sep = -1;   // extractor separator for literal-prompt tasks
    std::string label;          // defaults to the method name
};

namespace detail {

using ChainKey = std::tuple<std::int32_t, double, std::uint64_t>;

struct PreparedQuestion {
    std::vector<TokenId> prompt;
    std::size_t gen_len = 0;
    ExtractorSpec extractor;
    const Denoiser* denoiser = nullptr;
};

class DenoiserPool {
public:
    DenoiserPool(const std::vector<TaskRecord>& tasks, const RunOptions& options) {
        for (const TaskRecord& task : tasks) {
            if (!task.synthetic) continue;
            const SyntheticSpec& s = *task.synthetic;
            const ChainKey key{s.vocab, s.peak, s.chain_seed};
            if (chains_.count(key)) continue;
            MarkovSpec chain = build_peaked_chain(s.vocab, s.peak, s.chain_seed);
            std::unique_ptr<Denoiser> d;
            if (options.epsilon > 0.0) {
                d = std::make_unique<PerturbedDenoiser>(chain, options.epsilon);
            } else {
                d = std::make_unique<ExactMarkovDenoiser>(chain);
            }
            chains_.emplace(key, ChainEntry{std::move(chain), std::move(d)});
        }
        bool any_literal = false;
        for (const TaskRecord& task : tasks) any_literal |= task.literal_prompt.has_value();
        if (any_literal) {
            if (options.remote_url.empty()) {
                throw ConfigError("literal-prompt tasks need --remote-url");
            }
            if (options.literal_sep < 0) {
                throw ConfigError("literal-prompt tasks need --sep-id");
            }
            remote_ = std::make_unique<RemoteDenoiser>(options.remote_url,
                                                       VocabSpec{options.remote_vocab});
        }
    }

    PreparedQuestion prepare(const TaskRecord& task, const RunOptions& options) const {
        PreparedQuestion q;
        if (task.synthetic) {
            const SyntheticSpec& s = *task.synthetic;
            const auto& entry = chains_.at(ChainKey{s.vocab, s.peak, s.chain_seed});
            q.prompt = realize_synthetic(s, entry.chain).prompt;
            q.gen_len = s.gen_len;
            q.extractor = ExtractorSpec{s.sep_id};
            q.denoiser = entry.denoiser.get();
        } else {
            q.prompt = *task.literal_prompt;
            q.gen_len = options.cfg.gen_len;
            q.extractor = ExtractorSpec{options.literal_sep};
            q.denoiser = remote_.get();
        }
        return q;
    }

private:
    struct ChainEntry {
        MarkovSpec chain;
        std::unique_ptr<Denoiser> denoiser;
    };
    std::map<ChainKey, ChainEntry> chains_;
    std::unique_ptr<RemoteDenoiser> remote_;
};

// One full decode into a RunResult wrapper, used by the baseline and
// majority methods (which are not engine runs).
inline RunResult fixed_budget_run(const PreparedQuestion& q, const GenerationConfig& cfg,
                                  const CommitPolicy& policy, std::size_t samples) {
    RunResult result;
    result.stop_reason = StopReason::budget_exhausted;
    for (std::size_t i = 1; i <= samples; ++i) {
        MaskedSequence seq(q.prompt, cfg.gen_len);
        Rng rng(derive_seed(cfg.seed, i));
        result.steps.start_sample();
        decode_sequence(seq, make_schedule(cfg.gen_len, cfg.block_size), cfg, policy, *q.denoiser,
                        rng, result.steps);
        result.samples.push_back(seq.gen());
        result.per_sample_answers.push_back(extract_answer(seq.gen(), q.extractor));
    }
    result.samples_used = samples;
    result.final_answer = majority_vote(result.per_sample_answers);
    return result;
}

inline nlohmann::json config_snapshot(const RunOptions& options) {
    const GenerationConfig& cfg = options.cfg;
    const ConsistencyParams& cp = options.cparams;
    nlohmann::json j;
    j["method"] = to_string(options.method);
    j["gen_len"] = cfg.gen_len;
    j["block_size"] = cfg.block_size;
    j["alpha"] = std::isinf(cfg.alpha) ? nlohmann::json("inf") : nlohmann::json(cfg.alpha);
    j["temperature"] = cfg.temperature;
    j["top_p"] = cfg.top_p;
    j["max_samples"] = cfg.max_samples;
    j["stop_count"] = cp.c_stop;
    j["tau_frac"] = cp.tau_frac;
    j["min_agree"] = cp.min_agree;
    j["tau_ans"] = cp.tau_ans;
    j["count_only_stop"] = cp.count_only_stop;
    j["seed"] = cfg.seed;
    j["epsilon"] = options.epsilon;
    j["entropy_on"] = "temperature_adjusted";
    return j;
}

}  // namespace detail

// Runs one method over a task set. Questions execute concurrently up to
// `jobs`; per-question seeds are keyed by task id, so results are invariant
// under task-file reordering and scheduling.
inline MethodOutcome run_method(const std::vector<TaskRecord>& tasks, const RunOptions& options) {
    if (tasks.empty()) throw TaskError("run_method: empty task set");
    options.cfg.validate();
    options.cparams.validate();

    const detail::DenoiserPool pool(tasks, options);
    const std::string label = options.label.empty() ? to_string(options.method) : options.label;

    std::vector<std::optional<QuestionResult>> slots(tasks.size());
    std::vector<bool> skipped(tasks.size(), false);
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> abort{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto run_question = [&](const TaskRecord& task) -> QuestionResult {
        detail::PreparedQuestion q = pool.prepare(task, options);
        GenerationConfig cfg = options.cfg;
        if (task.synthetic && cfg.gen_len != q.gen_len) {
            cfg.gen_len = q.gen_len;  // synthetic tasks carry their own layout
        }
        cfg.seed = derive_seed(options.cfg.seed, stable_hash(task.id));

        QuestionResult result;
        result.id = task.id;
        result.method_label = label;
        switch (options.method) {
            case Method::baseline:
                result.run = detail::fixed_budget_run(q, cfg, CommitPolicy::per_step(1), 1);
                break;
            case Method::majority:
                result.run =
                    detail::fixed_budget_run(q, cfg, CommitPolicy::per_step(2), cfg.max_samples);
                break;
            case Method::dvoting:
                result.run = dvoting_run(q.prompt, cfg, options.cparams, *q.denoiser,
                                         make_schedule(cfg.gen_len, cfg.block_size), q.extractor);
                break;
        }
        result.correct =
            result.run.final_answer.parseable && result.run.final_answer.value == task.gold;
        return result;
    };

    auto worker = [&] {
        while (!abort.load()) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= tasks.size()) break;
            try {
                slots[i] = run_question(tasks[i]);
            } catch (const TaskError& e) {
                log_warn("task '" + tasks[i].id + "' skipped: " + e.what());
                skipped[i] = true;
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                abort.store(true);
                break;
            }
        }
    };

    const int jobs = std::max(1, options.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    MethodOutcome outcome;
    outcome.report.label = label;
    outcome.report.method = options.method;
    outcome.report.config_snapshot = detail::config_snapshot(options);
    std::uint64_t total_steps = 0;
    std::size_t total_samples = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!slots[i]) continue;
        const QuestionResult& q = *slots[i];
        total_steps += q.run.steps.forwards();
        total_samples += q.run.samples_used;
        correct += q.correct;
        outcome.report.stop_reasons[to_string(q.run.stop_reason)]++;
        outcome.results.push_back(q);
    }
    if (outcome.results.empty()) throw TaskError("run_method: every task was skipped");
    const double n = static_cast<double>(outcome.results.size());
    outcome.report.questions = outcome.results.size();
    outcome.report.accuracy = static_cast<double>(correct) / n;
    outcome.report.mean_steps = static_cast<double>(total_steps) / n;
    outcome.report.mean_samples = static_cast<double>(total_samples) / n;
    return outcome;
}

enum class SweepAxis { n, block, alpha };

inline SweepAxis sweep_axis_from(const std::string& s) {
    if (s == "n") return SweepAxis::n;
    if (s == "block") return SweepAxis::block;
    if (s == "alpha") return SweepAxis::alpha;
    throw ConfigError("unknown sweep axis: " + s);
}

// One dvoting report per axis value; all points share the base seed so the
// comparison is paired question by question.
inline std::vector<MethodOutcome> sweep(const std::vector<TaskRecord>& tasks,
                                        const RunOptions& base,
                                        SweepAxis axis,
                                        const std::vector<double>& values) {
    if (values.empty()) throw DomainError("sweep: values must be non-empty");
    std::vector<MethodOutcome> outcomes;
    for (double value : values) {
        RunOptions options = base;
        options.method = Method::dvoting;
        char label[64];
        switch (axis) {
            case SweepAxis::n: {
                if (value < 1.0 || value != std::floor(value)) {
                    throw DomainError("sweep: n values must be positive integers");
                }
                options.cfg.max_samples = static_cast<std::size_t>(value);
                std::snprintf(label, sizeof(label), "dvoting@n=%zu", options.cfg.max_samples);
                break;
            }
            case SweepAxis::block: {
                if (value < 1.0 || value != std::floor(value)) {
                    throw DomainError("sweep: block values must be positive integers");
                }
                options.cfg.block_size = static_cast<std::size_t>(value);
                std::snprintf(label, sizeof(label), "dvoting@block=%zu", options.cfg.block_size);
                break;
            }
            case SweepAxis::alpha: {
                if (!(value >= 0.0)) throw DomainError("sweep: alpha values must be >= 0");
                options.cfg.alpha = value;
                std::snprintf(label, sizeof(label), "dvoting@alpha=%s", format6(value).c_str());
                break;
            }
        }
        options.label = label;
        outcomes.push_back(run_method(tasks, options));
    }
    return outcomes;
}

}  // namespace dvote
