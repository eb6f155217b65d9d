#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dvote/engine.hpp"
#include "dvote/errors.hpp"

namespace dvote {

enum class Method { baseline, majority, dvoting };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::baseline: return "baseline";
        case Method::majority: return "majority";
        case Method::dvoting: return "dvoting";
    }
    return "unknown";
}

inline Method method_from(const std::string& s) {
    if (s == "baseline") return Method::baseline;
    if (s == "majority") return Method::majority;
    if (s == "dvoting") return Method::dvoting;
    throw ConfigError("unknown method: " + s);
}

// Benefits per cost: accuracy gain over the base method divided by the ratio
// of new to base step counts. Accuracies are percentages.
inline double bpc(double acc_new, double acc_base, double steps_new, double steps_base) {
    if (!(steps_new > 0.0) || !(steps_base > 0.0)) {
        throw DomainError("bpc: step counts must be positive");
    }
    return (acc_new - acc_base) / (steps_new / steps_base);
}

// Fix a value to 6 significant digits so emitted artifacts are byte-stable
// and diff-friendly.
inline double round6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::strtod(buf, nullptr);
}

inline std::string format6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct QuestionResult {
    std::string id;
    std::string method_label;
    RunResult run;
    bool correct = false;
};

struct MethodReport {
    std::string label;  // method name, plus the sweep point when applicable
    Method method = Method::baseline;
    std::size_t questions = 0;
    double accuracy = 0.0;
    double mean_steps = 0.0;
    double mean_samples = 0.0;
    double bpc_vs_baseline = 0.0;
    bool has_bpc = false;
    std::map<std::string, double> speedup_vs;  // label -> steps ratio
    std::map<std::string, std::size_t> stop_reasons;
    nlohmann::json config_snapshot;
};

struct MethodOutcome {
    MethodReport report;
    std::vector<QuestionResult> results;
};

// Cross-report fields: BPC against the baseline report (when present) and
// pairwise step-ratio speedups.
inline void link_reports(std::vector<MethodOutcome>& outcomes) {
    const MethodReport* base = nullptr;
    for (const auto& o : outcomes) {
        if (o.report.method == Method::baseline) {
            base = &o.report;
            break;
        }
    }
    for (auto& o : outcomes) {
        if (base && base != &o.report && base->mean_steps > 0.0 && o.report.mean_steps > 0.0) {
            o.report.bpc_vs_baseline = bpc(o.report.accuracy * 100.0, base->accuracy * 100.0,
                                           o.report.mean_steps, base->mean_steps);
            o.report.has_bpc = true;
        }
        for (const auto& other : outcomes) {
            if (&other == &o || !(o.report.mean_steps > 0.0)) continue;
            o.report.speedup_vs[other.report.label] =
                round6(other.report.mean_steps / o.report.mean_steps);
        }
    }
}

namespace detail {

inline nlohmann::json report_json(const MethodReport& r) {
    nlohmann::json j;
    j["method"] = r.label;
    j["questions"] = r.questions;
    j["accuracy"] = round6(r.accuracy);
    j["mean_steps"] = round6(r.mean_steps);
    j["mean_samples"] = round6(r.mean_samples);
    if (r.has_bpc) {
        j["bpc"] = round6(r.bpc_vs_baseline);
    } else {
        j["bpc"] = nullptr;
    }
    nlohmann::json speedups = nlohmann::json::object();
    for (const auto& [label, ratio] : r.speedup_vs) speedups[label] = ratio;
    j["speedup_vs"] = speedups;
    nlohmann::json stops = nlohmann::json::object();
    for (const auto& [reason, count] : r.stop_reasons) stops[reason] = count;
    j["stop_reasons"] = stops;
    j["config"] = r.config_snapshot;
    return j;
}

// Consistency-level histogram bins ("1/5".."5/5") and NUPR@k means, the plot
// data behind the observation figures.
inline void emit_plotdata(const std::vector<MethodOutcome>& outcomes,
                          const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    std::ofstream hist(dir / "consistency_hist.csv");
    hist << "method,bin,count\n";
    for (const auto& o : outcomes) {
        std::map<std::string, std::size_t> bins;
        for (const auto& q : o.results) {
            const std::size_t k = q.run.per_sample_answers.size();
            if (k == 0) continue;
            const double level = voting_consistency_level(q.run.per_sample_answers);
            const auto votes = static_cast<std::size_t>(std::lround(level * static_cast<double>(k)));
            bins[std::to_string(votes) + "/" + std::to_string(k)]++;
        }
        for (const auto& [bin, count] : bins) {
            hist << o.report.label << "," << bin << "," << count << "\n";
        }
    }

    std::ofstream nupr(dir / "nupr.csv");
    nupr << "method,k,nupr\n";
    for (const auto& o : outcomes) {
        for (std::size_t k = 2; k <= 3; ++k) {
            double total = 0.0;
            std::size_t counted = 0;
            for (const auto& q : o.results) {
                if (q.run.samples.size() < k) continue;
                SampleSet set{q.run.samples, q.run.per_sample_answers};
                total += nupr_at_k(set, k);
                ++counted;
            }
            if (counted > 0) {
                nupr << o.report.label << "," << k << "," << format6(total / counted) << "\n";
            }
        }
    }
}

}  // namespace detail

// Persists per-question results (results.jsonl, sorted by method label then
// id), the aggregate summary (summary.json / summary.csv), and plot data.
// Output bytes are a pure function of the inputs.
inline void emit_report(std::vector<MethodOutcome>& outcomes, const std::string& out_dir) {
    if (outcomes.empty()) throw DomainError("emit_report: need >= 1 report");
    link_reports(outcomes);
    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);

    std::ofstream results(dir / "results.jsonl");
    if (!results) throw Error("cannot write to output directory: " + out_dir);
    for (auto& o : outcomes) {
        std::stable_sort(o.results.begin(), o.results.end(),
                         [](const QuestionResult& a, const QuestionResult& b) { return a.id < b.id; });
        for (const auto& q : o.results) {
            nlohmann::json j;
            j["id"] = q.id;
            j["method"] = q.method_label;
            j["final_answer"] = q.run.final_answer.parseable ? q.run.final_answer.value : "";
            j["correct"] = q.correct;
            j["samples_used"] = q.run.samples_used;
            j["steps"] = q.run.steps.forwards();
            j["stop_reason"] = to_string(q.run.stop_reason);
            nlohmann::json answers = nlohmann::json::array();
            for (const Answer& a : q.run.per_sample_answers) {
                answers.push_back(a.parseable ? a.value : "");
            }
            j["per_sample_answers"] = answers;
            results << j.dump() << "\n";
        }
    }

    nlohmann::json summary;
    summary["reports"] = nlohmann::json::array();
    for (const auto& o : outcomes) summary["reports"].push_back(detail::report_json(o.report));
    std::ofstream(dir / "summary.json") << summary.dump(2) << "\n";

    std::ofstream csv(dir / "summary.csv");
    csv << "method,questions,accuracy,mean_steps,mean_samples,bpc\n";
    for (const auto& o : outcomes) {
        const auto& r = o.report;
        csv << r.label << "," << r.questions << "," << format6(r.accuracy) << ","
            << format6(r.mean_steps) << "," << format6(r.mean_samples) << ","
            << (r.has_bpc ? format6(r.bpc_vs_baseline) : "") << "\n";
    }

    detail::emit_plotdata(outcomes, dir / "plotdata");
}

}  // namespace dvote
