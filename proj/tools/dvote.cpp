// dvote: decode synthetic benchmark suites with baseline / majority-voting /
// dVoting methods, sweep hyperparameters, generate task files, and validate
// remote denoiser endpoints.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dvote/dvote.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitTask = 2;
constexpr int kExitDenoiser = 3;

struct CommonArgs {
    std::string tasks_path;
    std::string methods = "dvoting";
    std::size_t gen_len = 128;
    std::size_t block_size = 0;  // 0 = pair with gen_len
    std::string alpha = "0.3";   // string so "inf" parses portably
    double temperature = 0.6;
    double top_p = 1.0;
    std::size_t max_samples = 5;
    double tau_frac = 0.5;
    std::size_t min_agree = 2;
    std::size_t stop_count = 2;
    double tau_ans = 0.5;
    bool count_only_stop = false;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string out_dir = "out";
    std::string remote_url;
    std::int32_t remote_vocab = 16;
    dvote::TokenId sep_id = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--tasks", args.tasks_path, "task file (JSON lines)")->required();
    cmd->add_option("--gen-len", args.gen_len, "generation length L");
    cmd->add_option("--block-size", args.block_size, "block size B (0 pairs with L: 128/8, 256/16, 512/32)");
    cmd->add_option("--alpha", args.alpha, "entropy threshold in nats ('inf' allowed)");
    cmd->add_option("--temperature", args.temperature, "sampling temperature (0 = greedy)");
    cmd->add_option("--top-p", args.top_p, "optional nucleus filter (1.0 = off)");
    cmd->add_option("--max-samples", args.max_samples, "sample budget n");
    cmd->add_option("--tau-frac", args.tau_frac, "token retention fraction");
    cmd->add_option("--min-agree", args.min_agree, "absolute retention floor");
    cmd->add_option("--stop-count", args.stop_count, "answer-convergence stop count (0 = off)");
    cmd->add_option("--tau-ans", args.tau_ans, "answer-dominance fraction");
    cmd->add_flag("--count-only-stop", args.count_only_stop,
                  "answer stop needs only stop-count agreeing samples, not a strict majority");
    cmd->add_option("--epsilon", args.epsilon, "perturbed-oracle mixing rate for synthetic tasks");
    cmd->add_option("--seed", args.seed, "global seed");
    cmd->add_option("--jobs", args.jobs, "concurrent questions");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--remote-url", args.remote_url, "remote denoiser for literal-prompt tasks");
    cmd->add_option("--vocab", args.remote_vocab, "vocab size for the remote denoiser");
    cmd->add_option("--sep-id", args.sep_id, "answer separator token for literal-prompt tasks");
}

dvote::RunOptions to_options(const CommonArgs& args) {
    dvote::RunOptions options;
    options.cfg.gen_len = args.gen_len;
    options.cfg.block_size =
        args.block_size ? args.block_size : dvote::GenerationConfig::default_block_for(args.gen_len);
    try {
        options.cfg.alpha = std::stod(args.alpha);
    } catch (const std::exception&) {
        throw dvote::ConfigError("--alpha is not a number: " + args.alpha);
    }
    options.cfg.temperature = args.temperature;
    options.cfg.top_p = args.top_p;
    options.cfg.max_samples = args.max_samples;
    options.cfg.stop_count = args.stop_count;
    options.cfg.tau_frac = args.tau_frac;
    options.cfg.seed = args.seed;
    options.cparams.tau_frac = args.tau_frac;
    options.cparams.min_agree = args.min_agree;
    options.cparams.c_stop = args.stop_count;
    options.cparams.tau_ans = args.tau_ans;
    options.cparams.count_only_stop = args.count_only_stop;
    options.epsilon = args.epsilon;
    options.jobs = args.jobs;
    options.remote_url = args.remote_url;
    options.remote_vocab = args.remote_vocab;
    options.literal_sep = args.sep_id;
    return options;
}

std::vector<std::string> split_csv(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : csv) {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

int run_command(const CommonArgs& args) {
    const auto tasks = dvote::ingest_tasks(args.tasks_path);
    std::vector<dvote::MethodOutcome> outcomes;
    for (const std::string& name : split_csv(args.methods)) {
        dvote::RunOptions options = to_options(args);
        options.method = dvote::method_from(name);
        outcomes.push_back(dvote::run_method(tasks, options));
        const auto& r = outcomes.back().report;
        std::printf("%-10s accuracy %.4f  mean_steps %.1f  mean_samples %.2f\n", r.label.c_str(),
                    r.accuracy, r.mean_steps, r.mean_samples);
    }
    dvote::emit_report(outcomes, args.out_dir);
    std::printf("wrote %s/{results.jsonl,summary.json,summary.csv,plotdata}\n",
                args.out_dir.c_str());
    return kExitOk;
}

int sweep_command(const CommonArgs& args, const std::string& axis, const std::string& values_csv) {
    const auto tasks = dvote::ingest_tasks(args.tasks_path);
    std::vector<double> values;
    for (const std::string& v : split_csv(values_csv)) {
        try {
            values.push_back(std::stod(v));
        } catch (const std::exception&) {
            throw dvote::ConfigError("--values entry is not a number: " + v);
        }
    }
    auto outcomes = dvote::sweep(tasks, to_options(args), dvote::sweep_axis_from(axis), values);
    for (const auto& o : outcomes) {
        std::printf("%-18s accuracy %.4f  mean_steps %.1f  mean_samples %.2f\n",
                    o.report.label.c_str(), o.report.accuracy, o.report.mean_steps,
                    o.report.mean_samples);
    }
    dvote::emit_report(outcomes, args.out_dir);
    std::printf("wrote %s/{results.jsonl,summary.json,summary.csv,plotdata}\n",
                args.out_dir.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dVoting decoding engine and benchmark harness"};
    app.require_subcommand(1);

    CommonArgs run_args;
    CLI::App* run = app.add_subcommand("run", "run one or more methods over a task file");
    add_common(run, run_args);
    run->add_option("--method", run_args.methods,
                    "baseline|majority|dvoting, or a comma-separated list");

    CommonArgs sweep_args;
    std::string sweep_axis;
    std::string sweep_values;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "sweep a dvoting hyperparameter");
    add_common(sweep_cmd, sweep_args);
    sweep_cmd->add_option("--axis", sweep_axis, "n|block|alpha")->required();
    sweep_cmd->add_option("--values", sweep_values, "comma-separated axis values")->required();

    dvote::SynthOptions synth_opt;
    std::string synth_out;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic task file");
    synth->add_option("--vocab", synth_opt.vocab, "vocabulary size");
    synth->add_option("--length", synth_opt.gen_len, "generation length per task");
    synth->add_option("--prompt-len", synth_opt.prompt_len, "prompt length per task");
    synth->add_option("--peak", synth_opt.peak, "dominant-successor probability of the chain");
    synth->add_option("--count", synth_opt.count, "number of tasks");
    synth->add_option("--seed", synth_opt.seed, "generator seed");
    synth->add_option("--out", synth_out, "output task file")->required();

    std::string check_url;
    std::int32_t check_vocab = 16;
    CLI::App* check = app.add_subcommand("serve-check", "validate a remote denoiser endpoint");
    check->add_option("--url", check_url, "endpoint base URL")->required();
    check->add_option("--vocab", check_vocab, "expected vocabulary size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (run->parsed()) return run_command(run_args);
        if (sweep_cmd->parsed()) return sweep_command(sweep_args, sweep_axis, sweep_values);
        if (synth->parsed()) {
            const auto tasks = dvote::make_synthetic_tasks(synth_opt);
            dvote::write_tasks(tasks, synth_out);
            std::printf("wrote %zu tasks to %s\n", tasks.size(), synth_out.c_str());
            return kExitOk;
        }
        if (check->parsed()) {
            const auto result = dvote::serve_check(check_url, dvote::VocabSpec{check_vocab});
            std::printf("%s: %s\n", result.ok ? "ok" : "protocol error", result.message.c_str());
            return result.ok ? kExitOk : kExitDenoiser;
        }
    } catch (const dvote::ConfigError& e) {
        dvote::log_error(e.what());
        return kExitConfig;
    } catch (const dvote::TaskError& e) {
        dvote::log_error(e.what());
        return kExitTask;
    } catch (const dvote::DenoiserError& e) {
        dvote::log_error(e.what());
        return kExitDenoiser;
    } catch (const dvote::DomainError& e) {
        dvote::log_error(e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        dvote::log_error(e.what());
        return kExitConfig;
    }
    return kExitConfig;
}
