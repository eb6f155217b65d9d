#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dvote/report.hpp"
#include "dvote/runner.hpp"
#include "dvote/tasks.hpp"

using namespace dvote;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("dvote_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::vector<TaskRecord> small_suite(std::size_t count, std::uint64_t seed) {
    SynthOptions opt;
    opt.vocab = 12;
    opt.gen_len = 24;
    opt.prompt_len = 6;
    opt.count = count;
    opt.seed = seed;
    return make_synthetic_tasks(opt);
}

RunOptions suite_options(Method method, std::uint64_t seed, double epsilon = 0.0) {
    RunOptions options;
    options.method = method;
    options.cfg.gen_len = 24;
    options.cfg.block_size = 8;
    options.cfg.seed = seed;
    options.epsilon = epsilon;
    return options;
}

}  // namespace

TEST_CASE("bpc") {
    // worked reference figure: (78.24 - 70.58) / (170.4 / 128.0)
    CHECK_THAT(bpc(78.24, 70.58, 170.4, 128.0), Catch::Matchers::WithinAbs(5.75, 0.01));
    CHECK(bpc(50.0, 50.0, 700.0, 128.0) == 0.0);
    CHECK_THAT(bpc(80.0, 70.0, 256.0, 128.0), Catch::Matchers::WithinAbs(5.0, 1e-12));
    CHECK_THROWS_AS(bpc(80.0, 70.0, 0.0, 128.0), DomainError);
    CHECK_THROWS_AS(bpc(80.0, 70.0, 128.0, -1.0), DomainError);
}

TEST_CASE("task ingestion") {
    const auto dir = temp_dir("ingest");
    SECTION("empty file yields an empty list") {
        std::ofstream(dir / "empty.jsonl");
        CHECK(ingest_tasks((dir / "empty.jsonl").string()).empty());
    }
    SECTION("valid lines round-trip") {
        const auto tasks = small_suite(3, 5);
        write_tasks(tasks, (dir / "tasks.jsonl").string());
        const auto back = ingest_tasks((dir / "tasks.jsonl").string());
        REQUIRE(back.size() == 3);
        CHECK(back[0].id == tasks[0].id);
        CHECK(back[0].gold == tasks[0].gold);
        CHECK(back[1].synthetic->seed == tasks[1].synthetic->seed);
    }
    SECTION("malformed line names its line number") {
        std::ofstream out(dir / "bad.jsonl");
        out << R"({"id": "a", "prompt": [1], "gold": "1", "answer_type": "numeric"})" << "\n";
        out << "{oops\n";
        out.close();
        CHECK_THROWS_WITH(ingest_tasks((dir / "bad.jsonl").string()),
                          Catch::Matchers::ContainsSubstring("line 2"));
    }
    SECTION("duplicate ids name both lines") {
        std::ofstream out(dir / "dup.jsonl");
        out << R"({"id": "a", "prompt": [1], "gold": "1", "answer_type": "numeric"})" << "\n";
        out << R"({"id": "a", "prompt": [2], "gold": "2", "answer_type": "numeric"})" << "\n";
        out.close();
        CHECK_THROWS_WITH(ingest_tasks((dir / "dup.jsonl").string()),
                          Catch::Matchers::ContainsSubstring("lines 1 and 2"));
    }
    SECTION("missing file") {
        CHECK_THROWS_AS(ingest_tasks((dir / "nope.jsonl").string()), TaskError);
    }
}

TEST_CASE("synthetic generation is deterministic and self-consistent") {
    const auto a = small_suite(10, 77);
    const auto b = small_suite(10, 77);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].gold == b[i].gold);
    }
    // gold equals the greedy reference answer recomputed from the descriptor
    const MarkovSpec chain = build_peaked_chain(a[0].synthetic->vocab, a[0].synthetic->peak,
                                                a[0].synthetic->chain_seed);
    for (const auto& task : a) {
        const RealizedQuestion q = realize_synthetic(*task.synthetic, chain);
        CHECK(q.gold.value == task.gold);
    }
}

TEST_CASE("baseline on the exact oracle at T=0 is perfect and costs L steps") {
    const auto tasks = small_suite(10, 3);
    RunOptions options = suite_options(Method::baseline, 11);
    options.cfg.temperature = 0.0;
    const MethodOutcome outcome = run_method(tasks, options);
    CHECK(outcome.report.accuracy == 1.0);
    CHECK(outcome.report.mean_steps == 24.0);  // full steps: one per position
    for (const auto& q : outcome.results) {
        CHECK(q.run.samples_used == 1);
        CHECK(q.run.steps.forwards() == 24);
    }
}

TEST_CASE("majority-mode steps are exactly n times the per-sample cost") {
    const auto tasks = small_suite(8, 9);
    RunOptions options = suite_options(Method::majority, 13, 0.1);
    const MethodOutcome outcome = run_method(tasks, options);
    for (const auto& q : outcome.results) {
        REQUIRE(q.run.steps.per_sample().size() == 5);
        const auto first = q.run.steps.per_sample()[0];
        for (const auto s : q.run.steps.per_sample()) CHECK(s == first);
        CHECK(q.run.steps.forwards() == 5 * first);
        // half-steps decoder: ceil(8/2) per block, three blocks of 8
        CHECK(first == 12);
    }
}

TEST_CASE("per-question results are invariant under task reordering") {
    auto tasks = small_suite(12, 21);
    RunOptions options = suite_options(Method::dvoting, 5, 0.1);

    const MethodOutcome forward = run_method(tasks, options);
    std::reverse(tasks.begin(), tasks.end());
    const MethodOutcome reversed = run_method(tasks, options);

    auto by_id = [](const MethodOutcome& o) {
        std::map<std::string, std::pair<bool, std::uint64_t>> m;
        for (const auto& q : o.results) m[q.id] = {q.correct, q.run.steps.forwards()};
        return m;
    };
    CHECK(by_id(forward) == by_id(reversed));
    CHECK(forward.report.accuracy == reversed.report.accuracy);
    CHECK(forward.report.mean_steps == reversed.report.mean_steps);
}

TEST_CASE("concurrent execution matches single-threaded results") {
    const auto tasks = small_suite(12, 33);
    RunOptions serial = suite_options(Method::dvoting, 17, 0.1);
    RunOptions parallel = serial;
    parallel.jobs = 4;
    const MethodOutcome a = run_method(tasks, serial);
    const MethodOutcome b = run_method(tasks, parallel);
    REQUIRE(a.results.size() == b.results.size());
    CHECK(a.report.accuracy == b.report.accuracy);
    CHECK(a.report.mean_steps == b.report.mean_steps);
}

TEST_CASE("emit_report writes byte-stable artifacts") {
    const auto tasks = small_suite(6, 41);
    std::vector<MethodOutcome> outcomes;
    outcomes.push_back(run_method(tasks, suite_options(Method::baseline, 2, 0.1)));
    outcomes.push_back(run_method(tasks, suite_options(Method::dvoting, 2, 0.1)));

    const auto dir_a = temp_dir("emit_a");
    const auto dir_b = temp_dir("emit_b");
    auto copy = outcomes;
    emit_report(outcomes, dir_a.string());
    emit_report(copy, dir_b.string());

    for (const char* name : {"results.jsonl", "summary.json", "summary.csv",
                             "plotdata/consistency_hist.csv", "plotdata/nupr.csv"}) {
        INFO(name);
        CHECK(slurp(dir_a / name) == slurp(dir_b / name));
        CHECK(!slurp(dir_a / name).empty());
    }

    // cross-report fields are linked: dvoting has a BPC against baseline
    const auto summary = nlohmann::json::parse(slurp(dir_a / "summary.json"));
    REQUIRE(summary["reports"].size() == 2);
    CHECK(summary["reports"][0]["bpc"].is_null());
    CHECK(summary["reports"][1]["bpc"].is_number());
    CHECK(summary["reports"][1]["speedup_vs"].contains("baseline"));
}

TEST_CASE("consistency histogram bins the modal vote count") {
    MethodOutcome outcome;
    outcome.report.label = "dvoting";
    outcome.report.method = Method::dvoting;
    outcome.report.questions = 1;
    QuestionResult q;
    q.id = "q0";
    q.method_label = "dvoting";
    for (const char* v : {"a", "a", "b", "a", "c"}) {
        q.run.per_sample_answers.push_back(Answer::parsed(v));
    }
    q.run.samples_used = 5;
    outcome.results.push_back(q);

    std::vector<MethodOutcome> outcomes{outcome};
    const auto dir = temp_dir("hist");
    emit_report(outcomes, dir.string());
    CHECK_THAT(slurp(dir / "plotdata/consistency_hist.csv"),
               Catch::Matchers::ContainsSubstring("dvoting,3/5,1"));
}

TEST_CASE("sweep") {
    const auto tasks = small_suite(8, 55);
    RunOptions base = suite_options(Method::dvoting, 23, 0.1);

    SECTION("n axis: budget 1 equals a degenerate dvoting run") {
        const auto outcomes = sweep(tasks, base, SweepAxis::n, {1, 5});
        REQUIRE(outcomes.size() == 2);
        CHECK(outcomes[0].report.label == "dvoting@n=1");
        RunOptions n1 = base;
        n1.cfg.max_samples = 1;
        const MethodOutcome direct = run_method(tasks, n1);
        CHECK(outcomes[0].report.accuracy == direct.report.accuracy);
        CHECK(outcomes[0].report.mean_steps == direct.report.mean_steps);
        for (const auto& q : outcomes[0].results) CHECK(q.run.samples_used == 1);
    }
    SECTION("alpha axis: strict threshold costs at least as much as commit-all") {
        const auto outcomes =
            sweep(tasks, base, SweepAxis::alpha, {0.0, std::numeric_limits<double>::infinity()});
        REQUIRE(outcomes.size() == 2);
        CHECK(outcomes[0].report.mean_steps >= outcomes[1].report.mean_steps);
    }
    SECTION("block axis: both extremes complete") {
        const auto outcomes = sweep(tasks, base, SweepAxis::block, {4, 24});
        REQUIRE(outcomes.size() == 2);
        for (const auto& o : outcomes) CHECK(o.report.questions == tasks.size());
    }
    SECTION("invalid axis values") {
        CHECK_THROWS_AS(sweep(tasks, base, SweepAxis::n, {2.5}), DomainError);
        CHECK_THROWS_AS(sweep(tasks, base, SweepAxis::n, {0}), DomainError);
        CHECK_THROWS_AS(sweep(tasks, base, SweepAxis::alpha, {-1.0}), DomainError);
        CHECK_THROWS_AS(sweep(tasks, base, SweepAxis::n, {}), DomainError);
    }
}

TEST_CASE("voting beats the single sample on a noisy suite and dvoting stays cheap") {
    // the qualitative voting-gain claim at unit-test scale: dvoting accuracy
    // within 1% of baseline or better, with fewer steps than majority
    const auto tasks = small_suite(40, 71);
    const MethodOutcome baseline = run_method(tasks, suite_options(Method::baseline, 3, 0.1));
    const MethodOutcome majority = run_method(tasks, suite_options(Method::majority, 3, 0.1));
    const MethodOutcome dvoting = run_method(tasks, suite_options(Method::dvoting, 3, 0.1));
    CHECK(dvoting.report.accuracy >= baseline.report.accuracy - 0.01);
    CHECK(dvoting.report.mean_steps < majority.report.mean_steps);
}

TEST_CASE("round6 formatting") {
    CHECK(format6(0.123456789) == "0.123457");
    CHECK(format6(170.4) == "170.4");
    CHECK(round6(0.123456789) == 0.123457);
    CHECK(format6(1234567.0) == "1.23457e+06");
}

TEST_CASE("empty task set is a run error") {
    CHECK_THROWS_AS(run_method({}, suite_options(Method::baseline, 1)), TaskError);
}
