#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qkmin/cli.hpp"

using namespace qkmin;
using namespace qkmin::cli;

namespace {

json load(const std::string& name) {
    std::ifstream in(std::string(QKMIN_TEST_DATA_DIR) + "/" + name);
    return json::parse(in);
}

RunConfig example_config(Algorithm a) {
    RunConfig c;
    c.algorithm = a;
    c.k = 2;
    c.delta = 0.05;
    c.trials = 40;
    c.seed = 9;
    c.oracle.v = {0.1, 0.2, 0.3, 0.4, 0.5};
    return c;
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

}  // namespace

TEST(Config, ParseAndEchoRoundTrip) {
    const RunConfig c = parse_run_config(load("run_weak_example.json"));
    EXPECT_EQ(c.algorithm, Algorithm::weak);
    EXPECT_EQ(c.k, 2u);
    EXPECT_EQ(c.oracle.v.size(), 5u);
    const json echoed = to_json(c);
    const RunConfig again = parse_run_config(echoed);
    EXPECT_EQ(to_json(again), echoed);
    EXPECT_TRUE(echoed.contains("threads"));
    EXPECT_TRUE(echoed.contains("oracle"));
}

TEST(Config, UnknownFieldRejected) {
    EXPECT_THROW(parse_run_config(load("bad_field.json")), ConfigError);
    EXPECT_THROW(parse_run_config(json{{"oracle", {{"kind", "exact"}, {"bits", 3}}}}), ConfigError);
}

TEST(Config, CrossFieldChecks) {
    RunConfig c = example_config(Algorithm::weak);
    c.k = 6;
    EXPECT_THROW(validate_config(c), ConfigError);
    c = example_config(Algorithm::weak);
    c.delta = 1.0;
    EXPECT_THROW(validate_config(c), ConfigError);
    c = example_config(Algorithm::strong);
    c.oracle.kind = "fejer";
    c.oracle.grid_bits = 7;
    c.oracle.precision_bits = 7;
    EXPECT_THROW(validate_config(c), ConfigError);
    c.oracle.grid_bits = 10;
    EXPECT_NO_THROW(validate_config(c));
}

TEST(Config, AlgorithmNames) {
    for (auto a : {Algorithm::weak, Algorithm::strong, Algorithm::expectations, Algorithm::energies})
        EXPECT_EQ(parse_algorithm(to_string(a)), a);
    EXPECT_THROW(parse_algorithm("median"), ConfigError);
}

TEST(OracleSpec, BuildsEachKind) {
    const std::vector<double> v{0.2, 0.6};
    OracleSpec s;
    EXPECT_EQ(build_oracle(s, v, 0.01).row(0).size(), 1u);
    s.kind = "fejer";
    s.precision_bits = 6;
    s.median_reps = 3;
    EXPECT_DOUBLE_EQ(build_oracle(s, v, 0.01).claimed_eps(), 1.0 / 32);
    s.kind = "adversarial";
    s.mode = "split";
    EXPECT_EQ(build_oracle(s, v, 0.01).row(1).size(), 2u);
    EXPECT_EQ(parse_oracle_spec(to_json(s)).mode, "split");
    EXPECT_THROW(parse_oracle_spec(json{{"kind", "quantum"}}), ConfigError);
}

TEST(Run, ReproducibleJsonl) {
    RunConfig c = example_config(Algorithm::strong);
    c.deterministic = true;
    c.emit_transcripts = true;
    std::ostringstream a, b;
    run(c, &a);
    run(c, &b);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(lines(a.str()).size(), 40u);
    EXPECT_EQ(a.str().find("wall_ms"), std::string::npos);
}

TEST(Run, ThreadCountDoesNotChangeOutput) {
    RunConfig c = example_config(Algorithm::weak);
    c.deterministic = true;
    std::ostringstream one, four;
    run(c, &one);
    c.threads = 4;
    run(c, &four);
    EXPECT_EQ(one.str(), four.str());
}

TEST(Run, SummaryMatchesRejudgedRecords) {
    RunConfig c = example_config(Algorithm::weak);
    c.oracle.kind = "fejer";
    c.oracle.grid_bits = 9;
    c.oracle.precision_bits = 5;
    c.oracle.median_reps = 1;
    c.oracle.v.clear();
    c.n = 16;
    c.delta0 = 0.3;
    std::ostringstream out;
    const RunSummary s = run(c, &out);
    std::size_t successes = 0;
    std::size_t index = 0;
    for (const auto& line : lines(out.str())) {
        const TrialRecord r = parse_trial_record(json::parse(line));
        EXPECT_EQ(r.trial, index++);
        const auto v = rejudge(c, r);
        EXPECT_EQ(v.weak, r.verdict.weak);
        EXPECT_EQ(v.strong, r.verdict.strong);
        successes += v.weak;
    }
    EXPECT_EQ(successes, s.successes);
    ASSERT_TRUE(s.success_rate);
    EXPECT_DOUBLE_EQ(*s.success_rate, static_cast<double>(successes) / 40.0);
}

TEST(Run, ZeroTrials) {
    RunConfig c = example_config(Algorithm::weak);
    c.trials = 0;
    std::ostringstream out;
    const RunSummary s = run(c, &out);
    EXPECT_TRUE(out.str().empty());
    EXPECT_FALSE(s.success_rate);
    const json j = to_json(s);
    EXPECT_EQ(j.at("success_rate"), "n/a");
}

TEST(Run, AllEqualStrongAlwaysSucceeds) {
    RunConfig c = parse_run_config(load("run_strong_equal.json"));
    c.trials = 30;
    const RunSummary s = run(c, nullptr);
    ASSERT_TRUE(s.success_rate);
    EXPECT_DOUBLE_EQ(*s.success_rate, 1.0);
}

TEST(Run, InvalidOracleAbortsBeforeTrials) {
    RunConfig c = parse_run_config(load("validate_leak.json"));
    std::ostringstream out;
    EXPECT_THROW(run(c, &out), ValidationFailure);
    EXPECT_TRUE(out.str().empty());
}

TEST(Run, TrialRecordRoundTrip) {
    RunConfig c = example_config(Algorithm::strong);
    const TrialRecord r = run_trial(c, 3);
    const TrialRecord back = parse_trial_record(to_json(r, true));
    EXPECT_EQ(back.set, r.set);
    EXPECT_EQ(back.v, r.v);
    EXPECT_EQ(back.total_queries, r.total_queries);
    EXPECT_EQ(back.success, r.success);
    EXPECT_EQ(r.total_queries, (r.calls_plain + r.calls_adjoint + r.calls_controlled) * r.base_cost);
}

TEST(Validate, DataFiles) {
    EXPECT_TRUE(validate(parse_run_config(load("validate_exact.json"))).valid);
    EXPECT_FALSE(validate(parse_run_config(load("validate_leak.json"))).valid);
    EXPECT_TRUE(validate(parse_run_config(load("validate_fejer.json"))).valid);
}

TEST(Sweep, RejectsFewPoints) {
    EXPECT_THROW(sweep(parse_run_config(load("sweep_single_n.json"))), ConfigError);
}

TEST(Sweep, FitExponent) {
    EXPECT_NEAR(fit_loglog_exponent({64, 256, 1024}, {8, 16, 32}), 0.5, 1e-12);
    EXPECT_NEAR(fit_loglog_exponent({1, 10, 100}, {3, 30, 300}), 1.0, 1e-12);
    EXPECT_THROW(fit_loglog_exponent({1, 1, 1}, {1, 2, 3}), std::domain_error);
}

TEST(Sweep, SmallGridWritesCsv) {
    RunConfig c;
    c.algorithm = Algorithm::strong;
    c.k = 2;
    c.trials = 5;
    c.n_values = {8, 16, 32};
    c.k_values = {1, 2};
    const SweepSummary s = sweep(c);
    EXPECT_EQ(s.rows.size(), 6u);
    EXPECT_EQ(s.exponent_by_k.size(), 2u);
    std::ostringstream csv;
    write_csv(s, csv);
    const auto ls = lines(csv.str());
    ASSERT_EQ(ls.size(), 7u);
    EXPECT_EQ(ls[0], "n,k,mean_queries,std,success");
}

TEST(Apps, ExpectationInstanceJson) {
    const RunConfig c = parse_run_config(load("app_expectations.json"));
    EXPECT_EQ(c.algorithm, Algorithm::expectations);
    const json inst = json::parse(R"({"dim": 2, "pairs": [{"rho": [[1, 0], [0, 0], [0, 0], [0, 0]],
                                                          "observable": [[0.3, 0], [0, 0], [0, 0], [0, 0]]}]})");
    const auto parsed = parse_expectation_instance(inst);
    EXPECT_NEAR(parsed.values()[0], 0.3, 1e-15);
    EXPECT_EQ(parse_expectation_instance(to_json(parsed)).values(), parsed.values());
}

TEST(Apps, SpectrumInstanceJson) {
    const auto s = parse_spectrum_instance(json{{"lambda", {0.11, 0.17}}, {"beta", 1.0}});
    EXPECT_EQ(s.n(), 2u);
    EXPECT_EQ(parse_spectrum_instance(to_json(s)).lambda(), s.lambda());
}
