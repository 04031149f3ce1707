// qkmin: experiment driver for approximate k-minimum finding.
//
//   qkmin validate --config oracle.json
//   qkmin run --config run.json --out trials.jsonl --summary summary.json
//   qkmin sweep --config sweep.json --csv sweep.csv
//   qkmin app-expectations --n 16 --k 3 --eps 0.05
//   qkmin app-energies --config energies.json

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qkmin/cli.hpp"

namespace {

using qkmin::cli::json;
using qkmin::cli::RunConfig;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitValidation = 2;
constexpr int kExitCheck = 3;

struct Flags {
    std::string config_path;
    std::optional<std::string> algorithm;
    std::optional<std::size_t> n, k, trials;
    std::optional<double> eps, delta, delta0, beta;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> kind, mode;
    std::optional<int> grid_bits, precision_bits, median_reps;
    std::optional<double> adv_eps, adv_delta;
    std::vector<std::size_t> n_values, k_values;
    std::optional<std::string> instance_path;
    std::optional<std::size_t> instance_dim;
    std::string out, summary, csv, report;
    bool check = false;
    bool deterministic = false;
    bool transcripts = false;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config_path, "JSON run configuration");
    cmd->add_option("--n", f.n, "number of indices");
    cmd->add_option("--k", f.k, "set size");
    cmd->add_option("--eps", f.eps, "precision (0: oracle's claimed eps)");
    cmd->add_option("--delta", f.delta, "failure probability");
    cmd->add_option("--delta0", f.delta0, "oracle failure probability (0: derived)");
    cmd->add_option("--trials", f.trials, "Monte-Carlo trials");
    cmd->add_option("--seed", f.seed, "master seed (QKMIN_SEED overrides the config file)");
    cmd->add_option("--threads", f.threads, "worker threads");
    cmd->add_flag("--check", f.check, "exit 3 when the acceptance threshold is missed");
    cmd->add_flag("--deterministic", f.deterministic, "omit wall-clock fields");
    cmd->add_flag("--transcripts", f.transcripts, "include run transcripts in trial records");
}

void add_oracle(CLI::App* cmd, Flags& f) {
    cmd->add_option("--kind", f.kind, "oracle kind: exact, fejer, adversarial");
    cmd->add_option("--grid-bits", f.grid_bits, "value register bits");
    cmd->add_option("--precision-bits", f.precision_bits, "phase estimation bits (fejer)");
    cmd->add_option("--median-reps", f.median_reps, "median repetitions (fejer; 0: from delta0)");
    cmd->add_option("--adv-eps", f.adv_eps, "window half-width (adversarial)");
    cmd->add_option("--adv-delta", f.adv_delta, "leaked mass (adversarial)");
    cmd->add_option("--mode", f.mode, "edge_low, edge_high, split or leak (adversarial)");
}

RunConfig load_config(const Flags& f, std::optional<qkmin::cli::Algorithm> forced) {
    RunConfig c;
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        if (!in) throw qkmin::cli::ConfigError("cannot open config file " + f.config_path);
        c = qkmin::cli::parse_run_config(json::parse(in));
    }
    if (const char* env = std::getenv("QKMIN_SEED")) c.seed = std::stoull(env);
    if (forced) c.algorithm = *forced;
    if (f.algorithm) c.algorithm = qkmin::cli::parse_algorithm(*f.algorithm);
    if (f.n) c.n = *f.n;
    if (f.k) c.k = *f.k;
    if (f.eps) c.eps = *f.eps;
    if (f.delta) c.delta = *f.delta;
    if (f.delta0) c.delta0 = *f.delta0;
    if (f.trials) c.trials = *f.trials;
    if (f.seed) c.seed = *f.seed;
    if (f.threads) c.threads = *f.threads;
    if (f.beta) c.beta = *f.beta;
    if (f.kind) c.oracle.kind = *f.kind;
    if (f.grid_bits) c.oracle.grid_bits = *f.grid_bits;
    if (f.precision_bits) c.oracle.precision_bits = *f.precision_bits;
    if (f.median_reps) c.oracle.median_reps = *f.median_reps;
    if (f.adv_eps) c.oracle.adv_eps = *f.adv_eps;
    if (f.adv_delta) c.oracle.adv_delta = *f.adv_delta;
    if (f.mode) c.oracle.mode = *f.mode;
    if (!f.n_values.empty()) c.n_values = f.n_values;
    if (!f.k_values.empty()) c.k_values = f.k_values;
    if (f.instance_path) {
        std::ifstream in(*f.instance_path);
        if (!in) throw qkmin::cli::ConfigError("cannot open instance file " + *f.instance_path);
        c.instance = json::parse(in);
    }
    if (f.instance_dim) c.instance_dim = *f.instance_dim;
    if (f.deterministic) c.deterministic = true;
    if (f.transcripts) c.emit_transcripts = true;
    if (!f.out.empty()) c.jsonl_path = f.out;
    if (!f.summary.empty()) c.summary_path = f.summary;
    if (!f.csv.empty()) c.csv_path = f.csv;
    if (!f.report.empty()) c.report_path = f.report;
    return c;
}

void emit(const json& j, const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
        fallback << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

int cmd_validate(const RunConfig& c) {
    const auto report = qkmin::cli::validate(c);
    emit(qkmin::cli::to_json(report), c.report_path, std::cout);
    return report.valid ? kExitOk : kExitValidation;
}

int cmd_run(const RunConfig& c, bool check) {
    std::ofstream file;
    std::ostream* sink = &std::cout;
    if (!c.jsonl_path.empty()) {
        file.open(c.jsonl_path);
        if (!file) throw std::runtime_error("cannot write " + c.jsonl_path);
        sink = &file;
    }
    const auto summary = qkmin::cli::run(c, sink);
    json j = qkmin::cli::to_json(summary);
    j["config"] = qkmin::cli::to_json(c);
    emit(j, c.summary_path, c.jsonl_path.empty() ? std::cerr : std::cout);
    return check && !summary.check_passed ? kExitCheck : kExitOk;
}

int cmd_sweep(const RunConfig& c, bool check) {
    const auto summary = qkmin::cli::sweep(c);
    if (!c.csv_path.empty()) {
        std::ofstream out(c.csv_path);
        if (!out) throw std::runtime_error("cannot write " + c.csv_path);
        qkmin::cli::write_csv(summary, out);
    } else {
        qkmin::cli::write_csv(summary, std::cout);
    }
    json j = qkmin::cli::to_json(summary);
    j["config"] = qkmin::cli::to_json(c);
    emit(j, c.summary_path, c.csv_path.empty() ? std::cerr : std::cout);
    return check && !summary.check_passed ? kExitCheck : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator for approximate k-minimum finding with approximate oracles"};
    app.require_subcommand(1);
    Flags f;

    auto* validate = app.add_subcommand("validate", "build the configured oracle and check it");
    add_common(validate, f);
    add_oracle(validate, f);
    validate->add_option("--report", f.report, "validation report path");

    auto* run = app.add_subcommand("run", "Monte-Carlo trials of a finder");
    add_common(run, f);
    add_oracle(run, f);
    run->add_option("--algorithm", f.algorithm, "weak, strong, expectations or energies");
    run->add_option("--out", f.out, "JSONL trial records path");
    run->add_option("--summary", f.summary, "summary JSON path");

    auto* sweep = app.add_subcommand("sweep", "query-scaling sweep over n (and k)");
    add_common(sweep, f);
    add_oracle(sweep, f);
    sweep->add_option("--algorithm", f.algorithm, "weak or strong");
    sweep->add_option("--n-values", f.n_values, "values of n")->delimiter(',');
    sweep->add_option("--k-values", f.k_values, "values of k")->delimiter(',');
    sweep->add_option("--csv", f.csv, "CSV path");
    sweep->add_option("--summary", f.summary, "summary JSON path");

    auto* app_exp = app.add_subcommand("app-expectations", "k-minimum expectation values");
    add_common(app_exp, f);
    app_exp->add_option("--instance", f.instance_path, "expectation instance JSON (default: random)");
    app_exp->add_option("--dim", f.instance_dim, "matrix dimension of random instances");
    app_exp->add_option("--out", f.out, "JSONL trial records path");
    app_exp->add_option("--summary", f.summary, "summary JSON path");

    auto* app_en = app.add_subcommand("app-energies", "k lowest eigen-energies");
    add_common(app_en, f);
    app_en->add_option("--instance", f.instance_path, "spectrum instance JSON (default: random)");
    app_en->add_option("--beta", f.beta, "norm bound of random spectra");
    app_en->add_option("--out", f.out, "JSONL trial records path");
    app_en->add_option("--summary", f.summary, "summary JSON path");

    CLI11_PARSE(app, argc, argv);

    try {
        using qkmin::cli::Algorithm;
        if (validate->parsed()) return cmd_validate(load_config(f, std::nullopt));
        if (run->parsed()) return cmd_run(load_config(f, std::nullopt), f.check);
        if (sweep->parsed()) return cmd_sweep(load_config(f, std::nullopt), f.check);
        if (app_exp->parsed()) return cmd_run(load_config(f, Algorithm::expectations), f.check);
        if (app_en->parsed()) return cmd_run(load_config(f, Algorithm::energies), f.check);
    } catch (const qkmin::cli::ValidationFailure& e) {
        std::cerr << "validation failure: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
