#pragma once

// Experiment driver: configuration, JSON serialization of oracles, transcripts
// and instances, Monte-Carlo trial execution and query-scaling sweeps.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qkmin/apps.hpp"
#include "qkmin/kmin.hpp"
#include "qkmin/oracle.hpp"
#include "qkmin/verify.hpp"

namespace qkmin::cli {

using json = nlohmann::json;

/// Invalid configuration or input file.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An oracle failed validation; maps to exit code 2.
class ValidationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OracleSpec {
    std::string kind = "exact";
    int grid_bits = 10;
    /// Empty means a fresh uniform v in [0,1)^n per trial.
    std::vector<double> v;
    // fejer
    int precision_bits = 7;
    int median_reps = 0;  ///< 0: derived from delta0
    // adversarial
    double adv_eps = 0.02;
    double adv_delta = 0.0;
    std::string mode = "edge_high";
};

OracleSpec parse_oracle_spec(const json& j);
json to_json(const OracleSpec& spec);

/// Builds the oracle for a concrete v. `delta0` sets the Fejer median count
/// when the spec leaves it at 0.
oracle::ApproxOracle build_oracle(const OracleSpec& spec, const std::vector<double>& v, double delta0);

json to_json(const oracle::OracleValidationReport& report);
json to_json(const kmin::WeakRunTranscript& tr);
json to_json(const kmin::StrongRunTranscript& tr);
json to_json(const oracle::QueryLedger& ledger);

apps::ExpectationInstance parse_expectation_instance(const json& j);
json to_json(const apps::ExpectationInstance& instance);
apps::SpectrumInstance parse_spectrum_instance(const json& j);
json to_json(const apps::SpectrumInstance& spectrum);

enum class Algorithm { weak, strong, expectations, energies };

Algorithm parse_algorithm(const std::string& name);
std::string to_string(Algorithm a);

struct RunConfig {
    Algorithm algorithm = Algorithm::strong;
    std::size_t n = 0;  ///< 0: taken from the oracle's v
    std::size_t k = 1;
    double eps = 0.0;     ///< 0: the oracle's claimed eps
    double delta = 0.1;
    double delta0 = 0.0;  ///< 0: derived (Fejer: delta / (100 n d sqrt(k d)); apps: delta / (100 n^3 sqrt k))
    OracleSpec oracle;
    std::size_t trials = 100;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::vector<std::size_t> n_values;
    std::vector<std::size_t> k_values;
    std::optional<json> instance;
    std::size_t instance_dim = 4;
    double beta = 1.0;
    bool deterministic = false;
    bool emit_transcripts = false;
    double exponent_min = 0.4;
    double exponent_max = 0.75;
    std::string jsonl_path;
    std::string summary_path;
    std::string csv_path;
    std::string report_path;
};

/// Unknown keys and out-of-range values raise ConfigError.
RunConfig parse_run_config(const json& j);
/// Every field, defaults included.
json to_json(const RunConfig& config);
/// Cross-field checks; raises ConfigError.
void validate_config(const RunConfig& config);

struct TrialRecord {
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::vector<double> v;
    std::vector<std::size_t> set;
    verify::Verdict verdict;
    bool success = false;
    std::uint64_t calls_plain = 0;
    std::uint64_t calls_adjoint = 0;
    std::uint64_t calls_controlled = 0;
    std::uint64_t base_cost = 1;
    std::uint64_t total_queries = 0;
    double wall_ms = 0.0;
    std::optional<json> transcript;
};

json to_json(const TrialRecord& record, bool include_wall);
TrialRecord parse_trial_record(const json& j);

/// Eps and grid step the verdicts of a trial are judged with, in the units
/// of the returned v.
struct Tolerances {
    double eps;
    double step;
};

Tolerances tolerances_for(const RunConfig& config);

/// The eps handed to the finder, in oracle value units.
double finder_eps(const RunConfig& config);

/// The oracle failure budget: config.delta0, or the derived default.
double effective_delta0(const RunConfig& config);

/// Runs one trial on substream `trial` of config.seed.
TrialRecord run_trial(const RunConfig& config, std::size_t trial);

/// Recomputes the verdict of a stored record.
verify::Verdict rejudge(const RunConfig& config, const TrialRecord& record);

struct RunSummary {
    std::size_t trials = 0;
    std::size_t successes = 0;
    std::optional<double> success_rate;
    std::optional<verify::Interval> wilson;
    double mean_queries = 0.0;
    double std_queries = 0.0;
    /// Threshold 1 - delta - 3 sigma used by --check.
    double required_rate = 0.0;
    bool check_passed = true;
};

json to_json(const RunSummary& summary);

/// Validates the oracle of trial 0 (ValidationFailure if invalid), then runs
/// all trials on `threads` workers, writing one JSON line per trial in
/// trial order.
RunSummary run(const RunConfig& config, std::ostream* jsonl);

struct SweepRow {
    std::size_t n;
    std::size_t k;
    double mean_queries;
    double std_queries;
    double success;
};

struct SweepSummary {
    std::vector<SweepRow> rows;
    /// Log-log slope of mean queries vs n, per k with at least 3 n values.
    std::map<std::size_t, double> exponent_by_k;
    bool check_passed = true;
};

json to_json(const SweepSummary& summary);
void write_csv(const SweepSummary& summary, std::ostream& out);

/// Least-squares slope of log y on log x.
double fit_loglog_exponent(const std::vector<double>& x, const std::vector<double>& y);

/// Requires at least 3 distinct n values.
SweepSummary sweep(const RunConfig& config);

/// Validation report for the oracle of trial 0 at (eps, delta0), defaulting
/// to the oracle's claimed values.
oracle::OracleValidationReport validate(const RunConfig& config);

}  // namespace qkmin::cli
