#include <cmath>
#include <set>

#include "qkmin/cli.hpp"

namespace qkmin::cli {

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const char* where) {
    if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw ConfigError(std::string(where) + ": unknown field '" + key + "'");
}

apps::HermitianMatrix parse_matrix(const json& j, std::size_t m) {
    if (!j.is_array() || j.size() != m * m) throw ConfigError("matrix: expected m*m [re, im] pairs");
    std::vector<apps::Complex> entries;
    entries.reserve(m * m);
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2) throw ConfigError("matrix: entries are [re, im] pairs");
        entries.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
    return apps::HermitianMatrix(m, entries);
}

json matrix_to_json(const apps::HermitianMatrix& h) {
    json out = json::array();
    for (std::size_t r = 0; r < h.dim(); ++r)
        for (std::size_t c = 0; c < h.dim(); ++c) out.push_back({h(r, c).real(), h(r, c).imag()});
    return out;
}

}  // namespace

OracleSpec parse_oracle_spec(const json& j) {
    reject_unknown(j, {"n", "grid_bits", "kind", "v", "params"}, "oracle");
    OracleSpec s;
    s.kind = get_or<std::string>(j, "kind", s.kind);
    if (s.kind != "exact" && s.kind != "fejer" && s.kind != "adversarial")
        throw ConfigError("oracle: kind must be exact, fejer or adversarial");
    s.grid_bits = get_or<int>(j, "grid_bits", s.grid_bits);
    s.v = get_or<std::vector<double>>(j, "v", {});
    if (j.contains("n") && !s.v.empty() && j["n"].get<std::size_t>() != s.v.size())
        throw ConfigError("oracle: n does not match the length of v");
    const json params = get_or<json>(j, "params", json::object());
    if (s.kind == "fejer") {
        reject_unknown(params, {"precision_bits", "median_reps"}, "oracle.params");
        s.precision_bits = get_or<int>(params, "precision_bits", s.precision_bits);
        s.median_reps = get_or<int>(params, "median_reps", s.median_reps);
    } else if (s.kind == "adversarial") {
        reject_unknown(params, {"eps", "delta", "mode"}, "oracle.params");
        s.adv_eps = get_or<double>(params, "eps", s.adv_eps);
        s.adv_delta = get_or<double>(params, "delta", s.adv_delta);
        s.mode = get_or<std::string>(params, "mode", s.mode);
        try {
            (void)oracle::parse_adversarial_mode(s.mode);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    } else if (!params.empty()) {
        throw ConfigError("oracle: exact oracles take no params");
    }
    return s;
}

json to_json(const OracleSpec& s) {
    json j{{"kind", s.kind}, {"grid_bits", s.grid_bits}};
    if (!s.v.empty()) {
        j["n"] = s.v.size();
        j["v"] = s.v;
    }
    if (s.kind == "fejer")
        j["params"] = {{"precision_bits", s.precision_bits}, {"median_reps", s.median_reps}};
    else if (s.kind == "adversarial")
        j["params"] = {{"eps", s.adv_eps}, {"delta", s.adv_delta}, {"mode", s.mode}};
    else
        j["params"] = json::object();
    return j;
}

oracle::ApproxOracle build_oracle(const OracleSpec& spec, const std::vector<double>& v, double delta0) {
    const oracle::ValueGrid grid(spec.grid_bits);
    if (spec.kind == "exact") return oracle::build_exact_oracle(v, grid);
    if (spec.kind == "fejer") {
        const int reps = spec.median_reps > 0 ? spec.median_reps : oracle::median_reps_for(delta0);
        return oracle::build_fejer_oracle(v, spec.precision_bits, reps, grid);
    }
    return oracle::build_adversarial_oracle(v, spec.adv_eps, spec.adv_delta,
                                            oracle::parse_adversarial_mode(spec.mode), grid);
}

json to_json(const oracle::OracleValidationReport& r) {
    return {{"valid", r.valid},       {"min_mass", r.min_mass}, {"eps", r.eps},
            {"delta", r.delta},       {"window", r.window},     {"in_window_mass", r.in_window_mass}};
}

json to_json(const oracle::QueryLedger& l) {
    return {{"plain", l.calls_plain()},
            {"adjoint", l.calls_adjoint()},
            {"controlled", l.calls_controlled()},
            {"calls", l.calls()},
            {"base_cost", l.base_cost_per_call()},
            {"total", l.total()}};
}

json to_json(const kmin::WeakRunTranscript& tr) {
    json its = json::array();
    for (const auto& it : tr.iterations)
        its.push_back({{"t", it.t},
                       {"m_lower", it.m_lower},
                       {"index", it.index},
                       {"value", it.value},
                       {"quantile", it.quantile},
                       {"calls", it.calls},
                       {"retries", it.retries}});
    return {{"iterations", its}, {"set", tr.set}};
}

json to_json(const kmin::StrongRunTranscript& tr) {
    json vt = json::array();
    for (const auto& [i, value] : tr.v_tilde) vt.push_back({i, value});
    return {{"weak", to_json(tr.weak)},
            {"s0", tr.s0},
            {"v_prime", tr.v_prime},
            {"v_g", tr.v_g},
            {"threshold", tr.threshold},
            {"ell", tr.ell},
            {"sample_count", tr.sample_count},
            {"sample_failures", tr.sample_failures},
            {"samples", tr.samples},
            {"v_tilde", vt},
            {"set", tr.set}};
}

apps::ExpectationInstance parse_expectation_instance(const json& j) {
    reject_unknown(j, {"dim", "pairs"}, "expectation instance");
    const auto m = get_or<std::size_t>(j, "dim", 0);
    if (m == 0) throw ConfigError("expectation instance: dim is required");
    const json pairs = get_or<json>(j, "pairs", json::array());
    std::vector<apps::ExpectationPair> out;
    for (const auto& p : pairs) {
        reject_unknown(p, {"rho", "observable"}, "expectation pair");
        out.push_back({parse_matrix(p.at("rho"), m), parse_matrix(p.at("observable"), m)});
    }
    return apps::ExpectationInstance(std::move(out));
}

json to_json(const apps::ExpectationInstance& instance) {
    json pairs = json::array();
    for (const auto& p : instance.pairs())
        pairs.push_back({{"rho", matrix_to_json(p.rho)}, {"observable", matrix_to_json(p.observable)}});
    return {{"dim", instance.pairs().front().rho.dim()}, {"pairs", pairs}};
}

apps::SpectrumInstance parse_spectrum_instance(const json& j) {
    reject_unknown(j, {"lambda", "beta"}, "spectrum instance");
    if (!j.contains("lambda")) throw ConfigError("spectrum instance: lambda is required");
    return apps::SpectrumInstance(j["lambda"].get<std::vector<double>>(), get_or<double>(j, "beta", 1.0));
}

json to_json(const apps::SpectrumInstance& s) { return {{"lambda", s.lambda()}, {"beta", s.beta()}}; }

Algorithm parse_algorithm(const std::string& name) {
    if (name == "weak") return Algorithm::weak;
    if (name == "strong") return Algorithm::strong;
    if (name == "expectations") return Algorithm::expectations;
    if (name == "energies") return Algorithm::energies;
    throw ConfigError("algorithm must be weak, strong, expectations or energies");
}

std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::weak: return "weak";
        case Algorithm::strong: return "strong";
        case Algorithm::expectations: return "expectations";
        case Algorithm::energies: return "energies";
    }
    return "?";
}

RunConfig parse_run_config(const json& j) {
    reject_unknown(j,
                   {"algorithm", "n", "k", "eps", "delta", "delta0", "oracle", "trials", "seed", "threads",
                    "n_values", "k_values", "instance", "instance_dim", "beta", "deterministic",
                    "emit_transcripts", "exponent_min", "exponent_max", "outputs"},
                   "config");
    RunConfig c;
    c.algorithm = parse_algorithm(get_or<std::string>(j, "algorithm", to_string(c.algorithm)));
    c.n = get_or<std::size_t>(j, "n", c.n);
    c.k = get_or<std::size_t>(j, "k", c.k);
    c.eps = get_or<double>(j, "eps", c.eps);
    c.delta = get_or<double>(j, "delta", c.delta);
    c.delta0 = get_or<double>(j, "delta0", c.delta0);
    if (j.contains("oracle")) c.oracle = parse_oracle_spec(j["oracle"]);
    c.trials = get_or<std::size_t>(j, "trials", c.trials);
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.threads = get_or<unsigned>(j, "threads", c.threads);
    c.n_values = get_or<std::vector<std::size_t>>(j, "n_values", {});
    c.k_values = get_or<std::vector<std::size_t>>(j, "k_values", {});
    if (j.contains("instance") && !j["instance"].is_null()) c.instance = j["instance"];
    c.instance_dim = get_or<std::size_t>(j, "instance_dim", c.instance_dim);
    c.beta = get_or<double>(j, "beta", c.beta);
    c.deterministic = get_or<bool>(j, "deterministic", c.deterministic);
    c.emit_transcripts = get_or<bool>(j, "emit_transcripts", c.emit_transcripts);
    c.exponent_min = get_or<double>(j, "exponent_min", c.exponent_min);
    c.exponent_max = get_or<double>(j, "exponent_max", c.exponent_max);
    const json outputs = get_or<json>(j, "outputs", json::object());
    reject_unknown(outputs, {"jsonl", "summary", "csv", "report"}, "outputs");
    c.jsonl_path = get_or<std::string>(outputs, "jsonl", "");
    c.summary_path = get_or<std::string>(outputs, "summary", "");
    c.csv_path = get_or<std::string>(outputs, "csv", "");
    c.report_path = get_or<std::string>(outputs, "report", "");
    return c;
}

json to_json(const RunConfig& c) {
    return {{"algorithm", to_string(c.algorithm)},
            {"n", c.n},
            {"k", c.k},
            {"eps", c.eps},
            {"delta", c.delta},
            {"delta0", c.delta0},
            {"oracle", to_json(c.oracle)},
            {"trials", c.trials},
            {"seed", c.seed},
            {"threads", c.threads},
            {"n_values", c.n_values},
            {"k_values", c.k_values},
            {"instance", c.instance ? *c.instance : json(nullptr)},
            {"instance_dim", c.instance_dim},
            {"beta", c.beta},
            {"deterministic", c.deterministic},
            {"emit_transcripts", c.emit_transcripts},
            {"exponent_min", c.exponent_min},
            {"exponent_max", c.exponent_max},
            {"outputs",
             {{"jsonl", c.jsonl_path}, {"summary", c.summary_path}, {"csv", c.csv_path}, {"report", c.report_path}}}};
}

json to_json(const TrialRecord& r, bool include_wall) {
    json j{{"trial", r.trial},
           {"seed", r.seed},
           {"set", r.set},
           {"v", r.v},
           {"verdict",
            {{"weak", r.verdict.weak},
             {"strong", r.verdict.strong},
             {"weak_tolerance", r.verdict.weak_tolerance},
             {"strong_tolerance", r.verdict.strong_tolerance}}},
           {"success", r.success},
           {"ledger",
            {{"plain", r.calls_plain},
             {"adjoint", r.calls_adjoint},
             {"controlled", r.calls_controlled},
             {"base_cost", r.base_cost},
             {"total", r.total_queries}}}};
    if (include_wall) j["wall_ms"] = r.wall_ms;
    if (r.transcript) j["transcript"] = *r.transcript;
    return j;
}

TrialRecord parse_trial_record(const json& j) {
    TrialRecord r;
    r.trial = j.at("trial").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.set = j.at("set").get<std::vector<std::size_t>>();
    r.v = j.at("v").get<std::vector<double>>();
    const auto& vd = j.at("verdict");
    r.verdict.weak = vd.at("weak").get<bool>();
    r.verdict.strong = vd.at("strong").get<bool>();
    r.verdict.weak_tolerance = vd.at("weak_tolerance").get<double>();
    r.verdict.strong_tolerance = vd.at("strong_tolerance").get<double>();
    r.success = j.at("success").get<bool>();
    const auto& l = j.at("ledger");
    r.calls_plain = l.at("plain").get<std::uint64_t>();
    r.calls_adjoint = l.at("adjoint").get<std::uint64_t>();
    r.calls_controlled = l.at("controlled").get<std::uint64_t>();
    r.base_cost = l.at("base_cost").get<std::uint64_t>();
    r.total_queries = l.at("total").get<std::uint64_t>();
    r.wall_ms = get_or<double>(j, "wall_ms", 0.0);
    if (j.contains("transcript")) r.transcript = j["transcript"];
    return r;
}

json to_json(const RunSummary& s) {
    json j{{"trials", s.trials},
           {"successes", s.successes},
           {"mean_queries", s.mean_queries},
           {"std_queries", s.std_queries},
           {"required_rate", s.required_rate},
           {"check_passed", s.check_passed}};
    j["success_rate"] = s.success_rate ? json(*s.success_rate) : json("n/a");
    j["wilson"] = s.wilson ? json{{"lo", s.wilson->lo}, {"hi", s.wilson->hi}} : json("n/a");
    return j;
}

json to_json(const SweepSummary& s) {
    json rows = json::array();
    for (const auto& r : s.rows)
        rows.push_back({{"n", r.n},
                        {"k", r.k},
                        {"mean_queries", r.mean_queries},
                        {"std", r.std_queries},
                        {"success", r.success}});
    json exps = json::object();
    for (const auto& [k, e] : s.exponent_by_k) exps[std::to_string(k)] = e;
    return {{"rows", rows}, {"exponent_by_k", exps}, {"check_passed", s.check_passed}};
}

}  // namespace qkmin::cli
