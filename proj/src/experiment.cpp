#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "qkmin/cli.hpp"

namespace qkmin::cli {

namespace {

bool uses_oracle_spec(const RunConfig& c) { return c.algorithm == Algorithm::weak || c.algorithm == Algorithm::strong; }

std::size_t resolved_n(const RunConfig& c) {
    if (uses_oracle_spec(c) && !c.oracle.v.empty()) return c.oracle.v.size();
    if (c.instance) {
        if (c.algorithm == Algorithm::expectations) return c.instance->at("pairs").size();
        if (c.algorithm == Algorithm::energies) return c.instance->at("lambda").size();
    }
    return c.n;
}

double resolved_beta(const RunConfig& c) {
    if (c.algorithm == Algorithm::energies && c.instance && c.instance->contains("beta"))
        return c.instance->at("beta").get<double>();
    return c.beta;
}

double claimed_eps(const OracleSpec& s) {
    if (s.kind == "fejer") return std::ldexp(1.0, 1 - s.precision_bits);
    if (s.kind == "adversarial") return s.adv_eps;
    return std::ldexp(1.0, -s.grid_bits) / 2.0;
}

struct TrialRngs {
    Rng base;
    Rng instance;
    Rng algorithm;
};

TrialRngs trial_rngs(const RunConfig& c, std::size_t trial) {
    Rng base = Rng::stream(c.seed, trial);
    return {base, base.split(1), base.split(2)};
}

std::vector<double> trial_v(const RunConfig& c, Rng& rng) {
    if (!c.oracle.v.empty()) return c.oracle.v;
    std::vector<double> v(c.n);
    for (auto& x : v) x = rng.uniform();
    return v;
}

apps::ExpectationInstance trial_expectations(const RunConfig& c, Rng& rng) {
    if (c.instance) return parse_expectation_instance(*c.instance);
    return apps::random_expectation_instance(c.n, c.instance_dim, rng);
}

apps::SpectrumInstance trial_spectrum(const RunConfig& c, Rng& rng) {
    if (c.instance) return parse_spectrum_instance(*c.instance);
    std::vector<double> lambda(c.n);
    for (auto& l : lambda) l = c.beta * (2.0 * rng.uniform() - 1.0);
    return apps::SpectrumInstance(std::move(lambda), c.beta);
}

void fill_ledger(TrialRecord& r, const oracle::QueryLedger& l) {
    r.calls_plain = l.calls_plain();
    r.calls_adjoint = l.calls_adjoint();
    r.calls_controlled = l.calls_controlled();
    r.base_cost = l.base_cost_per_call();
    r.total_queries = l.total();
}

double validation_delta(const RunConfig& c, const oracle::ApproxOracle& o) {
    return c.delta0 > 0.0 ? c.delta0 : o.claimed_delta();
}

}  // namespace

double finder_eps(const RunConfig& c) {
    if (uses_oracle_spec(c)) return c.eps > 0.0 ? c.eps : claimed_eps(c.oracle);
    if (c.algorithm == Algorithm::expectations) return c.eps / 7.0;
    return c.eps / (14.0 * resolved_beta(c));
}

double effective_delta0(const RunConfig& c) {
    if (c.delta0 > 0.0) return c.delta0;
    const double n = static_cast<double>(resolved_n(c));
    const double k = static_cast<double>(c.k);
    if (uses_oracle_spec(c)) {
        const double d = std::ldexp(4.0, c.oracle.grid_bits);
        return c.delta / (100.0 * n * d * std::sqrt(k * d));
    }
    return apps::default_delta0(c.delta, resolved_n(c), c.k);
}

Tolerances tolerances_for(const RunConfig& c) {
    switch (c.algorithm) {
        case Algorithm::weak:
        case Algorithm::strong: return {finder_eps(c), std::ldexp(1.0, -c.oracle.grid_bits)};
        case Algorithm::expectations:
            return {c.eps / 7.0, std::ldexp(1.0, -apps::expectation_grid_bits(c.eps / 7.0))};
        case Algorithm::energies: {
            const double beta = resolved_beta(c);
            const apps::SpectrumInstance probe({0.0}, beta);
            const auto plan = apps::plan_energy_pipeline(probe, 1, c.eps, c.delta, 1.0e-3);
            return {c.eps / 7.0, 2.0 * beta * std::ldexp(1.0, -plan.grid_bits)};
        }
    }
    return {0.0, 0.0};
}

void validate_config(const RunConfig& c) {
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (c.delta0 < 0.0 || c.delta0 >= 0.5) throw ConfigError("delta0 must lie in [0, 1/2)");
    if (c.eps < 0.0) throw ConfigError("eps must be nonnegative");
    if (c.k < 1) throw ConfigError("k must be at least 1");
    if (c.threads < 1) throw ConfigError("threads must be at least 1");
    if (uses_oracle_spec(c) && !c.oracle.v.empty() && c.n != 0 && c.n != c.oracle.v.size())
        throw ConfigError("n does not match the oracle's v");
    const std::size_t n = resolved_n(c);
    if (n < 1) throw ConfigError("n must be positive");
    if (c.k > n) throw ConfigError("k exceeds n");
    if (c.oracle.grid_bits < 0 || c.oracle.grid_bits > oracle::ValueGrid::kMaxBits)
        throw ConfigError("grid_bits out of range");
    if (uses_oracle_spec(c)) {
        if (c.oracle.kind != "exact" && std::ldexp(1.0, -c.oracle.grid_bits) > finder_eps(c) / 8.0)
            throw ConfigError("grid step exceeds eps/8; raise grid_bits");
        if (c.instance) throw ConfigError("instance applies to the application algorithms only");
    } else {
        if (!(c.eps > 0.0)) throw ConfigError("applications require eps > 0");
    }
}

TrialRecord run_trial(const RunConfig& c, std::size_t trial) {
    TrialRngs rngs = trial_rngs(c, trial);
    TrialRecord rec;
    rec.trial = trial;
    rec.seed = rngs.base.seed();
    const auto start = std::chrono::steady_clock::now();
    const Tolerances tol = tolerances_for(c);

    switch (c.algorithm) {
        case Algorithm::weak:
        case Algorithm::strong: {
            rec.v = trial_v(c, rngs.instance);
            const auto o = build_oracle(c.oracle, rec.v, effective_delta0(c));
            const double eps = finder_eps(c);
            if (!oracle::validate_oracle(o, rec.v, eps, validation_delta(c, o)).valid)
                throw ValidationFailure("oracle of trial " + std::to_string(trial) + " failed validation");
            oracle::QueryLedger ledger(o.base_cost_per_call());
            if (c.algorithm == Algorithm::weak) {
                auto tr = kmin::find_approx_weak_min(o, c.k, eps, c.delta, rngs.algorithm, ledger);
                rec.set = tr.set;
                if (c.emit_transcripts) rec.transcript = to_json(tr);
            } else {
                auto tr = kmin::find_approx_strong_min(o, c.k, eps, c.delta, rngs.algorithm, ledger);
                rec.set = tr.set;
                if (c.emit_transcripts) rec.transcript = to_json(tr);
            }
            fill_ledger(rec, ledger);
            break;
        }
        case Algorithm::expectations: {
            const auto instance = trial_expectations(c, rngs.instance);
            rec.v = instance.values();
            apps::IndexSetResult res;
            try {
                res = apps::find_k_min_expectations(instance, c.k, c.eps, c.delta, rngs.algorithm, c.delta0);
            } catch (const apps::OracleValidationError& e) {
                throw ValidationFailure(e.what());
            }
            rec.set = res.set;
            if (c.emit_transcripts) rec.transcript = to_json(res.transcript);
            fill_ledger(rec, res.ledger);
            break;
        }
        case Algorithm::energies: {
            const auto spectrum = trial_spectrum(c, rngs.instance);
            rec.v = spectrum.lambda();
            apps::IndexSetResult res;
            try {
                res = apps::find_k_ground_energies(spectrum, c.k, c.eps, c.delta, rngs.algorithm, c.delta0);
            } catch (const apps::OracleValidationError& e) {
                throw ValidationFailure(e.what());
            }
            rec.set = res.set;
            if (c.emit_transcripts) rec.transcript = to_json(res.transcript);
            fill_ledger(rec, res.ledger);
            break;
        }
    }
    rec.verdict = verify::judge(rec.v, rec.set, tol.eps, tol.step);
    rec.success = c.algorithm == Algorithm::weak ? rec.verdict.weak : rec.verdict.strong;
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

verify::Verdict rejudge(const RunConfig& c, const TrialRecord& r) {
    const Tolerances tol = tolerances_for(c);
    return verify::judge(r.v, r.set, tol.eps, tol.step);
}

oracle::OracleValidationReport validate(const RunConfig& c) {
    validate_config(c);
    if (!uses_oracle_spec(c)) throw ConfigError("validate applies to oracle specs (weak or strong algorithms)");
    TrialRngs rngs = trial_rngs(c, 0);
    const auto v = trial_v(c, rngs.instance);
    const auto o = build_oracle(c.oracle, v, effective_delta0(c));
    const double eps = c.eps > 0.0 ? c.eps : o.claimed_eps();
    return oracle::validate_oracle(o, v, eps, validation_delta(c, o));
}

RunSummary run(const RunConfig& c, std::ostream* jsonl) {
    validate_config(c);
    if (c.trials > 0 && uses_oracle_spec(c) && !validate(c).valid)
        throw ValidationFailure("oracle failed validation; no trials were run");

    RunSummary s;
    s.trials = c.trials;
    std::vector<double> queries;
    queries.reserve(c.trials);

    std::mutex mu;
    std::map<std::size_t, TrialRecord> pending;
    std::size_t next_to_write = 0;
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;

    auto drain = [&] {
        for (auto it = pending.find(next_to_write); it != pending.end(); it = pending.find(next_to_write)) {
            const TrialRecord& r = it->second;
            if (jsonl) *jsonl << to_json(r, !c.deterministic).dump() << '\n';
            const verify::Verdict v = rejudge(c, r);
            if (c.algorithm == Algorithm::weak ? v.weak : v.strong) ++s.successes;
            queries.push_back(static_cast<double>(r.total_queries));
            pending.erase(it);
            ++next_to_write;
        }
    };

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= c.trials) return;
            try {
                TrialRecord r = run_trial(c, i);
                std::lock_guard lock(mu);
                pending.emplace(i, std::move(r));
                drain();
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
                next.store(c.trials);
                return;
            }
        }
    };

    const unsigned workers = std::min<std::size_t>(c.threads, std::max<std::size_t>(c.trials, 1));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    if (!queries.empty()) {
        double sum = 0.0;
        for (double q : queries) sum += q;
        s.mean_queries = sum / static_cast<double>(queries.size());
        double ss = 0.0;
        for (double q : queries) ss += (q - s.mean_queries) * (q - s.mean_queries);
        s.std_queries = queries.size() > 1 ? std::sqrt(ss / static_cast<double>(queries.size() - 1)) : 0.0;
    }
    if (c.trials > 0) {
        const double t = static_cast<double>(c.trials);
        s.success_rate = static_cast<double>(s.successes) / t;
        s.wilson = verify::wilson_interval(s.successes, c.trials);
        s.required_rate = 1.0 - c.delta - 3.0 * std::sqrt(c.delta * (1.0 - c.delta) / t);
        s.check_passed = *s.success_rate >= s.required_rate;
    }
    return s;
}

double fit_loglog_exponent(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit: need matching series of length >= 2");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0)) throw std::domain_error("fit: values must be positive");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0) throw std::domain_error("fit: x values are all equal");
    return sxy / sxx;
}

SweepSummary sweep(const RunConfig& c) {
    const std::set<std::size_t> distinct(c.n_values.begin(), c.n_values.end());
    if (distinct.size() < 3) throw ConfigError("sweep needs at least 3 distinct n values");
    if (!uses_oracle_spec(c)) throw ConfigError("sweep applies to the weak and strong algorithms");
    if (!c.oracle.v.empty()) throw ConfigError("sweep draws v per trial; leave oracle.v empty");
    const std::vector<std::size_t> ks = c.k_values.empty() ? std::vector<std::size_t>{c.k} : c.k_values;

    SweepSummary out;
    for (std::size_t k : ks) {
        std::vector<double> xs, ys;
        for (std::size_t n : distinct) {
            if (k > n) continue;
            RunConfig cell = c;
            cell.n = n;
            cell.k = k;
            const RunSummary s = run(cell, nullptr);
            out.rows.push_back({n, k, s.mean_queries, s.std_queries, s.success_rate.value_or(0.0)});
            xs.push_back(static_cast<double>(n));
            ys.push_back(s.mean_queries);
        }
        if (xs.size() >= 3) {
            const double e = fit_loglog_exponent(xs, ys);
            out.exponent_by_k[k] = e;
            if (e < c.exponent_min || e > c.exponent_max) out.check_passed = false;
        }
    }
    return out;
}

void write_csv(const SweepSummary& s, std::ostream& out) {
    out << "n,k,mean_queries,std,success\n";
    for (const auto& r : s.rows) out << r.n << ',' << r.k << ',' << r.mean_queries << ',' << r.std_queries << ',' << r.success << '\n';
}

}  // namespace qkmin::cli
