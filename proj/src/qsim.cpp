#include "qkmin/qsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qkmin::qsim {

namespace {

std::size_t sample_cumulative(const std::vector<double>& cum, Rng& rng) {
    const double u = rng.uniform() * cum.back();
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    if (it == cum.end()) --it;
    return static_cast<std::size_t>(it - cum.begin());
}

std::uint64_t next_pow2(double x) {
    std::uint64_t m = 2;
    while (static_cast<double>(m) < x) m <<= 1;
    return m;
}

void check_delta(double delta, const char* who) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error(std::string(who) + ": delta must lie in (0, 1)");
}

}  // namespace

double RandomVariableX::cdf(double x) const {
    double acc = 0.0;
    for (const auto& o : outcomes_) {
        if (o.value > x) break;
        acc += o.probability;
    }
    return acc;
}

double RandomVariableX::quantile(double mass) const {
    if (outcomes_.empty()) throw std::domain_error("quantile: empty distribution");
    double acc = 0.0;
    for (const auto& o : outcomes_) {
        acc += o.probability;
        if (acc >= mass - 1e-12) return o.value;
    }
    return outcomes_.back().value;
}

std::size_t SuperposedEstimate::marked_count(const MarkedPredicate& pred) const {
    auto it = std::partition_point(entries_.begin(), entries_.end(),
                                   [&](const Entry& e) { return pred(grid_.value(e.y)); });
    return static_cast<std::size_t>(it - entries_.begin());
}

double SuperposedEstimate::marked_mass(const MarkedPredicate& pred) const {
    const double total = total_mass();
    if (total <= 0.0) return 0.0;
    const std::size_t b = marked_count(pred);
    if (b == entries_.size()) return 1.0;
    return std::clamp(prefix(b) / total, 0.0, 1.0);
}

std::optional<Sample> SuperposedEstimate::sample_range(std::size_t lo, std::size_t hi, Rng& rng) const {
    if (lo >= hi) return std::nullopt;
    const double base = prefix(lo);
    const double span = cumulative_[hi - 1] - base;
    if (!(span > 0.0)) return std::nullopt;
    const double u = base + rng.uniform() * span;
    auto first = cumulative_.begin() + static_cast<std::ptrdiff_t>(lo);
    auto last = cumulative_.begin() + static_cast<std::ptrdiff_t>(hi);
    auto it = std::upper_bound(first, last, u);
    if (it == last) --it;
    const Entry& e = entries_[static_cast<std::size_t>(it - cumulative_.begin())];
    return Sample{e.index, e.y, grid_.value(e.y)};
}

std::optional<Sample> SuperposedEstimate::sample_marked(const MarkedPredicate& pred, Rng& rng) const {
    return sample_range(0, marked_count(pred), rng);
}

std::optional<Sample> SuperposedEstimate::sample_unmarked(const MarkedPredicate& pred, Rng& rng) const {
    return sample_range(marked_count(pred), entries_.size(), rng);
}

RandomVariableX SuperposedEstimate::distribution() const {
    std::vector<RandomVariableX::Outcome> out;
    const double total = total_mass();
    for (const auto& e : entries_) {
        const double v = grid_.value(e.y);
        if (!out.empty() && out.back().value == v)
            out.back().probability += e.weight / total;
        else
            out.push_back({v, e.weight / total});
    }
    return RandomVariableX(std::move(out));
}

SuperposedEstimate prepare_state(const ApproxOracle& oracle, std::span<const std::size_t> hidden) {
    const std::size_t n = oracle.n();
    if (n == 0) throw std::invalid_argument("prepare_state: empty oracle");
    SuperposedEstimate s(oracle.grid());
    s.hidden_.assign(n, false);
    for (std::size_t h : hidden) {
        if (h >= n) throw std::out_of_range("prepare_state: hidden index out of range");
        if (!s.hidden_[h]) ++s.hidden_count_;
        s.hidden_[h] = true;
    }
    const std::uint32_t shift = oracle.grid().hide_offset();
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& a : oracle.row(i)) {
            const std::uint32_t y = s.hidden_[i] ? a.y + shift : a.y;
            if (y >= oracle.grid().size()) throw std::domain_error("prepare_state: shifted value leaves the register");
            s.entries_.push_back({static_cast<std::uint32_t>(i), y, a.weight * scale});
        }
    }
    std::sort(s.entries_.begin(), s.entries_.end(), [](const auto& a, const auto& b) {
        return a.y != b.y ? a.y < b.y : a.index < b.index;
    });
    s.cumulative_.reserve(s.entries_.size());
    double acc = 0.0;
    for (const auto& e : s.entries_) {
        acc += e.weight;
        s.cumulative_.push_back(acc);
    }
    return s;
}

double marked_mass(const SuperposedEstimate& state, const MarkedPredicate& pred) { return state.marked_mass(pred); }

double grover_success_probability(double p, std::uint64_t iterations) {
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    const double theta = std::asin(std::sqrt(p));
    const double s = std::sin((2.0 * static_cast<double>(iterations) + 1.0) * theta);
    return s * s;
}

GroverOutcome grover_run(const SuperposedEstimate& state, const MarkedPredicate& pred, std::uint64_t iterations,
                         Rng& rng, QueryLedger& ledger) {
    ledger.charge_plain(iterations + 1);
    ledger.charge_adjoint(iterations);
    const double p = state.marked_mass(pred);
    GroverOutcome out;
    out.iterations_used = iterations;
    out.success = rng.bernoulli(grover_success_probability(p, iterations));
    out.sample = out.success ? state.sample_marked(pred, rng) : state.sample_unmarked(pred, rng);
    if (!out.sample) {
        out.success = !out.success;
        out.sample = out.success ? state.sample_marked(pred, rng) : state.sample_unmarked(pred, rng);
    }
    return out;
}

std::uint64_t SearchSchedule::cap_for(const SuperposedEstimate& state) {
    const double nd = static_cast<double>(state.n()) * static_cast<double>(state.grid().size());
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(std::numbers::pi / 4.0 * std::sqrt(nd))));
}

namespace {

// One exponential-search schedule. Stops early when the next run would push
// `spent` past `budget`; returns the marked sample if one was found.
struct ScheduleResult {
    std::optional<Sample> sample;
    bool out_of_budget = false;
};

ScheduleResult run_schedule(const SuperposedEstimate& state, const MarkedPredicate& pred, Rng& rng,
                            QueryLedger& ledger, std::uint64_t& spent, std::uint64_t budget) {
    const double cap = static_cast<double>(SearchSchedule::cap_for(state));
    double m = 1.0;
    int rounds_at_cap = 0;
    for (;;) {
        const auto r = static_cast<std::uint64_t>(std::floor(rng.uniform() * m));
        const std::uint64_t cost = 2 * r + 1;
        if (spent + cost > budget) return {std::nullopt, true};
        spent += cost;
        GroverOutcome o = grover_run(state, pred, r, rng, ledger);
        if (o.success) return {o.sample, false};
        if (m >= cap && ++rounds_at_cap >= SearchSchedule::kRoundsAtCap) return {};
        m = std::min(m * SearchSchedule::kGrowth, cap);
    }
}

}  // namespace

std::optional<Sample> bbht_search(const SuperposedEstimate& state, const MarkedPredicate& pred, double delta, Rng& rng,
                                  QueryLedger& ledger) {
    check_delta(delta, "bbht_search");
    const int schedules = std::max(1, static_cast<int>(std::ceil(std::log2(1.0 / delta))));
    std::uint64_t spent = 0;
    for (int s = 0; s < schedules; ++s) {
        auto res = run_schedule(state, pred, rng, ledger, spent, UINT64_MAX);
        if (res.sample) return res.sample;
    }
    return std::nullopt;
}

std::vector<double> amp_est_distribution(double p, std::uint64_t M) {
    if (M < 2) throw std::domain_error("amp_est: M must be at least 2");
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("amp_est: p must lie in [0, 1]");
    const double omega = std::asin(std::sqrt(p)) / std::numbers::pi;
    std::vector<double> w(M);
    const double md = static_cast<double>(M);
    for (std::uint64_t y = 0; y < M; ++y) {
        const double phase = static_cast<double>(y) / md;
        w[y] = 0.5 * oracle::fejer_weight(M, omega - phase) + 0.5 * oracle::fejer_weight(M, -omega - phase);
    }
    return w;
}

double amp_est_error_bound(double p, std::uint64_t M) {
    const double md = static_cast<double>(M);
    return 2.0 * std::numbers::pi * std::sqrt(p * (1.0 - p)) / md + std::numbers::pi * std::numbers::pi / (md * md);
}

namespace {

double estimate_from(std::uint64_t y, std::uint64_t M) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(y) / static_cast<double>(M));
    return s * s;
}

std::vector<double> cumulative_of(const std::vector<double>& w) {
    std::vector<double> cum(w.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) cum[i] = acc += w[i];
    return cum;
}

}  // namespace

double amp_est(const SuperposedEstimate& state, const MarkedPredicate& pred, std::uint64_t M, Rng& rng,
               QueryLedger& ledger) {
    const auto cum = cumulative_of(amp_est_distribution(state.marked_mass(pred), M));
    ledger.charge_controlled(M - 1);
    return estimate_from(sample_cumulative(cum, rng), M);
}

AmpEstPlan plan_amp_est_median(double eps_target, double delta) {
    if (!(eps_target > 0.0)) throw std::domain_error("amp_est_median: eps must be positive");
    check_delta(delta, "amp_est_median");
    return {next_pow2(std::numbers::pi / eps_target),
            static_cast<std::uint64_t>(std::ceil(48.0 * std::log(2.0 / delta)))};
}

double amp_est_median(const SuperposedEstimate& state, const MarkedPredicate& pred, double eps_target, double delta,
                      Rng& rng, QueryLedger& ledger) {
    const AmpEstPlan plan = plan_amp_est_median(eps_target, delta);
    const auto cum = cumulative_of(amp_est_distribution(state.marked_mass(pred), plan.grid_size));
    std::vector<double> est(plan.repetitions);
    for (auto& e : est) e = estimate_from(sample_cumulative(cum, rng), plan.grid_size);
    ledger.charge_controlled((plan.grid_size - 1) * plan.repetitions);
    const std::size_t mid = (est.size() - 1) / 2;
    std::nth_element(est.begin(), est.begin() + static_cast<std::ptrdiff_t>(mid), est.end());
    return est[mid];
}

std::uint64_t find_min_budget(double m_lower, double delta, const FindMinConfig& config) {
    if (!(m_lower > 0.0 && m_lower <= 1.0)) throw std::domain_error("find_min: M must lie in (0, 1]");
    check_delta(delta, "find_min");
    const auto per = static_cast<std::uint64_t>(std::ceil(config.budget_factor / std::sqrt(m_lower)));
    const auto reps = static_cast<std::uint64_t>(std::ceil(std::log2(3.0 / delta)));
    return std::max<std::uint64_t>(1, per * reps);
}

Sample find_min(const SuperposedEstimate& state, double m_lower, double delta, Rng& rng, QueryLedger& ledger,
                const FindMinConfig& config) {
    const std::uint64_t budget = find_min_budget(m_lower, delta, config);
    GroverOutcome first = grover_run(state, MarkedPredicate::at_most(4.0), 0, rng, ledger);
    Sample best = *first.sample;
    std::uint64_t spent = 1;
    for (;;) {
        auto res = run_schedule(state, MarkedPredicate::below(best.value), rng, ledger, spent, budget);
        if (res.sample)
            best = *res.sample;
        else if (res.out_of_budget)
            return best;
    }
}

Sample find_min(const ApproxOracle& oracle, std::span<const std::size_t> hidden, double m_lower, double delta, Rng& rng,
                QueryLedger& ledger, const FindMinConfig& config) {
    return find_min(prepare_state(oracle, hidden), m_lower, delta, rng, ledger, config);
}

std::uint64_t qcount(const SuperposedEstimate& state, double u, double delta, Rng& rng, QueryLedger& ledger) {
    check_delta(delta, "qcount");
    if (state.hidden_count() != 0) throw std::invalid_argument("qcount: state must not hide any index");
    const auto pred = MarkedPredicate::at_most(u);
    const double n = static_cast<double>(state.n());
    const double l0 = n * amp_est_median(state, pred, 1.0 / std::sqrt(n), delta / 2.0, rng, ledger);
    const double eps2 = 1.0 / (8.0 * std::sqrt(std::max(l0, 16.0) * n));
    const double a1 = amp_est_median(state, pred, eps2, delta / 2.0, rng, ledger);
    if (a1 == 0.0) return 0;
    const double l = std::ceil(n * a1 + 0.5);
    return static_cast<std::uint64_t>(std::clamp(l, 0.0, n));
}

std::uint64_t qcount(const ApproxOracle& oracle, double u, double delta, Rng& rng, QueryLedger& ledger) {
    return qcount(prepare_state(oracle), u, delta, rng, ledger);
}

std::optional<Sample> amp_samp(const SuperposedEstimate& state, double u, double delta, Rng& rng,
                               QueryLedger& ledger) {
    return bbht_search(state, MarkedPredicate::at_most(u), delta, rng, ledger);
}

std::optional<Sample> amp_samp(const ApproxOracle& oracle, double u, double delta, Rng& rng, QueryLedger& ledger) {
    return amp_samp(prepare_state(oracle), u, delta, rng, ledger);
}

}  // namespace qkmin::qsim
