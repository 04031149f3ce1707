#include "qkmin/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qkmin::oracle {

namespace {

constexpr double kRowTolerance = 1e-12;
constexpr double kWindowSlack = 1e-12;

void require_unit_interval(std::span<const double> v) {
    for (double x : v) {
        if (!(x >= 0.0 && x <= 1.0)) {
            throw std::domain_error("oracle value outside [0, 1]: " + std::to_string(x));
        }
    }
}

void require_odd_reps(int r) {
    if (r < 1 || r % 2 == 0) {
        throw std::invalid_argument("median repetitions must be odd and positive, got " + std::to_string(r));
    }
}

// C(r, i) p^i q^(r-i), evaluated in log space.
double binomial_term(int r, int i, double p, double q) {
    if (p <= 0.0) return i == 0 ? std::pow(q, r) : 0.0;
    if (q <= 0.0) return i == r ? std::pow(p, r) : 0.0;
    const double log_c = std::lgamma(r + 1.0) - std::lgamma(i + 1.0) - std::lgamma(r - i + 1.0);
    return std::exp(log_c + i * std::log(p) + (r - i) * std::log(q));
}

// Sorts by y, merges duplicates, drops zero weights.
Row canonicalize(Row row) {
    std::sort(row.begin(), row.end(), [](const Atom& a, const Atom& b) { return a.y < b.y; });
    Row out;
    out.reserve(row.size());
    for (const Atom& a : row) {
        if (a.weight < 0.0 || !std::isfinite(a.weight)) {
            throw std::invalid_argument("row weight must be finite and nonnegative");
        }
        if (a.weight == 0.0) continue;
        if (!out.empty() && out.back().y == a.y) {
            out.back().weight += a.weight;
        } else {
            out.push_back(a);
        }
    }
    return out;
}

Row normalized(Row row) {
    double total = 0.0;
    for (const Atom& a : row) total += a.weight;
    for (Atom& a : row) a.weight /= total;
    return row;
}

}  // namespace

ValueGrid::ValueGrid(int bits) : bits_(bits), step_(std::ldexp(1.0, -bits)) {
    if (bits < 0 || bits > kMaxBits) {
        throw std::invalid_argument("grid bits must lie in [0, " + std::to_string(kMaxBits) + "]");
    }
}

std::uint32_t ValueGrid::round(double x) const {
    const double scaled = std::floor(std::ldexp(x, bits_) + 0.5);
    if (!(scaled >= 0.0 && scaled < static_cast<double>(size()))) {
        throw std::domain_error("value " + std::to_string(x) + " outside the register range [0, 4)");
    }
    return static_cast<std::uint32_t>(scaled);
}

ApproxOracle::ApproxOracle(ValueGrid grid, std::vector<Row> rows, double claimed_eps, double claimed_delta,
                           std::uint64_t base_cost_per_call)
    : grid_(grid), claimed_eps_(claimed_eps), claimed_delta_(claimed_delta), base_cost_(base_cost_per_call) {
    if (base_cost_per_call == 0) throw std::invalid_argument("base cost per call must be positive");
    rows_.reserve(rows.size());
    cumulative_.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Row row = canonicalize(std::move(rows[i]));
        if (row.empty()) throw std::invalid_argument("row " + std::to_string(i) + " has no mass");
        if (row.back().y >= grid_.size()) {
            throw std::invalid_argument("row " + std::to_string(i) + " has a point outside the register");
        }
        std::vector<double> cum;
        cum.reserve(row.size());
        double acc = 0.0;
        for (const Atom& a : row) {
            acc += a.weight;
            cum.push_back(acc);
        }
        if (std::abs(acc - 1.0) > kRowTolerance) {
            throw std::invalid_argument("row " + std::to_string(i) + " sums to " + std::to_string(acc));
        }
        rows_.push_back(std::move(row));
        cumulative_.push_back(std::move(cum));
    }
}

std::uint32_t ApproxOracle::sample(std::size_t i, Rng& rng) const {
    const auto& cum = cumulative_.at(i);
    const double u = rng.uniform() * cum.back();
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    if (it == cum.end()) --it;
    return rows_[i][static_cast<std::size_t>(it - cum.begin())].y;
}

AdversarialMode parse_adversarial_mode(std::string_view name) {
    if (name == "edge_low") return AdversarialMode::edge_low;
    if (name == "edge_high") return AdversarialMode::edge_high;
    if (name == "split") return AdversarialMode::split;
    if (name == "leak") return AdversarialMode::leak;
    throw std::invalid_argument("unknown adversarial mode: " + std::string(name));
}

std::string_view to_string(AdversarialMode mode) {
    switch (mode) {
        case AdversarialMode::edge_low: return "edge_low";
        case AdversarialMode::edge_high: return "edge_high";
        case AdversarialMode::split: return "split";
        case AdversarialMode::leak: return "leak";
    }
    return "unknown";
}

ApproxOracle build_exact_oracle(std::span<const double> v, const ValueGrid& grid) {
    require_unit_interval(v);
    std::vector<Row> rows;
    rows.reserve(v.size());
    for (double x : v) rows.push_back(Row{{grid.round(x), 1.0}});
    return ApproxOracle(grid, std::move(rows), grid.step() / 2, 0.0);
}

double fejer_weight(std::uint64_t T, double detuning) {
    // sin^2(pi T d) / (T sin(pi d))^2, both factors reduced modulo 1 so that
    // exact grid hits give exact zeros and the 0/0 limit gives exactly 1.
    double d = detuning - std::round(detuning);
    if (d == 0.0) return 1.0;
    double a = static_cast<double>(T) * detuning;
    a -= std::round(a);
    if (a == 0.0) return 0.0;
    const double num = std::sin(std::numbers::pi * a);
    const double den = static_cast<double>(T) * std::sin(std::numbers::pi * d);
    return (num * num) / (den * den);
}

ApproxOracle build_fejer_oracle(std::span<const double> v, int precision_bits, int median_reps,
                                const ValueGrid& grid) {
    require_odd_reps(median_reps);
    if (precision_bits < 2) throw std::invalid_argument("phase estimation needs at least 2 bits");
    if (grid.bits() < precision_bits) {
        throw std::invalid_argument("value grid must have at least as many bits as the phase register");
    }
    for (double x : v) {
        if (!(x >= 0.0 && x < 1.0)) throw std::domain_error("phase outside [0, 1): " + std::to_string(x));
    }
    const std::int64_t T = std::int64_t{1} << precision_bits;
    const int shift = grid.bits() - precision_bits;
    std::vector<Row> rows;
    rows.reserve(v.size());
    for (double phase : v) {
        Row single;
        single.reserve(static_cast<std::size_t>(T));
        for (std::int64_t y = 0; y < T; ++y) {
            const double w = fejer_weight(static_cast<std::uint64_t>(T), phase - static_cast<double>(y) / T);
            if (w == 0.0) continue;
            // Representative of y/T (mod 1) nearest the phase, clamped to [0, 1].
            std::int64_t rep = y;
            for (std::int64_t cand : {y - T, y + T}) {
                if (std::abs(static_cast<double>(cand) / T - phase) < std::abs(static_cast<double>(rep) / T - phase)) {
                    rep = cand;
                }
            }
            rep = std::clamp<std::int64_t>(rep, 0, T);
            single.push_back({static_cast<std::uint32_t>(rep << shift), w});
        }
        Row row = normalized(canonicalize(std::move(single)));
        rows.push_back(median_reps == 1 ? std::move(row) : normalized(median_distribution(row, median_reps)));
    }
    return ApproxOracle(grid, std::move(rows), std::ldexp(1.0, 1 - precision_bits), fejer_failure_bound(median_reps),
                        static_cast<std::uint64_t>(median_reps) * static_cast<std::uint64_t>(T));
}

ApproxOracle build_adversarial_oracle(std::span<const double> v, double eps, double delta, AdversarialMode mode,
                                      const ValueGrid& grid) {
    require_unit_interval(v);
    if (!(eps >= 0.0 && eps + grid.step() / 2 < 0.5)) {
        throw std::invalid_argument("adversarial oracle needs eps + step/2 < 1/2");
    }
    if (!(delta >= 0.0 && delta < 0.5)) throw std::invalid_argument("adversarial oracle needs delta in [0, 1/2)");
    const double half_window = eps + grid.step() / 2;
    const double main = 1.0 - delta;
    std::vector<Row> rows;
    rows.reserve(v.size());
    for (double x : v) {
        const std::uint32_t lo = grid.round(std::max(x - eps, 0.0));
        const std::uint32_t hi = grid.round(x + eps);
        Row row;
        switch (mode) {
            case AdversarialMode::edge_low: row.push_back({lo, main}); break;
            case AdversarialMode::edge_high: row.push_back({hi, main}); break;
            case AdversarialMode::split:
                row.push_back({lo, main / 2});
                row.push_back({hi, main / 2});
                break;
            case AdversarialMode::leak: row.push_back({grid.round(x), main}); break;
        }
        if (delta > 0.0) {
            // Leak toward 0 when it lies outside the window; otherwise to 1,
            // which is then at least 1/2 away.
            const std::uint32_t leak = (x - half_window > 0.0) ? 0u : grid.round(1.0);
            row.push_back({leak, delta});
        }
        rows.push_back(std::move(row));
    }
    return ApproxOracle(grid, std::move(rows), eps, delta);
}

OracleValidationReport validate_oracle(const ApproxOracle& oracle, std::span<const double> v, double eps,
                                       double delta) {
    if (v.size() != oracle.n()) {
        throw std::invalid_argument("validation vector has " + std::to_string(v.size()) + " entries, oracle has " +
                                    std::to_string(oracle.n()));
    }
    OracleValidationReport report;
    report.eps = eps;
    report.delta = delta;
    report.window = eps + oracle.grid().step() / 2;
    report.in_window_mass.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double mass = 0.0;
        for (const Atom& a : oracle.row(i)) {
            if (std::abs(oracle.grid().value(a.y) - v[i]) <= report.window + kWindowSlack) mass += a.weight;
        }
        report.in_window_mass.push_back(mass);
        report.min_mass = std::min(report.min_mass, mass);
    }
    report.valid = report.min_mass >= 1.0 - delta - kWindowSlack;
    return report;
}

double binomial_upper_tail(int r, int h, double p) {
    if (h <= 0) return 1.0;
    if (h > r) return 0.0;
    double total = 0.0;
    for (int i = h; i <= r; ++i) total += binomial_term(r, i, p, 1.0 - p);
    return std::min(total, 1.0);
}

Row median_distribution(const Row& row, int r) {
    require_odd_reps(r);
    if (r == 1) return row;
    const int h = (r + 1) / 2;
    const std::size_t m = row.size();
    // below[j] = P[X <= y_j], above[j] = P[X > y_j], accumulated from each end.
    std::vector<double> above(m, 0.0);
    for (std::size_t j = m - 1; j > 0; --j) above[j - 1] = above[j] + row[j].weight;
    // P[median <= y_j] = P[#draws <= y_j >= h] = P[#draws > y_j <= r - h].
    auto median_cdf = [&](double below, double over) {
        double total = 0.0;
        for (int i = 0; i <= r - h; ++i) total += binomial_term(r, i, over, below);
        return total;
    };
    Row out;
    out.reserve(m);
    double below = 0.0;
    double prev = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        below += row[j].weight;
        const double cdf = (j + 1 == m) ? 1.0 : median_cdf(below, above[j]);
        const double w = cdf - prev;
        if (w > 0.0) out.push_back({row[j].y, w});
        prev = std::max(prev, cdf);
    }
    return out;
}

ApproxOracle median_boost(const ApproxOracle& oracle, int r) {
    require_odd_reps(r);
    if (!(oracle.claimed_delta() < 0.5)) {
        throw std::invalid_argument("median boosting needs claimed delta below 1/2");
    }
    std::vector<Row> rows;
    rows.reserve(oracle.n());
    for (const Row& row : oracle.rows()) rows.push_back(normalized(median_distribution(row, r)));
    const double boosted = binomial_upper_tail(r, (r + 1) / 2, oracle.claimed_delta());
    return ApproxOracle(oracle.grid(), std::move(rows), oracle.claimed_eps(), boosted,
                        oracle.base_cost_per_call() * static_cast<std::uint64_t>(r));
}

double fejer_failure_bound(int r) {
    require_odd_reps(r);
    const double miss = 1.0 - 8.0 / (std::numbers::pi * std::numbers::pi);
    return binomial_upper_tail(r, (r + 1) / 2, miss);
}

int median_reps_for(double target_delta) {
    if (!(target_delta > 0.0)) throw std::invalid_argument("target failure probability must be positive");
    for (int r = 1; r < 100000; r += 2) {
        if (fejer_failure_bound(r) <= target_delta) return r;
    }
    throw std::invalid_argument("target failure probability unreachable");
}

double query_sample(const ApproxOracle& oracle, std::size_t i, Rng& rng, QueryLedger& ledger) {
    if (i >= oracle.n()) {
        throw std::out_of_range("query index " + std::to_string(i) + " out of range for n=" + std::to_string(oracle.n()));
    }
    ledger.charge_plain();
    return oracle.grid().value(oracle.sample(i, rng));
}

}  // namespace qkmin::oracle
