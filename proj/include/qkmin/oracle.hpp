#pragma once

// (epsilon, delta)-approximate value oracles modeled as explicit per-index
// outcome distributions over a dyadic value register.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "qkmin/rng.hpp"

namespace qkmin::oracle {

/// Dyadic value register: points y * 2^-bits for y in [0, 4 * 2^bits).
///
/// The range [0, 4) leaves room for the +2 hide offset on top of values in
/// [0, 1 + eps] without wrapping.
class ValueGrid {
public:
    static constexpr int kMaxBits = 24;

    explicit ValueGrid(int bits);

    [[nodiscard]] int bits() const noexcept { return bits_; }
    [[nodiscard]] double step() const noexcept { return step_; }
    [[nodiscard]] std::uint32_t size() const noexcept { return 4u << bits_; }
    [[nodiscard]] std::uint32_t hide_offset() const noexcept { return 2u << bits_; }
    [[nodiscard]] double value(std::uint32_t y) const noexcept { return y * step_; }

    /// Nearest grid point to x (ties round up). x must lie in [0, 4 - step/2).
    [[nodiscard]] std::uint32_t round(double x) const;

    friend bool operator==(const ValueGrid&, const ValueGrid&) = default;

private:
    int bits_;
    double step_;
};

/// One outcome of a row: grid point and its probability |alpha|^2.
struct Atom {
    std::uint32_t y;
    double weight;

    friend bool operator==(const Atom&, const Atom&) = default;
};

/// Sparse outcome distribution, strictly increasing in y, positive weights.
using Row = std::vector<Atom>;

/// Counts of oracle invocations for one run.
class QueryLedger {
public:
    explicit QueryLedger(std::uint64_t base_cost_per_call = 1) : base_cost_(base_cost_per_call) {}

    void charge_plain(std::uint64_t count = 1) noexcept { plain_ += count; }
    void charge_adjoint(std::uint64_t count = 1) noexcept { adjoint_ += count; }
    void charge_controlled(std::uint64_t count = 1) noexcept { controlled_ += count; }

    [[nodiscard]] std::uint64_t calls_plain() const noexcept { return plain_; }
    [[nodiscard]] std::uint64_t calls_adjoint() const noexcept { return adjoint_; }
    [[nodiscard]] std::uint64_t calls_controlled() const noexcept { return controlled_; }
    [[nodiscard]] std::uint64_t base_cost_per_call() const noexcept { return base_cost_; }

    /// Oracle calls of any kind.
    [[nodiscard]] std::uint64_t calls() const noexcept { return plain_ + adjoint_ + controlled_; }
    /// Calls weighted by the cost of one call in underlying queries.
    [[nodiscard]] std::uint64_t total() const noexcept { return calls() * base_cost_; }

private:
    std::uint64_t plain_ = 0;
    std::uint64_t adjoint_ = 0;
    std::uint64_t controlled_ = 0;
    std::uint64_t base_cost_;
};

/// Immutable table of per-index outcome distributions.
///
/// Row weights stand in for squared amplitudes; phases never influence the
/// measurement statistics of the algorithms built on top, so none are kept.
class ApproxOracle {
public:
    /// Rows are sorted and merged; each must sum to 1 within 1e-12.
    ApproxOracle(ValueGrid grid, std::vector<Row> rows, double claimed_eps, double claimed_delta,
                 std::uint64_t base_cost_per_call = 1);

    [[nodiscard]] std::size_t n() const noexcept { return rows_.size(); }
    [[nodiscard]] const ValueGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const Row& row(std::size_t i) const { return rows_.at(i); }
    [[nodiscard]] const std::vector<Row>& rows() const noexcept { return rows_; }
    [[nodiscard]] double claimed_eps() const noexcept { return claimed_eps_; }
    [[nodiscard]] double claimed_delta() const noexcept { return claimed_delta_; }
    [[nodiscard]] std::uint64_t base_cost_per_call() const noexcept { return base_cost_; }

    /// Draws a grid point from row i. Does not charge any ledger.
    [[nodiscard]] std::uint32_t sample(std::size_t i, Rng& rng) const;

private:
    ValueGrid grid_;
    std::vector<Row> rows_;
    std::vector<std::vector<double>> cumulative_;
    double claimed_eps_;
    double claimed_delta_;
    std::uint64_t base_cost_;
};

enum class AdversarialMode { edge_low, edge_high, split, leak };

AdversarialMode parse_adversarial_mode(std::string_view name);
std::string_view to_string(AdversarialMode mode);

/// Point mass at the nearest grid point; a (step/2, 0)-approximate oracle.
ApproxOracle build_exact_oracle(std::span<const double> v, const ValueGrid& grid);

/// Median of `median_reps` runs of t-bit phase estimation on phase v_i.
///
/// Outcomes are read modulo 1 and reported as the representative closest to
/// the encoded phase, clamped into [0, 1]. claimed_eps = 2^(1-t);
/// claimed_delta = fejer_failure_bound(median_reps). Requires grid bits >= t.
ApproxOracle build_fejer_oracle(std::span<const double> v, int precision_bits, int median_reps,
                                const ValueGrid& grid);

/// Stress oracle saturating the (eps, delta) window: mass 1-delta at the
/// window edges (or at the value for `leak`), delta leaked far away.
ApproxOracle build_adversarial_oracle(std::span<const double> v, double eps, double delta,
                                      AdversarialMode mode, const ValueGrid& grid);

struct OracleValidationReport {
    std::vector<double> in_window_mass;
    double min_mass = 1.0;
    double eps = 0.0;
    double delta = 0.0;
    /// Half-width actually checked: eps + step/2.
    double window = 0.0;
    bool valid = false;
};

/// Mass of each row within [v_i - eps - step/2, v_i + eps + step/2].
OracleValidationReport validate_oracle(const ApproxOracle& oracle, std::span<const double> v, double eps,
                                       double delta);

/// Exact distribution of the median of r independent draws from each row.
ApproxOracle median_boost(const ApproxOracle& oracle, int r);

/// One measurement of V|i>|0>, charged as a plain call. Returns the value.
double query_sample(const ApproxOracle& oracle, std::size_t i, Rng& rng, QueryLedger& ledger);

// Kernels shared with the estimation subroutines and the applications.

/// Probability that t-bit phase estimation reports y/T for a phase at
/// detuning `detuning` = phase - y/T, T = 2^t. Equals 1 at zero detuning.
double fejer_weight(std::uint64_t T, double detuning);

/// Exact distribution of the median (order statistic (r+1)/2) of r draws.
Row median_distribution(const Row& row, int r);

/// P[Binomial(r, p) >= h].
double binomial_upper_tail(int r, int h, double p);

/// Failure probability certified for a median of r phase-estimation runs,
/// each landing within one register step with probability >= 8/pi^2.
/// Bounded by exp(-2 r (8/pi^2 - 1/2)^2).
double fejer_failure_bound(int r);

/// Smallest odd r with fejer_failure_bound(r) <= target.
int median_reps_for(double target_delta);

}  // namespace qkmin::oracle
