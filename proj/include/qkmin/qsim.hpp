#pragma once

// Distribution-level simulation of the quantum subroutines: amplitude
// amplification, exponential search, amplitude estimation, generalized minimum
// finding, counting and amplified sampling. Each is realized by its exact
// outcome distribution in the marked/unmarked two-dimensional span, and every
// use of the preparation unitary is charged to a QueryLedger.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qkmin/oracle.hpp"
#include "qkmin/rng.hpp"

namespace qkmin::qsim {

using oracle::ApproxOracle;
using oracle::QueryLedger;
using oracle::ValueGrid;

/// A measured (index, value) pair.
struct Sample {
    std::size_t index = 0;
    std::uint32_t y = 0;
    double value = 0.0;
};

/// Marks basis states by their value register only.
struct MarkedPredicate {
    enum class Sense { below_strict, below_or_equal };

    double threshold = 0.0;
    Sense sense = Sense::below_or_equal;

    static MarkedPredicate at_most(double u) { return {u, Sense::below_or_equal}; }
    static MarkedPredicate below(double u) { return {u, Sense::below_strict}; }

    [[nodiscard]] bool operator()(double value) const {
        return sense == Sense::below_strict ? value < threshold : value <= threshold;
    }
};

struct GroverOutcome {
    bool success = false;
    std::optional<Sample> sample;
    std::uint64_t iterations_used = 0;
};

/// Law of the value register: distinct values ascending with their masses.
class RandomVariableX {
public:
    struct Outcome {
        double value;
        double probability;
    };

    explicit RandomVariableX(std::vector<Outcome> outcomes) : outcomes_(std::move(outcomes)) {}

    [[nodiscard]] const std::vector<Outcome>& outcomes() const noexcept { return outcomes_; }
    [[nodiscard]] double cdf(double x) const;
    /// Smallest value whose CDF reaches `mass` (left-continuous inverse).
    [[nodiscard]] double quantile(double mass) const;

private:
    std::vector<Outcome> outcomes_;
};

/// (1/sqrt n) sum_i |i>|Lambda_i>, with hidden rows shifted by +2, stored as
/// the weight of each (index, grid point) pair. Entries are sorted by value
/// so that every threshold predicate marks a prefix.
class SuperposedEstimate {
public:
    struct Entry {
        std::uint32_t index;
        std::uint32_t y;
        double weight;
    };

    [[nodiscard]] std::size_t n() const noexcept { return hidden_.size(); }
    [[nodiscard]] const ValueGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const std::vector<Entry>& entries() const noexcept { return entries_; }
    [[nodiscard]] bool is_hidden(std::size_t i) const { return hidden_.at(i); }
    [[nodiscard]] std::size_t hidden_count() const noexcept { return hidden_count_; }
    [[nodiscard]] double total_mass() const noexcept { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

    [[nodiscard]] double marked_mass(const MarkedPredicate& pred) const;
    /// Sample conditioned on the predicate holding (or failing); empty if that
    /// part carries no mass.
    [[nodiscard]] std::optional<Sample> sample_marked(const MarkedPredicate& pred, Rng& rng) const;
    [[nodiscard]] std::optional<Sample> sample_unmarked(const MarkedPredicate& pred, Rng& rng) const;
    [[nodiscard]] RandomVariableX distribution() const;

private:
    friend SuperposedEstimate prepare_state(const ApproxOracle& oracle, std::span<const std::size_t> hidden);

    explicit SuperposedEstimate(ValueGrid grid) : grid_(grid) {}
    [[nodiscard]] std::size_t marked_count(const MarkedPredicate& pred) const;
    [[nodiscard]] double prefix(std::size_t count) const { return count == 0 ? 0.0 : cumulative_[count - 1]; }
    [[nodiscard]] std::optional<Sample> sample_range(std::size_t lo, std::size_t hi, Rng& rng) const;

    ValueGrid grid_;
    std::vector<Entry> entries_;
    std::vector<double> cumulative_;
    std::vector<bool> hidden_;
    std::size_t hidden_count_ = 0;
};

/// Hide * V * Uniform |0>. Building the description charges nothing; each
/// subroutine charges the applications of this unitary it performs.
SuperposedEstimate prepare_state(const ApproxOracle& oracle, std::span<const std::size_t> hidden = {});

double marked_mass(const SuperposedEstimate& state, const MarkedPredicate& pred);

/// sin^2((2r+1) arcsin(sqrt p)).
double grover_success_probability(double p, std::uint64_t iterations);

/// One amplification run with a fixed iteration count, followed by a
/// measurement. Charges r+1 plain and r adjoint calls.
GroverOutcome grover_run(const SuperposedEstimate& state, const MarkedPredicate& pred, std::uint64_t iterations,
                         Rng& rng, QueryLedger& ledger);

/// Parameters of the exponential search schedule.
struct SearchSchedule {
    /// Growth factor of the iteration range per failed round.
    static constexpr double kGrowth = 1.2;
    /// Rounds run at the cap before a schedule gives up.
    static constexpr int kRoundsAtCap = 4;

    /// ceil(pi/4 * sqrt(n * d)).
    static std::uint64_t cap_for(const SuperposedEstimate& state);
};

/// Exponential search for a marked sample; at most ceil(log2(1/delta))
/// schedules. Empty when no marked sample was found.
std::optional<Sample> bbht_search(const SuperposedEstimate& state, const MarkedPredicate& pred, double delta, Rng& rng,
                                  QueryLedger& ledger);

/// Outcome law of M-point amplitude estimation for marked mass p: the
/// mixture of two Fejer kernels centred at +-arcsin(sqrt p)/pi.
std::vector<double> amp_est_distribution(double p, std::uint64_t M);

/// 2 pi sqrt(p(1-p))/M + pi^2/M^2.
double amp_est_error_bound(double p, std::uint64_t M);

/// One amplitude estimation run; returns sin^2(pi y / M). Charges M-1
/// controlled calls.
double amp_est(const SuperposedEstimate& state, const MarkedPredicate& pred, std::uint64_t M, Rng& rng,
               QueryLedger& ledger);

struct AmpEstPlan {
    std::uint64_t grid_size;    ///< next power of two >= pi / eps_target
    std::uint64_t repetitions;  ///< ceil(48 ln(2 / delta))
};

AmpEstPlan plan_amp_est_median(double eps_target, double delta);

/// Median of independent amp_est runs per plan_amp_est_median.
double amp_est_median(const SuperposedEstimate& state, const MarkedPredicate& pred, double eps_target, double delta,
                      Rng& rng, QueryLedger& ledger);

/// Budget constant of the minimum-finding descent, calibrated once.
struct FindMinConfig {
    double budget_factor = 8.0;
};

/// ceil(factor / sqrt(M)) * ceil(log2(3 / delta)) preparation charges.
std::uint64_t find_min_budget(double m_lower, double delta, const FindMinConfig& config = {});

/// Descent minimum finding: returns, with probability >= 1 - delta, a sample
/// whose value is at most the M_lower-quantile of the value register.
Sample find_min(const SuperposedEstimate& state, double m_lower, double delta, Rng& rng, QueryLedger& ledger,
                const FindMinConfig& config = {});
Sample find_min(const ApproxOracle& oracle, std::span<const std::size_t> hidden, double m_lower, double delta, Rng& rng,
                QueryLedger& ledger, const FindMinConfig& config = {});

/// Estimate l of n * a, a = mass with value <= u, with na <= l <= na + 2 when
/// na >= 16. `state` must carry no hidden rows.
std::uint64_t qcount(const SuperposedEstimate& state, double u, double delta, Rng& rng, QueryLedger& ledger);
std::uint64_t qcount(const ApproxOracle& oracle, double u, double delta, Rng& rng, QueryLedger& ledger);

/// Sample from the component with value <= u.
std::optional<Sample> amp_samp(const SuperposedEstimate& state, double u, double delta, Rng& rng,
                               QueryLedger& ledger);
std::optional<Sample> amp_samp(const ApproxOracle& oracle, double u, double delta, Rng& rng, QueryLedger& ledger);

}  // namespace qkmin::qsim
