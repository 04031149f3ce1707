#pragma once

// Approximate k-minimum finding: the weak-set algorithm (repeated minimum
// finding over a shrinking visible set) and the strong-set algorithm
// (threshold, count, sample, re-measure, select).

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "qkmin/oracle.hpp"
#include "qkmin/qsim.hpp"
#include "qkmin/rng.hpp"

namespace qkmin::kmin {

using oracle::ApproxOracle;
using oracle::QueryLedger;

/// Set of already-selected indices. Members are hidden from subsequent
/// minimum finding by a +2 value offset.
class QSet {
public:
    explicit QSet(std::size_t capacity) : capacity_(capacity) {}

    void insert(std::size_t i);
    [[nodiscard]] bool contains(std::size_t i) const { return members_.count(i) != 0; }
    [[nodiscard]] std::size_t size() const noexcept { return members_.size(); }
    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
    [[nodiscard]] std::vector<std::size_t> members() const { return {members_.begin(), members_.end()}; }

private:
    std::size_t capacity_;
    std::set<std::size_t> members_;
};

struct WeakIteration {
    std::size_t t = 0;
    double m_lower = 0.0;
    std::size_t index = 0;
    double value = 0.0;
    /// Quantile q_M of the value register the call was made on.
    double quantile = 0.0;
    /// Oracle calls spent by this iteration.
    std::uint64_t calls = 0;
    /// find_min calls that returned a hidden index and were repeated.
    std::uint32_t retries = 0;
};

struct WeakRunTranscript {
    std::vector<WeakIteration> iterations;
    /// Selected indices in selection order.
    std::vector<std::size_t> set;
};

struct StrongRunTranscript {
    WeakRunTranscript weak;
    std::vector<std::size_t> s0;
    std::vector<double> v_prime;
    double v_g = 0.0;
    double threshold = 0.0;
    std::uint64_t ell = 0;
    std::uint64_t sample_count = 0;
    std::uint64_t sample_failures = 0;
    std::vector<std::size_t> samples;
    /// Fresh measurements on R u S0, ascending by index.
    std::map<std::size_t, double> v_tilde;
    /// Selected indices, ascending by (value, index).
    std::vector<std::size_t> set;
};

/// One single-shot measurement per index of S.
std::map<std::size_t, double> approx_query_set(const ApproxOracle& oracle, std::span<const std::size_t> S, Rng& rng,
                                               QueryLedger& ledger);

/// ceil(3 max(l,1) (ln max(k,2) + 1)) * ceil(log2(10/delta)); 0 when l = 0.
std::uint64_t strong_sample_count(std::uint64_t ell, std::size_t k, double delta);

WeakRunTranscript find_approx_weak_min(const ApproxOracle& oracle, std::size_t k, double eps, double delta, Rng& rng,
                                       QueryLedger& ledger, const qsim::FindMinConfig& config = {});

StrongRunTranscript find_approx_strong_min(const ApproxOracle& oracle, std::size_t k, double eps, double delta,
                                           Rng& rng, QueryLedger& ledger, const qsim::FindMinConfig& config = {});

}  // namespace qkmin::kmin
