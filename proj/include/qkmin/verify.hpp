#pragma once

// Classical ground truth: set-membership verifiers for the weak and strong
// notions, checks of the structural lemmas, and the coupon-collector model.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "qkmin/oracle.hpp"
#include "qkmin/rng.hpp"

namespace qkmin::verify {

/// Raised when a check is called outside its stated hypotheses.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Sorting permutation of v, stable by index on ties.
struct SortedView {
    std::vector<std::size_t> order;

    static SortedView of(std::span<const double> v);
    /// v_{s_j}, j is 1-based.
    [[nodiscard]] double kth(std::span<const double> v, std::size_t j) const { return v[order.at(j - 1)]; }
};

std::vector<std::size_t> true_k_min_indices(std::span<const double> v, std::size_t k);

/// Sorted characterization: S sorted by value is entry-wise within eps above
/// the k smallest values.
bool is_weak_set(std::span<const double> v, std::span<const std::size_t> S, double eps);

/// The definition verbatim: some enumeration of S is entry-wise within eps
/// above the sorted values. Exponential in |S|; intended for k <= 8.
bool is_weak_set_by_definition(std::span<const double> v, std::span<const std::size_t> S, double eps);

bool is_strong_set(std::span<const double> v, std::span<const std::size_t> S, double eps);

/// Adds a_new to a weak (k, eps) set and checks the result is weak (k+1, eps).
/// Throws PreconditionError if S is not weak, a_new is in S, or v[a_new]
/// exceeds v_{s_{k+1}} + eps.
bool check_incrementability(std::span<const double> v, std::span<const std::size_t> S, std::size_t a_new,
                            double eps);

/// Throws PreconditionError unless S is strong (k, eps).
bool check_strong_implies_weak(std::span<const double> v, std::span<const std::size_t> S, double eps);

/// Exact CDF of the value register at v_{s_l} + eps + step/2 is at least l/n.
bool check_min_prob_bound(const oracle::ApproxOracle& oracle, std::span<const double> v, double eps, std::size_t ell);

/// Mass with value <= v_g - 5 eps is at most k/n. Throws PreconditionError
/// unless v_{s_k} - eps <= v_g <= v_{s_k} + 3 eps.
bool check_mass_bound(const oracle::ApproxOracle& oracle, std::span<const double> v, double eps, std::size_t k,
                      double v_g);

/// ceil(3 (ln s1 + 1) / p).
std::uint64_t coupon_rounds(std::uint64_t s1, double p);

/// Draws `rounds` times from s1 outcomes of probability p each (the rest of
/// the mass falls outside) and reports whether every outcome appeared.
bool coupon_trial(std::uint64_t s1, double p, std::uint64_t rounds, Rng& rng);

/// Verdicts on a returned set, with tolerances widened by the grid step.
struct Verdict {
    bool weak = false;
    bool strong = false;
    double weak_tolerance = 0.0;
    double strong_tolerance = 0.0;
};

/// Weak at 2 eps + step, strong at 7 eps + step.
Verdict judge(std::span<const double> v, std::span<const std::size_t> S, double eps, double step);

struct Interval {
    double lo;
    double hi;
};

/// Wilson score interval for a binomial proportion, z = 1.96 by default.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.96);

}  // namespace qkmin::verify
