#include "qkmin/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qkmin/qsim.hpp"

namespace qkmin::verify {

namespace {

void check_members(std::span<const double> v, std::span<const std::size_t> S) {
    std::vector<bool> seen(v.size(), false);
    for (std::size_t i : S) {
        if (i >= v.size()) throw std::out_of_range("index set is not contained in [n]");
        if (seen[i]) throw std::invalid_argument("index set has a repeated index");
        seen[i] = true;
    }
}

std::vector<std::size_t> sorted_by_value(std::span<const double> v, std::span<const std::size_t> S) {
    std::vector<std::size_t> out(S.begin(), S.end());
    std::stable_sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    return out;
}

bool entrywise_close(std::span<const double> v, const SortedView& view, const std::vector<std::size_t>& a,
                     double eps) {
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double s = v[view.order[j]];
        if (!(s <= v[a[j]] && v[a[j]] <= s + eps)) return false;
    }
    return true;
}

}  // namespace

SortedView SortedView::of(std::span<const double> v) {
    SortedView view;
    view.order.resize(v.size());
    std::iota(view.order.begin(), view.order.end(), std::size_t{0});
    std::stable_sort(view.order.begin(), view.order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    return view;
}

std::vector<std::size_t> true_k_min_indices(std::span<const double> v, std::size_t k) {
    if (k > v.size()) throw std::invalid_argument("k exceeds n");
    auto order = SortedView::of(v).order;
    order.resize(k);
    return order;
}

bool is_weak_set(std::span<const double> v, std::span<const std::size_t> S, double eps) {
    check_members(v, S);
    return entrywise_close(v, SortedView::of(v), sorted_by_value(v, S), eps);
}

bool is_weak_set_by_definition(std::span<const double> v, std::span<const std::size_t> S, double eps) {
    check_members(v, S);
    const SortedView view = SortedView::of(v);
    std::vector<std::size_t> a(S.begin(), S.end());
    std::sort(a.begin(), a.end());
    do {
        if (entrywise_close(v, view, a, eps)) return true;
    } while (std::next_permutation(a.begin(), a.end()));
    return false;
}

bool is_strong_set(std::span<const double> v, std::span<const std::size_t> S, double eps) {
    check_members(v, S);
    if (S.empty()) return true;
    std::vector<bool> in(v.size(), false);
    double max_in = -INFINITY;
    for (std::size_t i : S) {
        in[i] = true;
        max_in = std::max(max_in, v[i]);
    }
    for (std::size_t j = 0; j < v.size(); ++j)
        if (!in[j] && max_in > v[j] + eps) return false;
    return true;
}

bool check_incrementability(std::span<const double> v, std::span<const std::size_t> S, std::size_t a_new,
                            double eps) {
    if (S.size() >= v.size()) throw PreconditionError("incrementability: S already covers [n]");
    if (!is_weak_set(v, S, eps)) throw PreconditionError("incrementability: S is not weak");
    if (a_new >= v.size()) throw std::out_of_range("incrementability: a_new out of range");
    if (std::find(S.begin(), S.end(), a_new) != S.end())
        throw PreconditionError("incrementability: a_new already in S");
    const SortedView view = SortedView::of(v);
    if (v[a_new] > view.kth(v, S.size() + 1) + eps)
        throw PreconditionError("incrementability: a_new exceeds the (k+1)-th value plus eps");
    std::vector<std::size_t> grown(S.begin(), S.end());
    grown.push_back(a_new);
    return is_weak_set(v, grown, eps);
}

bool check_strong_implies_weak(std::span<const double> v, std::span<const std::size_t> S, double eps) {
    if (!is_strong_set(v, S, eps)) throw PreconditionError("strong-implies-weak: S is not strong");
    return is_weak_set(v, S, eps);
}

bool check_min_prob_bound(const oracle::ApproxOracle& oracle, std::span<const double> v, double eps,
                          std::size_t ell) {
    if (v.size() != oracle.n()) throw std::invalid_argument("min-prob bound: dimension mismatch");
    if (ell < 1 || ell > v.size()) throw std::invalid_argument("min-prob bound: l must lie in [1, n]");
    const double x = SortedView::of(v).kth(v, ell) + eps + oracle.grid().step() / 2.0;
    const auto state = qsim::prepare_state(oracle);
    const double cdf = state.marked_mass(qsim::MarkedPredicate::at_most(x));
    return cdf >= static_cast<double>(ell) / static_cast<double>(v.size()) - 1e-12;
}

bool check_mass_bound(const oracle::ApproxOracle& oracle, std::span<const double> v, double eps, std::size_t k,
                      double v_g) {
    if (v.size() != oracle.n()) throw std::invalid_argument("mass bound: dimension mismatch");
    if (k < 1 || k > v.size()) throw std::invalid_argument("mass bound: k must lie in [1, n]");
    const double vk = SortedView::of(v).kth(v, k);
    if (v_g < vk - eps || v_g > vk + 3.0 * eps) throw PreconditionError("mass bound: v_g outside its window");
    const auto state = qsim::prepare_state(oracle);
    const double a = state.marked_mass(qsim::MarkedPredicate::at_most(v_g - 5.0 * eps));
    return a <= static_cast<double>(k) / static_cast<double>(v.size()) + 1e-12;
}

std::uint64_t coupon_rounds(std::uint64_t s1, double p) {
    if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("coupon: p must lie in (0, 1]");
    if (s1 == 0) return 0;
    return static_cast<std::uint64_t>(std::ceil(3.0 * (std::log(static_cast<double>(s1)) + 1.0) / p));
}

bool coupon_trial(std::uint64_t s1, double p, std::uint64_t rounds, Rng& rng) {
    if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("coupon: p must lie in (0, 1]");
    if (static_cast<double>(s1) * p > 1.0 + 1e-12) throw std::domain_error("coupon: s1 * p exceeds 1");
    if (s1 == 0) return true;
    std::vector<bool> seen(s1, false);
    std::uint64_t missing = s1;
    for (std::uint64_t r = 0; r < rounds && missing > 0; ++r) {
        const double u = rng.uniform();
        const auto bucket = static_cast<std::uint64_t>(u / p);
        if (bucket < s1 && !seen[bucket]) {
            seen[bucket] = true;
            --missing;
        }
    }
    return missing == 0;
}

Verdict judge(std::span<const double> v, std::span<const std::size_t> S, double eps, double step) {
    Verdict out;
    out.weak_tolerance = 2.0 * eps + step;
    out.strong_tolerance = 7.0 * eps + step;
    out.weak = is_weak_set(v, S, out.weak_tolerance);
    out.strong = is_strong_set(v, S, out.strong_tolerance);
    return out;
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
    if (trials == 0) return {0.0, 1.0};
    const double nn = static_cast<double>(trials);
    const double ph = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (ph + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(ph * (1.0 - ph) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

}  // namespace qkmin::verify
