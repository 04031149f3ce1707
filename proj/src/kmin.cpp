#include "qkmin/kmin.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qkmin::kmin {

void QSet::insert(std::size_t i) {
    if (i >= capacity_) throw std::out_of_range("QSet: index out of range");
    members_.insert(i);
}

std::map<std::size_t, double> approx_query_set(const ApproxOracle& oracle, std::span<const std::size_t> S, Rng& rng,
                                               QueryLedger& ledger) {
    std::map<std::size_t, double> out;
    for (std::size_t i : S) out[i] = oracle::query_sample(oracle, i, rng, ledger);
    return out;
}

std::uint64_t strong_sample_count(std::uint64_t ell, std::size_t k, double delta) {
    if (ell == 0) return 0;
    const double per = std::ceil(3.0 * static_cast<double>(ell) *
                                 (std::log(static_cast<double>(std::max<std::size_t>(k, 2))) + 1.0));
    const double batches = std::ceil(std::log2(10.0 / delta));
    return static_cast<std::uint64_t>(per * batches);
}

namespace {

void check_k(const ApproxOracle& oracle, std::size_t k) {
    if (k < 1 || k > oracle.n()) throw std::invalid_argument("k must lie in [1, n]");
}

}  // namespace

WeakRunTranscript find_approx_weak_min(const ApproxOracle& oracle, std::size_t k, double eps, double delta, Rng& rng,
                                       QueryLedger& ledger, const qsim::FindMinConfig& config) {
    check_k(oracle, k);
    if (!(eps >= 0.0)) throw std::domain_error("eps must be nonnegative");
    if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("delta must lie in (0, 1)");
    const double n = static_cast<double>(oracle.n());
    const double per_call = delta / static_cast<double>(k);

    QSet selected(oracle.n());
    WeakRunTranscript tr;
    for (std::size_t t = k; t >= 1; --t) {
        const auto hidden = selected.members();
        const auto state = qsim::prepare_state(oracle, hidden);
        WeakIteration it;
        it.t = t;
        it.m_lower = static_cast<double>(t) / n;
        it.quantile = state.distribution().quantile(it.m_lower);
        const std::uint64_t before = ledger.calls();
        qsim::Sample s = qsim::find_min(state, it.m_lower, per_call, rng, ledger, config);
        while (selected.contains(s.index)) {
            ++it.retries;
            s = qsim::find_min(state, it.m_lower, per_call, rng, ledger, config);
        }
        it.index = s.index;
        it.value = s.value;
        it.calls = ledger.calls() - before;
        selected.insert(s.index);
        tr.set.push_back(s.index);
        tr.iterations.push_back(it);
    }
    return tr;
}

StrongRunTranscript find_approx_strong_min(const ApproxOracle& oracle, std::size_t k, double eps, double delta,
                                           Rng& rng, QueryLedger& ledger, const qsim::FindMinConfig& config) {
    check_k(oracle, k);
    StrongRunTranscript tr;
    tr.weak = find_approx_weak_min(oracle, k, eps, delta / 10.0, rng, ledger, config);
    tr.s0 = tr.weak.set;
    std::sort(tr.s0.begin(), tr.s0.end());

    const auto measured = approx_query_set(oracle, tr.s0, rng, ledger);
    for (std::size_t i : tr.s0) tr.v_prime.push_back(measured.at(i));
    tr.v_g = *std::max_element(tr.v_prime.begin(), tr.v_prime.end());
    tr.threshold = tr.v_g - 5.0 * eps;

    const auto state = qsim::prepare_state(oracle);
    tr.ell = qsim::qcount(state, tr.threshold, delta / 10.0, rng, ledger);
    tr.sample_count = strong_sample_count(tr.ell, k, delta);

    std::set<std::size_t> R;
    if (tr.sample_count > 0) {
        const double samp_delta = delta / (5.0 * static_cast<double>(oracle.n()) * static_cast<double>(tr.ell));
        for (std::uint64_t j = 0; j < tr.sample_count; ++j) {
            if (auto s = qsim::amp_samp(state, tr.threshold, samp_delta, rng, ledger))
                R.insert(s->index);
            else
                ++tr.sample_failures;
        }
    }
    tr.samples.assign(R.begin(), R.end());

    std::set<std::size_t> pool(R);
    pool.insert(tr.s0.begin(), tr.s0.end());
    const std::vector<std::size_t> candidates(pool.begin(), pool.end());
    tr.v_tilde = approx_query_set(oracle, candidates, rng, ledger);

    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(tr.v_tilde.size());
    for (const auto& [i, value] : tr.v_tilde) ranked.emplace_back(value, i);
    std::sort(ranked.begin(), ranked.end());
    for (std::size_t j = 0; j < k; ++j) tr.set.push_back(ranked[j].second);
    return tr;
}

}  // namespace qkmin::kmin
