#include "qkmin/apps.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

namespace qkmin::apps {

namespace {

constexpr double kHermitianTol = 1e-12;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

std::uint64_t next_pow2(double x) {
    std::uint64_t m = 2;
    while (static_cast<double>(m) < x) m <<= 1;
    return m;
}

int ceil_log2(double x) { return std::max(0, static_cast<int>(std::ceil(std::log2(x)))); }

}  // namespace

HermitianMatrix::HermitianMatrix(Eigen::MatrixXcd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw std::invalid_argument("HermitianMatrix: matrix is not square");
    if (m_.rows() < 1 || static_cast<std::size_t>(m_.rows()) > kMaxDim)
        throw std::invalid_argument("HermitianMatrix: dimension must lie in [1, 16]");
    if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol)
        throw std::domain_error("HermitianMatrix: matrix is not conjugate-symmetric");
}

HermitianMatrix::HermitianMatrix(std::size_t m, const std::vector<Complex>& row_major)
    : HermitianMatrix([&] {
          if (row_major.size() != m * m) throw std::invalid_argument("HermitianMatrix: expected m * m entries");
          Eigen::MatrixXcd a(idx(m), idx(m));
          for (std::size_t r = 0; r < m; ++r)
              for (std::size_t c = 0; c < m; ++c) a(idx(r), idx(c)) = row_major[r * m + c];
          return a;
      }()) {}

HermitianMatrix HermitianMatrix::diagonal(const std::vector<double>& d) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(idx(d.size()), idx(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) a(idx(i), idx(i)) = d[i];
    return HermitianMatrix(std::move(a));
}

HermitianMatrix HermitianMatrix::projector(const std::vector<Complex>& psi) {
    Eigen::VectorXcd x(idx(psi.size()));
    for (std::size_t i = 0; i < psi.size(); ++i) x(idx(i)) = psi[i];
    if (std::abs(x.norm() - 1.0) > 1e-10) throw std::domain_error("projector: state is not normalized");
    Eigen::MatrixXcd p = x * x.adjoint();
    p = (p + p.adjoint()) / 2.0;
    return HermitianMatrix(std::move(p));
}

std::vector<double> HermitianMatrix::eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m_, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

bool HermitianMatrix::is_psd(double tol) const { return eigenvalues().front() >= -tol; }

double HermitianMatrix::operator_norm() const {
    const auto ev = eigenvalues();
    return std::max(std::abs(ev.front()), std::abs(ev.back()));
}

bool HermitianMatrix::is_diagonal() const {
    for (Eigen::Index r = 0; r < m_.rows(); ++r)
        for (Eigen::Index c = 0; c < m_.cols(); ++c)
            if (r != c && m_(r, c) != Complex(0.0, 0.0)) return false;
    return true;
}

double expectation_value(const HermitianMatrix& O, const HermitianMatrix& rho) {
    if (O.dim() != rho.dim()) throw std::invalid_argument("expectation_value: shape mismatch");
    if (std::abs(rho.trace() - Complex(1.0, 0.0)) > 1e-10) throw std::domain_error("expectation_value: tr(rho) != 1");
    if (!rho.is_psd()) throw std::domain_error("expectation_value: rho is not PSD");
    if (!O.is_psd()) throw std::domain_error("expectation_value: O is not PSD");
    if (O.operator_norm() > 1.0 + 1e-10) throw std::domain_error("expectation_value: ||O|| exceeds 1");
    Complex acc = 0.0;
    const std::size_t m = O.dim();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) acc += O(i, j) * rho(j, i);
    return acc.real();
}

ExpectationInstance::ExpectationInstance(std::vector<ExpectationPair> pairs) : pairs_(std::move(pairs)) {
    if (pairs_.empty()) throw std::invalid_argument("ExpectationInstance: no pairs");
    values_.reserve(pairs_.size());
    for (const auto& p : pairs_) values_.push_back(std::clamp(expectation_value(p.observable, p.rho), 0.0, 1.0));
}

SpectrumInstance::SpectrumInstance(std::vector<double> lambda, double beta) : lambda_(std::move(lambda)), beta_(beta) {
    if (lambda_.empty()) throw std::invalid_argument("SpectrumInstance: empty spectrum");
    if (!(beta > 0.0)) throw std::domain_error("SpectrumInstance: beta must be positive");
    for (double l : lambda_)
        if (!(std::abs(l) <= beta)) throw std::domain_error("SpectrumInstance: |lambda| exceeds beta");
}

SpectrumInstance SpectrumInstance::from_hamiltonian(const HermitianMatrix& H, double beta) {
    if (!H.is_diagonal()) return SpectrumInstance(H.eigenvalues(), beta);
    std::vector<double> d(H.dim());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = H(i, i).real();
    return SpectrumInstance(std::move(d), beta);
}

std::vector<double> SpectrumInstance::phases() const {
    std::vector<double> out;
    out.reserve(lambda_.size());
    for (double l : lambda_) out.push_back(std::min(to_phase(l), std::nextafter(1.0, 0.0)));
    return out;
}

int expectation_grid_bits(double eps) { return std::min(oracle::ValueGrid::kMaxBits, ceil_log2(8.0 / eps)); }

oracle::ApproxOracle build_expectation_oracle(const ExpectationInstance& instance, double eps, double delta) {
    if (!(eps > 0.0 && eps < 0.5)) throw std::domain_error("expectation oracle: eps must lie in (0, 1/2)");
    if (!(delta > 0.0 && delta < 1.0 / 3.0)) throw std::domain_error("expectation oracle: delta must lie in (0, 1/3)");
    const std::uint64_t M = next_pow2(std::numbers::pi / eps);
    const int reps = oracle::median_reps_for(delta);
    const oracle::ValueGrid grid(expectation_grid_bits(eps));
    const double md = static_cast<double>(M);

    std::vector<oracle::Row> rows;
    rows.reserve(instance.n());
    for (double c : instance.values()) {
        const double omega = std::asin(c) / std::numbers::pi;
        oracle::Row row;
        double total = 0.0;
        for (std::uint64_t y = 0; y < M; ++y) {
            const double phase = static_cast<double>(y) / md;
            const double w =
                0.5 * oracle::fejer_weight(M, omega - phase) + 0.5 * oracle::fejer_weight(M, -omega - phase);
            if (w <= 0.0) continue;
            const double est = std::clamp(std::sin(std::numbers::pi * phase), 0.0, 1.0);
            row.push_back({grid.round(est), w});
            total += w;
        }
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.y < b.y; });
        oracle::Row merged;
        for (const auto& a : row) {
            if (!merged.empty() && merged.back().y == a.y)
                merged.back().weight += a.weight / total;
            else
                merged.push_back({a.y, a.weight / total});
        }
        if (reps > 1) merged = oracle::median_distribution(merged, reps);
        rows.push_back(std::move(merged));
    }
    oracle::ApproxOracle out(grid, std::move(rows), eps, oracle::fejer_failure_bound(reps),
                             M * static_cast<std::uint64_t>(reps));
    const auto report = oracle::validate_oracle(out, instance.values(), eps, delta);
    if (!report.valid) throw OracleValidationError("expectation oracle failed validation");
    return out;
}

oracle::ApproxOracle build_energy_oracle(const SpectrumInstance& spectrum, int precision_bits, int median_reps) {
    const oracle::ValueGrid grid(precision_bits + 3);
    const auto phases = spectrum.phases();
    const auto fejer = oracle::build_fejer_oracle(phases, precision_bits, median_reps, grid);
    const double T = std::ldexp(1.0, precision_bits);
    const auto base = static_cast<std::uint64_t>(std::ceil(spectrum.beta() * median_reps * T));
    oracle::ApproxOracle out(grid, fejer.rows(), fejer.claimed_eps(), fejer.claimed_delta(), base);
    const auto report = oracle::validate_oracle(out, phases, out.claimed_eps(), out.claimed_delta());
    if (!report.valid) throw OracleValidationError("energy oracle failed validation");
    return out;
}

ExpectationInstance random_expectation_instance(std::size_t n, std::size_t dim, Rng& rng) {
    std::normal_distribution<double> gauss;
    auto random_matrix = [&] {
        Eigen::MatrixXcd g(idx(dim), idx(dim));
        for (Eigen::Index r = 0; r < g.rows(); ++r)
            for (Eigen::Index c = 0; c < g.cols(); ++c) g(r, c) = Complex(gauss(rng), gauss(rng));
        Eigen::MatrixXcd p = g * g.adjoint();
        return Eigen::MatrixXcd((p + p.adjoint()) / 2.0);
    };
    std::vector<ExpectationPair> pairs;
    pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::MatrixXcd rho = random_matrix();
        rho /= rho.trace().real();
        Eigen::MatrixXcd obs = random_matrix();
        const double norm = HermitianMatrix(obs).operator_norm();
        obs *= rng.uniform() / norm;
        pairs.push_back({HermitianMatrix(std::move(rho)), HermitianMatrix(std::move(obs))});
    }
    return ExpectationInstance(std::move(pairs));
}

double default_delta0(double delta, std::size_t n, std::size_t k) {
    const double nn = static_cast<double>(n);
    return delta / (100.0 * nn * nn * nn * std::sqrt(static_cast<double>(k)));
}

IndexSetResult find_k_min_expectations(const ExpectationInstance& instance, std::size_t k, double eps, double delta,
                                       Rng& rng, double delta0) {
    if (k < 1 || k > instance.n()) throw std::invalid_argument("k must lie in [1, n]");
    IndexSetResult res;
    res.inner_eps = eps / 7.0;
    res.inner_delta = delta / 2.0;
    res.delta0 = delta0 > 0.0 ? delta0 : default_delta0(delta, instance.n(), k);
    const auto oracle = build_expectation_oracle(instance, res.inner_eps, res.delta0);
    res.median_reps = oracle::median_reps_for(res.delta0);
    res.grid_bits = oracle.grid().bits();
    res.ledger = oracle::QueryLedger(oracle.base_cost_per_call());
    res.transcript = kmin::find_approx_strong_min(oracle, k, res.inner_eps, res.inner_delta, rng, res.ledger);
    res.set = res.transcript.set;
    return res;
}

EnergyPlan plan_energy_pipeline(const SpectrumInstance& spectrum, std::size_t k, double eps, double delta,
                                double delta0) {
    if (!(eps > 0.0 && eps < 1.0 / 3.0)) throw std::domain_error("energies: eps must lie in (0, 1/3)");
    EnergyPlan plan{};
    plan.phase_eps = eps / (14.0 * spectrum.beta());
    plan.precision_bits = std::max(2, 1 + ceil_log2(1.0 / plan.phase_eps));
    plan.grid_bits = plan.precision_bits + 3;
    if (plan.grid_bits > oracle::ValueGrid::kMaxBits) throw std::domain_error("energies: eps too small for the register");
    plan.delta0 = delta0 > 0.0 ? delta0 : default_delta0(delta, spectrum.n(), k);
    plan.median_reps = oracle::median_reps_for(plan.delta0);
    return plan;
}

IndexSetResult find_k_ground_energies(const SpectrumInstance& spectrum, std::size_t k, double eps, double delta,
                                      Rng& rng, double delta0) {
    if (k < 1 || k > spectrum.n()) throw std::invalid_argument("k must lie in [1, n]");
    const EnergyPlan plan = plan_energy_pipeline(spectrum, k, eps, delta, delta0);
    const auto oracle = build_energy_oracle(spectrum, plan.precision_bits, plan.median_reps);
    IndexSetResult res;
    res.inner_eps = plan.phase_eps;
    res.inner_delta = delta / 2.0;
    res.delta0 = plan.delta0;
    res.median_reps = plan.median_reps;
    res.precision_bits = plan.precision_bits;
    res.grid_bits = plan.grid_bits;
    res.ledger = oracle::QueryLedger(oracle.base_cost_per_call());
    res.transcript = kmin::find_approx_strong_min(oracle, k, res.inner_eps, res.inner_delta, rng, res.ledger);
    res.set = res.transcript.set;
    return res;
}

}  // namespace qkmin::apps
