#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qkmin/apps.hpp"
#include "qkmin/verify.hpp"

using namespace qkmin;
using namespace qkmin::apps;

namespace {

const std::vector<double> kExample{0.1, 0.2, 0.3, 0.4, 0.5};
const std::vector<double> kLambda{0.11, 0.17, 0.23, 0.29};

HermitianMatrix basis_state(std::size_t dim, std::size_t j) {
    std::vector<Complex> psi(dim, 0.0);
    psi[j] = 1.0;
    return HermitianMatrix::projector(psi);
}

// diag(v_i, 0) measured on |0><0|: tr(O rho) = v_i.
ExpectationInstance example_instance() {
    std::vector<ExpectationPair> pairs;
    for (double x : kExample) pairs.push_back({basis_state(2, 0), HermitianMatrix::diagonal({x, 0.0})});
    return ExpectationInstance(std::move(pairs));
}

std::vector<std::size_t> sorted(std::vector<std::size_t> s) {
    std::sort(s.begin(), s.end());
    return s;
}

double three_sigma(double p, int n) { return 3.0 * std::sqrt(p * (1.0 - p) / n); }

}  // namespace

TEST(HermitianMatrix, RejectsNonHermitian) {
    Eigen::MatrixXcd a(2, 2);
    a << 1.0, Complex(0.0, 1.0), Complex(0.0, 1.0), 0.0;
    EXPECT_THROW(HermitianMatrix{a}, std::domain_error);
    EXPECT_THROW(HermitianMatrix(Eigen::MatrixXcd::Identity(17, 17)), std::invalid_argument);
    EXPECT_THROW(HermitianMatrix(2, std::vector<Complex>{1.0, 0.0, 0.0}), std::invalid_argument);
}

TEST(HermitianMatrix, SpectrumAndNorm) {
    const HermitianMatrix h(2, {Complex(2.0), Complex(0.0, -1.0), Complex(0.0, 1.0), Complex(2.0)});
    const auto ev = h.eigenvalues();
    EXPECT_NEAR(ev[0], 1.0, 1e-12);
    EXPECT_NEAR(ev[1], 3.0, 1e-12);
    EXPECT_NEAR(h.operator_norm(), 3.0, 1e-12);
    EXPECT_TRUE(h.is_psd());
    EXPECT_FALSE(h.is_diagonal());
    EXPECT_TRUE(HermitianMatrix::diagonal({0.3, 0.1}).is_diagonal());
}

TEST(ExpectationValue, ProjectorOnBasisState) {
    EXPECT_DOUBLE_EQ(expectation_value(HermitianMatrix::diagonal({1.0, 0.0}), basis_state(2, 0)), 1.0);
}

TEST(ExpectationValue, MaximallyMixed) {
    Rng rng(1);
    const auto inst = random_expectation_instance(5, 4, rng);
    const HermitianMatrix mixed(Eigen::MatrixXcd::Identity(4, 4) / 4.0);
    for (const auto& p : inst.pairs())
        EXPECT_NEAR(expectation_value(p.observable, mixed), p.observable.trace().real() / 4.0, 1e-12);
}

TEST(ExpectationValue, MatchesEigenbasisSum) {
    Rng rng(2);
    for (std::size_t dim : {2u, 4u, 8u}) {
        const auto inst = random_expectation_instance(20, dim, rng);
        for (const auto& p : inst.pairs()) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(p.rho.matrix());
            double sum = 0.0;
            for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
                const Eigen::VectorXcd u = es.eigenvectors().col(j);
                sum += es.eigenvalues()(j) * (u.adjoint() * p.observable.matrix() * u)(0, 0).real();
            }
            EXPECT_NEAR(expectation_value(p.observable, p.rho), sum, 1e-9);
        }
    }
}

TEST(ExpectationValue, Preconditions) {
    const HermitianMatrix not_psd = HermitianMatrix::diagonal({1.0, -0.5});
    const HermitianMatrix too_big = HermitianMatrix::diagonal({2.0, 0.0});
    EXPECT_THROW(expectation_value(not_psd, basis_state(2, 0)), std::domain_error);
    EXPECT_THROW(expectation_value(too_big, basis_state(2, 0)), std::domain_error);
    EXPECT_THROW(expectation_value(HermitianMatrix::diagonal({0.5, 0.5}), HermitianMatrix::diagonal({0.5, 0.4})),
                 std::domain_error);
}

TEST(ExpectationOracle, EndpointsArePointMasses) {
    std::vector<ExpectationPair> pairs;
    pairs.push_back({basis_state(2, 1), HermitianMatrix::diagonal({1.0, 0.0})});
    pairs.push_back({basis_state(2, 0), HermitianMatrix::diagonal({1.0, 0.0})});
    const ExpectationInstance inst(std::move(pairs));
    ASSERT_EQ(inst.values(), (std::vector<double>{0.0, 1.0}));
    const auto o = build_expectation_oracle(inst, 0.02, 0.05);
    ASSERT_EQ(o.row(0).size(), 1u);
    EXPECT_DOUBLE_EQ(o.grid().value(o.row(0)[0].y), 0.0);
    EXPECT_DOUBLE_EQ(o.row(0)[0].weight, 1.0);
    ASSERT_EQ(o.row(1).size(), 1u);
    EXPECT_DOUBLE_EQ(o.grid().value(o.row(1)[0].y), 1.0);
}

TEST(ExpectationOracle, HalfValidatedAtFivePercent) {
    std::vector<ExpectationPair> pairs;
    pairs.push_back({basis_state(2, 0), HermitianMatrix::diagonal({0.5, 0.0})});
    const ExpectationInstance inst(std::move(pairs));
    const auto o = build_expectation_oracle(inst, 0.02, 0.05);
    const auto report = oracle::validate_oracle(o, inst.values(), 0.02, 0.05);
    EXPECT_TRUE(report.valid);
    EXPECT_GE(report.min_mass, 0.95);
    EXPECT_EQ(o.grid().bits(), expectation_grid_bits(0.02));
}

TEST(ExpectationFinder, ExampleReduction) {
    const auto inst = example_instance();
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(inst.values()[i], kExample[i], 1e-15);
    Rng rng(3);
    const double delta = 0.1;
    const int N = 30;
    int hit = 0;
    for (int i = 0; i < N; ++i) {
        const auto res = find_k_min_expectations(inst, 2, 0.05, delta, rng);
        hit += sorted(res.set) == std::vector<std::size_t>{0, 1};
        EXPECT_EQ(res.ledger.base_cost_per_call() % 2, 0u);
    }
    EXPECT_GE(hit / static_cast<double>(N), 1 - delta - three_sigma(delta, N));
}

TEST(ExpectationFinder, SingleIndex) {
    std::vector<ExpectationPair> pairs;
    pairs.push_back({basis_state(2, 0), HermitianMatrix::diagonal({0.4, 0.0})});
    const ExpectationInstance inst(std::move(pairs));
    Rng rng(4);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(find_k_min_expectations(inst, 1, 0.05, 0.1, rng).set,
                                           std::vector<std::size_t>{0});
}

TEST(Spectrum, RescalingRoundTrip) {
    const SpectrumInstance s({-0.9, 0.0, 0.4}, 1.0);
    const auto ph = s.phases();
    EXPECT_DOUBLE_EQ(ph[0], 0.05);
    EXPECT_DOUBLE_EQ(ph[1], 0.5);
    for (double l : s.lambda()) EXPECT_NEAR(s.from_phase(s.to_phase(l)), l, 1e-15);
    EXPECT_THROW(SpectrumInstance({1.5}, 1.0), std::domain_error);
    const SpectrumInstance top({1.0}, 1.0);
    EXPECT_LT(top.phases()[0], 1.0);
}

TEST(Spectrum, FromHamiltonian) {
    const auto diag = SpectrumInstance::from_hamiltonian(HermitianMatrix::diagonal(kLambda), 1.0);
    EXPECT_EQ(diag.lambda(), kLambda);
    const HermitianMatrix h(2, {Complex(0.0), Complex(0.5), Complex(0.5), Complex(0.0)});
    const auto mixed = SpectrumInstance::from_hamiltonian(h, 1.0);
    EXPECT_NEAR(mixed.lambda()[0], -0.5, 1e-12);
    EXPECT_NEAR(mixed.lambda()[1], 0.5, 1e-12);
}

TEST(EnergyOracle, OnGridPhasesArePointMasses) {
    const SpectrumInstance s({-0.5, 0.0, 0.25}, 1.0);
    const auto o = build_energy_oracle(s, 6, 3);
    for (std::size_t i = 0; i < 3; ++i) {
        ASSERT_EQ(o.row(i).size(), 1u);
        EXPECT_DOUBLE_EQ(o.grid().value(o.row(i)[0].y), s.phases()[i]);
    }
    EXPECT_EQ(o.base_cost_per_call(), 3u * 64u);
}

TEST(EnergyOracle, ValidatedAtClaimedPrecision) {
    const SpectrumInstance s(kLambda, 1.0);
    const auto o = build_energy_oracle(s, 8, 9);
    EXPECT_EQ(o.grid().bits(), 11);
    EXPECT_DOUBLE_EQ(o.claimed_eps(), std::ldexp(1.0, -7));
    const auto report = oracle::validate_oracle(o, s.phases(), std::ldexp(1.0, -7), o.claimed_delta());
    EXPECT_TRUE(report.valid);
    EXPECT_EQ(o.base_cost_per_call(), 9u * 256u);
}

TEST(EnergyPlan, Parameters) {
    const SpectrumInstance s(kLambda, 1.0);
    const auto plan = plan_energy_pipeline(s, 2, 0.03, 0.1);
    EXPECT_DOUBLE_EQ(plan.phase_eps, 0.03 / 14);
    EXPECT_EQ(plan.precision_bits, 10);
    EXPECT_EQ(plan.grid_bits, 13);
    EXPECT_DOUBLE_EQ(plan.delta0, default_delta0(0.1, 4, 2));
    EXPECT_LE(oracle::fejer_failure_bound(plan.median_reps), plan.delta0);
}

TEST(EnergyFinder, FourLevelExample) {
    const SpectrumInstance s(kLambda, 1.0);
    Rng rng(5);
    const double delta = 0.1;
    const int N = 30;
    int hit = 0;
    for (int i = 0; i < N; ++i) hit += sorted(find_k_ground_energies(s, 2, 0.03, delta, rng).set) ==
                                       std::vector<std::size_t>{0, 1};
    EXPECT_GE(hit / static_cast<double>(N), 1 - delta - three_sigma(delta, N));
}

TEST(EnergyFinder, DegenerateSpectrumAnySubset) {
    const SpectrumInstance s(std::vector<double>(6, 0.2), 1.0);
    Rng rng(6);
    for (int i = 0; i < 10; ++i) {
        const auto res = find_k_ground_energies(s, 3, 0.03, 0.1, rng);
        EXPECT_TRUE(verify::is_strong_set(s.lambda(), res.set, 0.0));
    }
}

TEST(EnergyFinder, DiagonalHamiltonianMatchesDirectPipeline) {
    const auto from_h = SpectrumInstance::from_hamiltonian(HermitianMatrix::diagonal(kLambda), 1.0);
    Rng a(77), b(77);
    const auto via_h = find_k_ground_energies(from_h, 2, 0.03, 0.1, a);

    const SpectrumInstance direct(kLambda, 1.0);
    const auto plan = plan_energy_pipeline(direct, 2, 0.03, 0.1);
    const auto o = oracle::build_fejer_oracle(direct.phases(), plan.precision_bits, plan.median_reps,
                                              oracle::ValueGrid(plan.grid_bits));
    oracle::QueryLedger ledger;
    const auto tr = kmin::find_approx_strong_min(o, 2, plan.phase_eps, 0.05, b, ledger);

    EXPECT_EQ(via_h.set, tr.set);
    EXPECT_EQ(via_h.transcript.weak.set, tr.weak.set);
    EXPECT_EQ(via_h.transcript.v_prime, tr.v_prime);
    EXPECT_EQ(via_h.transcript.ell, tr.ell);
    EXPECT_EQ(via_h.transcript.samples, tr.samples);
    EXPECT_EQ(via_h.transcript.v_tilde, tr.v_tilde);
    EXPECT_EQ(via_h.ledger.calls(), ledger.calls());
}
