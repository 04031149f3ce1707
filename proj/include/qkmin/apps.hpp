#pragma once

// Desk-scale applications: k-minimum expectation values tr(O_i rho_i) and k
// lowest eigen-energies, each reduced to strong approximate k-minimum finding
// over a simulated estimation oracle.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "qkmin/kmin.hpp"
#include "qkmin/oracle.hpp"
#include "qkmin/rng.hpp"

namespace qkmin::apps {

using Complex = std::complex<double>;

/// Raised when an application-built oracle fails validation.
class OracleValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense Hermitian matrix, dimension at most 16.
class HermitianMatrix {
public:
    static constexpr std::size_t kMaxDim = 16;

    explicit HermitianMatrix(Eigen::MatrixXcd m);
    /// Row-major entries, m * m of them.
    HermitianMatrix(std::size_t m, const std::vector<Complex>& row_major);

    static HermitianMatrix diagonal(const std::vector<double>& d);
    /// |psi><psi| for a normalized psi.
    static HermitianMatrix projector(const std::vector<Complex>& psi);

    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    [[nodiscard]] const Eigen::MatrixXcd& matrix() const noexcept { return m_; }
    [[nodiscard]] Complex operator()(std::size_t r, std::size_t c) const {
        return m_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }

    /// Ascending.
    [[nodiscard]] std::vector<double> eigenvalues() const;
    [[nodiscard]] bool is_psd(double tol = 1e-10) const;
    [[nodiscard]] double operator_norm() const;
    [[nodiscard]] Complex trace() const { return m_.trace(); }
    [[nodiscard]] bool is_diagonal() const;

private:
    Eigen::MatrixXcd m_;
};

/// tr(O rho). Requires rho trace-1 PSD and O PSD with norm at most 1.
double expectation_value(const HermitianMatrix& O, const HermitianMatrix& rho);

struct ExpectationPair {
    HermitianMatrix rho;
    HermitianMatrix observable;
};

class ExpectationInstance {
public:
    explicit ExpectationInstance(std::vector<ExpectationPair> pairs);

    [[nodiscard]] std::size_t n() const noexcept { return pairs_.size(); }
    [[nodiscard]] const std::vector<ExpectationPair>& pairs() const noexcept { return pairs_; }
    /// v_i = tr(O_i rho_i), clamped into [0, 1].
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

private:
    std::vector<ExpectationPair> pairs_;
    std::vector<double> values_;
};

class SpectrumInstance {
public:
    SpectrumInstance(std::vector<double> lambda, double beta);

    /// Diagonal entries in order for a diagonal H; otherwise its eigenvalues.
    static SpectrumInstance from_hamiltonian(const HermitianMatrix& H, double beta);

    [[nodiscard]] std::size_t n() const noexcept { return lambda_.size(); }
    [[nodiscard]] const std::vector<double>& lambda() const noexcept { return lambda_; }
    [[nodiscard]] double beta() const noexcept { return beta_; }
    /// lambda / (2 beta) + 1/2.
    [[nodiscard]] std::vector<double> phases() const;
    [[nodiscard]] double to_phase(double lambda) const { return lambda / (2.0 * beta_) + 0.5; }
    [[nodiscard]] double from_phase(double phase) const { return (phase - 0.5) * 2.0 * beta_; }

private:
    std::vector<double> lambda_;
    double beta_;
};

/// Register bits of the expectation oracle at precision eps: ceil(log2(8/eps)).
int expectation_grid_bits(double eps);

/// Rows are the median-of-r square-root amplitude estimation outcomes around
/// c_i, read as sin(pi y / M). Validated at (eps, delta) before return.
oracle::ApproxOracle build_expectation_oracle(const ExpectationInstance& instance, double eps, double delta);

/// Fejer oracle on the rescaled phases; values are phases, not energies.
/// Grid bits t + 3; base_cost_per_call = ceil(beta * r * 2^t).
oracle::ApproxOracle build_energy_oracle(const SpectrumInstance& spectrum, int precision_bits, int median_reps);

/// Random instance: rho_i = G G^dag / tr, O_i = s A A^dag / ||A A^dag|| with
/// complex Gaussian G, A and s uniform in [0, 1].
ExpectationInstance random_expectation_instance(std::size_t n, std::size_t dim, Rng& rng);

/// Oracle-side failure budget used by the applications when none is given:
/// delta / (100 n^3 sqrt k).
double default_delta0(double delta, std::size_t n, std::size_t k);

struct IndexSetResult {
    std::vector<std::size_t> set;
    kmin::StrongRunTranscript transcript;
    oracle::QueryLedger ledger;
    /// Precision handed to the strong finder, in oracle value units.
    double inner_eps = 0.0;
    double inner_delta = 0.0;
    double delta0 = 0.0;
    int median_reps = 0;
    int precision_bits = 0;
    int grid_bits = 0;
};

/// Strong finder on build_expectation_oracle(instance, eps/7, delta0) with
/// failure budget delta/2. delta0 <= 0 selects default_delta0.
IndexSetResult find_k_min_expectations(const ExpectationInstance& instance, std::size_t k, double eps, double delta,
                                       Rng& rng, double delta0 = 0.0);

/// Parameters of the energy pipeline for target precision eps in energy units.
struct EnergyPlan {
    double phase_eps;  ///< eps / (14 beta)
    int precision_bits;
    int median_reps;
    int grid_bits;
    double delta0;
};

EnergyPlan plan_energy_pipeline(const SpectrumInstance& spectrum, std::size_t k, double eps, double delta,
                                double delta0 = 0.0);

IndexSetResult find_k_ground_energies(const SpectrumInstance& spectrum, std::size_t k, double eps, double delta,
                                      Rng& rng, double delta0 = 0.0);

}  // namespace qkmin::apps
