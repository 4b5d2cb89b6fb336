#pragma once

// Estimation layer: two-qubit state reconstruction from coincidence counts
// (linear inversion and maximum likelihood), Monte Carlo error bars, and
// W-state fidelity from populations and pairwise coherences.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "maqm/detect.hpp"
#include "maqm/qstate.hpp"

namespace maqm {

/// Default basis for reconstructed two-qubit states: signal {(0,0), (0,1)} x
/// atom2 {(0,0), (0,1)}. Callers pass the basis of the measured state instead
/// whenever fidelities against a labeled target are needed.
Basis two_qubit_basis();

/// Maps every row label to its tomography setting; throws on unknown labels.
std::vector<MeasurementSetting> settings_for(const CountsTable& counts);

/// Unconstrained least-squares inversion of frequencies (coincidences/heralds)
/// onto Hermitian matrices, normalized to unit trace. May be non-physical.
/// Throws std::invalid_argument when the settings are not informationally
/// complete or no coincidences were recorded.
Eigen::MatrixXcd linear_inversion(const CountsTable& counts);
Eigen::MatrixXcd linear_inversion(const CountsTable& counts, const std::vector<MeasurementSetting>& settings);

struct MleOptions {
  /// Converged when the relative log-likelihood change of an accepted step is
  /// below tol and the gradient norm per recorded coincidence is below grad_tol.
  double tol = 1e-10;
  double grad_tol = 1e-6;
  int max_iter = 5000;
  /// Starting point (any PSD matrix; rescaled to the observed count level).
  std::optional<Eigen::MatrixXcd> init;
};

struct ReconstructionResult {
  DensityMatrix rho;
  /// Relative to the saturated model (observed counts as means), so <= 0.
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  /// Log-likelihood after every accepted step (starting point first).
  std::vector<double> likelihood_trace;
};

/// Maximum-likelihood reconstruction under independent Poisson counts with mean
/// heralds * tr(rho~ P_s), rho~ = T^dag T (T upper triangular, free scale).
/// Optimised with L-BFGS and a backtracking line search that only accepts
/// likelihood-increasing steps. All-zero coincidences return the maximally
/// mixed state with converged = false.
ReconstructionResult mle_reconstruct(const CountsTable& counts, const MleOptions& options = {},
                                     const Basis& basis = two_qubit_basis());
ReconstructionResult mle_reconstruct(const CountsTable& counts, const std::vector<MeasurementSetting>& settings,
                                     const MleOptions& options, const Basis& basis);

struct FidelityEstimate {
  double value = 0.0;
  double sigma = 0.0;
  int n_resamples = 0;
  /// Resamples whose reconstruction did not converge (still included) or threw (dropped).
  int failures = 0;
  std::vector<std::string> warnings;
};

/// Resamples every coincidence count as Poisson(observed), reconstructs by MLE
/// and returns mean and sample standard deviation of fidelity to `target`.
FidelityEstimate monte_carlo_fidelity(const CountsTable& counts, const PureState& target, int n_resamples,
                                      std::uint64_t seed, const MleOptions& options = {});

struct WFidelityData {
  std::vector<double> populations;  // p_i, sum 1
  std::vector<double> pair_re;      // Re rho_ij for i < j in row-major order
};

/// F_W = (1/d)(sum_i p_i + 2 sum_{i<j} Re rho_ij). Coherences larger than
/// sqrt(p_i p_j) attach a warning.
FidelityEstimate w_fidelity(const WFidelityData& data);

/// W data from an exact density matrix (tests and predictions).
WFidelityData w_data_from_matrix(const Eigen::MatrixXcd& rho);

/// W data from "pop:i" / "plus:i:j" / "minus:i:j" counts (see w_settings).
WFidelityData w_data_from_counts(const CountsTable& counts, int dimension);

/// Poisson-resampled W fidelity: mean and standard deviation over resamples.
FidelityEstimate monte_carlo_w_fidelity(const CountsTable& counts, int dimension, int n_resamples,
                                        std::uint64_t seed);

/// Coincidence resample: each count replaced by Poisson(count), capped at heralds.
CountsTable poisson_resample(const CountsTable& counts, std::uint64_t seed);

std::string to_json(const ReconstructionResult& result);
std::string to_json(const FidelityEstimate& estimate);

}  // namespace maqm
