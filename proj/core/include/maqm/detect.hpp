#pragma once

// Photon-counting layer: projects loss-weighted states onto product
// measurement settings and samples integer coincidence counts per setting.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "maqm/protocol.hpp"
#include "maqm/qstate.hpp"

namespace maqm {

/// Product projector |signal_basis> (x) |atom_basis>. Vector entries follow the
/// sorted order of the signal (resp. atom) modes of the measured state.
struct MeasurementSetting {
  Eigen::VectorXcd signal_basis;
  Eigen::VectorXcd atom_basis;
  std::string label;

  /// Signal ⊗ atom vector in the product-basis index order i * n_atom + j.
  Eigen::VectorXcd product() const;
};

struct CountsRow {
  std::string label;
  std::uint64_t heralds = 0;
  std::uint64_t coincidences = 0;
};

struct CountsTable {
  std::vector<CountsRow> rows;
  std::uint64_t shots_requested = 0;
  std::uint64_t seed = 0;
};

/// eta_det * |<setting|weighted>|^2, the coincidence probability per herald.
double coincidence_probability(const WeightedState& state, const MeasurementSetting& setting, double eta_det);
double coincidence_probability(const TransferOutcome& outcome, const MeasurementSetting& setting, double eta_det);

/// Per setting: coincidences ~ Binomial(heralds, p + dark_rate), drawn from
/// substream (seed, setting index) so rows do not depend on evaluation order.
CountsTable sample_counts(const WeightedState& state, const std::vector<MeasurementSetting>& settings,
                          std::uint64_t heralds_per_setting, double eta_det, double dark_rate, std::uint64_t seed);
CountsTable sample_counts(const TransferOutcome& outcome, const std::vector<MeasurementSetting>& settings,
                          std::uint64_t heralds_per_setting, double eta_det, double dark_rate, std::uint64_t seed);

/// Single-qubit projectors used for tomography, by label:
///   U = |U>, D = |D>, P = (|U> + |D>)/sqrt2, R = (|U> + i|D>)/sqrt2.
Eigen::Vector2cd qubit_projector(char label);

/// The 16 product settings {U,D,P,R} x {U,D,P,R}; labels "UU", "UP", ...
/// (signal first). Only dimension 2 is supported.
std::vector<MeasurementSetting> tomography_settings(int dimension);

/// Looks a tomography label up; throws std::invalid_argument if unknown.
MeasurementSetting tomography_setting(std::string_view label);

/// Settings for W-state verification of a d-mode atomic register with the
/// signal photon projected on the uniform superposition: "pop:i" onto |i>,
/// "plus:i:j" / "minus:i:j" onto (|i> +- |j>)/sqrt2 for i < j.
std::vector<MeasurementSetting> w_settings(int dimension);

/// CSV with header "label,heralds,coincidences".
std::string to_csv(const CountsTable& table);
/// Throws std::invalid_argument naming the offending line.
CountsTable parse_csv(std::string_view text);

}  // namespace maqm
