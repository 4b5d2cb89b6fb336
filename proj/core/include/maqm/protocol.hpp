#pragma once

// Symbolic execution of the transfer protocol: heralded photon-atom
// entanglement in MAQM1, conversion of the spin wave into time bins, EIT
// storage in MAQM2 and final retrieval.
//
// Each branch k of the entangled state lives in source cell k of MAQM1 and
// target cell k of MAQM2. Retrieval slot m reads its branch out of MAQM1 at
// t1 + m * tau and stores it in MAQM2; every branch is read out of MAQM2
// together at t1 + (d - 1) * tau + t2.

#include <cstdint>
#include <string>
#include <vector>

#include "maqm/memory.hpp"
#include "maqm/qstate.hpp"

namespace maqm {

struct PhaseEntry {
  int bin = 0;
  double alpha = 0.0;  // read beam
  double beta = 0.0;   // coupling beam
  double drift = 0.0;  // residual read/coupling path fluctuation
};

struct PhaseLedger {
  std::vector<PhaseEntry> entries;  // one per time bin, indexed by branch

  static PhaseLedger zeros(int dimension);
  /// Net phase picked up by branch k: alpha - beta + drift, with beta := alpha
  /// when the read and coupling beams share a laser.
  double net_phase(int branch, bool common_laser) const;
};

struct ProtocolConfig {
  int dimension = 2;
  std::vector<CellAddress> source_cells;  // MAQM1
  std::vector<CellAddress> target_cells;  // MAQM2
  /// retrieval_order[m] is the branch read out in slot m.
  std::vector<int> retrieval_order;
  double t1_us = 15.6;
  double tau_us = 7.8;
  double t2_us = 7.8;
  std::vector<double> relative_phases;  // write-stage phase per branch
  PhaseLedger ledger;
  bool common_laser = true;
  /// false: measure straight out of MAQM1 at t1 (MAQM2 beams blocked).
  bool transfer_enabled = true;
  MemorySpec maqm1;
  MemorySpec maqm2;

  /// Throws std::invalid_argument / std::out_of_range on broken invariants.
  void validate() const;

  /// Pair A -> I with the qubit timing (t1 = 15.6, tau = 7.8, t2 = 7.8 us).
  static ProtocolConfig qubit_defaults();
  /// 2x2 sub-array with the qudit timing (t1 = 11.7, tau = 3.9, t2 = 7.8 us).
  static ProtocolConfig qudit_defaults();
};

/// Built-in cell choices: pairs A, B, C in MAQM1, I, II, III in MAQM2, and the
/// 2x2 sub-arrays.
std::vector<CellAddress> source_pair(char name);
std::vector<CellAddress> target_pair(int index);
std::vector<CellAddress> source_subarray();
std::vector<CellAddress> target_subarray();

struct TrajectoryStep {
  std::string label;
  PureState state;
};

struct TransferOutcome {
  int dimension = 2;
  bool transfer_enabled = true;
  /// Lossless state after the last stage, over signal x (atom2 | atom1) modes.
  PureState ideal_state;
  /// Branch amplitudes scaled by sqrt(efficiency * survival) of every stage.
  WeightedState weighted_state;
  /// Maximally entangled reference with the configured write phases.
  PureState target;
  double herald_probability = 0.0;
  double predicted_fidelity = 0.0;
  std::vector<TrajectoryStep> trajectory;
  /// Probability that branch k's excitation survives to detection.
  std::vector<double> branch_efficiency;
  std::vector<EfficiencyRecord> storage_records;
};

TransferOutcome run_qubit_transfer(const ProtocolConfig& cfg);
TransferOutcome run_qudit_transfer(const ProtocolConfig& cfg);
/// Dispatches on cfg.dimension.
TransferOutcome run_transfer(const ProtocolConfig& cfg);

/// Thrown when the conditional state has zero amplitude.
class PostSelectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Conditions the weighted state on the signal photon detected in the uniform
/// superposition of its modes; returns the normalized atomic state.
PureState project_w(const TransferOutcome& outcome);

struct HeraldResult {
  std::uint64_t cycles = 0;
  bool exhausted = false;
};

/// Repeats write-clean cycles until a signal photon is heralded (probability
/// p_signal per cycle) or max_cycles is reached.
HeraldResult herald_loop(double p_signal, std::uint64_t max_cycles, std::uint64_t seed);

std::string to_json(const TransferOutcome& outcome);

}  // namespace maqm
