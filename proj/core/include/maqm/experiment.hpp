#pragma once

// Batch pipeline: JSON experiment configs, generation -> transfer ->
// detection -> estimation runs at both stages, schedule compilation and
// parameter sweeps.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "maqm/protocol.hpp"
#include "maqm/schedule.hpp"
#include "maqm/tomo.hpp"

namespace maqm {

/// Schema or value error in a config document. `line` is 1-based, 0 when the
/// offending value has no position (missing key at top level).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, std::string pointer, const std::string& message);

  int line() const { return line_; }
  const std::string& pointer() const { return pointer_; }

 private:
  int line_;
  std::string pointer_;
};

struct DetectionParams {
  double eta_det = 1.0;
  double dark_rate = 0.0;
  std::uint64_t heralds_per_setting = 1000;
};

struct EstimationParams {
  int n_resamples = 100;
  double tol = 1e-10;
};

struct ExperimentConfig {
  ProtocolConfig protocol;
  ScheduleConstraints constraints;
  DetectionParams detection;
  EstimationParams estimation;
  std::uint64_t seed = 0;
  /// FNV-1a 64 of the source bytes.
  std::uint64_t config_hash = 0;
};

/// Parses a config document. Throws ConfigError with the line of the
/// offending value.
ExperimentConfig parse_config(std::string_view text);
/// Reads and parses a file; I/O failures are reported as ConfigError too.
ExperimentConfig load_config(const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);

struct StageReport {
  bool transfer_enabled = false;
  double predicted_fidelity = 0.0;
  double herald_probability = 0.0;
  /// Entanglement fidelity from tomography (qubit runs).
  std::optional<FidelityEstimate> fidelity;
  /// W fidelity of the heralded atomic register (qudit runs).
  std::optional<FidelityEstimate> w_fidelity;
  std::optional<double> predicted_w_fidelity;
  std::optional<ReconstructionResult> reconstruction;
  std::vector<std::string> warnings;
};

struct Report {
  int dimension = 2;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  StageReport maqm1_stage;
  StageReport maqm2_stage;
  /// Uhlmann fidelity between the two reconstructions (qubit runs).
  std::optional<double> transmission_fidelity;
  bool schedule_valid = false;
  std::vector<Violation> schedule_violations;
};

Report run_experiment(const ExperimentConfig& config);

std::string to_json(const Report& report);
std::string csv_header();
/// One CSV row matching csv_header(), no trailing newline.
std::string csv_row(const Report& report);

/// Compiles and validates the protocol schedule.
Schedule compile_only(const ExperimentConfig& config);

/// Sweep rows: `parameter` is a JSON pointer to a numeric value inside one of
/// the /protocol, /detection, /estimation, /maqm1 or /maqm2 sections of the
/// config text. Row i uses seed substream_seed(seed, i).
struct SweepRow {
  double value = 0.0;
  Report report;
};
std::vector<SweepRow> sweep(std::string_view config_text, const std::string& parameter,
                            const std::vector<double>& values, std::optional<std::uint64_t> seed_override = {});
std::string sweep_csv(const std::string& parameter, const std::vector<SweepRow>& rows);

}  // namespace maqm
