#pragma once

// Phenomenological model of one multiplexed memory: a grid of micro-ensembles
// with per-cell efficiencies, a Gaussian storage envelope and Larmor
// modulation of the retrieval efficiency.

#include <cstdint>
#include <utility>
#include <vector>

#include "maqm/cell.hpp"

namespace maqm {

/// Per-cell scalar map, row-major: index = y * n_x + x.
class CellMap {
 public:
  CellMap() = default;
  CellMap(int n_x, int n_y, std::vector<double> values);
  static CellMap uniform(int n_x, int n_y, double value);
  /// Entries drawn uniformly from [lo, hi] with a fixed seed.
  static CellMap random_uniform(int n_x, int n_y, double lo, double hi, std::uint64_t seed);

  double at(int x, int y) const { return values_[static_cast<std::size_t>(y * n_x_ + x)]; }
  double& at(int x, int y) { return values_[static_cast<std::size_t>(y * n_x_ + x)]; }
  const std::vector<double>& values() const { return values_; }
  int n_x() const { return n_x_; }
  int n_y() const { return n_y_; }

 private:
  int n_x_ = 0;
  int n_y_ = 0;
  std::vector<double> values_;
};

struct RfAxis {
  double origin_mhz = 0.0;
  double step_mhz = 0.0;

  double frequency(int index) const { return origin_mhz + step_mhz * index; }
};

struct RfGrid {
  RfAxis x;
  RfAxis y;
};

struct MemorySpec {
  MemoryId id = MemoryId::maqm1;
  int n_x = 1;
  int n_y = 1;
  CellMap eta_write;  // heralded excitation probability per write attempt
  CellMap eta_read;   // spin-wave -> idler retrieval efficiency
  CellMap eta_eit;    // EIT storage-and-retrieval efficiency (MAQM2)
  double tau_mem_us = 1.0;
  double t_larmor_us = 1.0;
  RfGrid rf;
  double crosstalk_eps = 0.0;

  /// Throws std::invalid_argument naming the first broken invariant.
  void validate() const;
  bool contains(const CellAddress& cell) const;
  /// Throws std::out_of_range when `cell` is outside the grid or belongs to
  /// the other memory.
  void require_cell(const CellAddress& cell) const;
};

/// 5 x 6 grid, 65 us memory time, 7.8 us Larmor period, X 97-103 / Y 95.5-103 MHz
/// in 1.5 MHz steps; efficiency maps drawn from [0.10, 0.30] with a fixed seed.
MemorySpec maqm1_default();
/// 5 x 6 grid, 27.8 us memory time, 1.3 us Larmor period, X 101.1-105.9 / Y 99-105
/// MHz in 1.2 MHz steps.
MemorySpec maqm2_default();

/// exp(-(t/tau_mem)^2) * cos^2(pi t / t_larmor).
double survival(const MemorySpec& spec, double t_us);

enum class EfficiencyStage { write, read, eit };

double cell_efficiency(const MemorySpec& spec, const CellAddress& cell, EfficiencyStage stage);

struct EfficiencyRecord {
  CellAddress cell;
  double t_stored_us = 0.0;
  double survival = 1.0;
};

struct ProbeEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t photons_in = 0;
  std::uint64_t detected = 0;
};

/// Weak-coherent-pulse probe of EIT storage: Poisson(mean_photon_number) photons
/// per shot, each retrieved with probability eta_eit(cell) * survival(t_store).
/// The estimate is detected / sent photons with a binomial standard error.
ProbeEstimate eit_efficiency_probe(const MemorySpec& spec, const CellAddress& cell,
                                   double t_store_us, double mean_photon_number,
                                   std::uint64_t shots, std::uint64_t seed);

/// Nearest-neighbour leakage: weight 1 - eps on the target and eps / k on each
/// of its k in-grid 4-neighbours. Target first, neighbours in CellAddress order.
std::vector<std::pair<CellAddress, double>> crosstalk_map(const MemorySpec& spec,
                                                          const CellAddress& target);

}  // namespace maqm
