#include "maqm/memory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "maqm/rng.hpp"

namespace maqm {

CellMap::CellMap(int n_x, int n_y, std::vector<double> values)
    : n_x_(n_x), n_y_(n_y), values_(std::move(values)) {
  if (n_x < 1 || n_y < 1) throw std::invalid_argument("cell map needs a non-empty grid");
  if (values_.size() != static_cast<std::size_t>(n_x) * static_cast<std::size_t>(n_y)) {
    throw std::invalid_argument("cell map has " + std::to_string(values_.size()) +
                                " entries, expected " + std::to_string(n_x * n_y));
  }
}

CellMap CellMap::uniform(int n_x, int n_y, double value) {
  return CellMap(n_x, n_y, std::vector<double>(static_cast<std::size_t>(n_x * n_y), value));
}

CellMap CellMap::random_uniform(int n_x, int n_y, double lo, double hi, std::uint64_t seed) {
  Rng rng(seed);
  boost::random::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> values(static_cast<std::size_t>(n_x * n_y));
  for (auto& v : values) v = dist(rng);
  return CellMap(n_x, n_y, std::move(values));
}

bool MemorySpec::contains(const CellAddress& cell) const {
  return cell.memory == id && cell.x >= 0 && cell.x < n_x && cell.y >= 0 && cell.y < n_y;
}

void MemorySpec::require_cell(const CellAddress& cell) const {
  if (!contains(cell)) {
    throw std::out_of_range("cell " + to_string(cell) + " is outside the " + to_string(id) +
                            " grid (" + std::to_string(n_x) + "x" + std::to_string(n_y) + ")");
  }
}

void MemorySpec::validate() const {
  const auto name = to_string(id);
  if (n_x < 1 || n_y < 1) throw std::invalid_argument(name + ": grid sizes must be >= 1");
  if (!(tau_mem_us > 0.0)) throw std::invalid_argument(name + ": tau_mem must be > 0");
  if (!(t_larmor_us > 0.0)) throw std::invalid_argument(name + ": t_larmor must be > 0");
  if (!(crosstalk_eps >= 0.0 && crosstalk_eps < 0.5)) {
    throw std::invalid_argument(name + ": crosstalk_eps must lie in [0, 0.5)");
  }
  auto check_map = [&](const CellMap& map, const char* what) {
    if (map.n_x() != n_x || map.n_y() != n_y) {
      throw std::invalid_argument(name + ": " + what + " map does not match the grid");
    }
    for (double v : map.values()) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument(name + ": " + what + " value " + std::to_string(v) +
                                    " outside [0, 1]");
      }
    }
  };
  check_map(eta_write, "eta_write");
  check_map(eta_read, "eta_read");
  check_map(eta_eit, "eta_eit");
}

MemorySpec maqm1_default() {
  MemorySpec spec;
  spec.id = MemoryId::maqm1;
  spec.n_x = 5;
  spec.n_y = 6;
  spec.eta_write = CellMap::uniform(5, 6, 0.01);
  spec.eta_read = CellMap::random_uniform(5, 6, 0.10, 0.30, 0x4d41514d31ULL);
  spec.eta_eit = CellMap::uniform(5, 6, 1.0);
  spec.tau_mem_us = 65.0;
  spec.t_larmor_us = 7.8;
  spec.rf = {{97.0, 1.5}, {95.5, 1.5}};
  return spec;
}

MemorySpec maqm2_default() {
  MemorySpec spec;
  spec.id = MemoryId::maqm2;
  spec.n_x = 5;
  spec.n_y = 6;
  spec.eta_write = CellMap::uniform(5, 6, 0.0);
  spec.eta_read = CellMap::uniform(5, 6, 1.0);
  spec.eta_eit = CellMap::random_uniform(5, 6, 0.10, 0.30, 0x4d41514d32ULL);
  spec.tau_mem_us = 27.8;
  spec.t_larmor_us = 1.3;
  spec.rf = {{101.1, 1.2}, {99.0, 1.2}};
  return spec;
}

double survival(const MemorySpec& spec, double t_us) {
  if (t_us < 0.0) throw std::invalid_argument("survival: negative storage time");
  const double envelope = std::exp(-std::pow(t_us / spec.tau_mem_us, 2));
  const double c = std::cos(std::numbers::pi * t_us / spec.t_larmor_us);
  return envelope * c * c;
}

double cell_efficiency(const MemorySpec& spec, const CellAddress& cell, EfficiencyStage stage) {
  spec.require_cell(cell);
  switch (stage) {
    case EfficiencyStage::write: return spec.eta_write.at(cell.x, cell.y);
    case EfficiencyStage::read: return spec.eta_read.at(cell.x, cell.y);
    case EfficiencyStage::eit: return spec.eta_eit.at(cell.x, cell.y);
  }
  return 0.0;
}

ProbeEstimate eit_efficiency_probe(const MemorySpec& spec, const CellAddress& cell,
                                   double t_store_us, double mean_photon_number,
                                   std::uint64_t shots, std::uint64_t seed) {
  if (!(mean_photon_number > 0.0)) throw std::invalid_argument("probe: mean photon number must be > 0");
  if (shots < 1) throw std::invalid_argument("probe: shots must be >= 1");
  const double p = cell_efficiency(spec, cell, EfficiencyStage::eit) * survival(spec, t_store_us);

  Rng rng(seed);
  boost::random::poisson_distribution<std::uint64_t, double> photons(mean_photon_number);
  ProbeEstimate out;
  for (std::uint64_t shot = 0; shot < shots; ++shot) {
    const std::uint64_t n = photons(rng);
    if (n == 0) continue;
    boost::random::binomial_distribution<std::int64_t, double> kept(static_cast<std::int64_t>(n), p);
    out.photons_in += n;
    out.detected += static_cast<std::uint64_t>(kept(rng));
  }
  if (out.photons_in == 0) {
    out.std_error = std::numeric_limits<double>::infinity();
    return out;
  }
  const double n = static_cast<double>(out.photons_in);
  out.estimate = static_cast<double>(out.detected) / n;
  out.std_error = std::sqrt(out.estimate * (1.0 - out.estimate) / n);
  return out;
}

std::vector<std::pair<CellAddress, double>> crosstalk_map(const MemorySpec& spec,
                                                          const CellAddress& target) {
  spec.require_cell(target);
  const double eps = spec.crosstalk_eps;
  if (eps == 0.0) return {{target, 1.0}};
  std::vector<CellAddress> neighbours;
  for (auto [dx, dy] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
    CellAddress c{target.memory, target.x + dx, target.y + dy};
    if (spec.contains(c)) neighbours.push_back(c);
  }
  std::sort(neighbours.begin(), neighbours.end());
  std::vector<std::pair<CellAddress, double>> out{{target, 1.0 - eps}};
  if (neighbours.empty()) {
    out.front().second = 1.0;  // 1x1 grid: nowhere to leak
    return out;
  }
  const double share = eps / static_cast<double>(neighbours.size());
  for (const auto& c : neighbours) out.emplace_back(c, share);
  return out;
}

}  // namespace maqm
