#pragma once

#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "maqm/memory.hpp"
#include "maqm/protocol.hpp"

namespace maqm::testing {

inline constexpr double kPi = 3.14159265358979323846;

inline MemorySpec lossless(MemorySpec spec) {
  spec.eta_write = CellMap::uniform(spec.n_x, spec.n_y, 1.0);
  spec.eta_read = CellMap::uniform(spec.n_x, spec.n_y, 1.0);
  spec.eta_eit = CellMap::uniform(spec.n_x, spec.n_y, 1.0);
  spec.tau_mem_us = std::numeric_limits<double>::infinity();
  return spec;
}

inline ProtocolConfig ideal_qubit() {
  auto cfg = ProtocolConfig::qubit_defaults();
  cfg.maqm1 = lossless(cfg.maqm1);
  cfg.maqm2 = lossless(cfg.maqm2);
  return cfg;
}

inline ProtocolConfig ideal_qudit() {
  auto cfg = ProtocolConfig::qudit_defaults();
  cfg.maqm1 = lossless(cfg.maqm1);
  cfg.maqm2 = lossless(cfg.maqm2);
  return cfg;
}

// Closed form for a two-branch state with branch probabilities e1, e2.
inline double two_branch_fidelity(double e1, double e2) {
  return std::pow(std::sqrt(e1) + std::sqrt(e2), 2) / (2.0 * (e1 + e2));
}

// Haar-ish random pure state mixed with a random amount of white noise.
inline Eigen::MatrixXcd random_density(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = {g(rng), g(rng)};
  }
  Eigen::MatrixXcd rho = a * a.adjoint();
  return rho / rho.trace().real();
}

inline Eigen::VectorXcd random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v[i] = {g(rng), g(rng)};
  return v.normalized();
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace maqm::testing
