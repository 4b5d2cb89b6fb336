#include "maqm/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/random/geometric_distribution.hpp>
#include <json.hpp>

#include "maqm/rng.hpp"

namespace maqm {

PhaseLedger PhaseLedger::zeros(int dimension) {
  PhaseLedger ledger;
  for (int k = 0; k < dimension; ++k) ledger.entries.push_back({k, 0.0, 0.0, 0.0});
  return ledger;
}

double PhaseLedger::net_phase(int branch, bool common_laser) const {
  const auto& e = entries.at(static_cast<std::size_t>(branch));
  const double beta = common_laser ? e.alpha : e.beta;
  return e.alpha - beta + e.drift;
}

std::vector<CellAddress> source_pair(char name) {
  constexpr auto m = MemoryId::maqm1;
  switch (name) {
    case 'A': return {{m, 0, 1}, {m, 0, 2}};
    case 'B': return {{m, 2, 0}, {m, 2, 1}};
    case 'C': return {{m, 4, 3}, {m, 4, 4}};
  }
  throw std::invalid_argument(std::string("unknown source pair '") + name + "'");
}

std::vector<CellAddress> target_pair(int index) {
  constexpr auto m = MemoryId::maqm2;
  switch (index) {
    case 1: return {{m, 0, 0}, {m, 0, 1}};
    case 2: return {{m, 2, 2}, {m, 2, 3}};
    case 3: return {{m, 4, 4}, {m, 4, 5}};
  }
  throw std::invalid_argument("unknown target pair " + std::to_string(index));
}

std::vector<CellAddress> source_subarray() {
  constexpr auto m = MemoryId::maqm1;
  return {{m, 1, 3}, {m, 1, 4}, {m, 2, 3}, {m, 2, 4}};
}

std::vector<CellAddress> target_subarray() {
  constexpr auto m = MemoryId::maqm2;
  return {{m, 1, 3}, {m, 1, 4}, {m, 2, 3}, {m, 2, 4}};
}

ProtocolConfig ProtocolConfig::qubit_defaults() {
  ProtocolConfig cfg;
  cfg.dimension = 2;
  cfg.source_cells = source_pair('A');
  cfg.target_cells = target_pair(1);
  cfg.retrieval_order = {0, 1};
  cfg.t1_us = 15.6;
  cfg.tau_us = 7.8;
  cfg.t2_us = 7.8;
  cfg.relative_phases = {0.0, 0.0};
  cfg.ledger = PhaseLedger::zeros(2);
  cfg.maqm1 = maqm1_default();
  cfg.maqm2 = maqm2_default();
  return cfg;
}

ProtocolConfig ProtocolConfig::qudit_defaults() {
  ProtocolConfig cfg;
  cfg.dimension = 4;
  cfg.source_cells = source_subarray();
  cfg.target_cells = target_subarray();
  cfg.retrieval_order = {0, 1, 2, 3};
  cfg.t1_us = 11.7;
  cfg.tau_us = 3.9;
  cfg.t2_us = 7.8;
  cfg.relative_phases = {0.0, 0.0, 0.0, 0.0};
  cfg.ledger = PhaseLedger::zeros(4);
  cfg.maqm1 = maqm1_default();
  cfg.maqm1.t_larmor_us = 3.9;
  cfg.maqm2 = maqm2_default();
  return cfg;
}

void ProtocolConfig::validate() const {
  if (dimension != 2 && dimension != 4) throw std::invalid_argument("dimension must be 2 or 4");
  const auto d = static_cast<std::size_t>(dimension);
  if (source_cells.size() != d || target_cells.size() != d) {
    throw std::invalid_argument("source/target cell count must equal the dimension");
  }
  if (!(t1_us >= 0.0 && tau_us >= 0.0 && t2_us >= 0.0)) {
    throw std::invalid_argument("t1, tau and t2 must be non-negative");
  }
  if (relative_phases.size() != d) throw std::invalid_argument("relative_phases needs one entry per branch");
  if (ledger.entries.size() != d) throw std::invalid_argument("phase ledger needs one entry per time bin");
  std::vector<int> order = retrieval_order;
  std::sort(order.begin(), order.end());
  std::vector<int> identity(d);
  std::iota(identity.begin(), identity.end(), 0);
  if (order != identity) throw std::invalid_argument("retrieval_order must be a permutation of 0..d-1");
  maqm1.validate();
  maqm2.validate();
  if (maqm1.id != MemoryId::maqm1 || maqm2.id != MemoryId::maqm2) {
    throw std::invalid_argument("memory specs must be (MAQM1, MAQM2)");
  }
  auto distinct = [](std::vector<CellAddress> cells) {
    std::sort(cells.begin(), cells.end());
    return std::adjacent_find(cells.begin(), cells.end()) == cells.end();
  };
  if (!distinct(source_cells) || !distinct(target_cells)) {
    throw std::invalid_argument("source and target cells must be distinct");
  }
  for (const auto& c : source_cells) maqm1.require_cell(c);
  for (const auto& c : target_cells) maqm2.require_cell(c);
}

namespace {

std::vector<ModeLabel> labels(const std::vector<CellAddress>& cells, ModeLabel (*make)(const CellAddress&)) {
  std::vector<ModeLabel> out;
  for (const auto& c : cells) out.push_back(make(c));
  return out;
}

std::string slot_label(int slot, const CellAddress& from, const CellAddress& to) {
  return "slot " + std::to_string(slot) + ": " + to_string(from) + " -> " + to_string(to);
}

TransferOutcome simulate(const ProtocolConfig& cfg) {
  cfg.validate();
  const int d = cfg.dimension;
  const auto signal = labels(cfg.source_cells, &ModeLabel::signal);
  const auto atom1 = labels(cfg.source_cells, &ModeLabel::atom1);
  const auto atom2 = labels(cfg.target_cells, &ModeLabel::atom2);

  const PureState generated = maximally_entangled(signal, atom1, cfg.relative_phases);
  std::vector<TrajectoryStep> trajectory{{"generation", generated}};

  double herald = 0.0;
  for (const auto& c : cfg.source_cells) herald += cell_efficiency(cfg.maqm1, c, EfficiencyStage::write);
  herald /= d;

  std::vector<double> branch_eff(static_cast<std::size_t>(d));
  std::vector<EfficiencyRecord> records;

  if (!cfg.transfer_enabled) {
    // All branches are read out together at t1 with a superposition read.
    const double s1 = survival(cfg.maqm1, cfg.t1_us);
    Eigen::VectorXcd w = generated.amplitudes();
    for (int k = 0; k < d; ++k) {
      const auto& cell = cfg.source_cells[static_cast<std::size_t>(k)];
      const double eff = cell_efficiency(cfg.maqm1, cell, EfficiencyStage::read) * s1;
      branch_eff[static_cast<std::size_t>(k)] = eff;
      records.push_back({cell, cfg.t1_us, s1});
      const int i = basis_index(generated.basis(), {{signal[static_cast<std::size_t>(k)], atom1[static_cast<std::size_t>(k)]}});
      w[i] *= std::sqrt(eff);
    }
    WeightedState weighted{generated.basis(), std::move(w)};
    const double n2 = weighted.norm2();
    const double f = n2 > 0.0 ? std::norm(generated.amplitudes().dot(weighted.amplitudes)) / n2 : 0.0;
    trajectory.push_back({"retrieval from MAQM1", generated});
    return TransferOutcome{
        .dimension = d,
        .transfer_enabled = false,
        .ideal_state = generated,
        .weighted_state = std::move(weighted),
        .target = generated,
        .herald_probability = herald,
        .predicted_fidelity = std::clamp(f, 0.0, 1.0),
        .trajectory = std::move(trajectory),
        .branch_efficiency = std::move(branch_eff),
        .storage_records = std::move(records),
    };
  }

  // Lossless trajectory over signal x (atom1 + atom2), moving one branch per slot.
  std::vector<ModeLabel> atoms = atom1;
  atoms.insert(atoms.end(), atom2.begin(), atom2.end());
  const Basis wide = product_basis(signal, atoms);
  Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(wide.size()));
  for (int k = 0; k < d; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    amps[basis_index(wide, {{signal[ku], atom1[ku]}})] = generated.amplitude({{signal[ku], atom1[ku]}});
  }
  PureState state(wide, amps);
  for (int slot = 0; slot < d; ++slot) {
    const auto k = static_cast<std::size_t>(cfg.retrieval_order[static_cast<std::size_t>(slot)]);
    Eigen::VectorXcd moved = state.amplitudes();
    const int from = basis_index(wide, {{signal[k], atom1[k]}});
    const int to = basis_index(wide, {{signal[k], atom2[k]}});
    moved[to] = moved[from];
    moved[from] = 0.0;
    state = PureState(wide, std::move(moved));
    const auto& entry = cfg.ledger.entries[k];
    state = apply_mode_phase(state, atom2[k], entry.alpha);
    state = apply_mode_phase(state, atom2[k], cfg.common_laser ? -entry.alpha : -entry.beta);
    if (entry.drift != 0.0) state = apply_mode_phase(state, atom2[k], entry.drift);
    trajectory.push_back({slot_label(slot, cfg.source_cells[k], cfg.target_cells[k]), state});
  }

  const Basis final_basis = product_basis(signal, atom2);
  Eigen::VectorXcd ideal_amps(static_cast<Eigen::Index>(final_basis.size()));
  for (std::size_t i = 0; i < final_basis.size(); ++i) {
    ideal_amps[static_cast<Eigen::Index>(i)] = state.amplitude(final_basis[i]);
  }
  PureState ideal(final_basis, std::move(ideal_amps));
  trajectory.push_back({"retrieval from MAQM2", ideal});

  // Loss-weighted branches, with EIT-stage crosstalk onto neighbouring target cells.
  const double t_final = cfg.t1_us + (d - 1) * cfg.tau_us + cfg.t2_us;
  Eigen::VectorXcd w = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(final_basis.size()));
  for (int slot = 0; slot < d; ++slot) {
    const auto k = static_cast<std::size_t>(cfg.retrieval_order[static_cast<std::size_t>(slot)]);
    const double t_read = cfg.t1_us + slot * cfg.tau_us;
    const double t_eit = t_final - t_read;
    const double s1 = survival(cfg.maqm1, t_read);
    const double s2 = survival(cfg.maqm2, t_eit);
    records.push_back({cfg.source_cells[k], t_read, s1});
    records.push_back({cfg.target_cells[k], t_eit, s2});
    const double read = cell_efficiency(cfg.maqm1, cfg.source_cells[k], EfficiencyStage::read) * s1;
    const cplx amp = ideal.amplitude({{signal[k], atom2[k]}});
    for (const auto& [cell, share] : crosstalk_map(cfg.maqm2, cfg.target_cells[k])) {
      auto it = std::find(cfg.target_cells.begin(), cfg.target_cells.end(), cell);
      if (it == cfg.target_cells.end()) continue;  // leaked outside the encoding
      const auto j = static_cast<std::size_t>(it - cfg.target_cells.begin());
      const double eit = cell_efficiency(cfg.maqm2, cell, EfficiencyStage::eit) * s2;
      if (j == k) branch_eff[k] = read * share * eit;
      w[basis_index(final_basis, {{signal[k], atom2[j]}})] += amp * std::sqrt(read * share * eit);
    }
  }
  WeightedState weighted{final_basis, std::move(w)};
  PureState target = maximally_entangled(signal, atom2, cfg.relative_phases);
  const double n2 = weighted.norm2();
  const double f = n2 > 0.0 ? std::norm(target.amplitudes().dot(weighted.amplitudes)) / n2 : 0.0;
  return TransferOutcome{
      .dimension = d,
      .transfer_enabled = true,
      .ideal_state = std::move(ideal),
      .weighted_state = std::move(weighted),
      .target = std::move(target),
      .herald_probability = herald,
      .predicted_fidelity = std::clamp(f, 0.0, 1.0),
      .trajectory = std::move(trajectory),
      .branch_efficiency = std::move(branch_eff),
      .storage_records = std::move(records),
  };
}

}  // namespace

TransferOutcome run_qubit_transfer(const ProtocolConfig& cfg) {
  if (cfg.dimension != 2) throw std::invalid_argument("qubit transfer needs dimension 2");
  return simulate(cfg);
}

TransferOutcome run_qudit_transfer(const ProtocolConfig& cfg) {
  if (cfg.dimension != 4) throw std::invalid_argument("qudit transfer needs dimension 4");
  return simulate(cfg);
}

TransferOutcome run_transfer(const ProtocolConfig& cfg) {
  return cfg.dimension == 2 ? run_qubit_transfer(cfg) : run_qudit_transfer(cfg);
}

PureState project_w(const TransferOutcome& outcome) {
  const auto& ws = outcome.weighted_state;
  const auto photons = modes_of_kind(ws.basis, ModeKind::signal);
  auto atoms = modes_of_kind(ws.basis, outcome.transfer_enabled ? ModeKind::atom2 : ModeKind::atom1);
  const auto np = static_cast<Eigen::Index>(photons.size());
  const auto na = static_cast<Eigen::Index>(atoms.size());
  if (np * na != static_cast<Eigen::Index>(ws.basis.size())) {
    throw std::invalid_argument("project_w: weighted state is not a photon x atom product");
  }
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(na);
  const double norm = 1.0 / std::sqrt(static_cast<double>(np));
  for (Eigen::Index i = 0; i < np; ++i) {
    for (Eigen::Index j = 0; j < na; ++j) psi[j] += norm * ws.amplitudes[i * na + j];
  }
  if (psi.norm() < 1e-300 || !(psi.norm() > 0.0)) {
    throw PostSelectionError("W projection has zero amplitude: every branch was lost");
  }
  return PureState::normalized(single_mode_basis(atoms), std::move(psi));
}

HeraldResult herald_loop(double p_signal, std::uint64_t max_cycles, std::uint64_t seed) {
  if (!(p_signal > 0.0 && p_signal <= 1.0)) throw std::invalid_argument("herald probability must lie in (0, 1]");
  if (max_cycles < 1) throw std::invalid_argument("max_cycles must be >= 1");
  if (p_signal == 1.0) return {1, false};
  Rng rng(seed);
  boost::random::geometric_distribution<std::uint64_t, double> failures(p_signal);
  const std::uint64_t cycles = failures(rng) + 1;
  if (cycles > max_cycles) return {max_cycles, true};
  return {cycles, false};
}

std::string to_json(const TransferOutcome& outcome) {
  nlohmann::ordered_json doc;
  doc["dimension"] = outcome.dimension;
  doc["transfer_enabled"] = outcome.transfer_enabled;
  doc["herald_probability"] = outcome.herald_probability;
  doc["predicted_fidelity"] = outcome.predicted_fidelity;
  doc["ideal_state"] = nlohmann::ordered_json::parse(to_json(outcome.ideal_state));
  doc["target"] = nlohmann::ordered_json::parse(to_json(outcome.target));
  nlohmann::ordered_json weighted;
  weighted["basis"] = doc["ideal_state"]["basis"];
  std::vector<double> re, im;
  for (const auto& a : outcome.weighted_state.amplitudes) {
    re.push_back(a.real());
    im.push_back(a.imag());
  }
  weighted["re"] = re;
  weighted["im"] = im;
  doc["weighted_state"] = weighted;
  doc["branch_efficiency"] = outcome.branch_efficiency;
  auto steps = nlohmann::ordered_json::array();
  for (const auto& step : outcome.trajectory) {
    steps.push_back({{"label", step.label}, {"state", nlohmann::ordered_json::parse(to_json(step.state))}});
  }
  doc["trajectory"] = steps;
  return doc.dump();
}

}  // namespace maqm
