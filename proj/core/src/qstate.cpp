#include "maqm/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <regex>
#include <stdexcept>

#include <json.hpp>

namespace maqm {

std::string to_string(MemoryId id) { return id == MemoryId::maqm1 ? "MAQM1" : "MAQM2"; }

std::string to_string(const CellAddress& cell) {
  return to_string(cell.memory) + "(" + std::to_string(cell.x) + "," + std::to_string(cell.y) + ")";
}

CellAddress ModeLabel::cell() const {
  return {kind == ModeKind::atom2 ? MemoryId::maqm2 : MemoryId::maqm1, x, y};
}

std::string to_string(const ModeLabel& label) {
  auto xy = "(" + std::to_string(label.x) + "," + std::to_string(label.y) + ")";
  switch (label.kind) {
    case ModeKind::signal: return "s" + xy;
    case ModeKind::atom1: return "a1" + xy;
    case ModeKind::atom2: return "a2" + xy;
    case ModeKind::timebin: return "t" + std::to_string(label.bin);
  }
  return "?";
}

ModeLabel parse_mode_label(const std::string& text) {
  static const std::regex cell_re(R"(^(s|a1|a2)\((\d+),(\d+)\)$)");
  static const std::regex bin_re(R"(^t(\d+)$)");
  std::smatch m;
  if (std::regex_match(text, m, cell_re)) {
    ModeLabel label;
    label.kind = m[1] == "s" ? ModeKind::signal : (m[1] == "a1" ? ModeKind::atom1 : ModeKind::atom2);
    label.x = std::stoi(m[2]);
    label.y = std::stoi(m[3]);
    return label;
  }
  if (std::regex_match(text, m, bin_re)) return ModeLabel::timebin(std::stoi(m[1]));
  throw std::invalid_argument("malformed mode label '" + text + "'");
}

bool BasisElement::contains(const ModeLabel& mode) const {
  return std::find(modes.begin(), modes.end(), mode) != modes.end();
}

namespace {

std::vector<ModeLabel> sorted_distinct(std::span<const ModeLabel> modes, const char* what) {
  std::vector<ModeLabel> out(modes.begin(), modes.end());
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end()) {
    throw std::invalid_argument(std::string("duplicate ") + what + " mode label");
  }
  return out;
}

// Sorts (basis, amplitudes) jointly; rejects repeated basis elements.
void canonicalize(Basis& basis, Eigen::VectorXcd& amplitudes) {
  if (static_cast<Eigen::Index>(basis.size()) != amplitudes.size()) {
    throw std::invalid_argument("basis length " + std::to_string(basis.size()) +
                                " does not match amplitude count " +
                                std::to_string(amplitudes.size()));
  }
  for (const auto& e : basis) {
    auto modes = e.modes;
    std::sort(modes.begin(), modes.end());
    if (modes.empty() || std::adjacent_find(modes.begin(), modes.end()) != modes.end()) {
      throw std::invalid_argument("basis element with empty or repeated modes");
    }
  }
  std::vector<std::size_t> order(basis.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return basis[a] < basis[b]; });
  Basis sorted;
  sorted.reserve(basis.size());
  Eigen::VectorXcd amps(amplitudes.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted.push_back(basis[order[i]]);
    amps[static_cast<Eigen::Index>(i)] = amplitudes[static_cast<Eigen::Index>(order[i])];
  }
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("duplicate basis element");
  }
  basis = std::move(sorted);
  amplitudes = std::move(amps);
}

}  // namespace

Basis product_basis(std::span<const ModeLabel> photons, std::span<const ModeLabel> atoms) {
  auto p = sorted_distinct(photons, "photon");
  auto a = sorted_distinct(atoms, "atom");
  Basis basis;
  basis.reserve(p.size() * a.size());
  for (const auto& ph : p) {
    for (const auto& at : a) basis.push_back({{ph, at}});
  }
  std::sort(basis.begin(), basis.end());
  return basis;
}

Basis single_mode_basis(std::span<const ModeLabel> modes) {
  Basis basis;
  for (const auto& m : sorted_distinct(modes, "single")) basis.push_back({{m}});
  return basis;
}

std::vector<ModeLabel> modes_of_kind(const Basis& basis, ModeKind kind) {
  std::vector<ModeLabel> out;
  for (const auto& e : basis) {
    for (const auto& m : e.modes) {
      if (m.kind == kind) out.push_back(m);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int basis_index(const Basis& basis, const BasisElement& element) {
  auto it = std::lower_bound(basis.begin(), basis.end(), element);
  if (it == basis.end() || *it != element) return -1;
  return static_cast<int>(it - basis.begin());
}

PureState::PureState(Basis basis, Eigen::VectorXcd amplitudes)
    : basis_(std::move(basis)), amplitudes_(std::move(amplitudes)) {
  canonicalize(basis_, amplitudes_);
  const double norm2 = amplitudes_.squaredNorm();
  if (std::abs(norm2 - 1.0) > kNormTol) {
    throw std::invalid_argument("state norm^2 = " + std::to_string(norm2) + ", expected 1");
  }
}

PureState PureState::normalized(Basis basis, Eigen::VectorXcd amplitudes) {
  const double n = amplitudes.norm();
  if (!(n > 0.0)) throw std::invalid_argument("cannot normalize a zero vector");
  amplitudes /= n;
  return PureState(std::move(basis), std::move(amplitudes));
}

cplx PureState::amplitude(const BasisElement& element) const {
  const int i = basis_index(basis_, element);
  return i < 0 ? cplx{} : amplitudes_[i];
}

DensityMatrix::DensityMatrix(Basis basis, Eigen::MatrixXcd entries, std::nullptr_t)
    : basis_(std::move(basis)), entries_(std::move(entries)) {}

DensityMatrix::DensityMatrix(Basis basis, Eigen::MatrixXcd entries)
    : basis_(std::move(basis)), entries_(std::move(entries)) {
  const auto n = static_cast<Eigen::Index>(basis_.size());
  if (entries_.rows() != n || entries_.cols() != n) {
    throw std::invalid_argument("density matrix shape does not match basis");
  }
  if (!std::is_sorted(basis_.begin(), basis_.end()) ||
      std::adjacent_find(basis_.begin(), basis_.end()) != basis_.end()) {
    throw std::invalid_argument("density matrix basis must be sorted and distinct");
  }
  if ((entries_ - entries_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol) {
    throw std::invalid_argument("density matrix is not Hermitian");
  }
  if (std::abs(entries_.trace() - cplx{1.0}) > kHermitianTol) {
    throw std::invalid_argument("density matrix trace is not 1");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(entries_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kHermitianTol) {
    throw std::invalid_argument("density matrix has a negative eigenvalue " +
                                std::to_string(es.eigenvalues().minCoeff()));
  }
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) {
  return DensityMatrix(psi.basis(), psi.amplitudes() * psi.amplitudes().adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(Basis basis) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  std::sort(basis.begin(), basis.end());
  return DensityMatrix(std::move(basis), Eigen::MatrixXcd::Identity(n, n) / static_cast<double>(n));
}

DensityMatrix DensityMatrix::permuted(const Basis& renamed, const Eigen::MatrixXcd& entries) {
  std::vector<std::size_t> order(renamed.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return renamed[a] < renamed[b]; });
  Basis basis;
  const auto n = static_cast<Eigen::Index>(renamed.size());
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    basis.push_back(renamed[order[i]]);
    for (Eigen::Index j = 0; j < n; ++j) {
      m(i, j) = entries(static_cast<Eigen::Index>(order[i]), static_cast<Eigen::Index>(order[j]));
    }
  }
  return DensityMatrix(std::move(basis), std::move(m));
}

PureState maximally_entangled(std::span<const ModeLabel> photons,
                              std::span<const ModeLabel> atoms, std::span<const double> phases) {
  if (photons.size() != atoms.size() || photons.size() != phases.size() || photons.size() < 2) {
    throw std::invalid_argument("need matching photon/atom/phase lists of length >= 2");
  }
  Basis basis = product_basis(photons, atoms);
  Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()));
  const double a = 1.0 / std::sqrt(static_cast<double>(photons.size()));
  for (std::size_t k = 0; k < photons.size(); ++k) {
    const int i = basis_index(basis, {{photons[k], atoms[k]}});
    amps[i] = std::polar(a, phases[k]);
  }
  return PureState(std::move(basis), std::move(amps));
}

PureState make_bell_pair(std::span<const ModeLabel> photons, std::span<const ModeLabel> atoms,
                         double relative_phase) {
  if (photons.size() != 2 || atoms.size() != 2) {
    throw std::invalid_argument("Bell pair needs exactly two photon and two atom modes");
  }
  std::vector<std::pair<ModeLabel, ModeLabel>> pairs{{photons[0], atoms[0]}, {photons[1], atoms[1]}};
  std::sort(pairs.begin(), pairs.end());
  const ModeLabel p[2] = {pairs[0].first, pairs[1].first};
  const ModeLabel a[2] = {pairs[0].second, pairs[1].second};
  const double phases[2] = {0.0, relative_phase};
  return maximally_entangled(p, a, phases);
}

PureState make_qudit_pair(std::span<const ModeLabel> photons, std::span<const ModeLabel> atoms,
                          std::span<const double> phases) {
  if (photons.size() != 4 || atoms.size() != 4 || phases.size() != 4) {
    throw std::invalid_argument("qudit pair needs exactly four photon/atom/phase entries");
  }
  return maximally_entangled(photons, atoms, phases);
}

PureState w_state(int d) {
  if (d < 2) throw std::invalid_argument("W state needs d >= 2");
  std::vector<ModeLabel> modes;
  for (int i = 0; i < d; ++i) modes.push_back(ModeLabel::timebin(i));
  return w_state(modes);
}

PureState w_state(std::span<const ModeLabel> modes) {
  if (modes.size() < 2) throw std::invalid_argument("W state needs d >= 2");
  Basis basis = single_mode_basis(modes);
  const auto d = static_cast<Eigen::Index>(basis.size());
  return PureState(std::move(basis),
                   Eigen::VectorXcd::Constant(d, cplx{1.0 / std::sqrt(static_cast<double>(d))}));
}

PureState apply_mode_phase(const PureState& state, const ModeLabel& mode, double phase) {
  const auto& basis = state.basis();
  const bool present = std::any_of(basis.begin(), basis.end(),
                                   [&](const BasisElement& e) { return e.contains(mode); });
  if (!present) throw std::invalid_argument("mode " + to_string(mode) + " not in basis");
  Eigen::VectorXcd amps = state.amplitudes();
  const cplx factor = std::polar(1.0, phase);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (basis[i].contains(mode)) amps[static_cast<Eigen::Index>(i)] *= factor;
  }
  return PureState(basis, std::move(amps));
}

cplx inner_product(const PureState& a, const PureState& b) {
  if (a.basis() != b.basis()) throw std::invalid_argument("inner product: basis mismatch");
  return a.amplitudes().dot(b.amplitudes());
}

double fidelity(const DensityMatrix& rho, const PureState& target) {
  if (rho.basis() != target.basis()) throw std::invalid_argument("fidelity: basis mismatch");
  const cplx f = target.amplitudes().dot(rho.matrix() * target.amplitudes());
  return std::clamp(f.real(), 0.0, 1.0);
}

// Eigenvalues below this fraction of the largest are rounding noise.
constexpr double kSpectralFloor = 1e-12;

Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  Eigen::VectorXd lambda = es.eigenvalues();
  const double floor = kSpectralFloor * std::max(lambda.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::VectorXd roots = lambda.unaryExpr([&](double v) { return v > floor ? std::sqrt(v) : 0.0; });
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().adjoint();
}

double state_fidelity(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  if (rho1.basis() != rho2.basis()) throw std::invalid_argument("state fidelity: basis mismatch");
  const Eigen::MatrixXcd s = psd_sqrt(rho1.matrix());
  Eigen::MatrixXcd inner = s * rho2.matrix() * s;
  inner = (inner + inner.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(inner, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& lambda = es.eigenvalues();
  const double floor = kSpectralFloor * std::max(lambda.cwiseAbs().maxCoeff(), 1e-300);
  double tr = 0.0;
  for (double v : lambda) tr += v > floor ? std::sqrt(v) : 0.0;
  return std::clamp(tr * tr, 0.0, 1.0);
}

std::string to_json(const PureState& state) {
  nlohmann::ordered_json doc;
  doc["basis"] = nlohmann::ordered_json::array();
  for (const auto& e : state.basis()) {
    auto labels = nlohmann::ordered_json::array();
    for (const auto& m : e.modes) labels.push_back(to_string(m));
    doc["basis"].push_back(labels);
  }
  std::vector<double> re, im;
  for (const auto& a : state.amplitudes()) {
    re.push_back(a.real());
    im.push_back(a.imag());
  }
  doc["re"] = re;
  doc["im"] = im;
  return doc.dump();
}

PureState pure_state_from_json(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  Basis basis;
  for (const auto& e : doc.at("basis")) {
    BasisElement element;
    for (const auto& m : e) element.modes.push_back(parse_mode_label(m.get<std::string>()));
    basis.push_back(std::move(element));
  }
  const auto re = doc.at("re").get<std::vector<double>>();
  const auto im = doc.at("im").get<std::vector<double>>();
  if (re.size() != im.size()) throw std::invalid_argument("re/im length mismatch");
  Eigen::VectorXcd amps(static_cast<Eigen::Index>(re.size()));
  for (std::size_t i = 0; i < re.size(); ++i) amps[static_cast<Eigen::Index>(i)] = {re[i], im[i]};
  return PureState(std::move(basis), std::move(amps));
}

}  // namespace maqm
