#pragma once

// Finite-dimensional state algebra over labeled modes.
//
// A basis element is a tuple of mode labels (one label for single-mode states
// such as W states, a (photon, atom) pair for photon-atom states). Bases are
// always kept in lexicographic order of (kind, x, y, bin) so that amplitude
// vectors serialize and compare reproducibly.

#include <compare>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "maqm/cell.hpp"

namespace maqm {

using cplx = std::complex<double>;

inline constexpr double kNormTol = 1e-12;
inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kDerivedTol = 1e-8;

enum class ModeKind : std::uint8_t { signal = 0, atom1 = 1, atom2 = 2, timebin = 3 };

struct ModeLabel {
  ModeKind kind = ModeKind::signal;
  int x = 0;
  int y = 0;
  int bin = 0;

  static ModeLabel signal(const CellAddress& c) { return {ModeKind::signal, c.x, c.y, 0}; }
  static ModeLabel atom1(const CellAddress& c) { return {ModeKind::atom1, c.x, c.y, 0}; }
  static ModeLabel atom2(const CellAddress& c) { return {ModeKind::atom2, c.x, c.y, 0}; }
  static ModeLabel timebin(int index) { return {ModeKind::timebin, 0, 0, index}; }

  CellAddress cell() const;

  auto operator<=>(const ModeLabel&) const = default;
};

std::string to_string(const ModeLabel& label);
/// Inverse of to_string: "s(1,2)", "a1(0,3)", "a2(4,5)", "t3".
ModeLabel parse_mode_label(const std::string& text);

struct BasisElement {
  std::vector<ModeLabel> modes;

  bool contains(const ModeLabel& mode) const;
  auto operator<=>(const BasisElement&) const = default;
};

using Basis = std::vector<BasisElement>;

/// Sorted product basis {photon ⊗ atom}; index of (i, j) is i * atoms.size() + j
/// with both lists taken in sorted order.
Basis product_basis(std::span<const ModeLabel> photons, std::span<const ModeLabel> atoms);
Basis single_mode_basis(std::span<const ModeLabel> modes);

/// Sorted, distinct list of the modes of `kind` appearing anywhere in `basis`.
std::vector<ModeLabel> modes_of_kind(const Basis& basis, ModeKind kind);

/// Position of `element` in a sorted basis, or -1.
int basis_index(const Basis& basis, const BasisElement& element);

/// Unit-norm amplitude vector over a sorted basis.
class PureState {
 public:
  /// Reorders (basis, amplitudes) into canonical order. Throws
  /// std::invalid_argument on size mismatch, duplicate elements, or a norm
  /// off by more than kNormTol.
  PureState(Basis basis, Eigen::VectorXcd amplitudes);

  /// Same as the constructor but rescales to unit norm first.
  static PureState normalized(Basis basis, Eigen::VectorXcd amplitudes);

  const Basis& basis() const { return basis_; }
  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }
  int dimension() const { return static_cast<int>(basis_.size()); }
  cplx amplitude(const BasisElement& element) const;

 private:
  Basis basis_;
  Eigen::VectorXcd amplitudes_;
};

/// Amplitude vector without the unit-norm invariant: loss-weighted states whose
/// squared norm is a detection probability.
struct WeightedState {
  Basis basis;
  Eigen::VectorXcd amplitudes;

  double norm2() const { return amplitudes.squaredNorm(); }
  PureState normalized() const { return PureState::normalized(basis, amplitudes); }
};

/// Hermitian, positive semidefinite, unit-trace matrix over a sorted basis.
class DensityMatrix {
 public:
  /// Validates Hermiticity and trace within kHermitianTol and eigenvalues
  /// >= -kHermitianTol; throws std::invalid_argument otherwise.
  DensityMatrix(Basis basis, Eigen::MatrixXcd entries);

  static DensityMatrix from_pure(const PureState& psi);
  static DensityMatrix maximally_mixed(Basis basis);

  const Basis& basis() const { return basis_; }
  const Eigen::MatrixXcd& matrix() const { return entries_; }
  int dimension() const { return static_cast<int>(basis_.size()); }

  /// Same matrix expressed over a basis whose modes were renamed by `rename`
  /// (old -> new). Rows and columns are permuted to restore canonical order.
  template <typename F>
  DensityMatrix relabeled(F&& rename) const;

 private:
  DensityMatrix(Basis basis, Eigen::MatrixXcd entries, std::nullptr_t);
  static DensityMatrix permuted(const Basis& renamed, const Eigen::MatrixXcd& entries);

  Basis basis_;
  Eigen::MatrixXcd entries_;
};

// Reference states.

/// (|U>_s|U>_a + e^{i phase}|D>_s|D>_a)/sqrt(2) over the sorted product basis.
/// U is the smaller photon label; the atom mode matched with U is atoms[i]
/// where photons[i] == U.
PureState make_bell_pair(std::span<const ModeLabel> photons, std::span<const ModeLabel> atoms,
                         double relative_phase);

/// (1/2) sum_k e^{i phases[k]} |photons[k]>|atoms[k]>; needs exactly 4 pairs.
PureState make_qudit_pair(std::span<const ModeLabel> photons, std::span<const ModeLabel> atoms,
                          std::span<const double> phases);

/// General d-pair form of the two above: (1/sqrt d) sum_k e^{i phases[k]}
/// |photons[k]>|atoms[k]>.
PureState maximally_entangled(std::span<const ModeLabel> photons,
                              std::span<const ModeLabel> atoms, std::span<const double> phases);

/// Uniform superposition over d time-bin modes.
PureState w_state(int d);
/// Uniform superposition over the given single modes.
PureState w_state(std::span<const ModeLabel> modes);

PureState apply_mode_phase(const PureState& state, const ModeLabel& mode, double phase);

/// Overlap <a|b>; bases must match.
cplx inner_product(const PureState& a, const PureState& b);

/// <target|rho|target>.
double fidelity(const DensityMatrix& rho, const PureState& target);

/// Uhlmann fidelity (tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2.
double state_fidelity(const DensityMatrix& rho1, const DensityMatrix& rho2);

/// Hermitian PSD square root via eigendecomposition (negative eigenvalues
/// clipped to zero).
Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& m);

/// {"basis": [[label, ...], ...], "re": [...], "im": [...]}
std::string to_json(const PureState& state);
PureState pure_state_from_json(const std::string& text);

// -- template implementation --

template <typename F>
DensityMatrix DensityMatrix::relabeled(F&& rename) const {
  Basis renamed = basis_;
  for (auto& element : renamed) {
    for (auto& mode : element.modes) mode = rename(mode);
  }
  return permuted(renamed, entries_);
}

}  // namespace maqm
