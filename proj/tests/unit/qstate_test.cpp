#include "maqm/qstate.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace maqm;
using maqm::testing::kPi;

namespace {

const CellAddress kU1{MemoryId::maqm1, 0, 1}, kD1{MemoryId::maqm1, 0, 2};
const ModeLabel kPhotons[] = {ModeLabel::signal(kU1), ModeLabel::signal(kD1)};
const ModeLabel kAtoms[] = {ModeLabel::atom1(kU1), ModeLabel::atom1(kD1)};

Eigen::MatrixXcd outer(const Eigen::VectorXcd& v) { return v * v.adjoint(); }

}  // namespace

TEST(ModeLabel, RoundTripsThroughText) {
  for (const auto& label : {ModeLabel::signal(kU1), ModeLabel::atom1(kD1),
                            ModeLabel::atom2({MemoryId::maqm2, 4, 5}), ModeLabel::timebin(3)}) {
    EXPECT_EQ(parse_mode_label(to_string(label)), label);
  }
  EXPECT_EQ(to_string(ModeLabel::signal(kU1)), "s(0,1)");
  EXPECT_THROW(parse_mode_label("q(1,2)"), std::invalid_argument);
}

TEST(ModeLabel, OrdersByKindThenXThenY) {
  EXPECT_LT(ModeLabel::signal({MemoryId::maqm1, 4, 4}), ModeLabel::atom1({MemoryId::maqm1, 0, 0}));
  EXPECT_LT(ModeLabel::atom1({MemoryId::maqm1, 0, 5}), ModeLabel::atom1({MemoryId::maqm1, 1, 0}));
  EXPECT_LT(ModeLabel::atom1({MemoryId::maqm1, 1, 0}), ModeLabel::atom1({MemoryId::maqm1, 1, 1}));
}

TEST(BellPair, ZeroPhase) {
  const auto psi = make_bell_pair(kPhotons, kAtoms, 0.0);
  const double r = 1.0 / std::sqrt(2.0);
  ASSERT_EQ(psi.dimension(), 4);
  EXPECT_NEAR(std::abs(psi.amplitudes()[0] - r), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(psi.amplitudes()[1]), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(psi.amplitudes()[2]), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(psi.amplitudes()[3] - r), 0.0, 1e-15);
  EXPECT_TRUE(psi.basis()[0].contains(ModeLabel::signal(kU1)));
  EXPECT_TRUE(psi.basis()[0].contains(ModeLabel::atom1(kU1)));
}

TEST(BellPair, PiPhaseFlipsSign) {
  const auto psi = make_bell_pair(kPhotons, kAtoms, kPi);
  EXPECT_NEAR(std::abs(psi.amplitudes()[3] + 1.0 / std::sqrt(2.0)), 0.0, 1e-15);
}

TEST(BellPair, HalfPiPhaseIsImaginary) {
  const auto psi = make_bell_pair(kPhotons, kAtoms, kPi / 2);
  EXPECT_NEAR(std::abs(psi.amplitudes()[3] - cplx(0.0, 1.0 / std::sqrt(2.0))), 0.0, 1e-15);
  EXPECT_NEAR(psi.amplitudes().squaredNorm(), 1.0, 1e-12);
}

TEST(BellPair, RejectsDuplicateLabels) {
  const ModeLabel dup[] = {ModeLabel::signal(kU1), ModeLabel::signal(kU1)};
  EXPECT_THROW(make_bell_pair(dup, kAtoms, 0.0), std::invalid_argument);
}

TEST(QuditPair, ZeroPhases) {
  std::vector<ModeLabel> p, a;
  for (int i = 0; i < 4; ++i) {
    const CellAddress c{MemoryId::maqm1, i / 2 + 1, i % 2 + 3};
    p.push_back(ModeLabel::signal(c));
    a.push_back(ModeLabel::atom1(c));
  }
  const double zeros[] = {0, 0, 0, 0};
  const auto psi = make_qudit_pair(p, a, zeros);
  ASSERT_EQ(psi.dimension(), 16);
  int nonzero = 0;
  for (int i = 0; i < 16; ++i) {
    const auto amp = psi.amplitudes()[i];
    if (std::abs(amp) > 1e-15) {
      ++nonzero;
      EXPECT_NEAR(std::abs(amp - 0.5), 0.0, 1e-15);
    }
  }
  EXPECT_EQ(nonzero, 4);

  const double flip[] = {0, 0, 0, kPi};
  const auto phi = make_qudit_pair(p, a, flip);
  EXPECT_NEAR(std::abs(phi.amplitude({{p[3], a[3]}}) + 0.5), 0.0, 1e-15);
  EXPECT_NEAR(phi.amplitudes().squaredNorm(), 1.0, 1e-12);

  const double three[] = {0, 0, 0};
  EXPECT_THROW(make_qudit_pair(std::span(p).first(3), std::span(a).first(3), three), std::invalid_argument);
}

TEST(WState, UniformAmplitudes) {
  for (int d : {2, 4}) {
    const auto w = w_state(d);
    for (int i = 0; i < d; ++i) EXPECT_NEAR(std::abs(w.amplitudes()[i] - 1.0 / std::sqrt(d)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(inner_product(w, w) - 1.0), 0.0, 1e-15);
  }
  EXPECT_THROW(w_state(1), std::invalid_argument);
}

TEST(ModePhase, IdentityInverseAndComposition) {
  const auto psi = make_bell_pair(kPhotons, kAtoms, 0.3);
  const auto mode = ModeLabel::atom1(kU1);
  EXPECT_TRUE(apply_mode_phase(psi, mode, 0.0).amplitudes().isApprox(psi.amplitudes(), 1e-15));
  const auto back = apply_mode_phase(apply_mode_phase(psi, mode, 1.1), mode, -1.1);
  EXPECT_LT((back.amplitudes() - psi.amplitudes()).norm(), 1e-12);
  const auto two_step = apply_mode_phase(apply_mode_phase(psi, mode, 0.4), mode, 0.9);
  const auto one_step = apply_mode_phase(psi, mode, 1.3);
  EXPECT_LT((two_step.amplitudes() - one_step.amplitudes()).norm(), 1e-12);
  EXPECT_THROW(apply_mode_phase(psi, ModeLabel::timebin(0), 1.0), std::invalid_argument);
}

TEST(ModePhase, ReadCouplingCoefficientOnUuTerm) {
  const double alpha = 0.7, beta = 0.2;
  const auto psi = make_bell_pair(kPhotons, kAtoms, 0.0);
  const auto moved = apply_mode_phase(psi, ModeLabel::atom1(kU1), alpha - beta);
  const cplx expected = std::polar(1.0 / std::sqrt(2.0), alpha - beta);
  EXPECT_NEAR(std::abs(moved.amplitudes()[0] - expected), 0.0, 1e-15);
  EXPECT_NEAR(moved.amplitudes().squaredNorm(), 1.0, 1e-12);
}

TEST(Fidelity, PureSelfIsOne) {
  const auto psi = make_bell_pair(kPhotons, kAtoms, 0.0);
  EXPECT_NEAR(fidelity(DensityMatrix::from_pure(psi), psi), 1.0, 1e-12);
}

TEST(Fidelity, MaximallyMixedIsQuarter) {
  const auto psi = make_bell_pair(kPhotons, kAtoms, 0.0);
  EXPECT_NEAR(fidelity(DensityMatrix::maximally_mixed(psi.basis()), psi), 0.25, 1e-12);
}

TEST(Fidelity, UnbalancedBranchesMatchClosedForm) {
  const auto bell = make_bell_pair(kPhotons, kAtoms, 0.0);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
  v[0] = std::sqrt(0.8);
  v[3] = std::sqrt(0.2);
  // Brute-force outer product and explicit <Bell|rho|Bell>.
  const Eigen::MatrixXcd rho = outer(v);
  const double brute = (bell.amplitudes().adjoint() * rho * bell.amplitudes())(0, 0).real();
  const double f = fidelity(DensityMatrix(bell.basis(), rho), bell);
  EXPECT_NEAR(f, brute, 1e-12);
  EXPECT_NEAR(f, maqm::testing::two_branch_fidelity(0.8, 0.2), 1e-12);
  EXPECT_NEAR(f, 0.9, 1e-12);
}

TEST(Fidelity, RejectsBasisMismatch) {
  const auto bell = make_bell_pair(kPhotons, kAtoms, 0.0);
  const ModeLabel other[] = {ModeLabel::atom2({MemoryId::maqm2, 0, 0}), ModeLabel::atom2({MemoryId::maqm2, 0, 1})};
  const auto moved = make_bell_pair(kPhotons, other, 0.0);
  EXPECT_THROW(fidelity(DensityMatrix::from_pure(moved), bell), std::invalid_argument);
}

TEST(StateFidelity, Basics) {
  const auto bell = make_bell_pair(kPhotons, kAtoms, 0.0);
  const auto rho = DensityMatrix::from_pure(bell);
  EXPECT_NEAR(state_fidelity(rho, rho), 1.0, 1e-8);
  const auto flipped = DensityMatrix::from_pure(make_bell_pair(kPhotons, kAtoms, kPi));
  EXPECT_NEAR(state_fidelity(rho, flipped), 0.0, 1e-8);
  EXPECT_NEAR(state_fidelity(rho, DensityMatrix::maximally_mixed(bell.basis())), 0.25, 1e-8);
}

TEST(DensityMatrix, RejectsNonPhysical) {
  const auto basis = make_bell_pair(kPhotons, kAtoms, 0.0).basis();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(4, 4) / 4.0;
  m(0, 1) = 0.1;  // not Hermitian
  EXPECT_THROW(DensityMatrix(basis, m), std::invalid_argument);
  Eigen::MatrixXcd neg = Eigen::MatrixXcd::Zero(4, 4);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  EXPECT_THROW(DensityMatrix(basis, neg), std::invalid_argument);
  EXPECT_THROW(DensityMatrix(basis, Eigen::MatrixXcd::Identity(4, 4)), std::invalid_argument);
}

TEST(PureState, RejectsBadNorm) {
  const auto basis = make_bell_pair(kPhotons, kAtoms, 0.0).basis();
  EXPECT_THROW(PureState(basis, Eigen::VectorXcd::Ones(4)), std::invalid_argument);
  EXPECT_NO_THROW(PureState::normalized(basis, Eigen::VectorXcd::Ones(4)));
}

TEST(Properties, FidelityEqualsStateFidelityOfProjector) {
  std::mt19937_64 rng(11);
  const auto basis = make_bell_pair(kPhotons, kAtoms, 0.0).basis();
  for (int trial = 0; trial < 100; ++trial) {
    const DensityMatrix rho(basis, maqm::testing::random_density(4, rng));
    const PureState psi(basis, maqm::testing::random_vector(4, rng));
    EXPECT_NEAR(fidelity(rho, psi), state_fidelity(rho, DensityMatrix::from_pure(psi)), 1e-8);
  }
}

TEST(Properties, StateFidelitySymmetric) {
  std::mt19937_64 rng(12);
  const auto basis = make_bell_pair(kPhotons, kAtoms, 0.0).basis();
  for (int trial = 0; trial < 50; ++trial) {
    const DensityMatrix a(basis, maqm::testing::random_density(4, rng));
    const DensityMatrix b(basis, maqm::testing::random_density(4, rng));
    const double fab = state_fidelity(a, b);
    EXPECT_NEAR(fab, state_fidelity(b, a), 1e-8);
    EXPECT_GE(fab, 0.0);
    EXPECT_LE(fab, 1.0);
  }
}

TEST(Properties, JsonRoundTripKeepsOrder) {
  std::mt19937_64 rng(13);
  const auto basis = make_bell_pair(kPhotons, kAtoms, 0.0).basis();
  for (int trial = 0; trial < 20; ++trial) {
    const PureState psi(basis, maqm::testing::random_vector(4, rng));
    const auto text = to_json(psi);
    const auto back = pure_state_from_json(text);
    EXPECT_EQ(back.basis(), psi.basis());
    EXPECT_LT((back.amplitudes() - psi.amplitudes()).norm(), 1e-15);
    EXPECT_EQ(to_json(back), text);
  }
}

TEST(Properties, RelabelPermutesConsistently) {
  const auto bell = make_bell_pair(kPhotons, kAtoms, 0.4);
  const auto rho = DensityMatrix::from_pure(bell);
  // Swap the two atom labels; the state becomes |U D'> + e^{i phi}|D U'>.
  const auto swapped = rho.relabeled([](const ModeLabel& m) {
    if (m == ModeLabel::atom1(kU1)) return ModeLabel::atom1(kD1);
    if (m == ModeLabel::atom1(kD1)) return ModeLabel::atom1(kU1);
    return m;
  });
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
  v[1] = 1.0 / std::sqrt(2.0);
  v[2] = std::polar(1.0 / std::sqrt(2.0), 0.4);
  EXPECT_NEAR(fidelity(swapped, PureState(bell.basis(), v)), 1.0, 1e-12);
}
