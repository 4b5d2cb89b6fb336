#include "maqm/schedule.hpp"

#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"

using namespace maqm;
using maqm::testing::kPi;

namespace {

bool has_kind(const std::vector<Violation>& vs, ViolationKind kind) {
  for (const auto& v : vs) {
    if (v.kind == kind && v.severity == Severity::error) return true;
  }
  return false;
}

std::vector<double> starts(const Schedule& s, Channel channel) {
  std::vector<double> out;
  for (const auto& e : s.events) {
    if (e.channel == channel) out.push_back(e.t_start_us);
  }
  return out;
}

Schedule compile_default(const ProtocolConfig& cfg) {
  return compile(cfg, ScheduleConstraints::from_specs(cfg.maqm1, cfg.maqm2));
}

}  // namespace

TEST(CellToRf, PaperGrid) {
  const auto m1 = maqm1_default();
  const auto m2 = maqm2_default();
  auto [x0, y0] = cell_to_rf(m1, {MemoryId::maqm1, 0, 0});
  EXPECT_DOUBLE_EQ(x0, 97.0);
  EXPECT_DOUBLE_EQ(y0, 95.5);
  auto [x1, y1] = cell_to_rf(m1, {MemoryId::maqm1, 2, 3});
  EXPECT_DOUBLE_EQ(x1, 100.0);
  EXPECT_DOUBLE_EQ(y1, 100.0);
  auto [x2, y2] = cell_to_rf(m2, {MemoryId::maqm2, 0, 0});
  EXPECT_DOUBLE_EQ(x2, 101.1);
  EXPECT_DOUBLE_EQ(y2, 99.0);
  EXPECT_THROW(cell_to_rf(m1, {MemoryId::maqm1, 5, 0}), std::out_of_range);
}

TEST(CellToRf, InjectiveAndInsideSpan) {
  for (const auto& spec : {maqm1_default(), maqm2_default()}) {
    std::set<std::pair<double, double>> seen;
    for (int x = 0; x < spec.n_x; ++x) {
      for (int y = 0; y < spec.n_y; ++y) {
        const auto f = cell_to_rf(spec, {spec.id, x, y});
        EXPECT_TRUE(seen.insert(f).second);
        EXPECT_GE(f.first, spec.rf.x.origin_mhz - 1e-9);
        EXPECT_LE(f.first, spec.rf.x.origin_mhz + spec.rf.x.step_mhz * (spec.n_x - 1) + 1e-9);
        EXPECT_GE(f.second, spec.rf.y.origin_mhz - 1e-9);
        EXPECT_LE(f.second, spec.rf.y.origin_mhz + spec.rf.y.step_mhz * (spec.n_y - 1) + 1e-9);
      }
    }
    EXPECT_EQ(seen.size(), 30u);
  }
}

TEST(SuperpositionRf, SingleCell) {
  const auto m1 = maqm1_default();
  const auto axes = superposition_rf(m1, {{MemoryId::maqm1, 1, 2}}, {cplx(1.0)});
  ASSERT_EQ(axes.size(), 2u);
  for (const auto& a : axes) {
    ASSERT_EQ(a.tones.size(), 1u);
    EXPECT_DOUBLE_EQ(a.tones[0].amp, 1.0);
    EXPECT_DOUBLE_EQ(a.tones[0].phase_rad, 0.0);
  }
}

TEST(SuperpositionRf, EqualAndQuadratureBases) {
  const auto m1 = maqm1_default();
  const std::vector<CellAddress> pair{{MemoryId::maqm1, 0, 1}, {MemoryId::maqm1, 0, 2}};
  const double r = 1.0 / std::sqrt(2.0);
  auto tones_on_y = [&](const std::vector<AxisSetting>& axes) {
    for (const auto& a : axes) {
      if (a.axis == Axis::maqm1_y) return a.tones;
    }
    return std::vector<Tone>{};
  };
  const auto plus = tones_on_y(superposition_rf(m1, pair, {cplx(r), cplx(r)}));
  ASSERT_EQ(plus.size(), 2u);
  EXPECT_NEAR(plus[0].amp, plus[1].amp, 1e-12);
  EXPECT_NEAR(plus[1].phase_rad - plus[0].phase_rad, 0.0, 1e-12);
  const auto quad = tones_on_y(superposition_rf(m1, pair, {cplx(r), cplx(0.0, -r)}));
  ASSERT_EQ(quad.size(), 2u);
  EXPECT_NEAR(quad[1].phase_rad - quad[0].phase_rad, -kPi / 2, 1e-12);
  EXPECT_THROW(superposition_rf(m1, pair, {cplx(1.0), cplx(1.0)}), std::invalid_argument);
}

TEST(Compile, QubitPaperTiming) {
  const auto cfg = ProtocolConfig::qubit_defaults();
  const auto s = compile_default(cfg);
  EXPECT_TRUE(s.valid());
  EXPECT_TRUE(s.violations.empty());
  EXPECT_EQ(starts(s, Channel::read), (std::vector<double>{15.6, 23.4}));
  const auto finals = starts(s, Channel::coupling_final);
  ASSERT_FALSE(finals.empty());
  EXPECT_NEAR(finals[0], 23.4 + 7.8, 1e-12);
  for (const auto& e : s.events) {
    switch (e.channel) {
      case Channel::write: EXPECT_DOUBLE_EQ(e.duration_us, 0.1); break;
      case Channel::read: EXPECT_DOUBLE_EQ(e.duration_us, 0.5); break;
      case Channel::coupling: EXPECT_DOUBLE_EQ(e.duration_us, 0.7); break;
      case Channel::coupling_final: EXPECT_DOUBLE_EQ(e.duration_us, 1.0); break;
      default: break;
    }
  }
}

TEST(Compile, QuditPaperTiming) {
  const auto s = compile_default(ProtocolConfig::qudit_defaults());
  EXPECT_TRUE(s.valid());
  std::set<double> reads;
  for (double t : starts(s, Channel::read)) reads.insert(t);
  EXPECT_EQ(reads, (std::set<double>{11.7, 15.6, 19.5, 23.4}));
}

TEST(Compile, EventsSortedByStart) {
  const auto s = compile_default(ProtocolConfig::qudit_defaults());
  for (std::size_t i = 1; i < s.events.size(); ++i) {
    EXPECT_LE(s.events[i - 1].t_start_us, s.events[i].t_start_us);
  }
}

TEST(Compile, ShortTauViolatesSwitchTime) {
  auto cfg = ProtocolConfig::qubit_defaults();
  cfg.tau_us = 1.0;
  const auto s = compile_default(cfg);
  EXPECT_FALSE(s.valid());
  EXPECT_TRUE(has_kind(s.violations, ViolationKind::switch_time));
}

TEST(Validate, LarmorMisalignment) {
  auto cfg = ProtocolConfig::qubit_defaults();
  cfg.t1_us = 16.0;
  const auto s = compile_default(cfg);
  EXPECT_TRUE(has_kind(s.violations, ViolationKind::larmor_alignment));
}

TEST(Validate, MaqmTwoLarmorMisalignment) {
  auto cfg = ProtocolConfig::qubit_defaults();
  cfg.t2_us = 8.5;
  EXPECT_TRUE(has_kind(compile_default(cfg).violations, ViolationKind::larmor_alignment));
}

TEST(Validate, OverlappingCouplingPulses) {
  auto s = compile_default(ProtocolConfig::qubit_defaults());
  PulseEvent extra;
  for (const auto& e : s.events) {
    if (e.channel == Channel::coupling) {
      extra = e;
      break;
    }
  }
  extra.t_start_us += 0.3;
  s.events.push_back(extra);
  const auto cfg = ProtocolConfig::qubit_defaults();
  EXPECT_TRUE(has_kind(validate(s, ScheduleConstraints::from_specs(cfg.maqm1, cfg.maqm2)), ViolationKind::overlap));
}

TEST(Validate, LongDwellWarnsThenErrors) {
  auto cfg = ProtocolConfig::qubit_defaults();
  cfg.t1_us = 9 * 7.8;  // 70.2 us dwell at the last bin plus tau: beyond one memory time
  auto s = compile_default(cfg);
  bool warned = false;
  for (const auto& v : s.violations) warned |= v.kind == ViolationKind::memory_time && v.severity == Severity::warning;
  EXPECT_TRUE(warned);
  EXPECT_TRUE(s.valid());
  cfg.t1_us = 17 * 7.8;
  EXPECT_TRUE(has_kind(compile_default(cfg).violations, ViolationKind::memory_time));
}

TEST(Validate, ToneOutsideSpan) {
  const auto cfg = ProtocolConfig::qubit_defaults();
  auto s = compile_default(cfg);
  s.events.front().aod.front().tones.front().f_mhz = 150.0;
  EXPECT_TRUE(has_kind(validate(s, ScheduleConstraints::from_specs(cfg.maqm1, cfg.maqm2)), ViolationKind::rf_range));
}

TEST(Jsonl, DeterministicAndRoundTrips) {
  for (const auto& cfg : {ProtocolConfig::qubit_defaults(), ProtocolConfig::qudit_defaults()}) {
    const auto a = emit_jsonl(compile_default(cfg));
    const auto b = emit_jsonl(compile_default(cfg));
    EXPECT_EQ(a, b);
    EXPECT_EQ(emit_jsonl(parse_jsonl(a)), a);
  }
}

TEST(Jsonl, RejectsMalformedLines) {
  EXPECT_THROW(parse_jsonl("{\"t_start_us\": 1}\n"), std::invalid_argument);
  EXPECT_THROW(parse_jsonl("not json\n"), std::invalid_argument);
}

TEST(Jsonl, NamesRoundTrip) {
  for (auto c : {Channel::write, Channel::clean, Channel::read, Channel::coupling, Channel::coupling_final,
                 Channel::retune}) {
    EXPECT_EQ(parse_channel(to_string(c)), c);
  }
  for (auto a : {Axis::maqm1_x, Axis::maqm1_y, Axis::maqm2_x, Axis::maqm2_y}) EXPECT_EQ(parse_axis(to_string(a)), a);
}

TEST(CrossModule, ScheduledTimesGiveFullLarmorRevival) {
  const auto cfg = ProtocolConfig::qubit_defaults();
  const auto s = compile_default(cfg);
  ASSERT_TRUE(s.valid());
  const auto finals = starts(s, Channel::coupling_final);
  for (double t_read : starts(s, Channel::read)) {
    // Survival at every scheduled storage time equals the bare decay envelope.
    EXPECT_NEAR(survival(cfg.maqm1, t_read), std::exp(-std::pow(t_read / cfg.maqm1.tau_mem_us, 2)), 1e-9);
    const double t_eit = finals[0] - t_read;
    EXPECT_NEAR(survival(cfg.maqm2, t_eit), std::exp(-std::pow(t_eit / cfg.maqm2.tau_mem_us, 2)), 1e-9);
  }
}

TEST(Golden, MatchesShippedSchedules) {
  // Goldens are compiled from the shipped default configs; timing comes from the defaults.
  EXPECT_EQ(emit_jsonl(compile_default(ProtocolConfig::qubit_defaults())),
            maqm::testing::slurp(std::string(MAQM_GOLDEN_DIR) + "/qubit_schedule.jsonl"));
  EXPECT_EQ(emit_jsonl(compile_default(ProtocolConfig::qudit_defaults())),
            maqm::testing::slurp(std::string(MAQM_GOLDEN_DIR) + "/qudit_schedule.jsonl"));
}
