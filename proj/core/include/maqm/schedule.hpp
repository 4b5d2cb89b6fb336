#pragma once

// Pulse-sequence compiler: protocol timing -> timed control events with AOD
// tone settings, plus a validator for the hardware timing rules.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "maqm/memory.hpp"
#include "maqm/protocol.hpp"
#include "maqm/qstate.hpp"

namespace maqm {

enum class Channel { write, clean, read, coupling, coupling_final, retune };
enum class Axis { maqm1_x, maqm1_y, maqm2_x, maqm2_y };

std::string to_string(Channel channel);
std::string to_string(Axis axis);
Channel parse_channel(std::string_view text);
Axis parse_axis(std::string_view text);

namespace pulse {
inline constexpr double kWriteUs = 0.1;
inline constexpr double kCleanUs = 0.5;
inline constexpr double kReadUs = 0.5;
inline constexpr double kCouplingUs = 0.7;
inline constexpr double kCouplingFinalUs = 1.0;
}  // namespace pulse

struct Tone {
  double f_mhz = 0.0;
  double amp = 0.0;
  double phase_rad = 0.0;
};

struct AxisSetting {
  Axis axis = Axis::maqm1_x;
  std::vector<Tone> tones;
};

struct PulseEvent {
  double t_start_us = 0.0;
  double duration_us = 0.0;
  Channel channel = Channel::write;
  std::vector<AxisSetting> aod;

  double t_end_us() const { return t_start_us + duration_us; }
};

struct ScheduleConstraints {
  double aod_switch_time_us = 2.0;
  double larmor_us[2] = {7.8, 1.3};
  double memory_time_us[2] = {65.0, 27.8};
  double min_guard_us = 0.1;
  /// Larmor alignment tolerance as a fraction of one period.
  double larmor_tolerance = 0.01;
  /// Allowed tone range per axis, [lo, hi] MHz, indexed by Axis.
  std::pair<double, double> rf_span[4] = {{0, 1e9}, {0, 1e9}, {0, 1e9}, {0, 1e9}};

  /// Larmor periods, memory times and RF spans taken from the two memories.
  static ScheduleConstraints from_specs(const MemorySpec& maqm1, const MemorySpec& maqm2);
};

enum class ViolationKind { larmor_alignment, switch_time, memory_time, overlap, rf_range, structure };
enum class Severity { error, warning };

struct Violation {
  ViolationKind kind = ViolationKind::structure;
  Severity severity = Severity::error;
  std::string message;
};

std::string to_string(ViolationKind kind);

struct Schedule {
  std::vector<PulseEvent> events;  // sorted by t_start, then channel
  std::vector<Violation> violations;

  /// No error-severity violations (warnings allowed).
  bool valid() const;
};

/// AOD tone frequencies (f_x, f_y) addressing `cell`: origin + step * index.
std::pair<double, double> cell_to_rf(const MemorySpec& spec, const CellAddress& cell);

/// Multi-tone setting addressing the superposition sum_k weights[k] |cells[k]>
/// through crossed AODs. The weight pattern must factor into an X profile times
/// a Y profile (the only patterns crossed deflectors can produce); each distinct
/// column/row gets one tone, amplitude proportional to |weight| with the largest
/// tone at 1, phase = arg. Weights must be unit-norm within 1e-9.
std::vector<AxisSetting> superposition_rf(const MemorySpec& spec, const std::vector<CellAddress>& cells,
                                          const std::vector<cplx>& weights);

/// Always completes; violations are reported in the returned schedule.
Schedule compile(const ProtocolConfig& cfg, const ScheduleConstraints& constraints);

/// Checks a schedule against the timing rules:
///  - t1 and every bin interval are multiples of the MAQM1 Larmor period,
///    t2 of the MAQM2 period (within larmor_tolerance of a period),
///  - bin interval >= AOD switch time + read duration,
///  - MAQM1 dwell of the last bin <= 2 memory times (warning beyond 1),
///  - no overlap (or gap below min_guard) between events on one channel,
///  - all tones inside the configured RF spans.
std::vector<Violation> validate(const Schedule& schedule, const ScheduleConstraints& constraints);

/// JSON Lines, one line per (event, axis):
/// {"t_start_us":..,"duration_us":..,"channel":..,"axis":..,"tones":[{"f_mhz":..,"amp":..,"phase_rad":..}]}
/// Numbers carry 6 significant digits.
std::string emit_jsonl(const Schedule& schedule);
/// Groups consecutive lines with equal (t_start, duration, channel) back into events.
Schedule parse_jsonl(std::string_view text);

}  // namespace maqm
