#include "maqm/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "maqm/format.hpp"

namespace maqm {

std::string format_sig6(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  std::string s(buf);
  if (s == "-0") s = "0";
  return s;
}

std::string to_string(Channel channel) {
  switch (channel) {
    case Channel::write: return "write";
    case Channel::clean: return "clean";
    case Channel::read: return "read";
    case Channel::coupling: return "coupling";
    case Channel::coupling_final: return "coupling_final";
    case Channel::retune: return "retune";
  }
  return "?";
}

std::string to_string(Axis axis) {
  switch (axis) {
    case Axis::maqm1_x: return "maqm1_x";
    case Axis::maqm1_y: return "maqm1_y";
    case Axis::maqm2_x: return "maqm2_x";
    case Axis::maqm2_y: return "maqm2_y";
  }
  return "?";
}

Channel parse_channel(std::string_view text) {
  for (auto c : {Channel::write, Channel::clean, Channel::read, Channel::coupling,
                 Channel::coupling_final, Channel::retune}) {
    if (to_string(c) == text) return c;
  }
  throw std::invalid_argument("unknown channel '" + std::string(text) + "'");
}

Axis parse_axis(std::string_view text) {
  for (auto a : {Axis::maqm1_x, Axis::maqm1_y, Axis::maqm2_x, Axis::maqm2_y}) {
    if (to_string(a) == text) return a;
  }
  throw std::invalid_argument("unknown axis '" + std::string(text) + "'");
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::larmor_alignment: return "larmor_alignment";
    case ViolationKind::switch_time: return "switch_time";
    case ViolationKind::memory_time: return "memory_time";
    case ViolationKind::overlap: return "overlap";
    case ViolationKind::rf_range: return "rf_range";
    case ViolationKind::structure: return "structure";
  }
  return "?";
}

bool Schedule::valid() const {
  return std::none_of(violations.begin(), violations.end(),
                      [](const Violation& v) { return v.severity == Severity::error; });
}

ScheduleConstraints ScheduleConstraints::from_specs(const MemorySpec& maqm1, const MemorySpec& maqm2) {
  ScheduleConstraints c;
  c.larmor_us[0] = maqm1.t_larmor_us;
  c.larmor_us[1] = maqm2.t_larmor_us;
  c.memory_time_us[0] = maqm1.tau_mem_us;
  c.memory_time_us[1] = maqm2.tau_mem_us;
  auto span = [](const RfAxis& axis, int n) {
    const double a = axis.frequency(0);
    const double b = axis.frequency(n - 1);
    return std::pair{std::min(a, b), std::max(a, b)};
  };
  c.rf_span[0] = span(maqm1.rf.x, maqm1.n_x);
  c.rf_span[1] = span(maqm1.rf.y, maqm1.n_y);
  c.rf_span[2] = span(maqm2.rf.x, maqm2.n_x);
  c.rf_span[3] = span(maqm2.rf.y, maqm2.n_y);
  return c;
}

std::pair<double, double> cell_to_rf(const MemorySpec& spec, const CellAddress& cell) {
  spec.require_cell(cell);
  return {spec.rf.x.frequency(cell.x), spec.rf.y.frequency(cell.y)};
}

namespace {

Axis x_axis(MemoryId id) { return id == MemoryId::maqm1 ? Axis::maqm1_x : Axis::maqm2_x; }
Axis y_axis(MemoryId id) { return id == MemoryId::maqm1 ? Axis::maqm1_y : Axis::maqm2_y; }

double clean_phase(double phase) { return std::abs(phase) < 1e-15 ? 0.0 : phase; }

}  // namespace

std::vector<AxisSetting> superposition_rf(const MemorySpec& spec, const std::vector<CellAddress>& cells,
                                          const std::vector<cplx>& weights) {
  if (cells.empty() || cells.size() != weights.size()) {
    throw std::invalid_argument("superposition_rf: need one weight per cell");
  }
  double norm2 = 0.0;
  for (const auto& w : weights) norm2 += std::norm(w);
  if (std::abs(norm2 - 1.0) > 1e-9) throw std::invalid_argument("superposition_rf: weights are not normalized");
  for (const auto& c : cells) spec.require_cell(c);
  {
    auto sorted = cells;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument("superposition_rf: cells must be distinct");
    }
  }

  std::map<std::pair<int, int>, cplx> pattern;
  std::vector<int> xs, ys;
  std::size_t ref = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    pattern[{cells[i].x, cells[i].y}] = weights[i];
    xs.push_back(cells[i].x);
    ys.push_back(cells[i].y);
    if (std::abs(weights[i]) > std::abs(weights[ref]) + 1e-12) ref = i;
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

  auto weight_at = [&](int x, int y) {
    auto it = pattern.find({x, y});
    return it == pattern.end() ? cplx{} : it->second;
  };
  const int x0 = cells[ref].x;
  const int y0 = cells[ref].y;
  const cplx w0 = weights[ref];
  std::vector<cplx> col, row;
  for (int x : xs) col.push_back(weight_at(x, y0));
  for (int y : ys) row.push_back(weight_at(x0, y) / w0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < ys.size(); ++j) {
      if (std::abs(weight_at(xs[i], ys[j]) - col[i] * row[j]) > 1e-9) {
        throw std::invalid_argument("superposition_rf: weight pattern is not an X x Y product; crossed AODs cannot address it");
      }
    }
  }

  auto tones = [&](const std::vector<int>& idx, const std::vector<cplx>& amps, const RfAxis& axis) {
    double peak = 0.0;
    for (const auto& a : amps) peak = std::max(peak, std::abs(a));
    std::vector<Tone> out;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (std::abs(amps[i]) == 0.0) continue;
      out.push_back({axis.frequency(idx[i]), std::abs(amps[i]) / peak, clean_phase(std::arg(amps[i]))});
    }
    return out;
  };
  return {{x_axis(spec.id), tones(xs, col, spec.rf.x)}, {y_axis(spec.id), tones(ys, row, spec.rf.y)}};
}

Schedule compile(const ProtocolConfig& cfg, const ScheduleConstraints& constraints) {
  Schedule schedule;
  const int d = cfg.dimension;
  auto structure_error = [&](const std::string& what) {
    schedule.violations.push_back({ViolationKind::structure, Severity::error, what});
  };

  // Single-cell addressing of one memory; out-of-grid cells become violations.
  auto address = [&](const MemorySpec& spec, const CellAddress& cell) -> std::vector<AxisSetting> {
    try {
      return superposition_rf(spec, {cell}, {cplx{1.0}});
    } catch (const std::exception& e) {
      structure_error(e.what());
      return {};
    }
  };
  auto address_all = [&](const MemorySpec& spec, const std::vector<CellAddress>& cells) {
    std::vector<cplx> w;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const double phase = k < cfg.relative_phases.size() ? cfg.relative_phases[k] : 0.0;
      w.push_back(std::polar(1.0 / std::sqrt(static_cast<double>(cells.size())), phase));
    }
    try {
      return superposition_rf(spec, cells, w);
    } catch (const std::exception& e) {
      structure_error(e.what());
      return std::vector<AxisSetting>{};
    }
  };
  auto concat = [](std::vector<AxisSetting> a, const std::vector<AxisSetting>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };

  if (cfg.source_cells.size() != static_cast<std::size_t>(d) ||
      cfg.target_cells.size() != static_cast<std::size_t>(d) ||
      cfg.retrieval_order.size() != static_cast<std::size_t>(d)) {
    structure_error("cell lists and retrieval order must have one entry per branch");
    return schedule;
  }

  const double switch_us = constraints.aod_switch_time_us;
  schedule.events.push_back({0.0, pulse::kWriteUs, Channel::write, address_all(cfg.maqm1, cfg.source_cells)});
  for (int slot = 0; slot < d; ++slot) {
    const int k = cfg.retrieval_order[static_cast<std::size_t>(slot)];
    if (k < 0 || k >= d) {
      structure_error("retrieval order entry out of range");
      continue;
    }
    const auto& src = cfg.source_cells[static_cast<std::size_t>(k)];
    const auto& dst = cfg.target_cells[static_cast<std::size_t>(k)];
    const double t = cfg.t1_us + slot * cfg.tau_us;
    const double retune_start = std::max(t - switch_us, pulse::kWriteUs);
    if (t > retune_start) {
      schedule.events.push_back({retune_start, t - retune_start, Channel::retune,
                                 concat(address(cfg.maqm1, src), address(cfg.maqm2, dst))});
    }
    schedule.events.push_back({t, pulse::kReadUs, Channel::read, address(cfg.maqm1, src)});
    schedule.events.push_back({t, pulse::kCouplingUs, Channel::coupling, address(cfg.maqm2, dst)});
  }
  const double t_final = cfg.t1_us + (d - 1) * cfg.tau_us + cfg.t2_us;
  const auto readout = address_all(cfg.maqm2, cfg.target_cells);
  schedule.events.push_back({t_final - switch_us, switch_us, Channel::retune, readout});
  schedule.events.push_back({t_final, pulse::kCouplingFinalUs, Channel::coupling_final, readout});

  std::stable_sort(schedule.events.begin(), schedule.events.end(), [](const PulseEvent& a, const PulseEvent& b) {
    if (a.t_start_us != b.t_start_us) return a.t_start_us < b.t_start_us;
    return a.channel < b.channel;
  });
  auto found = validate(schedule, constraints);
  schedule.violations.insert(schedule.violations.end(), found.begin(), found.end());
  return schedule;
}

std::vector<Violation> validate(const Schedule& schedule, const ScheduleConstraints& c) {
  std::vector<Violation> out;
  auto add = [&](ViolationKind kind, Severity sev, const std::string& msg) { out.push_back({kind, sev, msg}); };
  auto us = [](double v) { return format_sig6(v) + " us"; };

  std::vector<const PulseEvent*> writes, reads, finals;
  for (const auto& e : schedule.events) {
    if (e.channel == Channel::write) writes.push_back(&e);
    if (e.channel == Channel::read) reads.push_back(&e);
    if (e.channel == Channel::coupling_final) finals.push_back(&e);
    if (!(e.duration_us > 0.0)) add(ViolationKind::structure, Severity::error, to_string(e.channel) + " event at " + us(e.t_start_us) + " has non-positive duration");
  }

  auto aligned = [&](double t, double period) {
    const double r = t / period;
    const double n = std::round(r);
    return n >= 1.0 && std::abs(r - n) <= c.larmor_tolerance;
  };

  if (writes.empty() || reads.empty() || finals.empty()) {
    add(ViolationKind::structure, Severity::error, "schedule needs a write pulse, at least one read pulse and a final coupling pulse");
  } else {
    const double t0 = writes.front()->t_start_us;
    const double t1 = reads.front()->t_start_us - t0;
    if (!aligned(t1, c.larmor_us[0])) {
      add(ViolationKind::larmor_alignment, Severity::error,
          "t1 = " + us(t1) + " is not a multiple of the MAQM1 Larmor period " + us(c.larmor_us[0]));
    }
    for (std::size_t m = 1; m < reads.size(); ++m) {
      const double gap = reads[m]->t_start_us - reads[m - 1]->t_start_us;
      if (!aligned(gap, c.larmor_us[0])) {
        add(ViolationKind::larmor_alignment, Severity::error,
            "bin interval " + us(gap) + " is not a multiple of the MAQM1 Larmor period " + us(c.larmor_us[0]));
      }
      const double need = c.aod_switch_time_us + reads[m - 1]->duration_us;
      if (gap < need - 1e-9) {
        add(ViolationKind::switch_time, Severity::error,
            "bin interval " + us(gap) + " is shorter than AOD switch time + read duration (" + us(need) + ")");
      }
    }
    const double t2 = finals.back()->t_start_us - reads.back()->t_start_us;
    if (!aligned(t2, c.larmor_us[1])) {
      add(ViolationKind::larmor_alignment, Severity::error,
          "t2 = " + us(t2) + " is not a multiple of the MAQM2 Larmor period " + us(c.larmor_us[1]));
    }
    const double dwell = reads.back()->t_start_us - t0;
    if (dwell > 2.0 * c.memory_time_us[0]) {
      add(ViolationKind::memory_time, Severity::error,
          "last bin dwells " + us(dwell) + " in MAQM1, beyond twice its memory time " + us(c.memory_time_us[0]));
    } else if (dwell > c.memory_time_us[0]) {
      add(ViolationKind::memory_time, Severity::warning,
          "last bin dwells " + us(dwell) + " in MAQM1, beyond its memory time " + us(c.memory_time_us[0]));
    }
  }

  std::map<Channel, std::vector<const PulseEvent*>> by_channel;
  for (const auto& e : schedule.events) by_channel[e.channel].push_back(&e);
  for (auto& [channel, events] : by_channel) {
    std::stable_sort(events.begin(), events.end(),
                     [](const PulseEvent* a, const PulseEvent* b) { return a->t_start_us < b->t_start_us; });
    for (std::size_t i = 1; i < events.size(); ++i) {
      if (events[i]->t_start_us < events[i - 1]->t_end_us() + c.min_guard_us - 1e-9) {
        add(ViolationKind::overlap, Severity::error,
            to_string(channel) + " events at " + us(events[i - 1]->t_start_us) + " and " +
                us(events[i]->t_start_us) + " overlap or are closer than the guard time");
      }
    }
  }

  for (const auto& e : schedule.events) {
    for (const auto& setting : e.aod) {
      const auto [lo, hi] = c.rf_span[static_cast<int>(setting.axis)];
      for (const auto& tone : setting.tones) {
        if (tone.f_mhz < lo - 1e-9 || tone.f_mhz > hi + 1e-9) {
          add(ViolationKind::rf_range, Severity::error,
              to_string(setting.axis) + " tone " + format_sig6(tone.f_mhz) + " MHz outside [" +
                  format_sig6(lo) + ", " + format_sig6(hi) + "] MHz");
        }
      }
    }
  }
  return out;
}

std::string emit_jsonl(const Schedule& schedule) {
  std::ostringstream os;
  for (const auto& e : schedule.events) {
    for (const auto& setting : e.aod) {
      os << "{\"t_start_us\":" << format_sig6(e.t_start_us) << ",\"duration_us\":" << format_sig6(e.duration_us)
         << ",\"channel\":\"" << to_string(e.channel) << "\",\"axis\":\"" << to_string(setting.axis)
         << "\",\"tones\":[";
      for (std::size_t i = 0; i < setting.tones.size(); ++i) {
        const auto& t = setting.tones[i];
        if (i) os << ',';
        os << "{\"f_mhz\":" << format_sig6(t.f_mhz) << ",\"amp\":" << format_sig6(t.amp)
           << ",\"phase_rad\":" << format_sig6(t.phase_rad) << '}';
      }
      os << "]}\n";
    }
  }
  return os.str();
}

Schedule parse_jsonl(std::string_view text) {
  Schedule schedule;
  std::istringstream is{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    double t = 0.0, dur = 0.0;
    Channel ch{};
    AxisSetting setting;
    try {
      const auto doc = nlohmann::json::parse(line);
      t = doc.at("t_start_us").get<double>();
      dur = doc.at("duration_us").get<double>();
      ch = parse_channel(doc.at("channel").get<std::string>());
      setting.axis = parse_axis(doc.at("axis").get<std::string>());
      for (const auto& tone : doc.at("tones")) {
        setting.tones.push_back({tone.at("f_mhz").get<double>(), tone.at("amp").get<double>(),
                                 tone.at("phase_rad").get<double>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("schedule line " + std::to_string(line_no) + ": " + e.what());
    }
    if (schedule.events.empty() || schedule.events.back().t_start_us != t ||
        schedule.events.back().duration_us != dur || schedule.events.back().channel != ch) {
      schedule.events.push_back({t, dur, ch, {}});
    }
    schedule.events.back().aod.push_back(std::move(setting));
  }
  return schedule;
}

}  // namespace maqm
