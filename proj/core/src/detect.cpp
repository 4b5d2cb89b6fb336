#include "maqm/detect.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/random/binomial_distribution.hpp>

#include "maqm/rng.hpp"

namespace maqm {

Eigen::VectorXcd MeasurementSetting::product() const {
  const auto ns = signal_basis.size();
  const auto na = atom_basis.size();
  Eigen::VectorXcd v(ns * na);
  for (Eigen::Index i = 0; i < ns; ++i) {
    for (Eigen::Index j = 0; j < na; ++j) v[i * na + j] = signal_basis[i] * atom_basis[j];
  }
  return v;
}

double coincidence_probability(const WeightedState& state, const MeasurementSetting& setting, double eta_det) {
  if (!(eta_det > 0.0 && eta_det <= 1.0)) throw std::invalid_argument("eta_det must lie in (0, 1]");
  const auto v = setting.product();
  if (v.size() != state.amplitudes.size()) {
    throw std::invalid_argument("setting '" + setting.label + "' has dimension " + std::to_string(v.size()) +
                                ", state has " + std::to_string(state.amplitudes.size()));
  }
  return eta_det * std::norm(v.dot(state.amplitudes));
}

double coincidence_probability(const TransferOutcome& outcome, const MeasurementSetting& setting, double eta_det) {
  return coincidence_probability(outcome.weighted_state, setting, eta_det);
}

CountsTable sample_counts(const WeightedState& state, const std::vector<MeasurementSetting>& settings,
                          std::uint64_t heralds_per_setting, double eta_det, double dark_rate, std::uint64_t seed) {
  if (heralds_per_setting < 1) throw std::invalid_argument("heralds_per_setting must be >= 1");
  if (dark_rate < 0.0) throw std::invalid_argument("dark_rate must be >= 0");
  CountsTable table;
  table.shots_requested = heralds_per_setting;
  table.seed = seed;
  for (std::size_t i = 0; i < settings.size(); ++i) {
    const double p = coincidence_probability(state, settings[i], eta_det) + dark_rate;
    if (p > 1.0 + 1e-12) {
      throw std::invalid_argument("setting '" + settings[i].label + "': p + dark_rate = " + std::to_string(p) + " > 1");
    }
    Rng rng(substream_seed(seed, i));
    boost::random::binomial_distribution<std::int64_t, double> draw(static_cast<std::int64_t>(heralds_per_setting), std::min(p, 1.0));
    table.rows.push_back({settings[i].label, heralds_per_setting, static_cast<std::uint64_t>(draw(rng))});
  }
  return table;
}

CountsTable sample_counts(const TransferOutcome& outcome, const std::vector<MeasurementSetting>& settings,
                          std::uint64_t heralds_per_setting, double eta_det, double dark_rate, std::uint64_t seed) {
  return sample_counts(outcome.weighted_state, settings, heralds_per_setting, eta_det, dark_rate, seed);
}

Eigen::Vector2cd qubit_projector(char label) {
  const double r = 1.0 / std::sqrt(2.0);
  switch (label) {
    case 'U': return {1.0, 0.0};
    case 'D': return {0.0, 1.0};
    case 'P': return {r, r};
    case 'R': return {cplx{r}, cplx{0.0, r}};
  }
  throw std::invalid_argument(std::string("unknown qubit projector '") + label + "'");
}

std::vector<MeasurementSetting> tomography_settings(int dimension) {
  if (dimension != 2) throw std::invalid_argument("tomography settings exist for dimension 2 only");
  std::vector<MeasurementSetting> out;
  for (char s : {'U', 'D', 'P', 'R'}) {
    for (char a : {'U', 'D', 'P', 'R'}) {
      out.push_back({qubit_projector(s), qubit_projector(a), std::string{s, a}});
    }
  }
  return out;
}

MeasurementSetting tomography_setting(std::string_view label) {
  if (label.size() != 2) throw std::invalid_argument("unknown tomography setting '" + std::string(label) + "'");
  return {qubit_projector(label[0]), qubit_projector(label[1]), std::string(label)};
}

std::vector<MeasurementSetting> w_settings(int dimension) {
  if (dimension < 2) throw std::invalid_argument("W settings need dimension >= 2");
  const auto d = static_cast<Eigen::Index>(dimension);
  const Eigen::VectorXcd uniform = Eigen::VectorXcd::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  std::vector<MeasurementSetting> out;
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(d);
    e[i] = 1.0;
    out.push_back({uniform, e, "pop:" + std::to_string(i)});
  }
  const double r = 1.0 / std::sqrt(2.0);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      for (int sign : {1, -1}) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d);
        v[i] = r;
        v[j] = sign * r;
        out.push_back({uniform, v, std::string(sign > 0 ? "plus:" : "minus:") + std::to_string(i) + ":" + std::to_string(j)});
      }
    }
  }
  return out;
}

std::string to_csv(const CountsTable& table) {
  std::ostringstream os;
  os << "label,heralds,coincidences\n";
  for (const auto& row : table.rows) os << row.label << ',' << row.heralds << ',' << row.coincidences << '\n';
  return os.str();
}

CountsTable parse_csv(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  CountsTable table;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument("counts CSV line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "label,heralds,coincidences") fail("expected header 'label,heralds,coincidences'");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 3) fail("expected 3 fields, got " + std::to_string(fields.size()));
    auto parse_count = [&](const std::string& f, const char* what) -> std::uint64_t {
      if (f.empty() || f.find_first_not_of("0123456789") != std::string::npos) {
        fail(std::string(what) + " must be a non-negative integer");
      }
      try {
        return std::stoull(f);
      } catch (const std::out_of_range&) {
        fail(std::string(what) + " out of range");
      }
      return 0;
    };
    CountsRow row{fields[0], parse_count(fields[1], "heralds"), parse_count(fields[2], "coincidences")};
    if (row.coincidences > row.heralds) fail("coincidences exceed heralds");
    table.shots_requested = std::max(table.shots_requested, row.heralds);
    table.rows.push_back(std::move(row));
  }
  if (line_no == 0) throw std::invalid_argument("counts CSV is empty");
  return table;
}

}  // namespace maqm
