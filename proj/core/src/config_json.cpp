#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "maqm/experiment.hpp"

namespace maqm {

using json = nlohmann::json;

ConfigError::ConfigError(int line, std::string pointer, const std::string& message)
    : std::runtime_error((line > 0 ? "config:" + std::to_string(line) + ": " : std::string("config: ")) +
                         (pointer.empty() ? std::string() : pointer + ": ") + message),
      line_(line),
      pointer_(std::move(pointer)) {}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

// Maps the JSON pointer of every value (and every object key) to its line.
class LineIndex {
 public:
  explicit LineIndex(std::string_view text) : text_(text) {
    skip_ws();
    if (pos_ < text_.size()) value("");
  }

  int line_of(const std::string& pointer) const {
    for (std::string p = pointer;; p = parent(p)) {
      if (auto it = lines_.find(p); it != lines_.end()) return it->second;
      if (p.empty()) return 0;
    }
  }

 private:
  static std::string parent(const std::string& p) {
    const auto slash = p.rfind('/');
    return slash == std::string::npos ? std::string() : p.substr(0, slash);
  }

  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out += c;
    }
    return out;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  std::string string() {
    std::string out;
    ++pos_;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
      out += text_[pos_++];
    }
    ++pos_;
    return out;
  }

  void value(const std::string& pointer) {
    lines_.emplace(pointer, line_);
    if (pos_ >= text_.size()) return;
    const char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] != '}') {
        const int key_line = line_;
        const std::string child = pointer + "/" + escape(string());
        skip_ws();
        ++pos_;  // ':'
        skip_ws();
        lines_.emplace(child, key_line);
        value(child);
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
        skip_ws();
      }
      ++pos_;
    } else if (c == '[') {
      ++pos_;
      skip_ws();
      for (int i = 0; pos_ < text_.size() && text_[pos_] != ']'; ++i) {
        value(pointer + "/" + std::to_string(i));
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
        skip_ws();
      }
      ++pos_;
    } else if (c == '"') {
      string();
    } else {
      while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
             text_[pos_] != ',' && text_[pos_] != ']' && text_[pos_] != '}') {
        ++pos_;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::map<std::string, int> lines_;
};

class Reader {
 public:
  Reader(const json& doc, const LineIndex& index) : doc_(doc), index_(index) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    throw ConfigError(index_.line_of(pointer), pointer, message);
  }

  const json& at(const std::string& pointer) const { return doc_.at(json::json_pointer(pointer)); }
  bool has(const std::string& pointer) const { return doc_.contains(json::json_pointer(pointer)); }

  const json& object(const std::string& pointer, std::initializer_list<const char*> allowed) const {
    const json& obj = at(pointer);
    if (!obj.is_object()) fail(pointer, "expected an object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items()) {
      if (!keys.count(key)) fail(pointer + "/" + key, "unknown key '" + key + "'");
    }
    return obj;
  }

  double number(const std::string& pointer) const {
    const json& v = at(pointer);
    if (!v.is_number()) fail(pointer, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(pointer, "expected a finite number");
    return x;
  }

  double number_in(const std::string& pointer, double lo, double hi, bool lo_open = false) const {
    const double x = number(pointer);
    if (x > hi || x < lo || (lo_open && x == lo)) {
      std::ostringstream os;
      os << "value " << x << " outside " << (lo_open ? "(" : "[") << lo << ", " << hi << "]";
      fail(pointer, os.str());
    }
    return x;
  }

  std::int64_t integer(const std::string& pointer) const {
    const json& v = at(pointer);
    if (!v.is_number_integer()) fail(pointer, "expected an integer");
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      fail(pointer, "integer out of range");
    }
    return v.get<std::int64_t>();
  }

  std::uint64_t unsigned_integer(const std::string& pointer) const {
    const json& v = at(pointer);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(pointer, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& pointer) const {
    const json& v = at(pointer);
    if (!v.is_boolean()) fail(pointer, "expected true or false");
    return v.get<bool>();
  }

  const json& array(const std::string& pointer, std::size_t size) const {
    const json& v = at(pointer);
    if (!v.is_array()) fail(pointer, "expected an array");
    if (v.size() != size) fail(pointer, "expected " + std::to_string(size) + " entries, got " + std::to_string(v.size()));
    return v;
  }

 private:
  const json& doc_;
  const LineIndex& index_;
};

CellMap read_cell_map(const Reader& r, const std::string& p, int n_x, int n_y) {
  const json& v = r.at(p);
  if (v.is_number()) return CellMap::uniform(n_x, n_y, r.number(p));
  if (v.is_array()) {
    const auto n = static_cast<std::size_t>(n_x * n_y);
    r.array(p, n);
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i) values.push_back(r.number(p + "/" + std::to_string(i)));
    return CellMap(n_x, n_y, std::move(values));
  }
  if (v.is_object()) {
    r.object(p, {"uniform_min", "uniform_max", "seed"});
    for (const char* key : {"uniform_min", "uniform_max", "seed"}) {
      if (!r.has(p + "/" + key)) r.fail(p, std::string("missing '") + key + "'");
    }
    const double lo = r.number(p + "/uniform_min");
    const double hi = r.number(p + "/uniform_max");
    if (!(lo <= hi)) r.fail(p, "uniform_min must not exceed uniform_max");
    return CellMap::random_uniform(n_x, n_y, lo, hi, r.unsigned_integer(p + "/seed"));
  }
  r.fail(p, "expected a number, an array of per-cell values or {uniform_min, uniform_max, seed}");
}

void read_memory(const Reader& r, const std::string& p, MemorySpec& spec) {
  r.object(p, {"n_x", "n_y", "eta_write", "eta_read", "eta_eit", "tau_mem_us", "t_larmor_us", "rf", "crosstalk_eps"});
  const bool regrid = r.has(p + "/n_x") || r.has(p + "/n_y");
  if (r.has(p + "/n_x")) spec.n_x = static_cast<int>(r.integer(p + "/n_x"));
  if (r.has(p + "/n_y")) spec.n_y = static_cast<int>(r.integer(p + "/n_y"));
  if (spec.n_x < 1 || spec.n_x > 64 || spec.n_y < 1 || spec.n_y > 64) r.fail(p, "grid sizes must lie in [1, 64]");
  for (auto [key, map] : {std::pair{"eta_write", &spec.eta_write}, std::pair{"eta_read", &spec.eta_read},
                          std::pair{"eta_eit", &spec.eta_eit}}) {
    const std::string kp = p + "/" + key;
    if (r.has(kp)) {
      *map = read_cell_map(r, kp, spec.n_x, spec.n_y);
    } else if (regrid && (map->n_x() != spec.n_x || map->n_y() != spec.n_y)) {
      r.fail(p, std::string("grid size changed; '") + key + "' must be given");
    }
    for (std::size_t i = 0; i < map->values().size(); ++i) {
      const double v = map->values()[i];
      if (!(v >= 0.0 && v <= 1.0)) r.fail(kp, "efficiency " + std::to_string(v) + " outside [0, 1]");
    }
  }
  if (r.has(p + "/tau_mem_us")) {
    const std::string kp = p + "/tau_mem_us";
    const json& v = r.at(kp);
    if (v.is_string()) {
      if (v.get<std::string>() != "inf") r.fail(kp, "expected a number or \"inf\"");
      spec.tau_mem_us = std::numeric_limits<double>::infinity();
    } else {
      spec.tau_mem_us = r.number_in(kp, 0.0, 1e9, true);
    }
  }
  if (r.has(p + "/t_larmor_us")) spec.t_larmor_us = r.number_in(p + "/t_larmor_us", 0.0, 1e9, true);
  if (r.has(p + "/crosstalk_eps")) spec.crosstalk_eps = r.number_in(p + "/crosstalk_eps", 0.0, 0.4999999);
  if (r.has(p + "/rf")) {
    r.object(p + "/rf", {"x", "y"});
    for (auto [key, axis] : {std::pair{"x", &spec.rf.x}, std::pair{"y", &spec.rf.y}}) {
      const std::string ap = p + "/rf/" + key;
      if (!r.has(ap)) continue;
      r.object(ap, {"origin_mhz", "step_mhz"});
      if (r.has(ap + "/origin_mhz")) axis->origin_mhz = r.number_in(ap + "/origin_mhz", 0.0, 1e4);
      if (r.has(ap + "/step_mhz")) axis->step_mhz = r.number_in(ap + "/step_mhz", 0.0, 1e3, true);
    }
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    r.fail(p, e.what());
  }
}

std::vector<CellAddress> read_cells(const Reader& r, const std::string& p, MemoryId memory, int dimension) {
  const json& v = r.at(p);
  if (v.is_string()) {
    const auto name = v.get<std::string>();
    if (name == "subarray") return memory == MemoryId::maqm1 ? source_subarray() : target_subarray();
    if (memory == MemoryId::maqm1 && (name == "A" || name == "B" || name == "C")) return source_pair(name[0]);
    if (memory == MemoryId::maqm2 && (name == "I" || name == "II" || name == "III")) {
      return target_pair(static_cast<int>(name.size()));
    }
    r.fail(p, "unknown cell set '" + name + "'");
  }
  r.array(p, static_cast<std::size_t>(dimension));
  std::vector<CellAddress> cells;
  for (int k = 0; k < dimension; ++k) {
    const std::string cp = p + "/" + std::to_string(k);
    r.array(cp, 2);
    cells.push_back({memory, static_cast<int>(r.integer(cp + "/0")), static_cast<int>(r.integer(cp + "/1"))});
  }
  return cells;
}

std::vector<double> read_numbers(const Reader& r, const std::string& p, int dimension) {
  r.array(p, static_cast<std::size_t>(dimension));
  std::vector<double> out;
  for (int k = 0; k < dimension; ++k) out.push_back(r.number(p + "/" + std::to_string(k)));
  return out;
}

void read_protocol(const Reader& r, ProtocolConfig& cfg) {
  const std::string p = "/protocol";
  r.object(p, {"dimension", "source_cells", "target_cells", "retrieval_order", "t1_us", "tau_us", "t2_us",
               "relative_phases", "ledger", "common_laser", "transfer_enabled"});
  const int d = cfg.dimension;
  if (r.has(p + "/transfer_enabled")) r.fail(p + "/transfer_enabled", "both stages are always run; remove this key");
  if (r.has(p + "/source_cells")) cfg.source_cells = read_cells(r, p + "/source_cells", MemoryId::maqm1, d);
  if (r.has(p + "/target_cells")) cfg.target_cells = read_cells(r, p + "/target_cells", MemoryId::maqm2, d);
  if (r.has(p + "/retrieval_order")) {
    r.array(p + "/retrieval_order", static_cast<std::size_t>(d));
    cfg.retrieval_order.clear();
    for (int k = 0; k < d; ++k) {
      cfg.retrieval_order.push_back(static_cast<int>(r.integer(p + "/retrieval_order/" + std::to_string(k))));
    }
  }
  if (r.has(p + "/t1_us")) cfg.t1_us = r.number_in(p + "/t1_us", 0.0, 1e6);
  if (r.has(p + "/tau_us")) cfg.tau_us = r.number_in(p + "/tau_us", 0.0, 1e6, true);
  if (r.has(p + "/t2_us")) cfg.t2_us = r.number_in(p + "/t2_us", 0.0, 1e6);
  if (r.has(p + "/relative_phases")) cfg.relative_phases = read_numbers(r, p + "/relative_phases", d);
  if (r.has(p + "/common_laser")) cfg.common_laser = r.boolean(p + "/common_laser");
  if (r.has(p + "/ledger")) {
    r.array(p + "/ledger", static_cast<std::size_t>(d));
    cfg.ledger.entries.clear();
    for (int k = 0; k < d; ++k) {
      const std::string ep = p + "/ledger/" + std::to_string(k);
      r.object(ep, {"bin", "alpha", "beta", "drift"});
      PhaseEntry e;
      e.bin = k;
      if (r.has(ep + "/bin")) e.bin = static_cast<int>(r.integer(ep + "/bin"));
      if (r.has(ep + "/alpha")) e.alpha = r.number(ep + "/alpha");
      if (r.has(ep + "/beta")) e.beta = r.number(ep + "/beta");
      if (r.has(ep + "/drift")) e.drift = r.number(ep + "/drift");
      cfg.ledger.entries.push_back(e);
    }
  }
  for (auto [key, cells, spec] : {std::tuple{"source_cells", &cfg.source_cells, &cfg.maqm1},
                                  std::tuple{"target_cells", &cfg.target_cells, &cfg.maqm2}}) {
    for (std::size_t k = 0; k < cells->size(); ++k) {
      if (!spec->contains((*cells)[k])) {
        const std::string kp = p + "/" + key;
        r.fail(r.has(kp) ? kp + "/" + std::to_string(k) : kp,
               "cell " + to_string((*cells)[k]) + " is outside the " + std::to_string(spec->n_x) + "x" +
                   std::to_string(spec->n_y) + " grid");
      }
    }
  }
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    r.fail(p, e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    std::string what = e.what();
    if (const auto colon = what.rfind(": "); colon != std::string::npos) what = what.substr(colon + 2);
    throw ConfigError(line, "", "syntax error: " + what);
  }
  const LineIndex index(text);
  const Reader r(doc, index);
  r.object("", {"seed", "maqm1", "maqm2", "protocol", "constraints", "detection", "estimation"});
  if (!r.has("/seed")) r.fail("", "missing required key 'seed'");

  ExperimentConfig cfg;
  cfg.config_hash = fnv1a64(text);
  cfg.seed = r.unsigned_integer("/seed");

  int dimension = 2;
  if (r.has("/protocol")) {
    r.object("/protocol", {"dimension", "source_cells", "target_cells", "retrieval_order", "t1_us", "tau_us", "t2_us",
                           "relative_phases", "ledger", "common_laser", "transfer_enabled"});
    if (r.has("/protocol/dimension")) {
      const auto d = r.integer("/protocol/dimension");
      if (d != 2 && d != 4) r.fail("/protocol/dimension", "dimension must be 2 or 4");
      dimension = static_cast<int>(d);
    }
  }
  cfg.protocol = dimension == 2 ? ProtocolConfig::qubit_defaults() : ProtocolConfig::qudit_defaults();
  if (r.has("/maqm1")) read_memory(r, "/maqm1", cfg.protocol.maqm1);
  if (r.has("/maqm2")) read_memory(r, "/maqm2", cfg.protocol.maqm2);
  if (r.has("/protocol")) read_protocol(r, cfg.protocol);
  try {
    cfg.protocol.validate();
  } catch (const std::exception& e) {
    r.fail("/protocol", e.what());
  }

  cfg.constraints = ScheduleConstraints::from_specs(cfg.protocol.maqm1, cfg.protocol.maqm2);
  if (r.has("/constraints")) {
    const std::string p = "/constraints";
    r.object(p, {"aod_switch_time_us", "min_guard_us", "larmor_tolerance"});
    if (r.has(p + "/aod_switch_time_us")) {
      cfg.constraints.aod_switch_time_us = r.number_in(p + "/aod_switch_time_us", 0.0, 1e6);
    }
    if (r.has(p + "/min_guard_us")) cfg.constraints.min_guard_us = r.number_in(p + "/min_guard_us", 0.0, 1e6);
    if (r.has(p + "/larmor_tolerance")) {
      cfg.constraints.larmor_tolerance = r.number_in(p + "/larmor_tolerance", 0.0, 0.5);
    }
  }
  if (r.has("/detection")) {
    const std::string p = "/detection";
    r.object(p, {"eta_det", "dark_rate", "heralds_per_setting"});
    if (r.has(p + "/eta_det")) cfg.detection.eta_det = r.number_in(p + "/eta_det", 0.0, 1.0, true);
    if (r.has(p + "/dark_rate")) cfg.detection.dark_rate = r.number_in(p + "/dark_rate", 0.0, 1.0);
    if (r.has(p + "/heralds_per_setting")) {
      cfg.detection.heralds_per_setting = r.unsigned_integer(p + "/heralds_per_setting");
      if (cfg.detection.heralds_per_setting < 1) r.fail(p + "/heralds_per_setting", "must be >= 1");
    }
  }
  if (r.has("/estimation")) {
    const std::string p = "/estimation";
    r.object(p, {"n_resamples", "tol"});
    if (r.has(p + "/n_resamples")) {
      const auto n = r.integer(p + "/n_resamples");
      if (n < 2 || n > 100000) r.fail(p + "/n_resamples", "must lie in [2, 100000]");
      cfg.estimation.n_resamples = static_cast<int>(n);
    }
    if (r.has(p + "/tol")) cfg.estimation.tol = r.number_in(p + "/tol", 0.0, 1.0, true);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "", "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

}  // namespace maqm
