#include "maqm/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "maqm/detect.hpp"
#include "maqm/format.hpp"
#include "maqm/rng.hpp"

namespace maqm {

namespace {

using ojson = nlohmann::ordered_json;

// Substream layout per stage: counts, then resampling.
constexpr std::uint64_t kCountsStream = 0;
constexpr std::uint64_t kResampleStream = 1;

std::uint64_t stage_seed(std::uint64_t seed, int stage, std::uint64_t stream) {
  return substream_seed(seed, static_cast<std::uint64_t>(2 * stage) + stream);
}

double predicted_w(const TransferOutcome& outcome) {
  const PureState atoms = project_w(outcome);
  const Eigen::MatrixXcd rho = atoms.amplitudes() * atoms.amplitudes().adjoint();
  return w_fidelity(w_data_from_matrix(rho)).value;
}

StageReport run_stage(const ExperimentConfig& config, bool transfer, int stage,
                      std::optional<ReconstructionResult>& mle_out) {
  ProtocolConfig protocol = config.protocol;
  protocol.transfer_enabled = transfer;
  const TransferOutcome outcome = run_transfer(protocol);
  const auto& det = config.detection;

  StageReport out;
  out.transfer_enabled = transfer;
  out.predicted_fidelity = outcome.predicted_fidelity;
  out.herald_probability = outcome.herald_probability;
  MleOptions mle;
  mle.tol = config.estimation.tol;

  if (protocol.dimension == 2) {
    const auto settings = tomography_settings(2);
    const auto counts = sample_counts(outcome, settings, det.heralds_per_setting, det.eta_det, det.dark_rate,
                                      stage_seed(config.seed, stage, kCountsStream));
    auto base = mle_reconstruct(counts, settings, mle, outcome.weighted_state.basis);
    if (!base.converged) out.warnings.push_back("MLE did not converge");
    auto fid = monte_carlo_fidelity(counts, outcome.target, config.estimation.n_resamples,
                                    stage_seed(config.seed, stage, kResampleStream), mle);
    out.warnings.insert(out.warnings.end(), fid.warnings.begin(), fid.warnings.end());
    out.fidelity = std::move(fid);
    mle_out = base;
    out.reconstruction = std::move(base);
  } else {
    const auto settings = w_settings(protocol.dimension);
    const auto counts = sample_counts(outcome, settings, det.heralds_per_setting, det.eta_det, det.dark_rate,
                                      stage_seed(config.seed, stage, kCountsStream));
    auto w = monte_carlo_w_fidelity(counts, protocol.dimension, config.estimation.n_resamples,
                                    stage_seed(config.seed, stage, kResampleStream));
    out.warnings.insert(out.warnings.end(), w.warnings.begin(), w.warnings.end());
    out.w_fidelity = std::move(w);
    out.predicted_w_fidelity = predicted_w(outcome);
  }
  return out;
}

ojson number(double v) { return std::isfinite(v) ? ojson::parse(format_sig6(v)) : ojson(nullptr); }

ojson estimate_json(const std::optional<FidelityEstimate>& e) {
  if (!e) return nullptr;
  ojson j;
  j["value"] = number(e->value);
  j["sigma"] = number(e->sigma);
  j["n_resamples"] = e->n_resamples;
  j["failures"] = e->failures;
  return j;
}

ojson stage_json(const StageReport& s) {
  ojson j;
  j["transfer_enabled"] = s.transfer_enabled;
  j["herald_probability"] = number(s.herald_probability);
  j["predicted_fidelity"] = number(s.predicted_fidelity);
  j["fidelity"] = estimate_json(s.fidelity);
  j["w_fidelity"] = estimate_json(s.w_fidelity);
  j["predicted_w_fidelity"] = s.predicted_w_fidelity ? number(*s.predicted_w_fidelity) : ojson(nullptr);
  if (s.reconstruction) {
    ojson rho;
    const auto& m = s.reconstruction->rho.matrix();
    ojson re = ojson::array(), im = ojson::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      ojson rr = ojson::array(), ir = ojson::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        rr.push_back(number(m(r, c).real()));
        ir.push_back(number(m(r, c).imag()));
      }
      re.push_back(rr);
      im.push_back(ir);
    }
    ojson basis = ojson::array();
    for (const auto& e : s.reconstruction->rho.basis()) {
      ojson labels = ojson::array();
      for (const auto& mode : e.modes) labels.push_back(to_string(mode));
      basis.push_back(labels);
    }
    rho["basis"] = basis;
    rho["re"] = re;
    rho["im"] = im;
    rho["converged"] = s.reconstruction->converged;
    j["reconstruction"] = rho;
  } else {
    j["reconstruction"] = nullptr;
  }
  j["warnings"] = s.warnings;
  return j;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string csv_number(const std::optional<double>& v) { return v ? format_sig6(*v) : std::string(); }

std::optional<double> value_of(const std::optional<FidelityEstimate>& e) {
  return e ? std::optional<double>(e->value) : std::nullopt;
}
std::optional<double> sigma_of(const std::optional<FidelityEstimate>& e) {
  return e ? std::optional<double>(e->sigma) : std::nullopt;
}

}  // namespace

Report run_experiment(const ExperimentConfig& config) {
  Report report;
  report.dimension = config.protocol.dimension;
  report.seed = config.seed;
  report.config_hash = config.config_hash;

  std::optional<ReconstructionResult> rho1, rho2;
  report.maqm1_stage = run_stage(config, false, 0, rho1);
  report.maqm2_stage = run_stage(config, true, 1, rho2);

  if (rho1 && rho2) {
    const auto& p = config.protocol;
    const DensityMatrix moved = rho1->rho.relabeled([&](const ModeLabel& m) {
      if (m.kind != ModeKind::atom1) return m;
      for (std::size_t k = 0; k < p.source_cells.size(); ++k) {
        if (ModeLabel::atom1(p.source_cells[k]) == m) return ModeLabel::atom2(p.target_cells[k]);
      }
      return m;
    });
    report.transmission_fidelity = state_fidelity(moved, rho2->rho);
  }

  const Schedule schedule = compile_only(config);
  report.schedule_valid = schedule.valid();
  report.schedule_violations = schedule.violations;
  return report;
}

Schedule compile_only(const ExperimentConfig& config) { return compile(config.protocol, config.constraints); }

std::string to_json(const Report& report) {
  ojson j;
  j["config_hash"] = hex64(report.config_hash);
  j["seed"] = report.seed;
  j["dimension"] = report.dimension;
  j["maqm1_stage"] = stage_json(report.maqm1_stage);
  j["maqm2_stage"] = stage_json(report.maqm2_stage);
  j["transmission_fidelity"] =
      report.transmission_fidelity ? number(*report.transmission_fidelity) : ojson(nullptr);
  ojson sched;
  sched["valid"] = report.schedule_valid;
  ojson violations = ojson::array();
  for (const auto& v : report.schedule_violations) {
    ojson vj;
    vj["kind"] = to_string(v.kind);
    vj["severity"] = v.severity == Severity::error ? "error" : "warning";
    vj["message"] = v.message;
    violations.push_back(vj);
  }
  sched["violations"] = violations;
  j["schedule"] = sched;
  return j.dump(2) + "\n";
}

std::string csv_header() {
  return "config_hash,seed,dimension,maqm1_fidelity,maqm1_sigma,maqm2_fidelity,maqm2_sigma,"
         "transmission_fidelity,maqm1_w_fidelity,maqm1_w_sigma,maqm2_w_fidelity,maqm2_w_sigma,"
         "maqm1_predicted,maqm2_predicted,schedule_valid";
}

std::string csv_row(const Report& r) {
  std::ostringstream os;
  os << hex64(r.config_hash) << ',' << r.seed << ',' << r.dimension << ','
     << csv_number(value_of(r.maqm1_stage.fidelity)) << ',' << csv_number(sigma_of(r.maqm1_stage.fidelity)) << ','
     << csv_number(value_of(r.maqm2_stage.fidelity)) << ',' << csv_number(sigma_of(r.maqm2_stage.fidelity)) << ','
     << csv_number(r.transmission_fidelity) << ','
     << csv_number(value_of(r.maqm1_stage.w_fidelity)) << ',' << csv_number(sigma_of(r.maqm1_stage.w_fidelity))
     << ',' << csv_number(value_of(r.maqm2_stage.w_fidelity)) << ','
     << csv_number(sigma_of(r.maqm2_stage.w_fidelity)) << ',' << format_sig6(r.maqm1_stage.predicted_fidelity)
     << ',' << format_sig6(r.maqm2_stage.predicted_fidelity) << ',' << (r.schedule_valid ? "true" : "false");
  return os.str();
}

std::vector<SweepRow> sweep(std::string_view config_text, const std::string& parameter,
                            const std::vector<double>& values, std::optional<std::uint64_t> seed_override) {
  static const char* const kSections[] = {"/protocol/", "/detection/", "/estimation/", "/maqm1/", "/maqm2/"};
  const bool allowed = std::any_of(std::begin(kSections), std::end(kSections),
                                   [&](const char* s) { return parameter.rfind(s, 0) == 0; });
  if (!allowed) {
    throw std::invalid_argument("sweep parameter '" + parameter +
                                "' must lie under /protocol, /detection, /estimation, /maqm1 or /maqm2");
  }
  // Validates the base document and yields its seed.
  const ExperimentConfig base = parse_config(config_text);
  nlohmann::json doc = nlohmann::json::parse(config_text.begin(), config_text.end());
  nlohmann::json::json_pointer ptr;
  try {
    ptr = nlohmann::json::json_pointer(parameter);
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument("sweep parameter '" + parameter + "' is not a JSON pointer");
  }
  if (!doc.contains(ptr) || !doc.at(ptr).is_number()) {
    throw std::invalid_argument("sweep parameter '" + parameter + "' does not name a numeric value in the config");
  }
  const bool integral = doc.at(ptr).is_number_integer();
  const std::uint64_t seed = seed_override.value_or(base.seed);

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (integral && values[i] != std::floor(values[i])) {
      throw std::invalid_argument("sweep parameter '" + parameter + "' takes integers");
    }
    nlohmann::json row_doc = doc;
    if (integral) row_doc[ptr] = static_cast<std::int64_t>(values[i]);
    else row_doc[ptr] = values[i];
    ExperimentConfig cfg = parse_config(row_doc.dump());
    cfg.config_hash = base.config_hash;
    cfg.seed = substream_seed(seed, i);
    rows.push_back({values[i], run_experiment(cfg)});
  }
  return rows;
}

std::string sweep_csv(const std::string& parameter, const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "index,parameter,value," << csv_header() << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    os << i << ',' << parameter << ',' << format_sig6(rows[i].value) << ',' << csv_row(rows[i].report) << '\n';
  }
  return os.str();
}

}  // namespace maqm
