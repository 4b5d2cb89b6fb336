#include "maqm/tomo.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <regex>
#include <stdexcept>

#include <boost/random/poisson_distribution.hpp>
#include <json.hpp>

#include "maqm/rng.hpp"

namespace maqm {

Basis two_qubit_basis() {
  const CellAddress u1{MemoryId::maqm1, 0, 0}, d1{MemoryId::maqm1, 0, 1};
  const CellAddress u2{MemoryId::maqm2, 0, 0}, d2{MemoryId::maqm2, 0, 1};
  const ModeLabel photons[] = {ModeLabel::signal(u1), ModeLabel::signal(d1)};
  const ModeLabel atoms[] = {ModeLabel::atom2(u2), ModeLabel::atom2(d2)};
  return product_basis(photons, atoms);
}

std::vector<MeasurementSetting> settings_for(const CountsTable& counts) {
  std::vector<MeasurementSetting> out;
  for (const auto& row : counts.rows) out.push_back(tomography_setting(row.label));
  return out;
}

namespace {

// Orthonormal Hermitian basis of n x n matrices (Hilbert-Schmidt).
std::vector<Eigen::MatrixXcd> hermitian_basis(Eigen::Index n) {
  std::vector<Eigen::MatrixXcd> out;
  const double r = 1.0 / std::sqrt(2.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    m(i, i) = 1.0;
    out.push_back(m);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(n, n);
      s(i, j) = s(j, i) = r;
      out.push_back(s);
      Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
      a(i, j) = cplx{0.0, -r};
      a(j, i) = cplx{0.0, r};
      out.push_back(a);
    }
  }
  return out;
}

struct Measurement {
  Eigen::VectorXcd vec;  // projector = vec vec^dag
  double heralds;
  double counts;
};

std::vector<Measurement> measurements(const CountsTable& counts, const std::vector<MeasurementSetting>& settings) {
  if (counts.rows.size() != settings.size()) throw std::invalid_argument("one setting per counts row required");
  std::vector<Measurement> out;
  for (std::size_t i = 0; i < settings.size(); ++i) {
    const auto& row = counts.rows[i];
    if (row.heralds == 0) continue;
    out.push_back({settings[i].product(), static_cast<double>(row.heralds), static_cast<double>(row.coincidences)});
  }
  if (out.empty()) throw std::invalid_argument("no measurement rows with heralds");
  const auto n = out.front().vec.size();
  for (const auto& m : out) {
    if (m.vec.size() != n) throw std::invalid_argument("settings of mixed dimension");
  }
  return out;
}

// Rows: settings, columns: Hermitian basis elements; entries tr(G_k P_s).
Eigen::MatrixXd design_matrix(const std::vector<Measurement>& ms, const std::vector<Eigen::MatrixXcd>& basis) {
  Eigen::MatrixXd a(static_cast<Eigen::Index>(ms.size()), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t s = 0; s < ms.size(); ++s) {
    for (std::size_t k = 0; k < basis.size(); ++k) {
      a(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k)) = ms[s].vec.dot(basis[k] * ms[s].vec).real();
    }
  }
  return a;
}

Eigen::MatrixXcd unnormalized_inversion(const std::vector<Measurement>& ms) {
  const auto n = ms.front().vec.size();
  const auto hb = hermitian_basis(n);
  const Eigen::MatrixXd a = design_matrix(ms, hb);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(hb.size())) {
    throw std::invalid_argument("measurement settings are not informationally complete (rank " +
                                std::to_string(qr.rank()) + " < " + std::to_string(hb.size()) + ")");
  }
  Eigen::VectorXd f(static_cast<Eigen::Index>(ms.size()));
  for (std::size_t s = 0; s < ms.size(); ++s) f[static_cast<Eigen::Index>(s)] = ms[s].counts / ms[s].heralds;
  const Eigen::VectorXd c = qr.solve(f);
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t k = 0; k < hb.size(); ++k) rho += c[static_cast<Eigen::Index>(k)] * hb[k];
  return (rho + rho.adjoint()) / 2.0;
}

// Upper-triangular T with real diagonal <-> flat real parameter vector.
Eigen::MatrixXcd unpack(const Eigen::VectorXd& x, Eigen::Index n) {
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(n, n);
  Eigen::Index p = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    t(i, i) = x[p++];
    for (Eigen::Index j = i + 1; j < n; ++j) {
      t(i, j) = cplx{x[p], x[p + 1]};
      p += 2;
    }
  }
  return t;
}

Eigen::VectorXd pack(const Eigen::MatrixXcd& t) {
  const auto n = t.rows();
  Eigen::VectorXd x(n * n);
  Eigen::Index p = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    x[p++] = t(i, i).real();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      x[p++] = t(i, j).real();
      x[p++] = t(i, j).imag();
    }
  }
  return x;
}

class PoissonLikelihood {
 public:
  explicit PoissonLikelihood(std::vector<Measurement> ms) : ms_(std::move(ms)), n_(ms_.front().vec.size()) {}

  Eigen::Index dim() const { return n_; }

  // log L minus the saturated-model value (so <= 0); -inf when a counted
  // setting has zero mean. Each term is n log(mu/n) - (mu - n).
  double value(const Eigen::MatrixXcd& rho) const {
    double l = 0.0;
    for (const auto& m : ms_) {
      const double mu = m.heralds * m.vec.dot(rho * m.vec).real();
      if (m.counts > 0.0) {
        if (!(mu > 0.0)) return -std::numeric_limits<double>::infinity();
        const double r = (mu - m.counts) / m.counts;
        l += m.counts * (std::log1p(r) - r);
      } else {
        l -= mu;
      }
    }
    return l;
  }

  // dL/drho~ as a Hermitian matrix.
  Eigen::MatrixXcd gradient(const Eigen::MatrixXcd& rho) const {
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(n_, n_);
    for (const auto& m : ms_) {
      const double mu = m.heralds * m.vec.dot(rho * m.vec).real();
      const double w = m.heralds * ((m.counts > 0.0 ? m.counts / mu : 0.0) - 1.0);
      g += w * (m.vec * m.vec.adjoint());
    }
    return g;
  }

  double total_counts() const {
    double s = 0.0;
    for (const auto& m : ms_) s += m.counts;
    return s;
  }

  double total_heralds() const {
    double s = 0.0;
    for (const auto& m : ms_) s += m.heralds;
    return s;
  }

 private:
  std::vector<Measurement> ms_;
  Eigen::Index n_;
};

// Objective in parameter space: f(x) = -log L(T^dag T), with gradient.
struct Objective {
  const PoissonLikelihood& like;

  double operator()(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
    const auto n = like.dim();
    const Eigen::MatrixXcd t = unpack(x, n);
    const Eigen::MatrixXcd rho = t.adjoint() * t;
    const double l = like.value(rho);
    if (grad) {
      const Eigen::MatrixXcd m = t * like.gradient(rho);
      grad->resize(x.size());
      Eigen::Index p = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        (*grad)[p++] = -2.0 * m(i, i).real();
        for (Eigen::Index j = i + 1; j < n; ++j) {
          (*grad)[p++] = -2.0 * m(i, j).real();
          (*grad)[p++] = -2.0 * m(i, j).imag();
        }
      }
    }
    return -l;
  }
};

Eigen::MatrixXcd initial_point(const PoissonLikelihood& like, const std::vector<Measurement>& ms,
                               const std::optional<Eigen::MatrixXcd>& init) {
  const auto n = like.dim();
  Eigen::MatrixXcd start;
  if (init) {
    start = *init;
  } else {
    try {
      start = unnormalized_inversion(ms);
    } catch (const std::invalid_argument&) {
      start = Eigen::MatrixXcd::Identity(n, n);
    }
  }
  start = (start + start.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(start);
  Eigen::VectorXd ev = es.eigenvalues();
  const double top = std::max(ev.maxCoeff(), 1e-300);
  // Keep the start strictly inside the cone so the Cholesky factor exists.
  ev = ev.cwiseMax(1e-3 * top);
  Eigen::MatrixXcd rho = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  double predicted = 0.0;
  for (const auto& m : ms) predicted += m.heralds * m.vec.dot(rho * m.vec).real();
  const double scale = like.total_counts() / predicted;
  return rho * scale;
}

}  // namespace

Eigen::MatrixXcd linear_inversion(const CountsTable& counts, const std::vector<MeasurementSetting>& settings) {
  const auto rho = unnormalized_inversion(measurements(counts, settings));
  const double tr = rho.trace().real();
  if (!(tr > 0.0)) throw std::invalid_argument("linear inversion: no coincidences recorded");
  return rho / tr;
}

Eigen::MatrixXcd linear_inversion(const CountsTable& counts) { return linear_inversion(counts, settings_for(counts)); }

ReconstructionResult mle_reconstruct(const CountsTable& counts, const MleOptions& options, const Basis& basis) {
  return mle_reconstruct(counts, settings_for(counts), options, basis);
}

ReconstructionResult mle_reconstruct(const CountsTable& counts, const std::vector<MeasurementSetting>& settings,
                                     const MleOptions& options, const Basis& basis) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("mle tolerance must be > 0");
  auto ms = measurements(counts, settings);
  const auto n = ms.front().vec.size();
  if (static_cast<Eigen::Index>(basis.size()) != n) throw std::invalid_argument("basis size does not match settings");
  PoissonLikelihood like(ms);

  if (like.total_counts() == 0.0) {
    return {DensityMatrix::maximally_mixed(basis), 0.0, 0, false, 0.0, {}};
  }

  Eigen::MatrixXcd start = initial_point(like, ms, options.init);
  Eigen::LLT<Eigen::MatrixXcd> llt(start);
  Eigen::MatrixXcd t = llt.matrixL().adjoint();
  if (llt.info() != Eigen::Success) {
    t = Eigen::MatrixXcd::Identity(n, n) * std::sqrt(like.total_counts() / like.total_heralds());
  }

  const Objective f{like};
  Eigen::VectorXd x = pack(t);
  Eigen::VectorXd g;
  double fx = f(x, &g);
  std::vector<double> trace{-fx};
  const double count_scale = std::max(1.0, like.total_counts());

  // L-BFGS history.
  constexpr std::size_t kHistory = 10;
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  bool converged = false;
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    // Two-loop recursion for the search direction.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    double gamma = 1.0 / std::max(g.norm(), 1e-300);
    if (!s_hist.empty()) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    Eigen::VectorXd dir = -gamma * q;
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(dir);
      dir += s_hist[i] * (-alpha[i] - beta);
    }
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -g / std::max(g.norm(), 1e-300);
      slope = g.dot(dir);
    }

    // Backtracking line search; only strictly improving steps are accepted.
    double step = 1.0;
    Eigen::VectorXd x_new, g_new;
    double f_new = fx;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * dir;
      f_new = f(x_new, &g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope && f_new < fx) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No further ascent possible at double precision.
      converged = g.norm() / count_scale < options.grad_tol;
      break;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > kHistory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    const double rel = std::abs(f_new - fx) / std::max(1.0, std::abs(fx));
    x = x_new;
    g = g_new;
    fx = f_new;
    trace.push_back(-fx);
    if (rel < options.tol && g.norm() / count_scale < options.grad_tol) {
      converged = true;
      ++iter;
      break;
    }
  }

  t = unpack(x, n);
  Eigen::MatrixXcd rho = t.adjoint() * t;
  rho = (rho + rho.adjoint()) / 2.0;
  rho /= rho.trace().real();
  return {DensityMatrix(basis, std::move(rho)), -fx, iter, converged, g.norm() / count_scale, std::move(trace)};
}

CountsTable poisson_resample(const CountsTable& counts, std::uint64_t seed) {
  CountsTable out = counts;
  out.seed = seed;
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    auto& row = out.rows[i];
    if (row.coincidences == 0) continue;
    Rng rng(substream_seed(seed, i));
    boost::random::poisson_distribution<std::uint64_t, double> draw(static_cast<double>(row.coincidences));
    row.coincidences = std::min<std::uint64_t>(draw(rng), row.heralds);
  }
  return out;
}

namespace {

FidelityEstimate summarize(const std::vector<double>& values, int requested, int failures) {
  FidelityEstimate out;
  out.n_resamples = requested;
  out.failures = failures;
  if (values.empty()) {
    out.warnings.push_back("every resample failed");
    return out;
  }
  const double n = static_cast<double>(values.size());
  out.value = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - out.value) * (v - out.value);
  out.sigma = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  if (failures > 0) out.warnings.push_back(std::to_string(failures) + " resample(s) failed to converge");
  return out;
}

}  // namespace

FidelityEstimate monte_carlo_fidelity(const CountsTable& counts, const PureState& target, int n_resamples,
                                      std::uint64_t seed, const MleOptions& options) {
  if (n_resamples < 2) throw std::invalid_argument("monte_carlo_fidelity needs n_resamples >= 2");
  const auto settings = settings_for(counts);
  const auto base = mle_reconstruct(counts, settings, options, target.basis());
  MleOptions warm = options;
  warm.init = base.rho.matrix();
  std::vector<double> values;
  int failures = 0;
  for (int r = 0; r < n_resamples; ++r) {
    try {
      const auto res = mle_reconstruct(poisson_resample(counts, substream_seed(seed, static_cast<std::uint64_t>(r))),
                                       settings, warm, target.basis());
      if (!res.converged) ++failures;
      values.push_back(fidelity(res.rho, target));
    } catch (const std::exception&) {
      ++failures;
    }
  }
  return summarize(values, n_resamples, failures);
}

FidelityEstimate w_fidelity(const WFidelityData& data) {
  const auto d = data.populations.size();
  if (d < 2) throw std::invalid_argument("W fidelity needs at least two populations");
  if (data.pair_re.size() != d * (d - 1) / 2) throw std::invalid_argument("W fidelity needs one coherence per pair i < j");
  double sum_p = 0.0;
  for (double p : data.populations) {
    if (p < 0.0) throw std::invalid_argument("negative population");
    sum_p += p;
  }
  if (std::abs(sum_p - 1.0) > 1e-6) throw std::invalid_argument("populations must sum to 1");

  FidelityEstimate out;
  double coherence = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j, ++k) {
      const double bound = std::sqrt(data.populations[i] * data.populations[j]);
      if (std::abs(data.pair_re[k]) > bound * (1.0 + 1e-6) + 1e-12) {
        out.warnings.push_back("|Re rho_" + std::to_string(i) + std::to_string(j) + "| exceeds sqrt(p_i p_j)");
      }
      coherence += data.pair_re[k];
    }
  }
  const double f = (sum_p + 2.0 * coherence) / static_cast<double>(d);
  if (f < 0.0 || f > 1.0) out.warnings.push_back("W fidelity " + std::to_string(f) + " clamped to [0, 1]");
  out.value = std::clamp(f, 0.0, 1.0);
  return out;
}

WFidelityData w_data_from_matrix(const Eigen::MatrixXcd& rho) {
  WFidelityData data;
  const auto d = rho.rows();
  const double tr = rho.trace().real();
  for (Eigen::Index i = 0; i < d; ++i) data.populations.push_back(rho(i, i).real() / tr);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) data.pair_re.push_back(rho(i, j).real() / tr);
  }
  return data;
}

WFidelityData w_data_from_counts(const CountsTable& counts, int dimension) {
  if (dimension < 2) throw std::invalid_argument("W data needs dimension >= 2");
  const auto d = static_cast<std::size_t>(dimension);
  std::vector<double> pop(d, -1.0);
  std::vector<double> plus(d * d, -1.0), minus(d * d, -1.0);
  static const std::regex pop_re(R"(^pop:(\d+)$)");
  static const std::regex pair_re(R"(^(plus|minus):(\d+):(\d+)$)");
  for (const auto& row : counts.rows) {
    if (row.heralds == 0) continue;
    const double f = static_cast<double>(row.coincidences) / static_cast<double>(row.heralds);
    std::smatch m;
    if (std::regex_match(row.label, m, pop_re)) {
      const auto i = std::stoul(m[1]);
      if (i < d) pop[i] = f;
    } else if (std::regex_match(row.label, m, pair_re)) {
      const auto i = std::stoul(m[2]);
      const auto j = std::stoul(m[3]);
      if (i < j && j < d) (m[1] == "plus" ? plus : minus)[i * d + j] = f;
    }
  }
  double z = 0.0;
  for (double p : pop) {
    if (p < 0.0) throw std::invalid_argument("W counts are missing a population row");
    z += p;
  }
  if (!(z > 0.0)) throw std::invalid_argument("W counts have no population coincidences");
  WFidelityData data;
  for (double p : pop) data.populations.push_back(p / z);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      if (plus[i * d + j] < 0.0 || minus[i * d + j] < 0.0) {
        throw std::invalid_argument("W counts are missing pair " + std::to_string(i) + ":" + std::to_string(j));
      }
      data.pair_re.push_back((plus[i * d + j] - minus[i * d + j]) / (2.0 * z));
    }
  }
  return data;
}

FidelityEstimate monte_carlo_w_fidelity(const CountsTable& counts, int dimension, int n_resamples,
                                        std::uint64_t seed) {
  if (n_resamples < 2) throw std::invalid_argument("monte_carlo_w_fidelity needs n_resamples >= 2");
  std::vector<double> values;
  int failures = 0;
  std::vector<std::string> warnings;
  for (int r = 0; r < n_resamples; ++r) {
    try {
      const auto est = w_fidelity(
          w_data_from_counts(poisson_resample(counts, substream_seed(seed, static_cast<std::uint64_t>(r))), dimension));
      values.push_back(est.value);
    } catch (const std::exception&) {
      ++failures;
    }
  }
  auto out = summarize(values, n_resamples, failures);
  const auto point = w_fidelity(w_data_from_counts(counts, dimension));
  out.warnings.insert(out.warnings.end(), point.warnings.begin(), point.warnings.end());
  return out;
}

std::string to_json(const ReconstructionResult& result) {
  nlohmann::ordered_json doc;
  const auto& m = result.rho.matrix();
  std::vector<std::vector<double>> re(static_cast<std::size_t>(m.rows())), im(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      re[static_cast<std::size_t>(i)].push_back(m(i, j).real());
      im[static_cast<std::size_t>(i)].push_back(m(i, j).imag());
    }
  }
  auto basis = nlohmann::ordered_json::array();
  for (const auto& e : result.rho.basis()) {
    auto labels = nlohmann::ordered_json::array();
    for (const auto& mode : e.modes) labels.push_back(to_string(mode));
    basis.push_back(labels);
  }
  doc["basis"] = basis;
  doc["re"] = re;
  doc["im"] = im;
  doc["log_likelihood"] = result.log_likelihood;
  doc["iterations"] = result.iterations;
  doc["converged"] = result.converged;
  return doc.dump();
}

std::string to_json(const FidelityEstimate& estimate) {
  nlohmann::ordered_json doc;
  doc["value"] = estimate.value;
  doc["sigma"] = estimate.sigma;
  doc["n_resamples"] = estimate.n_resamples;
  return doc.dump();
}

}  // namespace maqm
