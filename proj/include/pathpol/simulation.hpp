#ifndef PATHPOL_SIMULATION_HPP
#define PATHPOL_SIMULATION_HPP

#include <cmath>
#include <fstream>
#include <future>
#include <random>

#include "owl.hpp"
#include "regression.hpp"

namespace pathpol {

/// Coefficients of the two-stage continuous generator (graph fig2c_dag.g):
///   W0 ~ N(0, Σ) with equicorrelation rho, plus a shared latent U
///   A1 ~ logit(a1_0 + a1_w0·W0)
///   M1 ~ logit(m1_0 + m1_a1 A1 + m1_w0·W0)
///   W1 = w1_0 + w1_w0 W0 + w1_a1 A1 + w1_m1 M1 + u_w1 U + e1
///   A2 ~ logit(a2_0 + a2_w0·W0 + a2_a1 A1 + a2_m1 M1 + a2_w1·W1)
///   M2 ~ logit(m2_0 + m2_a2 A2 + m2_a1 A1 + m2_m1 M1 + m2_w1·W1)
///   W2 = w2_0 + w2_w0·W0 + w2_a1 A1 + w2_m1 M1 + w2_w1·W1 + w2_m2 M2
///        + A1 (eta_0 + eta_w0·W0) + A2 (tau_0 + tau_w1·W1 + tau_sin sin(kappa W1[sin_index]) + tau_m2 M2)
///        + u_w2 U + e2
struct SimulationConfig {
  std::size_t n = 2000;
  std::uint64_t seed = 1;
  std::vector<int> references{1, 1};

  double w0_rho = 0.3, u_w0 = 0.5;
  double a1_0 = 0;
  std::vector<double> a1_w0;
  double m1_0 = 0, m1_a1 = 0;
  std::vector<double> m1_w0;
  std::vector<double> w1_0, w1_a1, w1_m1, u_w1;
  std::vector<std::vector<double>> w1_w0;  // 6 x 5
  double w1_sd = 1;
  double a2_0 = 0, a2_a1 = 0, a2_m1 = 0;
  std::vector<double> a2_w0, a2_w1;
  double m2_0 = 0, m2_a2 = 0, m2_a1 = 0, m2_m1 = 0;
  std::vector<double> m2_w1;
  double w2_0 = 0, w2_a1 = 0, w2_m1 = 0, w2_m2 = 0;
  std::vector<double> w2_w0, w2_w1;
  double eta_0 = 0;
  std::vector<double> eta_w0;
  double tau_0 = 0, tau_sin = 0, kappa = 1, tau_m2 = 0;
  std::size_t sin_index = 0;
  std::vector<double> tau_w1;
  double u_w2 = 0, w2_sd = 1;

  // learning
  double ridge = 1e-6;
  std::vector<int> degrees{1, 3, 5, 7};
  std::vector<VarList> contexts;  // per stage; empty means the full history
  ClassifierOptions classifier;

  static constexpr std::size_t kW0 = 5, kW1 = 6;

  void validate() const {
    auto len = [](const std::string& name, const std::vector<double>& v, std::size_t k) {
      if (v.size() != k)
        throw std::invalid_argument("simulation config: '" + name + "' needs " + std::to_string(k) + " values");
    };
    len("a1_w0", a1_w0, kW0);
    len("m1_w0", m1_w0, kW0);
    len("w1_0", w1_0, kW1);
    len("w1_a1", w1_a1, kW1);
    len("w1_m1", w1_m1, kW1);
    len("u_w1", u_w1, kW1);
    if (w1_w0.size() != kW1) throw std::invalid_argument("simulation config: 'w1_w0' needs 6 rows");
    for (const auto& r : w1_w0) len("w1_w0 row", r, kW0);
    len("a2_w0", a2_w0, kW0);
    len("a2_w1", a2_w1, kW1);
    len("m2_w1", m2_w1, kW1);
    len("w2_w0", w2_w0, kW0);
    len("w2_w1", w2_w1, kW1);
    len("eta_w0", eta_w0, kW0);
    len("tau_w1", tau_w1, kW1);
    if (sin_index >= kW1) throw std::invalid_argument("simulation config: 'sin_index' out of range");
    if (references.size() != 2) throw std::invalid_argument("simulation config: 'references' needs 2 values");
    for (int r : references)
      if (r != 0 && r != 1) throw std::invalid_argument("simulation config: references must be 0 or 1");
    if (!(w0_rho > -0.25 && w0_rho < 1)) throw std::invalid_argument("simulation config: 'w0_rho' out of range");
    if (!(w1_sd > 0) || !(w2_sd > 0)) throw std::invalid_argument("simulation config: noise scales must be positive");
    if (n == 0) throw std::invalid_argument("simulation config: 'n' must be positive");
    for (int d : degrees)
      if (d < 1) throw std::invalid_argument("simulation config: degrees must be >= 1");
  }
};

inline SimulationConfig simulation_config_from_json(const nlohmann::json& j) {
  SimulationConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  const auto& g = j.contains("generator") ? j.at("generator") : j;
  auto gen = [&](const char* key, auto& field) {
    if (g.contains(key)) g.at(key).get_to(field);
  };
  get("n", c.n);
  get("seed", c.seed);
  get("references", c.references);
  gen("w0_rho", c.w0_rho);
  gen("u_w0", c.u_w0);
  gen("a1_0", c.a1_0);
  gen("a1_w0", c.a1_w0);
  gen("m1_0", c.m1_0);
  gen("m1_a1", c.m1_a1);
  gen("m1_w0", c.m1_w0);
  gen("w1_0", c.w1_0);
  gen("w1_w0", c.w1_w0);
  gen("w1_a1", c.w1_a1);
  gen("w1_m1", c.w1_m1);
  gen("u_w1", c.u_w1);
  gen("w1_sd", c.w1_sd);
  gen("a2_0", c.a2_0);
  gen("a2_w0", c.a2_w0);
  gen("a2_a1", c.a2_a1);
  gen("a2_m1", c.a2_m1);
  gen("a2_w1", c.a2_w1);
  gen("m2_0", c.m2_0);
  gen("m2_a2", c.m2_a2);
  gen("m2_a1", c.m2_a1);
  gen("m2_m1", c.m2_m1);
  gen("m2_w1", c.m2_w1);
  gen("w2_0", c.w2_0);
  gen("w2_w0", c.w2_w0);
  gen("w2_a1", c.w2_a1);
  gen("w2_m1", c.w2_m1);
  gen("w2_w1", c.w2_w1);
  gen("w2_m2", c.w2_m2);
  gen("eta_0", c.eta_0);
  gen("eta_w0", c.eta_w0);
  gen("tau_0", c.tau_0);
  gen("tau_w1", c.tau_w1);
  gen("tau_sin", c.tau_sin);
  gen("kappa", c.kappa);
  gen("sin_index", c.sin_index);
  gen("tau_m2", c.tau_m2);
  gen("u_w2", c.u_w2);
  gen("w2_sd", c.w2_sd);
  if (j.contains("learning")) {
    const auto& l = j.at("learning");
    if (l.contains("ridge")) l.at("ridge").get_to(c.ridge);
    if (l.contains("degrees")) l.at("degrees").get_to(c.degrees);
    if (l.contains("contexts")) l.at("contexts").get_to(c.contexts);
    if (l.contains("l2")) l.at("l2").get_to(c.classifier.l2);
    if (l.contains("epochs")) l.at("epochs").get_to(c.classifier.epochs);
    if (l.contains("step")) l.at("step").get_to(c.classifier.step);
  }
  c.validate();
  return c;
}

inline SimulationConfig load_simulation_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("config file '" + path + "': " + e.what());
  }
  try {
    return simulation_config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config file '" + path + "': " + e.what());
  }
}

/// Column layout of the simulated study.
inline StageStructure study_structure(const std::vector<int>& refs = {1, 1}) {
  StageStructure s;
  for (std::size_t j = 1; j <= SimulationConfig::kW0; ++j) s.baseline.push_back("W0_" + std::to_string(j));
  Stage s1{"A1", "M1", {}, refs.at(0)};
  for (std::size_t j = 1; j <= SimulationConfig::kW1; ++j) s1.outcomes.push_back("W1_" + std::to_string(j));
  Stage s2{"A2", "M2", {"W2"}, refs.at(1)};
  s.stages = {s1, s2};
  s.outcome = "W2";
  return s;
}

namespace detail {
// Row offsets in the order of study_structure().order().
constexpr std::size_t kA1 = 5, kM1 = 6, kW1 = 7, kA2 = 13, kM2 = 14, kW2 = 15, kCols = 16;

inline double dot(const std::vector<double>& c, const double* x) {
  double s = 0;
  for (std::size_t j = 0; j < c.size(); ++j) s += c[j] * x[j];
  return s;
}
}  // namespace detail

/// n draws from the generator; deterministic for a given seed.
inline Dataset simulate_study(const SimulationConfig& c, std::uint64_t seed) {
  using namespace detail;
  c.validate();
  constexpr std::size_t p0 = SimulationConfig::kW0, p1 = SimulationConfig::kW1;
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(p0, p0, c.w0_rho);
  sigma.diagonal().setOnes();
  Eigen::MatrixXd chol = sigma.llt().matrixL();
  std::seed_seq sseq{seed};
  std::mt19937_64 rng(sseq);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto bern = [&](double eta) { return unif(rng) < sigmoid(eta) ? 1.0 : 0.0; };

  Dataset d;
  d.columns = study_structure(c.references).order();
  d.rows.reserve(c.n);
  for (std::size_t r = 0; r < c.n; ++r) {
    std::vector<double> x(kCols, 0.0);
    Eigen::VectorXd z(p0);
    for (std::size_t j = 0; j < p0; ++j) z[j] = normal(rng);
    const double u = normal(rng);
    Eigen::VectorXd w0 = chol * z;
    for (std::size_t j = 0; j < p0; ++j) x[j] = w0[j] + c.u_w0 * u;
    const double* W0 = x.data();
    x[kA1] = bern(c.a1_0 + dot(c.a1_w0, W0));
    x[kM1] = bern(c.m1_0 + c.m1_a1 * x[kA1] + dot(c.m1_w0, W0));
    for (std::size_t k = 0; k < p1; ++k)
      x[kW1 + k] = c.w1_0[k] + dot(c.w1_w0[k], W0) + c.w1_a1[k] * x[kA1] + c.w1_m1[k] * x[kM1] + c.u_w1[k] * u +
                   c.w1_sd * normal(rng);
    const double* W1 = x.data() + kW1;
    x[kA2] = bern(c.a2_0 + dot(c.a2_w0, W0) + c.a2_a1 * x[kA1] + c.a2_m1 * x[kM1] + dot(c.a2_w1, W1));
    x[kM2] = bern(c.m2_0 + c.m2_a2 * x[kA2] + c.m2_a1 * x[kA1] + c.m2_m1 * x[kM1] + dot(c.m2_w1, W1));
    double effect1 = c.eta_0 + dot(c.eta_w0, W0);
    double effect2 = c.tau_0 + dot(c.tau_w1, W1) + c.tau_sin * std::sin(c.kappa * W1[c.sin_index]) + c.tau_m2 * x[kM2];
    x[kW2] = c.w2_0 + dot(c.w2_w0, W0) + c.w2_a1 * x[kA1] + c.w2_m1 * x[kM1] + dot(c.w2_w1, W1) + c.w2_m2 * x[kM2] +
             x[kA1] * effect1 + x[kA2] * effect2 + c.u_w2 * u + c.w2_sd * normal(rng);
    d.rows.push_back(std::move(x));
  }
  return d;
}

inline Dataset simulate_study(const SimulationConfig& c) { return simulate_study(c, c.seed); }

/// Regression plug-ins for the simulated study. The outcome model uses the
/// generator's functional form (linear terms, A1×W0, A2×W1, A2×sin, A2×M2),
/// the mediators are main-effects logistic models, and the stage-1 value is a
/// linear regression of the stage-2 pseudo-outcome on (W0, A1, M1, A1×W0).
class StudyPlugins {
 public:
  StudyPlugins(const Dataset& d, const SimulationConfig& c) : c_(c) {
    using namespace detail;
    check_columns(d);
    const auto n = static_cast<Eigen::Index>(d.size());
    Eigen::MatrixXd xm1(n, 7), xm2(n, 15), xw2(n, kW2Width);
    Eigen::VectorXd ym1(n), ym2(n), yw2(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& x = d.rows[static_cast<std::size_t>(r)];
      xm1.row(r) = m1_design(x, x[kA1]).transpose();
      xm2.row(r) = m2_design(x, x[kA1], x[kA2]).transpose();
      xw2.row(r) = w2_design(x, x[kA2], x[kM2]).transpose();
      ym1[r] = x[kM1];
      ym2[r] = x[kM2];
      yw2[r] = x[kW2];
    }
    m1_ = logistic_fit(xm1, ym1, c.ridge);
    m2_ = logistic_fit(xm2, ym2, c.ridge);
    w2_ = ridge_fit(xw2, yw2, c.ridge);
  }

  /// Q2(h, a): outcome mean with A2 = a, M2 drawn with both treatments at reference.
  double q2(const std::vector<double>& x, int a) const {
    const double pm = sigmoid(m2_design(x, c_.references[0], c_.references[1]).dot(m2_));
    return (1 - pm) * w2_design(x, a, 0).dot(w2_) + pm * w2_design(x, a, 1).dot(w2_);
  }

  /// Fits the stage-1 regression of v2 (one value per row) on the stage-1 history.
  void fit_stage1(const Dataset& d, const std::vector<double>& v2) {
    const auto n = static_cast<Eigen::Index>(d.size());
    Eigen::MatrixXd x1(n, 13);
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& x = d.rows[static_cast<std::size_t>(r)];
      x1.row(r) = r1_design(x, x[detail::kA1], x[detail::kM1]).transpose();
      y[r] = v2[static_cast<std::size_t>(r)];
    }
    r1_ = ridge_fit(x1, y, c_.ridge);
  }

  /// Q1(w0, a): stage-1 value with M1 drawn at the stage-1 reference.
  double q1(const std::vector<double>& x, int a) const {
    if (r1_.size() == 0) throw std::logic_error("stage-1 regression has not been fitted");
    const double pm = sigmoid(m1_design(x, c_.references[0]).dot(m1_));
    return (1 - pm) * r1_design(x, a, 0).dot(r1_) + pm * r1_design(x, a, 1).dot(r1_);
  }

  const Eigen::VectorXd& outcome_coefficients() const { return w2_; }

  static void check_columns(const Dataset& d) {
    auto want = study_structure().order();
    if (d.columns != want) throw std::invalid_argument("dataset columns do not match the study layout");
    if (d.size() == 0) throw std::invalid_argument("empty dataset");
  }

 private:
  static constexpr Eigen::Index kW2Width = 29;

  static Eigen::VectorXd m1_design(const std::vector<double>& x, double a1) {
    Eigen::VectorXd v(7);
    v << 1, x[0], x[1], x[2], x[3], x[4], a1;
    return v;
  }

  static Eigen::VectorXd m2_design(const std::vector<double>& x, double a1, double a2) {
    using namespace detail;
    Eigen::VectorXd v(15);
    v[0] = 1;
    for (std::size_t j = 0; j < 5; ++j) v[1 + j] = x[j];
    v[6] = a1;
    v[7] = x[kM1];
    for (std::size_t j = 0; j < 6; ++j) v[8 + j] = x[kW1 + j];
    v[14] = a2;
    return v;
  }

  Eigen::VectorXd w2_design(const std::vector<double>& x, double a2, double m2) const {
    using namespace detail;
    Eigen::VectorXd v(kW2Width);
    Eigen::Index k = 0;
    const double a1 = x[kA1];
    v[k++] = 1;
    for (std::size_t j = 0; j < 5; ++j) v[k++] = x[j];
    v[k++] = a1;
    v[k++] = x[kM1];
    for (std::size_t j = 0; j < 6; ++j) v[k++] = x[kW1 + j];
    v[k++] = m2;
    for (std::size_t j = 0; j < 5; ++j) v[k++] = a1 * x[j];
    v[k++] = a2;
    for (std::size_t j = 0; j < 6; ++j) v[k++] = a2 * x[kW1 + j];
    v[k++] = a2 * std::sin(c_.kappa * x[kW1 + c_.sin_index]);
    v[k++] = a2 * m2;
    return v;
  }

  static Eigen::VectorXd r1_design(const std::vector<double>& x, double a1, double m1) {
    Eigen::VectorXd v(13);
    v[0] = 1;
    for (std::size_t j = 0; j < 5; ++j) v[1 + j] = x[j];
    v[6] = a1;
    v[7] = m1;
    for (std::size_t j = 0; j < 5; ++j) v[8 + j] = a1 * x[j];
    return v;
  }

  SimulationConfig c_;
  Eigen::VectorXd m1_, m2_, w2_, r1_;
};

inline FeatureSpec degree_features(int d) { return FeatureSpec::poly(d); }

namespace detail {

inline VarList study_context(const SimulationConfig& c, std::size_t i) {
  if (i < c.contexts.size() && !c.contexts[i].empty()) return c.contexts[i];
  return study_structure(c.references).history(i);
}

struct TrainedStage {
  WeightedClassifier classifier;
  StageDiagnostics diagnostics;
};

template <class Q>
TrainedStage train_study_stage(const Dataset& d, const VarList& ctx, int degree, const ClassifierOptions& opt, Q q) {
  std::vector<WeightedSample> samples;
  samples.reserve(d.size());
  for (std::size_t r = 0; r < d.size(); ++r) {
    const double q0 = q(d.rows[r], 0), q1 = q(d.rows[r], 1);
    samples.push_back({d.select(r, ctx), q1 > q0 ? 1 : 0, std::abs(q1 - q0)});
  }
  auto fs = degree_features(degree);
  TrainedStage t{WeightedClassifier::train(samples, fs, opt), {}};
  auto m = t.classifier.evaluate(samples);
  t.diagnostics = {fs.name(), samples.size(), m.accuracy, m.mean_loss, m.total_loss};
  return t;
}

// Stage-2 pseudo-outcome Q2(h, f2(h)) for every row.
inline std::vector<double> stage2_values(const Dataset& d, const StudyPlugins& p, const VarList& ctx,
                                         const WeightedClassifier& f2) {
  std::vector<double> v(d.size());
  for (std::size_t r = 0; r < d.size(); ++r) v[r] = p.q2(d.rows[r], f2.predict(d.select(r, ctx)));
  return v;
}

}  // namespace detail

/// Backwards outcome-weighted learning on the simulated study with the
/// given polynomial degrees for the stage-2 and stage-1 classifiers.
inline LearnedPolicy learn_study_policy(const Dataset& d, const SimulationConfig& c, int degree2, int degree1) {
  StudyPlugins p(d, c);
  auto ctx2 = detail::study_context(c, 1), ctx1 = detail::study_context(c, 0);
  auto s2 = detail::train_study_stage(d, ctx2, degree2, c.classifier, [&](const auto& x, int a) { return p.q2(x, a); });
  p.fit_stage1(d, detail::stage2_values(d, p, ctx2, s2.classifier));
  auto s1 = detail::train_study_stage(d, ctx1, degree1, c.classifier, [&](const auto& x, int a) { return p.q1(x, a); });
  LearnedPolicy out;
  out.contexts = {ctx1, ctx2};
  out.classifiers = {s1.classifier, s2.classifier};
  out.diagnostics = {s1.diagnostics, s2.diagnostics};
  return out;
}

/// Diagnostics for every (stage-2 degree, stage-1 degree) pair.
struct StudyGrid {
  std::vector<int> degrees;
  std::vector<StageDiagnostics> stage2;              // per stage-2 degree
  std::vector<std::vector<StageDiagnostics>> stage1;  // [stage-2 degree][stage-1 degree]

  /// Long format, one line per cell.
  void write_csv(std::ostream& out) const {
    out << "stage2_features,stage1_features,stage2_accuracy,stage1_accuracy,stage2_mean_loss,stage1_mean_loss,"
           "stage2_total_loss,stage1_total_loss\n";
    for (std::size_t i = 0; i < degrees.size(); ++i)
      for (std::size_t j = 0; j < degrees.size(); ++j) {
        const auto &a = stage2[i], &b = stage1[i][j];
        out << a.features << "," << b.features << "," << format_double(a.accuracy) << ","
            << format_double(b.accuracy) << "," << format_double(a.mean_loss) << "," << format_double(b.mean_loss)
            << "," << format_double(a.total_loss) << "," << format_double(b.total_loss) << "\n";
      }
  }

  /// Accuracy table: rows are stage-2 features, columns stage-1 features, cells
  /// "stage-2 % / stage-1 %".
  void write_table(std::ostream& out) const {
    out << "stage2\\stage1";
    for (int d : degrees) out << "," << FeatureSpec::poly(d).name();
    out << "\n";
    char buf[64];
    for (std::size_t i = 0; i < degrees.size(); ++i) {
      out << stage2[i].features;
      for (std::size_t j = 0; j < degrees.size(); ++j) {
        std::snprintf(buf, sizeof buf, ",%.2f / %.2f", 100 * stage2[i].accuracy, 100 * stage1[i][j].accuracy);
        out << buf;
      }
      out << "\n";
    }
  }
};

/// The full grid. Rows run concurrently; each row is deterministic.
inline StudyGrid study_grid(const Dataset& d, const SimulationConfig& c) {
  const StudyPlugins base(d, c);
  auto ctx2 = detail::study_context(c, 1), ctx1 = detail::study_context(c, 0);
  StudyGrid g;
  g.degrees = c.degrees;
  const std::size_t k = c.degrees.size();
  g.stage2.resize(k);
  g.stage1.assign(k, std::vector<StageDiagnostics>(k));
  auto row = [&](std::size_t i) {
    StudyPlugins p = base;
    auto s2 = detail::train_study_stage(d, ctx2, c.degrees[i], c.classifier,
                                        [&](const auto& x, int a) { return p.q2(x, a); });
    g.stage2[i] = s2.diagnostics;
    p.fit_stage1(d, detail::stage2_values(d, p, ctx2, s2.classifier));
    for (std::size_t j = 0; j < k; ++j)
      g.stage1[i][j] = detail::train_study_stage(d, ctx1, c.degrees[j], c.classifier, [&](const auto& x, int a) {
                         return p.q1(x, a);
                       }).diagnostics;
  };
  std::vector<std::future<void>> jobs;
  for (std::size_t i = 0; i < k; ++i) jobs.push_back(std::async(std::launch::async, row, i));
  for (auto& j : jobs) j.get();
  return g;
}

}  // namespace pathpol

#endif  // PATHPOL_SIMULATION_HPP
