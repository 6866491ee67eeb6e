#ifndef PATHPOL_COUNTEREXAMPLE_HPP
#define PATHPOL_COUNTEREXAMPLE_HPP

#include <chrono>

#include <Eigen/Dense>

#include "oracle.hpp"

namespace pathpol {

struct CounterexampleOptions {
  std::uint64_t seed = 0;
  int trials = 200;
  int iterations = 100;
  double observed_tol = 1e-9;
  double min_gap = 0.01;
  double time_budget = 60.0;  // seconds
  int noise_size = 4;
};

/// Two NPSEMs over the same hidden-variable DAG that agree on the observed
/// law and disagree on the counterfactual of interest.
struct Counterexample {
  bool found = false;
  NpsemModel first, second;
  double observed_diff = INFINITY;
  double gap = 0;
  int trials = 0;
};

namespace detail {

// Noise distributions of a model as free logits; structural tables stay fixed.
class NoiseParams {
 public:
  explicit NoiseParams(NpsemModel m) : model_(std::move(m)) {
    for (const auto& e : model_.equations()) size_ += static_cast<int>(e.noise.size()) - 1;
  }

  int size() const { return size_; }

  Eigen::VectorXd get() const {
    Eigen::VectorXd x(size_);
    int k = 0;
    for (const auto& e : model_.equations())
      for (std::size_t i = 1; i < e.noise.size(); ++i) x[k++] = std::log(e.noise[i] / e.noise[0]);
    return x;
  }

  const NpsemModel& at(const Eigen::VectorXd& x) {
    int k = 0;
    for (auto& e : model_.mutable_equations()) {
      double s = 1;
      std::vector<double> w(e.noise.size(), 1.0);
      for (std::size_t i = 1; i < w.size(); ++i) s += (w[i] = std::exp(x[k++]));
      for (std::size_t i = 0; i < w.size(); ++i) e.noise[i] = w[i] / s;
    }
    return model_;
  }

 private:
  NpsemModel model_;
  int size_ = 0;
};

inline Eigen::VectorXd as_vector(const Table& t) {
  return Eigen::Map<const Eigen::VectorXd>(t.values().data(), static_cast<Eigen::Index>(t.size()));
}

// Levenberg-Marquardt on r(x) = p_obs(x) - target with a central-difference Jacobian.
inline Eigen::VectorXd match_observed(NoiseParams& params, Eigen::VectorXd x, const Eigen::VectorXd& target,
                                      const VarSet& observed, int iterations, double tol) {
  auto residual = [&](const Eigen::VectorXd& z) {
    return Eigen::VectorXd(as_vector(params.at(z).counterfactual(observed, {})) - target);
  };
  Eigen::VectorXd r = residual(x);
  double mu = 1e-3;
  for (int it = 0; it < iterations && r.lpNorm<Eigen::Infinity>() > tol * 1e-2; ++it) {
    Eigen::MatrixXd jac(r.size(), x.size());
    const double h = 1e-6;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      Eigen::VectorXd up = x, dn = x;
      up[j] += h;
      dn[j] -= h;
      jac.col(j) = (residual(up) - residual(dn)) / (2 * h);
    }
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::VectorXd g = jac.transpose() * r;
    bool improved = false;
    for (int k = 0; k < 20 && !improved; ++k) {
      Eigen::MatrixXd a = jtj;
      a.diagonal().array() += mu * (1.0 + jtj.diagonal().array());
      Eigen::VectorXd step = a.ldlt().solve(-g);
      Eigen::VectorXd cand = x + step;
      Eigen::VectorXd rc = residual(cand);
      if (rc.squaredNorm() < r.squaredNorm()) {
        x = cand;
        r = rc;
        mu = std::max(mu / 10, 1e-12);
        improved = true;
      } else {
        mu *= 10;
      }
    }
    if (!improved) break;
  }
  return x;
}

}  // namespace detail

/// Searches for two models that agree on the observed law of `g` but give
/// counterfactual distributions differing by at least `min_gap` (max-abs).
/// The first model is random; the second starts from fresh random structural
/// tables and has its noise distributions fitted to the first model's law.
inline Counterexample find_counterexample(const Graph& g, const Query& q, const CounterexampleOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(opt.seed);
  RandomModelOptions mopt;
  mopt.noise_size = opt.noise_size;
  Counterexample best;
  for (int t = 0; t < opt.trials; ++t) {
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > opt.time_budget) break;
    best.trials = t + 1;
    auto m1 = random_model_for(g, rng, mopt);
    auto target = detail::as_vector(m1.observed_law().marginal(m1.observed()));
    detail::NoiseParams params(random_model_for(g, rng, mopt));
    auto x = detail::match_observed(params, params.get(), target, m1.observed(), opt.iterations, opt.observed_tol);
    NpsemModel m2 = params.at(x);
    double diff = (detail::as_vector(m2.counterfactual(m2.observed(), {})) - target).lpNorm<Eigen::Infinity>();
    if (diff > opt.observed_tol) continue;
    double gap = cf_query(m1, q).max_abs_diff(cf_query(m2, q));
    if (gap > best.gap) {
      best.first = m1;
      best.second = m2;
      best.observed_diff = diff;
      best.gap = gap;
      best.found = gap >= opt.min_gap;
    }
    if (best.found) break;
  }
  return best;
}

}  // namespace pathpol

#endif  // PATHPOL_COUNTEREXAMPLE_HPP
