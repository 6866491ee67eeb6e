#ifndef PATHPOL_CLASSIFIER_HPP
#define PATHPOL_CLASSIFIER_HPP

#include <cmath>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace pathpol {

/// Weighted training example: features, label in {0,1}, nonnegative weight.
struct WeightedSample {
  std::vector<double> x;
  int label = 0;
  double weight = 0;
};

/// Feature expansion. `poly` of degree d uses every monomial of total degree
/// at most d in at most two distinct inputs (inputs that only take the values
/// 0 and 1 enter with power one). `linear` is poly of degree 1. `onehot`
/// indexes the joint configuration of integer-valued inputs, so the linear
/// classifier over it can express every tabular rule.
struct FeatureSpec {
  enum class Kind { linear, poly, onehot };
  Kind kind = Kind::linear;
  int degree = 1;
  std::vector<int> cards;  // onehot: state counts of the inputs

  static FeatureSpec linear_features() { return {}; }
  static FeatureSpec poly(int d) { return d <= 1 ? FeatureSpec{} : FeatureSpec{Kind::poly, d, {}}; }
  static FeatureSpec onehot(std::vector<int> cards) { return {Kind::onehot, 1, std::move(cards)}; }

  std::string name() const {
    switch (kind) {
      case Kind::linear:
        return "linear";
      case Kind::poly:
        return "poly" + std::to_string(degree);
      case Kind::onehot:
        return "onehot";
    }
    return {};
  }
};

struct ClassifierOptions {
  double l2 = 1e-3;
  int epochs = 200;
  double step = 1e-2;  // decays as step / sqrt(epoch)
};

/// Linear classifier over expanded, standardized features; predicts
/// 1 when the score is positive. One-hot features are used as they are and
/// without an intercept, so every configuration has its own score.
class WeightedClassifier {
 public:
  WeightedClassifier() = default;

  int predict(const std::vector<double>& x) const { return score(x) > 0 ? 1 : 0; }

  double score(const std::vector<double>& x) const {
    if (constant_) return *constant_ == 1 ? 1.0 : -1.0;
    return bias_ + beta_.dot(features(x));
  }

  const FeatureSpec& spec() const { return spec_; }
  const std::vector<double>& objective_history() const { return history_; }
  bool degenerate() const { return constant_.has_value(); }

  /// Weighted hinge loss plus L2 penalty, minimized by full-batch subgradient
  /// descent. An epoch whose step does not lower the objective is retried
  /// with half the step (up to 30 times) and otherwise skipped, so the
  /// recorded objective never increases. Samples enter through weight/Σweight,
  /// which makes duplicating the data a no-op.
  static WeightedClassifier train(const std::vector<WeightedSample>& data, const FeatureSpec& spec,
                                  const ClassifierOptions& opt = {}) {
    WeightedClassifier c;
    c.spec_ = spec;
    if (data.empty()) throw std::invalid_argument("no training samples");
    const std::size_t d = data.front().x.size();
    double wsum = 0;
    for (const auto& s : data) {
      if (s.x.size() != d) throw std::invalid_argument("samples have different feature counts");
      if (!(s.weight >= 0)) throw std::invalid_argument("negative sample weight");
      wsum += s.weight;
    }
    if (wsum <= 0) {
      std::cerr << "warning: all sample weights are zero; returning a constant classifier\n";
      c.constant_ = 0;
      return c;
    }
    c.fit_inputs(data);
    const Eigen::Index n = static_cast<Eigen::Index>(data.size());
    Eigen::MatrixXd phi(n, c.width());
    Eigen::VectorXd y(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      phi.row(i) = c.raw_features(data[i].x).transpose();
      y[i] = data[i].label == 1 ? 1.0 : -1.0;
      w[i] = data[i].weight / wsum;
    }
    const bool onehot = spec.kind == FeatureSpec::Kind::onehot;
    c.mean_ = Eigen::VectorXd::Zero(phi.cols());
    c.scale_ = Eigen::VectorXd::Ones(phi.cols());
    if (!onehot) {
      c.mean_ = phi.colwise().mean().transpose();
      c.scale_ = ((phi.rowwise() - c.mean_.transpose()).array().square().colwise().mean()).sqrt().transpose();
      for (Eigen::Index j = 0; j < c.scale_.size(); ++j)
        if (c.scale_[j] < 1e-12) c.scale_[j] = 1;
      phi = (phi.rowwise() - c.mean_.transpose()).array().rowwise() / c.scale_.transpose().array();
    }
    c.beta_ = Eigen::VectorXd::Zero(phi.cols());
    c.bias_ = 0;

    auto objective = [&](const Eigen::VectorXd& b, double b0) {
      Eigen::ArrayXd margin = 1.0 - y.array() * ((phi * b).array() + b0);
      return (w.array() * margin.max(0.0)).sum() + 0.5 * opt.l2 * b.squaredNorm();
    };
    double cur = objective(c.beta_, c.bias_);
    c.history_.push_back(cur);
    for (int t = 1; t <= opt.epochs; ++t) {
      Eigen::ArrayXd margin = 1.0 - y.array() * ((phi * c.beta_).array() + c.bias_);
      Eigen::VectorXd coef = (margin > 0).select(-(w.array() * y.array()), 0.0).matrix();
      Eigen::VectorXd gb = phi.transpose() * coef + opt.l2 * c.beta_;
      double g0 = onehot ? 0.0 : coef.sum();
      double eta = opt.step / std::sqrt(static_cast<double>(t));
      for (int k = 0; k < 30; ++k, eta /= 2) {
        Eigen::VectorXd nb = c.beta_ - eta * gb;
        double n0 = c.bias_ - eta * g0;
        double val = objective(nb, n0);
        if (val <= cur) {
          c.beta_ = std::move(nb);
          c.bias_ = n0;
          cur = val;
          break;
        }
      }
      c.history_.push_back(cur);
    }
    return c;
  }

  /// Weighted 0-1 accuracy and the mean weighted 0-1 loss (weight of the
  /// misclassified samples divided by the sample count) and its total.
  struct Metrics {
    double accuracy = 0;
    double mean_loss = 0;
    double total_loss = 0;
  };

  Metrics evaluate(const std::vector<WeightedSample>& data) const {
    Metrics m;
    double wsum = 0, wrong = 0;
    for (const auto& s : data) {
      wsum += s.weight;
      if (predict(s.x) != s.label) wrong += s.weight;
    }
    m.accuracy = wsum > 0 ? 1.0 - wrong / wsum : 1.0;
    m.total_loss = wrong;
    m.mean_loss = data.empty() ? 0.0 : wrong / static_cast<double>(data.size());
    return m;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"features", spec_.name()}, {"degree", spec_.degree}};
    if (constant_) {
      j["constant"] = *constant_;
      return j;
    }
    j["bias"] = bias_;
    j["beta"] = std::vector<double>(beta_.data(), beta_.data() + beta_.size());
    return j;
  }

 private:
  void fit_inputs(const std::vector<WeightedSample>& data) {
    const std::size_t d = data.front().x.size();
    binary_.assign(d, true);
    in_mean_.assign(d, 0.0);
    in_scale_.assign(d, 0.0);
    for (const auto& s : data)
      for (std::size_t j = 0; j < d; ++j) {
        if (s.x[j] != 0.0 && s.x[j] != 1.0) binary_[j] = false;
        in_mean_[j] += s.x[j];
      }
    for (auto& m : in_mean_) m /= static_cast<double>(data.size());
    for (const auto& s : data)
      for (std::size_t j = 0; j < d; ++j) in_scale_[j] += (s.x[j] - in_mean_[j]) * (s.x[j] - in_mean_[j]);
    for (auto& v : in_scale_) {
      v = std::sqrt(v / static_cast<double>(data.size()));
      if (v < 1e-12) v = 1;
    }
    terms_.clear();
    if (spec_.kind == FeatureSpec::Kind::onehot) {
      if (spec_.cards.size() != d) throw std::invalid_argument("onehot features need one state count per input");
      return;
    }
    const int deg = spec_.kind == FeatureSpec::Kind::poly ? spec_.degree : 1;
    auto top = [&](std::size_t j) { return binary_[j] ? 1 : deg; };
    for (std::size_t j = 0; j < d; ++j)
      for (int p = 1; p <= top(j); ++p) terms_.push_back({j, p, j, 0});
    if (deg >= 2)
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
          for (int p = 1; p <= top(i); ++p)
            for (int q = 1; q <= top(j) && p + q <= deg; ++q) terms_.push_back({i, p, j, q});
  }

  Eigen::Index width() const {
    if (spec_.kind == FeatureSpec::Kind::onehot) {
      Eigen::Index n = 1;
      for (int c : spec_.cards) n *= c;
      return n;
    }
    return static_cast<Eigen::Index>(terms_.size());
  }

  Eigen::VectorXd raw_features(const std::vector<double>& x) const {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(width());
    if (spec_.kind == FeatureSpec::Kind::onehot) {
      Eigen::Index idx = 0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        int v = static_cast<int>(x[j]);
        if (v < 0 || v >= spec_.cards[j]) throw std::out_of_range("onehot input outside its state space");
        idx = idx * spec_.cards[j] + v;
      }
      f[idx] = 1;
      return f;
    }
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      const auto& t = terms_[k];
      auto z = [&](std::size_t j) { return binary_[j] ? x[j] : (x[j] - in_mean_[j]) / in_scale_[j]; };
      double v = std::pow(z(t.i), t.p);
      if (t.q > 0) v *= std::pow(z(t.j), t.q);
      f[static_cast<Eigen::Index>(k)] = v;
    }
    return f;
  }

  Eigen::VectorXd features(const std::vector<double>& x) const {
    return ((raw_features(x) - mean_).array() / scale_.array()).matrix();
  }

  struct Term {
    std::size_t i;
    int p;
    std::size_t j;
    int q;
  };

  FeatureSpec spec_;
  std::optional<int> constant_;
  std::vector<bool> binary_;
  std::vector<double> in_mean_, in_scale_;
  std::vector<Term> terms_;
  Eigen::VectorXd mean_, scale_, beta_;
  double bias_ = 0;
  std::vector<double> history_;
};

}  // namespace pathpol

#endif  // PATHPOL_CLASSIFIER_HPP
