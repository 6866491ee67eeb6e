#ifndef PATHPOL_OWL_HPP
#define PATHPOL_OWL_HPP

#include "classifier.hpp"
#include "dataset.hpp"
#include "stages.hpp"

namespace pathpol {

/// Per-stage training diagnostics.
struct StageDiagnostics {
  std::string features;
  std::size_t samples = 0;
  double accuracy = 0;
  double mean_loss = 0;
  double total_loss = 0;
};

/// One classifier per stage, each reading its declared context.
struct LearnedPolicy {
  std::vector<VarList> contexts;
  std::vector<WeightedClassifier> classifiers;
  std::vector<StageDiagnostics> diagnostics;

  int decide(std::size_t i, const std::vector<double>& x) const { return classifiers.at(i).predict(x); }

  DecisionRule rule(std::size_t i) const {
    return [ctx = contexts.at(i), clf = classifiers.at(i)](const Assignment& h) {
      std::vector<double> x;
      for (const auto& v : ctx) x.push_back(h.at(v));
      return clf.predict(x);
    };
  }

  std::vector<DecisionRule> rules() const {
    std::vector<DecisionRule> out;
    for (std::size_t i = 0; i < classifiers.size(); ++i) out.push_back(rule(i));
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json stages = nlohmann::json::array();
    for (std::size_t i = 0; i < classifiers.size(); ++i) {
      nlohmann::json s{{"context", contexts[i]}, {"classifier", classifiers[i].to_json()}};
      if (i < diagnostics.size()) {
        const auto& d = diagnostics[i];
        s["diagnostics"] = {{"features", d.features},
                            {"samples", d.samples},
                            {"accuracy", d.accuracy},
                            {"mean_weighted_loss", d.mean_loss},
                            {"total_weighted_loss", d.total_loss}};
      }
      stages.push_back(s);
    }
    return {{"stages", stages}};
  }
};

/// Regret-weighted samples for stage i from discrete plug-in estimates: the
/// label is the arm with the larger stage value, the weight the absolute
/// difference. `downstream` holds the rules for the later stages.
inline std::vector<WeightedSample> owl_weights(const StageModel& m, std::size_t i, const Dataset& data,
                                               const VarList& context, const std::vector<DecisionRule>& downstream) {
  auto hist = m.structure().history(i);
  std::vector<WeightedSample> out;
  for (std::size_t r = 0; r < data.size(); ++r) {
    auto h = data.assignment(r, hist);
    double q0 = m.q(i, h, 0, downstream);
    double q1 = m.q(i, h, 1, downstream);
    WeightedSample s;
    s.x = data.select(r, context);
    s.label = q1 > q0 ? 1 : 0;
    s.weight = std::abs(q1 - q0);
    out.push_back(std::move(s));
  }
  return out;
}

struct DiscreteLearnOptions {
  std::vector<VarList> contexts;      // per stage; empty means the full history
  std::vector<FeatureSpec> features;  // per stage; empty means one-hot over the context
  ClassifierOptions classifier;
  double pseudo_count = 0.5;
  bool freeze_mediators = true;
};

/// Backwards outcome-weighted learning on discrete data, with the stage
/// values taken from the plug-in model `m`.
inline LearnedPolicy learn_path_policy(const Dataset& data, const StageModel& m, const DiscreteLearnOptions& opt = {}) {
  const auto& s = m.structure();
  const auto& cards = m.cards();
  if (data.size() == 0) throw std::invalid_argument("empty dataset");
  LearnedPolicy pol;
  pol.contexts.resize(s.size());
  pol.classifiers.resize(s.size());
  pol.diagnostics.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    pol.contexts[i] = i < opt.contexts.size() && !opt.contexts[i].empty() ? opt.contexts[i] : s.history(i);
  std::vector<DecisionRule> rules(s.size());
  for (std::size_t i = s.size(); i-- > 0;) {
    auto samples = owl_weights(m, i, data, pol.contexts[i], rules);
    FeatureSpec fs;
    if (i < opt.features.size()) {
      fs = opt.features[i];
    } else {
      std::vector<int> cs;
      for (const auto& v : pol.contexts[i]) cs.push_back(cards.at(v));
      fs = FeatureSpec::onehot(cs);
    }
    pol.classifiers[i] = WeightedClassifier::train(samples, fs, opt.classifier);
    auto met = pol.classifiers[i].evaluate(samples);
    pol.diagnostics[i] = {fs.name(), samples.size(), met.accuracy, met.mean_loss, met.total_loss};
    rules[i] = pol.rule(i);
  }
  return pol;
}

/// Same, with tabular plug-ins estimated from the data (smoothed empirical law).
inline LearnedPolicy learn_path_policy(const Dataset& data, const StageStructure& s, const Cards& cards,
                                       const DiscreteLearnOptions& opt = {}) {
  s.validate();
  if (data.size() == 0) throw std::invalid_argument("empty dataset");
  auto law = empirical_law(data, s.order(), cards, opt.pseudo_count);
  return learn_path_policy(data, StageModel(law, s, opt.freeze_mediators), opt);
}

}  // namespace pathpol

#endif  // PATHPOL_OWL_HPP
