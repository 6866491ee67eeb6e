#ifndef PATHPOL_STAGES_HPP
#define PATHPOL_STAGES_HPP

#include <functional>
#include <optional>

#include "law.hpp"
#include "evaluate.hpp"

namespace pathpol {

/// One decision stage: binary treatment A_i, optional mediator M_i, outcomes W_i.
struct Stage {
  std::string treatment;
  std::optional<std::string> mediator;
  VarList outcomes;
  int reference = 0;  // a_i, the value the mediator responds to
};

/// Temporal layout W_0, A_1, M_1, W_1, ..., A_k, M_k, W_k. The objective is
/// the mean of `outcome`, which must belong to the last stage.
struct StageStructure {
  VarList baseline;
  std::vector<Stage> stages;
  std::string outcome;

  std::size_t size() const { return stages.size(); }

  /// Variables preceding A_i (0-based stage index).
  VarList history(std::size_t i) const {
    VarList h = baseline;
    for (std::size_t j = 0; j < i; ++j) {
      h.push_back(stages[j].treatment);
      if (stages[j].mediator) h.push_back(*stages[j].mediator);
      h.insert(h.end(), stages[j].outcomes.begin(), stages[j].outcomes.end());
    }
    return h;
  }

  VarList order() const { return history(stages.size()); }

  void validate() const {
    if (stages.empty()) throw std::invalid_argument("stage structure has no stages");
    auto o = order();
    VarSet seen;
    for (const auto& v : o)
      if (!seen.insert(v).second) throw std::invalid_argument("variable '" + v + "' appears twice in the stage structure");
    const auto& last = stages.back().outcomes;
    if (std::find(last.begin(), last.end(), outcome) == last.end())
      throw std::invalid_argument("outcome '" + outcome + "' is not an outcome of the last stage");
  }

  /// W_0, A_1, M_1, W_1, ... named as in the two-stage mediation graph.
  static StageStructure standard(std::size_t k, bool mediators = true, std::vector<int> refs = {}) {
    StageStructure s;
    s.baseline = {"W0"};
    for (std::size_t i = 1; i <= k; ++i) {
      Stage st;
      st.treatment = "A" + std::to_string(i);
      if (mediators) st.mediator = "M" + std::to_string(i);
      st.outcomes = {"W" + std::to_string(i)};
      st.reference = i - 1 < refs.size() ? refs[i - 1] : 1;
      s.stages.push_back(st);
    }
    s.outcome = "W" + std::to_string(k);
    return s;
  }
};

/// Stage decision rule evaluated on a (full) history assignment.
using DecisionRule = std::function<int(const Assignment&)>;

inline DecisionRule tabular_rule(const TabularPolicy& p, const Cards& cards) {
  return [p, cards](const Assignment& h) {
    std::vector<int> vals, cs;
    for (const auto& v : p.context) {
      vals.push_back(h.at(v));
      cs.push_back(Table::card_of(cards, v));
    }
    return p.apply(vals, cs);
  };
}

/// Identified stage-wise objective on a discrete law. With `freeze_mediators`
/// each p(M_i | history) is taken with every treatment at its reference
/// value (the path-specific objective); otherwise treatments follow the
/// policies everywhere (the total-effect g-computation).
class StageModel {
 public:
  StageModel(const DiscreteLaw& law, StageStructure s, bool freeze_mediators = true)
      : law_(law), s_(std::move(s)), freeze_(freeze_mediators), cards_(law.cards()) {
    s_.validate();
    for (const auto& v : s_.order())
      if (!cards_.count(v)) throw std::invalid_argument("law has no variable '" + v + "'");
    for (const auto& st : s_.stages)
      if (cards_.at(st.treatment) != 2) throw std::invalid_argument("treatment '" + st.treatment + "' is not binary");
  }

  const StageStructure& structure() const { return s_; }
  const Cards& cards() const { return cards_; }
  bool frozen() const { return freeze_; }

  /// Expected outcome when A_i = a after history h (policy values for earlier
  /// treatments), following `rules` at later stages.
  double q(std::size_t i, const Assignment& h, int a, const std::vector<DecisionRule>& rules) const {
    Assignment x = h;
    x[s_.stages[i].treatment] = a;
    return stage_sum(i, x, rules);
  }

  /// Objective value of a full set of rules.
  double value(const std::vector<DecisionRule>& rules) const {
    if (rules.size() != s_.size()) throw std::invalid_argument("one rule per stage is required");
    double total = 0;
    for_each(s_.baseline, {}, [&](const Assignment& w0) {
      double p = prob(w0, {});
      if (p > 0) total += p * q(0, w0, rules[0](w0), rules);
    });
    return total;
  }

  /// Calls f for every configuration of `vars` merged into `base`.
  void for_each(const VarList& vars, const Assignment& base, const std::function<void(const Assignment&)>& f) const {
    Assignment a = base;
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
      if (k == vars.size()) return f(a);
      for (int v = 0; v < cards_.at(vars[k]); ++v) {
        a[vars[k]] = v;
        rec(k + 1);
      }
    };
    rec(0);
  }

  /// p(x | given) from the law.
  double prob(const Assignment& x, const Assignment& given) const {
    Assignment all = given;
    VarSet vx, vg;
    for (const auto& [k, v] : x) all[k] = v, vx.insert(k);
    for (const auto& [k, v] : given) vg.insert(k);
    double num = marginal(set_union(vx, vg)).at(all);
    if (vg.empty()) return num;
    double den = marginal(vg).at(all);
    if (den <= 0) throw PositivityError("zero-mass history " + describe(given));
    return num / den;
  }

 private:
  // Σ_{m_i} p(m_i | ref history) Σ_{w_i} p(w_i | h, a, m_i) (outcome or next-stage value).
  double stage_sum(std::size_t i, const Assignment& x, const std::vector<DecisionRule>& rules) const {
    const auto& st = s_.stages[i];
    const bool last = i + 1 == s_.size();
    auto outcome_part = [&](const Assignment& xm) {
      double total = 0;
      for_each(st.outcomes, {}, [&](const Assignment& w) {
        double p = prob(w, xm);
        if (p == 0) return;
        Assignment next = xm;
        for (const auto& [k, v] : w) next[k] = v;
        if (last) {
          total += p * next.at(s_.outcome);
        } else {
          total += p * q(i + 1, next, rules[i + 1](next), rules);
        }
      });
      return total;
    };
    if (!st.mediator) return outcome_part(x);
    Assignment ref = x;
    if (freeze_)
      for (std::size_t j = 0; j <= i; ++j) ref[s_.stages[j].treatment] = s_.stages[j].reference;
    double total = 0;
    for (int m = 0; m < cards_.at(*st.mediator); ++m) {
      double pm = prob({{*st.mediator, m}}, ref);
      if (pm == 0) continue;
      Assignment xm = x;
      xm[*st.mediator] = m;
      total += pm * outcome_part(xm);
    }
    return total;
  }

  const Table& marginal(const VarSet& s) const {
    auto it = cache_.find(s);
    if (it == cache_.end()) it = cache_.emplace(s, law_.marginal(s)).first;
    return it->second;
  }

  const DiscreteLaw& law_;
  StageStructure s_;
  bool freeze_;
  Cards cards_;
  mutable std::map<VarSet, Table> cache_;
};

/// Tabular policy over the full history of every stage.
struct StagePolicies {
  std::vector<TabularPolicy> stages;

  std::vector<DecisionRule> rules(const Cards& cards) const {
    std::vector<DecisionRule> out;
    for (const auto& p : stages) out.push_back(tabular_rule(p, cards));
    return out;
  }
};

/// Backwards induction: the last stage picks 𝕀(Q(1) > Q(0)); earlier stages
/// do the same with the already optimized later rules plugged in.
inline StagePolicies backward_induction(const StageModel& m) {
  const auto& s = m.structure();
  StagePolicies out;
  out.stages.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out.stages[i].context = s.history(i);
  std::vector<DecisionRule> rules(s.size());
  for (std::size_t i = s.size(); i-- > 0;) {
    auto& pol = out.stages[i];
    pol.table.clear();
    m.for_each(pol.context, {}, [&](const Assignment& h) {
      double q0 = 0, q1 = 0;
      try {
        q0 = m.q(i, h, 0, rules);
        q1 = m.q(i, h, 1, rules);
      } catch (const PositivityError&) {
        // unreachable history: keep the default arm
      }
      pol.table.push_back(q1 > q0 ? 1 : 0);
    });
    rules[i] = tabular_rule(pol, m.cards());
  }
  return out;
}

inline StagePolicies dp_total(const DiscreteLaw& law, const StageStructure& s) {
  return backward_induction(StageModel(law, s, false));
}

inline StagePolicies dp_path_specific(const DiscreteLaw& law, const StageStructure& s) {
  for (const auto& st : s.stages)
    if (!st.mediator) throw std::invalid_argument("stage '" + st.treatment + "' has no mediator");
  return backward_induction(StageModel(law, s, true));
}

/// Best objective over every tabular policy with the given per-stage contexts.
struct ExhaustiveResult {
  double best = -INFINITY;
  StagePolicies argmax;
  std::size_t evaluated = 0;
};

inline ExhaustiveResult exhaustive_optimum(const StageModel& m, const std::vector<VarList>& contexts,
                                           std::size_t cap = std::size_t{1} << 20) {
  const auto& s = m.structure();
  if (contexts.size() != s.size()) throw std::invalid_argument("one context per stage is required");
  std::vector<std::size_t> rows;
  std::size_t bits = 0;
  for (const auto& c : contexts) {
    std::size_t r = 1;
    for (const auto& v : c) r *= static_cast<std::size_t>(m.cards().at(v));
    rows.push_back(r);
    bits += r;
  }
  if (bits >= 63 || (std::size_t{1} << bits) > cap) throw std::invalid_argument("too many tabular policies to enumerate");
  ExhaustiveResult res;
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << bits); ++code) {
    StagePolicies p;
    std::size_t bit = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      TabularPolicy t{contexts[i], {}};
      for (std::size_t r = 0; r < rows[i]; ++r) t.table.push_back(static_cast<int>((code >> bit++) & 1));
      p.stages.push_back(std::move(t));
    }
    double v = m.value(p.rules(m.cards()));
    ++res.evaluated;
    if (v > res.best) {
      res.best = v;
      res.argmax = std::move(p);
    }
  }
  return res;
}

}  // namespace pathpol

#endif  // PATHPOL_STAGES_HPP
