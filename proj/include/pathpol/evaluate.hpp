#ifndef PATHPOL_EVALUATE_HPP
#define PATHPOL_EVALUATE_HPP

#include "estimand.hpp"
#include "law.hpp"

namespace pathpol {

/// Deterministic tabular policy: a treatment value for each joint
/// configuration of `context`, row-major with the last variable fastest.
struct TabularPolicy {
  VarList context;
  std::vector<int> table;

  int apply(const std::vector<int>& values, const std::vector<int>& cards) const {
    if (values.size() != context.size()) throw std::invalid_argument("policy arity mismatch");
    std::size_t idx = 0;
    for (std::size_t i = 0; i < values.size(); ++i) idx = idx * static_cast<std::size_t>(cards[i]) + values[i];
    if (idx >= table.size()) throw std::out_of_range("policy table too short");
    return table[idx];
  }

  std::size_t rows(const Cards& cards) const {
    std::size_t n = 1;
    for (const auto& v : context) n *= static_cast<std::size_t>(Table::card_of(cards, v));
    return n;
  }
};

/// Policies keyed by (treatment, is_reference).
using PolicySet = std::map<std::pair<std::string, bool>, TabularPolicy>;

class Evaluator {
 public:
  Evaluator(const DiscreteLaw& law, const PolicySet& policies) : law_(law), policies_(policies), cards_(law.cards()) {}

  double value(const ExprPtr& e, Assignment& a) const {
    return std::visit(overloaded{
                          [&](const FactorNode& f) { return factor_value(f, a); },
                          [&](const ProductNode& p) {
                            double out = 1.0;
                            for (const auto& c : p.children) {
                              out *= value(c, a);
                              if (out == 0.0) break;
                            }
                            return out;
                          },
                          [&](const SumNode& s) { return sum_value(s, a); },
                          [&](const QuotientNode& q) {
                            double d = value(q.denominator, a);
                            if (d == 0.0) throw PositivityError("zero denominator at " + describe(a));
                            return value(q.numerator, a) / d;
                          },
                          [&](const BindNode& b) {
                            std::vector<std::pair<std::string, int>> vals;
                            for (const auto& [v, x] : b.bindings) vals.emplace_back(v, resolve(x, a));
                            Assignment inner = a;
                            for (const auto& [v, x] : vals) inner[v] = x;
                            return value(b.child, inner);
                          },
                      },
                      e->node);
  }

  int resolve(const ValueExpr& x, const Assignment& a) const {
    switch (x.kind) {
      case ValueExpr::Kind::var: {
        auto it = a.find(x.name);
        if (it == a.end()) throw std::logic_error("unbound variable '" + x.name + "' in value expression");
        return it->second;
      }
      case ValueExpr::Kind::constant:
        return x.value;
      case ValueExpr::Kind::policy: {
        auto it = policies_.find({x.name, x.reference});
        if (it == policies_.end())
          throw std::invalid_argument(std::string("no ") + (x.reference ? "reference " : "") + "policy for '" +
                                      x.name + "'");
        const auto& pol = it->second;
        if (pol.context.size() != x.args.size())
          throw std::invalid_argument("policy for '" + x.name + "' has the wrong context");
        std::vector<int> vals, cards;
        for (std::size_t i = 0; i < x.args.size(); ++i) {
          vals.push_back(resolve(x.args[i], a));
          cards.push_back(Table::card_of(cards_, pol.context[i]));
        }
        return pol.apply(vals, cards);
      }
    }
    return 0;
  }

 private:
  const Table& marginal(const VarSet& s) const {
    auto it = cache_.find(s);
    if (it == cache_.end()) it = cache_.emplace(s, law_.marginal(s)).first;
    return it->second;
  }

  double factor_value(const FactorNode& f, const Assignment& a) const {
    if (f.head.empty()) return 1.0;
    double num = marginal(set_union(f.head, f.given)).at(a);
    if (f.given.empty()) return num;
    double den = marginal(f.given).at(a);
    if (den == 0.0) throw PositivityError("zero-mass conditioning configuration " + describe(a));
    return num / den;
  }

  double sum_value(const SumNode& s, Assignment& a) const {
    VarList over(s.over.begin(), s.over.end());
    std::vector<int> cards;
    for (const auto& v : over) cards.push_back(Table::card_of(cards_, v));
    Assignment inner = a;
    std::vector<int> st(over.size(), 0);
    for (std::size_t i = 0; i < over.size(); ++i) inner[over[i]] = 0;
    double total = 0.0;
    while (true) {
      total += value(s.child, inner);
      std::size_t i = over.size();
      while (i > 0) {
        --i;
        if (++st[i] < cards[i]) {
          inner[over[i]] = st[i];
          break;
        }
        st[i] = 0;
        inner[over[i]] = 0;
        if (i == 0) return total;
      }
      if (over.empty()) return total;
    }
  }

  const DiscreteLaw& law_;
  const PolicySet& policies_;
  Cards cards_;
  mutable std::map<VarSet, Table> cache_;
};

/// Tabulates an estimand over its free variables.
inline Table evaluate_table(const ExprPtr& e, const DiscreteLaw& law, const PolicySet& policies = {}) {
  Evaluator ev(law, policies);
  return Table::tabulate(free_vars(e), law.cards(), [&](const Assignment& a) {
    Assignment copy = a;
    return ev.value(e, copy);
  });
}

/// Evaluates an estimand as a joint distribution over its free variables and
/// checks that the result is normalized.
inline Kernel evaluate(const Estimand& e, const DiscreteLaw& law, const PolicySet& policies = {},
                       double tol = kEquivalenceTol) {
  Kernel k{free_vars(e.root), {}, evaluate_table(e.root, law, policies)};
  double err = k.normalization_error();
  if (!(err <= tol))
    throw std::logic_error("estimand evaluates to an unnormalized distribution (deviation " + std::to_string(err) +
                           ")");
  return k;
}

}  // namespace pathpol

#endif  // PATHPOL_EVALUATE_HPP
