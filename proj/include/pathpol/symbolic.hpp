#ifndef PATHPOL_SYMBOLIC_HPP
#define PATHPOL_SYMBOLIC_HPP

#include <algorithm>
#include <functional>
#include <numeric>

#include "estimand.hpp"

namespace pathpol::sym {

struct Monomial;

/// p(S) of the observed law, or Σ_{bound} body.
struct Atom {
  VarSet vars;
  std::shared_ptr<const Monomial> body;

  bool is_sum() const { return body != nullptr; }
};

/// Product of atoms with integer exponents. Atoms are identified by a
/// canonical key, so equal atoms cancel.
struct Monomial {
  std::map<std::string, std::pair<Atom, int>> terms;

  bool is_one() const { return terms.empty(); }
};

std::string key(const Monomial& m);
VarSet free_vars(const Monomial& m);

inline std::string key(const Atom& a) {
  if (!a.is_sum()) return "p(" + join(a.vars) + ")";
  return "S{" + join(a.vars) + "}[" + key(*a.body) + "]";
}

inline VarSet free_vars(const Atom& a) { return a.is_sum() ? set_minus(free_vars(*a.body), a.vars) : a.vars; }

inline std::string key(const Monomial& m) {
  std::string out;
  for (const auto& [k, t] : m.terms) out += k + "^" + std::to_string(t.second) + ";";
  return out;
}

inline VarSet free_vars(const Monomial& m) {
  VarSet out;
  for (const auto& [k, t] : m.terms) out = set_union(out, free_vars(t.first));
  return out;
}

inline void add(Monomial& m, const Atom& a, int exp) {
  if (exp == 0) return;
  if (!a.is_sum() && a.vars.empty()) return;
  auto k = key(a);
  auto it = m.terms.find(k);
  if (it == m.terms.end()) {
    m.terms.emplace(k, std::make_pair(a, exp));
  } else if ((it->second.second += exp) == 0) {
    m.terms.erase(it);
  }
}

inline Monomial marginal(const VarSet& s) {
  Monomial m;
  add(m, Atom{s, nullptr}, 1);
  return m;
}

inline Monomial mul(Monomial a, const Monomial& b) {
  for (const auto& [k, t] : b.terms) add(a, t.first, t.second);
  return a;
}

inline Monomial inv(Monomial a) {
  for (auto& [k, t] : a.terms) t.second = -t.second;
  return a;
}

inline Monomial div(const Monomial& a, const Monomial& b) { return mul(a, inv(b)); }

/// Σ_{xs} m. A variable carried by a single atom with exponent one is summed
/// into that atom; the rest become explicit sum atoms, one per group of atoms
/// linked through shared summation variables.
inline Monomial sum_over(Monomial m, const VarSet& xs) {
  VarSet pending = xs;
  bool progress = true;
  while (progress && !pending.empty()) {
    progress = false;
    for (const auto& x : pending) {
      std::vector<std::string> with;
      for (const auto& [k, t] : m.terms)
        if (free_vars(t.first).count(x)) with.push_back(k);
      if (with.empty()) throw std::logic_error("summing '" + x + "' which the expression does not depend on");
      if (with.size() != 1 || m.terms.at(with[0]).second != 1) continue;
      Atom a = m.terms.at(with[0]).first;
      m.terms.erase(with[0]);
      if (a.is_sum()) {
        VarSet bound = a.vars;
        bound.insert(x);
        m = mul(std::move(m), sum_over(*a.body, bound));
      } else {
        VarSet rest = a.vars;
        rest.erase(x);
        add(m, Atom{rest, nullptr}, 1);
      }
      pending.erase(x);
      progress = true;
      break;
    }
  }
  if (pending.empty()) return m;

  // Group the remaining atoms by connectivity through pending variables.
  std::vector<std::string> keys;
  for (const auto& [k, t] : m.terms)
    if (!set_intersect(free_vars(t.first), pending).empty()) keys.push_back(k);
  std::vector<std::size_t> parent(keys.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
    return parent[i] == i ? i : parent[i] = find(parent[i]);
  };
  for (std::size_t i = 0; i < keys.size(); ++i)
    for (std::size_t j = i + 1; j < keys.size(); ++j) {
      auto fi = set_intersect(free_vars(m.terms.at(keys[i]).first), pending);
      auto fj = set_intersect(free_vars(m.terms.at(keys[j]).first), pending);
      if (!set_intersect(fi, fj).empty()) parent[find(i)] = find(j);
    }
  std::map<std::size_t, Monomial> groups;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto& [a, e] = m.terms.at(keys[i]);
    add(groups[find(i)], a, e);
  }
  for (const auto& k : keys) m.terms.erase(k);
  for (auto& [root, body] : groups) {
    VarSet bound = set_intersect(free_vars(body), pending);
    add(m, Atom{bound, std::make_shared<const Monomial>(std::move(body))}, 1);
  }
  return m;
}

ExprPtr to_expr(const Monomial& m);

inline ExprPtr atom_expr(const Atom& a) {
  if (a.is_sum()) return pathpol::sum(a.vars, to_expr(*a.body));
  return factor(a.vars);
}

/// Converts to an estimand tree, pairing each denominator marginal p(D)
/// with the smallest numerator marginal p(N), D ⊂ N, into p(N∖D | D).
inline ExprPtr to_expr(const Monomial& m) {
  // Σ_B f / p(D) with D ∩ B = ∅ is written as Σ_B [f / p(D)].
  std::vector<std::string> sums, outer;
  for (const auto& [k, t] : m.terms)
    if (t.first.is_sum() && t.second > 0) sums.push_back(k);
  if (sums.size() == 1 && m.terms.at(sums[0]).second == 1) {
    const Atom& s = m.terms.at(sums[0]).first;
    for (const auto& [k, t] : m.terms)
      if (!t.first.is_sum() && t.second < 0 && set_intersect(t.first.vars, s.vars).empty()) outer.push_back(k);
    if (!outer.empty()) {
      Monomial body = *s.body;
      Monomial rest = m;
      for (const auto& k : outer) {
        add(body, m.terms.at(k).first, m.terms.at(k).second);
        rest.terms.erase(k);
      }
      rest.terms.erase(sums[0]);
      add(rest, Atom{s.vars, std::make_shared<const Monomial>(std::move(body))}, 1);
      return to_expr(rest);
    }
  }

  std::vector<const Atom*> nums, dens;
  for (const auto& [k, t] : m.terms)
    for (int i = 0; i < std::abs(t.second); ++i) (t.second > 0 ? nums : dens).push_back(&t.first);

  std::stable_sort(dens.begin(), dens.end(), [](const Atom* a, const Atom* b) {
    if (a->is_sum() != b->is_sum()) return !a->is_sum();
    return a->vars.size() > b->vars.size();
  });

  std::vector<ExprPtr> top, bottom;
  std::vector<bool> used(nums.size(), false);
  for (const Atom* d : dens) {
    std::size_t best = nums.size();
    if (!d->is_sum()) {
      for (std::size_t i = 0; i < nums.size(); ++i) {
        if (used[i] || nums[i]->is_sum()) continue;
        const auto& n = nums[i]->vars;
        if (n.size() <= d->vars.size() || !is_subset(d->vars, n)) continue;
        if (best == nums.size() || n.size() < nums[best]->vars.size()) best = i;
      }
    }
    if (best == nums.size()) {
      bottom.push_back(atom_expr(*d));
    } else {
      used[best] = true;
      top.push_back(factor(set_minus(nums[best]->vars, d->vars), d->vars));
    }
  }
  for (std::size_t i = 0; i < nums.size(); ++i)
    if (!used[i]) top.push_back(atom_expr(*nums[i]));

  ExprPtr num = top.empty() ? one() : product(std::move(top));
  if (bottom.empty()) return num;
  return quotient(num, product(std::move(bottom)));
}

}  // namespace pathpol::sym

#endif  // PATHPOL_SYMBOLIC_HPP
