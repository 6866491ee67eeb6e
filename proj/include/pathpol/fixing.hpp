#ifndef PATHPOL_FIXING_HPP
#define PATHPOL_FIXING_HPP

#include <optional>

#include "law.hpp"
#include "symbolic.hpp"

namespace pathpol {

/// V is fixable when it is random and de(V) ∩ dis(V) = {V}.
inline bool is_fixable(const Graph& g, const std::string& v) {
  if (!g.has_vertex(v) || g.is_fixed(v)) return false;
  return set_intersect(descendants(g, {v}), district(g, v)) == VarSet{v};
}

/// Removes all edges with an arrowhead into V and marks V fixed.
inline Graph fix_graph(const Graph& g, const std::string& v) {
  if (!is_fixable(g, v)) throw std::invalid_argument("'" + v + "' is not fixable");
  auto st = g.statuses();
  st[v] = Status::fixed;
  std::set<Edge> dir, bi;
  for (const auto& e : g.directed())
    if (e.second != v) dir.insert(e);
  for (const auto& e : g.bidirected())
    if (e.first != v && e.second != v) bi.insert(e);
  return Graph(std::move(st), std::move(dir), std::move(bi));
}

/// Random non-descendants of V in g.
inline VarSet random_nondescendants(const Graph& g, const std::string& v) {
  return set_minus(g.random_vertices(), descendants(g, {v}));
}

/// Numeric fixing: q / q(V | nd(V)). Returns the kernel over the remaining random vertices.
inline Kernel fix_kernel(const Graph& g, const Kernel& q, const std::string& v) {
  if (!is_fixable(g, v)) throw std::invalid_argument("'" + v + "' is not fixable");
  if (q.targets != g.random_vertices()) throw std::invalid_argument("kernel targets do not match the graph");
  VarSet nd = random_nondescendants(g, v);
  VarSet with_v = nd;
  with_v.insert(v);
  Kernel cond = condition(marginalize(q, with_v), nd);
  VarSet targets = q.targets;
  targets.erase(v);
  VarSet given = q.given;
  given.insert(v);
  return Kernel{targets, given, q.table / cond.table};
}

/// Symbolic kernel: a monomial in marginals of the observed law.
struct SymKernel {
  VarSet targets;
  VarSet given;
  sym::Monomial m;

  static SymKernel observed(const Graph& g) {
    if (!g.fixed_vertices().empty()) throw std::invalid_argument("symbolic kernels start from a graph without fixed vertices");
    return SymKernel{g.random_vertices(), {}, sym::marginal(g.random_vertices())};
  }
};

/// Symbolic fixing. When every other random vertex is a non-descendant the
/// result is a plain marginalization.
inline SymKernel fix_kernel(const Graph& g, const SymKernel& q, const std::string& v) {
  if (!is_fixable(g, v)) throw std::invalid_argument("'" + v + "' is not fixable");
  VarSet nd = random_nondescendants(g, v);
  VarSet rest = set_minus(q.targets, nd);  // de(V) among random vertices, V included
  VarSet targets = q.targets;
  targets.erase(v);
  VarSet given = q.given;
  given.insert(v);
  if (rest == VarSet{v}) return SymKernel{targets, given, sym::sum_over(q.m, {v})};
  VarSet below = rest;
  below.erase(v);
  auto marg_nd = sym::sum_over(q.m, rest);
  auto marg_nd_v = sym::sum_over(q.m, below);
  return SymKernel{targets, given, sym::mul(q.m, sym::div(marg_nd, marg_nd_v))};
}

struct FixStep {
  std::string vertex;
  Graph graph;  // graph after fixing `vertex`
  sym::Monomial kernel;
};

/// Outcome of trying to fix a set of vertices.
struct FixPlan {
  bool complete = false;
  VarList order;
  Graph graph;
  VarSet stuck;  // vertices left unfixed when incomplete
};

/// Greedily fixes the vertices of `to_fix`, always picking the fixable
/// vertex that is latest in the topological order of `g`. Since fixing one
/// vertex never makes another one unfixable, the greedy search finds a valid
/// sequence whenever one exists.
inline FixPlan plan_fixing(const Graph& g, const VarSet& to_fix) {
  g.require(to_fix);
  auto topo = topological_order(g);
  FixPlan plan{false, {}, g, {}};
  VarSet left = set_intersect(to_fix, g.random_vertices());
  while (!left.empty()) {
    std::optional<std::string> pick;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it)
      if (left.count(*it) && is_fixable(plan.graph, *it)) {
        pick = *it;
        break;
      }
    if (!pick) {
      plan.stuck = left;
      return plan;
    }
    plan.graph = fix_graph(plan.graph, *pick);
    plan.order.push_back(*pick);
    left.erase(*pick);
  }
  plan.complete = true;
  return plan;
}

/// A set S of random vertices is reachable when V∖S can be fixed.
inline bool is_reachable(const Graph& g, const VarSet& s) {
  return plan_fixing(g, set_minus(g.random_vertices(), s)).complete;
}

inline void require_sequence(const Graph& g, const VarList& order) {
  Graph cur = g;
  for (const auto& v : order) {
    if (!is_fixable(cur, v)) throw std::invalid_argument("'" + v + "' is not fixable at this point of the sequence");
    cur = fix_graph(cur, v);
  }
}

/// Applies a fixing sequence to a numeric kernel.
inline Kernel apply_fixing(const Graph& g, Kernel q, const VarList& order) {
  require_sequence(g, order);
  Graph cur = g;
  for (const auto& v : order) {
    q = fix_kernel(cur, q, v);
    cur = fix_graph(cur, v);
  }
  return q;
}

inline SymKernel apply_fixing(const Graph& g, SymKernel q, const VarList& order, std::vector<FixStep>* trace = nullptr) {
  require_sequence(g, order);
  Graph cur = g;
  for (const auto& v : order) {
    q = fix_kernel(cur, q, v);
    cur = fix_graph(cur, v);
    if (trace) trace->push_back({v, cur, q.m});
  }
  return q;
}

/// Kernel φ_{V∖S}(p; G) of a reachable set S, computed numerically.
inline Kernel reach_kernel(const Graph& g, const DiscreteLaw& law, const VarSet& s) {
  auto plan = plan_fixing(g, set_minus(g.random_vertices(), s));
  if (!plan.complete) throw std::invalid_argument("set {" + join(s) + "} is not reachable");
  return apply_fixing(g, Kernel{g.random_vertices(), {}, law.marginal(g.random_vertices())}, plan.order);
}

inline SymKernel reach_kernel(const Graph& g, const VarSet& s, std::vector<FixStep>* trace = nullptr) {
  auto plan = plan_fixing(g, set_minus(g.random_vertices(), s));
  if (!plan.complete) throw std::invalid_argument("set {" + join(s) + "} is not reachable");
  return apply_fixing(g, SymKernel::observed(g), plan.order, trace);
}

}  // namespace pathpol

#endif  // PATHPOL_FIXING_HPP
