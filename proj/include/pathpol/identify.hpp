#ifndef PATHPOL_IDENTIFY_HPP
#define PATHPOL_IDENTIFY_HPP

#include <optional>

#include "fixing.hpp"
#include "graph_dsl.hpp"
#include "query.hpp"
#include "render.hpp"

namespace pathpol {

/// Why a query is not identified. Either a district of G_{Y*} that cannot be
/// reached by fixing, or a treatment whose edges into one district are split
/// between different interventions.
struct Witness {
  enum class Kind { unreachable_district, recanting_district };

  Kind kind = Kind::unreachable_district;
  VarSet district;
  VarSet stuck;           // unreachable: vertices of V∖D that could not be fixed
  std::string treatment;  // recanting
  std::vector<Edge> first_edges;
  std::vector<Edge> other_edges;

  std::string describe() const {
    auto edges = [](const std::vector<Edge>& es) {
      std::string out;
      for (std::size_t i = 0; i < es.size(); ++i) out += (i ? ", " : "") + es[i].first + "->" + es[i].second;
      return out;
    };
    if (kind == Kind::unreachable_district)
      return "district {" + join(district) + "} is not reachable (cannot fix {" + join(stuck) + "})";
    return "treatment " + treatment + " splits its edges into district {" + join(district) + "}: {" +
           edges(first_edges) + "} vs {" + edges(other_edges) + "}";
  }

  nlohmann::json to_json() const {
    using nlohmann::json;
    auto edges = [](const std::vector<Edge>& es) {
      json a = json::array();
      for (const auto& e : es) a.push_back({{"from", e.first}, {"to", e.second}});
      return a;
    };
    if (kind == Kind::unreachable_district)
      return json{{"type", "unreachable_district"}, {"district", district}, {"stuck", stuck}};
    return json{{"type", "recanting_district"},
                {"treatment", treatment},
                {"district", district},
                {"edges", edges(first_edges)},
                {"conflicting_edges", edges(other_edges)}};
  }
};

struct DistrictTrace {
  VarSet district;
  std::vector<FixStep> steps;
};

struct IdentificationResult {
  bool identified = false;
  std::optional<Estimand> estimand;
  std::optional<Witness> witness;
  VarSet ystar;
  std::vector<DistrictTrace> trace;
};

class QueryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

using Binder = std::function<std::variant<Bindings, Witness>(const VarSet& district)>;

inline IdentificationResult compile(const Graph& g, const VarSet& ystar, const VarSet& outcomes, const Binder& binder) {
  IdentificationResult res;
  res.ystar = ystar;
  auto ds = districts(subgraph(g, ystar));

  std::vector<FixPlan> plans;
  for (const auto& d : ds) {
    auto plan = plan_fixing(g, set_minus(g.random_vertices(), d));
    if (!plan.complete) {
      res.witness = Witness{Witness::Kind::unreachable_district, d, plan.stuck, {}, {}, {}};
      return res;
    }
    plans.push_back(std::move(plan));
  }
  std::vector<Bindings> binds;
  for (const auto& d : ds) {
    auto b = binder(d);
    if (auto w = std::get_if<Witness>(&b)) {
      res.witness = *w;
      return res;
    }
    binds.push_back(std::get<Bindings>(b));
  }

  std::vector<ExprPtr> parts;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    DistrictTrace tr{ds[i], {}};
    auto k = apply_fixing(g, SymKernel::observed(g), plans[i].order, &tr.steps);
    auto allowed = set_union(ds[i], genealogy(g, ds[i], Relation::pa, true));
    auto fv = sym::free_vars(k.m);
    if (!is_subset(fv, allowed))
      throw std::logic_error("kernel for district {" + join(ds[i]) + "} depends on {" + join(set_minus(fv, allowed)) +
                             "}");
    Bindings used;
    for (const auto& [v, x] : binds[i])
      if (fv.count(v)) used[v] = x;
    parts.push_back(bind(std::move(used), sym::to_expr(k.m)));
    res.trace.push_back(std::move(tr));
  }
  res.identified = true;
  res.estimand = Estimand{sum(set_minus(ystar, outcomes), product(std::move(parts))), topological_order(g)};
  return res;
}

inline void check_observed(const Graph& g) {
  if (!g.fixed_vertices().empty()) throw QueryError("identification expects a graph without fixed vertices");
}

inline void check_outcomes(const Graph& g, const VarSet& y, const VarSet& treatments) {
  if (y.empty()) throw QueryError("no outcome variables");
  for (const auto& v : y)
    if (!g.has_vertex(v)) throw QueryError("unknown outcome '" + v + "'");
  for (const auto& v : treatments)
    if (!g.has_vertex(v)) throw QueryError("unknown treatment '" + v + "'");
  if (!set_intersect(y, treatments).empty()) throw QueryError("outcomes and treatments overlap");
}

// Edges A -> d with d in the district.
inline std::vector<Edge> edges_into(const Graph& g, const std::string& a, const VarSet& d) {
  std::vector<Edge> out;
  for (const auto& c : g.children(a))
    if (d.count(c)) out.push_back({a, c});
  return out;
}

}  // namespace detail

/// g-formula in a DAG: Π_{V∉A} p(V | pa(V)) with treatment parents set to their values, summed down to Y.
inline Estimand g_formula(const Graph& dag, const std::map<std::string, Value>& treatments, const VarSet& outcomes) {
  if (!dag.bidirected().empty()) throw QueryError("g-formula requires a DAG");
  VarSet a;
  for (const auto& [t, v] : treatments) a.insert(t);
  detail::check_outcomes(dag, outcomes, a);
  std::vector<ExprPtr> parts;
  for (const auto& v : set_minus(dag.vertices(), a)) {
    Bindings b;
    for (const auto& p : dag.parents(v))
      if (a.count(p)) b[p] = treatments.at(p).expr(p);
    parts.push_back(bind(std::move(b), factor({v}, dag.parents(v))));
  }
  auto rest = set_minus(set_minus(dag.vertices(), a), outcomes);
  return Estimand{sum(rest, product(std::move(parts))), topological_order(dag)};
}

/// Edge g-formula in a DAG: each factor sees the value assigned to each of its incoming intervened edges.
inline Estimand edge_g_formula(const Graph& dag, const std::map<Edge, Value>& edges, const VarSet& outcomes) {
  if (!dag.bidirected().empty()) throw QueryError("edge g-formula requires a DAG");
  VarSet a;
  for (const auto& [e, v] : edges) {
    if (!dag.has_directed(e.first, e.second))
      throw QueryError("edge " + e.first + " -> " + e.second + " is not in the graph");
    a.insert(e.first);
  }
  detail::check_outcomes(dag, outcomes, a);
  for (const auto& t : a)
    for (const auto& c : dag.children(t))
      if (!a.count(c) && !edges.count({t, c}))
        throw QueryError("edge " + t + " -> " + c + " of an intervened treatment has no assigned value");
  std::vector<ExprPtr> parts;
  for (const auto& v : set_minus(dag.vertices(), a)) {
    Bindings b;
    for (const auto& p : dag.parents(v))
      if (a.count(p)) b[p] = edges.at({p, v}).expr(p);
    parts.push_back(bind(std::move(b), factor({v}, dag.parents(v))));
  }
  auto rest = set_minus(set_minus(dag.vertices(), a), outcomes);
  return Estimand{sum(rest, product(std::move(parts))), topological_order(dag)};
}

/// p(Y(a)) via districts of G_{Y*}, Y* = an_{G_{V∖A}}(Y).
inline IdentificationResult id_interventional(const Graph& g, const std::map<std::string, Value>& treatments,
                                              const VarSet& outcomes) {
  detail::check_observed(g);
  VarSet a;
  for (const auto& [t, v] : treatments) a.insert(t);
  detail::check_outcomes(g, outcomes, a);
  auto ystar = ancestors(subgraph(g, set_minus(g.vertices(), a)), outcomes);
  return detail::compile(g, ystar, outcomes, [&](const VarSet& d) -> std::variant<Bindings, Witness> {
    Bindings b;
    for (const auto& p : set_intersect(genealogy(g, d, Relation::pa, true), a)) b[p] = treatments.at(p).expr(p);
    return b;
  });
}

/// Response to an edge intervention. Every edge out of an intervened
/// treatment into a non-treatment vertex must carry a value.
inline IdentificationResult id_edge(const Graph& g, const std::map<Edge, Value>& edges, const VarSet& outcomes) {
  detail::check_observed(g);
  VarSet a;
  for (const auto& [e, v] : edges) {
    if (!g.has_directed(e.first, e.second))
      throw QueryError("edge " + e.first + " -> " + e.second + " is not in the graph");
    a.insert(e.first);
  }
  detail::check_outcomes(g, outcomes, a);
  for (const auto& t : a)
    for (const auto& c : g.children(t))
      if (!a.count(c) && !edges.count({t, c}))
        throw QueryError("edge " + t + " -> " + c + " of an intervened treatment has no assigned value");
  auto ystar = ancestors(subgraph(g, set_minus(g.vertices(), a)), outcomes);
  return detail::compile(g, ystar, outcomes, [&](const VarSet& d) -> std::variant<Bindings, Witness> {
    Bindings b;
    for (const auto& t : set_intersect(genealogy(g, d, Relation::pa, true), a)) {
      auto es = detail::edges_into(g, t, d);
      const Value& first = edges.at(es.front());
      std::vector<Edge> same, other;
      for (const auto& e : es) (edges.at(e) == first ? same : other).push_back(e);
      if (!other.empty()) return Witness{Witness::Kind::recanting_district, d, {}, t, same, other};
      b[t] = first.expr(t);
    }
    return b;
  });
}

namespace detail {

// Value of treatment `a` as seen along an edge: the policy of interest or the reference.
inline ValueExpr policy_value(const Query& q, const std::string& a, bool reference) {
  auto arg = [&](const std::string& w) {
    if (!q.treatment_set().count(w)) return ValueExpr::var(w);
    bool ref = q.kind == Query::Kind::path_policy && !q.alpha.count({w, a});
    return policy_value(q, w, ref);
  };
  if (reference) {
    if (auto it = q.reference_values.find(a); it != q.reference_values.end()) return it->second.expr(a);
    auto it = q.reference_policies.find(a);
    if (it == q.reference_policies.end()) throw QueryError("no reference for treatment '" + a + "'");
    std::vector<ValueExpr> args;
    for (const auto& w : it->second.context) args.push_back(arg(w));
    return ValueExpr::policy(a, std::move(args), true);
  }
  auto it = q.policies.find(a);
  if (it == q.policies.end()) throw QueryError("no policy for treatment '" + a + "'");
  std::vector<ValueExpr> args;
  for (const auto& w : it->second.context) args.push_back(arg(w));
  return ValueExpr::policy(a, std::move(args), false);
}

inline Graph checked_policy_graph(const Graph& g, const Query& q) {
  for (const auto& [a, ctx] : q.contexts()) {
    if (!g.has_vertex(a)) throw QueryError("unknown treatment '" + a + "'");
    for (const auto& w : ctx)
      if (!g.has_vertex(w)) throw QueryError("unknown context variable '" + w + "'");
  }
  try {
    return policy_graph(g, q.contexts());
  } catch (const GraphError& e) {
    throw QueryError(e.what());
  }
}

}  // namespace detail

/// Response to deterministic policies f_A(W_A).
inline IdentificationResult id_policy(const Graph& g, const Query& q) {
  detail::check_observed(g);
  auto a = q.treatment_set();
  detail::check_outcomes(g, q.outcomes, a);
  auto gf = detail::checked_policy_graph(g, q);
  auto ystar = set_minus(ancestors(gf, q.outcomes), a);
  return detail::compile(g, ystar, q.outcomes, [&](const VarSet& d) -> std::variant<Bindings, Witness> {
    Bindings b;
    for (const auto& t : set_intersect(genealogy(g, d, Relation::pa, true), a))
      b[t] = detail::policy_value(q, t, false);
    return b;
  });
}

/// Response to a path-specific policy: edges in alpha follow f_A, the other
/// edges out of each treatment follow the reference f'_A (policy or constant).
inline IdentificationResult id_path_policy(const Graph& g, const Query& q) {
  detail::check_observed(g);
  auto a = q.treatment_set();
  detail::check_outcomes(g, q.outcomes, a);
  for (const auto& t : a) {
    if (!q.policies.count(t)) throw QueryError("no policy for treatment '" + t + "'");
    if (!q.reference_values.count(t) && !q.reference_policies.count(t))
      throw QueryError("no reference for treatment '" + t + "'");
  }
  auto gf = detail::checked_policy_graph(g, q);
  for (const auto& e : q.alpha) {
    if (!gf.has_directed(e.first, e.second))
      throw QueryError("edge " + e.first + " -> " + e.second + " is not in the policy graph");
    if (!q.policies.count(e.first)) throw QueryError("alpha edge out of '" + e.first + "' which has no policy");
  }
  auto ystar = set_minus(ancestors(gf, q.outcomes), a);
  return detail::compile(g, ystar, q.outcomes, [&](const VarSet& d) -> std::variant<Bindings, Witness> {
    Bindings b;
    for (const auto& t : set_intersect(genealogy(g, d, Relation::pa, true), a)) {
      std::vector<Edge> in, out;
      for (const auto& e : detail::edges_into(g, t, d)) (q.alpha.count(e) ? in : out).push_back(e);
      if (!in.empty() && !out.empty()) return Witness{Witness::Kind::recanting_district, d, {}, t, in, out};
      b[t] = detail::policy_value(q, t, in.empty());
    }
    return b;
  });
}

inline IdentificationResult identify(const Graph& g, const Query& q) {
  switch (q.kind) {
    case Query::Kind::intervention:
      return id_interventional(g, q.treatments, q.outcomes);
    case Query::Kind::edge:
      return id_edge(g, q.edges, q.outcomes);
    case Query::Kind::policy:
      return id_policy(g, q);
    case Query::Kind::path_policy:
      return id_path_policy(g, q);
  }
  throw QueryError("unknown query kind");
}

inline nlohmann::json trace_json(const IdentificationResult& r, const VarList& order) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& d : r.trace) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : d.steps)
      steps.push_back({{"fix", s.vertex},
                       {"graph", to_dsl(s.graph)},
                       {"kernel", render(sym::to_expr(s.kernel), order)}});
    out.push_back({{"district", d.district}, {"steps", steps}});
  }
  return out;
}

}  // namespace pathpol

#endif  // PATHPOL_IDENTIFY_HPP
