#ifndef PATHPOL_GRAPH_HPP
#define PATHPOL_GRAPH_HPP

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pathpol {

using VarSet = std::set<std::string>;
using VarList = std::vector<std::string>;
using Edge = std::pair<std::string, std::string>;

enum class Status { random, fixed };

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string join(const VarList& xs, const std::string& sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

inline std::string join(const VarSet& xs, const std::string& sep = ",") {
  return join(VarList(xs.begin(), xs.end()), sep);
}

inline VarSet set_union(const VarSet& a, const VarSet& b) {
  VarSet out = a;
  out.insert(b.begin(), b.end());
  return out;
}

inline VarSet set_minus(const VarSet& a, const VarSet& b) {
  VarSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

inline VarSet set_intersect(const VarSet& a, const VarSet& b) {
  VarSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

inline bool is_subset(const VarSet& a, const VarSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline Edge undirected_key(const std::string& a, const std::string& b) {
  return a < b ? Edge{a, b} : Edge{b, a};
}

/// Acyclic directed mixed graph with optional fixed (conditioned) vertices.
///
/// Covers DAGs (no bidirected edges), ADMGs and CADMGs. Values are
/// immutable once constructed; every surgery returns a new graph.
/// Construction validates acyclicity, self-loops, unknown endpoints and the
/// CADMG rule that fixed vertices carry no incoming arrowheads.
class Graph {
 public:
  Graph() = default;

  Graph(std::map<std::string, Status> vertices, std::set<Edge> directed, std::set<Edge> bidirected)
      : vertices_(std::move(vertices)), directed_(std::move(directed)) {
    for (const auto& [a, b] : bidirected) bidirected_.insert(undirected_key(a, b));
    index();
    validate();
  }

  static Graph from_edges(const VarSet& vertices, const std::vector<Edge>& directed,
                          const std::vector<Edge>& bidirected = {}) {
    std::map<std::string, Status> vs;
    for (const auto& v : vertices) vs[v] = Status::random;
    for (const auto& [a, b] : directed) vs.emplace(a, Status::random), vs.emplace(b, Status::random);
    for (const auto& [a, b] : bidirected) vs.emplace(a, Status::random), vs.emplace(b, Status::random);
    return Graph(std::move(vs), std::set<Edge>(directed.begin(), directed.end()),
                 std::set<Edge>(bidirected.begin(), bidirected.end()));
  }

  const std::map<std::string, Status>& statuses() const { return vertices_; }
  const std::set<Edge>& directed() const { return directed_; }
  /// Bidirected edges, each stored once with endpoints in lexicographic order.
  const std::set<Edge>& bidirected() const { return bidirected_; }

  VarSet vertices() const {
    VarSet out;
    for (const auto& [v, s] : vertices_) out.insert(v);
    return out;
  }
  VarSet random_vertices() const { return with_status(Status::random); }
  VarSet fixed_vertices() const { return with_status(Status::fixed); }

  bool has_vertex(const std::string& v) const { return vertices_.count(v) > 0; }
  bool is_fixed(const std::string& v) const { return status(v) == Status::fixed; }
  Status status(const std::string& v) const {
    auto it = vertices_.find(v);
    if (it == vertices_.end()) throw GraphError("unknown vertex '" + v + "'");
    return it->second;
  }

  bool has_directed(const std::string& a, const std::string& b) const { return directed_.count({a, b}) > 0; }
  bool has_bidirected(const std::string& a, const std::string& b) const {
    return bidirected_.count(undirected_key(a, b)) > 0;
  }

  const VarSet& parents(const std::string& v) const { return lookup(pa_, v); }
  const VarSet& children(const std::string& v) const { return lookup(ch_, v); }
  const VarSet& siblings(const std::string& v) const { return lookup(sib_, v); }

  void require(const VarSet& s) const {
    for (const auto& v : s)
      if (!has_vertex(v)) throw GraphError("unknown vertex '" + v + "'");
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.vertices_ == b.vertices_ && a.directed_ == b.directed_ && a.bidirected_ == b.bidirected_;
  }

 private:
  VarSet with_status(Status s) const {
    VarSet out;
    for (const auto& [v, st] : vertices_)
      if (st == s) out.insert(v);
    return out;
  }

  const VarSet& lookup(const std::map<std::string, VarSet>& m, const std::string& v) const {
    auto it = m.find(v);
    if (it == m.end()) throw GraphError("unknown vertex '" + v + "'");
    return it->second;
  }

  void index() {
    for (const auto& [v, s] : vertices_) pa_[v], ch_[v], sib_[v];
    for (const auto& [a, b] : directed_) {
      if (!has_vertex(a) || !has_vertex(b)) throw GraphError("edge " + a + " -> " + b + " has unknown endpoint");
      if (a == b) throw GraphError("self-loop on '" + a + "'");
      pa_[b].insert(a);
      ch_[a].insert(b);
    }
    for (const auto& [a, b] : bidirected_) {
      if (!has_vertex(a) || !has_vertex(b)) throw GraphError("edge " + a + " <-> " + b + " has unknown endpoint");
      if (a == b) throw GraphError("self-loop on '" + a + "'");
      sib_[a].insert(b);
      sib_[b].insert(a);
    }
  }

  void validate() const {
    for (const auto& [v, s] : vertices_) {
      if (s != Status::fixed) continue;
      if (!pa_.at(v).empty()) throw GraphError("fixed vertex '" + v + "' has incoming directed edges");
      if (!sib_.at(v).empty()) throw GraphError("fixed vertex '" + v + "' has bidirected edges");
    }
    // Kahn's algorithm; leftover vertices lie on a directed cycle.
    std::map<std::string, std::size_t> indeg;
    for (const auto& [v, s] : vertices_) indeg[v] = pa_.at(v).size();
    std::vector<std::string> stack;
    for (const auto& [v, d] : indeg)
      if (d == 0) stack.push_back(v);
    std::size_t seen = 0;
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      ++seen;
      for (const auto& c : ch_.at(v))
        if (--indeg[c] == 0) stack.push_back(c);
    }
    if (seen != vertices_.size()) throw GraphError("graph has a directed cycle");
  }

  std::map<std::string, Status> vertices_;
  std::set<Edge> directed_;
  std::set<Edge> bidirected_;
  std::map<std::string, VarSet> pa_, ch_, sib_;
};

enum class Relation { pa, ch, an, de, sib, nd, dis };

inline VarSet ancestors(const Graph& g, const VarSet& s) {
  g.require(s);
  VarSet out = s;
  std::vector<std::string> todo(s.begin(), s.end());
  while (!todo.empty()) {
    auto v = todo.back();
    todo.pop_back();
    for (const auto& p : g.parents(v))
      if (out.insert(p).second) todo.push_back(p);
  }
  return out;
}

inline VarSet descendants(const Graph& g, const VarSet& s) {
  g.require(s);
  VarSet out = s;
  std::vector<std::string> todo(s.begin(), s.end());
  while (!todo.empty()) {
    auto v = todo.back();
    todo.pop_back();
    for (const auto& c : g.children(v))
      if (out.insert(c).second) todo.push_back(c);
  }
  return out;
}

/// Bidirected-connected component of `v`. Fixed vertices form their own singleton.
inline VarSet district(const Graph& g, const std::string& v) {
  VarSet out{v};
  std::vector<std::string> todo{v};
  while (!todo.empty()) {
    auto u = todo.back();
    todo.pop_back();
    for (const auto& s : g.siblings(u))
      if (out.insert(s).second) todo.push_back(s);
  }
  return out;
}

/// Genealogic set of `s`, taken as the union over members. `an` and `de` are
/// reflexive. With `strict`, members of `s` are removed (pa^s and friends).
inline VarSet genealogy(const Graph& g, const VarSet& s, Relation rel, bool strict = false) {
  g.require(s);
  VarSet out;
  switch (rel) {
    case Relation::pa:
      for (const auto& v : s) out = set_union(out, g.parents(v));
      break;
    case Relation::ch:
      for (const auto& v : s) out = set_union(out, g.children(v));
      break;
    case Relation::sib:
      for (const auto& v : s) out = set_union(out, g.siblings(v));
      break;
    case Relation::an:
      out = ancestors(g, s);
      break;
    case Relation::de:
      out = descendants(g, s);
      break;
    case Relation::nd:
      out = set_minus(g.vertices(), descendants(g, s));
      break;
    case Relation::dis:
      for (const auto& v : s) out = set_union(out, district(g, v));
      break;
  }
  return strict ? set_minus(out, s) : out;
}

/// Districts of the random vertices, ordered by their smallest member.
inline std::vector<VarSet> districts(const Graph& g) {
  std::vector<VarSet> out;
  VarSet seen;
  for (const auto& v : g.random_vertices()) {
    if (seen.count(v)) continue;
    auto d = district(g, v);
    seen.insert(d.begin(), d.end());
    out.push_back(std::move(d));
  }
  return out;
}

inline Graph subgraph(const Graph& g, const VarSet& keep) {
  g.require(keep);
  std::map<std::string, Status> vs;
  for (const auto& v : keep) vs[v] = g.status(v);
  std::set<Edge> dir, bi;
  for (const auto& e : g.directed())
    if (keep.count(e.first) && keep.count(e.second)) dir.insert(e);
  for (const auto& e : g.bidirected())
    if (keep.count(e.first) && keep.count(e.second)) bi.insert(e);
  return Graph(std::move(vs), std::move(dir), std::move(bi));
}

/// Kahn's algorithm, always emitting the lexicographically smallest available vertex.
inline VarList topological_order(const Graph& g) {
  std::map<std::string, std::size_t> indeg;
  VarSet ready;
  for (const auto& v : g.vertices()) {
    indeg[v] = g.parents(v).size();
    if (indeg[v] == 0) ready.insert(v);
  }
  VarList out;
  while (!ready.empty()) {
    auto v = *ready.begin();
    ready.erase(ready.begin());
    out.push_back(v);
    for (const auto& c : g.children(v))
      if (--indeg[c] == 0) ready.insert(c);
  }
  return out;
}

/// Projects a DAG over observed ∪ hidden onto the observed vertices.
inline Graph latent_project(const Graph& dag, const VarSet& observed) {
  if (!dag.bidirected().empty()) throw GraphError("latent projection expects a DAG");
  dag.require(observed);
  const VarSet hidden = set_minus(dag.vertices(), observed);

  // Observed vertices reachable from `start` by directed paths whose
  // intermediate vertices are all hidden.
  auto reach = [&](const std::string& start) {
    VarSet hits, seen{start};
    std::vector<std::string> todo{start};
    while (!todo.empty()) {
      auto v = todo.back();
      todo.pop_back();
      for (const auto& c : dag.children(v)) {
        if (!seen.insert(c).second) continue;
        if (hidden.count(c))
          todo.push_back(c);
        else
          hits.insert(c);
      }
    }
    return hits;
  };

  std::map<std::string, Status> vs;
  for (const auto& v : observed) vs[v] = dag.status(v);
  std::set<Edge> dir, bi;
  for (const auto& a : observed)
    for (const auto& b : reach(a)) dir.insert({a, b});
  // A collider-free path with arrowheads at both ends has a single hidden source.
  for (const auto& h : hidden) {
    auto hits = reach(h);
    for (auto i = hits.begin(); i != hits.end(); ++i)
      for (auto j = std::next(i); j != hits.end(); ++j) bi.insert({*i, *j});
  }
  return Graph(std::move(vs), std::move(dir), std::move(bi));
}

/// Graph G_{f_A}: all edges into each treatment are removed and replaced by
/// directed edges from its declared context set.
inline Graph policy_graph(const Graph& g, const std::map<std::string, VarSet>& contexts) {
  std::set<Edge> dir, bi;
  for (const auto& [a, b] : g.directed())
    if (!contexts.count(b)) dir.insert({a, b});
  for (const auto& [a, b] : g.bidirected())
    if (!contexts.count(a) && !contexts.count(b)) bi.insert({a, b});
  for (const auto& [treatment, ctx] : contexts) {
    g.require({treatment});
    g.require(ctx);
    for (const auto& w : ctx) {
      if (w == treatment) throw GraphError("treatment '" + treatment + "' lists itself as context");
      dir.insert({w, treatment});
    }
  }
  try {
    return Graph(g.statuses(), std::move(dir), std::move(bi));
  } catch (const GraphError&) {
    throw GraphError("policy contexts create a directed cycle (a context variable does not precede its treatment)");
  }
}

}  // namespace pathpol

#endif  // PATHPOL_GRAPH_HPP
