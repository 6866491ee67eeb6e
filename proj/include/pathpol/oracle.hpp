#ifndef PATHPOL_ORACLE_HPP
#define PATHPOL_ORACLE_HPP

#include <fstream>
#include <random>

#include "query.hpp"

namespace pathpol {

/// One vertex of a discrete NPSEM: V = f_V(pa(V), ε_V) with an independent
/// finite noise ε_V. `table[config(pa) * noise.size() + ε]` is the value of V,
/// parent configurations laid out with the last parent fastest.
struct StructuralEquation {
  std::string name;
  bool hidden = false;
  int card = 2;
  VarList parents;
  std::vector<double> noise;
  std::vector<int> table;
};

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kEnumerationCap = 1e7;

/// Where a child reads a parent's value from in a counterfactual world.
struct Source {
  enum class Kind { natural, constant, policy };
  Kind kind = Kind::natural;
  int value = 0;
  bool reference = false;  // policy: use the reference policy
};

/// Edge overrides defining a counterfactual world; edges not listed read the
/// parent's own counterfactual value.
using EdgeOverrides = std::map<Edge, Source>;

class NpsemModel {
 public:
  NpsemModel() = default;

  explicit NpsemModel(std::vector<StructuralEquation> eqs) : eqs_(std::move(eqs)) {
    for (std::size_t i = 0; i < eqs_.size(); ++i) {
      if (!index_.emplace(eqs_[i].name, i).second) throw OracleError("duplicate vertex '" + eqs_[i].name + "'");
    }
    for (const auto& e : eqs_) {
      if (e.card <= 0 || e.noise.empty()) throw OracleError("vertex '" + e.name + "' has an empty state or noise space");
      double s = 0;
      for (double p : e.noise) {
        if (p < 0) throw OracleError("negative noise probability at '" + e.name + "'");
        s += p;
      }
      if (std::abs(s - 1.0) > kNormalizationTol) throw OracleError("noise of '" + e.name + "' does not sum to one");
      std::size_t rows = e.noise.size();
      for (const auto& p : e.parents) {
        if (!index_.count(p)) throw OracleError("unknown parent '" + p + "' of '" + e.name + "'");
        rows *= static_cast<std::size_t>(eqs_[index_.at(p)].card);
      }
      if (e.table.size() != rows) throw OracleError("structural table of '" + e.name + "' has the wrong size");
      for (int v : e.table)
        if (v < 0 || v >= e.card) throw OracleError("structural table of '" + e.name + "' leaves the state space");
    }
    dag_ = build_dag();
  }

  const std::vector<StructuralEquation>& equations() const { return eqs_; }
  std::vector<StructuralEquation>& mutable_equations() { return eqs_; }
  const StructuralEquation& equation(const std::string& v) const { return eqs_.at(index_.at(v)); }
  const Graph& dag() const { return dag_; }

  VarSet observed() const {
    VarSet out;
    for (const auto& e : eqs_)
      if (!e.hidden) out.insert(e.name);
    return out;
  }
  VarSet hidden() const { return set_minus(dag_.vertices(), observed()); }

  Graph observed_graph() const { return latent_project(dag_, observed()); }

  Cards cards() const {
    Cards out;
    for (const auto& e : eqs_) out[e.name] = e.card;
    return out;
  }

  double noise_configurations() const {
    double n = 1;
    for (const auto& e : eqs_) n *= static_cast<double>(e.noise.size());
    return n;
  }

  /// Distribution of `outputs` in the counterfactual world defined by `overrides`.
  /// `contexts` lists the context variables of each policy (interest and reference).
  Table counterfactual(const VarSet& outputs, const EdgeOverrides& overrides, const PolicySet& policies = {}) const {
    if (noise_configurations() > kEnumerationCap) throw OracleError("noise space exceeds the enumeration cap");
    for (const auto& v : outputs)
      if (!index_.count(v)) throw OracleError("unknown output '" + v + "'");
    auto order = evaluation_order(policies);
    const std::size_t n = eqs_.size();

    // Per vertex, the source of each parent argument.
    std::vector<std::vector<std::pair<std::size_t, const Source*>>> inputs(n);
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& p : eqs_[i].parents) {
        auto it = overrides.find({p, eqs_[i].name});
        inputs[i].push_back({index_.at(p), it == overrides.end() ? nullptr : &it->second});
      }

    VarList out_vars(outputs.begin(), outputs.end());
    std::vector<int> out_cards;
    for (const auto& v : out_vars) out_cards.push_back(eqs_[index_.at(v)].card);
    std::vector<double> mass(Table::product(out_cards), 0.0);

    std::vector<std::size_t> eps(n, 0);
    std::vector<int> world(n, 0);
    while (true) {
      double w = 1.0;
      for (std::size_t i = 0; i < n; ++i) w *= eqs_[i].noise[eps[i]];
      if (w > 0) {
        for (std::size_t i : order) {
          const auto& e = eqs_[i];
          std::size_t row = 0;
          for (std::size_t k = 0; k < inputs[i].size(); ++k) {
            auto [p, src] = inputs[i][k];
            int val = src ? read(*src, eqs_[p].name, overrides, policies, world) : world[p];
            row = row * static_cast<std::size_t>(eqs_[p].card) + static_cast<std::size_t>(val);
          }
          world[i] = e.table[row * e.noise.size() + eps[i]];
        }
        std::size_t idx = 0;
        for (std::size_t k = 0; k < out_vars.size(); ++k)
          idx = idx * static_cast<std::size_t>(out_cards[k]) + world[index_.at(out_vars[k])];
        mass[idx] += w;
      }
      std::size_t i = n;
      while (i > 0) {
        --i;
        if (++eps[i] < eqs_[i].noise.size()) break;
        eps[i] = 0;
        if (i == 0) return Table(out_vars, out_cards, std::move(mass));
      }
      if (n == 0) return Table(out_vars, out_cards, std::move(mass));
    }
  }

  DiscreteLaw observed_law() const { return DiscreteLaw(normalized(counterfactual(observed(), {}))); }

  /// Law over observed and hidden vertices.
  DiscreteLaw full_law() const { return DiscreteLaw(normalized(counterfactual(dag_.vertices(), {}))); }

 private:
  static Table normalized(Table t) {
    double s = t.sum();
    std::vector<double> v = t.values();
    for (auto& x : v) x /= s;
    return Table(t.vars(), t.cards(), std::move(v));
  }

  Graph build_dag() const {
    VarSet vs;
    std::vector<Edge> dir;
    for (const auto& e : eqs_) {
      vs.insert(e.name);
      for (const auto& p : e.parents) dir.push_back({p, e.name});
    }
    try {
      return Graph::from_edges(vs, dir);
    } catch (const GraphError& err) {
      throw OracleError(std::string("model is not a DAG: ") + err.what());
    }
  }

  // Topological order of the model DAG with policy-context edges added.
  std::vector<std::size_t> evaluation_order(const PolicySet& policies) const {
    std::map<std::string, VarSet> ctx;
    for (const auto& [key, pol] : policies) {
      if (!index_.count(key.first)) throw OracleError("policy for unknown treatment '" + key.first + "'");
      for (const auto& w : pol.context) {
        if (!index_.count(w)) throw OracleError("unknown context variable '" + w + "'");
        ctx[key.first].insert(w);
      }
    }
    std::set<Edge> dir = dag_.directed();
    for (const auto& [a, ws] : ctx)
      for (const auto& w : ws) dir.insert({w, a});
    Graph g;
    try {
      g = Graph(dag_.statuses(), std::move(dir), {});
    } catch (const GraphError&) {
      throw OracleError("policy contexts create a directed cycle");
    }
    std::vector<std::size_t> out;
    for (const auto& v : topological_order(g)) out.push_back(index_.at(v));
    return out;
  }

  int read(const Source& src, const std::string& treatment, const EdgeOverrides& overrides, const PolicySet& policies,
           const std::vector<int>& world) const {
    switch (src.kind) {
      case Source::Kind::natural:
        return world[index_.at(treatment)];
      case Source::Kind::constant:
        return src.value;
      case Source::Kind::policy: {
        auto it = policies.find({treatment, src.reference});
        if (it == policies.end())
          throw OracleError(std::string("no ") + (src.reference ? "reference " : "") + "policy for '" + treatment + "'");
        const auto& pol = it->second;
        std::vector<int> vals, cards;
        for (const auto& w : pol.context) {
          auto o = overrides.find({w, treatment});
          vals.push_back(o == overrides.end() ? world[index_.at(w)]
                                              : read(o->second, w, overrides, policies, world));
          cards.push_back(eqs_[index_.at(w)].card);
        }
        int v = pol.apply(vals, cards);
        if (v < 0 || v >= eqs_[index_.at(treatment)].card)
          throw OracleError("policy for '" + treatment + "' returns a value outside the state space");
        return v;
      }
    }
    return 0;
  }

  std::vector<StructuralEquation> eqs_;
  std::map<std::string, std::size_t> index_;
  Graph dag_;
};

// ---- counterfactual queries --------------------------------------------------

/// Overrides for a query; treatments read along every out-edge of the policy
/// graph (including edges into other treatments that use them as context).
inline EdgeOverrides query_overrides(const NpsemModel& m, const Query& q) {
  EdgeOverrides o;
  const Graph& dag = m.dag();
  auto out_edges = [&](const std::string& a) {
    std::set<Edge> es;
    for (const auto& c : dag.children(a)) es.insert({a, c});
    for (const auto& [t, ctx] : q.contexts())
      if (ctx.count(a)) es.insert({a, t});
    return es;
  };
  switch (q.kind) {
    case Query::Kind::intervention:
      for (const auto& [a, v] : q.treatments)
        for (const auto& e : out_edges(a)) o[e] = Source{Source::Kind::constant, v.value, false};
      break;
    case Query::Kind::edge:
      for (const auto& [e, v] : q.edges) o[e] = Source{Source::Kind::constant, v.value, false};
      break;
    case Query::Kind::policy:
      for (const auto& [a, p] : q.policies)
        for (const auto& e : out_edges(a)) o[e] = Source{Source::Kind::policy, 0, false};
      break;
    case Query::Kind::path_policy:
      for (const auto& a : q.treatment_set())
        for (const auto& e : out_edges(a)) {
          if (q.alpha.count(e))
            o[e] = Source{Source::Kind::policy, 0, false};
          else if (auto it = q.reference_values.find(a); it != q.reference_values.end())
            o[e] = Source{Source::Kind::constant, it->second.value, false};
          else
            o[e] = Source{Source::Kind::policy, 0, true};
        }
      break;
  }
  return o;
}

inline Table cf_query(const NpsemModel& m, const Query& q) {
  return m.counterfactual(q.outcomes, query_overrides(m, q), q.policy_set());
}

inline Table cf_intervention(const NpsemModel& m, const std::map<std::string, Value>& a, const VarSet& y) {
  Query q;
  q.kind = Query::Kind::intervention;
  q.treatments = a;
  q.outcomes = y;
  return cf_query(m, q);
}

inline Table cf_edge(const NpsemModel& m, const std::map<Edge, Value>& edges, const VarSet& y) {
  Query q;
  q.kind = Query::Kind::edge;
  q.edges = edges;
  q.outcomes = y;
  return cf_query(m, q);
}

// ---- model files -----------------------------------------------------------------

inline nlohmann::json to_json(const NpsemModel& m) {
  nlohmann::json vs = nlohmann::json::array();
  for (const auto& e : m.equations())
    vs.push_back({{"name", e.name},
                  {"hidden", e.hidden},
                  {"card", e.card},
                  {"parents", e.parents},
                  {"noise", e.noise},
                  {"table", e.table}});
  return {{"vertices", vs}};
}

inline NpsemModel model_from_json(const nlohmann::json& j) {
  std::vector<StructuralEquation> eqs;
  for (const auto& v : j.at("vertices"))
    eqs.push_back({v.at("name").get<std::string>(), v.value("hidden", false), v.at("card").get<int>(),
                   v.value("parents", VarList{}), v.at("noise").get<std::vector<double>>(),
                   v.at("table").get<std::vector<int>>()});
  return NpsemModel(std::move(eqs));
}

inline NpsemModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  return model_from_json(nlohmann::json::parse(in));
}

// ---- random models -------------------------------------------------------------

struct RandomModelOptions {
  int min_card = 2;
  int max_card = 2;
  int hidden_card = 2;
  int noise_size = 4;  // at least the vertex cardinality
  double noise_floor = 0.05;  // noise weights are uniform on (noise_floor, 1) before normalizing
};

/// Random NPSEM over a hidden-variable DAG. Every structural function is
/// onto for each parent configuration, so the observed law is strictly positive.
inline NpsemModel random_model(const Graph& dag, const VarSet& hidden, std::mt19937_64& rng,
                               const RandomModelOptions& opt = {}) {
  std::uniform_int_distribution<int> card_dist(opt.min_card, opt.max_card);
  std::uniform_real_distribution<double> u(opt.noise_floor, 1.0);
  Cards cards;
  for (const auto& v : topological_order(dag)) cards[v] = hidden.count(v) ? opt.hidden_card : card_dist(rng);
  std::vector<StructuralEquation> eqs;
  for (const auto& v : topological_order(dag)) {
    StructuralEquation e;
    e.name = v;
    e.hidden = hidden.count(v) > 0;
    e.card = cards[v];
    e.parents = VarList(dag.parents(v).begin(), dag.parents(v).end());
    int k = std::max(opt.noise_size, e.card);
    double s = 0;
    for (int i = 0; i < k; ++i) e.noise.push_back(u(rng)), s += e.noise.back();
    for (auto& p : e.noise) p /= s;
    std::size_t rows = 1;
    for (const auto& p : e.parents) rows *= static_cast<std::size_t>(cards[p]);
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<int> vals(k);
      for (int i = 0; i < k; ++i) vals[i] = i < e.card ? i : std::uniform_int_distribution<int>(0, e.card - 1)(rng);
      std::shuffle(vals.begin(), vals.end(), rng);
      e.table.insert(e.table.end(), vals.begin(), vals.end());
    }
    eqs.push_back(std::move(e));
  }
  return NpsemModel(std::move(eqs));
}

/// Random model whose latent projection is the ADMG `g`: one hidden root per bidirected edge.
inline NpsemModel random_model_for(const Graph& g, std::mt19937_64& rng, const RandomModelOptions& opt = {}) {
  VarSet vs = g.vertices();
  VarSet hidden;
  std::vector<Edge> dir(g.directed().begin(), g.directed().end());
  for (const auto& [a, b] : g.bidirected()) {
    auto h = "U_" + a + "_" + b;
    vs.insert(h);
    hidden.insert(h);
    dir.push_back({h, a});
    dir.push_back({h, b});
  }
  return random_model(Graph::from_edges(vs, dir), hidden, rng, opt);
}

}  // namespace pathpol

#endif  // PATHPOL_ORACLE_HPP
