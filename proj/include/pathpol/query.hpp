#ifndef PATHPOL_QUERY_HPP
#define PATHPOL_QUERY_HPP

#include <cctype>
#include <fstream>

#include "evaluate.hpp"

namespace pathpol {

/// A treatment value with its display label ("a", "a'", "a1").
struct Value {
  int value = 0;
  std::string label;

  ValueExpr expr(const std::string& var) const {
    if (!label.empty()) return ValueExpr::constant(value, label);
    std::string l;
    for (char c : var) l += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ValueExpr::constant(value, l + "=" + std::to_string(value));
  }

  friend bool operator==(const Value& a, const Value& b) { return a.value == b.value; }
};

/// Deterministic policy declaration; `table` may be empty when only
/// identification is requested.
struct PolicyDecl {
  VarList context;
  std::vector<int> table;

  TabularPolicy tabular() const { return TabularPolicy{context, table}; }
};

/// One of the four counterfactual query kinds.
struct Query {
  enum class Kind { intervention, edge, policy, path_policy };

  Kind kind = Kind::intervention;
  VarSet outcomes;
  std::map<std::string, Value> treatments;     // intervention
  std::map<Edge, Value> edges;                 // edge intervention
  std::map<std::string, PolicyDecl> policies;  // policy, path_policy (policies of interest)
  std::set<Edge> alpha;                        // path_policy: edges carrying the policy of interest
  std::map<std::string, Value> reference_values;
  std::map<std::string, PolicyDecl> reference_policies;

  /// Treatment vertices of the query.
  VarSet treatment_set() const {
    VarSet out;
    switch (kind) {
      case Kind::intervention:
        for (const auto& [a, v] : treatments) out.insert(a);
        break;
      case Kind::edge:
        for (const auto& [e, v] : edges) out.insert(e.first);
        break;
      case Kind::policy:
      case Kind::path_policy:
        for (const auto& [a, p] : policies) out.insert(a);
        for (const auto& [a, v] : reference_values) out.insert(a);
        for (const auto& [a, p] : reference_policies) out.insert(a);
        break;
    }
    return out;
  }

  /// Context sets used to build the policy graph (union of interest and reference contexts).
  std::map<std::string, VarSet> contexts() const {
    std::map<std::string, VarSet> out;
    for (const auto& [a, p] : policies) out[a].insert(p.context.begin(), p.context.end());
    for (const auto& [a, p] : reference_policies) out[a].insert(p.context.begin(), p.context.end());
    for (const auto& [a, v] : reference_values) out[a];
    return out;
  }

  PolicySet policy_set() const {
    PolicySet out;
    for (const auto& [a, p] : policies) out[{a, false}] = p.tabular();
    for (const auto& [a, p] : reference_policies) out[{a, true}] = p.tabular();
    return out;
  }
};

inline const char* kind_name(Query::Kind k) {
  switch (k) {
    case Query::Kind::intervention:
      return "intervention";
    case Query::Kind::edge:
      return "edge";
    case Query::Kind::policy:
      return "policy";
    case Query::Kind::path_policy:
      return "path_policy";
  }
  return "";
}

namespace detail {

inline Value value_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return Value{j.get<int>(), {}};
  return Value{j.at("value").get<int>(), j.value("label", std::string{})};
}

inline nlohmann::json value_json(const Value& v) {
  nlohmann::json j{{"value", v.value}};
  if (!v.label.empty()) j["label"] = v.label;
  return j;
}

inline PolicyDecl policy_json(const nlohmann::json& j) {
  return PolicyDecl{j.at("context").get<VarList>(), j.value("table", std::vector<int>{})};
}

inline nlohmann::json policy_json(const PolicyDecl& p) { return {{"context", p.context}, {"table", p.table}}; }

inline Edge edge_json(const nlohmann::json& j) {
  if (j.is_array()) return {j.at(0).get<std::string>(), j.at(1).get<std::string>()};
  return {j.at("from").get<std::string>(), j.at("to").get<std::string>()};
}

}  // namespace detail

inline Query query_from_json(const nlohmann::json& j) {
  Query q;
  const auto kind = j.at("kind").get<std::string>();
  q.outcomes = j.at("outcomes").get<VarSet>();
  if (kind == "intervention") {
    q.kind = Query::Kind::intervention;
    for (const auto& [a, v] : j.at("treatments").items()) q.treatments[a] = detail::value_json(v);
  } else if (kind == "edge") {
    q.kind = Query::Kind::edge;
    for (const auto& e : j.at("edges")) {
      auto key = detail::edge_json(e);
      if (!q.edges.emplace(key, detail::value_json(e)).second)
        throw std::invalid_argument("edge " + key.first + " -> " + key.second + " listed twice");
    }
  } else if (kind == "policy" || kind == "path_policy") {
    q.kind = kind == "policy" ? Query::Kind::policy : Query::Kind::path_policy;
    for (const auto& [a, p] : j.at("policies").items()) q.policies[a] = detail::policy_json(p);
    if (q.kind == Query::Kind::path_policy) {
      for (const auto& e : j.at("alpha")) q.alpha.insert(detail::edge_json(e));
      const auto refs = j.value("reference", nlohmann::json::object());
      for (const auto& [a, r] : refs.items()) {
        if (r.contains("context"))
          q.reference_policies[a] = detail::policy_json(r);
        else
          q.reference_values[a] = detail::value_json(r);
      }
    }
  } else {
    throw std::invalid_argument("unknown query kind '" + kind + "'");
  }
  return q;
}

inline nlohmann::json to_json(const Query& q) {
  using nlohmann::json;
  json j{{"kind", kind_name(q.kind)}, {"outcomes", q.outcomes}};
  switch (q.kind) {
    case Query::Kind::intervention: {
      json t = json::object();
      for (const auto& [a, v] : q.treatments) t[a] = detail::value_json(v);
      j["treatments"] = t;
      break;
    }
    case Query::Kind::edge: {
      json es = json::array();
      for (const auto& [e, v] : q.edges) {
        auto x = detail::value_json(v);
        x["from"] = e.first;
        x["to"] = e.second;
        es.push_back(x);
      }
      j["edges"] = es;
      break;
    }
    case Query::Kind::policy:
    case Query::Kind::path_policy: {
      json ps = json::object();
      for (const auto& [a, p] : q.policies) ps[a] = detail::policy_json(p);
      j["policies"] = ps;
      if (q.kind == Query::Kind::path_policy) {
        json al = json::array();
        for (const auto& e : q.alpha) al.push_back({{"from", e.first}, {"to", e.second}});
        j["alpha"] = al;
        json ref = json::object();
        for (const auto& [a, v] : q.reference_values) ref[a] = detail::value_json(v);
        for (const auto& [a, p] : q.reference_policies) ref[a] = detail::policy_json(p);
        j["reference"] = ref;
      }
      break;
    }
  }
  return j;
}

inline Query load_query(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open query file '" + path + "'");
  return query_from_json(nlohmann::json::parse(in));
}

}  // namespace pathpol

#endif  // PATHPOL_QUERY_HPP
