#ifndef PATHPOL_ESTIMAND_HPP
#define PATHPOL_ESTIMAND_HPP

#include <memory>
#include <variant>

#include <json.hpp>

#include "graph.hpp"

namespace pathpol {

/// Value plugged into a fixed argument: a variable, a constant treatment
/// value, or a policy applied to other value expressions.
struct ValueExpr {
  enum class Kind { var, constant, policy };

  Kind kind = Kind::var;
  std::string name;  // variable name, or the treatment a policy belongs to
  int value = 0;
  std::string label;       // display label of a constant ("a", "a'")
  bool reference = false;  // policy is the reference policy f'_A
  std::vector<ValueExpr> args;

  static ValueExpr var(std::string n) { return ValueExpr{Kind::var, std::move(n), 0, {}, false, {}}; }
  static ValueExpr constant(int v, std::string label = {}) {
    return ValueExpr{Kind::constant, {}, v, std::move(label), false, {}};
  }
  static ValueExpr policy(std::string treatment, std::vector<ValueExpr> args, bool reference = false) {
    return ValueExpr{Kind::policy, std::move(treatment), 0, {}, reference, std::move(args)};
  }

  VarSet variables() const {
    VarSet out;
    if (kind == Kind::var) out.insert(name);
    for (const auto& a : args) out = set_union(out, a.variables());
    return out;
  }

  friend bool operator==(const ValueExpr&, const ValueExpr&) = default;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;
using Bindings = std::map<std::string, ValueExpr>;

/// p(head | given), a conditional of the observed law. Empty head and given is the constant 1.
struct FactorNode {
  VarSet head;
  VarSet given;
};
struct ProductNode {
  std::vector<ExprPtr> children;
};
struct SumNode {
  VarSet over;
  ExprPtr child;
};
struct QuotientNode {
  ExprPtr numerator;
  ExprPtr denominator;
};
/// Evaluates `child` with the listed variables replaced by value expressions.
struct BindNode {
  Bindings bindings;
  ExprPtr child;
};

struct Expr {
  std::variant<FactorNode, ProductNode, SumNode, QuotientNode, BindNode> node;
};

inline ExprPtr factor(VarSet head, VarSet given = {}) {
  return std::make_shared<const Expr>(Expr{FactorNode{std::move(head), std::move(given)}});
}
inline ExprPtr one() { return factor({}, {}); }
inline ExprPtr product(std::vector<ExprPtr> children) {
  if (children.size() == 1) return children.front();
  return std::make_shared<const Expr>(Expr{ProductNode{std::move(children)}});
}
inline ExprPtr sum(VarSet over, ExprPtr child) {
  if (over.empty()) return child;
  return std::make_shared<const Expr>(Expr{SumNode{std::move(over), std::move(child)}});
}
inline ExprPtr quotient(ExprPtr num, ExprPtr den) {
  return std::make_shared<const Expr>(Expr{QuotientNode{std::move(num), std::move(den)}});
}
inline ExprPtr bind(Bindings b, ExprPtr child) {
  if (b.empty()) return child;
  return std::make_shared<const Expr>(Expr{BindNode{std::move(b), std::move(child)}});
}

template <typename... F>
struct overloaded : F... {
  using F::operator()...;
};
template <typename... F>
overloaded(F...) -> overloaded<F...>;

inline VarSet free_vars(const ExprPtr& e) {
  return std::visit(overloaded{
                        [](const FactorNode& f) { return set_union(f.head, f.given); },
                        [](const ProductNode& p) {
                          VarSet out;
                          for (const auto& c : p.children) out = set_union(out, free_vars(c));
                          return out;
                        },
                        [](const SumNode& s) { return set_minus(free_vars(s.child), s.over); },
                        [](const QuotientNode& q) {
                          return set_union(free_vars(q.numerator), free_vars(q.denominator));
                        },
                        [](const BindNode& b) {
                          VarSet inner = free_vars(b.child);
                          VarSet out;
                          for (const auto& v : inner)
                            if (!b.bindings.count(v)) out.insert(v);
                          for (const auto& [v, val] : b.bindings)
                            if (inner.count(v)) out = set_union(out, val.variables());
                          return out;
                        },
                    },
                    e->node);
}

/// A compiled functional of the observed law. `order` is the topological
/// order of the source graph and drives canonical rendering.
struct Estimand {
  ExprPtr root;
  VarList order;
};

// ---- JSON -----------------------------------------------------------------

inline nlohmann::json to_json(const ValueExpr& v) {
  using nlohmann::json;
  switch (v.kind) {
    case ValueExpr::Kind::var:
      return json{{"var", v.name}};
    case ValueExpr::Kind::constant: {
      json j{{"const", v.value}};
      if (!v.label.empty()) j["label"] = v.label;
      return j;
    }
    case ValueExpr::Kind::policy: {
      json args = json::array();
      for (const auto& a : v.args) args.push_back(to_json(a));
      return json{{"policy", v.name}, {"reference", v.reference}, {"args", args}};
    }
  }
  return {};
}

inline ValueExpr value_from_json(const nlohmann::json& j) {
  if (j.contains("var")) return ValueExpr::var(j.at("var").get<std::string>());
  if (j.contains("const")) return ValueExpr::constant(j.at("const").get<int>(), j.value("label", std::string{}));
  if (j.contains("policy")) {
    std::vector<ValueExpr> args;
    for (const auto& a : j.at("args")) args.push_back(value_from_json(a));
    return ValueExpr::policy(j.at("policy").get<std::string>(), std::move(args), j.value("reference", false));
  }
  throw std::invalid_argument("value expression needs one of var/const/policy");
}

inline nlohmann::json to_json(const ExprPtr& e) {
  using nlohmann::json;
  return std::visit(overloaded{
                        [](const FactorNode& f) {
                          return json{{"kind", "factor"}, {"head", f.head}, {"given", f.given}};
                        },
                        [](const ProductNode& p) {
                          json cs = json::array();
                          for (const auto& c : p.children) cs.push_back(to_json(c));
                          return json{{"kind", "product"}, {"children", cs}};
                        },
                        [](const SumNode& s) {
                          return json{{"kind", "sum"}, {"over", s.over}, {"child", to_json(s.child)}};
                        },
                        [](const QuotientNode& q) {
                          return json{{"kind", "quotient"},
                                      {"numerator", to_json(q.numerator)},
                                      {"denominator", to_json(q.denominator)}};
                        },
                        [](const BindNode& b) {
                          json bs = json::object();
                          for (const auto& [k, v] : b.bindings) bs[k] = to_json(v);
                          return json{{"kind", "bind"}, {"bindings", bs}, {"child", to_json(b.child)}};
                        },
                    },
                    e->node);
}

inline ExprPtr expr_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "factor") return factor(j.at("head").get<VarSet>(), j.value("given", VarSet{}));
  if (kind == "product") {
    std::vector<ExprPtr> cs;
    for (const auto& c : j.at("children")) cs.push_back(expr_from_json(c));
    return std::make_shared<const Expr>(Expr{ProductNode{std::move(cs)}});
  }
  if (kind == "sum")
    return std::make_shared<const Expr>(Expr{SumNode{j.at("over").get<VarSet>(), expr_from_json(j.at("child"))}});
  if (kind == "quotient") return quotient(expr_from_json(j.at("numerator")), expr_from_json(j.at("denominator")));
  if (kind == "bind") {
    Bindings b;
    for (const auto& [k, v] : j.at("bindings").items()) b[k] = value_from_json(v);
    return std::make_shared<const Expr>(Expr{BindNode{std::move(b), expr_from_json(j.at("child"))}});
  }
  throw std::invalid_argument("unknown estimand node kind '" + kind + "'");
}

inline nlohmann::json to_json(const Estimand& e) { return {{"order", e.order}, {"root", to_json(e.root)}}; }

inline Estimand estimand_from_json(const nlohmann::json& j) {
  return Estimand{expr_from_json(j.at("root")), j.value("order", VarList{})};
}

}  // namespace pathpol

#endif  // PATHPOL_ESTIMAND_HPP
