#ifndef PATHPOL_RENDER_HPP
#define PATHPOL_RENDER_HPP

#include <algorithm>
#include <cctype>

#include "estimand.hpp"

namespace pathpol {

enum class Format { text, latex };

namespace detail {

// Canonical rendering. Summation subscripts follow the topological order,
// factor heads and conditioning sets follow the reverse topological order,
// and product items are sorted by their latest head variable, latest first.
class Renderer {
 public:
  Renderer(const VarList& order, Format fmt) : fmt_(fmt) {
    for (std::size_t i = 0; i < order.size(); ++i) pos_[order[i]] = static_cast<int>(i);
  }

  std::string render(const ExprPtr& e) const { return render(e, Env{}); }

 private:
  struct Bound {
    std::string text;
    bool constant = false;
  };
  using Env = std::map<std::string, Bound>;

  struct Item {
    ExprPtr expr;
    Env env;
  };

  int pos(const std::string& v) const {
    auto it = pos_.find(v);
    return it == pos_.end() ? static_cast<int>(pos_.size()) : it->second;
  }

  // Sort key of a variable: position, then name for variables outside the order.
  bool later(const std::string& a, const std::string& b) const {
    int pa = pos(a), pb = pos(b);
    if (pa != pb) return pa > pb;
    return a > b;
  }

  VarList reverse_topo(const VarSet& s) const {
    VarList out(s.begin(), s.end());
    std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return later(a, b); });
    return out;
  }

  VarList topo(const VarSet& s) const {
    auto out = reverse_topo(s);
    std::reverse(out.begin(), out.end());
    return out;
  }

  std::string name(const std::string& v) const {
    if (fmt_ == Format::text) return v;
    std::size_t end = v.size();
    while (end > 0 && v[end - 1] == '\'') --end;
    std::size_t d = end;
    while (d > 0 && std::isdigit(static_cast<unsigned char>(v[d - 1]))) --d;
    if (d == 0 || d == end) return v;
    return v.substr(0, d) + "_{" + v.substr(d, end - d) + "}" + v.substr(end);
  }

  std::string sep() const { return fmt_ == Format::text ? "," : ", "; }

  std::string var(const std::string& v, const Env& env) const {
    auto it = env.find(v);
    return it == env.end() ? name(v) : it->second.text;
  }

  std::string value(const ValueExpr& x, const Env& env) const {
    switch (x.kind) {
      case ValueExpr::Kind::var:
        return var(x.name, env);
      case ValueExpr::Kind::constant:
        return x.label.empty() ? std::to_string(x.value) : name(x.label);
      case ValueExpr::Kind::policy: {
        std::vector<const ValueExpr*> args;
        for (const auto& a : x.args) args.push_back(&a);
        std::stable_sort(args.begin(), args.end(), [&](const ValueExpr* a, const ValueExpr* b) {
          return later(anchor(*a), anchor(*b));
        });
        std::string out = std::string(x.reference ? "f'_{" : "f_{") + name(x.name) + "}(";
        for (std::size_t i = 0; i < args.size(); ++i) out += (i ? sep() : "") + value(*args[i], env);
        return out + ")";
      }
    }
    return {};
  }

  static std::string anchor(const ValueExpr& x) { return x.kind == ValueExpr::Kind::constant ? "" : x.name; }

  int key(const ExprPtr& e) const {
    return std::visit(overloaded{
                          [&](const FactorNode& f) {
                            int k = -1;
                            for (const auto& v : f.head) k = std::max(k, pos(v));
                            return k;
                          },
                          [&](const ProductNode& p) {
                            int k = -1;
                            for (const auto& c : p.children) k = std::max(k, key(c));
                            return k;
                          },
                          [&](const SumNode& s) { return key(s.child); },
                          [&](const QuotientNode& q) { return key(q.numerator); },
                          [&](const BindNode& b) { return key(b.child); },
                      },
                      e->node);
  }

  static Env extend(const Env& env, const Env& more) {
    Env out = env;
    for (const auto& [k, v] : more) out[k] = v;
    return out;
  }

  Item strip(const ExprPtr& e, const Env& env) const {
    if (auto b = std::get_if<BindNode>(&e->node)) {
      Env add;
      for (const auto& [k, v] : b->bindings) add[k] = Bound{value(v, env), v.kind == ValueExpr::Kind::constant};
      return strip(b->child, extend(env, add));
    }
    return {e, env};
  }

  // True when the expression is a factor or a product of factors, possibly under bindings.
  bool simple(const ExprPtr& e) const {
    auto it = strip(e, {});
    if (std::holds_alternative<FactorNode>(it.expr->node)) return true;
    if (auto p = std::get_if<ProductNode>(&it.expr->node))
      return std::all_of(p->children.begin(), p->children.end(), [&](const ExprPtr& c) { return simple(c); });
    return false;
  }

  void flatten(const ExprPtr& e, const Env& env, std::vector<Item>& out) const {
    auto it = strip(e, env);
    if (auto p = std::get_if<ProductNode>(&it.expr->node)) {
      for (const auto& c : p->children) flatten(c, it.env, out);
    } else {
      out.push_back(it);
    }
  }

  std::string bracket(const std::string& s) const {
    return fmt_ == Format::text ? "[" + s + "]" : "\\left[" + s + "\\right]";
  }

  std::string render_items(std::vector<Item> items, bool group) const {
    std::vector<std::pair<int, std::string>> parts;
    for (const auto& it : items) {
      auto s = render(it.expr, it.env);
      if (group) s = bracket(s);
      parts.emplace_back(key(it.expr), s);
    }
    std::sort(parts.begin(), parts.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? " " : "") + parts[i].second;
    return out;
  }

  std::string render(const ExprPtr& e, const Env& env) const {
    return std::visit(
        overloaded{
            [&](const FactorNode& f) -> std::string {
              if (f.head.empty()) return "1";
              std::string out = "p(";
              auto h = reverse_topo(f.head);
              for (std::size_t i = 0; i < h.size(); ++i) out += (i ? sep() : "") + var(h[i], env);
              if (!f.given.empty()) {
                out += fmt_ == Format::text ? "|" : " \\mid ";
                // Variables set to constants lead the conditioning set.
                auto g = reverse_topo(f.given);
                std::stable_partition(g.begin(), g.end(), [&](const std::string& v) {
                  auto it = env.find(v);
                  return it != env.end() && it->second.constant;
                });
                for (std::size_t i = 0; i < g.size(); ++i) out += (i ? sep() : "") + var(g[i], env);
              }
              return out + ")";
            },
            [&](const ProductNode& p) -> std::string {
              bool all_simple = std::all_of(p.children.begin(), p.children.end(),
                                            [&](const ExprPtr& c) { return simple(c); });
              std::vector<Item> items;
              if (all_simple) {
                flatten(e, env, items);
              } else {
                for (const auto& c : p.children) items.push_back(strip(c, env));
              }
              return render_items(std::move(items), !all_simple);
            },
            [&](const SumNode& s) -> std::string {
              Env inner = env;
              for (const auto& v : s.over) inner.erase(v);
              auto over = topo(s.over);
              std::string sub;
              for (std::size_t i = 0; i < over.size(); ++i) sub += (i ? sep() : "") + name(over[i]);
              std::string body = render(s.child, inner);
              auto child = strip(s.child, inner).expr;
              if (std::holds_alternative<QuotientNode>(child->node)) body = bracket(body);
              return (fmt_ == Format::text ? "Σ_{" : "\\sum_{") + sub + "} " + body;
            },
            [&](const QuotientNode& q) -> std::string {
              auto num = render(q.numerator, env);
              auto den = render(q.denominator, env);
              if (fmt_ == Format::latex) return "\\frac{" + num + "}{" + den + "}";
              if (std::holds_alternative<ProductNode>(strip(q.denominator, env).expr->node)) den = "(" + den + ")";
              return num + " / " + den;
            },
            [&](const BindNode&) -> std::string {
              auto it = strip(e, env);
              return render(it.expr, it.env);
            },
        },
        e->node);
  }

  Format fmt_;
  std::map<std::string, int> pos_;
};

}  // namespace detail

inline std::string render(const Estimand& e, Format fmt = Format::text) {
  return detail::Renderer(e.order, fmt).render(e.root);
}

inline std::string render(const ExprPtr& e, const VarList& order, Format fmt = Format::text) {
  return detail::Renderer(order, fmt).render(e);
}

}  // namespace pathpol

#endif  // PATHPOL_RENDER_HPP
