#ifndef PATHPOL_LAW_HPP
#define PATHPOL_LAW_HPP

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "graph.hpp"

namespace pathpol {

using Assignment = std::map<std::string, int>;
using Cards = std::map<std::string, int>;

inline constexpr double kNormalizationTol = 1e-12;
inline constexpr double kEquivalenceTol = 1e-9;

/// Raised when a conditional is requested on a configuration with zero mass.
class PositivityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string describe(const Assignment& a) {
  std::string out = "{";
  bool first = true;
  for (const auto& [k, v] : a) {
    if (!first) out += ", ";
    first = false;
    out += k + "=" + std::to_string(v);
  }
  return out + "}";
}

/// Dense real-valued function over the joint states of a set of discrete
/// variables. Variables are kept sorted; the last variable varies fastest.
class Table {
 public:
  Table() : values_{1.0} {}

  Table(VarList vars, std::vector<int> cards, std::vector<double> values)
      : vars_(std::move(vars)), cards_(std::move(cards)), values_(std::move(values)) {
    if (vars_.size() != cards_.size()) throw std::invalid_argument("Table: vars/cards size mismatch");
    if (!std::is_sorted(vars_.begin(), vars_.end())) throw std::invalid_argument("Table: variables must be sorted");
    std::size_t n = 1;
    for (int c : cards_) {
      if (c <= 0) throw std::invalid_argument("Table: empty state space");
      n *= static_cast<std::size_t>(c);
    }
    if (values_.size() != n) throw std::invalid_argument("Table: value count does not match state space");
    strides();
  }

  /// Builds a table by evaluating `f` on every joint configuration.
  static Table tabulate(const VarSet& vars, const Cards& cards, const std::function<double(const Assignment&)>& f) {
    VarList vl(vars.begin(), vars.end());
    std::vector<int> cs;
    for (const auto& v : vl) cs.push_back(card_of(cards, v));
    Table t(vl, cs, std::vector<double>(product(cs), 0.0));
    Assignment a;
    for (std::size_t i = 0; i < t.size(); ++i) {
      t.decode(i, a);
      t.values_[i] = f(a);
    }
    return t;
  }

  static Table scalar(double v) {
    Table t;
    t.values_[0] = v;
    return t;
  }

  const VarList& vars() const { return vars_; }
  VarSet var_set() const { return VarSet(vars_.begin(), vars_.end()); }
  const std::vector<int>& cards() const { return cards_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  Cards card_map() const {
    Cards out;
    for (std::size_t i = 0; i < vars_.size(); ++i) out[vars_[i]] = cards_[i];
    return out;
  }

  std::size_t index_of(const Assignment& a) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      auto it = a.find(vars_[i]);
      if (it == a.end()) throw std::out_of_range("Table: assignment misses '" + vars_[i] + "'");
      if (it->second < 0 || it->second >= cards_[i])
        throw std::out_of_range("Table: state out of range for '" + vars_[i] + "'");
      idx += static_cast<std::size_t>(it->second) * strides_[i];
    }
    return idx;
  }

  /// Writes configuration `idx` into `a` (other keys in `a` are untouched).
  void decode(std::size_t idx, Assignment& a) const {
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      a[vars_[i]] = static_cast<int>((idx / strides_[i]) % static_cast<std::size_t>(cards_[i]));
    }
  }

  double at(const Assignment& a) const { return values_[index_of(a)]; }

  double sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

  /// Sums out every variable not in `keep`.
  Table marginal(const VarSet& keep) const {
    VarList kv;
    std::vector<int> kc;
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (keep.count(vars_[i])) kv.push_back(vars_[i]), kc.push_back(cards_[i]);
    Table out(kv, kc, std::vector<double>(product(kc), 0.0));
    Assignment a;
    for (std::size_t i = 0; i < size(); ++i) {
      decode(i, a);
      out.values_[out.index_of(a)] += values_[i];
    }
    return out;
  }

  Table sum_out(const VarSet& drop) const { return marginal(set_minus(var_set(), drop)); }

  friend Table operator*(const Table& a, const Table& b) {
    return combine(a, b, [](double x, double y, const Assignment&) { return x * y; });
  }

  /// Pointwise quotient; any zero denominator is a positivity violation.
  friend Table operator/(const Table& a, const Table& b) {
    return combine(a, b, [](double x, double y, const Assignment& at) {
      if (y == 0.0) throw PositivityError("zero-mass conditioning configuration " + describe(at));
      return x / y;
    });
  }

  double max_abs_diff(const Table& o) const {
    if (vars_ != o.vars_ || cards_ != o.cards_) return INFINITY;
    double m = 0;
    for (std::size_t i = 0; i < size(); ++i) m = std::max(m, std::abs(values_[i] - o.values_[i]));
    return m;
  }

  static int card_of(const Cards& cards, const std::string& v) {
    auto it = cards.find(v);
    if (it == cards.end()) throw std::out_of_range("no state space for '" + v + "'");
    return it->second;
  }

  static std::size_t product(const std::vector<int>& cs) {
    std::size_t n = 1;
    for (int c : cs) n *= static_cast<std::size_t>(c);
    return n;
  }

 private:
  template <typename Op>
  static Table combine(const Table& a, const Table& b, Op op) {
    Cards cards = a.card_map();
    for (const auto& [v, c] : b.card_map()) {
      auto [it, ok] = cards.emplace(v, c);
      if (!ok && it->second != c) throw std::invalid_argument("Table: state-space mismatch for '" + v + "'");
    }
    return tabulate(set_union(a.var_set(), b.var_set()), cards,
                    [&](const Assignment& at) { return op(a.at(at), b.at(at), at); });
  }

  void strides() {
    strides_.assign(vars_.size(), 1);
    for (std::size_t i = vars_.size(); i-- > 1;) strides_[i - 1] = strides_[i] * static_cast<std::size_t>(cards_[i]);
  }

  VarList vars_;
  std::vector<int> cards_;
  std::vector<double> values_;
  std::vector<std::size_t> strides_;
};

/// Normalized density over `targets` for each configuration of `given`.
struct Kernel {
  VarSet targets;
  VarSet given;
  Table table;

  /// Largest deviation from 1 of any conditional slice's total mass.
  double normalization_error() const {
    Table m = table.marginal(given);
    double err = 0;
    for (double v : m.values()) err = std::max(err, std::abs(v - 1.0));
    return err;
  }

  void check_normalized(double tol = kNormalizationTol) const {
    double err = normalization_error();
    if (!(err <= tol)) throw std::logic_error("kernel is not normalized (deviation " + std::to_string(err) + ")");
  }

  double at(const Assignment& a) const { return table.at(a); }
};

/// q(A | W) = Σ_{V∖A} q(V | W).
inline Kernel marginalize(const Kernel& q, const VarSet& keep) {
  if (!is_subset(keep, q.targets)) throw std::invalid_argument("marginalize: set is not a subset of the targets");
  return Kernel{keep, q.given, q.table.sum_out(set_minus(q.targets, keep))};
}

/// q(V∖A | A ∪ W) = q(V | W) / q(A | W).
inline Kernel condition(const Kernel& q, const VarSet& on) {
  if (!is_subset(on, q.targets)) throw std::invalid_argument("condition: set is not a subset of the targets");
  Kernel m = marginalize(q, on);
  return Kernel{set_minus(q.targets, on), set_union(q.given, on), q.table / m.table};
}

/// Joint distribution over finitely many discrete variables.
class DiscreteLaw {
 public:
  DiscreteLaw() = default;

  explicit DiscreteLaw(Table joint) : joint_(std::move(joint)) {
    for (double v : joint_.values())
      if (v < 0 || !std::isfinite(v)) throw std::invalid_argument("law has a negative or non-finite entry");
    if (std::abs(joint_.sum() - 1.0) > kNormalizationTol)
      throw std::invalid_argument("law does not sum to one");
  }

  const Table& joint() const { return joint_; }
  VarSet variables() const { return joint_.var_set(); }
  Cards cards() const { return joint_.card_map(); }
  int card(const std::string& v) const { return Table::card_of(cards(), v); }

  Table marginal(const VarSet& keep) const {
    for (const auto& v : keep)
      if (!cards().count(v)) throw std::out_of_range("law has no variable '" + v + "'");
    return joint_.marginal(keep);
  }

  Kernel as_kernel() const { return Kernel{variables(), {}, joint_}; }

 private:
  Table joint_;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// CSV: header row with variable names and a final probability column, one
/// row per joint configuration. Missing configurations have probability 0.
inline DiscreteLaw read_law_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("law csv: empty input");
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string f; std::getline(ss, f, ',');) {
      while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
      while (!f.empty() && f.front() == ' ') f.erase(f.begin());
      out.push_back(f);
    }
    return out;
  };
  auto header = split(line);
  if (header.size() < 2) throw std::runtime_error("law csv: need at least one variable and a probability column");
  VarList names(header.begin(), header.end() - 1);
  std::vector<std::pair<std::vector<int>, double>> rows;
  std::vector<int> maxstate(names.size(), 0);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto f = split(line);
    if (f.size() != header.size())
      throw std::runtime_error("law csv line " + std::to_string(lineno) + ": expected " +
                               std::to_string(header.size()) + " fields");
    std::vector<int> st;
    try {
      for (std::size_t i = 0; i < names.size(); ++i) {
        st.push_back(std::stoi(f[i]));
        if (st.back() < 0) throw std::invalid_argument("negative state");
        maxstate[i] = std::max(maxstate[i], st.back());
      }
      rows.emplace_back(st, std::stod(f.back()));
    } catch (const std::logic_error&) {
      throw std::runtime_error("law csv line " + std::to_string(lineno) + ": malformed field");
    }
  }
  Cards cards;
  for (std::size_t i = 0; i < names.size(); ++i) cards[names[i]] = maxstate[i] + 1;
  VarSet vs(names.begin(), names.end());
  if (vs.size() != names.size()) throw std::runtime_error("law csv: duplicate column");
  Table t = Table::tabulate(vs, cards, [](const Assignment&) { return 0.0; });
  std::vector<double> vals = t.values();
  for (const auto& [st, p] : rows) {
    Assignment a;
    for (std::size_t i = 0; i < names.size(); ++i) a[names[i]] = st[i];
    vals[t.index_of(a)] += p;
  }
  return DiscreteLaw(Table(t.vars(), t.cards(), vals));
}

inline DiscreteLaw load_law_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open law file '" + path + "'");
  return read_law_csv(in);
}

/// Writes a table as CSV in the law format (final column `p`).
inline void write_table_csv(std::ostream& out, const Table& t, const std::string& value_column = "p") {
  for (const auto& v : t.vars()) out << v << ",";
  out << value_column << "\n";
  Assignment a;
  for (std::size_t i = 0; i < t.size(); ++i) {
    t.decode(i, a);
    for (const auto& v : t.vars()) out << a[v] << ",";
    out << format_double(t.values()[i]) << "\n";
  }
}

}  // namespace pathpol

#endif  // PATHPOL_LAW_HPP
