#ifndef PATHPOL_DATASET_HPP
#define PATHPOL_DATASET_HPP

#include <fstream>
#include <random>
#include <sstream>

#include "law.hpp"

namespace pathpol {

/// Rectangular numeric data with named columns.
struct Dataset {
  VarList columns;
  std::vector<std::vector<double>> rows;

  std::size_t size() const { return rows.size(); }

  std::size_t column(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw std::invalid_argument("dataset has no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
  }

  /// Values of `names` in row r.
  std::vector<double> select(std::size_t r, const VarList& names) const {
    std::vector<double> out;
    for (const auto& n : names) out.push_back(rows[r][column(n)]);
    return out;
  }

  /// Row r as a discrete assignment over the given columns.
  Assignment assignment(std::size_t r, const VarList& names) const {
    Assignment a;
    for (const auto& n : names) {
      double v = rows[r][column(n)];
      if (v != std::floor(v) || v < 0)
        throw std::invalid_argument("column '" + n + "' is not a discrete state in row " + std::to_string(r));
      a[n] = static_cast<int>(v);
    }
    return a;
  }
};

inline void write_dataset_csv(std::ostream& out, const Dataset& d) {
  for (std::size_t j = 0; j < d.columns.size(); ++j) out << (j ? "," : "") << d.columns[j];
  out << "\n";
  for (const auto& r : d.rows) {
    for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << format_double(r[j]);
    out << "\n";
  }
}

inline Dataset read_dataset_csv(std::istream& in) {
  Dataset d;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset csv: empty input");
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
  d.columns = split(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto f = split(line);
    if (f.size() != d.columns.size())
      throw std::runtime_error("dataset csv line " + std::to_string(lineno) + ": expected " +
                               std::to_string(d.columns.size()) + " fields");
    std::vector<double> r;
    for (std::size_t j = 0; j < f.size(); ++j) {
      try {
        std::size_t used = 0;
        r.push_back(std::stod(f[j], &used));
        if (used != f[j].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::logic_error&) {
        throw std::runtime_error("dataset csv line " + std::to_string(lineno) + ", column '" + d.columns[j] +
                                 "': not a number");
      }
    }
    d.rows.push_back(std::move(r));
  }
  return d;
}

inline Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open data file '" + path + "'");
  return read_dataset_csv(in);
}

/// n independent draws from a discrete law.
inline Dataset sample_law(const DiscreteLaw& law, std::size_t n, std::mt19937_64& rng) {
  const Table& t = law.joint();
  std::discrete_distribution<std::size_t> pick(t.values().begin(), t.values().end());
  Dataset d;
  d.columns = t.vars();
  Assignment a;
  for (std::size_t i = 0; i < n; ++i) {
    t.decode(pick(rng), a);
    std::vector<double> r;
    for (const auto& v : d.columns) r.push_back(a[v]);
    d.rows.push_back(std::move(r));
  }
  return d;
}

/// Empirical law of discrete columns with `pseudo` added to every cell, so
/// the estimate stays strictly positive.
inline DiscreteLaw empirical_law(const Dataset& d, const VarList& vars, const Cards& cards, double pseudo = 0.5) {
  VarSet vs(vars.begin(), vars.end());
  Table t = Table::tabulate(vs, cards, [&](const Assignment&) { return pseudo; });
  std::vector<double> vals = t.values();
  for (std::size_t r = 0; r < d.size(); ++r) vals[t.index_of(d.assignment(r, vars))] += 1.0;
  double s = 0;
  for (double v : vals) s += v;
  for (auto& v : vals) v /= s;
  return DiscreteLaw(Table(t.vars(), t.cards(), vals));
}

}  // namespace pathpol

#endif  // PATHPOL_DATASET_HPP
