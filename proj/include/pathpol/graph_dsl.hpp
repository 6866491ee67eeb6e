#ifndef PATHPOL_GRAPH_DSL_HPP
#define PATHPOL_GRAPH_DSL_HPP

#include <cctype>
#include <fstream>
#include <sstream>

#include "graph.hpp"

namespace pathpol {

/// Result of parsing a graph file. `hidden` vertices are latent; `observed()`
/// projects them away.
struct ParsedGraph {
  Graph graph;
  VarSet hidden;

  Graph observed() const {
    if (hidden.empty()) return graph;
    return latent_project(graph, set_minus(graph.vertices(), hidden));
  }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Line-oriented format:
//   node W        random vertex
//   fixed w2      fixed vertex
//   hidden U      latent vertex (projected away by ParsedGraph::observed)
//   W -> A        directed edge
//   W <-> M       bidirected edge
//   # comment
// Edge endpoints are declared implicitly as random vertices.
inline ParsedGraph parse_graph(std::istream& in) {
  std::map<std::string, Status> vs;
  VarSet hidden;
  std::set<Edge> dir, bi;
  std::string raw;
  std::size_t lineno = 0;

  auto valid_name = [](const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'')) return false;
    return true;
  };

  while (std::getline(in, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;

    if (tok.size() == 2 && (tok[0] == "node" || tok[0] == "fixed" || tok[0] == "hidden")) {
      if (!valid_name(tok[1])) throw ParseError(lineno, "invalid vertex name '" + tok[1] + "'");
      auto st = tok[0] == "fixed" ? Status::fixed : Status::random;
      auto [it, inserted] = vs.emplace(tok[1], st);
      if (!inserted && it->second != st) throw ParseError(lineno, "conflicting declaration of '" + tok[1] + "'");
      if (tok[0] == "hidden") hidden.insert(tok[1]);
      continue;
    }
    if (tok.size() == 3 && (tok[1] == "->" || tok[1] == "<->")) {
      const auto& a = tok[0];
      const auto& b = tok[2];
      if (!valid_name(a) || !valid_name(b)) throw ParseError(lineno, "invalid vertex name");
      if (a == b) throw ParseError(lineno, "self-loop on '" + a + "'");
      vs.emplace(a, Status::random);
      vs.emplace(b, Status::random);
      if (tok[1] == "->") {
        if (!dir.insert({a, b}).second) throw ParseError(lineno, "duplicate edge " + a + " -> " + b);
      } else {
        if (!bi.insert(undirected_key(a, b)).second) throw ParseError(lineno, "duplicate edge " + a + " <-> " + b);
      }
      continue;
    }
    throw ParseError(lineno, "cannot parse '" + raw + "'");
  }

  try {
    return ParsedGraph{Graph(std::move(vs), std::move(dir), std::move(bi)), std::move(hidden)};
  } catch (const GraphError& e) {
    throw ParseError(lineno, e.what());
  }
}

inline ParsedGraph parse_graph(const std::string& text) {
  std::istringstream in(text);
  return parse_graph(in);
}

inline ParsedGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file '" + path + "'");
  return parse_graph(in);
}

inline std::string to_dsl(const Graph& g) {
  std::ostringstream out;
  for (const auto& [v, s] : g.statuses()) out << (s == Status::fixed ? "fixed " : "node ") << v << "\n";
  for (const auto& [a, b] : g.directed()) out << a << " -> " << b << "\n";
  for (const auto& [a, b] : g.bidirected()) out << a << " <-> " << b << "\n";
  return out.str();
}

}  // namespace pathpol

#endif  // PATHPOL_GRAPH_DSL_HPP
