#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include <pathpol/counterexample.hpp>
#include <pathpol/graph_dsl.hpp>
#include <pathpol/identify.hpp>
#include <pathpol/simulation.hpp>

using namespace pathpol;

namespace {

constexpr int kOk = 0, kInputError = 1, kNotIdentified = 2;

struct Options {
  std::string graph, query, law, model, data, config, out, format = "text", grid, model_out;
  bool trace = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t n = 0;
  double budget = 60;
  int stages = 2;
  std::vector<int> refs;
  int degree2 = 7, degree1 = 1;
};

// Writes to --out when given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty()) return;
    file_.open(path);
    if (!file_) throw std::runtime_error("cannot write '" + path + "'");
  }
  std::ostream& get() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

Graph load_observed(const std::string& path) { return load_graph(path).observed(); }

nlohmann::json verdict_json(const IdentificationResult& r, const Graph& g, bool trace) {
  nlohmann::json j{{"identified", r.identified}};
  if (r.identified) {
    j["estimand"] = render(*r.estimand);
    j["latex"] = render(*r.estimand, Format::latex);
    j["tree"] = to_json(*r.estimand);
    j["ystar"] = r.ystar;
  } else {
    j["witness"] = r.witness->to_json();
    j["reason"] = r.witness->describe();
  }
  if (trace) j["trace"] = trace_json(r, topological_order(g));
  return j;
}

int cmd_identify(const Options& o) {
  auto g = load_observed(o.graph);
  auto q = load_query(o.query);
  auto r = identify(g, q);
  Sink sink(o.out);
  if (o.format == "json") {
    auto j = verdict_json(r, g, o.trace);
    // a refusal always reaches stdout, whatever --out says
    (r.identified ? sink.get() : std::cout) << j.dump(2) << "\n";
    return r.identified ? kOk : kNotIdentified;
  }
  if (!r.identified) {
    std::cout << "not identified: " << r.witness->describe() << "\n";
    return kNotIdentified;
  }
  auto& out = sink.get();
  out << render(*r.estimand, o.format == "latex" ? Format::latex : Format::text) << "\n";
  if (o.trace) out << trace_json(r, topological_order(g)).dump(2) << "\n";
  return kOk;
}

int cmd_evaluate(const Options& o) {
  auto g = load_observed(o.graph);
  auto q = load_query(o.query);
  auto law = load_law_csv(o.law);
  auto r = identify(g, q);
  if (!r.identified) {
    std::cout << "not identified: " << r.witness->describe() << "\n";
    return kNotIdentified;
  }
  auto k = evaluate(*r.estimand, law, q.policy_set());
  Sink sink(o.out);
  write_table_csv(sink.get(), k.table.marginal(q.outcomes));
  return kOk;
}

int cmd_oracle(const Options& o) {
  auto q = load_query(o.query);
  NpsemModel m;
  if (!o.model.empty()) {
    m = load_model(o.model);
  } else {
    std::mt19937_64 rng(o.seed);
    m = random_model_for(load_observed(o.graph), rng);
  }
  if (!o.model_out.empty()) {
    Sink ms(o.model_out);
    ms.get() << to_json(m).dump(2) << "\n";
  }
  Sink sink(o.out);
  write_table_csv(sink.get(), cf_query(m, q));
  return kOk;
}

int cmd_counterexample(const Options& o) {
  auto g = load_observed(o.graph);
  auto q = load_query(o.query);
  CounterexampleOptions opt;
  opt.seed = o.seed;
  opt.time_budget = o.budget;
  auto cx = find_counterexample(g, q, opt);
  Sink sink(o.out);
  if (!cx.found) {
    sink.get() << "none found (" << cx.trials << " trials, best gap " << format_double(cx.gap) << ")\n";
    return kOk;
  }
  nlohmann::json j{{"observed_difference", cx.observed_diff},
                   {"counterfactual_gap", cx.gap},
                   {"trials", cx.trials},
                   {"first", to_json(cx.first)},
                   {"second", to_json(cx.second)}};
  sink.get() << j.dump(2) << "\n";
  return kOk;
}

int cmd_learn(const Options& o) {
  auto d = load_dataset_csv(o.data);
  LearnedPolicy pol;
  if (!o.config.empty()) {
    auto c = load_simulation_config(o.config);
    pol = learn_study_policy(d, c, o.degree2, o.degree1);
  } else {
    auto s = StageStructure::standard(static_cast<std::size_t>(o.stages), true, o.refs);
    s.validate();
    Cards cards;
    for (const auto& v : s.order()) {
      int top = 0;
      for (std::size_t r = 0; r < d.size(); ++r) top = std::max(top, d.assignment(r, {v}).at(v));
      cards[v] = top + 1;
    }
    for (const auto& st : s.stages) cards[st.treatment] = 2;
    pol = learn_path_policy(d, s, cards);
  }
  Sink sink(o.out);
  sink.get() << pol.to_json().dump(2) << "\n";
  return kOk;
}

int cmd_simulate(const Options& o) {
  auto c = load_simulation_config(o.config);
  if (o.n > 0) c.n = o.n;
  auto d = simulate_study(c, o.seed_set ? o.seed : c.seed);
  {
    Sink sink(o.out);
    write_dataset_csv(sink.get(), d);
  }
  if (!o.grid.empty()) {
    auto g = study_grid(d, c);
    Sink gs(o.grid);
    g.write_csv(gs.get());
    g.write_table(std::cerr);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Identification and optimization of path-specific policies"};
  app.require_subcommand(1);
  Options o;

  auto* id = app.add_subcommand("identify", "derive an estimand or a non-identification witness");
  id->add_option("--graph", o.graph, "graph file")->required()->check(CLI::ExistingFile);
  id->add_option("--query", o.query, "query JSON")->required()->check(CLI::ExistingFile);
  id->add_option("--format", o.format, "text, latex or json")->check(CLI::IsMember({"text", "latex", "json"}));
  id->add_flag("--trace", o.trace, "include the fixing derivation");
  id->add_option("--out", o.out, "output file");

  auto* ev = app.add_subcommand("evaluate", "evaluate the identified estimand on a discrete law");
  ev->add_option("--graph", o.graph, "graph file")->required()->check(CLI::ExistingFile);
  ev->add_option("--query", o.query, "query JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--law", o.law, "law CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", o.out, "output CSV");

  auto* orc = app.add_subcommand("oracle", "exact counterfactual law of a structural model");
  auto* om = orc->add_option("--model", o.model, "model JSON")->check(CLI::ExistingFile);
  auto* og = orc->add_option("--graph", o.graph, "graph file; draws a random model")->check(CLI::ExistingFile);
  om->excludes(og);
  orc->add_option("--query", o.query, "query JSON")->required()->check(CLI::ExistingFile);
  orc->add_option("--seed", o.seed, "seed for the random model");
  orc->add_option("--model-out", o.model_out, "write the model used");
  orc->add_option("--out", o.out, "output CSV");

  auto* cx = app.add_subcommand("counterexample", "search for two models separating a query");
  cx->add_option("--graph", o.graph, "graph file")->required()->check(CLI::ExistingFile);
  cx->add_option("--query", o.query, "query JSON")->required()->check(CLI::ExistingFile);
  cx->add_option("--seed", o.seed, "search seed");
  cx->add_option("--budget", o.budget, "time budget in seconds");
  cx->add_option("--out", o.out, "output file");

  auto* ln = app.add_subcommand("learn", "outcome-weighted learning of a stage policy");
  ln->add_option("--data", o.data, "dataset CSV")->required()->check(CLI::ExistingFile);
  ln->add_option("--config", o.config, "simulation config (continuous study data)")->check(CLI::ExistingFile);
  ln->add_option("--stages", o.stages, "number of stages for discrete data")->check(CLI::Range(1, 10));
  ln->add_option("--refs", o.refs, "reference treatment values per stage");
  ln->add_option("--stage2-degree", o.degree2, "classifier degree, last stage")->check(CLI::Range(1, 15));
  ln->add_option("--stage1-degree", o.degree1, "classifier degree, first stage")->check(CLI::Range(1, 15));
  ln->add_option("--out", o.out, "output JSON");

  auto* sm = app.add_subcommand("simulate", "draw the two-stage simulation study");
  sm->add_option("--config", o.config, "simulation config")->required()->check(CLI::ExistingFile);
  sm->add_option("--seed", o.seed, "overrides the config seed")->each([&](const std::string&) { o.seed_set = true; });
  sm->add_option("--n", o.n, "overrides the config sample size");
  sm->add_option("--out", o.out, "dataset CSV");
  sm->add_option("--grid", o.grid, "also fit the classifier grid and write its CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }
  try {
    if (*id) return cmd_identify(o);
    if (*ev) return cmd_evaluate(o);
    if (*orc) {
      if (o.model.empty() && o.graph.empty()) throw std::invalid_argument("oracle needs --model or --graph");
      return cmd_oracle(o);
    }
    if (*cx) return cmd_counterexample(o);
    if (*ln) return cmd_learn(o);
    if (*sm) return cmd_simulate(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
