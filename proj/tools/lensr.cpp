// lensr command-line tool.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "lensr/compiler.hpp"
#include "lensr/task.hpp"

namespace fs = std::filesystem;
using namespace lensr;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << std::setprecision(17);
  return out;
}

std::vector<DatasetRecord> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  auto records = read_jsonl(in);
  if (records.empty()) throw std::runtime_error("dataset '" + path + "' has no records");
  return records;
}

struct EmbedderOpts {
  std::string form = "ddnnf";
  bool he = false;
  bool sr = false;
  EmbedderConfig base;

  void add(CLI::App* app, bool with_form) {
    if (with_form) {
      app->add_option("--form", form, "Graph form of formulas")
          ->check(CLI::IsMember({"general", "cnf", "ddnnf"}))
          ->capture_default_str();
      app->add_flag("--he", he, "Heterogeneous per-node-type weights");
      app->add_flag("--sr", sr, "Semantic regularization (ddnnf only)");
    }
    app->add_option("--epochs", base.epochs, "Embedder epochs")->capture_default_str();
    app->add_option("--batch", base.batch, "Formulas per embedder update")->capture_default_str();
    app->add_option("--lr", base.lr, "Embedder Adam learning rate")->capture_default_str();
    app->add_option("--margin", base.margin, "Triplet margin m")->capture_default_str();
    app->add_option("--lambda-r", base.lambda_r, "Semantic regularizer weight")->capture_default_str();
    app->add_option("--layers", base.layers, "GCN layers")->capture_default_str();
    app->add_option("--hidden", base.hidden, "GCN hidden width")->capture_default_str();
    app->add_option("--out-dim", base.out_dim, "Embedding dimension")->capture_default_str();
    app->add_option("--in-dim", base.in_dim, "Input feature dimension")->capture_default_str();
    app->add_option("--max-vars", base.max_vars, "Variables covered by the feature table")->capture_default_str();
  }

  EmbedderConfig config(std::uint64_t seed) const {
    EmbedderConfig c = base;
    c.form = parse_graph_form(form);
    c.heterogeneous = he;
    c.semantic_reg = sr;
    c.seed = seed;
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

void add_seed(CLI::App* app, std::uint64_t& seed) {
  app->add_option("--seed", seed, "Random seed (falls back to $LENSR_SEED)")->envname("LENSR_SEED")->required();
}

void add_config(CLI::App* app, std::string& path) {
  app->add_option("--config", path, "Key = value config file; command-line flags take precedence");
}

// Config entries become `--key=value` arguments placed before the user's own,
// so later command-line flags win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.size() < 2) return args;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::vector<std::string> out{args[0], args[1]};
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_config(in)) {
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == args[1])) continue;
    if (item.name == "config" || item.name == "++" || item.name == "--") continue;
    std::string joined;
    for (const std::string& v : item.inputs) joined += (joined.empty() ? "" : ",") + v;
    out.push_back("--" + item.name + "=" + joined);
  }
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

void save_config(CLI::App* app, const std::string& dir) {
  auto out = open_out((fs::path(dir) / "run_config.ini").string());
  out << app->config_to_str(true, false);
}

void write_log_csv(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,triplet_loss,sr_loss,total\n";
  for (const EpochLog& e : log) out << e.epoch << ',' << e.triplet << ',' << e.sr << ',' << e.total << '\n';
}

std::string setting_name(const std::string& form, bool he, bool sr) {
  return form + (he ? "+HE" : "") + (sr ? "+SR" : "");
}

std::string literals(const Assignment& a) {
  std::string s;
  for (int v = 1; v <= a.max_var(); ++v) {
    if (!s.empty()) s += ' ';
    s += std::to_string(a.value(v) ? v : -v);
  }
  return s;
}

bool looks_like_dimacs(const std::string& path, const std::string& text) {
  if (fs::path(path).extension() == ".cnf") return true;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto k = line.find_first_not_of(" \t\r");
    if (k == std::string::npos) continue;
    return line.compare(k, 5, "p cnf") == 0 || line[k] == 'c';
  }
  return false;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LENSR: logic embeddings with semantic regularization"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;

  // gen
  std::string tier = "low", gen_out;
  int count = 200;
  std::uint64_t seed = 0;
  auto* gen = app.add_subcommand("gen", "Generate a JSONL dataset of formulas with sampled assignments");
  gen->add_option("--tier", tier, "low, moderate or high")->check(CLI::IsMember({"low", "moderate", "high"}))->capture_default_str();
  gen->add_option("--count", count, "Number of formulas")->check(CLI::PositiveNumber)->capture_default_str();
  add_seed(gen, seed);
  gen->add_option("--out,-o", gen_out, "Output path (default: standard output)");
  add_config(gen, config_path);

  // compile
  std::string compile_in, compile_out;
  auto* compile = app.add_subcommand("compile", "Compile a DIMACS CNF or formula text file to d-DNNF (.nnf)");
  compile->add_option("--in,-i", compile_in, "Input file: DIMACS (.cnf / 'p cnf') or formula text")->required()->check(CLI::ExistingFile);
  compile->add_option("--out,-o", compile_out, "Output .nnf path")->required();

  // train
  EmbedderOpts train_opts;
  std::string train_data, train_ckpt, train_log;
  auto* train = app.add_subcommand("train", "Train an embedder; writes a checkpoint and a CSV loss log");
  train->add_option("--data,-d", train_data, "JSONL dataset")->required()->check(CLI::ExistingFile);
  train->add_option("--out,-o", train_ckpt, "Checkpoint path (JSON)")->required();
  train->add_option("--log", train_log, "Loss log CSV (default: <out>.log.csv)");
  train_opts.add(train, true);
  add_seed(train, seed);
  add_config(train, config_path);

  // eval
  EmbedderOpts eval_opts;
  MlpConfig mlp;
  std::string eval_data, eval_dir = "results";
  int runs = 10;
  bool all_settings = false;
  auto* eval = app.add_subcommand("eval", "Entailment experiment: metrics CSV, mean (SE) summary table, distance data");
  eval->add_option("--data,-d", eval_data, "JSONL dataset")->required()->check(CLI::ExistingFile);
  eval->add_option("--runs", runs, "Independent runs (>= 2)")->check(CLI::Range(2, 1000))->capture_default_str();
  eval->add_flag("--all-settings", all_settings, "Run every ablation setting instead of --form/--he/--sr");
  eval->add_option("--out-dir", eval_dir, "Directory for CSV outputs")->capture_default_str();
  eval->add_option("--mlp-hidden", mlp.hidden, "Classifier hidden units")->capture_default_str();
  eval->add_option("--mlp-epochs", mlp.epochs, "Classifier epochs")->capture_default_str();
  eval->add_option("--mlp-lr", mlp.lr, "Classifier Adam learning rate")->capture_default_str();
  eval->add_option("--mlp-batch", mlp.batch, "Classifier minibatch size")->capture_default_str();
  eval_opts.add(eval, true);
  add_seed(eval, seed);
  add_config(eval, config_path);

  // query
  std::string query_nnf;
  bool q_count = false, q_sat = false;
  int q_enum = -1;
  auto* query = app.add_subcommand("query", "Answer a query on a compiled .nnf file");
  query->add_option("nnf", query_nnf, ".nnf file")->required()->check(CLI::ExistingFile);
  auto* oc = query->add_flag("--count", q_count, "Model count over the declared variables");
  auto* os = query->add_flag("--sat", q_sat, "Print SAT or UNSAT");
  auto* oe = query->add_option("--enumerate", q_enum, "Print up to K models, one per line")->check(CLI::NonNegativeNumber);
  oc->excludes(os)->excludes(oe);
  os->excludes(oe);

  // toytask
  EmbedderOpts toy_opts;
  toy_opts.he = true;
  toy_opts.sr = true;
  ToyConfig toy;
  std::string toy_data, toy_out;
  int toy_seeds = 10;
  auto* toytask = app.add_subcommand("toytask", "Paired lambda=0 / lambda>0 runs of the logic-loss toy task");
  toytask->add_option("--data,-d", toy_data, "JSONL dataset for the embedder and constraints")->required()->check(CLI::ExistingFile);
  toytask->add_option("--seeds", toy_seeds, "Paired runs")->check(CLI::PositiveNumber)->capture_default_str();
  toytask->add_option("--lambda", toy.lambda, "Logic loss weight")->capture_default_str();
  toytask->add_option("--props", toy.num_props, "Propositions per instance")->capture_default_str();
  toytask->add_option("--train", toy.num_train, "Training instances")->capture_default_str();
  toytask->add_option("--test", toy.num_test, "Test instances")->capture_default_str();
  toytask->add_option("--noise", toy.noise, "Feature noise sigma")->capture_default_str();
  toytask->add_option("--head-epochs", toy.epochs, "Head training epochs")->capture_default_str();
  toytask->add_option("--out,-o", toy_out, "Metrics CSV (default: standard output only)");
  toy_opts.add(toytask, false);
  add_seed(toytask, seed);
  add_config(toytask, config_path);

  try {
    std::vector<std::string> args(argv, argv + argc);
    try {
      args = expand_config(args);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
    args.erase(args.begin());
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    std::cout << std::setprecision(10);
    if (*gen) {
      const auto records = gen_dataset(parse_tier(tier), count, seed);
      if (gen_out.empty()) {
        write_jsonl(std::cout, records);
      } else {
        auto out = open_out(gen_out);
        write_jsonl(out, records);
        std::cerr << "wrote " << records.size() << " records to " << gen_out << '\n';
      }
    } else if (*compile) {
      const std::string text = read_file(compile_in);
      NnfDag g;
      if (looks_like_dimacs(compile_in, text)) {
        const Cnf c = parse_dimacs(text);
        g = compile_ddnnf(c);
        // Projection keeps determinism only when the inputs are the lowest ids.
        const auto k = static_cast<int>(c.original_vars.size());
        if (k < c.num_vars && !c.original_vars.empty() && c.original_vars.back() == k) {
          std::vector<int> aux;
          for (int v = 1; v <= c.num_vars; ++v)
            if (!c.is_original(v)) aux.push_back(v);
          g = forget(g, aux);
          g.set_num_vars(static_cast<int>(c.original_vars.size()));
        }
      } else {
        g = compile_formula(parse_formula(text));
      }
      auto out = open_out(compile_out);
      out << write_nnf(g);
      std::cout << "nodes " << g.size() << "\nedges " << g.num_edges() << "\nvars " << g.num_vars()
                << "\nmodels " << model_count(g) << '\n';
    } else if (*train) {
      const auto records = load_dataset(train_data);
      const EmbedderConfig c = train_opts.config(seed);
      std::vector<EpochLog> log;
      const EmbedderParams p = train_embedder(records, c, &log, [](const EpochLog& e) {
        std::cerr << "epoch " << e.epoch << " triplet " << e.triplet << " sr " << e.sr << '\n';
      });
      open_out(train_ckpt) << checkpoint_to_json(p);
      auto lo = open_out(train_log.empty() ? train_ckpt + ".log.csv" : train_log);
      write_log_csv(lo, log);
      std::cout << "checkpoint " << train_ckpt << "\nfinal_triplet " << log.back().triplet << '\n';
    } else if (*eval) {
      const auto records = load_dataset(eval_data);
      ExperimentConfig cfg;
      cfg.embedder = eval_opts.config(seed);
      cfg.mlp = mlp;
      cfg.seed = seed;
      std::vector<Setting> settings;
      if (all_settings) settings = ablation_settings();
      else settings.push_back({setting_name(eval_opts.form, eval_opts.he, eval_opts.sr), cfg.embedder.form,
                               eval_opts.he, eval_opts.sr});
      fs::create_directories(eval_dir);
      save_config(eval, eval_dir);
      auto metrics = open_out((fs::path(eval_dir) / "metrics.csv").string());
      auto summary = open_out((fs::path(eval_dir) / "summary.csv").string());
      auto dists = open_out((fs::path(eval_dir) / "distances.csv").string());
      auto logs = open_out((fs::path(eval_dir) / "train_log.csv").string());
      metrics << "setting,form,HE,SR,tier,run,accuracy\n";
      summary << "setting,form,HE,SR,tier,runs,mean,se\n";
      dists << "setting,run,formula,satisfying,distance\n";
      logs << "setting,run,epoch,triplet_loss,sr_loss,total\n";
      const std::string tname = tier_name(records.front().tier);
      std::cout << std::left << std::setw(14) << "setting" << "accuracy (SE), " << tname << " tier, " << runs
                << " runs\n";
      for (const Setting& s : settings) {
        const auto res = eval_runs(records, s, cfg, runs);
        std::vector<double> acc;
        for (const RunResult& r : res) {
          acc.push_back(r.accuracy);
          metrics << s.name << ',' << graph_form_name(s.form) << ',' << s.heterogeneous << ',' << s.semantic_reg << ','
                  << tname << ',' << r.run << ',' << r.accuracy << '\n';
          for (const DistanceSample& d : r.distances)
            dists << s.name << ',' << r.run << ',' << d.formula << ',' << d.satisfying << ',' << d.distance << '\n';
          for (const EpochLog& e : r.log)
            logs << s.name << ',' << r.run << ',' << e.epoch << ',' << e.triplet << ',' << e.sr << ',' << e.total << '\n';
        }
        const MeanSe m = mean_se(acc);
        summary << s.name << ',' << graph_form_name(s.form) << ',' << s.heterogeneous << ',' << s.semantic_reg << ','
                << tname << ',' << runs << ',' << m.mean << ',' << m.se << '\n';
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(2) << m.mean << " (" << m.se << ")";
        std::cout << std::left << std::setw(14) << s.name << cell.str() << std::endl;
      }
    } else if (*query) {
      const NnfDag g = parse_nnf(read_file(query_nnf));
      if (q_sat) {
        std::cout << (is_satisfiable(g) ? "SAT" : "UNSAT") << '\n';
      } else if (q_enum >= 0) {
        std::vector<int> vars;
        for (int v = 1; v <= g.num_vars(); ++v) vars.push_back(v);
        for (const Assignment& a : enumerate_models(g, vars, static_cast<std::size_t>(q_enum)))
          std::cout << literals(a) << '\n';
      } else {
        std::cout << model_count(g) << '\n';
      }
    } else if (*toytask) {
      const auto records = load_dataset(toy_data);
      EmbedderConfig c = toy_opts.config(seed);
      const auto constraints = toy_constraints(records, toy.num_props);
      if (constraints.empty())
        throw std::runtime_error("no formula in the dataset qualifies as a " + std::to_string(toy.num_props) +
                                 "-proposition constraint (try a high-tier dataset)");
      std::cerr << "training embedder on " << records.size() << " formulas\n";
      const EmbedderParams emb = train_embedder(records, c);
      const auto res = run_toy_experiment(emb, constraints, toy, toy_seeds, seed);
      std::ostringstream csv;
      csv << std::setprecision(17) << "seed,lambda,accuracy,satisfaction,constraint\n";
      std::ostringstream lam;
      lam << toy.lambda;
      double base = 0.0, with = 0.0;
      for (const ToyRun& r : res) {
        csv << r.seed << ",0," << r.baseline.accuracy << ',' << r.baseline.satisfaction << ",\"" << r.constraint << "\"\n";
        csv << r.seed << ',' << lam.str() << ',' << r.logic.accuracy << ',' << r.logic.satisfaction << ",\""
            << r.constraint << "\"\n";
        base += r.baseline.satisfaction;
        with += r.logic.satisfaction;
      }
      if (!toy_out.empty()) open_out(toy_out) << csv.str();
      else std::cout << csv.str();
      const double n = static_cast<double>(res.size());
      std::cout << "mean_satisfaction lambda=0 " << base / n << " lambda=" << lam.str() << ' ' << with / n << '\n';
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
