// wormnet command-line harness.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "wormnet/checkpoint.hpp"
#include "wormnet/compiler.hpp"
#include "wormnet/datagen.hpp"
#include "wormnet/experiment.hpp"
#include "wormnet/io.hpp"
#include "wormnet/learning.hpp"
#include "wormnet/propagation.hpp"

namespace fs = std::filesystem;
using namespace wormnet;

namespace {

constexpr int kExitMismatch = 2;

struct GraphSource {
  std::pair<std::size_t, double> er{0, 0.0};
  std::string sensor_file;
  double radius = 0.0;

  void add(CLI::App* cmd) {
    auto* er_opt = cmd->add_option("--er", er, "Erdos-Renyi graph: node count and edge probability");
    auto* sf = cmd->add_option("--sensor-file", sensor_file, "sensor topology (edge list, or coordinates with --radius)");
    cmd->add_option("--radius", radius, "link sensors closer than this")->needs(sf);
    er_opt->excludes(sf);
  }

  bool given() const { return er.first > 0 || !sensor_file.empty(); }

  // Arcs depend only on `seed`, so changing K keeps the same topology.
  WsnGraph topology(std::size_t worms, std::uint64_t seed) const {
    if (!sensor_file.empty()) {
      auto sg = load_sensor_graph(sensor_file, radius > 0.0 ? SensorRule::Distance : SensorRule::EdgeList, worms, radius);
      for (const auto& w : sg.warnings) std::cerr << "warning: " << w << '\n';
      return sg.graph;
    }
    if (er.first == 0) throw ConfigurationError("one of --er or --sensor-file is required");
    auto rng = child_rng(seed, 0);
    return gen_er_graph(er.first, er.second, worms, rng);
  }
};

void check_worms(std::size_t k) {
  if (!is_power_of_two_worms(k))
    throw ConfigurationError("--worms must be a power of two >= 2, got " + std::to_string(k));
}

std::string fixed3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

std::string cell(const MeanStd& m) { return fixed3(m.mean) + "(" + fixed3(m.std) + ")"; }

struct Table {
  std::string title;
  std::string key;  // first column header
  std::vector<std::pair<std::string, MetricSummary>> rows;

  void print(std::ostream& os) const {
    char line[160];
    os << title << '\n';
    std::snprintf(line, sizeof line, "%-10s %-14s %-14s %-14s %-14s\n", key.c_str(), "F1", "precision", "recall",
                  "accuracy");
    os << line;
    for (const auto& [name, s] : rows) {
      std::snprintf(line, sizeof line, "%-10s %-14s %-14s %-14s %-14s\n", name.c_str(), cell(s.f1).c_str(),
                    cell(s.precision).c_str(), cell(s.recall).c_str(), cell(s.accuracy).c_str());
      os << line;
    }
  }

  void csv(std::ostream& os) const {
    os << key << ",f1_mean,f1_std,precision_mean,precision_std,recall_mean,recall_std,accuracy_mean,accuracy_std\n";
    for (const auto& [name, s] : rows) {
      os << name;
      for (const auto* m : {&s.f1, &s.precision, &s.recall, &s.accuracy}) os << ',' << fixed3(m->mean) << ',' << fixed3(m->std);
      os << '\n';
    }
  }
};

void emit(const Table& t, const std::string& out_dir, const std::string& csv_name) {
  t.print(std::cout);
  std::cout << '\n';
  if (out_dir.empty()) return;
  std::ofstream os(fs::path(out_dir) / csv_name);
  if (!os) throw Error("cannot write " + csv_name);
  t.csv(os);
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) throw ConfigurationError("--out is required");
  fs::create_directories(dir);
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

InfectionState parse_labels(const std::string& text, std::size_t n, std::size_t k) {
  std::istringstream is(text);
  std::vector<int> labels;
  int l;
  while (is >> l) labels.push_back(l);
  if (!is.eof()) throw ParseError("--labels must be whitespace-separated integers");
  if (labels.size() != n) throw DimensionError("--labels has " + std::to_string(labels.size()) + " entries, graph has " +
                                               std::to_string(n) + " nodes");
  return InfectionState(std::move(labels), k);
}

std::string labels_str(const InfectionState& s) {
  std::string out;
  for (int l : s.labels()) out += (out.empty() ? "" : " ") + std::to_string(l);
  return out;
}

void print_metrics(std::ostream& os, const Metrics& m) {
  os << "samples " << m.samples << "\nf1 " << fixed3(m.f1) << "\nprecision " << fixed3(m.precision) << "\nrecall "
     << fixed3(m.recall) << "\naccuracy " << fixed3(m.accuracy) << "\nmean_loss " << fixed3(m.mean_loss) << '\n';
}

void metrics_csv(std::ostream& os, const Metrics& m) {
  os << "samples,f1,precision,recall,accuracy,mean_loss\n"
     << m.samples << ',' << fixed3(m.f1) << ',' << fixed3(m.precision) << ',' << fixed3(m.recall) << ','
     << fixed3(m.accuracy) << ',' << fixed3(m.mean_loss) << '\n';
}

struct TrainFlags {
  std::size_t epochs = TrainConfig{}.epochs;
  double lr = TrainConfig{}.learning_rate;
  double tau_start = TrainConfig{}.tau_start;
  double tau_end = TrainConfig{}.tau_end;
  std::size_t batch = TrainConfig{}.batch_size;
  std::string method = "local";

  void add(CLI::App* cmd) {
    cmd->add_option("--method", method, "gradient source: local or relaxed")
        ->check(CLI::IsMember({"local", "relaxed"}))
        ->capture_default_str();
    cmd->add_option("--epochs", epochs, "training epochs")->capture_default_str();
    cmd->add_option("--lr", lr, "learning rate")->capture_default_str();
    cmd->add_option("--tau-start", tau_start, "initial relaxation temperature")->capture_default_str();
    cmd->add_option("--tau-end", tau_end, "final relaxation temperature")->capture_default_str();
    cmd->add_option("--batch", batch, "mini-batch size")->capture_default_str();
  }

  TrainConfig config(std::uint64_t seed) const {
    TrainConfig c;
    c.epochs = epochs;
    c.learning_rate = lr;
    c.tau_start = tau_start;
    c.tau_end = tau_end;
    c.batch_size = batch;
    c.method = method == "relaxed" ? TrainConfig::Method::Relaxed : TrainConfig::Method::Local;
    c.seed = seed;
    c.validate();
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Competitive worm propagation: simulator, compiled complex-valued network, training"};
  app.require_subcommand(1);

  GraphSource src;
  std::size_t worms = 2, pool_size = 1000, seeds = 0, train_n = 600, test_n = 400, trials = 500, repeats = 5;
  std::uint64_t seed = 1;
  bool exhaustive = false, trace = false, sweep = false;
  std::string out_dir, graph_file, pool_file, state_file, labels, network_file;
  TrainFlags tf;

  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", seed, "master seed")->capture_default_str(); };

  auto* gen = app.add_subcommand("generate", "write a graph with sampled parameters and a sample pool");
  src.add(gen);
  gen->add_option("--worms", worms, "number of worms K (power of two)")->capture_default_str();
  gen->add_option("--pool", pool_size, "number of initial/final pairs")->capture_default_str();
  gen->add_option("--seeds", seeds, "seeded nodes per initial state (default N/2)");
  add_seed(gen);
  gen->add_option("--out", out_dir, "output directory")->required();

  auto* sim = app.add_subcommand("simulate", "run the reference propagation on one initial state");
  sim->add_option("--graph", graph_file, "graph file")->required()->check(CLI::ExistingFile);
  auto* st = sim->add_option("--state", state_file, "state file")->check(CLI::ExistingFile);
  sim->add_option("--labels", labels, "initial labels, e.g. \"1 2 0\"")->excludes(st);
  sim->add_flag("--trace", trace, "print every intermediate state");

  auto* ver = app.add_subcommand("compile-verify", "compile the graph and compare against the simulator");
  ver->add_option("--graph", graph_file, "graph file")->required()->check(CLI::ExistingFile);
  ver->add_option("--network", network_file, "verify this saved network instead of compiling")->check(CLI::ExistingFile);
  ver->add_option("--trials", trials, "random initial states")->capture_default_str();
  ver->add_flag("--exhaustive", exhaustive, "check every initial state");
  add_seed(ver);
  ver->add_option("--out", out_dir, "also save the compiled network here");

  auto* trn = app.add_subcommand("train", "fit parameters on a pool and write a checkpoint");
  trn->add_option("--graph", graph_file, "graph file (only its topology is used)")->required()->check(CLI::ExistingFile);
  trn->add_option("--pool", pool_file, "pool file")->required()->check(CLI::ExistingFile);
  trn->add_option("--train", train_n, "training pairs")->capture_default_str();
  trn->add_option("--test", test_n, "held-out pairs")->capture_default_str();
  tf.add(trn);
  add_seed(trn);
  trn->add_option("--out", out_dir, "output directory")->required();

  auto* evl = app.add_subcommand("eval", "hard-mode metrics of a model on a pool");
  auto* eg = evl->add_option("--graph", graph_file, "model as a graph file")->check(CLI::ExistingFile);
  auto* en = evl->add_option("--network", network_file, "model as a saved network")->check(CLI::ExistingFile);
  eg->excludes(en);
  evl->add_option("--pool", pool_file, "pool file")->required()->check(CLI::ExistingFile);
  evl->add_option("--out", out_dir, "also write eval.csv here");

  auto* rep = app.add_subcommand("report", "repeated experiments: proposed vs random, plus sweeps");
  src.add(rep);
  rep->add_option("--worms", worms, "number of worms K (power of two)")->capture_default_str();
  rep->add_option("--pool", pool_size, "pool size per run")->capture_default_str();
  rep->add_option("--seeds", seeds, "seeded nodes (default N/2)");
  rep->add_option("--train", train_n, "training pairs")->capture_default_str();
  rep->add_option("--test", test_n, "held-out pairs")->capture_default_str();
  rep->add_option("--trials", repeats, "repeated runs per setting")->capture_default_str();
  rep->add_flag("--sweep", sweep, "add worm-count {2,4,8} and seed-count {N/8,N/4,3N/8} tables");
  tf.add(rep);
  add_seed(rep);
  rep->add_option("--out", out_dir, "directory for CSV tables");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      check_worms(worms);
      auto topo = src.topology(worms, seed);
      auto prng = child_rng(seed, 1);
      auto g = apply_params(topo, sample_model_params(topo, prng));
      const std::size_t s = seeds ? seeds : g.node_count() / 2;
      auto pool = gen_sample_pool(g, pool_size, s, child_rng(seed, 2)());
      ensure_dir(out_dir);
      io::save_graph(path_in(out_dir, "graph.txt"), g);
      io::save_pool(path_in(out_dir, "pool.txt"), pool);
      std::cout << "graph " << io::graph_id(g) << " nodes " << g.node_count() << " edges " << g.edge_count()
                << " worms " << worms << "\npool " << pool.size() << " pairs, " << s << " seeds each\n";
      return 0;
    }

    if (sim->parsed()) {
      auto g = io::load_graph(graph_file);
      InfectionState init;
      if (!state_file.empty())
        init = io::load_state(state_file);
      else if (!labels.empty())
        init = parse_labels(labels, g.node_count(), g.worm_count());
      else
        throw ConfigurationError("simulate needs --state or --labels");
      auto [fin, tr] = propagate(g, init);
      if (trace) write_trace(std::cout, tr);
      std::cout << "final " << labels_str(fin) << "\nconverged_at " << tr.converged_at << '\n';
      return 0;
    }

    if (ver->parsed()) {
      auto g = io::load_graph(graph_file);
      auto net = network_file.empty() ? build_global_network(g) : io::load_network(network_file);
      if (!out_dir.empty()) {
        ensure_dir(out_dir);
        io::save_network(path_in(out_dir, "network.cvnn"), net);
      }
      auto rep_ = exhaustive ? verify_network_exhaustive(net, g) : verify_network(net, g, trials, seed);
      std::cout << (exhaustive ? "exhaustive " : "random ") << rep_.trials - rep_.mismatches << '/' << rep_.trials
                << " match\n";
      if (rep_.first_counterexample) {
        const auto& c = *rep_.first_counterexample;
        std::cout << "counterexample initial " << labels_str(c.initial) << "\nexpected " << labels_str(c.expected)
                  << "\ngot " << (c.got ? labels_str(*c.got) : std::string("(invalid status)")) << '\n';
        if (!c.detail.empty()) std::cout << c.detail << '\n';
      }
      return rep_.ok() ? 0 : kExitMismatch;
    }

    if (trn->parsed()) {
      auto g = io::load_graph(graph_file);
      auto pool = io::load_pool(pool_file);
      if (pool.worm_count != g.worm_count()) throw DimensionError("pool and graph disagree on K");
      auto split_rng = child_rng(seed, 0);
      auto split = split_pool(pool, train_n, test_n, split_rng);
      if (split.train.empty()) throw PreconditionError("--train must be positive");
      auto res = train(g, split.train, tf.config(child_rng(seed, 1)()));
      ensure_dir(out_dir);
      auto model = apply_params(g, res.params);
      io::save_graph(path_in(out_dir, "model.txt"), model);
      io::save_network(path_in(out_dir, "network.cvnn"), build_global_network(model));
      {
        std::ofstream os(path_in(out_dir, "history.csv"));
        write_history_csv(os, res.history);
      }
      SamplePool test_pool = pool;
      test_pool.pairs = split.test;
      io::save_pool(path_in(out_dir, "test_pool.txt"), test_pool);
      if (res.aborted) std::cerr << "training aborted: " << res.abort_reason << '\n';
      std::cout << "epochs " << res.history.size() << '\n';
      if (!split.test.empty()) {
        auto m = evaluate(model, split.test);
        std::cout << "test\n";
        print_metrics(std::cout, m);
      }
      return res.aborted ? 1 : 0;
    }

    if (evl->parsed()) {
      auto pool = io::load_pool(pool_file);
      if (pool.pairs.empty()) throw PreconditionError("pool is empty");
      Metrics m;
      if (!graph_file.empty()) {
        m = evaluate(io::load_graph(graph_file), pool.pairs);
      } else if (!network_file.empty()) {
        auto net = io::load_network(network_file);
        std::vector<InfectionState> pred, truth;
        for (const auto& p : pool.pairs) {
          pred.push_back(run_compiled(net, p.initial, pool.worm_count));
          truth.push_back(p.final_state);
        }
        m = score_predictions(pred, truth, pool.worm_count);
      } else {
        throw ConfigurationError("eval needs --graph or --network");
      }
      print_metrics(std::cout, m);
      if (!out_dir.empty()) {
        ensure_dir(out_dir);
        std::ofstream os(path_in(out_dir, "eval.csv"));
        metrics_csv(os, m);
      }
      return 0;
    }

    if (rep->parsed()) {
      check_worms(worms);
      if (!out_dir.empty()) ensure_dir(out_dir);
      auto topo = src.topology(worms, seed);
      const std::size_t n = topo.node_count();
      TrialConfig tc;
      tc.pool_size = pool_size;
      tc.num_seeds = seeds;
      tc.train_size = train_n;
      tc.test_size = test_n;
      tc.train = tf.config(seed);
      const std::uint64_t run_seed = child_rng(seed, 1)();

      auto main_run = run_repeated(topo, tc, repeats, run_seed);
      Table t{"N=" + std::to_string(n) + " K=" + std::to_string(worms) + " seeds=" +
                  std::to_string(seeds ? seeds : n / 2) + " runs=" + std::to_string(repeats),
              "method",
              {{"proposed", main_run.proposed}, {"random", main_run.random}}};
      emit(t, out_dir, "report.csv");

      if (sweep) {
        Table tw{"worm-count sweep (proposed)", "worms", {}};
        for (std::size_t k : {2u, 4u, 8u}) {
          auto r = run_repeated(src.topology(k, seed), tc, repeats, run_seed);
          tw.rows.push_back({std::to_string(k), r.proposed});
        }
        emit(tw, out_dir, "sweep_worms.csv");

        Table ts{"seed-count sweep (proposed)", "seeds", {}};
        for (std::size_t s : {n / 8, n / 4, 3 * n / 8}) {
          if (s == 0) continue;
          TrialConfig c = tc;
          c.num_seeds = s;
          auto r = run_repeated(topo, c, repeats, run_seed);
          ts.rows.push_back({std::to_string(s), r.proposed});
        }
        emit(ts, out_dir, "sweep_seeds.csv");
      }
      if (main_run.aborted) std::cerr << main_run.aborted << " run(s) stopped training early\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
