#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "gmmf/csv.hpp"
#include "gmmf/diversifier.hpp"
#include "gmmf/errors.hpp"
#include "gmmf/graph_io.hpp"
#include "gmmf/harness.hpp"
#include "gmmf/matcher.hpp"
#include "gmmf/mcer.hpp"

namespace fs = std::filesystem;
using namespace gmmf;

namespace {

enum Exit { ok = 0, config_error = 1, io_error = 2, oracle_error = 3 };

struct MatchInputs {
  std::string a, b, s;
  double lambda = 0.0;
  std::string scheme = "centered";
  std::vector<std::string> seeds;  // "i:j"
};

struct SolverFlags {
  int restarts = 20;
  int max_iters = 100;
  double eta = 0.0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

void add_inputs(CLI::App* cmd, MatchInputs& in, bool with_seeds) {
  cmd->add_option("-a,--template", in.a, "template graph (edge list or dense .csv)")->required();
  cmd->add_option("-b,--background", in.b, "background graph")->required();
  cmd->add_option("-s,--similarity", in.s, "m x n similarity matrix (.csv)");
  cmd->add_option("-l,--lambda", in.lambda, "similarity weight");
  cmd->add_option("--scheme", in.scheme, "centered or naive")->check(CLI::IsMember({"centered", "naive"}));
  if (with_seeds) cmd->add_option("--seed-pair", in.seeds, "fixed correspondence i:j (repeatable)");
}

void add_solver(CLI::App* cmd, SolverFlags& f) {
  cmd->add_option("-r,--restarts", f.restarts, "random restarts");
  cmd->add_option("--max-iters", f.max_iters, "Frank-Wolfe iterations per restart");
  cmd->add_option("--eta", f.eta, "stopping tolerance (0: 1e-6 n)");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--threads", f.threads, "restarts solved in parallel");
}

std::vector<std::pair<std::size_t, std::size_t>> parse_seeds(const std::vector<std::string>& raw) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& s : raw) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw ConfigError("seed pair '" + s + "' is not of the form i:j");
    try {
      out.emplace_back(static_cast<std::size_t>(csv::parse_int(std::string_view(s).substr(0, colon))),
                       static_cast<std::size_t>(csv::parse_int(std::string_view(s).substr(colon + 1))));
    } catch (const std::exception&) {
      throw ConfigError("seed pair '" + s + "' is not of the form i:j");
    }
  }
  return out;
}

struct Problem {
  Graph a, b;
  SimilarityMatrix s;
};

Problem load_problem(const MatchInputs& in) {
  Problem p{read_graph(in.a), read_graph(in.b), {}};
  if (!in.s.empty()) p.s = read_matrix_csv(fs::path(in.s));
  return p;
}

FwConfig fw_config(const MatchInputs& in, const SolverFlags& f, std::size_t seeds) {
  FwConfig c;
  c.lambda = in.lambda;
  c.eta = f.eta;
  c.max_iters = f.max_iters;
  c.n_restarts = f.restarts;
  c.seeds = seeds;
  c.scheme = padding_from_string(in.scheme);
  c.master_seed = f.seed;
  c.threads = f.threads;
  return c;
}

void print_assignment(const Assignment& a) {
  for (std::size_t i = 0; i < a.size(); ++i) std::cout << (i ? "," : "") << a[i];
  std::cout << '\n';
}

int run_match(const MatchInputs& in, const SolverFlags& f, const std::string& out_path) {
  const Problem p = load_problem(in);
  const auto seed_pairs = parse_seeds(in.seeds);
  const SeededFrame frame(p.a.size(), p.b.size(), seed_pairs);
  const FwConfig cfg = fw_config(in, f, seed_pairs.size());
  cfg.validate(p.a.size());
  const PaddedPair pp = pad(frame.template_graph(p.a), frame.background_graph(p.b), cfg.scheme);
  const auto ranked = match_restarts(pp, frame.to_frame(p.s), cfg);
  std::vector<Assignment> out;
  std::cout << "rank,restart,objective,iterations,converged\n";
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    std::cout << r + 1 << ',' << ranked[r].restart << ',' << csv::format_double(ranked[r].objective) << ','
              << ranked[r].iterations << ',' << (ranked[r].converged ? 1 : 0) << '\n';
    out.push_back(frame.from_frame(ranked[r].assignment));
  }
  std::cout << "best: ";
  print_assignment(out.front());
  if (!out_path.empty()) write_assignments(out_path, out);
  return ok;
}

int run_discover(const MatchInputs& in, const SolverFlags& f, const std::vector<double>& eps, bool per_round,
                 std::size_t rounds, const std::string& strategy, const std::string& out_path) {
  const Problem p = load_problem(in);
  const auto seed_pairs = parse_seeds(in.seeds);
  const SeededFrame frame(p.a.size(), p.b.size(), seed_pairs);
  const FwConfig cfg = fw_config(in, f, seed_pairs.size());
  cfg.validate(p.a.size());
  const PaddedPair pp = pad(frame.template_graph(p.a), frame.background_graph(p.b), cfg.scheme);
  const PenaltySchedule schedule = per_round ? PenaltySchedule::per_round(eps) : PenaltySchedule::fixed(eps.at(0));
  const DiscoveryLog log = discover(pp, frame.to_frame(p.s), cfg, schedule, strategy_from_string(strategy), rounds);
  std::vector<Assignment> out;
  std::cout << "round,eps,objective,masked_objective,iterations,novel_nodes\n";
  const Assignment baseline = frame.from_frame(log.rounds.front().assignment);
  for (std::size_t r = 0; r < log.rounds.size(); ++r) {
    const auto& round = log.rounds[r];
    out.push_back(frame.from_frame(round.assignment));
    std::cout << r + 1 << ',' << csv::format_double(round.eps) << ',' << csv::format_double(round.objective) << ','
              << csv::format_double(round.masked_objective) << ',' << round.iterations << ','
              << novel_nodes(out.back(), baseline) << '\n';
  }
  if (!out_path.empty()) write_assignments(out_path, out);
  return ok;
}

int run_oracle(const MatchInputs& in) {
  const Problem p = load_problem(in);
  const OracleResult r = brute_force_match(p.a, p.b, p.s, in.lambda, padding_from_string(in.scheme));
  std::cout << "objective: " << csv::format_double(r.objective) << "\nassignment: ";
  print_assignment(r.assignment);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-matching matched filters with solution diversification"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "sample a multiple correlated Erdos-Renyi instance");
  std::string gen_config, gen_out = ".";
  std::size_t gen_k = 10;
  std::uint64_t gen_seed = 0;
  ModelConfig gen_model;
  gen->add_option("--config", gen_config, "experiment JSON whose model section is used");
  gen->add_option("--m", gen_model.m, "template size");
  gen->add_option("--n", gen_model.n, "background size");
  gen->add_option("--p", gen_model.p, "edge probability");
  gen->add_option("--k", gen_k, "shared nodes");
  gen->add_option("--template-corr", gen_model.template_corr, "correlation of each template outside the shared block");
  gen->add_option("--overlap-corr", gen_model.overlap_corr, "correlation inside the shared block");
  gen->add_option("--template-means", gen_model.similarity.template_means, "similarity mean per template");
  gen->add_option("--overlap-mean", gen_model.similarity.overlap_mean, "similarity mean of shared nodes");
  gen->add_option("--background-mean", gen_model.similarity.background_mean, "similarity mean elsewhere");
  gen->add_option("--seed", gen_seed, "random seed");
  gen->add_option("-o,--out", gen_out, "output directory");

  // match
  auto* match = app.add_subcommand("match", "ranked Frank-Wolfe restarts on graphs from files");
  MatchInputs match_in;
  SolverFlags match_flags;
  std::string match_out;
  add_inputs(match, match_in, true);
  add_solver(match, match_flags);
  match->add_option("-o,--out", match_out, "write ranked assignments here");

  // discover
  auto* disc = app.add_subcommand("discover", "multi-round discovery with penalty masks");
  MatchInputs disc_in;
  SolverFlags disc_flags;
  std::vector<double> disc_eps{0.5};
  bool disc_per_round = false;
  std::size_t disc_rounds = 2;
  std::string disc_strategy = "similarity", disc_out;
  add_inputs(disc, disc_in, true);
  add_solver(disc, disc_flags);
  disc->add_option("--eps", disc_eps, "penalty (one value, or one per round with --per-round)");
  disc->add_flag("--per-round", disc_per_round, "use a distinct eps for each round");
  disc->add_option("--rounds", disc_rounds, "number of rounds");
  disc->add_option("--strategy", disc_strategy, "similarity, gradient or initialization")
      ->check(CLI::IsMember({"similarity", "gradient", "initialization"}));
  disc->add_option("-o,--out", disc_out, "write one assignment per round here");

  // grid
  auto* grid = app.add_subcommand("grid", "run an experiment grid and write the CSV tables");
  std::string grid_config;
  std::optional<std::uint64_t> grid_seed;
  std::optional<std::size_t> grid_reps;
  std::optional<unsigned> grid_workers;
  std::optional<std::string> grid_reps_csv, grid_agg_csv;
  bool grid_timing = false;
  grid->add_option("config", grid_config, "experiment JSON")->required();
  grid->add_option("--master-seed", grid_seed, "override master_seed");
  grid->add_option("--reps", grid_reps, "override mc_reps");
  grid->add_option("--workers", grid_workers, "override workers");
  grid->add_option("--reps-csv", grid_reps_csv, "override outputs.reps_csv");
  grid->add_option("--aggregate-csv", grid_agg_csv, "override outputs.aggregate_csv");
  grid->add_flag("--timing", grid_timing, "record wall_ms");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "exhaustive search (at most 1e7 injections)");
  MatchInputs oracle_in;
  add_inputs(oracle, oracle_in, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try {
    if (*gen) {
      if (!gen_config.empty()) gen_model = load_config(gen_config).model;
      if (gen_model.from_files()) throw ConfigError("generate needs a synthetic model");
      const McerSpec spec = gen_model.mcer(gen_k);
      Rng rng(gen_seed);
      const McerInstance inst = sample_mcer(spec, gen_model.similarity, rng);
      const fs::path dir(gen_out);
      fs::create_directories(dir);
      write_edge_list(dir / "A.edges", inst.a);
      write_edge_list(dir / "B.edges", inst.b);
      write_matrix_csv(dir / "S.csv", inst.s);
      write_assignments(dir / "truth.csv", inst.truth);
      std::cout << "wrote " << (dir / "A.edges").string() << ", B.edges, S.csv, truth.csv\n";
      return ok;
    }
    if (*match) return run_match(match_in, match_flags, match_out);
    if (*disc) return run_discover(disc_in, disc_flags, disc_eps, disc_per_round, disc_rounds, disc_strategy, disc_out);
    if (*grid) {
      ExperimentConfig cfg = load_config(grid_config);
      if (grid_seed) cfg.master_seed = *grid_seed;
      if (grid_reps) cfg.mc_reps = *grid_reps;
      if (grid_workers) cfg.workers = *grid_workers;
      if (grid_reps_csv) cfg.outputs.reps_csv = *grid_reps_csv;
      if (grid_agg_csv) cfg.outputs.aggregate_csv = *grid_agg_csv;
      if (grid_timing) cfg.timing = true;
      const ResultTable table = run_grid(cfg);
      emit_results(table, cfg.outputs);
      std::cout << "lambda,k,eps1,eps2,majority\n";
      for (const auto& c : table.cells)
        std::cout << csv::format_double(c.cell.lambda) << ',' << c.cell.k << ',' << csv::format_double(c.cell.eps1)
                  << ',' << csv::format_double(c.cell.eps2) << ',' << label_name(c.majority) << '\n';
      return ok;
    }
    if (*oracle) return run_oracle(oracle_in);
  } catch (const OracleTooLarge& e) {
    std::cerr << "error: " << e.what() << '\n';
    return oracle_error;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return io_error;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return io_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return config_error;
  }
  return ok;
}
