#include "gmmf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <istream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "gmmf/csv.hpp"
#include "gmmf/errors.hpp"
#include "gmmf/graph_io.hpp"

namespace gmmf {
namespace {

using nlohmann::json;
using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

constexpr double kOracleLimit = 1e7;

// ---- JSON helpers -------------------------------------------------------

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read_field(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
  }
}

void read_path(const json& obj, const char* key, std::optional<std::filesystem::path>& out, const std::string& where) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_string()) throw ConfigError("'" + std::string(key) + "' in " + where + " must be a path string");
  out = std::filesystem::path(obj.at(key).get<std::string>());
}

// ---- grid bookkeeping ---------------------------------------------------

struct Instance {
  Graph a, b;
  SimilarityMatrix s;
  std::vector<Assignment> truth;
};

Instance load_instance(const ModelConfig& model) {
  Instance inst;
  inst.a = read_graph(*model.a_path);
  inst.b = read_graph(*model.b_path);
  if (model.s_path) inst.s = read_matrix_csv(*model.s_path);
  if (model.truth_path) inst.truth = read_assignments(*model.truth_path, inst.b.size());
  return inst;
}

std::vector<std::size_t> shared_nodes(const std::vector<Assignment>& truth) {
  std::vector<std::size_t> out;
  if (truth.empty()) return out;
  for (std::size_t i = 0; i < truth.front().size(); ++i) {
    bool same = true;
    for (const auto& t : truth) same = same && t[i] == truth.front()[i];
    if (same) out.push_back(i);
  }
  return out;
}

// Fisher-Yates on the first `count` positions, driven by unit_uniform so the
// draw does not depend on the standard library's distributions.
std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> pool, std::size_t count, Rng& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t span = pool.size() - i;
    const auto pick = i + std::min(span - 1, static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(span)));
    std::swap(pool[i], pool[pick]);
  }
  pool.resize(count);
  return pool;
}

std::vector<CellKey> eps_cells(const ExperimentConfig& config, double lambda, std::size_t k) {
  std::vector<CellKey> cells;
  if (config.grid.three_rounds()) {
    for (const double e1 : config.grid.eps1)
      for (const double e2 : config.grid.eps2) cells.push_back({lambda, k, e1, e2, 3});
  } else {
    for (const double e : config.grid.eps) cells.push_back({lambda, k, e, 0.0, 2});
  }
  return cells;
}

PenaltySchedule schedule_for(const CellKey& cell) {
  if (cell.rounds == 3) return PenaltySchedule::per_round({cell.eps1, cell.eps2});
  return PenaltySchedule::fixed(cell.eps1);
}

void run_pool(std::size_t tasks, unsigned workers, const std::function<void(std::size_t)>& body) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(tasks, 1))));
  if (workers == 1) {
    for (std::size_t t = 0; t < tasks; ++t) body(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t t = next++; t < tasks; t = next++) {
        try {
          body(t);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = tasks;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// ---- CSV helpers --------------------------------------------------------

std::string fmt(double v) { return csv::format_double(v); }

void write_cell(std::ostream& out, const CellKey& c) {
  out << fmt(c.lambda) << ',' << c.k << ',' << fmt(c.eps1) << ',' << fmt(c.eps2) << ',' << c.rounds;
}

CellKey parse_cell(const std::vector<std::string>& f) {
  return {csv::parse_double(f[0]), static_cast<std::size_t>(csv::parse_int(f[1])), csv::parse_double(f[2]),
          csv::parse_double(f[3]), static_cast<std::size_t>(csv::parse_int(f[4]))};
}

std::size_t count_prefixed(const std::vector<std::string>& header, const std::string& prefix) {
  return static_cast<std::size_t>(std::count_if(header.begin(), header.end(), [&](const std::string& h) {
    return h.rfind(prefix, 0) == 0;
  }));
}

std::vector<std::string> read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("missing CSV header");
  return csv::split(line);
}

}  // namespace

// ---- config -------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (grid.lambda.empty() || grid.k.empty()) throw ConfigError("grid needs at least one lambda and one k");
  if (grid.three_rounds()) {
    if (grid.eps2.empty()) throw ConfigError("three-round grids need both eps1 and eps2");
  } else if (grid.eps.empty()) {
    throw ConfigError("grid needs at least one eps");
  }
  auto check_eps = [](const std::vector<double>& v) {
    for (const double e : v)
      if (!(e >= 0.0 && e < 1.0)) throw ConfigError("every eps must lie in [0, 1)");
  };
  check_eps(grid.eps);
  check_eps(grid.eps1);
  check_eps(grid.eps2);
  for (const double l : grid.lambda)
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("lambda must be finite and nonnegative");
  if (mc_reps < 1) throw ConfigError("mc_reps must be at least 1");
  if (!(label_threshold > 0.0 && label_threshold <= 1.0)) throw ConfigError("label_threshold must lie in (0, 1]");
  FwConfig probe = matcher;
  probe.seeds = 0;
  probe.lambda = 0.0;
  probe.validate(model.m);

  if (model.from_files()) {
    if (!model.b_path) throw ConfigError("file models need both 'a' and 'b'");
    if (grid.k.size() != 1) throw ConfigError("file models take a single k");
    if (seeds_from_overlap > 0 && !model.truth_path) throw ConfigError("seeding from the overlap needs a truth file");
    return;
  }
  if (model.template_corr.empty()) throw ConfigError("model needs at least one template correlation");
  if (rounds() > 2 && model.template_corr.size() < 2) throw ConfigError("three-round grids expect several templates");
  if (model.use_similarity && model.similarity.template_means.size() != model.template_corr.size())
    throw ConfigError("one similarity mean per template is required");
  try {
    if (model.use_similarity) model.similarity.validate();
    for (const auto k : grid.k) model.mcer(k).validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(e.what());
  }
  const bool several = model.template_corr.size() > 1;
  for (const auto k : grid.k)
    if (seeds_from_overlap > (several ? k : model.m))
      throw ConfigError("seeds_from_overlap exceeds the number of shared nodes");
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  check_keys(j, "config",
             {"model", "grid", "matcher", "strategy", "mc_reps", "seeds_from_overlap", "label_threshold", "master_seed",
              "workers", "timing", "outputs"});
  if (j.contains("model")) {
    const json& mj = j.at("model");
    check_keys(mj, "model",
               {"m", "n", "p", "template_corr", "overlap_corr", "similarity", "use_similarity", "a", "b", "s", "truth"});
    read_field(mj, "m", c.model.m, "model");
    read_field(mj, "n", c.model.n, "model");
    read_field(mj, "p", c.model.p, "model");
    read_field(mj, "template_corr", c.model.template_corr, "model");
    read_field(mj, "overlap_corr", c.model.overlap_corr, "model");
    read_field(mj, "use_similarity", c.model.use_similarity, "model");
    read_path(mj, "a", c.model.a_path, "model");
    read_path(mj, "b", c.model.b_path, "model");
    read_path(mj, "s", c.model.s_path, "model");
    read_path(mj, "truth", c.model.truth_path, "model");
    if (mj.contains("similarity")) {
      const json& sj = mj.at("similarity");
      check_keys(sj, "model.similarity", {"template_means", "overlap_mean", "background_mean"});
      read_field(sj, "template_means", c.model.similarity.template_means, "model.similarity");
      read_field(sj, "overlap_mean", c.model.similarity.overlap_mean, "model.similarity");
      read_field(sj, "background_mean", c.model.similarity.background_mean, "model.similarity");
    }
  }
  if (j.contains("grid")) {
    const json& gj = j.at("grid");
    check_keys(gj, "grid", {"eps", "eps1", "eps2", "lambda", "k"});
    read_field(gj, "eps", c.grid.eps, "grid");
    read_field(gj, "eps1", c.grid.eps1, "grid");
    read_field(gj, "eps2", c.grid.eps2, "grid");
    read_field(gj, "lambda", c.grid.lambda, "grid");
    read_field(gj, "k", c.grid.k, "grid");
  }
  if (j.contains("matcher")) {
    const json& fj = j.at("matcher");
    check_keys(fj, "matcher", {"n_restarts", "max_iters", "eta", "scheme", "threads"});
    read_field(fj, "n_restarts", c.matcher.n_restarts, "matcher");
    read_field(fj, "max_iters", c.matcher.max_iters, "matcher");
    read_field(fj, "eta", c.matcher.eta, "matcher");
    read_field(fj, "threads", c.matcher.threads, "matcher");
    if (fj.contains("scheme")) {
      std::string scheme;
      read_field(fj, "scheme", scheme, "matcher");
      try {
        c.matcher.scheme = padding_from_string(scheme);
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
    }
  }
  if (j.contains("strategy")) {
    std::string name;
    read_field(j, "strategy", name, "config");
    try {
      c.strategy = strategy_from_string(name);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  read_field(j, "mc_reps", c.mc_reps, "config");
  read_field(j, "seeds_from_overlap", c.seeds_from_overlap, "config");
  read_field(j, "label_threshold", c.label_threshold, "config");
  read_field(j, "master_seed", c.master_seed, "config");
  read_field(j, "workers", c.workers, "config");
  read_field(j, "timing", c.timing, "config");
  if (j.contains("outputs")) {
    const json& oj = j.at("outputs");
    check_keys(oj, "outputs", {"reps_csv", "aggregate_csv"});
    std::string path;
    if (oj.contains("reps_csv")) {
      read_field(oj, "reps_csv", path, "outputs");
      c.outputs.reps_csv = path;
    }
    if (oj.contains("aggregate_csv")) {
      read_field(oj, "aggregate_csv", path, "outputs");
      c.outputs.aggregate_csv = path;
    }
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json model;
  if (c.model.from_files()) {
    model["a"] = c.model.a_path->string();
    if (c.model.b_path) model["b"] = c.model.b_path->string();
    if (c.model.s_path) model["s"] = c.model.s_path->string();
    if (c.model.truth_path) model["truth"] = c.model.truth_path->string();
  } else {
    model = {{"m", c.model.m},
             {"n", c.model.n},
             {"p", c.model.p},
             {"template_corr", c.model.template_corr},
             {"overlap_corr", c.model.overlap_corr},
             {"use_similarity", c.model.use_similarity},
             {"similarity",
              {{"template_means", c.model.similarity.template_means},
               {"overlap_mean", c.model.similarity.overlap_mean},
               {"background_mean", c.model.similarity.background_mean}}}};
  }
  json grid = {{"lambda", c.grid.lambda}, {"k", c.grid.k}};
  if (c.grid.three_rounds()) {
    grid["eps1"] = c.grid.eps1;
    grid["eps2"] = c.grid.eps2;
  } else {
    grid["eps"] = c.grid.eps;
  }
  return {{"model", model},
          {"grid", grid},
          {"matcher",
           {{"n_restarts", c.matcher.n_restarts},
            {"max_iters", c.matcher.max_iters},
            {"eta", c.matcher.eta},
            {"scheme", std::string(to_string(c.matcher.scheme))},
            {"threads", c.matcher.threads}}},
          {"strategy", std::string(to_string(c.strategy))},
          {"mc_reps", c.mc_reps},
          {"seeds_from_overlap", c.seeds_from_overlap},
          {"label_threshold", c.label_threshold},
          {"master_seed", c.master_seed},
          {"workers", c.workers},
          {"timing", c.timing},
          {"outputs", {{"reps_csv", c.outputs.reps_csv.string()}, {"aggregate_csv", c.outputs.aggregate_csv.string()}}}};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return config_from_json(j);
}

// ---- metrics ------------------------------------------------------------

std::string label_name(int label) { return label < 0 ? "none" : "t" + std::to_string(label + 1); }

int label_from_name(const std::string& name) {
  if (name == "none") return -1;
  if (name.size() >= 2 && name[0] == 't') {
    const long long v = csv::parse_int(std::string_view(name).substr(1));
    if (v >= 1) return static_cast<int>(v - 1);
  }
  throw InvalidArgument("unknown label '" + name + "'");
}

Recovery recovery_label(const Assignment& a, const std::vector<Assignment>& truth, double threshold) {
  if (truth.empty()) throw InvalidArgument("at least one truth assignment is required");
  Recovery r;
  for (const auto& t : truth) {
    if (t.size() != a.size()) throw DimensionError("truth and assignment sizes differ");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < a.size(); ++i) hits += a[i] == t[i];
    r.fractions.push_back(a.size() == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(a.size()));
  }
  const auto best = std::max_element(r.fractions.begin(), r.fractions.end());
  const bool tie = std::count(r.fractions.begin(), r.fractions.end(), *best) > 1;
  if (*best >= threshold && !tie) r.label = static_cast<int>(best - r.fractions.begin());
  return r;
}

int majority_label(const std::vector<int>& labels) {
  std::vector<int> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    if (2 * (j - i) > sorted.size()) return sorted[i];
    i = j;
  }
  return -1;
}

double ged_proxy(const Graph& a, const Graph& b, const Assignment& sigma) {
  if (sigma.size() != a.size() || sigma.background_size() != b.size())
    throw DimensionError("assignment does not fit the graphs");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) total += std::abs(a(i, j) - b(sigma[i], sigma[j]));
  return total;
}

std::size_t novel_nodes(const Assignment& a, const Assignment& baseline) {
  const std::set<std::size_t> base(baseline.values().begin(), baseline.values().end());
  std::size_t novel = 0;
  for (std::size_t i = 0; i < a.size(); ++i) novel += base.count(a[i]) == 0;
  return novel;
}

double injection_count(std::size_t m, std::size_t n) {
  if (m > n) return 0.0;
  double count = 1.0;
  for (std::size_t i = 0; i < m; ++i) count *= static_cast<double>(n - i);
  return count;
}

OracleResult brute_force_match(const Graph& a, const Graph& b, const SimilarityMatrix& s, double lambda,
                               Padding scheme) {
  const std::size_t m = a.size(), n = b.size();
  if (m > n) throw DimensionError("template has more nodes than the background");
  check_similarity_shape(s, m, n);
  if (injection_count(m, n) > kOracleLimit)
    throw OracleTooLarge("exhaustive search over " + fmt(injection_count(m, n)) + " injections exceeds the 1e7 guard");
  const PaddedPair pp = pad(a, b, scheme);
  const Matrix& t = pp.template_block;
  const Matrix& g = pp.background;
  const bool use_s = s.size() > 0 && lambda != 0.0;

  std::vector<std::size_t> sigma(m), best;
  std::vector<bool> used(n, false);
  double best_value = -std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, double)> dfs = [&](std::size_t i, double value) {
    if (i == m) {
      if (value > best_value) {
        best_value = value;
        best = sigma;
      }
      return;
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (used[v]) continue;
      double gain = t(idx(i), idx(i)) * g(idx(v), idx(v));
      for (std::size_t j = 0; j < i; ++j) gain += 2.0 * t(idx(i), idx(j)) * g(idx(sigma[j]), idx(v));
      if (use_s) gain += lambda * s(idx(i), idx(v));
      sigma[i] = v;
      used[v] = true;
      dfs(i + 1, value + gain);
      used[v] = false;
    }
  };
  dfs(0, 0.0);
  OracleResult out;
  out.assignment = Assignment(best, n);
  out.objective = objective(pp, out.assignment, s, lambda);
  return out;
}

// ---- grid ---------------------------------------------------------------

std::vector<AggregateRow> aggregate(const std::vector<RepRow>& reps, std::size_t templates) {
  std::vector<AggregateRow> out;
  for (std::size_t i = 0; i < reps.size();) {
    std::size_t j = i;
    while (j < reps.size() && reps[j].cell == reps[i].cell) ++j;
    AggregateRow row;
    row.cell = reps[i].cell;
    row.reps = j - i;
    row.mean_fractions.assign(templates, 0.0);
    row.label_counts.assign(templates + 1, 0);
    std::vector<int> labels;
    for (std::size_t r = i; r < j; ++r) {
      for (std::size_t t = 0; t < templates && t < reps[r].fractions.size(); ++t)
        row.mean_fractions[t] += reps[r].fractions[t];
      const int l = reps[r].label;
      ++row.label_counts[l < 0 ? templates : static_cast<std::size_t>(l)];
      labels.push_back(l);
    }
    for (auto& f : row.mean_fractions) f /= static_cast<double>(row.reps);
    row.majority = majority_label(labels);
    out.push_back(std::move(row));
    i = j;
  }
  return out;
}

ResultTable run_grid(const ExperimentConfig& config) {
  config.validate();
  const bool files = config.model.from_files();
  std::optional<Instance> shared;
  if (files) shared = load_instance(config.model);
  const std::size_t templates = files ? shared->truth.size() : config.model.template_corr.size();
  const std::size_t reps = config.mc_reps;

  struct Task {
    double lambda;
    std::size_t k;
    std::size_t rep;
    std::size_t first_cell;  // index of the task's first cell in the full cell list
  };
  std::vector<CellKey> cells;
  std::vector<Task> tasks;
  for (const double lambda : config.grid.lambda)
    for (const std::size_t k : config.grid.k) {
      const auto block = eps_cells(config, lambda, k);
      for (std::size_t rep = 0; rep < reps; ++rep) tasks.push_back({lambda, k, rep, cells.size()});
      cells.insert(cells.end(), block.begin(), block.end());
    }

  ResultTable table;
  table.templates = templates;
  table.reps.resize(cells.size() * reps);

  run_pool(tasks.size(), config.workers, [&](std::size_t task_index) {
    const Task& task = tasks[task_index];
    const std::uint64_t rep_seed = derive_seed(derive_seed(config.master_seed, 0x100000 + task.k), task.rep);
    Instance inst;
    if (files) {
      inst = *shared;
    } else {
      Rng rng = make_rng(rep_seed, 0);
      const McerSpec spec = config.model.mcer(task.k);
      McerInstance mi = config.model.use_similarity ? sample_mcer(spec, config.model.similarity, rng)
                                                     : sample_mcer(spec, rng);
      inst = {std::move(mi.a), std::move(mi.b), std::move(mi.s), std::move(mi.truth)};
    }

    std::vector<std::pair<std::size_t, std::size_t>> seed_pairs;
    if (config.seeds_from_overlap > 0) {
      Rng rng = make_rng(rep_seed, 1);
      const auto pool = shared_nodes(inst.truth);
      if (pool.size() < config.seeds_from_overlap) throw ConfigError("not enough shared nodes to draw seeds from");
      for (const auto i : sample_without_replacement(pool, config.seeds_from_overlap, rng))
        seed_pairs.emplace_back(i, inst.truth.front()[i]);
    }
    const SeededFrame frame(inst.a.size(), inst.b.size(), seed_pairs);
    const PaddedPair pp =
        pad(frame.template_graph(inst.a), frame.background_graph(inst.b), config.matcher.scheme);
    const SimilarityMatrix s = frame.to_frame(inst.s);

    FwConfig fw = config.matcher;
    fw.lambda = task.lambda;
    fw.seeds = seed_pairs.size();
    fw.master_seed = derive_seed(rep_seed, 2);

    const auto block = eps_cells(config, task.lambda, task.k);
    DiscoveryLog previous;
    for (std::size_t c = 0; c < block.size(); ++c) {
      const auto start = std::chrono::steady_clock::now();
      DiscoveryLog log = discover(pp, s, fw, schedule_for(block[c]), config.strategy, block[c].rounds,
                                  c == 0 ? nullptr : &previous);
      const auto stop = std::chrono::steady_clock::now();

      const Assignment final = frame.from_frame(log.rounds.back().assignment);
      const Assignment baseline = frame.from_frame(log.rounds.front().assignment);
      RepRow row;
      row.cell = block[c];
      row.rep = task.rep;
      if (!inst.truth.empty()) {
        const Recovery rec = recovery_label(final, inst.truth, config.label_threshold);
        row.label = rec.label;
        row.fractions = rec.fractions;
      }
      row.ged = ged_proxy(inst.a, inst.b, final);
      row.novel_nodes = novel_nodes(final, baseline);
      row.objective = log.rounds.back().objective;
      row.iterations = log.rounds.back().iterations;
      if (config.timing) row.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
      table.reps[(task.first_cell + c) * reps + task.rep] = std::move(row);
      previous = std::move(log);
    }
  });

  table.cells = aggregate(table.reps, templates);
  return table;
}

// ---- CSV ----------------------------------------------------------------

void write_reps_csv(std::ostream& out, const ResultTable& table) {
  out << "lambda,k,eps1,eps2,rounds,rep,label";
  for (std::size_t t = 0; t < table.templates; ++t) out << ",frac_t" << t + 1;
  out << ",ged,novel_nodes,objective,iterations,wall_ms\n";
  for (const auto& r : table.reps) {
    write_cell(out, r.cell);
    out << ',' << r.rep << ',' << label_name(r.label);
    for (std::size_t t = 0; t < table.templates; ++t)
      out << ',' << fmt(t < r.fractions.size() ? r.fractions[t] : 0.0);
    out << ',' << fmt(r.ged) << ',' << r.novel_nodes << ',' << fmt(r.objective) << ',' << r.iterations << ','
        << fmt(r.wall_ms) << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const ResultTable& table) {
  out << "lambda,k,eps1,eps2,rounds,reps,majority";
  for (std::size_t t = 0; t < table.templates; ++t) out << ",mean_frac_t" << t + 1;
  for (std::size_t t = 0; t < table.templates; ++t) out << ",count_t" << t + 1;
  out << ",count_none\n";
  for (const auto& a : table.cells) {
    write_cell(out, a.cell);
    out << ',' << a.reps << ',' << label_name(a.majority);
    for (const double f : a.mean_fractions) out << ',' << fmt(f);
    for (const auto c : a.label_counts) out << ',' << c;
    out << '\n';
  }
}

void emit_results(const ResultTable& table, const OutputPaths& paths) {
  auto write = [](const std::filesystem::path& path, auto&& body) {
    if (path.has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    body(out);
    if (!out) throw IoError("failed writing " + path.string());
  };
  write(paths.reps_csv, [&](std::ostream& o) { write_reps_csv(o, table); });
  write(paths.aggregate_csv, [&](std::ostream& o) { write_aggregate_csv(o, table); });
}

std::vector<RepRow> read_reps_csv(std::istream& in) {
  const auto header = read_header(in);
  const std::size_t templates = count_prefixed(header, "frac_t");
  const std::size_t width = 12 + templates;
  if (header.size() != width) throw IoError("unexpected per-rep CSV header");
  std::vector<RepRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != width) throw IoError("per-rep CSV row has " + std::to_string(f.size()) + " fields");
    RepRow r;
    r.cell = parse_cell(f);
    r.rep = static_cast<std::size_t>(csv::parse_int(f[5]));
    r.label = label_from_name(f[6]);
    for (std::size_t t = 0; t < templates; ++t) r.fractions.push_back(csv::parse_double(f[7 + t]));
    std::size_t at = 7 + templates;
    r.ged = csv::parse_double(f[at++]);
    r.novel_nodes = static_cast<std::size_t>(csv::parse_int(f[at++]));
    r.objective = csv::parse_double(f[at++]);
    r.iterations = static_cast<int>(csv::parse_int(f[at++]));
    r.wall_ms = csv::parse_double(f[at]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<AggregateRow> read_aggregate_csv(std::istream& in) {
  const auto header = read_header(in);
  const std::size_t templates = count_prefixed(header, "mean_frac_t");
  const std::size_t width = 8 + 2 * templates;
  if (header.size() != width) throw IoError("unexpected aggregate CSV header");
  std::vector<AggregateRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != width) throw IoError("aggregate CSV row has " + std::to_string(f.size()) + " fields");
    AggregateRow a;
    a.cell = parse_cell(f);
    a.reps = static_cast<std::size_t>(csv::parse_int(f[5]));
    a.majority = label_from_name(f[6]);
    for (std::size_t t = 0; t < templates; ++t) a.mean_fractions.push_back(csv::parse_double(f[7 + t]));
    for (std::size_t t = 0; t <= templates; ++t)
      a.label_counts.push_back(static_cast<std::size_t>(csv::parse_int(f[7 + templates + t])));
    rows.push_back(std::move(a));
  }
  return rows;
}

}  // namespace gmmf
