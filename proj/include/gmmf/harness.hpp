#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmmf/diversifier.hpp"
#include "gmmf/graph.hpp"
#include "gmmf/matcher.hpp"
#include "gmmf/mcer.hpp"

namespace gmmf {

/// Either a synthetic MCER model (overlap comes from the grid's k) or files.
struct ModelConfig {
  std::size_t m = 50;
  std::size_t n = 500;
  double p = 0.8;
  std::vector<double> template_corr{0.954, 0.803};  ///< pairs of template t outside the shared block
  double overlap_corr = 0.897;
  SimilaritySpec similarity = SimilaritySpec::four(0.6, 0.55, 0.5, 0.1);
  bool use_similarity = true;

  std::optional<std::filesystem::path> a_path, b_path, s_path, truth_path;
  bool from_files() const { return a_path.has_value(); }

  McerSpec mcer(std::size_t k) const { return McerSpec::layered(m, n, k, p, template_corr, overlap_corr); }
};

/// Two-round grids use `eps`; three-round grids use `eps1` x `eps2`.
struct GridConfig {
  std::vector<double> eps{0.0};
  std::vector<double> eps1, eps2;
  std::vector<double> lambda{25.0};
  std::vector<std::size_t> k{10};

  bool three_rounds() const { return !eps1.empty(); }
};

struct OutputPaths {
  std::filesystem::path reps_csv = "reps.csv";
  std::filesystem::path aggregate_csv = "aggregate.csv";
};

struct ExperimentConfig {
  ModelConfig model;
  GridConfig grid;
  FwConfig matcher;  ///< lambda and seeds are set per cell
  Strategy strategy = Strategy::similarity;
  std::size_t mc_reps = 20;
  std::size_t seeds_from_overlap = 5;
  double label_threshold = 0.5;
  std::uint64_t master_seed = 0;
  unsigned workers = 1;
  bool timing = false;  ///< wall_ms stays 0 unless set, keeping reruns byte-identical
  OutputPaths outputs;

  void validate() const;
  std::size_t rounds() const { return grid.three_rounds() ? 3 : 2; }
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

/// "t1", "t2", ... for template indices, "none" for -1.
std::string label_name(int label);
int label_from_name(const std::string& name);

struct Recovery {
  int label = -1;
  std::vector<double> fractions;  ///< per template, share of nodes placed as in its truth
};

/// Label of the best template when its fraction reaches the threshold and no other template ties it.
Recovery recovery_label(const Assignment& a, const std::vector<Assignment>& truth, double threshold = 0.5);

/// Label held by more than half of the reps, otherwise none.
int majority_label(const std::vector<int>& labels);

/// Sum over unordered pairs of |A(i, j) - B(sigma(i), sigma(j))|; a mismatch count for binary graphs.
double ged_proxy(const Graph& a, const Graph& b, const Assignment& sigma);

/// Matched background nodes of `a` that `baseline` does not use.
std::size_t novel_nodes(const Assignment& a, const Assignment& baseline);

struct OracleResult {
  Assignment assignment;
  double objective = 0.0;
};

/// Number of injections [0, m) -> [0, n), as a double.
double injection_count(std::size_t m, std::size_t n);

/// Exhaustive search over injections (at most 1e7, else OracleTooLarge);
/// the lexicographically first maximizer wins ties.
OracleResult brute_force_match(const Graph& a, const Graph& b, const SimilarityMatrix& s, double lambda,
                               Padding scheme);

struct CellKey {
  double lambda = 0.0;
  std::size_t k = 0;
  double eps1 = 0.0;
  double eps2 = 0.0;  ///< 0 in two-round grids
  std::size_t rounds = 2;

  friend bool operator==(const CellKey&, const CellKey&) = default;
};

struct RepRow {
  CellKey cell;
  std::size_t rep = 0;
  int label = -1;
  std::vector<double> fractions;
  double ged = 0.0;
  std::size_t novel_nodes = 0;
  double objective = 0.0;
  int iterations = 0;
  double wall_ms = 0.0;

  friend bool operator==(const RepRow&, const RepRow&) = default;
};

struct AggregateRow {
  CellKey cell;
  std::size_t reps = 0;
  int majority = -1;
  std::vector<double> mean_fractions;
  std::vector<std::size_t> label_counts;  ///< per template, then none

  friend bool operator==(const AggregateRow&, const AggregateRow&) = default;
};

struct ResultTable {
  std::size_t templates = 0;
  std::vector<RepRow> reps;  ///< cell-major, rep-minor
  std::vector<AggregateRow> cells;

  friend bool operator==(const ResultTable&, const ResultTable&) = default;
};

/// Every (lambda, k, eps...) cell x mc_reps. The instance, seed pairs and
/// restart seeds of a rep depend only on (master_seed, k, rep), so cells share
/// them; round 1 is solved once per (lambda, k, rep).
ResultTable run_grid(const ExperimentConfig& config);

std::vector<AggregateRow> aggregate(const std::vector<RepRow>& reps, std::size_t templates);

void write_reps_csv(std::ostream& out, const ResultTable& table);
void write_aggregate_csv(std::ostream& out, const ResultTable& table);
/// Writes both files; IoError when a path cannot be opened.
void emit_results(const ResultTable& table, const OutputPaths& paths);

std::vector<RepRow> read_reps_csv(std::istream& in);
std::vector<AggregateRow> read_aggregate_csv(std::istream& in);

}  // namespace gmmf
