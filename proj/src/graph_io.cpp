#include "gmmf/graph_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "gmmf/csv.hpp"
#include "gmmf/errors.hpp"

namespace gmmf {
namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

template <typename F>
auto with_path(const std::filesystem::path& path, F&& parse) {
  auto in = open_in(path);
  try {
    return parse(in);
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

struct WeightedEdge {
  std::size_t u, v;
  double w;
};

}  // namespace

Graph read_edge_list(std::istream& in) {
  std::vector<WeightedEdge> edges;
  std::optional<std::size_t> declared_n;
  std::size_t max_id_plus_one = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = csv::trim(line);
    if (body.empty()) continue;
    if (body.front() == '#') {
      auto rest = csv::trim(body.substr(1));
      if (rest.starts_with("nodes:")) declared_n = static_cast<std::size_t>(csv::parse_int(rest.substr(6)));
      continue;
    }
    std::istringstream fields{std::string(body)};
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.size() != 2 && tok.size() != 3)
      throw InvalidArgument("line " + std::to_string(lineno) + ": expected 'u v [w]'");
    const auto u = csv::parse_int(tok[0]);
    const auto v = csv::parse_int(tok[1]);
    if (u < 0 || v < 0) throw InvalidArgument("line " + std::to_string(lineno) + ": negative node id");
    const double w = tok.size() == 3 ? csv::parse_double(tok[2]) : 1.0;
    edges.push_back({static_cast<std::size_t>(u), static_cast<std::size_t>(v), w});
    max_id_plus_one = std::max({max_id_plus_one, edges.back().u + 1, edges.back().v + 1});
  }
  const std::size_t n = declared_n.value_or(max_id_plus_one);
  if (max_id_plus_one > n) throw DimensionError("edge endpoint exceeds declared node count");
  Matrix adj = Matrix::Zero(n, n);
  Matrix seen = Matrix::Zero(n, n);
  for (const auto& e : edges) {
    if (e.u == e.v) throw InvalidArgument("self-loops are not supported");
    if (seen(e.u, e.v) != 0.0 && adj(e.u, e.v) != e.w) throw InvalidArgument("conflicting weights for a repeated edge");
    seen(e.u, e.v) = seen(e.v, e.u) = 1.0;
    adj(e.u, e.v) = adj(e.v, e.u) = e.w;
  }
  return Graph::from_adjacency(std::move(adj));
}

Graph read_edge_list(const std::filesystem::path& path) {
  return with_path(path, [](std::istream& in) { return read_edge_list(in); });
}

Matrix read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto body = csv::trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::vector<double> row;
    for (const auto& field : csv::split(body)) row.push_back(csv::parse_double(field));
    if (!rows.empty() && row.size() != rows.front().size()) throw DimensionError("ragged CSV matrix");
    rows.push_back(std::move(row));
  }
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = rows.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.front().size());
  Matrix out(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) out(i, j) = rows[i][j];
  return out;
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  return with_path(path, [](std::istream& in) { return read_matrix_csv(in); });
}

Graph read_adjacency_csv(std::istream& in) { return Graph::from_adjacency(read_matrix_csv(in)); }

Graph read_adjacency_csv(const std::filesystem::path& path) {
  return with_path(path, [](std::istream& in) { return read_adjacency_csv(in); });
}

Graph read_graph(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return read_adjacency_csv(path);
  return read_edge_list(path);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  const std::size_t n = g.size();
  out << "# nodes: " << n << '\n';
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = g(i, j);
      if (w == 0.0) continue;
      out << i << ' ' << j;
      if (g.weighted()) out << ' ' << csv::format_double(w);
      out << '\n';
    }
}

void write_edge_list(const std::filesystem::path& path, const Graph& g) {
  auto out = open_out(path);
  write_edge_list(out, g);
}

void write_matrix_csv(std::ostream& out, const Matrix& mat) {
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    for (Eigen::Index j = 0; j < mat.cols(); ++j) {
      if (j) out << ',';
      out << csv::format_double(mat(i, j));
    }
    out << '\n';
  }
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& mat) {
  auto out = open_out(path);
  write_matrix_csv(out, mat);
}

void write_adjacency_csv(std::ostream& out, const Graph& g) { write_matrix_csv(out, g.adjacency()); }

std::vector<Assignment> read_assignments(const std::filesystem::path& path, std::size_t background_size) {
  return with_path(path, [&](std::istream& in) {
    std::vector<Assignment> out;
    std::string line;
    while (std::getline(in, line)) {
      const auto body = csv::trim(line);
      if (body.empty() || body.front() == '#') continue;
      std::vector<std::size_t> sigma;
      for (const auto& field : csv::split(body)) {
        const auto v = csv::parse_int(field);
        if (v < 0) throw InvalidArgument("negative node id in assignment");
        sigma.push_back(static_cast<std::size_t>(v));
      }
      out.emplace_back(std::move(sigma), background_size);
    }
    return out;
  });
}

void write_assignments(const std::filesystem::path& path, const std::vector<Assignment>& assignments) {
  auto out = open_out(path);
  for (const auto& a : assignments) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (i) out << ',';
      out << a[i];
    }
    out << '\n';
  }
}

}  // namespace gmmf
