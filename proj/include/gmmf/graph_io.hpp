#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gmmf/graph.hpp"

namespace gmmf {

/// Whitespace-separated "u v [w]" lines with 0-based ids. Blank lines and
/// lines starting with '#' are skipped, except a "# nodes: N" directive which
/// fixes the node count (otherwise it is max id + 1).
Graph read_edge_list(std::istream& in);
Graph read_edge_list(const std::filesystem::path& path);

/// Dense comma-separated adjacency, one row per line.
Graph read_adjacency_csv(std::istream& in);
Graph read_adjacency_csv(const std::filesystem::path& path);

/// Dispatches on extension: ".csv" is dense adjacency, anything else an edge list.
Graph read_graph(const std::filesystem::path& path);

void write_edge_list(std::ostream& out, const Graph& g);
void write_edge_list(const std::filesystem::path& path, const Graph& g);
void write_adjacency_csv(std::ostream& out, const Graph& g);

/// Dense real matrix in CSV form (used for similarity matrices).
Matrix read_matrix_csv(std::istream& in);
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(std::ostream& out, const Matrix& mat);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& mat);

/// One assignment per line: comma-separated background ids for template nodes 0..m-1.
std::vector<Assignment> read_assignments(const std::filesystem::path& path, std::size_t background_size);
void write_assignments(const std::filesystem::path& path, const std::vector<Assignment>& assignments);

}  // namespace gmmf
