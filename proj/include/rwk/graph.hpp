#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rwk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Undirected simple graph with a per-vertex signal matrix.
struct Graph {
  Matrix adjacency;                            // n x n, symmetric 0/1, zero diagonal
  Matrix features;                             // n x m graph signal matrix
  std::optional<std::vector<int>> node_labels;  // raw categorical labels
  int graph_label = 0;                         // class index
  std::vector<int> degrees;

  Eigen::Index size() const { return adjacency.rows(); }

  // Builds a graph from an edge list over vertices [0, n). Self loops are
  // dropped and duplicate / reversed edges collapse into one undirected edge.
  static Graph from_edges(Eigen::Index n, const std::vector<std::pair<int, int>>& edges,
                          Matrix features, std::optional<std::vector<int>> node_labels = std::nullopt,
                          int graph_label = 0);

  std::vector<std::pair<int, int>> edge_list() const;  // i < j
  std::vector<std::vector<int>> neighbours() const;

  // Throws IntegrityError when an invariant does not hold.
  void validate() const;
};

struct Histogram {
  Vector weights;

  static Histogram uniform(Eigen::Index n);
  static Histogram from_weights(Vector weights);
  bool is_uniform(double tol = 1e-15) const;
};

struct Dataset {
  std::vector<Graph> graphs;
  int class_count = 0;
  std::string name;
  // Raw graph label token for every class index, in class index order.
  std::vector<std::string> class_tokens;
  // True when features came from continuous node attributes.
  bool has_attributes = false;

  void validate() const;
};

// L = I - D^{-1/2} A D^{-1/2}; isolated vertices get an identity row.
Matrix normalized_laplacian(const Graph& g);

// L = D - A.
Matrix combinatorial_laplacian(const Graph& g);

// Largest eigenvalue of a symmetric PSD matrix. Returns 1 for the zero matrix
// so that dividing by it is a no-op.
double max_laplacian_eigenvalue(const Matrix& laplacian);

// Hop-count distances normalized into [0, 1]. Unreachable pairs are assigned
// the diameter of the largest connected component plus one before the
// normalization by the maximum entry.
Matrix shortest_path_matrix(const Graph& g);

}  // namespace rwk
