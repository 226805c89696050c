#include "rwk/graph.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "rwk/error.hpp"

namespace rwk {

Graph Graph::from_edges(Eigen::Index n, const std::vector<std::pair<int, int>>& edges,
                        Matrix features, std::optional<std::vector<int>> node_labels,
                        int graph_label) {
  Graph g;
  g.adjacency = Matrix::Zero(n, n);
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) {
      throw IntegrityError(fmt::format("edge ({}, {}) outside vertex range [0, {})", a, b, n));
    }
    if (a == b) continue;
    g.adjacency(a, b) = 1.0;
    g.adjacency(b, a) = 1.0;
  }
  g.degrees.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    g.degrees[static_cast<std::size_t>(i)] = static_cast<int>(g.adjacency.row(i).sum());
  }
  g.features = std::move(features);
  g.node_labels = std::move(node_labels);
  g.graph_label = graph_label;
  g.validate();
  return g;
}

std::vector<std::pair<int, int>> Graph::edge_list() const {
  std::vector<std::pair<int, int>> out;
  for (Eigen::Index i = 0; i < size(); ++i) {
    for (Eigen::Index j = i + 1; j < size(); ++j) {
      if (adjacency(i, j) != 0.0) out.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return out;
}

std::vector<std::vector<int>> Graph::neighbours() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(size()));
  for (Eigen::Index i = 0; i < size(); ++i) {
    for (Eigen::Index j = 0; j < size(); ++j) {
      if (adjacency(i, j) != 0.0) out[static_cast<std::size_t>(i)].push_back(static_cast<int>(j));
    }
  }
  return out;
}

void Graph::validate() const {
  const auto n = size();
  if (adjacency.cols() != n) throw IntegrityError("adjacency is not square");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) throw IntegrityError(fmt::format("self loop at vertex {}", i));
    for (Eigen::Index j = 0; j < n; ++j) {
      const double a = adjacency(i, j);
      if (a != 0.0 && a != 1.0) throw IntegrityError("adjacency entries must be 0 or 1");
      if (a != adjacency(j, i)) throw IntegrityError("adjacency is not symmetric");
    }
  }
  if (degrees.size() != static_cast<std::size_t>(n)) throw IntegrityError("degree vector size mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (degrees[static_cast<std::size_t>(i)] != static_cast<int>(adjacency.row(i).sum())) {
      throw IntegrityError(fmt::format("degree of vertex {} disagrees with adjacency", i));
    }
  }
  if (features.rows() != n) {
    throw IntegrityError(fmt::format("feature matrix has {} rows for {} vertices", features.rows(), n));
  }
  if (n > 0 && features.cols() < 1) throw IntegrityError("feature matrix has no columns");
  if (node_labels && node_labels->size() != static_cast<std::size_t>(n)) {
    throw IntegrityError("node label count disagrees with vertex count");
  }
}

Histogram Histogram::uniform(Eigen::Index n) {
  return Histogram{Vector::Constant(n, 1.0 / static_cast<double>(n))};
}

Histogram Histogram::from_weights(Vector weights) {
  if ((weights.array() < 0.0).any()) throw NumericError("histogram weights must be nonnegative");
  if (std::abs(weights.sum() - 1.0) > 1e-12) throw NumericError("histogram weights must sum to one");
  return Histogram{std::move(weights)};
}

bool Histogram::is_uniform(double tol) const {
  if (weights.size() == 0) return true;
  const double u = 1.0 / static_cast<double>(weights.size());
  return ((weights.array() - u).abs() <= tol).all();
}

void Dataset::validate() const {
  if (class_count <= 0) throw IntegrityError("dataset has no classes");
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto& g = graphs[i];
    if (g.graph_label < 0 || g.graph_label >= class_count) {
      throw IntegrityError(fmt::format("graph {} has label {} outside [0, {})", i, g.graph_label, class_count));
    }
    g.validate();
  }
}

Matrix normalized_laplacian(const Graph& g) {
  const auto n = g.size();
  Vector inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int d = g.degrees[static_cast<std::size_t>(i)];
    inv_sqrt(i) = d > 0 ? 1.0 / std::sqrt(static_cast<double>(d)) : 0.0;
  }
  Matrix lap = -(inv_sqrt.asDiagonal() * g.adjacency * inv_sqrt.asDiagonal());
  lap.diagonal().array() += 1.0;
  return lap;
}

Matrix combinatorial_laplacian(const Graph& g) {
  Matrix lap = -g.adjacency;
  for (Eigen::Index i = 0; i < g.size(); ++i) lap(i, i) = g.degrees[static_cast<std::size_t>(i)];
  return lap;
}

double max_laplacian_eigenvalue(const Matrix& laplacian) {
  if (!laplacian.allFinite()) throw NumericError("laplacian has non-finite entries");
  if (laplacian.size() == 0 || laplacian.cwiseAbs().maxCoeff() == 0.0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(laplacian, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("eigenvalue computation failed");
  const double top = solver.eigenvalues().maxCoeff();
  return top > 0.0 ? top : 1.0;
}

Matrix shortest_path_matrix(const Graph& g) {
  const auto n = static_cast<int>(g.size());
  const auto adj = g.neighbours();
  constexpr int kUnreached = std::numeric_limits<int>::max();
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, kUnreached));
  for (int s = 0; s < n; ++s) {
    auto& d = dist[s];
    d[s] = 0;
    std::deque<int> queue{s};
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int v : adj[u]) {
        if (d[v] == kUnreached) {
          d[v] = d[u] + 1;
          queue.push_back(v);
        }
      }
    }
  }

  // Largest component (first one on ties) and its diameter.
  std::vector<int> component(n, -1);
  int best_size = 0;
  int best_diameter = 0;
  for (int s = 0; s < n; ++s) {
    if (component[s] >= 0) continue;
    int size = 0;
    int diameter = 0;
    for (int v = 0; v < n; ++v) {
      if (dist[s][v] == kUnreached) continue;
      component[v] = s;
      ++size;
    }
    for (int u = 0; u < n; ++u) {
      if (component[u] != s) continue;
      for (int v = 0; v < n; ++v) {
        if (component[v] == s) diameter = std::max(diameter, dist[u][v]);
      }
    }
    if (size > best_size) {
      best_size = size;
      best_diameter = diameter;
    }
  }

  Matrix out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out(i, j) = dist[i][j] == kUnreached ? best_diameter + 1.0 : static_cast<double>(dist[i][j]);
    }
  }
  if (n > 0) {
    const double top = out.maxCoeff();
    if (top > 0.0) out /= top;
  }
  return out;
}

}  // namespace rwk
