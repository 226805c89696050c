#include "rwk/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rwk/error.hpp"

namespace rwk {

Matrix local_variation(const Graph& g, int hops) { return local_variation(g, g.features, hops); }

Matrix local_variation(const Graph& g, const Matrix& features, int hops) {
  if (hops < 0) throw UsageError("local variation hop count must be nonnegative");
  if (features.rows() != g.size()) throw DimensionError("feature rows do not match vertex count");
  if (hops == 0) return Matrix::Zero(features.rows(), features.cols());
  const Matrix lap = normalized_laplacian(g);
  const double top = max_laplacian_eigenvalue(lap);
  Matrix aggregated = features;
  for (int h = 0; h < hops; ++h) aggregated = lap * aggregated;
  return (features - aggregated / top).cwiseAbs();
}

FeatureEmbedding feature_embedding(const Graph& g, int hops) { return feature_embedding(g, g.features, hops); }

FeatureEmbedding feature_embedding(const Graph& g, const Matrix& features, int hops) {
  FeatureEmbedding out;
  out.matrix.resize(features.rows(), 2 * features.cols());
  out.matrix.leftCols(features.cols()) = features;
  out.matrix.rightCols(features.cols()) = local_variation(g, features, hops);
  return out;
}

WlLabels wl_labels(const Dataset& dataset, int iterations) {
  if (iterations < 0) throw UsageError("WL iteration count must be nonnegative");
  WlLabels out;
  const auto graph_count = dataset.graphs.size();

  // Round 0: raw labels (degrees when absent) compressed to dense ids.
  std::vector<std::vector<int>> current(graph_count);
  std::map<int, int> initial;
  for (std::size_t gi = 0; gi < graph_count; ++gi) {
    const auto& g = dataset.graphs[gi];
    const auto& raw = g.node_labels ? *g.node_labels : g.degrees;
    for (int v : raw) initial.emplace(v, 0);
  }
  int next = 0;
  for (auto& [value, id] : initial) id = next++;
  for (std::size_t gi = 0; gi < graph_count; ++gi) {
    const auto& g = dataset.graphs[gi];
    const auto& raw = g.node_labels ? *g.node_labels : g.degrees;
    current[gi].reserve(raw.size());
    for (int v : raw) current[gi].push_back(initial.at(v));
  }
  out.labels.push_back(current);
  out.dictionary_sizes.push_back(static_cast<int>(initial.size()));

  std::vector<std::vector<std::vector<int>>> neighbours(graph_count);
  for (std::size_t gi = 0; gi < graph_count; ++gi) neighbours[gi] = dataset.graphs[gi].neighbours();

  for (int round = 1; round <= iterations; ++round) {
    // Signature = own label followed by the sorted neighbour labels. Ids are
    // handed out in order of first appearance so they are deterministic.
    std::map<std::vector<int>, int> dictionary;
    std::vector<std::vector<int>> refined(graph_count);
    for (std::size_t gi = 0; gi < graph_count; ++gi) {
      const auto& prev = current[gi];
      refined[gi].resize(prev.size());
      for (std::size_t v = 0; v < prev.size(); ++v) {
        std::vector<int> signature;
        signature.reserve(neighbours[gi][v].size() + 1);
        for (int u : neighbours[gi][v]) signature.push_back(prev[static_cast<std::size_t>(u)]);
        std::sort(signature.begin(), signature.end());
        signature.insert(signature.begin(), prev[v]);
        const auto [it, inserted] = dictionary.emplace(std::move(signature), static_cast<int>(dictionary.size()));
        refined[gi][v] = it->second;
      }
    }
    current = std::move(refined);
    out.labels.push_back(current);
    out.dictionary_sizes.push_back(static_cast<int>(dictionary.size()));
  }
  return out;
}

std::vector<Matrix> wl_feature_sequence(const Dataset& dataset, int iterations) {
  const auto wl = wl_labels(dataset, iterations);
  Eigen::Index width = 0;
  for (int s : wl.dictionary_sizes) width += s;
  std::vector<Matrix> out;
  out.reserve(dataset.graphs.size());
  for (std::size_t gi = 0; gi < dataset.graphs.size(); ++gi) {
    const auto n = dataset.graphs[gi].size();
    Matrix features = Matrix::Zero(n, width);
    Eigen::Index offset = 0;
    for (std::size_t r = 0; r < wl.labels.size(); ++r) {
      for (Eigen::Index v = 0; v < n; ++v) features(v, offset + wl.labels[r][gi][static_cast<std::size_t>(v)]) = 1.0;
      offset += wl.dictionary_sizes[r];
    }
    out.push_back(std::move(features));
  }
  return out;
}

Eigen::Matrix<unsigned char, Eigen::Dynamic, Eigen::Dynamic> binarize_by_median(const Matrix& m) {
  Eigen::Matrix<unsigned char, Eigen::Dynamic, Eigen::Dynamic> bits(m.rows(), m.cols());
  std::vector<double> column(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) column[static_cast<std::size_t>(r)] = m(r, c);
    std::sort(column.begin(), column.end());
    const auto n = column.size();
    const double median = n == 0 ? 0.0 : (n % 2 == 1 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]));
    for (Eigen::Index r = 0; r < m.rows(); ++r) bits(r, c) = m(r, c) > median ? 1 : 0;
  }
  return bits;
}

StructureEmbedding structure_embedding(const Graph& g, int dim, double time) {
  if (dim < 1) throw UsageError("embedding dimension must be positive");
  if (!(time > 0.0)) throw UsageError("diffusion time must be positive");
  const auto n = g.size();
  StructureEmbedding out;
  out.matrix = Matrix::Zero(n, dim);
  if (n > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(normalized_laplacian(g));
    if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition of the Laplacian failed");
    const auto used = std::min<Eigen::Index>(n, dim);
    for (Eigen::Index d = 0; d < used; ++d) {
      Vector u = solver.eigenvectors().col(d);
      Eigen::Index arg = 0;
      double best = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        // Strictly larger by a relative margin so round-off does not flip ties.
        if (std::abs(u(i)) > best * (1.0 + 1e-10)) {
          best = std::abs(u(i));
          arg = i;
        }
      }
      if (u(arg) < 0.0) u = -u;
      out.matrix.col(d) = u * std::exp(-time * solver.eigenvalues()(d));
    }
  }
  if (!out.matrix.allFinite()) throw NumericError("structure embedding has non-finite entries");
  out.bits = binarize_by_median(out.matrix);
  return out;
}

}  // namespace rwk
