#pragma once

#include <vector>

#include "rwk/graph.hpp"

namespace rwk {

// Rows are x_i followed by the local variation of x_i.
struct FeatureEmbedding {
  Matrix matrix;  // n x 2m
};

// Per-vertex structural coordinates plus their median-thresholded bits.
struct StructureEmbedding {
  Matrix matrix;                                                    // n x k
  Eigen::Matrix<unsigned char, Eigen::Dynamic, Eigen::Dynamic> bits;  // n x k, entries 0/1

  Eigen::Index dim() const { return matrix.cols(); }
};

// |X - L^j X / lambda_max(L)| with L the normalized Laplacian. hops == 0
// disables the local variation and yields a zero matrix.
Matrix local_variation(const Graph& g, int hops);
Matrix local_variation(const Graph& g, const Matrix& features, int hops);

FeatureEmbedding feature_embedding(const Graph& g, int hops);
FeatureEmbedding feature_embedding(const Graph& g, const Matrix& features, int hops);

// Weisfeiler-Lehman relabelling. labels[r][g][v] is the round-r label of
// vertex v of graph g, with round 0 the node labels (or degrees when the
// dataset has none). Label ids are dataset-global and dense per round.
struct WlLabels {
  std::vector<std::vector<std::vector<int>>> labels;
  std::vector<int> dictionary_sizes;
};

WlLabels wl_labels(const Dataset& dataset, int iterations);

// One-hot encodings of all iterations + 1 label rounds, concatenated.
std::vector<Matrix> wl_feature_sequence(const Dataset& dataset, int iterations);

// Truncated heat-kernel spectral embedding: row i of U exp(-t Lambda) over
// the k smallest eigenpairs of the normalized Laplacian, zero padded when
// n < k. Each eigenvector is signed so its largest-magnitude entry is positive.
StructureEmbedding structure_embedding(const Graph& g, int dim, double time);

// Per-column median threshold: bit = value > median.
Eigen::Matrix<unsigned char, Eigen::Dynamic, Eigen::Dynamic> binarize_by_median(const Matrix& m);

}  // namespace rwk
