#pragma once

#include <string>

#include "rwk/embeddings.hpp"
#include "rwk/graph.hpp"

namespace rwk {

// Intra-graph distance used as the Gromov-Wasserstein cost.
enum class PairwiseMode { shortest_path, adjacency, embedding };

PairwiseMode parse_pairwise_mode(const std::string& name);
std::string to_string(PairwiseMode mode);

// Cost structures consumed by the RW objective for one graph pair.
struct SimilaritySet {
  Matrix cv;         // n1 x n2 feature cost
  Matrix cn;         // n1 x n2 neighbourhood cost
  Matrix cp_source;  // n1 x n1
  Matrix cp_target;  // n2 x n2

  // Throws DimensionError / NumericError when shapes or entries are invalid.
  void validate() const;
  // Costs of the swapped pair.
  SimilaritySet transposed() const;
};

// Euclidean distance between every row of a and every row of b.
Matrix feature_similarity(const FeatureEmbedding& a, const FeatureEmbedding& b);

// Fraction of differing bits between binarized rows.
Matrix neighbourhood_similarity(const StructureEmbedding& a, const StructureEmbedding& b);

Matrix pairwise_similarity(const Graph& g, const StructureEmbedding& e, PairwiseMode mode);

// Action of the 4-index squared-loss tensor on a coupling:
//   T(i,k) = sum_{j,l} 1/2 (cs(i,j) - ct(k,l))^2 gamma(j,l)
// evaluated in O(n^3) as 1/2 cs^2 p 1^T + 1/2 1 q^T (ct^2)^T - cs gamma ct^T with
// p, q the row and column sums of gamma.
Matrix gw_cost_apply(const Matrix& cp_source, const Matrix& cp_target, const Matrix& gamma);

}  // namespace rwk
