#pragma once

#include <optional>
#include <vector>

#include "rwk/embeddings.hpp"
#include "rwk/ot_solver.hpp"
#include "rwk/similarity.hpp"

namespace rwk {

struct EmbeddingConfig {
  int hops = 2;       // local variation hops, 0 disables it
  int dim = 64;       // structure embedding width k
  double time = 1.0;  // heat-kernel diffusion time t
  PairwiseMode pairwise = PairwiseMode::shortest_path;

  bool operator==(const EmbeddingConfig&) const = default;
};

// Everything about one graph that the pair solver needs.
struct PreparedGraph {
  FeatureEmbedding features;
  StructureEmbedding structure;
  Matrix pairwise;   // intra-graph distance used by the GW term
  Matrix laplacian;  // D - A
  std::vector<int> degrees;
  Vector histogram;  // uniform
};

PreparedGraph prepare_graph(const Graph& g, const Matrix& features, const EmbeddingConfig& config);
PreparedGraph prepare_graph(const Graph& g, const EmbeddingConfig& config);

// Rebuilds the derived fields of a graph whose two embedding matrices were
// stored elsewhere (the embedding cache).
PreparedGraph restore_prepared(const Graph& g, Matrix feature_matrix, Matrix structure_matrix,
                               const EmbeddingConfig& config);

RwProblem make_problem(const PreparedGraph& source, const PreparedGraph& target, const SolverConfig& config);

SolveResult rw_solve(const PreparedGraph& source, const PreparedGraph& target, const SolverConfig& config,
                     const std::optional<TraceSink>& trace = std::nullopt);

double rw_discrepancy(const PreparedGraph& source, const PreparedGraph& target, const SolverConfig& config);
double rw_discrepancy(const Graph& g1, const Graph& g2, const EmbeddingConfig& embedding,
                      const SolverConfig& config);

}  // namespace rwk
