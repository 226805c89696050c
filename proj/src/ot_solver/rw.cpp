#include "rwk/rw.hpp"

namespace rwk {

namespace {

PreparedGraph finish(const Graph& g, FeatureEmbedding features, StructureEmbedding structure,
                     const EmbeddingConfig& config) {
  PreparedGraph p;
  p.pairwise = pairwise_similarity(g, structure, config.pairwise);
  p.features = std::move(features);
  p.structure = std::move(structure);
  p.laplacian = combinatorial_laplacian(g);
  p.degrees = g.degrees;
  p.histogram = Histogram::uniform(g.size()).weights;
  return p;
}

}  // namespace

PreparedGraph prepare_graph(const Graph& g, const Matrix& features, const EmbeddingConfig& config) {
  return finish(g, feature_embedding(g, features, config.hops), structure_embedding(g, config.dim, config.time),
                config);
}

PreparedGraph prepare_graph(const Graph& g, const EmbeddingConfig& config) {
  return prepare_graph(g, g.features, config);
}

PreparedGraph restore_prepared(const Graph& g, Matrix feature_matrix, Matrix structure_matrix,
                               const EmbeddingConfig& config) {
  StructureEmbedding structure;
  structure.bits = binarize_by_median(structure_matrix);
  structure.matrix = std::move(structure_matrix);
  return finish(g, FeatureEmbedding{std::move(feature_matrix)}, std::move(structure), config);
}

RwProblem make_problem(const PreparedGraph& source, const PreparedGraph& target, const SolverConfig& config) {
  RwProblem p;
  p.sims.cv = feature_similarity(source.features, target.features);
  p.sims.cn = neighbourhood_similarity(source.structure, target.structure);
  p.sims.cp_source = source.pairwise;
  p.sims.cp_target = target.pairwise;
  p.laplacian_source = barycentric_operator(source.laplacian, source.histogram);
  p.laplacian_target = barycentric_operator(target.laplacian, target.histogram);
  p.embedding_source = source.structure.matrix;
  p.embedding_target = target.structure.matrix;
  p.prior = prior_coupling(source.degrees, target.degrees, config.log_floor);
  p.mu = source.histogram;
  p.nu = target.histogram;
  return p;
}

SolveResult rw_solve(const PreparedGraph& source, const PreparedGraph& target, const SolverConfig& config,
                     const std::optional<TraceSink>& trace) {
  return scg_solve(make_problem(source, target, config), config, trace);
}

double rw_discrepancy(const PreparedGraph& source, const PreparedGraph& target, const SolverConfig& config) {
  return rw_solve(source, target, config).rw_value;
}

double rw_discrepancy(const Graph& g1, const Graph& g2, const EmbeddingConfig& embedding,
                      const SolverConfig& config) {
  return rw_discrepancy(prepare_graph(g1, embedding), prepare_graph(g2, embedding), config);
}

}  // namespace rwk
