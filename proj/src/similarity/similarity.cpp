#include "rwk/similarity.hpp"

#include <fmt/format.h>

#include <cmath>

#include "rwk/error.hpp"

namespace rwk {

PairwiseMode parse_pairwise_mode(const std::string& name) {
  if (name == "shortest_path") return PairwiseMode::shortest_path;
  if (name == "adjacency") return PairwiseMode::adjacency;
  if (name == "embedding") return PairwiseMode::embedding;
  throw ConfigError(fmt::format("unknown pairwise mode '{}'", name));
}

std::string to_string(PairwiseMode mode) {
  switch (mode) {
    case PairwiseMode::shortest_path: return "shortest_path";
    case PairwiseMode::adjacency: return "adjacency";
    case PairwiseMode::embedding: return "embedding";
  }
  return "shortest_path";
}

void SimilaritySet::validate() const {
  const auto n1 = cp_source.rows();
  const auto n2 = cp_target.rows();
  if (cp_source.cols() != n1 || cp_target.cols() != n2) throw DimensionError("pairwise costs must be square");
  if (cv.rows() != n1 || cv.cols() != n2 || cn.rows() != n1 || cn.cols() != n2) {
    throw DimensionError(fmt::format("cost shapes disagree with {}x{} vertex counts", n1, n2));
  }
  for (const Matrix* m : {&cv, &cn, &cp_source, &cp_target}) {
    if (!m->allFinite()) throw NumericError("similarity matrix has non-finite entries");
    if (m->size() > 0 && m->minCoeff() < 0.0) throw NumericError("similarity matrix has negative entries");
  }
}

SimilaritySet SimilaritySet::transposed() const {
  return SimilaritySet{cv.transpose(), cn.transpose(), cp_target, cp_source};
}

Matrix feature_similarity(const FeatureEmbedding& a, const FeatureEmbedding& b) {
  if (a.matrix.cols() != b.matrix.cols()) {
    throw DimensionError(fmt::format("feature widths differ: {} vs {}", a.matrix.cols(), b.matrix.cols()));
  }
  const auto n1 = a.matrix.rows();
  const auto n2 = b.matrix.rows();
  // Explicit differences rather than the |a|^2 + |b|^2 - 2ab expansion, which
  // loses all precision for nearly identical rows.
  const Matrix bt = b.matrix.transpose();
  Matrix out(n1, n2);
  for (Eigen::Index i = 0; i < n1; ++i) {
    const Vector row = a.matrix.row(i).transpose();
    for (Eigen::Index j = 0; j < n2; ++j) out(i, j) = (bt.col(j) - row).norm();
  }
  return out;
}

Matrix neighbourhood_similarity(const StructureEmbedding& a, const StructureEmbedding& b) {
  if (a.bits.cols() != b.bits.cols()) {
    throw DimensionError(fmt::format("embedding dimensions differ: {} vs {}", a.bits.cols(), b.bits.cols()));
  }
  const auto k = a.bits.cols();
  Matrix out(a.bits.rows(), b.bits.rows());
  for (Eigen::Index i = 0; i < a.bits.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.bits.rows(); ++j) {
      Eigen::Index differ = 0;
      for (Eigen::Index d = 0; d < k; ++d) differ += a.bits(i, d) != b.bits(j, d);
      out(i, j) = k > 0 ? static_cast<double>(differ) / static_cast<double>(k) : 0.0;
    }
  }
  return out;
}

Matrix pairwise_similarity(const Graph& g, const StructureEmbedding& e, PairwiseMode mode) {
  switch (mode) {
    case PairwiseMode::shortest_path: return shortest_path_matrix(g);
    case PairwiseMode::adjacency: return g.adjacency;
    case PairwiseMode::embedding: return neighbourhood_similarity(e, e);
  }
  return shortest_path_matrix(g);
}

Matrix gw_cost_apply(const Matrix& cp_source, const Matrix& cp_target, const Matrix& gamma) {
  const auto n1 = cp_source.rows();
  const auto n2 = cp_target.rows();
  if (cp_source.cols() != n1 || cp_target.cols() != n2 || gamma.rows() != n1 || gamma.cols() != n2) {
    throw DimensionError(fmt::format("gw_cost_apply: {}x{} and {}x{} costs against a {}x{} coupling", n1,
                                     cp_source.cols(), n2, cp_target.cols(), gamma.rows(), gamma.cols()));
  }
  const Vector p = gamma.rowwise().sum();
  const Vector q = gamma.colwise().sum().transpose();
  const Vector left = 0.5 * (cp_source.array().square().matrix() * p);
  const Vector right = 0.5 * (cp_target.array().square().matrix() * q);
  Matrix out = -(cp_source * gamma * cp_target.transpose());
  out.colwise() += left;
  out.rowwise() += right.transpose();
  return out;
}

}  // namespace rwk
