#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rwk/classify.hpp"
#include "rwk/run_config.hpp"

namespace rwk {

// dataset.path when set, otherwise $RWK_DATA_DIR/<name>, otherwise the data
// directory configured at build time.
std::filesystem::path resolve_dataset_dir(const RunConfig& config);

Dataset load_configured_dataset(const RunConfig& config);

// Node features per graph according to the feature mode.
std::vector<Matrix> dataset_features(const Dataset& dataset, const RunConfig& config);

// $RWK_CACHE_DIR when set, otherwise <out>/cache.
std::filesystem::path cache_dir(const RunConfig& config);
std::filesystem::path embedding_cache_path(const RunConfig& config);

struct PreparedDataset {
  Dataset dataset;
  std::vector<PreparedGraph> graphs;
  bool from_cache = false;
};

// Loads the dataset and its embeddings, reading or refreshing the cache.
PreparedDataset prepare_dataset(const RunConfig& config, bool use_cache = true);

struct GramRun {
  std::filesystem::path gram_path;
  std::filesystem::path distances_path;
  GramMatrix gram;
  Matrix distances;
  PairTiming timing;
  bool embeddings_from_cache = false;
};

// Writes gram.bin, gram.csv, distances.bin, config.ini and timing.txt into
// the output directory; per-pair trace CSVs go to trace_dir when given.
GramRun cmd_gram(const RunConfig& config, const std::optional<std::filesystem::path>& trace_dir = std::nullopt);

// Nested CV on a stored Gram matrix. When distances.bin sits next to it the
// eta grid is searched, otherwise the stored kernel is the only candidate.
// Writes report.json and returns the report.
EvalReport cmd_classify(const RunConfig& config, const std::filesystem::path& gram_path, bool force = false);

struct PairReport {
  SolveResult result;
  SolverConfig solver;
  std::string text;  // the printed breakdown
};

PairReport cmd_pair(const RunConfig& config, int a, int b,
                    const std::optional<std::filesystem::path>& coupling_csv = std::nullopt,
                    const std::optional<std::filesystem::path>& trace = std::nullopt);

// Builds the embedding cache and returns its path.
std::filesystem::path cmd_embed(const RunConfig& config);

}  // namespace rwk
