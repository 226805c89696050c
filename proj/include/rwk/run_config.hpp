#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rwk/kernel.hpp"
#include "rwk/ot_solver.hpp"
#include "rwk/rw.hpp"

namespace rwk {

enum class FeatureMode { wl, continuous };

FeatureMode parse_feature_mode(const std::string& name);
std::string to_string(FeatureMode mode);

struct RunConfig {
  // [dataset]
  std::filesystem::path dataset_path;  // directory with the text files
  std::string dataset_name = "MUTAG";
  // [features]
  FeatureMode feature_mode = FeatureMode::wl;
  int wl_iterations = 1;
  // [embedding]; hops lives here too
  EmbeddingConfig embedding;
  // [solver]
  SolverConfig solver;
  // [kernel]
  double eta = 1.0;  // used for the stored Gram matrix
  RepairMode repair = RepairMode::none;
  std::vector<double> eta_grid;
  std::vector<RepairMode> repair_grid;
  // [classify]
  std::vector<double> c_grid;
  int outer_folds = 10;
  int inner_folds = 5;
  std::uint64_t seed = 0;
  // [run]
  std::filesystem::path out_dir = "rwk_out";
  int workers = 1;

  RunConfig();
  bool operator==(const RunConfig&) const;

  // Throws ConfigError on out-of-range values.
  void validate() const;
};

// Line-based "key = value" text with [section] headers; '#' and ';' start
// comments. Keys not listed in to_ini() output are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Canonical text of every field; parse_config(to_ini(c)) == c.
std::string to_ini(const RunConfig& config);

// Hash of the fields that influence the Gram matrix.
std::string config_hash(const RunConfig& config);
// Hash of the fields that influence the per-graph embeddings.
std::string embedding_hash(const RunConfig& config);

}  // namespace rwk
