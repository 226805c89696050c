#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rwk/rw.hpp"

namespace rwk {

enum class RepairMode { none, clip, flip, shift };

RepairMode parse_repair_mode(const std::string& name);
std::string to_string(RepairMode mode);

struct GramMatrix {
  Matrix values;
  std::string dataset_name;
  std::string config_hash;
  bool repaired = false;
};

struct PairTiming {
  double mean_ms = 0.0;
  double max_ms = 0.0;
  std::size_t pairs = 0;
  int unconverged = 0;  // pairs that hit the iteration cap
};

// RW(g_p, g_q) for p <= q, mirrored into a full G x G matrix. The diagonal is
// solved like every other pair. A failing pair is rethrown as a NumericError
// naming both indices. With trace_dir set, every pair writes
// pair_<p>_<q>.csv there.
Matrix rw_distance_matrix(const std::vector<PreparedGraph>& graphs, const SolverConfig& config, int workers,
                          PairTiming* timing = nullptr,
                          const std::optional<std::filesystem::path>& trace_dir = std::nullopt);

// exp(-eta * max(RW, 0)) entrywise, symmetrized, clamped into (0, 1].
Matrix kernel_from_distances(const Matrix& distances, double eta);

GramMatrix gram_matrix(const std::vector<PreparedGraph>& graphs, const SolverConfig& config, double eta,
                       int workers);

// Spectral repair of a symmetric matrix: clip zeroes negative eigenvalues,
// flip takes absolute values, shift adds -lambda_min to all of them.
Matrix psd_repair(const Matrix& k, RepairMode mode);
GramMatrix psd_repair(const GramMatrix& k, RepairMode mode);

// Binary layout: a text header of five lines
//   RWKGRAM1 / G / dataset name / config hash / repaired flag (0 or 1)
// followed by G*G little-endian float64 values in row-major order.
void save_gram(const GramMatrix& k, const std::filesystem::path& path);
GramMatrix load_gram(const std::filesystem::path& path,
                     const std::optional<std::string>& expected_hash = std::nullopt);

// Header row of graph indices, then one row per graph, 17 significant digits.
void save_gram_csv(const Matrix& values, const std::filesystem::path& path);

}  // namespace rwk
