#include "rwk/kernel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdint>
#include <cmath>
#include <limits>

#include "rwk/error.hpp"
#include "rwk/io.hpp"
#include "rwk/parallel.hpp"

namespace rwk {

namespace {

constexpr const char* kMagic = "RWKGRAM1";

void append_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) {
    out.push_back(static_cast<char>(bits & 0xffU));
    bits >>= 8;
  }
}

double read_le(const char* p) {
  std::uint64_t bits = 0;
  for (int b = 7; b >= 0; --b) bits = (bits << 8) | static_cast<unsigned char>(p[b]);
  return std::bit_cast<double>(bits);
}

}  // namespace

RepairMode parse_repair_mode(const std::string& name) {
  if (name == "none") return RepairMode::none;
  if (name == "clip") return RepairMode::clip;
  if (name == "flip") return RepairMode::flip;
  if (name == "shift") return RepairMode::shift;
  throw ConfigError(fmt::format("unknown repair mode '{}'", name));
}

std::string to_string(RepairMode mode) {
  switch (mode) {
    case RepairMode::none: return "none";
    case RepairMode::clip: return "clip";
    case RepairMode::flip: return "flip";
    case RepairMode::shift: return "shift";
  }
  return "none";
}

Matrix rw_distance_matrix(const std::vector<PreparedGraph>& graphs, const SolverConfig& config, int workers,
                          PairTiming* timing, const std::optional<std::filesystem::path>& trace_dir) {
  if (trace_dir) std::filesystem::create_directories(*trace_dir);
  const auto g = graphs.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(g * (g + 1) / 2);
  for (std::size_t p = 0; p < g; ++p) {
    for (std::size_t q = p; q < g; ++q) pairs.emplace_back(p, q);
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(g));
  std::vector<double> millis(pairs.size(), 0.0);
  std::vector<char> converged(pairs.size(), 1);
  parallel_for(pairs.size(), workers, [&](std::size_t k) {
    const auto [p, q] = pairs[k];
    const auto start = std::chrono::steady_clock::now();
    SolveResult r;
    try {
      std::optional<TraceSink> trace;
      if (trace_dir) trace = TraceSink{*trace_dir / fmt::format("pair_{}_{}.csv", p, q)};
      r = rw_solve(graphs[p], graphs[q], config, trace);
    } catch (const Error& e) {
      throw NumericError(fmt::format("pair ({}, {}): {}", p, q, e.what()));
    }
    millis[k] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    converged[k] = r.converged ? 1 : 0;
    out(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = r.rw_value;
    out(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p)) = r.rw_value;
  });
  if (timing != nullptr) {
    timing->pairs = pairs.size();
    timing->max_ms = millis.empty() ? 0.0 : *std::max_element(millis.begin(), millis.end());
    double sum = 0.0;
    for (const double m : millis) sum += m;
    timing->mean_ms = millis.empty() ? 0.0 : sum / static_cast<double>(millis.size());
    timing->unconverged = static_cast<int>(std::count(converged.begin(), converged.end(), 0));
  }
  return out;
}

Matrix kernel_from_distances(const Matrix& distances, double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be positive");
  if (distances.rows() != distances.cols()) throw DimensionError("distance matrix must be square");
  if (!distances.allFinite()) throw NumericError("distance matrix has non-finite entries");
  // RW can dip below zero through the entropic term; clamping keeps K <= 1.
  Matrix k = (-eta * distances.array().max(0.0)).exp().max(std::numeric_limits<double>::min()).matrix();
  return 0.5 * (k + k.transpose());
}

GramMatrix gram_matrix(const std::vector<PreparedGraph>& graphs, const SolverConfig& config, double eta,
                       int workers) {
  GramMatrix out;
  out.values = kernel_from_distances(rw_distance_matrix(graphs, config, workers), eta);
  return out;
}

Matrix psd_repair(const Matrix& k, RepairMode mode) {
  if (k.rows() != k.cols()) throw DimensionError("psd_repair needs a square matrix");
  const Matrix sym = 0.5 * (k + k.transpose());
  if (mode == RepairMode::none || sym.size() == 0) return sym;
  const Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericError("psd_repair: eigendecomposition failed");
  Vector lambda = solver.eigenvalues();
  const double lowest = lambda.minCoeff();
  switch (mode) {
    case RepairMode::clip: lambda = lambda.cwiseMax(0.0); break;
    case RepairMode::flip: lambda = lambda.cwiseAbs(); break;
    case RepairMode::shift:
      if (lowest < 0.0) lambda.array() -= lowest;
      break;
    case RepairMode::none: break;
  }
  const Matrix& u = solver.eigenvectors();
  const Matrix out = u * lambda.asDiagonal() * u.transpose();
  return 0.5 * (out + out.transpose());
}

GramMatrix psd_repair(const GramMatrix& k, RepairMode mode) {
  GramMatrix out = k;
  out.values = psd_repair(k.values, mode);
  out.repaired = k.repaired || mode != RepairMode::none;
  return out;
}

void save_gram(const GramMatrix& k, const std::filesystem::path& path) {
  if (k.values.rows() != k.values.cols()) throw DimensionError("Gram matrix must be square");
  for (const auto* s : {&k.dataset_name, &k.config_hash}) {
    if (s->find('\n') != std::string::npos) throw FormatError("Gram header fields cannot contain newlines");
  }
  const auto g = k.values.rows();
  std::string bytes = fmt::format("{}\n{}\n{}\n{}\n{}\n", kMagic, g, k.dataset_name, k.config_hash, k.repaired ? 1 : 0);
  bytes.reserve(bytes.size() + static_cast<std::size_t>(g * g) * 8);
  for (Eigen::Index i = 0; i < g; ++i) {
    for (Eigen::Index j = 0; j < g; ++j) append_le(bytes, k.values(i, j));
  }
  write_file_atomic(path, bytes);
}

GramMatrix load_gram(const std::filesystem::path& path, const std::optional<std::string>& expected_hash) {
  if (!std::filesystem::exists(path)) throw UsageError(fmt::format("Gram file {} does not exist", path.string()));
  const std::string bytes = read_file(path);
  std::vector<std::string> header;
  std::size_t pos = 0;
  while (header.size() < 5) {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw FormatError(fmt::format("{}: truncated header", path.string()));
    header.push_back(bytes.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (header[0] != kMagic) throw FormatError(fmt::format("{}: not a Gram file", path.string()));
  long long g = -1;
  try {
    std::size_t used = 0;
    g = std::stoll(header[1], &used);
    if (used != header[1].size()) g = -1;
  } catch (const std::exception&) {
    g = -1;
  }
  if (g < 0) throw FormatError(fmt::format("{}: bad size field '{}'", path.string(), header[1]));
  if (header[4] != "0" && header[4] != "1") throw FormatError(fmt::format("{}: bad repaired flag", path.string()));
  const auto expected_bytes = static_cast<std::size_t>(g) * static_cast<std::size_t>(g) * 8;
  if (bytes.size() - pos != expected_bytes) {
    throw FormatError(fmt::format("{}: expected {} payload bytes, found {}", path.string(), expected_bytes,
                                  bytes.size() - pos));
  }
  GramMatrix k;
  k.dataset_name = header[2];
  k.config_hash = header[3];
  k.repaired = header[4] == "1";
  if (expected_hash && *expected_hash != k.config_hash) {
    throw StaleError(fmt::format("{} was built with config {} but the current config is {}", path.string(),
                                 k.config_hash, *expected_hash));
  }
  k.values.resize(g, g);
  const char* p = bytes.data() + pos;
  for (Eigen::Index i = 0; i < g; ++i) {
    for (Eigen::Index j = 0; j < g; ++j, p += 8) k.values(i, j) = read_le(p);
  }
  return k;
}

void save_gram_csv(const Matrix& values, const std::filesystem::path& path) {
  std::string out;
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    if (j > 0) out += ',';
    out += std::to_string(j);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j > 0) out += ',';
      out += fmt::format("{:.17g}", values(i, j));
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace rwk
