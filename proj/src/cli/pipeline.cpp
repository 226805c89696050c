#include "rwk/pipeline.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <cstring>

#include "rwk/dataset_io.hpp"
#include "rwk/error.hpp"
#include "rwk/io.hpp"
#include "rwk/parallel.hpp"

#ifndef RWK_DEFAULT_DATA_DIR
#define RWK_DEFAULT_DATA_DIR "data"
#endif

namespace rwk {

namespace {

constexpr const char* kCacheMagic = "RWKEMB1";

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

void put_matrix(std::string& out, const Matrix& m) {
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  out.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

  bool u64(std::uint64_t& v) {
    if (bytes_.size() - pos_ < 8) return false;
    std::memcpy(&v, bytes_.data() + pos_, 8);
    pos_ += 8;
    return true;
  }

  bool matrix(Matrix& m) {
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    if (!u64(rows) || !u64(cols) || rows > (1U << 24) || cols > (1U << 24)) return false;
    const std::size_t count = rows * cols;
    if ((bytes_.size() - pos_) / sizeof(double) < count) return false;
    m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::memcpy(m.data(), bytes_.data() + pos_, count * sizeof(double));
    pos_ += count * sizeof(double);
    return true;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_;
};

std::optional<std::vector<PreparedGraph>> read_cache(const std::filesystem::path& path, const std::string& hash,
                                                     const Dataset& dataset, const EmbeddingConfig& embedding) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  const std::string bytes = read_file(path);
  const std::string header = fmt::format("{}\n{}\n{}\n", kCacheMagic, hash, dataset.graphs.size());
  if (bytes.compare(0, header.size(), header) != 0) return std::nullopt;
  Reader reader(bytes, header.size());
  std::vector<PreparedGraph> out;
  out.reserve(dataset.graphs.size());
  for (const auto& g : dataset.graphs) {
    Matrix features;
    Matrix structure;
    if (!reader.matrix(features) || !reader.matrix(structure)) return std::nullopt;
    if (features.rows() != g.size() || structure.rows() != g.size()) return std::nullopt;
    out.push_back(restore_prepared(g, std::move(features), std::move(structure), embedding));
  }
  if (!reader.done()) return std::nullopt;
  return out;
}

void write_cache(const std::filesystem::path& path, const std::string& hash, const std::vector<PreparedGraph>& graphs) {
  std::string bytes = fmt::format("{}\n{}\n{}\n", kCacheMagic, hash, graphs.size());
  for (const auto& p : graphs) {
    put_matrix(bytes, p.features.matrix);
    put_matrix(bytes, p.structure.matrix);
  }
  write_file_atomic(path, bytes);
}

std::string format_matrix_csv(const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out += fmt::format("{}{:.17g}", j ? "," : "", m(i, j));
    out += '\n';
  }
  return out;
}

}  // namespace

std::filesystem::path resolve_dataset_dir(const RunConfig& config) {
  if (!config.dataset_path.empty()) return config.dataset_path;
  if (const char* env = std::getenv("RWK_DATA_DIR"); env != nullptr && *env != '\0') {
    return std::filesystem::path(env) / config.dataset_name;
  }
  return std::filesystem::path(RWK_DEFAULT_DATA_DIR) / config.dataset_name;
}

Dataset load_configured_dataset(const RunConfig& config) {
  return load_dataset(resolve_dataset_dir(config), config.dataset_name);
}

std::vector<Matrix> dataset_features(const Dataset& dataset, const RunConfig& config) {
  if (config.feature_mode == FeatureMode::wl) return wl_feature_sequence(dataset, config.wl_iterations);
  std::vector<Matrix> out;
  out.reserve(dataset.graphs.size());
  for (const auto& g : dataset.graphs) out.push_back(g.features);
  return out;
}

std::filesystem::path cache_dir(const RunConfig& config) {
  if (const char* env = std::getenv("RWK_CACHE_DIR"); env != nullptr && *env != '\0') return env;
  return config.out_dir / "cache";
}

std::filesystem::path embedding_cache_path(const RunConfig& config) {
  return cache_dir(config) / fmt::format("{}-{}.emb", config.dataset_name, embedding_hash(config));
}

PreparedDataset prepare_dataset(const RunConfig& config, bool use_cache) {
  config.validate();
  PreparedDataset out;
  out.dataset = load_configured_dataset(config);
  const auto hash = embedding_hash(config);
  const auto path = embedding_cache_path(config);
  if (use_cache) {
    if (auto cached = read_cache(path, hash, out.dataset, config.embedding)) {
      out.graphs = std::move(*cached);
      out.from_cache = true;
      return out;
    }
  }
  const auto features = dataset_features(out.dataset, config);
  out.graphs.resize(out.dataset.graphs.size());
  parallel_for(out.graphs.size(), config.workers, [&](std::size_t i) {
    out.graphs[i] = prepare_graph(out.dataset.graphs[i], features[i], config.embedding);
  });
  if (use_cache) write_cache(path, hash, out.graphs);
  return out;
}

GramRun cmd_gram(const RunConfig& config, const std::optional<std::filesystem::path>& trace_dir) {
  const auto start = std::chrono::steady_clock::now();
  auto prepared = prepare_dataset(config);
  const double embed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  GramRun run;
  run.embeddings_from_cache = prepared.from_cache;
  run.distances = rw_distance_matrix(prepared.graphs, config.solver, config.workers, &run.timing, trace_dir);
  const double total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const auto hash = config_hash(config);
  run.gram.values = kernel_from_distances(run.distances, config.eta);
  run.gram.dataset_name = config.dataset_name;
  run.gram.config_hash = hash;
  if (config.repair != RepairMode::none) run.gram = psd_repair(run.gram, config.repair);

  const GramMatrix distances{run.distances, config.dataset_name, hash, false};
  std::filesystem::create_directories(config.out_dir);
  run.gram_path = config.out_dir / "gram.bin";
  run.distances_path = config.out_dir / "distances.bin";
  save_gram(run.gram, run.gram_path);
  save_gram(distances, run.distances_path);
  save_gram_csv(run.gram.values, config.out_dir / "gram.csv");
  write_file_atomic(config.out_dir / "config.ini", to_ini(config));
  write_file_atomic(config.out_dir / "timing.txt",
                    fmt::format("graphs {}\npairs {}\npair_mean_ms {:.3f}\npair_max_ms {:.3f}\n"
                                "pairs_unconverged {}\nembedding_seconds {:.3f}\ntotal_seconds {:.3f}\n",
                                prepared.graphs.size(), run.timing.pairs, run.timing.mean_ms, run.timing.max_ms,
                                run.timing.unconverged, embed_seconds, total_seconds));
  return run;
}

EvalReport cmd_classify(const RunConfig& config, const std::filesystem::path& gram_path, bool force) {
  config.validate();
  if (!std::filesystem::exists(gram_path)) throw UsageError(fmt::format("Gram file {} not found", gram_path.string()));
  const auto hash = config_hash(config);
  const std::optional<std::string> expected = force ? std::nullopt : std::optional<std::string>(hash);
  const GramMatrix gram = load_gram(gram_path, expected);
  if (force && gram.config_hash != hash) {
    fmt::print(stderr, "warning: {} was built with config {}, current config is {}\n", gram_path.string(),
               gram.config_hash, hash);
  }

  const Dataset dataset = load_configured_dataset(config);
  const auto g = static_cast<Eigen::Index>(dataset.graphs.size());
  if (gram.values.rows() != g) {
    throw DimensionError(fmt::format("Gram matrix covers {} graphs, dataset has {}", gram.values.rows(), g));
  }
  std::vector<int> labels;
  labels.reserve(dataset.graphs.size());
  for (const auto& graph : dataset.graphs) labels.push_back(graph.graph_label);

  std::vector<KernelCandidate> candidates;
  const auto distances_path = gram_path.parent_path() / "distances.bin";
  if (std::filesystem::exists(distances_path)) {
    const GramMatrix distances = load_gram(distances_path, force ? std::nullopt : std::optional<std::string>(gram.config_hash));
    if (distances.values.rows() != g) throw DimensionError("distances.bin does not match the Gram matrix size");
    candidates = kernel_grid(distances.values, config.eta_grid, config.repair_grid);
  } else {
    for (const auto mode : config.repair_grid) {
      candidates.push_back({{{"eta", fmt::format("{:g}", config.eta)}, {"repair", to_string(mode)}},
                            psd_repair(gram.values, mode)});
    }
  }

  CvOptions options;
  options.outer_folds = config.outer_folds;
  options.inner_folds = config.inner_folds;
  options.c_grid = config.c_grid;
  options.seed = config.seed;
  options.workers = config.workers;
  EvalReport report = nested_cv(candidates, labels, dataset.class_count, options);
  report.dataset = config.dataset_name;

  std::filesystem::create_directories(config.out_dir);
  write_file_atomic(config.out_dir / "report.json", report.to_json());
  return report;
}

PairReport cmd_pair(const RunConfig& config, int a, int b, const std::optional<std::filesystem::path>& coupling_csv,
                    const std::optional<std::filesystem::path>& trace) {
  const auto prepared = prepare_dataset(config);
  const auto count = static_cast<int>(prepared.graphs.size());
  if (a < 0 || b < 0 || a >= count || b >= count) {
    throw UsageError(fmt::format("graph indices must lie in [0, {})", count));
  }
  PairReport out;
  out.solver = config.solver;
  std::optional<TraceSink> sink;
  if (trace) sink = TraceSink{*trace};
  out.result = rw_solve(prepared.graphs[static_cast<std::size_t>(a)], prepared.graphs[static_cast<std::size_t>(b)],
                        config.solver, sink);
  const auto& r = out.result;
  const auto& t = r.terms;
  const auto& c = config.solver;
  std::string& s = out.text;
  s += fmt::format("pair {} {}  sizes {} x {}\n", a, b, r.coupling.plan.rows(), r.coupling.plan.cols());
  s += fmt::format("feature_cost        {:.17g}\n", t.feature);
  s += fmt::format("neighbourhood_cost  {:.17g}\n", t.neighbourhood);
  s += fmt::format("omega_source        {:.17g}\n", t.omega_source);
  s += fmt::format("omega_target        {:.17g}\n", t.omega_target);
  s += fmt::format("frobenius_sq        {:.17g}\n", t.frobenius_sq);
  s += fmt::format("theta_w             {:.17g}\n", t.theta_w(c));
  s += fmt::format("lw_term             {:.17g}\n", t.lw_term(c));
  s += fmt::format("gw_cost             {:.17g}\n", t.gw);
  s += fmt::format("kl_prior            {:.17g}\n", t.kl);
  s += fmt::format("gw_term             {:.17g}\n", t.gw_term(c));
  s += fmt::format("total               {:.17g}\n", t.total(c));
  s += fmt::format("iterations          {}\n", r.iterations);
  s += fmt::format("converged           {}\n", r.converged ? "yes" : "no");
  s += fmt::format("final_gap           {:.17g}\n", r.gap_history.empty() ? 0.0 : r.gap_history.back());
  if (coupling_csv) write_file_atomic(*coupling_csv, format_matrix_csv(r.coupling.plan));
  return out;
}

std::filesystem::path cmd_embed(const RunConfig& config) {
  prepare_dataset(config, true);
  return embedding_cache_path(config);
}

}  // namespace rwk
