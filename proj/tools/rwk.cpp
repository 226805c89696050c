#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <optional>

#include "rwk/error.hpp"
#include "rwk/pipeline.hpp"

namespace {

// 0 success, 1 numeric / data failure, 2 usage or config problem, 3 stale artifact.
int exit_code_for(const rwk::Error& e) {
  if (dynamic_cast<const rwk::UsageError*>(&e) != nullptr || dynamic_cast<const rwk::ConfigError*>(&e) != nullptr) {
    return 2;
  }
  if (dynamic_cast<const rwk::StaleError*>(&e) != nullptr) return 3;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regularized Wasserstein graph kernels"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  int workers = 0;
  long long seed = -1;
  bool force = false;
  std::string trace;
  app.add_option("--config", config_path, "configuration file (key = value with [section] headers)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for the cross-validation splits")->check(CLI::NonNegativeNumber);
  app.add_flag("--force", force, "use a Gram file built under a different configuration");
  app.add_option("--trace", trace, "directory (gram) or file (pair) for per-iteration solver traces");

  auto* gram = app.add_subcommand("gram", "compute the RW distance and Gram matrices of a dataset");
  auto* classify = app.add_subcommand("classify", "nested cross-validation on a stored Gram matrix");
  std::string gram_path;
  classify->add_option("--gram", gram_path, "Gram file (default <out>/gram.bin)");
  auto* pair = app.add_subcommand("pair", "solve one graph pair and print the objective breakdown");
  int index_a = 0;
  int index_b = 0;
  std::string coupling_path;
  pair->add_option("a", index_a, "first graph index (0-based)")->required();
  pair->add_option("b", index_b, "second graph index (0-based)")->required();
  pair->add_option("--coupling", coupling_path, "write the optimal coupling as CSV");
  auto* embed = app.add_subcommand("embed", "precompute the embedding cache");

  CLI11_PARSE(app, argc, argv);

  try {
    rwk::RunConfig config = config_path.empty() ? rwk::RunConfig{} : rwk::load_config(config_path);
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (workers > 0) config.workers = workers;
    if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
    config.validate();
    const std::optional<std::filesystem::path> trace_path =
        trace.empty() ? std::nullopt : std::optional<std::filesystem::path>(trace);

    if (*gram) {
      const auto run = rwk::cmd_gram(config, trace_path);
      fmt::print("{} graphs, {} pairs, {:.2f} ms/pair (max {:.2f}), {} pairs at the iteration cap\n",
                 run.gram.values.rows(), run.timing.pairs, run.timing.mean_ms, run.timing.max_ms,
                 run.timing.unconverged);
      fmt::print("wrote {}\n", run.gram_path.string());
    } else if (*classify) {
      const auto path = gram_path.empty() ? config.out_dir / "gram.bin" : std::filesystem::path(gram_path);
      const auto report = rwk::cmd_classify(config, path, force);
      fmt::print("{}", report.to_table());
    } else if (*pair) {
      const std::optional<std::filesystem::path> coupling =
          coupling_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(coupling_path);
      fmt::print("{}", rwk::cmd_pair(config, index_a, index_b, coupling, trace_path).text);
    } else if (*embed) {
      fmt::print("{}\n", rwk::cmd_embed(config).string());
    }
  } catch (const rwk::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
