#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <random>

#include "rwk/classify.hpp"
#include "rwk/error.hpp"
#include "rwk/parallel.hpp"

namespace rwk {

namespace {

Matrix take(const Matrix& m, const std::vector<int>& rows, const std::vector<int>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(rows[i], cols[j]);
    }
  }
  return out;
}

std::vector<int> pick(const std::vector<int>& values, const std::vector<int>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (const int i : idx) out.push_back(values[static_cast<std::size_t>(i)]);
  return out;
}

// Fits on `train`, returns the fraction of `test` predicted correctly.
double holdout_accuracy(const Matrix& gram, const std::vector<int>& labels, int class_count, double C,
                        const std::vector<int>& train, const std::vector<int>& test) {
  if (test.empty()) return 0.0;
  const auto model = one_vs_rest(take(gram, train, train), pick(labels, train), class_count, C);
  const auto predicted = ovr_predict(model, take(gram, test, train));
  int hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) hits += predicted[i] == labels[static_cast<std::size_t>(test[i])];
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

void split(const std::vector<int>& folds, int fold, const std::vector<int>& subset, std::vector<int>& train,
           std::vector<int>& test) {
  train.clear();
  test.clear();
  for (std::size_t i = 0; i < folds.size(); ++i) {
    const int sample = subset.empty() ? static_cast<int>(i) : subset[i];
    (folds[i] == fold ? test : train).push_back(sample);
  }
}

}  // namespace

std::vector<int> stratified_folds(const std::vector<int>& labels, int folds, std::uint64_t seed) {
  if (folds < 2) throw UsageError("need at least two folds");
  std::mt19937_64 rng(seed);
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  std::vector<int> out(labels.size(), 0);
  int next = 0;
  for (const int c : classes) {
    std::vector<int> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) members.push_back(static_cast<int>(i));
    }
    std::shuffle(members.begin(), members.end(), rng);
    for (const int m : members) {
      out[static_cast<std::size_t>(m)] = next;
      next = (next + 1) % folds;
    }
  }
  return out;
}

std::vector<KernelCandidate> kernel_grid(const Matrix& distances, const std::vector<double>& etas,
                                         const std::vector<RepairMode>& repairs) {
  std::vector<KernelCandidate> out;
  for (const double eta : etas) {
    const Matrix raw = kernel_from_distances(distances, eta);
    for (const auto mode : repairs) {
      out.push_back({{{"eta", fmt::format("{:g}", eta)}, {"repair", to_string(mode)}}, psd_repair(raw, mode)});
    }
  }
  return out;
}

EvalReport nested_cv(const std::vector<KernelCandidate>& kernels, const std::vector<int>& labels, int class_count,
                     const CvOptions& options) {
  if (kernels.empty()) throw UsageError("nested_cv: no kernel candidates");
  if (options.c_grid.empty()) throw UsageError("nested_cv: empty C grid");
  const auto n = static_cast<Eigen::Index>(labels.size());
  for (const auto& k : kernels) {
    if (k.gram.rows() != n || k.gram.cols() != n) throw DimensionError("nested_cv: kernel size disagrees with labels");
  }

  const std::size_t combos = kernels.size() * options.c_grid.size();
  const auto outer = stratified_folds(labels, options.outer_folds, options.seed);
  EvalReport report;
  std::vector<int> train;
  std::vector<int> test;
  for (int f = 0; f < options.outer_folds; ++f) {
    split(outer, f, {}, train, test);
    if (test.empty()) continue;
    const auto train_labels = pick(labels, train);
    const auto inner = stratified_folds(train_labels, options.inner_folds, options.seed + 1 + static_cast<std::uint64_t>(f));

    std::vector<double> score(combos, 0.0);
    parallel_for(combos, options.workers, [&](std::size_t idx) {
      const auto& kernel = kernels[idx / options.c_grid.size()];
      const double C = options.c_grid[idx % options.c_grid.size()];
      std::vector<int> inner_train;
      std::vector<int> inner_test;
      double sum = 0.0;
      int used = 0;
      try {
        for (int g = 0; g < options.inner_folds; ++g) {
          split(inner, g, train, inner_train, inner_test);
          if (inner_test.empty()) continue;
          sum += holdout_accuracy(kernel.gram, labels, class_count, C, inner_train, inner_test);
          ++used;
        }
        score[idx] = used > 0 ? sum / used : 0.0;
      } catch (const NumericError&) {
        score[idx] = -1.0;  // candidate unusable, e.g. an indefinite unrepaired kernel
      }
    });
    const auto best = static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
    const auto& kernel = kernels[best / options.c_grid.size()];
    const double C = options.c_grid[best % options.c_grid.size()];

    report.fold_accuracies.push_back(holdout_accuracy(kernel.gram, labels, class_count, C, train, test));
    auto chosen = kernel.params;
    chosen["C"] = fmt::format("{:g}", C);
    chosen["inner_accuracy"] = fmt::format("{:.6f}", score[best]);
    report.chosen_hyperparams.push_back(std::move(chosen));
  }

  const auto& acc = report.fold_accuracies;
  if (!acc.empty()) {
    report.mean = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
    double var = 0.0;
    for (const double a : acc) var += (a - report.mean) * (a - report.mean);
    report.std = std::sqrt(var / static_cast<double>(acc.size()));
  }
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["dataset"] = dataset;
  j["mean"] = mean;
  j["std"] = std;
  j["fold_accuracies"] = fold_accuracies;
  j["chosen_hyperparams"] = nlohmann::ordered_json::array();
  for (const auto& h : chosen_hyperparams) j["chosen_hyperparams"].push_back(h);
  return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
  std::string out = fmt::format("dataset: {}\naccuracy: {:.2f} +/- {:.2f} %\n\n", dataset, 100.0 * mean, 100.0 * std);
  out += fmt::format("{:>4}  {:>9}  {}\n", "fold", "accuracy", "chosen");
  for (std::size_t f = 0; f < fold_accuracies.size(); ++f) {
    std::string params;
    if (f < chosen_hyperparams.size()) {
      for (const auto& [k, v] : chosen_hyperparams[f]) {
        if (!params.empty()) params += ' ';
        params += k + "=" + v;
      }
    }
    out += fmt::format("{:>4}  {:>8.2f}%  {}\n", f, 100.0 * fold_accuracies[f], params);
  }
  return out;
}

}  // namespace rwk
