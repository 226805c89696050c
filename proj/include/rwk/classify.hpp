#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rwk/graph.hpp"
#include "rwk/kernel.hpp"

namespace rwk {

struct SvmOptions {
  double tolerance = 1e-3;     // KKT violation at which training stops
  long long max_iterations = 1000000;
  bool check_psd = true;       // factor K + 1e-6 I before training
  bool record_objective = false;
};

struct SvmModel {
  Vector support_coefficients;  // alpha_i * y_i over support vectors
  double bias = 0.0;
  std::vector<int> support_indices;  // into the training set
  double regularization_C = 1.0;

  Vector alpha;  // all dual weights, training order
  long long iterations = 0;
  bool jittered = false;  // the diagonal jitter retry was used
  std::vector<double> dual_objective;  // per iteration, if recorded
};

// Soft-margin dual SVM on a precomputed kernel, solved by pairwise coordinate
// ascent with second-order working set selection. labels are +1 / -1.
SvmModel svm_train(const Matrix& gram, const std::vector<int>& labels, double C, const SvmOptions& options = {});

// sum_i coeff_i K(x, s_i) + bias; columns of `rows` follow support_indices.
Vector svm_decision(const SvmModel& model, const Matrix& rows);
std::vector<int> svm_predict(const SvmModel& model, const Matrix& rows);

// Columns of test x train kernel values restricted to the model's support
// vectors.
Matrix support_columns(const SvmModel& model, const Matrix& test_by_train);

struct OneVsRest {
  int class_count = 0;
  // Two classes use a single model with class 0 as the positive side.
  std::vector<SvmModel> models;
  std::vector<bool> present;  // class seen during training
};

OneVsRest one_vs_rest(const Matrix& gram, const std::vector<int>& labels, int class_count, double C,
                      const SvmOptions& options = {});
Matrix ovr_decision(const OneVsRest& model, const Matrix& test_by_train);
// Argmax of the decision values, ties to the smaller class index.
std::vector<int> ovr_predict(const OneVsRest& model, const Matrix& test_by_train);

// Fold id of every sample. Samples of each class are shuffled with the seed
// and dealt round-robin so every fold receives a near-equal share.
std::vector<int> stratified_folds(const std::vector<int>& labels, int folds, std::uint64_t seed);

// A precomputed kernel together with the hyperparameters that produced it.
struct KernelCandidate {
  std::map<std::string, std::string> params;
  Matrix gram;
};

struct CvOptions {
  int outer_folds = 10;
  int inner_folds = 5;
  std::vector<double> c_grid;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct EvalReport {
  std::string dataset;
  std::vector<double> fold_accuracies;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over folds
  std::vector<std::map<std::string, std::string>> chosen_hyperparams;  // per outer fold

  std::string to_json() const;
  std::string to_table() const;
};

// Outer stratified CV; inside every outer training split an inner stratified
// CV picks the (kernel candidate, C) pair with the best mean accuracy, first
// in grid order on ties.
EvalReport nested_cv(const std::vector<KernelCandidate>& kernels, const std::vector<int>& labels, int class_count,
                     const CvOptions& options);

// One candidate per (eta, repair) pair, built from an RW distance matrix.
std::vector<KernelCandidate> kernel_grid(const Matrix& distances, const std::vector<double>& etas,
                                         const std::vector<RepairMode>& repairs);

}  // namespace rwk
