#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "rwk/classify.hpp"
#include "rwk/error.hpp"

namespace rwk {

namespace {

constexpr double kTau = 1e-12;

bool nearly_psd(const Matrix& k) {
  if (k.size() == 0) return true;
  const Matrix shifted = k + 1e-6 * Matrix::Identity(k.rows(), k.cols());
  const Eigen::LLT<Matrix> llt(shifted);
  return llt.info() == Eigen::Success;
}

// Dual: min 1/2 a^T Q a - e^T a, y^T a = 0, 0 <= a <= C, Q = yy^T * K.
SvmModel smo(const Matrix& k, const std::vector<int>& y, double C, const SvmOptions& options) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Vector alpha = Vector::Zero(n);
  Vector grad = -Vector::Ones(n);
  const auto yy = [&](Eigen::Index i) { return static_cast<double>(y[static_cast<std::size_t>(i)]); };
  const auto q = [&](Eigen::Index i, Eigen::Index j) { return yy(i) * yy(j) * k(i, j); };
  const auto upper = [&](Eigen::Index t) { return alpha(t) >= C; };
  const auto lower = [&](Eigen::Index t) { return alpha(t) <= 0.0; };
  const auto in_up = [&](Eigen::Index t) { return yy(t) > 0 ? !upper(t) : !lower(t); };
  const auto in_low = [&](Eigen::Index t) { return yy(t) > 0 ? !lower(t) : !upper(t); };

  SvmModel model;
  model.regularization_C = C;
  long long iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (in_up(t) && -yy(t) * grad(t) >= gmax) {
        if (-yy(t) * grad(t) > gmax || i < 0) i = t;
        gmax = -yy(t) * grad(t);
      }
    }
    double gmin = std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -yy(t) * grad(t);
      gmin = std::min(gmin, v);
      if (i < 0) continue;
      const double b = gmax - v;
      if (b > 0.0) {
        double a = k(i, i) + k(t, t) - 2.0 * k(i, t);
        if (a <= 0.0) a = kTau;
        const double score = -(b * b) / a;
        if (score <= best) {
          if (score < best || j < 0) j = t;
          best = score;
        }
      }
    }
    if (i < 0 || j < 0 || gmax - gmin < options.tolerance) break;

    const double old_i = alpha(i);
    const double old_j = alpha(j);
    if (y[static_cast<std::size_t>(i)] != y[static_cast<std::size_t>(j)]) {
      double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0.0) {
        if (alpha(j) < 0.0) {
          alpha(j) = 0.0;
          alpha(i) = diff;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = -diff;
      }
      if (diff > 0.0) {
        if (alpha(i) > C) {
          alpha(i) = C;
          alpha(j) = C - diff;
        }
      } else if (alpha(j) > C) {
        alpha(j) = C;
        alpha(i) = C + diff;
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > C) {
        if (alpha(i) > C) {
          alpha(i) = C;
          alpha(j) = sum - C;
        }
      } else if (alpha(j) < 0.0) {
        alpha(j) = 0.0;
        alpha(i) = sum;
      }
      if (sum > C) {
        if (alpha(j) > C) {
          alpha(j) = C;
          alpha(i) = sum - C;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = sum;
      }
    }
    const double di = alpha(i) - old_i;
    const double dj = alpha(j) - old_j;
    for (Eigen::Index t = 0; t < n; ++t) grad(t) += q(t, i) * di + q(t, j) * dj;
    if (options.record_objective) model.dual_objective.push_back(-0.5 * alpha.dot(grad - Vector::Ones(n)));
  }
  if (!alpha.allFinite() || !grad.allFinite()) throw NumericError("svm_train: optimizer diverged");

  // Offset from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int free_count = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = yy(t) * grad(t);
    if (upper(t)) {
      if (yy(t) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (yy(t) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free_count;
      sum_free += yg;
    }
  }
  const double rho = free_count > 0 ? sum_free / free_count : 0.5 * (ub + lb);

  model.alpha = alpha;
  model.bias = -rho;
  model.iterations = iter;
  std::vector<double> coeffs;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (alpha(t) > 0.0) {
      model.support_indices.push_back(static_cast<int>(t));
      coeffs.push_back(alpha(t) * yy(t));
    }
  }
  model.support_coefficients = Eigen::Map<const Vector>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
  return model;
}

}  // namespace

SvmModel svm_train(const Matrix& gram, const std::vector<int>& labels, double C, const SvmOptions& options) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (gram.rows() != n || gram.cols() != n) {
    throw DimensionError(fmt::format("svm_train: {}x{} kernel for {} labels", gram.rows(), gram.cols(), n));
  }
  if (!(C > 0.0) || !std::isfinite(C)) throw ConfigError("svm_train: C must be positive");
  for (const int y : labels) {
    if (y != 1 && y != -1) throw UsageError("svm_train: labels must be +1 or -1");
  }
  if (!gram.allFinite()) throw NumericError("svm_train: kernel has non-finite entries");

  const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool has_neg = std::find(labels.begin(), labels.end(), -1) != labels.end();
  if (!(has_pos && has_neg)) {
    SvmModel model;
    model.regularization_C = C;
    model.alpha = Vector::Zero(n);
    model.bias = has_neg ? -1.0 : 1.0;
    return model;
  }

  Matrix k = gram;
  bool jittered = false;
  if (options.check_psd && !nearly_psd(k)) {
    fmt::print(stderr, "warning: svm_train kernel is not positive semidefinite; adding 1e-8 to the diagonal\n");
    k.diagonal().array() += 1e-8;
    jittered = true;
    if (!nearly_psd(k)) throw NumericError("svm_train: kernel is indefinite beyond -1e-6 after jitter");
  }
  SvmModel model = smo(k, labels, C, options);
  model.jittered = jittered;
  return model;
}

Matrix support_columns(const SvmModel& model, const Matrix& test_by_train) {
  Matrix out(test_by_train.rows(), static_cast<Eigen::Index>(model.support_indices.size()));
  for (std::size_t s = 0; s < model.support_indices.size(); ++s) {
    const int idx = model.support_indices[s];
    if (idx >= test_by_train.cols()) throw DimensionError("support index outside the kernel rows");
    out.col(static_cast<Eigen::Index>(s)) = test_by_train.col(idx);
  }
  return out;
}

Vector svm_decision(const SvmModel& model, const Matrix& rows) {
  if (rows.cols() != model.support_coefficients.size()) {
    throw DimensionError(fmt::format("svm_predict: {} kernel columns for {} support vectors", rows.cols(),
                                     model.support_coefficients.size()));
  }
  Vector out = rows * model.support_coefficients;
  out.array() += model.bias;
  return out;
}

std::vector<int> svm_predict(const SvmModel& model, const Matrix& rows) {
  const Vector d = svm_decision(model, rows);
  std::vector<int> out(static_cast<std::size_t>(d.size()));
  for (Eigen::Index i = 0; i < d.size(); ++i) out[static_cast<std::size_t>(i)] = d(i) >= 0.0 ? 1 : -1;
  return out;
}

OneVsRest one_vs_rest(const Matrix& gram, const std::vector<int>& labels, int class_count, double C,
                      const SvmOptions& options) {
  if (class_count < 2) throw UsageError("one_vs_rest needs at least two classes");
  OneVsRest out;
  out.class_count = class_count;
  out.present.assign(static_cast<std::size_t>(class_count), false);
  for (const int y : labels) {
    if (y < 0 || y >= class_count) throw UsageError(fmt::format("class {} outside [0, {})", y, class_count));
    out.present[static_cast<std::size_t>(y)] = true;
  }
  const int models = class_count == 2 ? 1 : class_count;
  for (int c = 0; c < models; ++c) {
    std::vector<int> binary(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) binary[i] = labels[i] == c ? 1 : -1;
    out.models.push_back(svm_train(gram, binary, C, options));
  }
  for (int c = 0; c < class_count; ++c) {
    if (!out.present[static_cast<std::size_t>(c)] && class_count > 2) {
      fmt::print(stderr, "note: class {} absent from the training split and cannot be predicted\n", c);
    }
  }
  return out;
}

Matrix ovr_decision(const OneVsRest& model, const Matrix& test_by_train) {
  Matrix out(test_by_train.rows(), model.class_count);
  if (model.class_count == 2) {
    const auto& m = model.models.front();
    const Vector d = svm_decision(m, support_columns(m, test_by_train));
    out.col(0) = d;
    out.col(1) = -d;
    return out;
  }
  for (int c = 0; c < model.class_count; ++c) {
    if (!model.present[static_cast<std::size_t>(c)]) {
      out.col(c).setConstant(-std::numeric_limits<double>::infinity());
      continue;
    }
    const auto& m = model.models[static_cast<std::size_t>(c)];
    out.col(c) = svm_decision(m, support_columns(m, test_by_train));
  }
  return out;
}

std::vector<int> ovr_predict(const OneVsRest& model, const Matrix& test_by_train) {
  const Matrix d = ovr_decision(model, test_by_train);
  std::vector<int> out(static_cast<std::size_t>(d.rows()), 0);
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < d.cols(); ++c) {
      if (d(i, c) > d(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

}  // namespace rwk
