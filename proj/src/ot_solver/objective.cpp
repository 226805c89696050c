#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "rwk/error.hpp"
#include "rwk/ot_solver.hpp"

namespace rwk {

void SolverConfig::validate() const {
  const auto in = [](double v, double lo, double hi, bool open_lo) { return (open_lo ? v > lo : v >= lo) && v <= hi; };
  if (!in(beta1, 0.0, 1.0, false) || !in(beta2, 0.0, 1.0, false)) {
    throw ConfigError("beta1 and beta2 must lie in [0, 1]");
  }
  if (!in(lambda_mu, 0.0, 1.0, false) || !in(lambda_nu, 0.0, 1.0, false)) {
    throw ConfigError("lambda_mu and lambda_nu must lie in [0, 1]");
  }
  if (!in(rho, 0.0, 1.0, false)) throw ConfigError("rho must lie in [0, 1]");
  if (!in(lambda_g, 0.0, 1.0, false)) throw ConfigError("lambda_g must lie in [0, 1]");
  if (!(sinkhorn_lambda > 0.0) || !std::isfinite(sinkhorn_lambda)) throw ConfigError("sinkhorn_lambda must be positive");
  if (sinkhorn_iters < 1) throw ConfigError("sinkhorn_iters must be positive");
  if (max_iters < 1) throw ConfigError("max_iters must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!in(alpha0, 0.0, 1.0, true)) throw ConfigError("alpha0 must lie in (0, 1]");
  if (!(log_floor > 0.0) || log_floor >= 1e-3) throw ConfigError("log_floor must be a tiny positive number");
}

double Coupling::marginal_violation(const Vector& mu, const Vector& nu) const {
  return (plan.rowwise().sum() - mu).lpNorm<1>() + (plan.colwise().sum().transpose() - nu).lpNorm<1>();
}

void RwProblem::validate() const {
  sims.validate();
  const auto n1 = sims.cv.rows();
  const auto n2 = sims.cv.cols();
  if (laplacian_source.rows() != n1 || laplacian_source.cols() != n1 || laplacian_target.rows() != n2 ||
      laplacian_target.cols() != n2) {
    throw DimensionError("Laplacian shapes disagree with the cost matrices");
  }
  if (embedding_source.rows() != n1 || embedding_target.rows() != n2 ||
      embedding_source.cols() != embedding_target.cols()) {
    throw DimensionError("embedding shapes disagree with the cost matrices");
  }
  if (prior.rows() != n1 || prior.cols() != n2) throw DimensionError("prior shape disagrees with the cost matrices");
  if (mu.size() != n1 || nu.size() != n2) throw DimensionError("histogram sizes disagree with the cost matrices");
  if (prior.size() > 0 && prior.minCoeff() <= 0.0) throw NumericError("prior coupling must be strictly positive");
}

Matrix barycentric_operator(const Matrix& laplacian, const Vector& weights) {
  const auto n = weights.size();
  const Histogram h{weights};
  if (h.is_uniform()) return laplacian;
  Vector inv(n);
  for (Eigen::Index i = 0; i < n; ++i) inv(i) = weights(i) > 0.0 ? 1.0 / weights(i) : 0.0;
  const double scale = 1.0 / static_cast<double>(n * n);
  return scale * (inv.asDiagonal() * laplacian * inv.asDiagonal());
}

Matrix prior_coupling(const std::vector<int>& deg_source, const std::vector<int>& deg_target, double log_floor) {
  const auto n1 = static_cast<Eigen::Index>(deg_source.size());
  const auto n2 = static_cast<Eigen::Index>(deg_target.size());
  Matrix prior(n1, n2);
  for (Eigen::Index i = 0; i < n1; ++i) {
    for (Eigen::Index j = 0; j < n2; ++j) {
      const double a = deg_source[static_cast<std::size_t>(i)];
      const double b = deg_target[static_cast<std::size_t>(j)];
      const double top = std::max(a, b);
      prior(i, j) = top > 0.0 ? 1.0 - std::abs(a - b) / top : 1.0;
    }
  }
  // One global normalization keeps prior(g2, g1) the transpose of
  // prior(g1, g2); a per-row normalization would not.
  const double total = prior.sum();
  if (total > 0.0) {
    prior /= total;
  } else {
    prior.setConstant(1.0 / static_cast<double>(n1 * n2));
  }
  return prior.cwiseMax(log_floor);
}

double omega_source(const Matrix& gamma, const Matrix& laplacian_source, const Matrix& embedding_target) {
  if (laplacian_source.rows() != gamma.rows() || embedding_target.rows() != gamma.cols()) {
    throw DimensionError("omega_source: shape mismatch");
  }
  const Matrix projected = gamma * embedding_target;  // n1 x k
  return (projected.transpose() * laplacian_source * projected).trace();
}

double omega_target(const Matrix& gamma, const Matrix& laplacian_target, const Matrix& embedding_source) {
  if (laplacian_target.rows() != gamma.cols() || embedding_source.rows() != gamma.rows()) {
    throw DimensionError("omega_target: shape mismatch");
  }
  const Matrix projected = gamma.transpose() * embedding_source;  // n2 x k
  return (projected.transpose() * laplacian_target * projected).trace();
}

double theta_w(const Matrix& gamma, const RwProblem& problem, const SolverConfig& config) {
  return config.lambda_mu * omega_source(gamma, problem.laplacian_source, problem.embedding_target) +
         config.lambda_nu * omega_target(gamma, problem.laplacian_target, problem.embedding_source) +
         0.5 * config.rho * gamma.squaredNorm();
}

double theta_g(const Matrix& gamma, const Matrix& prior, double log_floor) {
  if (gamma.rows() != prior.rows() || gamma.cols() != prior.cols()) throw DimensionError("theta_g: shape mismatch");
  double kl = 0.0;
  for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
    for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
      const double g = gamma(i, j);
      if (g == 0.0) continue;
      kl += g * (std::log(std::max(g, log_floor)) - std::log(std::max(prior(i, j), log_floor)));
    }
  }
  return kl;
}

double objective_f(const Matrix& gamma, const RwProblem& problem, const SolverConfig& config) {
  return (gamma.array() * problem.sims.cv.array()).sum() +
         config.beta1 * ((gamma.array() * problem.sims.cn.array()).sum() + theta_w(gamma, problem, config));
}

double objective_g(const Matrix& gamma, const RwProblem& problem, const SolverConfig& config) {
  return config.beta2 *
         (gamma.array() * gw_cost_apply(problem.sims.cp_source, problem.sims.cp_target, gamma).array()).sum();
}

double objective_h(const Matrix& gamma, const RwProblem& problem, const SolverConfig& config) {
  return config.beta2 * config.lambda_g * theta_g(gamma, problem.prior, config.log_floor);
}

Matrix grad_f(const Matrix& gamma, const RwProblem& problem, const SolverConfig& config) {
  const Matrix& lmu = problem.laplacian_source;
  const Matrix& lnu = problem.laplacian_target;
  const Matrix gram_target = problem.embedding_target * problem.embedding_target.transpose();
  const Matrix gram_source = problem.embedding_source * problem.embedding_source.transpose();
  const Matrix d_omega_mu = lmu.transpose() * gamma * gram_target + lmu * gamma * gram_target;
  const Matrix d_omega_nu = gram_source * gamma * lnu.transpose() + gram_source * gamma * lnu;
  return problem.sims.cv + config.beta1 * problem.sims.cn +
         config.beta1 * (config.lambda_mu * d_omega_mu + config.lambda_nu * d_omega_nu + config.rho * gamma);
}

Matrix grad_g(const Matrix& gamma, const Matrix& cp_source, const Matrix& cp_target, double beta2) {
  return 2.0 * beta2 * gw_cost_apply(cp_source, cp_target, gamma);
}

Matrix grad_h(const Matrix& gamma, const Matrix& prior, double beta2, double lambda_g, double log_floor) {
  if (gamma.rows() != prior.rows() || gamma.cols() != prior.cols()) throw DimensionError("grad_h: shape mismatch");
  const auto log_gamma = gamma.array().max(log_floor).log();
  const auto log_prior = prior.array().max(log_floor).log();
  return (beta2 * lambda_g * (1.0 + log_gamma - log_prior)).matrix();
}

double ObjectiveTerms::theta_w(const SolverConfig& c) const {
  return c.lambda_mu * omega_source + c.lambda_nu * omega_target + 0.5 * c.rho * frobenius_sq;
}

double ObjectiveTerms::lw(const SolverConfig& c) const { return neighbourhood + theta_w(c); }

ObjectiveTerms objective_terms(const Matrix& gamma, const RwProblem& problem, const SolverConfig& config) {
  ObjectiveTerms t;
  t.feature = (gamma.array() * problem.sims.cv.array()).sum();
  t.neighbourhood = (gamma.array() * problem.sims.cn.array()).sum();
  t.omega_source = omega_source(gamma, problem.laplacian_source, problem.embedding_target);
  t.omega_target = omega_target(gamma, problem.laplacian_target, problem.embedding_source);
  t.frobenius_sq = gamma.squaredNorm();
  t.gw = (gamma.array() * gw_cost_apply(problem.sims.cp_source, problem.sims.cp_target, gamma).array()).sum();
  t.kl = theta_g(gamma, problem.prior, config.log_floor);
  return t;
}

double objective_H(const Matrix& gamma, const RwProblem& problem, const SolverConfig& config) {
  return objective_terms(gamma, problem, config).total(config);
}

}  // namespace rwk
