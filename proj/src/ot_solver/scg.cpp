#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "rwk/error.hpp"
#include "rwk/ot_solver.hpp"

namespace rwk {

LineSearchResult line_search(const std::function<double(double)>& phi, double prev_cost, double alpha0,
                             double width) {
  constexpr int kMaxEvaluations = 60;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;

  LineSearchResult best{0.0, prev_cost, 0};
  int evaluations = 0;
  const auto consider = [&](double alpha, double value) {
    if (std::isfinite(value) && value < best.cost) {
      best.alpha = alpha;
      best.cost = value;
    }
  };
  const auto eval = [&](double alpha) {
    ++evaluations;
    return phi(alpha);
  };

  consider(1.0, eval(1.0));
  if (alpha0 > 0.0 && alpha0 < 1.0) consider(alpha0, eval(alpha0));

  double lo = 0.0;
  double hi = 1.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = eval(x1);
  double f2 = eval(x2);
  consider(x1, f1);
  consider(x2, f2);
  while (hi - lo > width && evaluations < kMaxEvaluations) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = eval(x1);
      consider(x1, f1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = eval(x2);
      consider(x2, f2);
    }
  }
  best.evaluations = evaluations;
  return best;
}

namespace {

// Precomputed pieces of H for one problem. Everything except the KL term is
// a quadratic in gamma, so along a segment gamma + a * delta the objective is
//   H(gamma) + a <delta, grad(f + g)> + a^2 Q(delta) - beta2 lambda_g KL(gamma + a delta)
// and the line search only has to re-evaluate the KL term.
class Evaluator {
 public:
  Evaluator(const RwProblem& p, const SolverConfig& c)
      : problem_(p),
        config_(c),
        linear_(p.sims.cv + c.beta1 * p.sims.cn),
        lap_source_sym_(p.laplacian_source + p.laplacian_source.transpose()),
        lap_target_sym_(p.laplacian_target + p.laplacian_target.transpose()),
        gram_source_(p.embedding_source * p.embedding_source.transpose()),
        gram_target_(p.embedding_target * p.embedding_target.transpose()),
        log_prior_(p.prior.array().max(c.log_floor).log()) {}

  // Quadratic part (everything but the linear costs and KL) evaluated at x.
  double quadratic(const Matrix& x) const {
    const auto& c = config_;
    double value = 0.5 * c.rho * x.squaredNorm();
    if (c.lambda_mu != 0.0) value += c.lambda_mu * frob(x, problem_.laplacian_source * x * gram_target_);
    if (c.lambda_nu != 0.0) value += c.lambda_nu * frob(x, gram_source_ * x * problem_.laplacian_target);
    value *= c.beta1;
    if (c.beta2 != 0.0) value += c.beta2 * frob(x, gw_cost_apply(problem_.sims.cp_source, problem_.sims.cp_target, x));
    return value;
  }

  // Gradient of f + g.
  Matrix smooth_gradient(const Matrix& x) const {
    const auto& c = config_;
    Matrix grad = c.rho * x;
    if (c.lambda_mu != 0.0) grad += c.lambda_mu * (lap_source_sym_ * x * gram_target_);
    if (c.lambda_nu != 0.0) grad += c.lambda_nu * (gram_source_ * x * lap_target_sym_);
    grad = linear_ + c.beta1 * grad;
    if (c.beta2 != 0.0) grad += 2.0 * c.beta2 * gw_cost_apply(problem_.sims.cp_source, problem_.sims.cp_target, x);
    return grad;
  }

  double entropy_weight() const { return config_.beta2 * config_.lambda_g; }

  double kl(const Matrix& x) const {
    double sum = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double g = x.data()[k];
      if (g > 0.0) sum += g * (std::log(std::max(g, config_.log_floor)) - log_prior_.data()[k]);
    }
    return sum;
  }

  Matrix kl_gradient(const Matrix& x) const {
    return (1.0 + x.array().max(config_.log_floor).log() - log_prior_.array()).matrix();
  }

 private:
  static double frob(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

  const RwProblem& problem_;
  const SolverConfig& config_;
  Matrix linear_;
  Matrix lap_source_sym_;
  Matrix lap_target_sym_;
  Matrix gram_source_;
  Matrix gram_target_;
  Matrix log_prior_;
};

}  // namespace

SolveResult scg_solve(const RwProblem& problem, const SolverConfig& config, const std::optional<TraceSink>& trace) {
  config.validate();
  problem.validate();
  const Evaluator eval(problem, config);
  const auto& mu = problem.mu;
  const auto& nu = problem.nu;

  std::ofstream trace_out;
  if (trace) {
    trace_out.open(trace->path);
    if (!trace_out) throw UsageError(fmt::format("cannot open trace file {}", trace->path.string()));
    trace_out << "iter,objective,gap,alpha\n";
  }

  SolveResult result;
  Matrix gamma = mu * nu.transpose();
  double cost = objective_H(gamma, problem, config);
  if (!std::isfinite(cost)) throw NumericError("non-finite objective at iteration 0");
  result.max_marginal_violation = Coupling{gamma}.marginal_violation(mu, nu);

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    const Matrix smooth_grad = eval.smooth_gradient(gamma);
    const Matrix grad = smooth_grad - eval.entropy_weight() * eval.kl_gradient(gamma);
    if (!grad.allFinite()) throw NumericError(fmt::format("non-finite gradient at iteration {}", iter));

    const auto lmo = sinkhorn_knopp(mu, nu, grad, config.sinkhorn_lambda, config.sinkhorn_iters);
    const Matrix delta = lmo.coupling.plan - gamma;
    const double gap = -(delta.array() * grad.array()).sum();

    const double base = cost + eval.entropy_weight() * eval.kl(gamma);  // f + g at gamma
    const double slope = (delta.array() * smooth_grad.array()).sum();
    const double curvature = eval.quadratic(delta);
    const double weight = eval.entropy_weight();
    const auto phi = [&](double alpha) {
      const Matrix point = gamma + alpha * delta;
      return base + alpha * slope + alpha * alpha * curvature - weight * eval.kl(point);
    };
    const auto step = line_search(phi, cost, config.alpha0);

    if (step.alpha > 0.0) {
      gamma += step.alpha * delta;
      cost = objective_H(gamma, problem, config);
    }
    if (!std::isfinite(cost)) throw NumericError(fmt::format("non-finite objective at iteration {}", iter));

    result.gap_history.push_back(gap);
    result.objective_history.push_back(cost);
    result.alpha_history.push_back(step.alpha);
    result.iterations = iter;
    result.max_marginal_violation =
        std::max(result.max_marginal_violation, Coupling{gamma}.marginal_violation(mu, nu));
    if (trace_out) trace_out << fmt::format("{},{:.17g},{:.17g},{:.17g}\n", iter, cost, gap, step.alpha);

    if (gap <= config.epsilon) {
      result.converged = true;
      break;
    }
    // No progress along a direction with a positive gap: further iterations
    // would repeat this one exactly.
    if (step.alpha == 0.0) break;
  }

  result.coupling.plan = std::move(gamma);
  result.terms = objective_terms(result.coupling.plan, problem, config);
  result.objective = cost;
  result.rw_value = cost;
  return result;
}

}  // namespace rwk
