#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rwk/error.hpp"
#include "rwk/ot_solver.hpp"

namespace rwk {
namespace {

// Marginal violation that couplings handed to the SCG loop may carry.
constexpr double kFeasibilityTolerance = 1e-6;

double log_sum_exp(const Eigen::Ref<const Vector>& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

// Same fixed point computed on dual potentials (in cost units), used when the
// scaling kernel would lose entries to underflow. Small temperatures converge
// slowly from a cold start, so the temperature is annealed down from the cost
// range in factors of 4 with the potentials carried over between stages.
SinkhornResult sinkhorn_log_domain(const Vector& mu, const Vector& nu, const Matrix& shifted, double lambda,
                                   int iterations, double tolerance) {
  const auto n1 = shifted.rows();
  const auto n2 = shifted.cols();
  const Vector log_mu = mu.array().log();
  const Vector log_nu = nu.array().log();
  const double ninf = -std::numeric_limits<double>::infinity();
  Vector f = Vector::Zero(n1);
  Vector g = Vector::Zero(n2);

  std::vector<double> stages{lambda};
  const double range = shifted.maxCoeff();
  while (stages.back() * 4.0 < range / 4.0) stages.push_back(stages.back() * 4.0);
  std::reverse(stages.begin(), stages.end());

  SinkhornResult out;
  out.log_domain = true;
  Matrix plan(n1, n2);
  const auto assemble = [&](double eps) {
    for (Eigen::Index j = 0; j < n2; ++j) {
      for (Eigen::Index i = 0; i < n1; ++i) plan(i, j) = std::exp((f(i) + g(j) - shifted(i, j)) / eps);
    }
  };
  for (std::size_t stage = 0; stage < stages.size(); ++stage) {
    const double eps = stages[stage];
    const bool last = stage + 1 == stages.size();
    const double stage_tolerance = last ? tolerance : std::max(tolerance, 1e-6);
    for (int it = 1; it <= iterations; ++it) {
      for (Eigen::Index i = 0; i < n1; ++i) {
        f(i) = mu(i) > 0.0 ? eps * (log_mu(i) - log_sum_exp((g - shifted.row(i).transpose()) / eps)) : ninf;
      }
      for (Eigen::Index j = 0; j < n2; ++j) {
        g(j) = nu(j) > 0.0 ? eps * (log_nu(j) - log_sum_exp((f - shifted.col(j)) / eps)) : ninf;
      }
      out.iterations = it;
      assemble(eps);
      // Columns are exact after the g update.
      out.marginal_violation = (plan.rowwise().sum() - mu).lpNorm<1>();
      if (out.marginal_violation <= stage_tolerance) break;
    }
  }
  out.coupling.plan = std::move(plan);
  out.marginal_violation = out.coupling.marginal_violation(mu, nu);
  return out;
}

// Annealed like the log-domain loop, but each stage absorbs the potentials
// into a fresh kernel and iterates with matrix-vector products. The absorbed
// kernel approximates the plan, so its entries stay in (0, 1] and the scaling
// vectors stay near one. Returns false when a scaling vector leaves the
// representable range; the caller then uses the pure log-domain loop.
bool sinkhorn_stabilized(const Vector& mu, const Vector& nu, const Matrix& shifted, double lambda, int iterations,
                         double tolerance, SinkhornResult& out) {
  const auto n1 = shifted.rows();
  const auto n2 = shifted.cols();
  Vector f = Vector::Zero(n1);
  Vector g = Vector::Zero(n2);

  std::vector<double> stages{lambda};
  const double range = shifted.maxCoeff();
  while (stages.back() * 4.0 < range / 4.0) stages.push_back(stages.back() * 4.0);
  std::reverse(stages.begin(), stages.end());

  Matrix kernel(n1, n2);
  Vector u, v;
  const auto absorb = [&](double eps) {
    for (Eigen::Index j = 0; j < n2; ++j) {
      for (Eigen::Index i = 0; i < n1; ++i) kernel(i, j) = std::exp((f(i) + g(j) - shifted(i, j)) / eps);
    }
  };
  SinkhornResult res;
  res.log_domain = true;
  for (std::size_t stage = 0; stage < stages.size(); ++stage) {
    const double eps = stages[stage];
    const bool last = stage + 1 == stages.size();
    const double stage_tolerance = last ? tolerance : std::max(tolerance, kFeasibilityTolerance);
    absorb(eps);
    u = Vector::Ones(n1);
    v = Vector::Ones(n2);
    for (int it = 1; it <= iterations; ++it) {
      u = mu.cwiseQuotient(kernel * v);
      v = nu.cwiseQuotient(kernel.transpose() * u);
      if (!u.allFinite() || !v.allFinite()) return false;
      res.iterations = it;
      res.marginal_violation = (u.cwiseProduct(kernel * v) - mu).lpNorm<1>();
      if (res.marginal_violation <= stage_tolerance) break;
      const double lo = std::min(u.minCoeff(), v.minCoeff());
      const double hi = std::max(u.maxCoeff(), v.maxCoeff());
      if (hi > 1e50 || (lo > 0.0 && lo < 1e-50)) {
        f += eps * u.array().log().matrix();
        g += eps * v.array().log().matrix();
        absorb(eps);
        u.setOnes();
        v.setOnes();
      }
    }
    if (!last) {
      f += eps * u.array().log().matrix();
      g += eps * v.array().log().matrix();
      if (!f.allFinite() || !g.allFinite()) return false;
    }
  }
  res.coupling.plan = u.asDiagonal() * kernel * v.asDiagonal();
  if (!res.coupling.plan.allFinite()) return false;
  res.marginal_violation = res.coupling.marginal_violation(mu, nu);
  out = std::move(res);
  return true;
}

// Moves a nearly feasible plan onto the coupling polytope: rows and columns
// that carry too much mass are scaled down, then the missing mass is added
// back as a rank-one product. The plan changes by at most twice its marginal
// violation in l1 and stays nonnegative.
void round_to_marginals(Matrix& plan, const Vector& mu, const Vector& nu) {
  const Vector rows = plan.rowwise().sum();
  Vector x = Vector::Ones(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (rows(i) > mu(i)) x(i) = mu(i) / rows(i);
  }
  plan = x.asDiagonal() * plan;
  const Vector cols = plan.colwise().sum().transpose();
  Vector y = Vector::Ones(nu.size());
  for (Eigen::Index j = 0; j < nu.size(); ++j) {
    if (cols(j) > nu(j)) y(j) = nu(j) / cols(j);
  }
  plan = plan * y.asDiagonal();
  const Vector err_rows = (mu - plan.rowwise().sum()).cwiseMax(0.0);
  const Vector err_cols = (nu - plan.colwise().sum().transpose()).cwiseMax(0.0);
  const double missing = err_rows.sum();
  if (missing > 0.0) plan += err_rows * err_cols.transpose() / missing;
}

}  // namespace

SinkhornResult sinkhorn_knopp(const Vector& mu, const Vector& nu, const Matrix& cost, double lambda, int iterations,
                              double tolerance) {
  if (!(lambda > 0.0)) throw NumericError("sinkhorn temperature must be positive");
  if (iterations < 1) throw NumericError("sinkhorn needs at least one iteration");
  if (cost.rows() != mu.size() || cost.cols() != nu.size()) {
    throw DimensionError(fmt::format("sinkhorn: {}x{} cost for histograms of size {} and {}", cost.rows(), cost.cols(),
                                     mu.size(), nu.size()));
  }
  if (!cost.allFinite()) throw NumericError("sinkhorn: cost has non-finite entries");

  const Matrix shifted = cost.array() - cost.minCoeff();
  const Matrix kernel = (-shifted / lambda).array().exp();
  const auto n1 = cost.rows();
  const auto n2 = cost.cols();

  // Kernel entries below ~1e-300 flush to zero and silently forbid those
  // cells, so wide cost ranges go straight to the log domain.
  constexpr double kMaxExponent = 690.0;
  const bool underflow = shifted.maxCoeff() / lambda > kMaxExponent;

  SinkhornResult out;
  if (!underflow) {
    Vector u = Vector::Ones(n1);
    Vector v = Vector::Ones(n2);
    bool ok = true;
    for (int it = 1; it <= iterations; ++it) {
      const Vector kv = kernel * v;
      u = mu.cwiseQuotient(kv);
      const Vector ktu = kernel.transpose() * u;
      v = nu.cwiseQuotient(ktu);
      if (!u.allFinite() || !v.allFinite()) {
        ok = false;
        break;
      }
      out.iterations = it;
      // Columns are exact after the v update; only rows can be off.
      out.marginal_violation = (u.cwiseProduct(kernel * v) - mu).lpNorm<1>();
      if (out.marginal_violation <= tolerance) break;
    }
    if (ok) {
      out.coupling.plan = u.asDiagonal() * kernel * v.asDiagonal();
      out.marginal_violation = out.coupling.marginal_violation(mu, nu);
      // Plain scaling stalls at low temperatures; the annealed iteration
      // usually gets further within the same budget.
      if (out.marginal_violation > std::max(tolerance, kFeasibilityTolerance) && shifted.maxCoeff() / lambda > 10.0) {
        SinkhornResult retry;
        if (!sinkhorn_stabilized(mu, nu, shifted, lambda, iterations, tolerance, retry)) {
          retry = sinkhorn_log_domain(mu, nu, shifted, lambda, iterations, tolerance);
        }
        if (retry.coupling.plan.allFinite() && retry.marginal_violation < out.marginal_violation) out = std::move(retry);
      }
    } else if (!sinkhorn_stabilized(mu, nu, shifted, lambda, iterations, tolerance, out)) {
      out = sinkhorn_log_domain(mu, nu, shifted, lambda, iterations, tolerance);
    }
  } else if (!sinkhorn_stabilized(mu, nu, shifted, lambda, iterations, tolerance, out)) {
    out = sinkhorn_log_domain(mu, nu, shifted, lambda, iterations, tolerance);
  }

  if (!out.coupling.plan.allFinite()) throw NumericError("sinkhorn produced non-finite entries");
  out.scaling_violation = out.marginal_violation;
  if (out.marginal_violation > 0.0) {
    round_to_marginals(out.coupling.plan, mu, nu);
    out.marginal_violation = out.coupling.marginal_violation(mu, nu);
  }
  // Strictly positive output; the floor moves at most 1e-308 of mass per entry.
  out.coupling.plan = out.coupling.plan.cwiseMax(std::numeric_limits<double>::min());
  return out;
}

}  // namespace rwk
