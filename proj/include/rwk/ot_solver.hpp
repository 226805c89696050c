#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "rwk/graph.hpp"
#include "rwk/similarity.hpp"

namespace rwk {

struct SolverConfig {
  double beta1 = 0.5;       // weight of the local barycentric term
  double beta2 = 0.5;       // weight of the connectivity (GW) term
  double lambda_mu = 1e-2;  // source Laplacian regularizer
  double lambda_nu = 1e-2;  // target Laplacian regularizer
  double rho = 1e-2;        // Frobenius smoothing
  double lambda_g = 1e-2;   // degree-entropy weight
  double sinkhorn_lambda = 0.1;
  int sinkhorn_iters = 200;
  int max_iters = 10;
  double epsilon = 1e-4;
  double alpha0 = 0.99;
  double log_floor = 1e-30;

  // Throws ConfigError when a field is outside its documented range.
  void validate() const;
  bool operator==(const SolverConfig&) const = default;
};

struct Coupling {
  Matrix plan;

  // ||plan 1 - mu||_1 + ||plan^T 1 - nu||_1
  double marginal_violation(const Vector& mu, const Vector& nu) const;
};

// Inputs of the objective for one graph pair. Laplacians are the operators
// that enter the barycentric terms: for uniform histograms they are the plain
// graph Laplacians, otherwise see barycentric_operator().
struct RwProblem {
  SimilaritySet sims;
  Matrix laplacian_source;  // n1 x n1
  Matrix laplacian_target;  // n2 x n2
  Matrix embedding_source;  // n1 x k
  Matrix embedding_target;  // n2 x k
  Matrix prior;             // n1 x n2, strictly positive, unit mass
  Vector mu;
  Vector nu;

  void validate() const;
};

// (1/n^2) diag(w)^+ L diag(w)^+, the operator of the general barycentric
// regularizer once the row masses are fixed to w. Equals L for uniform w.
Matrix barycentric_operator(const Matrix& laplacian, const Vector& weights);

// Degree-similarity prior: 1 - |d_i - d_j| / max(d_i, d_j) (1 when both are
// zero), divided by its total so it has unit mass (uniform when every entry
// is zero), floored at log_floor.
Matrix prior_coupling(const std::vector<int>& deg_source, const std::vector<int>& deg_target,
                      double log_floor = 1e-30);

// tr(E_nu^T gamma^T L_mu gamma E_nu)
double omega_source(const Matrix& gamma, const Matrix& laplacian_source, const Matrix& embedding_target);
// tr(E_mu^T gamma L_nu gamma^T E_mu)
double omega_target(const Matrix& gamma, const Matrix& laplacian_target, const Matrix& embedding_source);

// lambda_mu Omega_mu + lambda_nu Omega_nu + rho/2 ||gamma||_F^2
double theta_w(const Matrix& gamma, const RwProblem& problem, const SolverConfig& config);

// KL(gamma || prior) with gamma clamped at log_floor inside the logarithm.
double theta_g(const Matrix& gamma, const Matrix& prior, double log_floor = 1e-30);

// Scalar pieces of H = f + g - h.
double objective_f(const Matrix& gamma, const RwProblem& problem, const SolverConfig& config);
double objective_g(const Matrix& gamma, const RwProblem& problem, const SolverConfig& config);
double objective_h(const Matrix& gamma, const RwProblem& problem, const SolverConfig& config);

Matrix grad_f(const Matrix& gamma, const RwProblem& problem, const SolverConfig& config);
Matrix grad_g(const Matrix& gamma, const Matrix& cp_source, const Matrix& cp_target, double beta2);
Matrix grad_h(const Matrix& gamma, const Matrix& prior, double beta2, double lambda_g, double log_floor = 1e-30);

struct ObjectiveTerms {
  double feature = 0.0;        // <gamma, C^V>
  double neighbourhood = 0.0;  // <gamma, C^N>
  double omega_source = 0.0;
  double omega_target = 0.0;
  double frobenius_sq = 0.0;   // ||gamma||_F^2
  double gw = 0.0;             // <gamma, L2 (x) gamma>
  double kl = 0.0;             // KL(gamma || prior)

  double theta_w(const SolverConfig& c) const;
  double lw(const SolverConfig& c) const;  // <gamma, C^N> + theta_w
  double lw_term(const SolverConfig& c) const { return c.beta1 * lw(c); }
  double gw_term(const SolverConfig& c) const { return c.beta2 * (gw - c.lambda_g * kl); }
  double total(const SolverConfig& c) const { return feature + lw_term(c) + gw_term(c); }
};

ObjectiveTerms objective_terms(const Matrix& gamma, const RwProblem& problem, const SolverConfig& config);

// H(gamma) = <gamma, C^V> + beta1 (<gamma, C^N> + theta_w) + beta2 (<gamma, L2 (x) gamma> - lambda_g KL).
double objective_H(const Matrix& gamma, const RwProblem& problem, const SolverConfig& config);

struct SinkhornResult {
  Coupling coupling;
  int iterations = 0;
  double marginal_violation = 0.0;  // of the returned plan
  double scaling_violation = 0.0;   // of the last scaling iterate, before rounding
  bool log_domain = false;  // a stabilized or log-domain fallback produced the plan
};

// diag(u) exp(-(cost - min cost) / lambda) diag(v) after at most `iterations`
// alternating scaling rounds, stopping early once the marginal violation
// drops below `tolerance`. The result is then rounded onto the coupling
// polytope, so the returned plan meets both marginals up to round-off.
SinkhornResult sinkhorn_knopp(const Vector& mu, const Vector& nu, const Matrix& cost, double lambda,
                              int iterations, double tolerance = 1e-12);

struct LineSearchResult {
  double alpha = 0.0;
  double cost = 0.0;
  int evaluations = 0;
};

// Golden-section search of phi over [0, 1] down to an interval of width
// `width` (at most 60 evaluations). alpha = 0 with prev_cost is always a
// candidate, so the returned cost never exceeds prev_cost; alpha = 1 and
// `alpha0` are probed as well.
LineSearchResult line_search(const std::function<double(double)>& phi, double prev_cost, double alpha0 = 0.99,
                             double width = 1e-6);

struct SolveResult {
  Coupling coupling;
  double objective = 0.0;  // H at termination
  double rw_value = 0.0;   // equals objective; kept separate for callers
  ObjectiveTerms terms;
  std::vector<double> gap_history;
  std::vector<double> objective_history;  // H after each iteration
  std::vector<double> alpha_history;
  int iterations = 0;
  bool converged = false;
  double max_marginal_violation = 0.0;
};

struct TraceSink {
  std::filesystem::path path;  // CSV "iter,objective,gap,alpha"
};

// Sinkhorn conditional gradient: linearize H, solve the entropic transport
// subproblem on the gradient, exact line search along the segment, stop when
// the gap <Delta, -grad H> <= epsilon or after max_iters iterations.
SolveResult scg_solve(const RwProblem& problem, const SolverConfig& config,
                      const std::optional<TraceSink>& trace = std::nullopt);

}  // namespace rwk
