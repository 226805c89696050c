#include <doctest.h>

#include <fstream>

#include "rwk/error.hpp"
#include "rwk/ot_solver.hpp"
#include "rwk/rw.hpp"
#include "support.hpp"

using namespace rwk;
using namespace rwk::test;

namespace {

// Sum over undirected edges of |b_i - b_j|^2 / n^2, with b_i the barycenter
// (gamma E)_i / w_i of vertex i and the edges read off the Laplacian.
double omega_by_edges(const Matrix& gamma, const Matrix& laplacian, const Matrix& embedding, const Vector& w) {
  const auto n = laplacian.rows();
  const Matrix p = gamma * embedding;
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double a = -laplacian(i, j);
      if (a == 0.0) continue;
      s += a * (p.row(i) / w(i) - p.row(j) / w(j)).squaredNorm();
    }
  }
  return s / static_cast<double>(n * n);
}

double kl_by_loops(const Matrix& gamma, const Matrix& prior) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) s += gamma(i, j) * std::log(gamma(i, j) / prior(i, j));
  }
  return s;
}

// H assembled term by term from the definitions.
double reference_H(const Matrix& gamma, const RwProblem& p, const SolverConfig& c) {
  const double n1 = static_cast<double>(gamma.rows());
  const double n2 = static_cast<double>(gamma.cols());
  double feature = 0.0, neighbourhood = 0.0, frob = 0.0;
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
      feature += gamma(i, j) * p.sims.cv(i, j);
      neighbourhood += gamma(i, j) * p.sims.cn(i, j);
      frob += gamma(i, j) * gamma(i, j);
    }
  }
  // Uniform marginals: w = 1/n, so |b_i - b_j|^2 / n^2 = |(gamma E)_i - (gamma E)_j|^2.
  const double om = omega_by_edges(gamma, p.laplacian_source, p.embedding_target, Vector::Constant(gamma.rows(), 1 / n1));
  const Matrix gt = gamma.transpose();
  const double on = omega_by_edges(gt, p.laplacian_target, p.embedding_source, Vector::Constant(gamma.cols(), 1 / n2));
  const double gw = gamma.cwiseProduct(brute_gw(p.sims.cp_source, p.sims.cp_target, gamma)).sum();
  const double kl = kl_by_loops(gamma, p.prior);
  return feature + c.beta1 * (neighbourhood + c.lambda_mu * om + c.lambda_nu * on + 0.5 * c.rho * frob) +
         c.beta2 * (gw - c.lambda_g * kl);
}

SolverConfig wasserstein_only() {
  SolverConfig c;
  c.beta1 = 1.0;
  c.beta2 = 0.0;
  c.lambda_mu = c.lambda_nu = 0.0;
  c.rho = 1e-8;
  c.sinkhorn_lambda = 1e-3;
  c.sinkhorn_iters = 2000;
  c.max_iters = 50;
  c.epsilon = 1e-9;
  return c;
}

int automorphism_count(const Graph& g) {
  std::vector<int> perm(static_cast<std::size_t>(g.size()));
  std::iota(perm.begin(), perm.end(), 0);
  int count = 0;
  do {
    bool same = true;
    for (Eigen::Index i = 0; i < g.size() && same; ++i) {
      for (Eigen::Index j = 0; j < g.size() && same; ++j) {
        same = g.adjacency(i, j) == g.adjacency(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
      }
    }
    count += same;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return count;
}

EmbeddingConfig small_embedding() { return EmbeddingConfig{2, 8, 1.0, PairwiseMode::shortest_path}; }

Graph rewire_one_edge(std::mt19937_64& rng, const Graph& g) {
  auto edges = g.edge_list();
  std::vector<std::pair<int, int>> missing;
  const auto n = static_cast<int>(g.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (g.adjacency(i, j) == 0.0) missing.emplace_back(i, j);
    }
  }
  if (edges.empty() || missing.empty()) return g;
  edges.erase(edges.begin() + std::uniform_int_distribution<std::size_t>(0, edges.size() - 1)(rng));
  edges.push_back(missing[std::uniform_int_distribution<std::size_t>(0, missing.size() - 1)(rng)]);
  return Graph::from_edges(g.size(), edges, g.features);
}

}  // namespace

TEST_SUITE("ot_solver") {
  TEST_CASE("prior coupling examples") {
    CHECK(prior_coupling({2, 2}, {2, 2}).isApprox(Matrix::Constant(2, 2, 0.25)));
    CHECK(prior_coupling({1}, {3})(0, 0) == doctest::Approx(1.0));
    CHECK(prior_coupling({0}, {0})(0, 0) == 1.0);
    // Isolated vertex against non-isolated targets: similarity 0, floored.
    const Matrix p = prior_coupling({0, 2}, {1, 3});
    const double total = 0.5 + 2.0 / 3.0;
    CHECK(p(0, 0) == 1e-30);
    CHECK(p(0, 1) == 1e-30);
    CHECK(p(1, 0) == doctest::Approx(0.5 / total));
    CHECK(p(1, 1) == doctest::Approx((2.0 / 3.0) / total));
    // Nothing similar at all: uniform.
    CHECK(prior_coupling({0, 0}, {2})(1, 0) == doctest::Approx(0.5));
  }

  TEST_CASE("property: prior is a positive unit-mass matrix, transposed under swap") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> deg(0, 5);
    for (int t = 0; t < 30; ++t) {
      std::vector<int> a(static_cast<std::size_t>(1 + t % 6)), b(static_cast<std::size_t>(1 + t % 5));
      for (int& x : a) x = deg(rng);
      for (int& x : b) x = deg(rng);
      const Matrix p = prior_coupling(a, b);
      CHECK(p.minCoeff() > 0.0);
      CHECK(p.maxCoeff() <= 1.0);
      CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK((prior_coupling(b, a) - p.transpose()).cwiseAbs().maxCoeff() <= 1e-16);
    }
  }

  TEST_CASE("omega examples and barycenter oracle") {
    std::mt19937_64 rng(2);
    const Matrix gamma = random_interior_coupling(rng, uniform(3), uniform(3));
    const Matrix e = random_matrix(rng, 3, 4, -1, 1);
    CHECK(omega_source(gamma, Matrix::Zero(3, 3), e) == 0.0);
    CHECK(omega_source(gamma, combinatorial_laplacian(cycle_graph(3)), Matrix::Zero(3, 4)) == 0.0);
    CHECK_THROWS_AS(omega_source(gamma, Matrix::Zero(4, 4), e), DimensionError);

    for (int t = 0; t < 20; ++t) {
      const int n1 = 2 + t % 4, n2 = 2 + (t / 4) % 4;
      const Graph g1 = random_graph(rng, n1, 0.6, 1);
      const Graph g2 = random_graph(rng, n2, 0.6, 1);
      const Matrix l1 = combinatorial_laplacian(g1);
      const Matrix l2 = combinatorial_laplacian(g2);
      const Matrix gm = random_interior_coupling(rng, uniform(n1), uniform(n2));
      const Matrix e1 = random_matrix(rng, n1, 3, -1, 1);
      const Matrix e2 = random_matrix(rng, n2, 3, -1, 1);
      const double os = omega_source(gm, l1, e2);
      const double ot = omega_target(gm, l2, e1);
      CHECK(os >= 0.0);
      CHECK(os == doctest::Approx(omega_by_edges(gm, l1, e2, uniform(n1))).epsilon(1e-12));
      const Matrix gmt = gm.transpose();
      CHECK(ot == doctest::Approx(omega_by_edges(gmt, l2, e1, uniform(n2))).epsilon(1e-12));
    }
  }

  TEST_CASE("barycentric operator for non-uniform masses") {
    std::mt19937_64 rng(3);
    const Graph g = random_graph(rng, 5, 0.6, 1);
    const Matrix l = combinatorial_laplacian(g);
    CHECK(barycentric_operator(l, uniform(5)) == l);
    Vector w = random_matrix(rng, 5, 1, 0.5, 1.5).col(0);
    w /= w.sum();
    const Vector nu = uniform(4);
    const Matrix gamma = random_interior_coupling(rng, w, nu);
    const Matrix e = random_matrix(rng, 4, 3, -1, 1);
    CHECK(omega_source(gamma, barycentric_operator(l, w), e) ==
          doctest::Approx(omega_by_edges(gamma, l, e, w)).epsilon(1e-12));
  }

  TEST_CASE("theta_w examples") {
    RwProblem p;
    p.laplacian_source = Matrix::Zero(2, 2);
    p.laplacian_target = Matrix::Zero(2, 2);
    p.embedding_source = Matrix::Ones(2, 3);
    p.embedding_target = Matrix::Ones(2, 3);
    SolverConfig c;
    c.lambda_mu = c.lambda_nu = 0.0;
    c.rho = 1.0;
    const Matrix gamma = Matrix::Constant(2, 2, 0.25);
    CHECK(theta_w(gamma, p, c) == doctest::Approx(0.125));
    c.lambda_mu = c.lambda_nu = 0.7;
    c.rho = 0.3;
    CHECK(theta_w(gamma, p, c) == doctest::Approx(0.15 * 0.25));
  }

  TEST_CASE("property: theta_w is rho-strongly convex") {
    std::mt19937_64 rng(4);
    SolverConfig c;
    c.lambda_mu = 0.3;
    c.lambda_nu = 0.6;
    c.rho = 0.2;
    for (int t = 0; t < 30; ++t) {
      const RwProblem p = random_problem(rng, 3 + t % 3, 3 + t % 4);
      const Matrix a = random_interior_coupling(rng, p.mu, p.nu);
      const Matrix b = random_interior_coupling(rng, p.mu, p.nu);
      const Matrix m = 0.5 * (a + b);
      const double bound = 0.5 * theta_w(a, p, c) + 0.5 * theta_w(b, p, c) - c.rho / 8.0 * (a - b).squaredNorm();
      CHECK(theta_w(m, p, c) <= bound + 1e-14);
    }
  }

  TEST_CASE("theta_g examples") {
    std::mt19937_64 rng(5);
    const Matrix prior = prior_coupling({1, 2, 3}, {2, 2});
    CHECK(theta_g(prior, prior) == doctest::Approx(0.0).epsilon(1e-15));
    Matrix gamma(2, 2);
    gamma << 0.5, 0, 0, 0.5;
    CHECK(theta_g(gamma, Matrix::Constant(2, 2, 0.25)) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(theta_g(gamma, prior), DimensionError);
  }

  TEST_CASE("property: KL is 1-strongly convex on couplings") {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 100; ++t) {
      const int n1 = 2 + t % 4, n2 = 2 + t % 5;
      const Matrix prior = random_interior_coupling(rng, uniform(n1), uniform(n2));
      const Matrix a = random_interior_coupling(rng, uniform(n1), uniform(n2));
      const Matrix b = random_interior_coupling(rng, uniform(n1), uniform(n2));
      const Matrix m = 0.5 * (a + b);
      CHECK(theta_g(a, prior) == doctest::Approx(kl_by_loops(a, prior)).epsilon(1e-12));
      CHECK(theta_g(m, prior) <= 0.5 * theta_g(a, prior) + 0.5 * theta_g(b, prior) - (a - b).squaredNorm() / 8.0 + 1e-15);
    }
  }

  TEST_CASE("property: omega is convex along any direction") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 30; ++t) {
      const RwProblem p = random_problem(rng, 3 + t % 4, 3 + t % 3);
      const Matrix g = random_interior_coupling(rng, p.mu, p.nu);
      Matrix z = random_matrix(rng, g.rows(), g.cols(), -1, 1);
      z.rowwise() -= z.colwise().mean();
      z.colwise() -= z.rowwise().mean();
      const double s = 1e-2;
      const Matrix up = g + s * z, down = g - s * z;
      CHECK(omega_source(up, p.laplacian_source, p.embedding_target) +
                omega_source(down, p.laplacian_source, p.embedding_target) -
                2.0 * omega_source(g, p.laplacian_source, p.embedding_target) >= -1e-10);
      CHECK(omega_target(up, p.laplacian_target, p.embedding_source) +
                omega_target(down, p.laplacian_target, p.embedding_source) -
                2.0 * omega_target(g, p.laplacian_target, p.embedding_source) >= -1e-10);
    }
  }

  TEST_CASE("grad_f examples") {
    std::mt19937_64 rng(8);
    RwProblem p = random_problem(rng, 4, 5);
    const Matrix gamma = random_interior_coupling(rng, p.mu, p.nu);
    SolverConfig c;
    c.beta1 = 0.0;
    CHECK(grad_f(gamma, p, c) == p.sims.cv);

    c.beta1 = 0.4;
    c.lambda_mu = c.lambda_nu = 0.0;
    c.rho = 0.3;
    p.laplacian_source.setZero();
    p.laplacian_target.setZero();
    const Matrix expected = p.sims.cv + 0.4 * p.sims.cn + 0.4 * 0.3 * gamma;
    CHECK((grad_f(gamma, p, c) - expected).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("property: gradients match central differences") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> size(3, 6);
    SolverConfig c;
    c.beta1 = 0.7;
    c.beta2 = 0.6;
    c.lambda_mu = 0.4;
    c.lambda_nu = 0.3;
    c.rho = 0.2;
    c.lambda_g = 0.5;
    for (int t = 0; t < 20; ++t) {
      const RwProblem p = random_problem(rng, size(rng), size(rng));
      const Matrix gamma = random_interior_coupling(rng, p.mu, p.nu);
      const auto f = [&](const Matrix& x) { return objective_f(x, p, c); };
      const auto g = [&](const Matrix& x) { return objective_g(x, p, c); };
      const auto h = [&](const Matrix& x) { return objective_h(x, p, c); };
      CHECK(relative_error(grad_f(gamma, p, c), finite_difference(f, gamma)) <= 1e-5);
      CHECK(relative_error(grad_g(gamma, p.sims.cp_source, p.sims.cp_target, c.beta2), finite_difference(g, gamma)) <=
            1e-5);
      CHECK(relative_error(grad_h(gamma, p.prior, c.beta2, c.lambda_g), finite_difference(h, gamma)) <= 1e-5);
    }
  }

  TEST_CASE("grad_g and grad_h examples") {
    std::mt19937_64 rng(10);
    const Matrix cs = random_symmetric_cost(rng, 4);
    const Matrix ct = random_symmetric_cost(rng, 3);
    CHECK(grad_g(Matrix::Zero(4, 3), cs, ct, 0.5).isZero());
    const Matrix id = Matrix::Identity(4, 4) / 4.0;
    CHECK(std::abs(id.cwiseProduct(grad_g(id, cs, cs, 0.5)).sum()) / (2 * 0.5) <= 1e-15);
    CHECK(grad_g(id, cs, cs, 0.5) == 2.0 * 0.5 * gw_cost_apply(cs, cs, id));

    const Matrix prior = prior_coupling({1, 2, 2}, {1, 3});
    CHECK((grad_h(prior, prior, 0.5, 0.2).array() - 0.1).abs().maxCoeff() < 1e-15);
    const Matrix gamma = random_interior_coupling(rng, uniform(3), uniform(2));
    CHECK(grad_h(gamma, prior, 0.5, 0.0).isZero());
  }

  TEST_CASE("sinkhorn examples") {
    const auto r = sinkhorn_knopp(uniform(3), uniform(4), Matrix::Zero(3, 4), 0.1, 200);
    CHECK((r.coupling.plan.array() - 1.0 / 12.0).abs().maxCoeff() < 1e-15);

    Matrix c(2, 2);
    c << 0, 1, 1, 0;
    const auto sharp = sinkhorn_knopp(uniform(2), uniform(2), c, 0.01, 200);
    // Exact LP plan of this cost is half the identity.
    CHECK((sharp.coupling.plan - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-6);

    std::mt19937_64 rng(11);
    const Matrix cost = random_matrix(rng, 4, 5);
    const auto flat = sinkhorn_knopp(uniform(4), uniform(5), cost, 1e3, 200);
    CHECK((flat.coupling.plan.array() - 0.05).abs().maxCoeff() < 1e-3);
  }

  TEST_CASE("sinkhorn errors") {
    Matrix c = Matrix::Zero(2, 2);
    CHECK_THROWS_AS(sinkhorn_knopp(uniform(2), uniform(2), c, 0.0, 10), NumericError);
    CHECK_THROWS_AS(sinkhorn_knopp(uniform(2), uniform(2), c, 0.1, 0), NumericError);
    CHECK_THROWS_AS(sinkhorn_knopp(uniform(3), uniform(2), c, 0.1, 10), DimensionError);
    c(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(sinkhorn_knopp(uniform(2), uniform(2), c, 0.1, 10), NumericError);
  }

  TEST_CASE("property: sinkhorn output is positive and feasible") {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> size(1, 8);
    for (int t = 0; t < 40; ++t) {
      const int n1 = size(rng), n2 = size(rng);
      // Gradients can be negative and span wide ranges.
      const double scale = t % 2 == 0 ? 1.0 : 50.0;
      const Matrix cost = random_matrix(rng, n1, n2, -scale, scale);
      for (double lambda : {1.0, 0.1, 1e-3}) {
        const auto r = sinkhorn_knopp(uniform(n1), uniform(n2), cost, lambda, 200);
        CHECK(r.coupling.plan.allFinite());
        CHECK(r.coupling.plan.minCoeff() > 0.0);
        CHECK(r.marginal_violation == doctest::Approx(r.coupling.marginal_violation(uniform(n1), uniform(n2))));
        if (lambda >= 0.1 && scale == 1.0) CHECK(r.marginal_violation <= 1e-6);
      }
    }
  }

  TEST_CASE("sinkhorn approaches the LP optimum as the temperature drops") {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 10; ++t) {
      const int n1 = 2 + t % 4, n2 = 2 + t % 3;
      const Matrix cost = random_matrix(rng, n1, n2);
      const double lp = exact_uniform_lp(cost);
      const auto r = sinkhorn_knopp(uniform(n1), uniform(n2), cost, 1e-3, 2000);
      CHECK(r.coupling.plan.cwiseProduct(cost).sum() - lp <= 1e-2 * std::max(lp, 1e-2));
      CHECK(r.marginal_violation <= 1e-6);
    }
  }

  TEST_CASE("objective examples") {
    std::mt19937_64 rng(14);
    RwProblem p = random_problem(rng, 3, 4);
    p.sims.cv.setZero();
    p.sims.cn.setZero();
    p.sims.cp_source.setZero();
    p.sims.cp_target.setZero();
    SolverConfig c;
    c.lambda_mu = c.lambda_nu = 0.0;
    c.beta2 = 0.0;
    const Matrix gamma = random_interior_coupling(rng, p.mu, p.nu);
    CHECK(objective_H(gamma, p, c) == doctest::Approx(c.beta1 * c.rho / 2 * gamma.squaredNorm()).epsilon(1e-14));

    // At the prior the KL term vanishes.
    c.beta2 = 0.5;
    CHECK(objective_H(p.prior, p, c) == doctest::Approx(c.beta1 * c.rho / 2 * p.prior.squaredNorm()).epsilon(1e-12));
  }

  TEST_CASE("property: objective matches a term-by-term reference") {
    std::mt19937_64 rng(15);
    SolverConfig c;
    c.beta1 = 0.6;
    c.beta2 = 0.8;
    c.lambda_mu = 0.2;
    c.lambda_nu = 0.5;
    c.rho = 0.1;
    c.lambda_g = 0.3;
    for (int t = 0; t < 20; ++t) {
      const RwProblem p = random_problem(rng, 2 + t % 5, 2 + t % 4);
      const Matrix gamma = random_interior_coupling(rng, p.mu, p.nu);
      const double h = objective_H(gamma, p, c);
      CHECK(h == doctest::Approx(reference_H(gamma, p, c)).epsilon(1e-12));
      CHECK(h == doctest::Approx(objective_f(gamma, p, c) + objective_g(gamma, p, c) - objective_h(gamma, p, c)));
      CHECK(objective_terms(gamma, p, c).total(c) == doctest::Approx(h).epsilon(1e-12));
    }
  }

  TEST_CASE("line search") {
    const auto flat = line_search([](double) { return 2.0; }, 2.0);
    CHECK(flat.cost == 2.0);

    const double star = 0.37;
    const auto quad = [&](double a) { return 3.0 * (a - star) * (a - star) + 1.0; };
    const auto r = line_search(quad, quad(0.0));
    CHECK(std::abs(r.alpha - star) <= 1e-5);
    CHECK(r.evaluations <= 60);

    // Minimizer outside the segment clamps to the end point.
    const auto far = [](double a) { return (a - 3.0) * (a - 3.0); };
    CHECK(line_search(far, far(0.0)).alpha == doctest::Approx(1.0));

    // Descent direction strictly lowers the cost; ascent keeps alpha = 0.
    const auto down = [](double a) { return 1.0 - 0.1 * a + a * a; };
    CHECK(line_search(down, 1.0).cost < 1.0);
    const auto up = [](double a) { return 1.0 + a; };
    const auto stay = line_search(up, 1.0);
    CHECK(stay.alpha == 0.0);
    CHECK(stay.cost == 1.0);
  }

  TEST_CASE("SCG on identical spaces reaches zero") {
    // The start mu nu^T is invariant under graph automorphisms, so symmetric
    // graphs can stop at an average of matchings; asymmetric ones are used.
    std::mt19937_64 rng(22);
    int solved = 0;
    while (solved < 5) {
      const Graph g = random_graph(rng, 6, 0.45, 1);
      if (automorphism_count(g) != 1) continue;
      ++solved;
      const auto n = g.size();
      RwProblem p;
      const Matrix sp = shortest_path_matrix(g);
      p.sims = SimilaritySet{Matrix::Zero(n, n), Matrix::Zero(n, n), sp, sp};
      p.laplacian_source = p.laplacian_target = combinatorial_laplacian(g);
      p.embedding_source = p.embedding_target = Matrix::Zero(n, 2);
      p.prior = prior_coupling(g.degrees, g.degrees);
      p.mu = p.nu = uniform(n);
      SolverConfig c;
      c.beta1 = 0.0;
      c.beta2 = 1.0;
      c.lambda_g = 1e-12;
      c.sinkhorn_lambda = 1e-3;
      c.sinkhorn_iters = 1000;
      c.max_iters = 200;
      c.epsilon = 1e-9;
      const auto r = scg_solve(p, c);
      CHECK(std::abs(r.objective) <= 1e-6);
      CHECK(r.converged);
    }
  }

  TEST_CASE("SCG 2x2 transport matches the LP") {
    RwProblem p;
    Matrix cost(2, 2);
    cost << 0, 1, 1, 0;
    p.sims = SimilaritySet{cost, Matrix::Zero(2, 2), Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
    p.laplacian_source = p.laplacian_target = Matrix::Zero(2, 2);
    p.embedding_source = p.embedding_target = Matrix::Zero(2, 1);
    p.prior = Matrix::Constant(2, 2, 0.25);
    p.mu = p.nu = uniform(2);
    const auto r = scg_solve(p, wasserstein_only());
    CHECK(r.coupling.plan.cwiseProduct(cost).sum() <= 1e-3);
  }

  TEST_CASE("property: SCG iterates are feasible and descend") {
    std::mt19937_64 rng(16);
    SolverConfig c;
    c.max_iters = 30;
    for (int t = 0; t < 10; ++t) {
      const Graph g1 = random_graph(rng, 5, 0.5, 2);
      const Graph g2 = random_graph(rng, 5, 0.5, 2);
      const auto r = rw_solve(prepare_graph(g1, small_embedding()), prepare_graph(g2, small_embedding()), c);
      CHECK(r.max_marginal_violation <= 1e-6);
      CHECK(r.gap_history.size() == static_cast<std::size_t>(r.iterations));
      CHECK(r.objective_history.size() == static_cast<std::size_t>(r.iterations));
      for (std::size_t i = 1; i < r.objective_history.size(); ++i) {
        CHECK(r.objective_history[i] <= r.objective_history[i - 1] + 1e-9);
      }
      if (r.converged) CHECK(r.gap_history.back() <= c.epsilon);
      CHECK(r.rw_value == r.objective);
      CHECK(r.terms.total(c) == doctest::Approx(r.objective).epsilon(1e-12));
      CHECK((r.coupling.plan.array() >= 0.0).all());
    }
  }

  TEST_CASE("SCG trace file") {
    std::mt19937_64 rng(17);
    const RwProblem p = random_problem(rng, 4, 3);
    SolverConfig c;
    c.max_iters = 5;
    const auto path = scratch_dir("trace") / "t.csv";
    const auto r = scg_solve(p, c, TraceSink{path});
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "iter,objective,gap,alpha");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == r.iterations);
  }

  TEST_CASE("SCG rejects invalid input") {
    std::mt19937_64 rng(18);
    RwProblem p = random_problem(rng, 3, 3);
    SolverConfig c;
    c.rho = 2.0;
    CHECK_THROWS_AS(scg_solve(p, c), ConfigError);
    c = SolverConfig{};
    p.sims.cv(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(scg_solve(p, c), NumericError);
  }

  TEST_CASE("RW on single vertices is the Frobenius regularizer alone") {
    const Graph a = Graph::from_edges(1, {}, Matrix::Constant(1, 2, 0.3));
    const Graph b = Graph::from_edges(1, {}, Matrix::Constant(1, 2, 0.3));
    SolverConfig c;
    // gamma = [[1]] is forced and every cost is zero.
    CHECK(rw_discrepancy(a, b, small_embedding(), c) == doctest::Approx(c.beta1 * c.rho / 2).epsilon(1e-12));
    c.rho = 0.0;
    CHECK(std::abs(rw_discrepancy(a, b, small_embedding(), c)) <= 1e-9);
  }

  TEST_CASE("property: RW is symmetric within solver tolerance") {
    std::mt19937_64 rng(19);
    SolverConfig c;
    for (int t = 0; t < 10; ++t) {
      const auto g1 = prepare_graph(random_graph(rng, 4 + t % 3, 0.5, 2), small_embedding());
      const auto g2 = prepare_graph(random_graph(rng, 5 + t % 2, 0.5, 2), small_embedding());
      CHECK(std::abs(rw_discrepancy(g1, g2, c) - rw_discrepancy(g2, g1, c)) <= 1e-3);
    }
  }

  TEST_CASE("RW of a graph with itself is below RW against a rewired copy") {
    std::mt19937_64 rng(20);
    SolverConfig c;
    int compared = 0;
    while (compared < 20) {
      const Graph g = random_graph(rng, 6, 0.5, 2);
      const Graph h = rewire_one_edge(rng, g);
      if (h.adjacency == g.adjacency) continue;
      ++compared;
      const auto pg = prepare_graph(g, small_embedding());
      CHECK(rw_discrepancy(pg, pg, c) <= rw_discrepancy(pg, prepare_graph(h, small_embedding()), c));
    }
  }

  TEST_CASE("RW without structure terms is the transport cost") {
    std::mt19937_64 rng(21);
    SolverConfig c;
    c.beta1 = c.beta2 = 0.0;
    const auto g1 = prepare_graph(random_graph(rng, 5, 0.5, 2), small_embedding());
    const auto g2 = prepare_graph(random_graph(rng, 4, 0.5, 2), small_embedding());
    const auto r = rw_solve(g1, g2, c);
    CHECK(r.objective == doctest::Approx(r.terms.feature).epsilon(1e-14));
    CHECK(r.terms.gw_term(c) == 0.0);
    CHECK(r.terms.lw_term(c) == 0.0);
  }

  TEST_CASE("solver config validation") {
    SolverConfig c;
    c.validate();
    for (auto* field : {&c.beta1, &c.beta2, &c.lambda_mu, &c.lambda_nu, &c.rho, &c.lambda_g}) {
      const double keep = *field;
      *field = 1.5;
      CHECK_THROWS_AS(c.validate(), ConfigError);
      *field = -0.1;
      CHECK_THROWS_AS(c.validate(), ConfigError);
      *field = keep;
    }
    c.sinkhorn_iters = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = SolverConfig{};
    c.alpha0 = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
}
