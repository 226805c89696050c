#pragma once

// Fixtures and independent reference implementations shared by the tests.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "rwk/graph.hpp"
#include "rwk/ot_solver.hpp"
#include "rwk/rw.hpp"

namespace rwk::test {

inline Graph random_graph(std::mt19937_64& rng, int n, double p, int feature_dim) {
  std::bernoulli_distribution edge(p);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (edge(rng)) edges.emplace_back(i, j);
    }
  }
  Matrix x(n, feature_dim);
  for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = normal(rng);
  return Graph::from_edges(n, edges, x);
}

inline Graph path_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return Graph::from_edges(n, edges, Matrix::Ones(n, 1));
}

inline Graph cycle_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return Graph::from_edges(n, edges, Matrix::Ones(n, 1));
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo = 0.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
  return m;
}

inline Matrix random_symmetric_cost(std::mt19937_64& rng, Eigen::Index n) {
  Matrix m = random_matrix(rng, n, n);
  m = (0.5 * (m + m.transpose())).eval();
  m.diagonal().setZero();
  return m;
}

// Strictly positive coupling with the given marginals (a scaled random matrix).
inline Matrix random_interior_coupling(std::mt19937_64& rng, const Vector& mu, const Vector& nu) {
  Matrix g = random_matrix(rng, mu.size(), nu.size(), 0.2, 1.0);
  for (int it = 0; it < 500; ++it) {
    g = (mu.array() / g.rowwise().sum().array()).matrix().asDiagonal() * g;
    g = g * (nu.array() / g.colwise().sum().transpose().array()).matrix().asDiagonal();
  }
  return g;
}

inline Vector uniform(Eigen::Index n) { return Vector::Constant(n, 1.0 / static_cast<double>(n)); }

// T(i,k) = sum_{j,l} 1/2 (cs(i,j) - ct(k,l))^2 gamma(j,l), by the definition.
inline Matrix brute_gw(const Matrix& cs, const Matrix& ct, const Matrix& gamma) {
  Matrix t = Matrix::Zero(cs.rows(), ct.rows());
  for (Eigen::Index i = 0; i < cs.rows(); ++i) {
    for (Eigen::Index k = 0; k < ct.rows(); ++k) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < cs.rows(); ++j) {
        for (Eigen::Index l = 0; l < ct.rows(); ++l) {
          const double d = cs(i, j) - ct(k, l);
          s += 0.5 * d * d * gamma(j, l);
        }
      }
      t(i, k) = s;
    }
  }
  return t;
}

// Minimum-cost perfect assignment of a square matrix (Hungarian method with
// potentials, O(n^3)).
inline double hungarian(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) total += cost(p[j] - 1, j - 1);
  return total;
}

// Exact optimum of min <gamma, C> over couplings of uniform marginals. With
// L = lcm(n1, n2) every source is split into L/n1 unit copies and every target
// into L/n2; the transportation polytope has integral vertices, so the LP
// value is the optimal assignment of the expanded L x L problem divided by L.
inline double exact_uniform_lp(const Matrix& c) {
  const auto n1 = static_cast<int>(c.rows());
  const auto n2 = static_cast<int>(c.cols());
  const int l = std::lcm(n1, n2);
  Matrix big(l, l);
  for (int a = 0; a < l; ++a) {
    for (int b = 0; b < l; ++b) big(a, b) = c(a / (l / n1), b / (l / n2));
  }
  return hungarian(big) / static_cast<double>(l);
}

// Central differences of a scalar function of a matrix.
inline Matrix finite_difference(const std::function<double(const Matrix&)>& f, const Matrix& x, double h = 1e-6) {
  Matrix g(x.rows(), x.cols());
  Matrix y = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double keep = y.data()[k];
    y.data()[k] = keep + h;
    const double up = f(y);
    y.data()[k] = keep - h;
    const double down = f(y);
    y.data()[k] = keep;
    g.data()[k] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const Matrix& a, const Matrix& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / scale;
}

// A problem with random embeddings, Laplacians and costs for n1 x n2.
inline RwProblem random_problem(std::mt19937_64& rng, int n1, int n2, int k = 4) {
  const Graph g1 = random_graph(rng, n1, 0.5, 2);
  const Graph g2 = random_graph(rng, n2, 0.5, 2);
  RwProblem p;
  p.sims.cv = random_matrix(rng, n1, n2);
  p.sims.cn = random_matrix(rng, n1, n2);
  p.sims.cp_source = random_symmetric_cost(rng, n1);
  p.sims.cp_target = random_symmetric_cost(rng, n2);
  p.laplacian_source = combinatorial_laplacian(g1);
  p.laplacian_target = combinatorial_laplacian(g2);
  p.embedding_source = random_matrix(rng, n1, k, -1.0, 1.0);
  p.embedding_target = random_matrix(rng, n2, k, -1.0, 1.0);
  p.prior = prior_coupling(g1.degrees, g2.degrees);
  p.mu = uniform(n1);
  p.nu = uniform(n2);
  return p;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("rwk_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path mutag_dir() {
  return std::filesystem::path(RWK_TEST_DATA_DIR) / "MUTAG";
}

}  // namespace rwk::test
