#include "heattrace/moment_tensors.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <numbers>
#include <sstream>

namespace heattrace {

namespace {

// All perfect pairings of {0,...,2p-1} as index pairs.
void enumerate_pairings(std::vector<int>& free,
                        std::vector<std::pair<int, int>>& current,
                        std::vector<std::vector<std::pair<int, int>>>& out) {
  if (free.empty()) {
    out.push_back(current);
    return;
  }
  int first = free.front();
  for (size_t i = 1; i < free.size(); ++i) {
    int partner = free[i];
    std::vector<int> rest;
    for (size_t j = 1; j < free.size(); ++j)
      if (j != i) rest.push_back(free[j]);
    current.emplace_back(first, partner);
    enumerate_pairings(rest, current, out);
    current.pop_back();
  }
}

std::vector<std::vector<std::pair<int, int>>> pairings(int p) {
  std::vector<int> all(2 * p);
  for (int i = 0; i < 2 * p; ++i) all[i] = i;
  std::vector<std::pair<int, int>> current;
  std::vector<std::vector<std::pair<int, int>>> out;
  enumerate_pairings(all, current, out);
  return out;
}

Eigen::SelfAdjointEigenSolver<MatrixR> checked_spd(const MatrixR& g_lower,
                                                   int d, const char* who) {
  if (g_lower.rows() != d || g_lower.cols() != d) {
    std::ostringstream msg;
    msg << who << ": metric must be " << d << "x" << d;
    throw DomainError(msg.str());
  }
  if ((g_lower - g_lower.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, g_lower.cwiseAbs().maxCoeff())) {
    throw DomainError(std::string(who) + ": metric must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixR> es(g_lower);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw DomainError(std::string(who) +
                      ": metric must be positive definite");
  }
  return es;
}

// Gauss-Hermite nodes/weights for weight e^{-x^2} via the Golub-Welsch
// symmetric tridiagonal eigenproblem; cached per order.
void gauss_hermite(int order, std::vector<double>& nodes,
                   std::vector<double>& weights) {
  static std::mutex cache_mutex;
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>>
      cache;
  {
    std::scoped_lock lock(cache_mutex);
    auto it = cache.find(order);
    if (it != cache.end()) {
      nodes = it->second.first;
      weights = it->second.second;
      return;
    }
  }
  MatrixR J = MatrixR::Zero(order, order);
  for (int i = 1; i < order; ++i) {
    double b = std::sqrt(0.5 * i);
    J(i, i - 1) = b;
    J(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<MatrixR> es(J);
  nodes.resize(order);
  weights.resize(order);
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  for (int i = 0; i < order; ++i) {
    nodes[i] = es.eigenvalues()(i);
    double v0 = es.eigenvectors()(0, i);
    weights[i] = sqrt_pi * v0 * v0;
  }
  std::scoped_lock lock(cache_mutex);
  cache.emplace(order, std::make_pair(nodes, weights));
}

MatrixC gh_product_integral(const std::function<MatrixC(const VectorR&)>& f,
                            int d, int order, const MatrixR& S, double detS,
                            int rows, int cols) {
  // int f(xi) d xi = detS * int exp(-|y|^2) [ exp(|y|^2) f(S y) ] dy
  std::vector<double> y, w;
  gauss_hermite(order, y, w);

  MatrixC acc = MatrixC::Zero(rows, cols);
  VectorR yv(d);
  // Depth-first over axes; weight carries prod w_i * exp(sum y_i^2) so that
  // the Gaussian weight is removed and f supplies its own decay.
  std::function<void(int, double)> walk = [&](int axis, double weight) {
    if (axis == d) {
      acc += weight * f(S * yv);
      return;
    }
    for (int i = 0; i < order; ++i) {
      yv(axis) = y[i];
      walk(axis + 1, weight * w[i] * std::exp(y[i] * y[i]));
    }
  };
  walk(0, 1.0);

  const double two_pi = 2.0 * std::numbers::pi;
  return acc * detS * std::pow(two_pi, -double(d));
}

// Decay rate v^T A v from ||f|| ~ P * e^{-xi^T A xi} along direction v,
// using two radii so polynomial prefactors and zeros of f at the origin
// cancel out; shrinks R while the far probe underflows.
double directional_rate(const std::function<MatrixC(const VectorR&)>& f,
                        const VectorR& v) {
  double R = 2.5;
  for (int attempt = 0; attempt < 8; ++attempt) {
    double n1 = f(R * v).norm();
    double n2 = f(2.0 * R * v).norm();
    if (n1 > 1e-280 && n2 > 1e-280) {
      return std::log(n1 / n2) / (3.0 * R * R);
    }
    R *= 0.5;
  }
  return 1e3;  // decays too fast to measure; any modest rate works
}

// Fixed generic rotation (all entries nonzero for the dimensions used here)
// so that probe directions avoid the zero sets of monomial prefactors.
MatrixR generic_rotation(int d) {
  std::mt19937 rng(987654321u);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixR M(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) M(i, j) = gauss(rng);
  Eigen::HouseholderQR<MatrixR> qr(M);
  MatrixR Q = qr.householderQ();
  return Q;
}

// Least-squares estimate of the decay form A from directional rates.
MatrixR estimate_decay_form(const std::function<MatrixC(const VectorR&)>& f,
                            int d) {
  MatrixR Q = generic_rotation(d);
  std::vector<VectorR> dirs;
  for (int i = 0; i < d; ++i) dirs.push_back(Q.col(i));
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      dirs.push_back(((Q.col(i) + Q.col(j)) / std::numbers::sqrt2).eval());

  const int unknowns = d * (d + 1) / 2;
  const int m = static_cast<int>(dirs.size());
  MatrixR M(m, unknowns);
  VectorR rhs(m);
  for (int row = 0; row < m; ++row) {
    const VectorR& v = dirs[row];
    int col = 0;
    for (int i = 0; i < d; ++i) {
      M(row, col++) = v(i) * v(i);
      for (int j = i + 1; j < d; ++j) M(row, col++) = 2.0 * v(i) * v(j);
    }
    rhs(row) = directional_rate(f, v);
  }
  VectorR x = M.colPivHouseholderQr().solve(rhs);
  MatrixR A(d, d);
  int col = 0;
  for (int i = 0; i < d; ++i) {
    A(i, i) = x(col++);
    for (int j = i + 1; j < d; ++j) {
      A(i, j) = A(j, i) = x(col++);
    }
  }
  return A;
}

}  // namespace

double gaussian_normalization(const MatrixR& g_lower, int d) {
  auto es = checked_spd(g_lower, d, "gaussian_normalization");
  double det = 1.0;
  for (int i = 0; i < d; ++i) det *= es.eigenvalues()(i);
  return std::sqrt(det) /
         (std::pow(2.0, d) * std::pow(std::numbers::pi, 0.5 * d));
}

MomentTensor moment_tensor(const MatrixR& g_lower, int p) {
  require(p >= 0, "moment_tensor: p must be >= 0");
  const int d = static_cast<int>(g_lower.rows());
  checked_spd(g_lower, d, "moment_tensor");

  MomentTensor G;
  G.d = d;
  G.p = p;
  std::size_t size = 1;
  for (int i = 0; i < 2 * p; ++i) size *= d;
  G.values.assign(size, 0.0);
  if (p == 0) {
    G.values[0] = 1.0;
    return G;
  }

  const auto pr = pairings(p);
  const double norm = std::pow(0.5, p);
  std::vector<int> idx(2 * p, 0);
  for (std::size_t flat = 0; flat < size; ++flat) {
    std::size_t rest = flat;
    for (int pos = 2 * p - 1; pos >= 0; --pos) {
      idx[pos] = static_cast<int>(rest % d);
      rest /= d;
    }
    double sum = 0.0;
    for (const auto& pairing : pr) {
      double prod = 1.0;
      for (const auto& [a, b] : pairing) prod *= g_lower(idx[a], idx[b]);
      sum += prod;
    }
    G.values[flat] = norm * sum;
  }
  return G;
}

double contract(const MomentTensor& G, std::span<const double> coeffs) {
  require(coeffs.size() == G.values.size(),
          "contract: coefficient array shape mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    sum += G.values[i] * coeffs[i];
  return sum;
}

MatrixC xi_integral_oracle(const std::function<MatrixC(const VectorR&)>& f,
                           int d, int order, double scale) {
  require(d >= 1, "xi_integral_oracle: dimension must be >= 1");
  require(order >= 4, "xi_integral_oracle: order must be >= 4");

  const MatrixC f0 = f(VectorR::Zero(d));
  const int rows = static_cast<int>(f0.rows());
  const int cols = static_cast<int>(f0.cols());

  // Estimate the quadratic decay form A (||f(xi)|| ~ e^{-xi^T A xi}) from
  // directional probes and whiten with S = A^{-1/2}: for integrands of the
  // form polynomial * e^{-xi^T A xi} the transformed function is (nearly)
  // polynomial along every axis, which is the regime where Gauss-Hermite
  // converges fastest.
  MatrixR A = MatrixR::Identity(d, d);
  if (scale > 0.0) {
    A *= scale;
  } else {
    A = estimate_decay_form(f, d);
    // Clamp to a safely positive matrix; shrink slightly so the whitened
    // integrand keeps a margin of decay in every direction.
    Eigen::SelfAdjointEigenSolver<MatrixR> es(A);
    VectorR lam = es.eigenvalues();
    double lmax = std::clamp(lam.maxCoeff(), 1e-3, 1e3);
    for (int i = 0; i < d; ++i)
      lam(i) = std::clamp(lam(i), 0.05 * lmax, 1e3);
    A = es.eigenvectors() * (0.95 * lam).asDiagonal() *
        es.eigenvectors().transpose();
  }
  Eigen::SelfAdjointEigenSolver<MatrixR> esA(A);
  MatrixR S = esA.eigenvectors() *
              esA.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
              esA.eigenvectors().transpose();
  double detS = 1.0 / std::sqrt(esA.eigenvalues().prod());

  MatrixC coarse = gh_product_integral(f, d, order, S, detS, rows, cols);
  MatrixC fine = gh_product_integral(f, d, 2 * order, S, detS, rows, cols);
  double ref = std::max(fine.norm(), 1e-300);
  if ((fine - coarse).norm() > 1e-6 * ref) {
    std::ostringstream msg;
    msg << "xi_integral_oracle: order-doubling check failed (rel diff "
        << (fine - coarse).norm() / ref
        << "); integrand may lack Gaussian decay";
    throw DomainError(msg.str());
  }
  return fine;
}

}  // namespace heattrace
