#include "heattrace/simplex_integrals.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace heattrace {

namespace detail {

void gauss_legendre_01(int order, std::vector<double>& nodes,
                       std::vector<double>& weights) {
  require(order >= 1, "gauss_legendre_01: order must be >= 1");

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

  const int n = order;
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    // Chebyshev-like initial guess for the i-th root of P_n on [-1,1].
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // Evaluate P_n(t) and P_n'(t) by the three-term recurrence.
      double p0 = 1.0, p1 = t;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2 * j - 1) * t * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
  // Map [-1,1] -> [0,1] and sort ascending for determinism.
  std::vector<std::pair<double, double>> xw(n);
  for (int i = 0; i < n; ++i) xw[i] = {0.5 * (x[i] + 1.0), 0.5 * w[i]};
  std::sort(xw.begin(), xw.end());
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = xw[i].first;
    weights[i] = xw[i].second;
  }

  std::scoped_lock lock(cache_mutex);
  cache.emplace(order, std::make_pair(nodes, weights));
}

NodeClusters cluster_nodes(std::span<const double> values, double rel_tol) {
  NodeClusters out;
  if (values.empty()) return out;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = sorted[0];
  int count = 1;
  for (size_t i = 1; i < sorted.size(); ++i) {
    if (rel_gap(sorted[i - 1], sorted[i]) <= rel_tol) {
      sum += sorted[i];
      ++count;
    } else {
      out.reps.push_back(sum / count);
      out.mult.push_back(count);
      sum = sorted[i];
      count = 1;
    }
  }
  out.reps.push_back(sum / count);
  out.mult.push_back(count);
  return out;
}

double divided_difference_confluent(
    std::span<const double> z,
    const std::function<double(double, int)>& deriv_over_factorial) {
  const int K = static_cast<int>(z.size()) - 1;
  require(K >= 0, "divided_difference_confluent: need at least one node");
  // dd[i] holds F[z_i,...,z_{i+len}] for the current span length.
  std::vector<double> dd(K + 1);
  for (int i = 0; i <= K; ++i) dd[i] = deriv_over_factorial(z[i], 0);
  for (int len = 1; len <= K; ++len) {
    for (int i = 0; i + len <= K; ++i) {
      if (z[i] == z[i + len]) {
        dd[i] = deriv_over_factorial(z[i], len);
      } else {
        dd[i] = (dd[i + 1] - dd[i]) / (z[i + len] - z[i]);
      }
    }
  }
  return dd[0];
}

namespace {

void validate_weights(std::span<const double> r, const char* who) {
  for (double ri : r) {
    if (!(ri > 0.0) || !std::isfinite(ri)) {
      std::ostringstream msg;
      msg << who << ": weights must be finite and strictly positive, got "
          << ri;
      throw DomainError(msg.str());
    }
  }
}

// Expands clusters into a node list with equal values adjacent (ascending).
std::vector<double> confluent_node_list(const NodeClusters& c) {
  std::vector<double> z;
  for (size_t i = 0; i < c.reps.size(); ++i)
    z.insert(z.end(), c.mult[i], c.reps[i]);
  return z;
}

double min_cluster_gap(const NodeClusters& c) {
  double g = std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < c.reps.size(); ++i)
    g = std::min(g, rel_gap(c.reps[i - 1], c.reps[i]));
  return g;
}

}  // namespace

}  // namespace detail

double integral_quadrature(double alpha, int k, std::span<const double> r,
                           int order) {
  require(k >= 1, "integral_quadrature: k must be >= 1");
  require(static_cast<int>(r.size()) == k + 1,
          "integral_quadrature: need k+1 weights");
  require(order >= 4, "integral_quadrature: order must be >= 4");
  detail::validate_weights(r, "integral_quadrature");

  // Sort descending.  The cube map below then gives every axis slice the
  // form  A(x) = A0 + b x  with  A0 >= prefix * r_{j-1}  and
  // |b| <= prefix * (r_{j-1} - r_k),  so the only zero of A sits on the real
  // axis at  x* >= 1 + delta_j,  delta_j = r_k / (r_{j-1} - r_k),  i.e.
  // always beyond the right endpoint.
  std::vector<double> rd(r.begin(), r.end());
  std::sort(rd.begin(), rd.end(), std::greater<double>());

  std::vector<double> x, w;
  detail::gauss_legendre_01(order, x, w);

  // For wide spreads delta_j is small and plain Gauss-Legendre stalls
  // (Bernstein parameter 1 + O(sqrt(delta))).  The sinh substitution
  //   x = 1 - sinh(mu (1-y)) / sinh(mu),  mu = log(2/delta),
  // pushes the preimage of the zero a distance  asinh(delta sinh mu)/mu
  // = O(1/log(1/delta))  past the endpoint, restoring fast convergence
  // uniformly in the spread.  Nodes/weights are transformed per axis.
  std::vector<std::vector<double>> ax(k), aw(k);
  for (int j = 0; j < k; ++j) {
    ax[j].resize(order);
    aw[j].resize(order);
    double delta = (rd[j] > rd[k])
                       ? rd[k] / (rd[j] - rd[k])
                       : std::numeric_limits<double>::infinity();
    if (delta < 0.5) {
      const double mu = std::log(2.0 / delta);
      const double sh = std::sinh(mu);
      for (int i = 0; i < order; ++i) {
        ax[j][i] = 1.0 - std::sinh(mu * (1.0 - x[i])) / sh;
        aw[j][i] = w[i] * mu * std::cosh(mu * (1.0 - x[i])) / sh;
      }
    } else {
      for (int i = 0; i < order; ++i) {
        ax[j][i] = x[i];
        aw[j][i] = w[i];
      }
    }
  }

  // Ordered simplex mapped to the cube by s_j = x_1 x_2 ... x_j, giving
  //   A = r_0 (1-x_1) + x_1 [ r_1 (1-x_2) + x_2 [ ... ] ]
  // and Jacobian  prod_j x_j^{k-j}.  Depth-first accumulation over levels,
  // carrying the partial affine sum, the running prefix weight and the
  // quadrature weight including the Jacobian power.
  double total = 0.0;
  // level in [0, k): choosing x_{level+1}.
  std::function<void(int, double, double, double)> walk =
      [&](int level, double partial, double prefix, double weight) {
        const double rj = rd[level];
        const auto& xs = ax[level];
        const auto& ws = aw[level];
        if (level == k - 1) {
          const double rlast = rd[k];
          for (int i = 0; i < order; ++i) {
            const double xi = xs[i];
            const double a = partial + prefix * (rj * (1.0 - xi) + rlast * xi);
            total += weight * ws[i] * std::pow(a, -alpha);
          }
          return;
        }
        const int jac_pow = k - 1 - level;
        for (int i = 0; i < order; ++i) {
          const double xi = xs[i];
          double jac = 1.0;
          for (int m = 0; m < jac_pow; ++m) jac *= xi;
          walk(level + 1, partial + prefix * rj * (1.0 - xi), prefix * xi,
               weight * ws[i] * jac);
        }
      };
  walk(0, 0.0, 1.0, 1.0);
  return total;
}

double integral_closed_case2(int n, int k, std::span<const double> r) {
  require(n >= 1, "integral_closed_case2: need integer n >= 1");
  require(k >= 1, "integral_closed_case2: k must be >= 1");
  require(static_cast<int>(r.size()) == k + 1,
          "integral_closed_case2: need k+1 weights");
  detail::validate_weights(r, "integral_closed_case2");

  // I_{n+k,k}(r) = (n)_k^{-1} (prod_i r_i)^{-n}
  //   * sum_{0 <= l_k <= ... <= l_1 <= n-1}
  //       r_0^{l_1} r_1^{l_2+(n-1)-l_1} ... r_{k-1}^{l_k+(n-1)-l_{k-1}}
  //       r_k^{(n-1)-l_k}
  // All terms are positive: no cancellation for any coincidence pattern.
  double sum = 0.0;
  std::vector<int> l(k + 1, 0);  // l[1..k]
  std::function<void(int, int, double)> walk = [&](int j, int upper,
                                                   double prod) {
    if (j > k) {
      sum += prod * std::pow(r[k], n - 1 - l[k]);
      return;
    }
    for (int lj = 0; lj <= upper; ++lj) {
      l[j] = lj;
      int expo = (j == 1) ? lj : l[j] + (n - 1) - l[j - 1];
      walk(j + 1, lj, prod * std::pow(r[j - 1], expo));
    }
  };
  walk(1, n - 1, 1.0);

  double inv_prod_n = 1.0;
  for (double ri : r) inv_prod_n *= std::pow(ri, -n);
  return sum * inv_prod_n / pochhammer(n, k);
}

double integral_log_case1(int n, int k, std::span<const double> r) {
  require(n >= 0, "integral_log_case1: need integer n >= 0");
  require(k >= 1, "integral_log_case1: k must be >= 1");
  require(static_cast<int>(r.size()) == n + k + 1,
          "integral_log_case1: need n+k+1 weights");
  detail::validate_weights(r, "integral_log_case1");

  const int m = k - 1;  // polynomial degree of the generating function
  const double pref =
      ((n % 2) ? -1.0 : 1.0) / (factorial(n) * factorial(k - 1));
  auto clusters = detail::cluster_nodes(r, 1e-9);

  if (clusters.reps.size() == r.size()) {
    // All nodes distinct: plain partial-fraction style sum.  The nodes are
    // sorted first so the summation order (and hence the rounding) does not
    // depend on the argument order: the value is fully symmetric and this
    // keeps the evaluation bitwise permutation-independent.
    std::vector<double> nodes(r.begin(), r.end());
    std::sort(nodes.begin(), nodes.end());
    double sum = 0.0;
    for (size_t i = 0; i < nodes.size(); ++i) {
      double prod = 1.0;
      for (size_t j = 0; j < nodes.size(); ++j)
        if (j != i) prod /= (nodes[i] - nodes[j]);
      sum += prod * std::pow(nodes[i], m) * std::log(nodes[i]);
    }
    return pref * sum;
  }

  // Confluent path: divided difference of F(x) = pref * x^m log x.
  std::vector<double> harmonic(m + 1, 0.0);
  for (int i = 1; i <= m; ++i) harmonic[i] = harmonic[i - 1] + 1.0 / i;
  auto deriv_over_fact = [&](double x, int t) -> double {
    if (t <= m) {
      // F^(t)/t! = C(m,t) x^{m-t} (log x + H_m - H_{m-t})
      double binom = 1.0;
      for (int i = 0; i < t; ++i) binom *= double(m - i) / double(i + 1);
      return pref * binom * std::pow(x, m - t) *
             (std::log(x) + harmonic[m] - harmonic[m - t]);
    }
    // F^(t)/t! = m! (-1)^{t-m-1} (t-m-1)! / t! * x^{m-t}
    int s = t - m - 1;
    double c = factorial(m) * factorial(s) / factorial(t);
    if (s % 2) c = -c;
    return pref * c * std::pow(x, m - t);
  };
  auto z = detail::confluent_node_list(clusters);
  return detail::divided_difference_confluent(z, deriv_over_fact);
}

double partial_fraction_prefactor(double alpha0, int k) {
  double denom = pochhammer(alpha0, k);
  require(denom != 0.0,
          "partial_fraction_prefactor: alpha0 must not be a non-positive "
          "integer above -k");
  return ((k % 2) ? -1.0 : 1.0) / denom;
}

double integral_partial_fraction(double alpha0, int k,
                                 std::span<const double> r) {
  require(k >= 1, "integral_partial_fraction: k must be >= 1");
  require(static_cast<int>(r.size()) == k + 1,
          "integral_partial_fraction: need k+1 weights");
  detail::validate_weights(r, "integral_partial_fraction");
  double rounded = std::round(alpha0);
  require(!(std::abs(alpha0 - rounded) < 1e-12 && rounded <= 0.0),
          "integral_partial_fraction: alpha0 is a non-positive integer; use "
          "the logarithmic form");

  const double c = partial_fraction_prefactor(alpha0, k);
  auto clusters = detail::cluster_nodes(r, 1e-9);

  if (clusters.reps.size() == r.size()) {
    // Sorted evaluation order: bitwise permutation-independent (see the
    // logarithmic form above).
    std::vector<double> nodes(r.begin(), r.end());
    std::sort(nodes.begin(), nodes.end());
    double sum = 0.0;
    for (size_t i = 0; i < nodes.size(); ++i) {
      double prod = 1.0;
      for (size_t j = 0; j < nodes.size(); ++j)
        if (j != i) prod /= (nodes[i] - nodes[j]);
      sum += prod * std::pow(nodes[i], -alpha0);
    }
    return c * sum;
  }

  // Confluent divided difference of F(x) = x^{-alpha0};
  // F^(t)(x)/t! = (-1)^t (alpha0)_t / t! * x^{-alpha0-t}.
  auto deriv_over_fact = [&](double x, int t) -> double {
    double coef = 1.0;
    for (int i = 0; i < t; ++i) coef *= -(alpha0 + i) / (i + 1);
    return coef * std::pow(x, -alpha0 - t);
  };
  auto z = detail::confluent_node_list(clusters);
  return c * detail::divided_difference_confluent(z, deriv_over_fact);
}

double integral_recursive_step(
    double alpha, int k,
    const std::function<double(std::span<const double>)>& lower,
    std::span<const double> r) {
  require(k >= 1, "integral_recursive_step: k must be >= 1");
  require(static_cast<int>(r.size()) == k + 1,
          "integral_recursive_step: need k+1 weights");
  require(alpha != 1.0, "integral_recursive_step: alpha must differ from 1");
  detail::validate_weights(r, "integral_recursive_step");

  std::vector<double> head(r.begin(), r.end() - 2);  // r_0..r_{k-2}
  const double rk1 = r[k - 1], rk = r[k];

  if (rel_gap(rk1, rk) > 1e-9) {
    std::vector<double> args1 = head;
    args1.push_back(rk);
    std::vector<double> args2 = head;
    args2.push_back(rk1);
    return (lower(args1) - lower(args2)) / ((alpha - 1.0) * (rk1 - rk));
  }

  // Coincident tail: difference quotient -> -d/dx lower(r_0..r_{k-2}, x).
  const double c0 = 0.5 * (rk1 + rk);
  const double h = 1e-5 * c0;
  std::vector<double> plus = head, minus = head;
  plus.push_back(c0 + h);
  minus.push_back(c0 - h);
  return -(lower(plus) - lower(minus)) / (2.0 * h * (alpha - 1.0));
}

double integral(int d, int p, int k, std::span<const double> r) {
  require(d >= 1, "integral: dimension must be >= 1");
  require(p >= 0, "integral: p must be >= 0");
  require(k >= 0, "integral: k must be >= 0");
  require(static_cast<int>(r.size()) == k + 1, "integral: need k+1 weights");
  detail::validate_weights(r, "integral");

  const double alpha = 0.5 * d + p;
  if (k == 0) return std::pow(r[0], -alpha);

  if (d % 2 == 0) {
    const int ia = d / 2 + p;  // integer alpha
    if (ia > k) {
      // alpha = n + k with n >= 1: coincidence-safe for all arguments.
      return integral_closed_case2(ia - k, k, r);
    }
    // alpha = n + 1 <= k: logarithmic form with n = alpha - 1 and
    // arity n + k' + 1 where k' = k - n.
    const int n = ia - 1;
    auto clusters = detail::cluster_nodes(r, 1e-9);
    if (clusters.reps.size() > 1 &&
        detail::min_cluster_gap(clusters) < 1e-5) {
      return integral_quadrature(alpha, k, r, 32);
    }
    return integral_log_case1(n, k - n, r);
  }

  // Odd dimension: alpha0 = d/2 + p - k is half-integer.
  auto clusters = detail::cluster_nodes(r, 1e-9);
  if (clusters.reps.size() > 1 && detail::min_cluster_gap(clusters) < 1e-5) {
    return integral_quadrature(alpha, k, r, 32);
  }
  return integral_partial_fraction(alpha - k, k, r);
}

}  // namespace heattrace
