#pragma once

// Weighted simplex integrals
//
//   I_{alpha,k}(r_0,...,r_k) = \int_{\Delta_k} [ (1-s_1) r_0 + (s_1-s_2) r_1
//                              + ... + s_k r_k ]^{-alpha}  ds_1...ds_k
//
// over the ordered simplex 0 <= s_k <= ... <= s_1 <= 1, for strictly positive
// weights r_i.  The barycentric substitution shows the value is a fully
// symmetric function of (r_0,...,r_k); I_{alpha,0}(r_0) = r_0^{-alpha} and at
// a fully coincident argument I_{alpha,k}(c,...,c) = c^{-alpha} / k!.
//
// Three closed-form evaluation routes cover the exponent families that occur
// in local heat-kernel coefficients (alpha = d/2 + p, arity k+1):
//   * integral_closed_case2      alpha = n + k with integer n >= 1
//                                (even d with d/2 + p > k); a positive
//                                polynomial-in-1/r_i formula valid for every
//                                coincidence pattern,
//   * integral_log_case1         alpha = n + 1 integer with arity n + k + 1
//                                (even d with d/2 + p <= k); logarithmic form,
//   * integral_partial_fraction  alpha = alpha0 + k with alpha0 not a
//                                non-positive integer (odd d gives
//                                half-integer alpha0).
// The latter two are divided differences of a single generating function, and
// coincident arguments are handled exactly through confluent divided
// differences.  integral() dispatches on (d, p, k) and falls back to the
// quadrature route when arguments are close enough to make the closed forms
// ill-conditioned but too far apart to merge.
//
// integral_quadrature is the independent reference: iterated Gauss-Legendre
// on [0,1]^k after mapping the ordered simplex, with the weights sorted in
// descending order so that every one-dimensional slice keeps its complex
// singularity at distance >= 1 from the integration interval.  That makes the
// node count needed for ~1e-13 accuracy independent of the spread of the r_i.

#include <functional>
#include <span>
#include <vector>

#include "heattrace/common.hpp"

namespace heattrace {

namespace detail {

// Groups sorted-by-value nodes whose neighbours are within rel_tol into
// clusters; reps are cluster means (ascending), mult the cluster sizes.
struct NodeClusters {
  std::vector<double> reps;
  std::vector<int> mult;
};
NodeClusters cluster_nodes(std::span<const double> values, double rel_tol);

// Newton's divided difference F[z_0,...,z_K] for a node list sorted so that
// equal values are adjacent.  Confluent entries use exact derivative data:
// deriv_over_factorial(x, t) must return F^{(t)}(x) / t!.
double divided_difference_confluent(
    std::span<const double> z,
    const std::function<double(double, int)>& deriv_over_factorial);

// Gauss-Legendre nodes/weights on [0,1] (cached per order, thread-safe).
void gauss_legendre_01(int order, std::vector<double>& nodes,
                       std::vector<double>& weights);

}  // namespace detail

// Reference evaluation by iterated Gauss-Legendre quadrature.  Requires
// k >= 1, r.size() == k+1, all r_i > 0, order >= 4.  `order` is the node
// count per axis; the default reaches ~1e-13 relative accuracy for the
// exponents used in this library.
double integral_quadrature(double alpha, int k, std::span<const double> r,
                           int order = 24);

// alpha = n + k, integer n >= 1, arity k+1.  Valid for every coincidence
// pattern of the r_i (no divided differences involved).
double integral_closed_case2(int n, int k, std::span<const double> r);

// alpha = n + 1 with integer n >= 0 and arity n + k + 1 (k >= 1 here counts
// the arity in excess of n+1).  Logarithmic closed form; coincident nodes
// are routed through confluent divided differences.
double integral_log_case1(int n, int k, std::span<const double> r);

// alpha = alpha0 + k where alpha0 is not a non-positive integer; arity k+1.
// Partial-fraction / divided-difference closed form; coincident nodes are
// routed through confluent divided differences.
double integral_partial_fraction(double alpha0, int k,
                                 std::span<const double> r);

// Prefactor c_{alpha0+k,k} = (-1)^k / (alpha0)_k of the partial-fraction
// form, exposed so the coefficient recursion between consecutive arities can
// be verified independently.
double partial_fraction_prefactor(double alpha0, int k);

// One step of the arity-lowering recursion (alpha != 1, k >= 1):
//   I_{alpha,k}(r_0..r_k) = [(alpha-1)(r_{k-1}-r_k)]^{-1}
//       * ( I_{alpha-1,k-1}(r_0..r_{k-2}, r_k) - I_{alpha-1,k-1}(r_0..r_{k-1}) ).
// `lower` evaluates I_{alpha-1,k-1} on an arity-k argument list.  When
// r_{k-1} and r_k coincide (relative gap <= 1e-9) the difference quotient is
// replaced by a centred derivative of `lower` in its last argument.
double integral_recursive_step(
    double alpha, int k,
    const std::function<double(std::span<const double>)>& lower,
    std::span<const double> r);

// Dispatcher used by the operator-valued functional calculus: evaluates
// I_{d/2+p, k}(r) choosing the closed form according to (d, p, k), with the
// quadrature fallback for nearly-coincident arguments outside the validity
// of the coincidence-safe forms.  k = 0 returns r_0^{-(d/2+p)}.
double integral(int d, int p, int k, std::span<const double> r);

}  // namespace heattrace
