#pragma once

// Gaussian covariance moments on the cotangent fibre.
//
// For a Riemannian metric g at a point, integrals of the form
//   (2 pi)^{-d} \int d xi  xi_{mu_1} ... xi_{mu_2p}  F(xi)
// with F built from e^{-|xi|_g^2}-type decay reduce to the moment tensors
//   G(g)_{mu_1 ... mu_2p} = 2^{-p} * sum over the (2p-1)!! pairings of
//                           the index set of  prod g_{mu mu'}
// together with the scalar normalisation  sqrt(det g) / (2^d pi^{d/2}).
// moment_tensor stores G(g) densely (d^{2p} entries); contract pairs it with
// an equally shaped coefficient array.
//
// xi_integral_oracle is the independent reference: a product Gauss-Hermite
// rule over the whole fibre, with a whitening scale chosen from the decay of
// the integrand and an order-doubling check that flags integrands without
// Gaussian decay.

#include <functional>
#include <span>
#include <vector>

#include "heattrace/common.hpp"

namespace heattrace {

// sqrt(det g_lower) / (2^d pi^{d/2}); rejects non-SPD metrics.
double gaussian_normalization(const MatrixR& g_lower, int d);

struct MomentTensor {
  int d = 0;
  int p = 0;                   // half the rank; rank = 2p
  std::vector<double> values;  // dense, strides d^{2p-1}, ..., d, 1

  double at(std::span<const int> idx) const {
    std::size_t flat = 0;
    for (int i : idx) flat = flat * d + i;
    return values[flat];
  }
};

// Dense G(g) for rank 2p (p >= 0; p = 0 gives the scalar 1).
MomentTensor moment_tensor(const MatrixR& g_lower, int p);

// Full contraction of G(g) with a dense coefficient array of the same shape.
double contract(const MomentTensor& G, std::span<const double> coeffs);

// (2 pi)^{-d} \int f(xi) d xi  by product Gauss-Hermite quadrature with
// order nodes per axis.  `scale` is the whitening parameter c in the
// substitution xi = y / sqrt(c); pass scale <= 0 to estimate it from the
// decay of ||f|| along the axes.  An order-doubling consistency check
// rejects integrands without Gaussian decay.
MatrixC xi_integral_oracle(const std::function<MatrixC(const VectorR&)>& f,
                           int d, int order = 32, double scale = -1.0);

}  // namespace heattrace
