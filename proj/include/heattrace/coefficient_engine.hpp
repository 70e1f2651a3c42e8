#pragma once

// Local heat-trace coefficients of second-order operators with scalar
// principal shape,
//
//   P = -( g^{mn}(x) u(x) d_m d_n + v^m(x) d_m + w(x) ),
//
// acting on sections of a rank-N bundle over a d-dimensional manifold.  All
// data enters through pointwise jets: the inverse metric with two
// derivatives, u with two, v with one, w with none -- exactly what the
// subleading coefficient consumes.
//
// Routes provided and cross-checked by the test suite:
//   * a1_local_pipeline: the general-d evaluation of the symbolic integrand
//     (symbol_engine) against Gaussian moments (moment_tensors) and
//     simplex-weighted spectral sums (tensor_algebra);
//   * a1_local_raw: the explicit d = 4 contraction formula;
//   * a1_local_invariant: the d = 4 covariant form built from a connection,
//     with change_variables mapping it onto the coordinate presentation.
//
// Conventions: dg_inv[r] = d_r g^{..}, ddg_inv[r][s] = d_r d_s g^{..} (and
// likewise for all other jet containers: outer indices are derivative
// directions, in order); v and p carry an upper index, dv[r][m] = d_r v^m.

#include <vector>

#include "heattrace/common.hpp"

namespace heattrace {

// 2-jet of the inverse metric at a point.
struct PointJet {
  int d = 0;
  MatrixR g_inv;
  std::vector<MatrixR> dg_inv;
  std::vector<std::vector<MatrixR>> ddg_inv;
};

// Jets of the coordinate-form coefficients at the same point.
struct OperatorCoefficients {
  MatrixC u;
  std::vector<MatrixC> du;
  std::vector<std::vector<MatrixC>> ddu;
  std::vector<MatrixC> v;
  std::vector<std::vector<MatrixC>> dv;
  MatrixC w;
};

// Jets of the covariant presentation
//   P = -( g^{mn} D_m u D_n + p^m D_m + q ),   D_m = d_m + A_m (+ Christoffel
// action on tensor indices), with the outer derivative acting through u.
struct InvariantCoefficients {
  MatrixC u;
  std::vector<MatrixC> du;
  std::vector<std::vector<MatrixC>> ddu;
  std::vector<MatrixC> A;
  std::vector<std::vector<MatrixC>> dA;  // dA[r][m] = d_r A_m
  std::vector<MatrixC> p;
  std::vector<std::vector<MatrixC>> dp;  // dp[r][m] = d_r p^m
  MatrixC q;
};

// Ingredients of a formally self-adjoint operator: u Hermitian,
// v_skew[m] skew-Hermitian, w_herm Hermitian (all checked).
struct SelfAdjointData {
  MatrixC u;
  std::vector<MatrixC> du;
  std::vector<std::vector<MatrixC>> ddu;
  std::vector<MatrixC> v_skew;
  std::vector<std::vector<MatrixC>> dv_skew;
  MatrixC w_herm;
};

// 2-jet of an invertible bundle automorphism gamma(x).
struct GaugeJet {
  MatrixC gamma;
  std::vector<MatrixC> dgamma;
  std::vector<std::vector<MatrixC>> ddgamma;
};

// g_{mn} (inverse of the given inverse metric; must be symmetric positive
// definite).
MatrixR metric_lower(const MatrixR& g_inv);

// d_r g_{mn} = -g_{ma} (d_r g^{ab}) g_{bn}.
std::vector<MatrixR> metric_lower_derivs(const PointJet& jet);

// Christoffel symbols Gamma^r_{mn}, indexed [r](m, n).
std::vector<MatrixR> christoffel(const PointJet& jet);

// d_t Gamma^r_{mn}, indexed [t][r](m, n).
std::vector<std::vector<MatrixR>> christoffel_derivs(const PointJet& jet);

// Scalar curvature assembled from the Riemann tensor.
double scalar_curvature(const PointJet& jet);

// Leading local coefficient  a_0 = g_d tr u^{-d/2}  (u Hermitian positive
// definite).
double a0_local(const PointJet& jet, const MatrixC& u);

// Subleading local coefficient, three routes.  The value is complex for
// genuinely complex lower-order coefficients; formally self-adjoint data
// yields a real value (up to roundoff).
Complex a1_local_raw(const PointJet& jet, const OperatorCoefficients& op);
Complex a1_local_pipeline(const PointJet& jet, const OperatorCoefficients& op);
Complex a1_local_invariant(const PointJet& jet,
                           const InvariantCoefficients& inv);

// Expands the covariant presentation into coordinate-form coefficients.
OperatorCoefficients change_variables(const PointJet& jet,
                                      const InvariantCoefficients& inv);

// For a scalar principal symbol u = f * Id: the connection A_m that absorbs
// the whole first-order coefficient v (leaving p = 0).
std::vector<MatrixC> scalar_symbol_connection(const PointJet& jet, double f,
                                              const VectorR& df,
                                              const std::vector<MatrixC>& v);

// d = 4 subleading coefficient for u = f * Id and p = 0 in terms of
// curvature, the endomorphism q, and the jets of f alone.
Complex a1_scalar_symbol(const PointJet& jet, double f, const VectorR& df,
                         const MatrixR& ddf, const MatrixC& q);

// Leading coefficient of the rank-d operator whose principal symbol is
// (|xi|^2 Id + zeta * xi tensor xi^sharp): a closed form, with the projector
// property of the anisotropic part verified on a deterministic direction
// grid.
double a0_projector(const PointJet& jet, double zeta);

// Coordinate coefficients of the formally self-adjoint operator built from
// the given Hermitian/skew-Hermitian ingredients and the metric volume
// weight.
OperatorCoefficients selfadjoint_operator(const PointJet& jet,
                                          const SelfAdjointData& s);

// Conjugated operator gamma P gamma^{-1}; the local coefficients are
// invariant under this map.
OperatorCoefficients gauge_transform(const PointJet& jet,
                                     const OperatorCoefficients& op,
                                     const GaugeJet& gj);

}  // namespace heattrace
