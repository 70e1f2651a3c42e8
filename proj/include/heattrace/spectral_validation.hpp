#pragma once

// Brute-force spectral oracle on flat tori.
//
// The operator P = -(u^{mn} d_m d_n + v^m d_m + w) with u^{mn} = delta^{mn} u
// acts on periodic sections over the box [0, L)^d.  In the Fourier basis
// e^{i kappa . x}, kappa = (2 pi / L) k with integer k, it acts blockwise:
//
//   B(kappa) = |kappa|^2 u - i kappa_m v^m - w.
//
// For constant coefficients with u Hermitian positive, v^m skew-Hermitian and
// w Hermitian every block is Hermitian, so Tr exp(-tP) is an exact lattice
// sum of Hermitian-eigendecomposition exponentials plus a rigorously bounded
// tail.  For coefficients varying over a two-dimensional torus the operator
// is assembled in divergence form P = -d_m(u(x) d_m .) - w(x) (which ties the
// first-order coefficient to du and keeps the dense Galerkin matrix
// Hermitian), eigendecomposed once, and evaluated at every requested time.
//
// Fitting t^{d/2} Tr exp(-tP) against a polynomial in t over a geometric
// time grid recovers the integrated local coefficients, which the engine
// predicts independently; torus_a0_integral / torus_a1_integral supply those
// targets.
//
// Certificate conventions: structural violations of the input data (wrong
// sizes, non-Hermitian constant blocks, dimension guards) throw DomainError;
// properties computed from accepted data that fail their certificate
// (assembled Galerkin matrix not Hermitian, u(x) losing positivity on the
// sampling grid) throw CrossCheckError.

#include <span>
#include <variant>
#include <vector>

#include "heattrace/coefficient_engine.hpp"
#include "heattrace/common.hpp"

namespace heattrace {

// Constant coefficients of a formally self-adjoint operator.
struct ConstantCoefficients {
  MatrixC u;               // Hermitian positive definite
  std::vector<MatrixC> v;  // d entries, each skew-Hermitian
  MatrixC w;               // Hermitian
};

// Hermitian-matrix-valued trigonometric polynomial on [0, L)^d:
//   F(x) = c0 + sum_j [ c_j e^{i kappa_j . x} + c_j^* e^{-i kappa_j . x} ]
// with kappa_j = (2 pi / L) k_j and integer frequencies k_j != 0.
struct TrigMatrixField {
  struct Mode {
    std::vector<int> k;
    MatrixC c;
  };
  MatrixC c0;
  std::vector<Mode> modes;
};

// Varying coefficients on the torus, in divergence form:
//   P = -d_m(u(x) d_m .) - w(x).
struct VaryingCoefficients {
  TrigMatrixField u;  // values Hermitian positive definite
  TrigMatrixField w;  // values Hermitian
};

struct TorusModel {
  int d = 0;
  double length = 0.0;  // side length L > 0
  int cutoff = 0;       // largest retained |k_i| per axis
  std::variant<ConstantCoefficients, VaryingCoefficients> coefficients;
};

struct HeatTraceSample {
  double t = 0.0;
  double trace = 0.0;
  // Upper bound (constant coefficients: rigorous Gaussian-tail bound;
  // varying coefficients: same bound from the grid minimum of u(x), an
  // estimate for the Galerkin discretization) on the discarded contribution.
  double truncation_bound = 0.0;
};

// Pointwise field evaluation, used to compare against the local engine.
MatrixC field_value(const TrigMatrixField& f, double length, const VectorR& x);
MatrixC field_derivative(const TrigMatrixField& f, double length,
                         const VectorR& x, int r);
MatrixC field_second_derivative(const TrigMatrixField& f, double length,
                                const VectorR& x, int r, int s);

// Exact mode sum over the box |k_i| <= cutoff; every block is eigendecomposed
// once and evaluated at all requested times.
std::vector<HeatTraceSample> heat_trace_constant(const TorusModel& model,
                                                 std::span<const double> times);
HeatTraceSample heat_trace_constant(const TorusModel& model, double t);

// Dense Fourier-Galerkin evaluation on a two-dimensional torus (dimension
// guard (2 cutoff + 1)^2 N <= 12000); the matrix is assembled and
// eigendecomposed once for all times.
std::vector<HeatTraceSample> heat_trace_varying(const TorusModel& model,
                                                std::span<const double> times);
HeatTraceSample heat_trace_varying(const TorusModel& model, double t);

// Smallest t whose truncation bound stays below rel times the leading-order
// trace estimate; the asymptotic fit window starts here.
double suggested_start_time(const TorusModel& model, double rel = 1e-8);

// Geometric grid of `count` times covering [t0, factor * t0].
std::vector<double> geometric_times(double t0, double factor = 8.0,
                                    int count = 12);

struct AsymptoticFit {
  std::vector<double> coefficients;   // A_j:  trace ~ sum_j A_j t^{j - d/2}
  std::vector<double> uncertainties;  // residual-based, same indexing
  double condition = 0.0;             // of the scaled design matrix
  double residual = 0.0;              // rms misfit of t^{d/2} * trace
};

// Least-squares fit of t^{d/2} * trace against 1, t, ..., t^order over the
// sample times (internally rescaled for conditioning).  Requires at least
// order + 2 samples; a design-matrix condition number beyond 1e12 is a
// failure reported with the number.
AsymptoticFit fit_asymptotics(std::span<const HeatTraceSample> samples, int d,
                              int order);

// Engine-side targets: the local coefficients integrated over the torus.
// Constant coefficients integrate trivially; varying coefficients use a
// uniform grid_per_axis^d rectangle rule (spectrally accurate for
// trigonometric data).
double torus_a0_integral(const TorusModel& model, int grid_per_axis = 32);
Complex torus_a1_integral(const TorusModel& model, int grid_per_axis = 32);

}  // namespace heattrace
