#pragma once

// Operator-valued functional calculus on a positive Hermitian fibre matrix.
//
// For u Hermitian positive definite with spectral decomposition
// u = sum_i lambda_i pi_i, weighted multi-slot insertions are evaluated as
//
//   apply_I_operator(d, p, k, u, [B_1..B_k])
//     = sum_{i_0..i_k} I_{d/2+p,k}(lambda_{i_0},..,lambda_{i_k})
//         pi_{i_0} B_1 pi_{i_1} B_2 ... B_k pi_{i_k}
//
// with the simplex integrals of simplex_integrals.hpp as weights.  Two
// companions cover special shapes:
//   * apply_factorized_case2: the alpha = n + k family admits an expansion
//     in plain powers of u interleaved with the B_j (no spectral data in the
//     result), used as an independent route for cross-checking,
//   * apply_I_reduced: the trace-reduced form where the last projector is
//     tied to the first slot (weights I~ with r_last = r_first).

#include <span>
#include <vector>

#include "heattrace/common.hpp"

namespace heattrace {

struct SpectralData {
  std::vector<double> eigenvalues;   // cluster representatives, ascending
  std::vector<MatrixC> projectors;   // orthogonal spectral projectors
};

// Hermitian positive-definite eigendecomposition with eigenvalue clustering
// at relative tolerance cluster_rel_tol.  Verifies and enforces the
// certificates: hermiticity of the input, positivity of the spectrum,
// projector completeness (sum = identity), idempotency and reconstruction.
SpectralData spectral_decompose(const MatrixC& u,
                                double cluster_rel_tol = 1e-9);

// a_0 B_1 a_1 B_2 ... B_k a_k for slot lists of length k+1 and k.
MatrixC iota_apply(std::span<const MatrixC> a, std::span<const MatrixC> b);

// Weighted insertion with I_{d/2+p,k} weights (see header comment).
// k = 0 returns u^{-(d/2+p)}.
MatrixC apply_I_operator(int d, int p, int k, const MatrixC& u,
                         std::span<const MatrixC> b);

// Independent factorized evaluation for alpha = n + k, n >= 1:
//   (n)_k^{-1} sum_{0 <= l_k <= ... <= l_1 <= n-1}
//     u^{l_1 - n} B_1 u^{l_2 - l_1 - 1} B_2 ... B_k u^{-l_k - 1}
MatrixC apply_factorized_case2(int n, int k, const MatrixC& u,
                               std::span<const MatrixC> b);

// Trace-reduced form: sum over (i_0..i_{k-1}) of
//   I_{d/2+p,k}(lam_{i_0},..,lam_{i_{k-1}},lam_{i_0})
//     * tr(pi_{i_0} B_1 pi_{i_1} ... pi_{i_{k-1}} B_k).
// k = 0 returns tr(u^{-(d/2+p)}).
Complex apply_I_reduced(int d, int p, int k, const MatrixC& u,
                        std::span<const MatrixC> b);

}  // namespace heattrace
