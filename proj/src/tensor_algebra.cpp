#include "heattrace/tensor_algebra.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "heattrace/simplex_integrals.hpp"

namespace heattrace {

SpectralData spectral_decompose(const MatrixC& u, double cluster_rel_tol) {
  const int n = static_cast<int>(u.rows());
  require(n >= 1 && u.cols() == n, "spectral_decompose: matrix must be square");

  const double unorm = std::max(u.cwiseAbs().maxCoeff(), 1e-300);
  if ((u - u.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * unorm) {
    throw DomainError("spectral_decompose: matrix is not Hermitian");
  }

  Eigen::SelfAdjointEigenSolver<MatrixC> es(u);
  require(es.info() == Eigen::Success,
          "spectral_decompose: eigensolver failed");
  const VectorR lam = es.eigenvalues();
  if (lam.minCoeff() <= 0.0) {
    std::ostringstream msg;
    msg << "spectral_decompose: spectrum must be positive (min eigenvalue "
        << lam.minCoeff() << ")";
    throw DomainError(msg.str());
  }
  if (lam.minCoeff() < 1e-12 * lam.maxCoeff()) {
    throw DomainError(
        "spectral_decompose: spectrum spread exceeds 1e12; the weighted "
        "calculus would be numerically meaningless");
  }

  SpectralData out;
  int i = 0;
  while (i < n) {
    int j = i;
    double sum = 0.0;
    while (j < n && rel_gap(lam(i), lam(j)) <= cluster_rel_tol) {
      sum += lam(j);
      ++j;
    }
    MatrixC pi = MatrixC::Zero(n, n);
    for (int m = i; m < j; ++m) {
      pi += es.eigenvectors().col(m) * es.eigenvectors().col(m).adjoint();
    }
    out.eigenvalues.push_back(sum / (j - i));
    out.projectors.push_back(pi);
    i = j;
  }

  // Certificates: completeness, idempotency/orthogonality, reconstruction.
  MatrixC sum_pi = MatrixC::Zero(n, n);
  MatrixC recon = MatrixC::Zero(n, n);
  for (size_t c = 0; c < out.projectors.size(); ++c) {
    sum_pi += out.projectors[c];
    recon += out.eigenvalues[c] * out.projectors[c];
  }
  if ((sum_pi - MatrixC::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-12) {
    throw DomainError("spectral_decompose: projectors do not sum to identity");
  }
  for (size_t c = 0; c < out.projectors.size(); ++c) {
    const MatrixC& pi = out.projectors[c];
    if ((pi * pi - pi).cwiseAbs().maxCoeff() > 1e-12) {
      throw DomainError("spectral_decompose: projector not idempotent");
    }
  }
  // Reconstruction error is bounded by the cluster width.
  if ((recon - u).cwiseAbs().maxCoeff() >
      10.0 * cluster_rel_tol * unorm + 1e-12 * unorm) {
    throw DomainError("spectral_decompose: reconstruction check failed");
  }
  return out;
}

MatrixC iota_apply(std::span<const MatrixC> a, std::span<const MatrixC> b) {
  require(a.size() == b.size() + 1,
          "iota_apply: need one more outer slot than inner");
  MatrixC acc = a[0];
  for (size_t j = 0; j < b.size(); ++j) acc = acc * b[j] * a[j + 1];
  return acc;
}

MatrixC apply_I_operator(int d, int p, int k, const MatrixC& u,
                         std::span<const MatrixC> b) {
  require(static_cast<int>(b.size()) == k,
          "apply_I_operator: need k inner slots");
  const SpectralData sd = spectral_decompose(u);
  const int n = static_cast<int>(u.rows());
  const int nc = static_cast<int>(sd.eigenvalues.size());

  if (k == 0) {
    MatrixC acc = MatrixC::Zero(n, n);
    const double alpha = 0.5 * d + p;
    for (int c = 0; c < nc; ++c) {
      acc += std::pow(sd.eigenvalues[c], -alpha) * sd.projectors[c];
    }
    return acc;
  }

  // Sum over cluster tuples (i_0,...,i_k); the chain product is built left
  // to right with the weight applied at the end.
  MatrixC acc = MatrixC::Zero(n, n);
  std::vector<double> lam(k + 1);
  std::vector<int> tuple(k + 1, 0);
  std::function<void(int, const MatrixC&)> walk = [&](int pos,
                                                      const MatrixC& chain) {
    if (pos == k + 1) {
      acc += integral(d, p, k, lam) * chain;
      return;
    }
    for (int c = 0; c < nc; ++c) {
      tuple[pos] = c;
      lam[pos] = sd.eigenvalues[c];
      MatrixC next = (pos == 0) ? sd.projectors[c]
                                : MatrixC(chain * b[pos - 1] * sd.projectors[c]);
      walk(pos + 1, next);
    }
  };
  walk(0, MatrixC());
  return acc;
}

MatrixC apply_factorized_case2(int n, int k, const MatrixC& u,
                               std::span<const MatrixC> b) {
  require(n >= 1, "apply_factorized_case2: need integer n >= 1");
  require(k >= 1, "apply_factorized_case2: k must be >= 1");
  require(static_cast<int>(b.size()) == k,
          "apply_factorized_case2: need k inner slots");
  const int dim = static_cast<int>(u.rows());

  // Integer powers of u from the spectral decomposition (exponents in
  // [-(n+k), n]); positivity is certified by spectral_decompose.
  const SpectralData sd = spectral_decompose(u);
  auto upow = [&](int e) -> MatrixC {
    MatrixC acc = MatrixC::Zero(dim, dim);
    for (size_t c = 0; c < sd.eigenvalues.size(); ++c) {
      acc += std::pow(sd.eigenvalues[c], double(e)) * sd.projectors[c];
    }
    return acc;
  };

  MatrixC acc = MatrixC::Zero(dim, dim);
  std::vector<int> l(k + 1, 0);  // l[1..k], decreasing chains in [0, n-1]
  std::function<void(int, const MatrixC&)> walk = [&](int j,
                                                      const MatrixC& chain) {
    if (j > k) {
      acc += chain * upow(-l[k] - 1);
      return;
    }
    const int upper = (j == 1) ? n - 1 : l[j - 1];
    for (int lj = 0; lj <= upper; ++lj) {
      l[j] = lj;
      const int expo = (j == 1) ? lj - n : l[j] - l[j - 1] - 1;
      walk(j + 1, MatrixC(chain * upow(expo) * b[j - 1]));
    }
  };
  walk(1, MatrixC::Identity(dim, dim));
  return acc / pochhammer(n, k);
}

Complex apply_I_reduced(int d, int p, int k, const MatrixC& u,
                        std::span<const MatrixC> b) {
  require(static_cast<int>(b.size()) == k,
          "apply_I_reduced: need k inner slots");
  const SpectralData sd = spectral_decompose(u);
  const int nc = static_cast<int>(sd.eigenvalues.size());

  if (k == 0) {
    Complex acc = 0.0;
    const double alpha = 0.5 * d + p;
    for (int c = 0; c < nc; ++c) {
      acc += std::pow(sd.eigenvalues[c], -alpha) *
             sd.projectors[c].trace();
    }
    return acc;
  }

  Complex acc = 0.0;
  std::vector<double> lam(k + 1);
  std::function<void(int, const MatrixC&)> walk = [&](int pos,
                                                      const MatrixC& chain) {
    if (pos == k) {
      lam[k] = lam[0];
      acc += integral(d, p, k, lam) * (chain * b[k - 1]).trace();
      return;
    }
    for (int c = 0; c < nc; ++c) {
      lam[pos] = sd.eigenvalues[c];
      MatrixC next = (pos == 0) ? sd.projectors[c]
                                : MatrixC(chain * b[pos - 1] * sd.projectors[c]);
      walk(pos + 1, next);
    }
  };
  walk(0, MatrixC());
  return acc;
}

}  // namespace heattrace
