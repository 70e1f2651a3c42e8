#include "heattrace/coefficient_engine.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "heattrace/moment_tensors.hpp"
#include "heattrace/symbol_engine.hpp"
#include "heattrace/tensor_algebra.hpp"

namespace heattrace {
namespace {

bool nearly_symmetric(const MatrixR& a) {
  return (a - a.transpose()).norm() <= 1e-12 * (1.0 + a.norm());
}

bool nearly_hermitian(const MatrixC& a) {
  return (a - a.adjoint()).norm() <= 1e-10 * (1.0 + a.norm());
}

bool nearly_skew(const MatrixC& a) {
  return (a + a.adjoint()).norm() <= 1e-10 * (1.0 + a.norm());
}

void check_jet(const PointJet& jet) {
  const int d = jet.d;
  require(d >= 1, "PointJet: dimension must be positive");
  require(jet.g_inv.rows() == d && jet.g_inv.cols() == d,
          "PointJet: inverse metric must be d x d");
  require(nearly_symmetric(jet.g_inv),
          "PointJet: inverse metric must be symmetric");
  require(static_cast<int>(jet.dg_inv.size()) == d,
          "PointJet: dg_inv needs one entry per direction");
  require(static_cast<int>(jet.ddg_inv.size()) == d,
          "PointJet: ddg_inv needs one row per direction");
  for (int r = 0; r < d; ++r) {
    require(jet.dg_inv[r].rows() == d && jet.dg_inv[r].cols() == d &&
                nearly_symmetric(jet.dg_inv[r]),
            "PointJet: dg_inv entries must be symmetric d x d");
    require(static_cast<int>(jet.ddg_inv[r].size()) == d,
            "PointJet: ddg_inv rows need one entry per direction");
    for (int s = 0; s < d; ++s) {
      require(jet.ddg_inv[r][s].rows() == d && jet.ddg_inv[r][s].cols() == d &&
                  nearly_symmetric(jet.ddg_inv[r][s]),
              "PointJet: ddg_inv entries must be symmetric d x d");
      require((jet.ddg_inv[r][s] - jet.ddg_inv[s][r]).norm() <=
                  1e-12 * (1.0 + jet.ddg_inv[r][s].norm()),
              "PointJet: ddg_inv must be symmetric in the derivative pair");
    }
  }
  Eigen::SelfAdjointEigenSolver<MatrixR> es(jet.g_inv);
  require(es.eigenvalues().minCoeff() > 0.0,
          "PointJet: inverse metric must be positive definite");
}

void check_square(const MatrixC& a, int n, const char* what) {
  require(a.rows() == n && a.cols() == n, std::string(what) +
                                              ": expected a square matrix of "
                                              "the fibre dimension");
}

void check_op(const PointJet& jet, const OperatorCoefficients& op) {
  const int d = jet.d;
  const int n = static_cast<int>(op.u.rows());
  require(n >= 1, "OperatorCoefficients: empty fibre");
  check_square(op.u, n, "u");
  require(static_cast<int>(op.du.size()) == d &&
              static_cast<int>(op.ddu.size()) == d &&
              static_cast<int>(op.v.size()) == d &&
              static_cast<int>(op.dv.size()) == d,
          "OperatorCoefficients: jet containers must have one entry per "
          "direction");
  for (int r = 0; r < d; ++r) {
    check_square(op.du[r], n, "du");
    check_square(op.v[r], n, "v");
    require(static_cast<int>(op.ddu[r].size()) == d &&
                static_cast<int>(op.dv[r].size()) == d,
            "OperatorCoefficients: inner jet containers must have one entry "
            "per direction");
    for (int s = 0; s < d; ++s) {
      check_square(op.ddu[r][s], n, "ddu");
      check_square(op.dv[r][s], n, "dv");
      require((op.ddu[r][s] - op.ddu[s][r]).norm() <=
                  1e-12 * (1.0 + op.ddu[r][s].norm()),
              "OperatorCoefficients: ddu must be symmetric in the derivative "
              "pair");
    }
  }
  check_square(op.w, n, "w");
}

void check_inv(const PointJet& jet, const InvariantCoefficients& inv) {
  const int d = jet.d;
  const int n = static_cast<int>(inv.u.rows());
  require(n >= 1, "InvariantCoefficients: empty fibre");
  check_square(inv.u, n, "u");
  check_square(inv.q, n, "q");
  require(static_cast<int>(inv.du.size()) == d &&
              static_cast<int>(inv.ddu.size()) == d &&
              static_cast<int>(inv.A.size()) == d &&
              static_cast<int>(inv.dA.size()) == d &&
              static_cast<int>(inv.p.size()) == d &&
              static_cast<int>(inv.dp.size()) == d,
          "InvariantCoefficients: jet containers must have one entry per "
          "direction");
  for (int r = 0; r < d; ++r) {
    check_square(inv.du[r], n, "du");
    check_square(inv.A[r], n, "A");
    check_square(inv.p[r], n, "p");
    require(static_cast<int>(inv.ddu[r].size()) == d &&
                static_cast<int>(inv.dA[r].size()) == d &&
                static_cast<int>(inv.dp[r].size()) == d,
            "InvariantCoefficients: inner jet containers must have one entry "
            "per direction");
    for (int s = 0; s < d; ++s) {
      check_square(inv.ddu[r][s], n, "ddu");
      check_square(inv.dA[r][s], n, "dA");
      check_square(inv.dp[r][s], n, "dp");
    }
  }
}

// S_r = g_{ab} d_r g^{ab}; the volume-weight derivative is -S_r / 2.
VectorR metric_trace_derivs(const PointJet& jet, const MatrixR& g_lower) {
  VectorR s = VectorR::Zero(jet.d);
  for (int r = 0; r < jet.d; ++r) {
    s(r) = (g_lower.array() * jet.dg_inv[r].array()).sum();
  }
  return s;
}

// d_t S_r.
MatrixR metric_trace_derivs2(const PointJet& jet, const MatrixR& g_lower,
                             const std::vector<MatrixR>& dlo) {
  MatrixR ds = MatrixR::Zero(jet.d, jet.d);
  for (int t = 0; t < jet.d; ++t) {
    for (int r = 0; r < jet.d; ++r) {
      ds(t, r) = (dlo[t].array() * jet.dg_inv[r].array()).sum() +
                 (g_lower.array() * jet.ddg_inv[t][r].array()).sum();
    }
  }
  return ds;
}

const std::vector<symbols::Term>& integrand_terms() {
  static const std::vector<symbols::Term> terms =
      symbols::specialize_scalar_metric(
          symbols::push_derivatives_all(symbols::expand_volterra_order1()));
  return terms;
}

}  // namespace

MatrixR metric_lower(const MatrixR& g_inv) {
  require(g_inv.rows() == g_inv.cols() && g_inv.rows() >= 1,
          "metric_lower: expected a square matrix");
  require(nearly_symmetric(g_inv), "metric_lower: expected a symmetric matrix");
  Eigen::SelfAdjointEigenSolver<MatrixR> es(g_inv);
  require(es.eigenvalues().minCoeff() > 0.0,
          "metric_lower: expected a positive definite matrix");
  return g_inv.inverse();
}

std::vector<MatrixR> metric_lower_derivs(const PointJet& jet) {
  check_jet(jet);
  const MatrixR g_lower = metric_lower(jet.g_inv);
  std::vector<MatrixR> dlo(jet.d);
  for (int r = 0; r < jet.d; ++r) {
    dlo[r] = -g_lower * jet.dg_inv[r] * g_lower;
  }
  return dlo;
}

std::vector<MatrixR> christoffel(const PointJet& jet) {
  check_jet(jet);
  const auto dlo = metric_lower_derivs(jet);
  const int d = jet.d;
  std::vector<MatrixR> gam(d, MatrixR::Zero(d, d));
  for (int r = 0; r < d; ++r) {
    for (int m = 0; m < d; ++m) {
      for (int n = 0; n < d; ++n) {
        double acc = 0.0;
        for (int s = 0; s < d; ++s) {
          acc += jet.g_inv(r, s) *
                 (dlo[m](s, n) + dlo[n](s, m) - dlo[s](m, n));
        }
        gam[r](m, n) = 0.5 * acc;
      }
    }
  }
  return gam;
}

std::vector<std::vector<MatrixR>> christoffel_derivs(const PointJet& jet) {
  check_jet(jet);
  const int d = jet.d;
  const MatrixR g_lower = metric_lower(jet.g_inv);
  const auto dlo = metric_lower_derivs(jet);
  // d_t d_m g_lower.
  std::vector<std::vector<MatrixR>> ddlo(d, std::vector<MatrixR>(d));
  for (int t = 0; t < d; ++t) {
    for (int m = 0; m < d; ++m) {
      ddlo[t][m] = -(dlo[t] * jet.dg_inv[m] * g_lower +
                     g_lower * jet.ddg_inv[t][m] * g_lower +
                     g_lower * jet.dg_inv[m] * dlo[t]);
    }
  }
  std::vector<std::vector<MatrixR>> dgam(d,
                                         std::vector<MatrixR>(d, MatrixR::Zero(d, d)));
  for (int t = 0; t < d; ++t) {
    for (int r = 0; r < d; ++r) {
      for (int m = 0; m < d; ++m) {
        for (int n = 0; n < d; ++n) {
          double acc = 0.0;
          for (int s = 0; s < d; ++s) {
            acc += jet.dg_inv[t](r, s) *
                       (dlo[m](s, n) + dlo[n](s, m) - dlo[s](m, n)) +
                   jet.g_inv(r, s) * (ddlo[t][m](s, n) + ddlo[t][n](s, m) -
                                      ddlo[t][s](m, n));
          }
          dgam[t][r](m, n) = 0.5 * acc;
        }
      }
    }
  }
  return dgam;
}

double scalar_curvature(const PointJet& jet) {
  const int d = jet.d;
  const auto gam = christoffel(jet);
  const auto dgam = christoffel_derivs(jet);
  MatrixR ricci = MatrixR::Zero(d, d);
  for (int b = 0; b < d; ++b) {
    for (int n = 0; n < d; ++n) {
      double acc = 0.0;
      for (int r = 0; r < d; ++r) {
        acc += dgam[r][r](b, n) - dgam[n][r](b, r);
        for (int s = 0; s < d; ++s) {
          acc += gam[r](r, s) * gam[s](b, n) - gam[r](n, s) * gam[s](b, r);
        }
      }
      ricci(b, n) = acc;
    }
  }
  return (jet.g_inv.array() * ricci.array()).sum();
}

double a0_local(const PointJet& jet, const MatrixC& u) {
  check_jet(jet);
  const MatrixR g_lower = metric_lower(jet.g_inv);
  const double gd = gaussian_normalization(g_lower, jet.d);
  const SpectralData sd = spectral_decompose(u);
  double tr = 0.0;
  for (size_t j = 0; j < sd.eigenvalues.size(); ++j) {
    tr += std::pow(sd.eigenvalues[j], -0.5 * jet.d) *
          sd.projectors[j].trace().real();
  }
  return gd * tr;
}

Complex a1_local_raw(const PointJet& jet, const OperatorCoefficients& op) {
  check_jet(jet);
  check_op(jet, op);
  require(jet.d == 4, "a1_local_raw: this contraction formula is specific to "
                      "dimension 4");
  const int d = 4;
  const MatrixR g_lower = metric_lower(jet.g_inv);
  const auto& dg = jet.dg_inv;
  const auto& ddg = jet.ddg_inv;

  double a1_sum = 0.0, a2 = 0.0, a3 = 0.0, a4 = 0.0, a5 = 0.0, a6 = 0.0,
         a7 = 0.0;
  for (int m = 0; m < d; ++m) {
    for (int n = 0; n < d; ++n) {
      a1_sum += ddg[m][n](m, n);
      for (int r = 0; r < d; ++r) {
        for (int s = 0; s < d; ++s) {
          a2 += jet.g_inv(m, n) * g_lower(r, s) * ddg[m][n](r, s);
          a5 += g_lower(r, s) * dg[m](m, n) * dg[n](r, s);
          a6 += g_lower(r, s) * dg[m](n, r) * dg[n](m, s);
          a7 += g_lower(r, s) * dg[m](m, r) * dg[n](n, s);
          for (int a = 0; a < d; ++a) {
            for (int b = 0; b < d; ++b) {
              a3 += jet.g_inv(m, n) * g_lower(r, s) * g_lower(a, b) *
                    dg[m](r, s) * dg[n](a, b);
              a4 += jet.g_inv(m, n) * g_lower(r, s) * g_lower(a, b) *
                    dg[m](r, a) * dg[n](s, b);
            }
          }
        }
      }
    }
  }
  const double alpha = a1_sum / 3.0 - a2 / 12.0 + a3 / 48.0 + a4 / 24.0 -
                       a5 / 12.0 + a6 / 12.0 - a7 / 4.0;

  const MatrixC uinv = op.u.inverse();
  MatrixC ell = op.w;
  for (int m = 0; m < d; ++m) ell -= 0.5 * op.dv[m][m];
  for (int m = 0; m < d; ++m) {
    for (int n = 0; n < d; ++n) {
      double c = 0.0;
      for (int r = 0; r < d; ++r) c += dg[r](r, n);
      ell += 0.5 * g_lower(m, n) * c * op.v[m];
      ell -= 0.25 * g_lower(m, n) * op.v[m] * uinv * op.v[n];
    }
    ell += 0.5 * op.du[m] * uinv * op.v[m];
  }

  const double g4 = gaussian_normalization(g_lower, 4);
  return g4 * (alpha * uinv.trace() + (uinv * uinv * ell).trace());
}

Complex a1_local_pipeline(const PointJet& jet, const OperatorCoefficients& op) {
  check_jet(jet);
  check_op(jet, op);
  const int d = jet.d;
  const MatrixR g_lower = metric_lower(jet.g_inv);
  const double gd = gaussian_normalization(g_lower, d);
  const auto& terms = integrand_terms();

  std::map<int, MomentTensor> moments;
  for (const auto& t : terms) {
    if (!moments.count(t.p())) moments.emplace(t.p(), moment_tensor(g_lower, t.p()));
  }

  struct WordData {
    double weight = 0.0;
    int p = 0;
    int k = 0;
    std::vector<MatrixC> word;
  };
  std::map<std::vector<int>, WordData> acc;
  std::vector<int> key;

  for (const auto& t : terms) {
    // Distinct summation indices of this term.
    std::vector<int> ids;
    auto note = [&](int id) { ids.push_back(id); };
    for (const auto& s : t.slots) {
      for (int i : s.upper) note(i);
      for (int i : s.derivs) note(i);
    }
    for (const auto& f : t.factors) {
      for (int i : f.derivs) note(i);
      note(f.upper[0]);
      note(f.upper[1]);
    }
    for (int i : t.xi) note(i);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    const int m = static_cast<int>(ids.size());
    std::vector<int> lookup(t.next_id > 0 ? t.next_id : 1, -1);
    for (int i = 0; i < m; ++i) lookup[ids[i]] = i;

    const MomentTensor& moment = moments.at(t.p());
    std::vector<int> asg(std::max(m, 1), 0);
    std::vector<int> xi_vals(t.xi.size());
    const double coeff = t.coeff.to_double();

    bool done = false;
    while (!done) {
      double prod = coeff;
      for (const auto& f : t.factors) {
        const int a = asg[lookup[f.upper[0]]];
        const int b = asg[lookup[f.upper[1]]];
        double val;
        if (f.derivs.empty()) {
          val = jet.g_inv(a, b);
        } else if (f.derivs.size() == 1) {
          val = jet.dg_inv[asg[lookup[f.derivs[0]]]](a, b);
        } else {
          val = jet.ddg_inv[asg[lookup[f.derivs[0]]]]
                           [asg[lookup[f.derivs[1]]]](a, b);
        }
        prod *= val;
        if (prod == 0.0) break;
      }
      if (prod != 0.0 && !t.xi.empty()) {
        for (size_t j = 0; j < t.xi.size(); ++j) {
          xi_vals[j] = asg[lookup[t.xi[j]]];
        }
        prod *= moment.at(xi_vals);
      }
      if (prod != 0.0) {
        key.clear();
        key.push_back(t.p());
        key.push_back(t.k());
        for (const auto& s : t.slots) {
          std::vector<int> dv;
          for (int i : s.derivs) dv.push_back(asg[lookup[i]]);
          std::sort(dv.begin(), dv.end());
          switch (s.atom) {
            case symbols::Atom::ScalarU:
              key.push_back(0);
              break;
            case symbols::Atom::First:
              key.push_back(1);
              key.push_back(asg[lookup[s.upper[0]]]);
              break;
            case symbols::Atom::Zeroth:
              key.push_back(2);
              break;
            default:
              throw DomainError(
                  "a1_local_pipeline: integrand contains an unexpanded atom");
          }
          key.push_back(static_cast<int>(dv.size()));
          for (int i : dv) key.push_back(i);
        }
        WordData& wd = acc[key];
        if (wd.word.empty()) {
          wd.p = t.p();
          wd.k = t.k();
          for (const auto& s : t.slots) {
            std::vector<int> dv;
            for (int i : s.derivs) dv.push_back(asg[lookup[i]]);
            std::sort(dv.begin(), dv.end());
            switch (s.atom) {
              case symbols::Atom::ScalarU:
                if (dv.empty()) {
                  wd.word.push_back(op.u);
                } else if (dv.size() == 1) {
                  wd.word.push_back(op.du[dv[0]]);
                } else {
                  wd.word.push_back(op.ddu[dv[0]][dv[1]]);
                }
                break;
              case symbols::Atom::First: {
                const int a = asg[lookup[s.upper[0]]];
                if (dv.empty()) {
                  wd.word.push_back(op.v[a]);
                } else {
                  wd.word.push_back(op.dv[dv[0]][a]);
                }
                break;
              }
              case symbols::Atom::Zeroth:
                wd.word.push_back(op.w);
                break;
              default:
                throw DomainError(
                    "a1_local_pipeline: integrand contains an unexpanded "
                    "atom");
            }
          }
        }
        wd.weight += prod;
      }

      int q = m - 1;
      while (q >= 0 && ++asg[q] == d) {
        asg[q] = 0;
        --q;
      }
      if (q < 0) done = true;
    }
  }

  Complex total(0.0, 0.0);
  for (const auto& [k, wd] : acc) {
    if (wd.weight == 0.0) continue;
    total += wd.weight * apply_I_reduced(d, wd.p, wd.k, op.u, wd.word);
  }
  return gd * total;
}

OperatorCoefficients change_variables(const PointJet& jet,
                                      const InvariantCoefficients& inv) {
  check_jet(jet);
  check_inv(jet, inv);
  const int d = jet.d;
  const MatrixR g_lower = metric_lower(jet.g_inv);
  const auto dlo = metric_lower_derivs(jet);
  const VectorR S = metric_trace_derivs(jet, g_lower);
  const MatrixR dS = metric_trace_derivs2(jet, g_lower, dlo);

  // J^m = -1/2 g^{mn} S_n + d_n g^{mn}  and its first derivatives.
  VectorR J = VectorR::Zero(d);
  MatrixR dJ = MatrixR::Zero(d, d);  // dJ(r, m) = d_r J^m
  for (int m = 0; m < d; ++m) {
    for (int n = 0; n < d; ++n) {
      J(m) += -0.5 * jet.g_inv(m, n) * S(n) + jet.dg_inv[n](m, n);
      for (int r = 0; r < d; ++r) {
        dJ(r, m) += -0.5 * (jet.dg_inv[r](m, n) * S(n) +
                            jet.g_inv(m, n) * dS(r, n)) +
                    jet.ddg_inv[r][n](m, n);
      }
    }
  }

  OperatorCoefficients op;
  op.u = inv.u;
  op.du = inv.du;
  op.ddu = inv.ddu;

  const int nfib = static_cast<int>(inv.u.rows());
  op.v.assign(d, MatrixC::Zero(nfib, nfib));
  op.dv.assign(d, std::vector<MatrixC>(d, MatrixC::Zero(nfib, nfib)));
  for (int m = 0; m < d; ++m) {
    op.v[m] = J(m) * inv.u + inv.p[m];
    for (int n = 0; n < d; ++n) {
      op.v[m] += jet.g_inv(m, n) * (inv.du[n] + inv.u * inv.A[n] +
                                    inv.A[n] * inv.u);
    }
  }
  for (int r = 0; r < d; ++r) {
    for (int m = 0; m < d; ++m) {
      MatrixC acc = dJ(r, m) * inv.u + J(m) * inv.du[r] + inv.dp[r][m];
      for (int n = 0; n < d; ++n) {
        acc += jet.dg_inv[r](m, n) *
               (inv.du[n] + inv.u * inv.A[n] + inv.A[n] * inv.u);
        acc += jet.g_inv(m, n) *
               (inv.ddu[r][n] + inv.du[r] * inv.A[n] + inv.u * inv.dA[r][n] +
                inv.dA[r][n] * inv.u + inv.A[n] * inv.du[r]);
      }
      op.dv[r][m] = acc;
    }
  }

  MatrixC w = inv.q;
  for (int m = 0; m < d; ++m) {
    w += J(m) * inv.u * inv.A[m] + inv.p[m] * inv.A[m];
    for (int n = 0; n < d; ++n) {
      w += jet.g_inv(m, n) * (inv.du[n] * inv.A[m] + inv.u * inv.dA[m][n] +
                              inv.A[m] * inv.u * inv.A[n]);
    }
  }
  op.w = w;
  return op;
}

Complex a1_local_invariant(const PointJet& jet,
                           const InvariantCoefficients& inv) {
  check_jet(jet);
  check_inv(jet, inv);
  require(jet.d == 4, "a1_local_invariant: this covariant formula is specific "
                      "to dimension 4");
  const int d = 4;
  const MatrixR g_lower = metric_lower(jet.g_inv);
  const auto gam = christoffel(jet);
  const double curv = scalar_curvature(jet);
  const MatrixC uinv = inv.u.inverse();
  const MatrixC uinv2 = uinv * uinv;
  const int nfib = static_cast<int>(inv.u.rows());

  // Covariant derivatives of u (the connection acts by commutator).
  std::vector<MatrixC> Du(d);
  for (int m = 0; m < d; ++m) {
    Du[m] = inv.du[m] + inv.A[m] * inv.u - inv.u * inv.A[m];
  }
  std::vector<std::vector<MatrixC>> DDu(d, std::vector<MatrixC>(d));
  for (int m = 0; m < d; ++m) {
    for (int n = 0; n < d; ++n) {
      MatrixC dm_Dnu = inv.ddu[m][n] + inv.dA[m][n] * inv.u -
                       inv.u * inv.dA[m][n] + inv.A[n] * inv.du[m] -
                       inv.du[m] * inv.A[n];
      MatrixC acc = dm_Dnu + inv.A[m] * Du[n] - Du[n] * inv.A[m];
      for (int r = 0; r < d; ++r) acc -= gam[r](m, n) * Du[r];
      DDu[m][n] = acc;
    }
  }
  // Contracted covariant divergence of p.
  MatrixC Dp = MatrixC::Zero(nfib, nfib);
  for (int m = 0; m < d; ++m) {
    Dp += inv.dp[m][m] + inv.A[m] * inv.p[m] - inv.p[m] * inv.A[m];
    for (int n = 0; n < d; ++n) Dp += gam[m](m, n) * inv.p[n];
  }

  Complex total = (curv / 6.0) * uinv.trace() + (uinv2 * inv.q).trace();
  for (int m = 0; m < d; ++m) {
    for (int n = 0; n < d; ++n) {
      total -= 0.5 * jet.g_inv(m, n) * (uinv2 * DDu[m][n]).trace();
    }
  }
  total -= 0.5 * (uinv2 * Dp).trace();
  for (int m = 0; m < d; ++m) {
    for (int n = 0; n < d; ++n) {
      MatrixC left = Du[m];
      MatrixC right = Du[n];
      for (int r = 0; r < d; ++r) {
        left -= g_lower(m, r) * inv.p[r];
        right += g_lower(n, r) * inv.p[r];
      }
      total += 0.25 * jet.g_inv(m, n) *
               (uinv2 * left * uinv * right).trace();
    }
  }
  const double g4 = gaussian_normalization(g_lower, 4);
  return g4 * total;
}

std::vector<MatrixC> scalar_symbol_connection(const PointJet& jet, double f,
                                              const VectorR& df,
                                              const std::vector<MatrixC>& v) {
  check_jet(jet);
  const int d = jet.d;
  require(f > 0.0, "scalar_symbol_connection: the principal scale must be "
                   "positive");
  require(df.size() == d && static_cast<int>(v.size()) == d,
          "scalar_symbol_connection: jet containers must have one entry per "
          "direction");
  const int nfib = static_cast<int>(v[0].rows());
  const MatrixR g_lower = metric_lower(jet.g_inv);
  const VectorR S = metric_trace_derivs(jet, g_lower);

  std::vector<MatrixC> A(d, MatrixC::Zero(nfib, nfib));
  for (int m = 0; m < d; ++m) {
    check_square(v[m], nfib, "v");
    MatrixC acc = MatrixC::Zero(nfib, nfib);
    double scal = 0.5 * S(m) - df(m) / f;
    for (int n = 0; n < d; ++n) {
      acc += g_lower(m, n) * v[n] / f;
      for (int r = 0; r < d; ++r) scal -= g_lower(m, n) * jet.dg_inv[r](r, n);
    }
    A[m] = 0.5 * (acc + scal * MatrixC::Identity(nfib, nfib));
  }
  return A;
}

Complex a1_scalar_symbol(const PointJet& jet, double f, const VectorR& df,
                         const MatrixR& ddf, const MatrixC& q) {
  check_jet(jet);
  require(jet.d == 4, "a1_scalar_symbol: this formula is specific to "
                      "dimension 4");
  const int d = 4;
  require(f > 0.0, "a1_scalar_symbol: the principal scale must be positive");
  require(df.size() == d && ddf.rows() == d && ddf.cols() == d,
          "a1_scalar_symbol: jets of the scale must be d-dimensional");
  const int nfib = static_cast<int>(q.rows());
  require(q.rows() == q.cols() && nfib >= 1,
          "a1_scalar_symbol: q must be square");
  const MatrixR g_lower = metric_lower(jet.g_inv);
  const auto gam = christoffel(jet);
  const double curv = scalar_curvature(jet);

  double hessian = 0.0;  // g^{mn} (d_m d_n f - Gamma^r_{mn} d_r f)
  double grad2 = 0.0;    // g^{mn} (d_m f)(d_n f)
  for (int m = 0; m < d; ++m) {
    for (int n = 0; n < d; ++n) {
      double cov = ddf(m, n);
      for (int r = 0; r < d; ++r) cov -= gam[r](m, n) * df(r);
      hessian += jet.g_inv(m, n) * cov;
      grad2 += jet.g_inv(m, n) * df(m) * df(n);
    }
  }
  const double g4 = gaussian_normalization(g_lower, 4);
  const Complex trq = q.trace();
  return g4 * (nfib * curv / (6.0 * f) + trq / (f * f) -
               0.5 * nfib * hessian / (f * f) +
               0.25 * nfib * grad2 / (f * f * f));
}

double a0_projector(const PointJet& jet, double zeta) {
  check_jet(jet);
  const int d = jet.d;
  require(1.0 + zeta > 0.0,
          "a0_projector: the anisotropy must keep the symbol elliptic");
  // The anisotropic part of the symbol along a covector s is the g-orthogonal
  // projector onto s^sharp; verify idempotency on a direction grid.
  auto proj = [&](const VectorR& s) {
    const VectorR up = jet.g_inv * s;
    const double norm2 = s.dot(up);
    require(norm2 > 0.0, "a0_projector: degenerate direction");
    return MatrixR((up * s.transpose()) / norm2);
  };
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      VectorR s = VectorR::Zero(d);
      s(i) += 1.0;
      s(j) += 1.0;
      const MatrixR P = proj(s);
      if ((P * P - P).norm() > 1e-8) {
        throw CrossCheckError(
            "a0_projector: anisotropic symbol part failed the projector "
            "property");
      }
    }
  }
  const MatrixR g_lower = metric_lower(jet.g_inv);
  const double gd = gaussian_normalization(g_lower, d);
  return gd * (static_cast<double>(d - 1) + std::pow(1.0 + zeta, -0.5 * d));
}

OperatorCoefficients selfadjoint_operator(const PointJet& jet,
                                          const SelfAdjointData& s) {
  check_jet(jet);
  const int d = jet.d;
  const int nfib = static_cast<int>(s.u.rows());
  require(nfib >= 1, "selfadjoint_operator: empty fibre");
  check_square(s.u, nfib, "u");
  check_square(s.w_herm, nfib, "w_herm");
  require(static_cast<int>(s.du.size()) == d &&
              static_cast<int>(s.ddu.size()) == d &&
              static_cast<int>(s.v_skew.size()) == d &&
              static_cast<int>(s.dv_skew.size()) == d,
          "selfadjoint_operator: jet containers must have one entry per "
          "direction");
  require(nearly_hermitian(s.u),
          "selfadjoint_operator: u must be Hermitian");
  require(nearly_hermitian(s.w_herm),
          "selfadjoint_operator: w_herm must be Hermitian");
  for (int r = 0; r < d; ++r) {
    check_square(s.du[r], nfib, "du");
    check_square(s.v_skew[r], nfib, "v_skew");
    require(nearly_hermitian(s.du[r]),
            "selfadjoint_operator: du must be Hermitian");
    require(nearly_skew(s.v_skew[r]),
            "selfadjoint_operator: v_skew must be skew-Hermitian");
    require(static_cast<int>(s.ddu[r].size()) == d &&
                static_cast<int>(s.dv_skew[r].size()) == d,
            "selfadjoint_operator: inner jet containers must have one entry "
            "per direction");
    for (int t = 0; t < d; ++t) {
      check_square(s.ddu[r][t], nfib, "ddu");
      check_square(s.dv_skew[r][t], nfib, "dv_skew");
      require(nearly_hermitian(s.ddu[r][t]),
              "selfadjoint_operator: ddu must be Hermitian");
      require(nearly_skew(s.dv_skew[r][t]),
              "selfadjoint_operator: dv_skew must be skew-Hermitian");
    }
  }

  const MatrixR g_lower = metric_lower(jet.g_inv);
  const auto dlo = metric_lower_derivs(jet);
  const VectorR S = metric_trace_derivs(jet, g_lower);
  const MatrixR dS = metric_trace_derivs2(jet, g_lower, dlo);

  OperatorCoefficients op;
  op.u = s.u;
  op.du = s.du;
  op.ddu = s.ddu;
  op.v.assign(d, MatrixC::Zero(nfib, nfib));
  op.dv.assign(d, std::vector<MatrixC>(d, MatrixC::Zero(nfib, nfib)));

  // L_n = d_n log |g|^{1/2} = -S_n / 2.
  for (int m = 0; m < d; ++m) {
    MatrixC acc = s.v_skew[m];
    for (int n = 0; n < d; ++n) {
      acc += (-0.5 * S(n)) * jet.g_inv(m, n) * s.u +
             jet.dg_inv[n](m, n) * s.u + jet.g_inv(m, n) * s.du[n];
    }
    op.v[m] = acc;
  }
  for (int r = 0; r < d; ++r) {
    for (int m = 0; m < d; ++m) {
      MatrixC acc = s.dv_skew[r][m];
      for (int n = 0; n < d; ++n) {
        acc += (-0.5 * dS(r, n)) * jet.g_inv(m, n) * s.u +
               (-0.5 * S(n)) * (jet.dg_inv[r](m, n) * s.u +
                                jet.g_inv(m, n) * s.du[r]) +
               jet.ddg_inv[r][n](m, n) * s.u + jet.dg_inv[n](m, n) * s.du[r] +
               jet.dg_inv[r](m, n) * s.du[n] + jet.g_inv(m, n) * s.ddu[r][n];
      }
      op.dv[r][m] = acc;
    }
  }

  MatrixC w = s.w_herm;
  for (int m = 0; m < d; ++m) {
    w += 0.5 * (s.dv_skew[m][m] + (-0.5 * S(m)) * s.v_skew[m]);
  }
  op.w = w;
  return op;
}

OperatorCoefficients gauge_transform(const PointJet& jet,
                                     const OperatorCoefficients& op,
                                     const GaugeJet& gj) {
  check_jet(jet);
  check_op(jet, op);
  const int d = jet.d;
  const int nfib = static_cast<int>(op.u.rows());
  check_square(gj.gamma, nfib, "gamma");
  require(static_cast<int>(gj.dgamma.size()) == d &&
              static_cast<int>(gj.ddgamma.size()) == d,
          "gauge_transform: jet containers must have one entry per direction");
  for (int r = 0; r < d; ++r) {
    check_square(gj.dgamma[r], nfib, "dgamma");
    require(static_cast<int>(gj.ddgamma[r].size()) == d,
            "gauge_transform: inner jet containers must have one entry per "
            "direction");
    for (int t = 0; t < d; ++t) {
      check_square(gj.ddgamma[r][t], nfib, "ddgamma");
      require((gj.ddgamma[r][t] - gj.ddgamma[t][r]).norm() <=
                  1e-12 * (1.0 + gj.ddgamma[r][t].norm()),
              "gauge_transform: ddgamma must be symmetric in the derivative "
              "pair");
    }
  }
  Eigen::FullPivLU<MatrixC> lu(gj.gamma);
  require(lu.isInvertible(), "gauge_transform: gamma must be invertible");
  const MatrixC gi = lu.inverse();

  std::vector<MatrixC> dgi(d);
  for (int r = 0; r < d; ++r) dgi[r] = -gi * gj.dgamma[r] * gi;
  std::vector<std::vector<MatrixC>> ddgi(d, std::vector<MatrixC>(d));
  for (int r = 0; r < d; ++r) {
    for (int t = 0; t < d; ++t) {
      ddgi[r][t] = -(dgi[r] * gj.dgamma[t] * gi + gi * gj.ddgamma[r][t] * gi +
                     gi * gj.dgamma[t] * dgi[r]);
    }
  }

  const MatrixC& g = gj.gamma;
  OperatorCoefficients out;
  out.u = g * op.u * gi;
  out.du.resize(d);
  out.ddu.assign(d, std::vector<MatrixC>(d));
  for (int r = 0; r < d; ++r) {
    out.du[r] = gj.dgamma[r] * op.u * gi + g * op.du[r] * gi +
                g * op.u * dgi[r];
  }
  for (int r = 0; r < d; ++r) {
    for (int t = 0; t < d; ++t) {
      out.ddu[r][t] = gj.ddgamma[r][t] * op.u * gi +
                      gj.dgamma[r] * op.du[t] * gi +
                      gj.dgamma[r] * op.u * dgi[t] +
                      gj.dgamma[t] * op.du[r] * gi + g * op.ddu[r][t] * gi +
                      g * op.du[r] * dgi[t] + gj.dgamma[t] * op.u * dgi[r] +
                      g * op.du[t] * dgi[r] + g * op.u * ddgi[r][t];
    }
  }

  out.v.assign(d, MatrixC::Zero(nfib, nfib));
  out.dv.assign(d, std::vector<MatrixC>(d, MatrixC::Zero(nfib, nfib)));
  for (int m = 0; m < d; ++m) {
    MatrixC acc = g * op.v[m] * gi;
    for (int n = 0; n < d; ++n) {
      acc += 2.0 * jet.g_inv(m, n) * g * op.u * dgi[n];
    }
    out.v[m] = acc;
  }
  for (int r = 0; r < d; ++r) {
    for (int m = 0; m < d; ++m) {
      MatrixC acc = gj.dgamma[r] * op.v[m] * gi + g * op.dv[r][m] * gi +
                    g * op.v[m] * dgi[r];
      for (int n = 0; n < d; ++n) {
        acc += 2.0 * jet.dg_inv[r](m, n) * g * op.u * dgi[n] +
               2.0 * jet.g_inv(m, n) *
                   (gj.dgamma[r] * op.u * dgi[n] + g * op.du[r] * dgi[n] +
                    g * op.u * ddgi[n][r]);
      }
      out.dv[r][m] = acc;
    }
  }

  MatrixC w = g * op.w * gi;
  for (int m = 0; m < d; ++m) {
    w += g * op.v[m] * dgi[m];
    for (int n = 0; n < d; ++n) {
      w += jet.g_inv(m, n) * g * op.u * ddgi[m][n];
    }
  }
  out.w = w;
  return out;
}

}  // namespace heattrace
