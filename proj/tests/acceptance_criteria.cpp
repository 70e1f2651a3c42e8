// Acceptance gate: ten end-to-end checks covering every module, one
// PASS/FAIL line each with the measured quantity and its threshold.  The
// process exits nonzero if any check fails.  Runtime-limited checks include
// their elapsed time in the pass condition.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "heattrace/coefficient_engine.hpp"
#include "heattrace/moment_tensors.hpp"
#include "heattrace/simplex_integrals.hpp"
#include "heattrace/spectral_validation.hpp"
#include "heattrace/symbol_engine.hpp"
#include "heattrace/tensor_algebra.hpp"

using namespace heattrace;

namespace {

int failures = 0;

double now() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void report(int index, const std::string& name, bool pass,
            const std::string& detail) {
  if (!pass) ++failures;
  std::printf("[%2d] %s  %s: %s\n", index, pass ? "PASS" : "FAIL",
              name.c_str(), detail.c_str());
  std::fflush(stdout);
}

template <typename Body>
void gate(int index, const std::string& name, Body&& body) {
  try {
    const auto [pass, detail] = body();
    report(index, name, pass, detail);
  } catch (const std::exception& error) {
    report(index, name, false, std::string("exception: ") + error.what());
  }
}

std::string fmt(const char* format, ...) {
  char buffer[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buffer, sizeof(buffer), format, args);
  va_end(args);
  return buffer;
}

// ------------------------------------------------------------ generators ---

MatrixC random_complex(std::mt19937& rng, int n, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  MatrixC m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = Complex(dist(rng), dist(rng));
  return m;
}

MatrixC random_hpd(std::mt19937& rng, int n, double scale = 0.4) {
  MatrixC m = random_complex(rng, n, scale);
  return MatrixC::Identity(n, n) + m * m.adjoint();
}

MatrixC random_hermitian(std::mt19937& rng, int n, double scale = 0.3) {
  MatrixC m = random_complex(rng, n, scale);
  return m + m.adjoint();
}

PointJet flat_jet(int d) {
  PointJet jet;
  jet.d = d;
  jet.g_inv = MatrixR::Identity(d, d);
  jet.dg_inv.assign(d, MatrixR::Zero(d, d));
  jet.ddg_inv.assign(d, std::vector<MatrixR>(d, MatrixR::Zero(d, d)));
  return jet;
}

PointJet random_jet(std::mt19937& rng, int d, double curvature = 0.3) {
  std::uniform_real_distribution<double> dist(-curvature, curvature);
  PointJet jet = flat_jet(d);
  MatrixR B(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) B(i, j) = dist(rng);
  jet.g_inv = MatrixR::Identity(d, d) + B * B.transpose();
  for (int r = 0; r < d; ++r)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j)
        jet.dg_inv[r](i, j) = jet.dg_inv[r](j, i) = dist(rng);
  for (int r = 0; r < d; ++r)
    for (int s = r; s < d; ++s) {
      MatrixR S(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) S(i, j) = S(j, i) = dist(rng);
      jet.ddg_inv[r][s] = S;
      jet.ddg_inv[s][r] = S;
    }
  return jet;
}

OperatorCoefficients random_operator(std::mt19937& rng, int d, int n,
                                     double scale = 0.35) {
  OperatorCoefficients op;
  op.u = random_hpd(rng, n);
  op.du.assign(d, MatrixC());
  for (int r = 0; r < d; ++r) op.du[r] = random_complex(rng, n, scale);
  op.ddu.assign(d, std::vector<MatrixC>(d));
  for (int r = 0; r < d; ++r)
    for (int s = r; s < d; ++s) {
      op.ddu[r][s] = random_complex(rng, n, scale);
      op.ddu[s][r] = op.ddu[r][s];
    }
  op.v.assign(d, MatrixC());
  for (int r = 0; r < d; ++r) op.v[r] = random_complex(rng, n, scale);
  op.dv.assign(d, std::vector<MatrixC>(d));
  for (int r = 0; r < d; ++r)
    for (int m = 0; m < d; ++m) op.dv[r][m] = random_complex(rng, n, scale);
  op.w = random_complex(rng, n, scale);
  return op;
}

InvariantCoefficients random_invariant(std::mt19937& rng, int d, int n,
                                       double scale = 0.3) {
  InvariantCoefficients inv;
  inv.u = random_hpd(rng, n);
  inv.du.assign(d, MatrixC());
  for (int r = 0; r < d; ++r) inv.du[r] = random_hermitian(rng, n, scale);
  inv.ddu.assign(d, std::vector<MatrixC>(d));
  for (int r = 0; r < d; ++r)
    for (int s = r; s < d; ++s) {
      inv.ddu[r][s] = random_hermitian(rng, n, scale);
      inv.ddu[s][r] = inv.ddu[r][s];
    }
  inv.A.assign(d, MatrixC());
  inv.dA.assign(d, std::vector<MatrixC>(d));
  for (int r = 0; r < d; ++r) inv.A[r] = random_complex(rng, n, scale);
  for (int r = 0; r < d; ++r)
    for (int m = 0; m < d; ++m) inv.dA[r][m] = random_complex(rng, n, scale);
  inv.p.assign(d, MatrixC());
  inv.dp.assign(d, std::vector<MatrixC>(d));
  for (int r = 0; r < d; ++r) inv.p[r] = random_complex(rng, n, scale);
  for (int r = 0; r < d; ++r)
    for (int m = 0; m < d; ++m) inv.dp[r][m] = random_complex(rng, n, scale);
  inv.q = random_complex(rng, n, 0.4);
  return inv;
}

double log_uniform(std::mt19937& rng, double lo, double hi) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return lo * std::exp(unit(rng) * std::log(hi / lo));
}

// --------------------------------------------------------------- checks ---

std::pair<bool, std::string> check_closed_forms() {
  std::mt19937 rng(1001);
  const double start = now();
  double worst = 0.0;
  long count = 0;
  for (int d = 2; d <= 6; ++d) {
    for (int k = 1; k <= 4; ++k) {
      for (int sample = 0; sample < 200; ++sample) {
        std::vector<double> r(k + 1);
        for (double& x : r) x = log_uniform(rng, 0.1, 10.0);
        const double closed = integral(d, 0, k, r);
        const double quad = integral_quadrature(0.5 * d, k, r);
        worst = std::max(worst, std::abs(closed - quad) / std::abs(quad));
        ++count;
      }
    }
  }
  const double elapsed = now() - start;
  const bool pass = worst <= 1e-8 && elapsed < 60.0;
  return {pass, fmt("max rel %.2e (tol 1e-08) over %ld tuples, d=2..6, "
                    "k<=4, in %.1f s (limit 60 s)",
                    worst, count, elapsed)};
}

std::pair<bool, std::string> check_recursion() {
  std::mt19937 rng(1002);
  double worst_closure = 0.0, worst_symmetry = 0.0, worst_constant = 0.0;
  for (int d = 2; d <= 6; ++d) {
    for (int k = 1; k <= 4; ++k) {
      // One arity-lowering step of each chain: I_{alpha,k} against
      // I_{alpha-1,k-1} with alpha = d/2 + k.
      const double alpha = 0.5 * d + k;
      auto lower = [&](std::span<const double> args) {
        return integral(d, k - 1, k - 1, args);
      };
      for (int sample = 0; sample < 50; ++sample) {
        std::vector<double> r(k + 1);
        for (double& x : r) x = log_uniform(rng, 0.1, 10.0);
        const double direct = integral(d, k, k, r);
        const double stepped = integral_recursive_step(alpha, k, lower, r);
        worst_closure =
            std::max(worst_closure, std::abs(direct - stepped) / direct);
      }
      for (int p : {0, 1}) {
        for (int sample = 0; sample < 50; ++sample) {
          std::vector<double> r(k + 1);
          for (double& x : r) x = log_uniform(rng, 0.1, 10.0);
          const double plain = integral(d, p, k, r);
          std::swap(r[k - 1], r[k]);
          const double swapped = integral(d, p, k, r);
          worst_symmetry =
              std::max(worst_symmetry, std::abs(plain - swapped) / plain);
        }
        for (double c : {0.1, 1.0, 7.0}) {
          std::vector<double> r(k + 1, c);
          double kfact = 1.0;
          for (int j = 2; j <= k; ++j) kfact *= j;
          const double expected = std::pow(c, -(0.5 * d + p)) / kfact;
          worst_constant =
              std::max(worst_constant,
                       std::abs(integral(d, p, k, r) - expected) / expected);
        }
      }
    }
  }
  const bool pass = worst_closure <= 1e-10 && worst_symmetry <= 1e-12 &&
                    worst_constant <= 1e-12;
  return {pass, fmt("chain closure %.2e (tol 1e-10), last-two symmetry %.2e "
                    "(tol 1e-12), coincident value %.2e (tol 1e-12)",
                    worst_closure, worst_symmetry, worst_constant)};
}

std::pair<bool, std::string> check_operator_application() {
  std::mt19937 rng(1003);
  double worst_fact = 0.0, worst_reduced = 0.0;
  for (int instance = 0; instance < 100; ++instance) {
    const int n_dim = 1 + instance % 4;
    const int k = 1 + (instance / 4) % 4;
    const int n_exp = 1 + instance % 3;
    const int d = 2, p = n_exp + k - 1;  // d/2 + p = n_exp + k
    const MatrixC u = random_hpd(rng, n_dim);
    std::vector<MatrixC> b;
    for (int j = 0; j < k; ++j) b.push_back(random_complex(rng, n_dim, 0.6));

    const MatrixC via_I = apply_I_operator(d, p, k, u, b);
    const MatrixC via_fact = apply_factorized_case2(n_exp, k, u, b);
    const double scale = via_fact.cwiseAbs().maxCoeff();
    worst_fact = std::max(
        worst_fact, (via_I - via_fact).cwiseAbs().maxCoeff() / scale);

    const Complex reduced = apply_I_reduced(d, p, k, u, b);
    const Complex traced = via_I.trace();
    worst_reduced =
        std::max(worst_reduced,
                 std::abs(reduced - traced) / std::max(1.0, std::abs(traced)));
  }
  const bool pass = worst_fact <= 1e-10 && worst_reduced <= 1e-10;
  return {pass, fmt("spectral vs factorized %.2e, trace-reduced vs traced "
                    "%.2e (tol 1e-10, 100 instances, N<=4, k<=4)",
                    worst_fact, worst_reduced)};
}

std::pair<bool, std::string> check_symbol_regression() {
  auto stage1 =
      symbols::push_derivatives_all(symbols::expand_volterra_order1());
  const bool count_ok = stage1.size() == 14;

  // 4 terms carry the second/first/zeroth-order insertion atoms; the other
  // 10 are built from the subprincipal pair alone.
  int principal_family = 0, subprincipal_family = 0;
  for (const auto& term : stage1) {
    bool has_direct = false;
    for (const auto& slot : term.slots)
      has_direct = has_direct || slot.atom == symbols::Atom::PrincipalFull ||
                   slot.atom == symbols::Atom::First ||
                   slot.atom == symbols::Atom::Zeroth;
    (has_direct ? principal_family : subprincipal_family) += 1;
  }
  const bool split_ok = principal_family == 4 && subprincipal_family == 10;

  const std::string expected_listing =
      "+2 f3[u2(i0,i1), H d(i0), H d(i1)]\n"
      "-1 f2[u2(i0,i1), H d(i0,i1)]\n"
      "-4 f4[ubar(i0), H d(i0), ubar(i1), H d(i1)]\n"
      "+2 f3[ubar(i0), H d(i0), vbar]\n"
      "-4 f4[ubar(i0), ubar(i1), H d(i0), H d(i1)]\n"
      "+4 f3[ubar(i0), ubar(i1), H d(i0,i1)]\n"
      "-4 f4[ubar(i0), ubar(i1), H d(i1), H d(i0)]\n"
      "+4 f3[ubar(i0), ubar(i1) d(i0), H d(i1)]\n"
      "+2 f3[ubar(i0), vbar, H d(i0)]\n"
      "-2 f2[ubar(i0), vbar d(i0)]\n"
      "-1 f2[v(i0), H d(i0)]\n"
      "+2 f3[vbar, ubar(i0), H d(i0)]\n"
      "-1 f2[vbar, vbar]\n"
      "+1 f1[w]\n";
  const bool listing_ok = symbols::to_text(stage1) == expected_listing;

  const std::vector<std::pair<int, int>> expected_shapes{
      {1, 0}, {2, 1}, {3, 2}, {4, 3}};
  const bool shapes_ok =
      symbols::count_required_operators(1) == expected_shapes;

  const bool pass = count_ok && split_ok && listing_ok && shapes_ok;
  return {pass, fmt("%zu terms (need 14), family split %d+%d (need 4+10), "
                    "canonical listing %s, insertion shapes %s",
                    stage1.size(), principal_family, subprincipal_family,
                    listing_ok ? "exact" : "MISMATCH",
                    shapes_ok ? "exact" : "MISMATCH")};
}

std::pair<bool, std::string> check_leading_coefficient() {
  std::mt19937 rng(1005);
  double worst_local = 0.0;
  for (int d : {2, 4}) {
    for (int n = 1; n <= 3; ++n) {
      const PointJet jet = random_jet(rng, d, 0.25);
      const MatrixC u = random_hpd(rng, n);
      const double value = a0_local(jet, u);
      Eigen::SelfAdjointEigenSolver<MatrixC> es(u);
      const auto& lambda = es.eigenvalues();
      auto f = [&](const VectorR& xi) {
        const double h = xi.dot(jet.g_inv * xi);
        Complex sum = 0.0;
        for (int i = 0; i < lambda.size(); ++i)
          sum += std::exp(-h * lambda(i));
        MatrixC out(1, 1);
        out(0, 0) = sum;
        return out;
      };
      const double oracle = xi_integral_oracle(f, d, 32)(0, 0).real();
      worst_local = std::max(worst_local, std::abs(value - oracle) / oracle);
    }
  }

  // Anisotropic projector symbol: closed form vs fibre quadrature, and the
  // zeta-dependence of the oracle itself.
  double worst_proj = 0.0, worst_dependence = 0.0;
  for (int d : {2, 3}) {
    const PointJet jet = random_jet(rng, d, 0.25);
    const double gd = gaussian_normalization(metric_lower(jet.g_inv), d);
    auto oracle_at = [&](double zeta) {
      auto f = [&](const VectorR& xi) {
        const VectorR up = jet.g_inv * xi;
        const double norm2 = xi.dot(up);
        MatrixR H = norm2 * MatrixR::Identity(d, d);
        if (norm2 > 0.0) H += zeta * up * xi.transpose();
        return MatrixC((-H).cast<Complex>().exp());
      };
      return xi_integral_oracle(f, d, 32).real().trace();
    };
    const double base = oracle_at(0.0);
    for (double zeta : {0.0, 0.5, 2.0}) {
      const double oracle = zeta == 0.0 ? base : oracle_at(zeta);
      worst_proj = std::max(
          worst_proj, std::abs(a0_projector(jet, zeta) - oracle) / oracle);
      // (oracle(zeta) - oracle(0)) / g_d follows (1+zeta)^{-d/2} - 1.
      const double dependence = (oracle - base) / gd;
      const double expected = std::pow(1.0 + zeta, -0.5 * d) - 1.0;
      worst_dependence =
          std::max(worst_dependence, std::abs(dependence - expected));
    }
  }
  const bool pass =
      worst_local <= 1e-8 && worst_proj <= 1e-6 && worst_dependence <= 1e-6;
  return {pass, fmt("a0 vs quadrature %.2e (tol 1e-08, d=2,4, N<=3); "
                    "projector vs oracle %.2e (tol 1e-06); anisotropy "
                    "dependence %.2e (tol 1e-06, zeta=0,0.5,2)",
                    worst_local, worst_proj, worst_dependence)};
}

std::pair<bool, std::string> check_triple_identity() {
  std::mt19937 rng(1006);
  double worst_triple = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 3;
    const PointJet jet = random_jet(rng, 4);
    const InvariantCoefficients inv = random_invariant(rng, 4, n);
    const OperatorCoefficients op = change_variables(jet, inv);
    const Complex raw = a1_local_raw(jet, op);
    const Complex pipe = a1_local_pipeline(jet, op);
    const Complex cov = a1_local_invariant(jet, inv);
    const double scale = std::abs(raw);
    worst_triple = std::max(worst_triple, std::abs(raw - pipe) / scale);
    worst_triple = std::max(worst_triple, std::abs(raw - cov) / scale);
  }

  double worst_gauge = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 3;
    const PointJet jet = random_jet(rng, 4);
    const OperatorCoefficients op = random_operator(rng, 4, n);
    GaugeJet gauge;
    Eigen::HouseholderQR<MatrixC> qr(random_complex(rng, n, 1.0));
    gauge.gamma = qr.householderQ();
    gauge.dgamma.assign(4, MatrixC());
    for (int r = 0; r < 4; ++r) gauge.dgamma[r] = random_complex(rng, n, 0.3);
    gauge.ddgamma.assign(4, std::vector<MatrixC>(4));
    for (int r = 0; r < 4; ++r)
      for (int s = r; s < 4; ++s) {
        gauge.ddgamma[r][s] = random_complex(rng, n, 0.3);
        gauge.ddgamma[s][r] = gauge.ddgamma[r][s];
      }
    const OperatorCoefficients conj = gauge_transform(jet, op, gauge);
    const Complex before = a1_local_raw(jet, op);
    const Complex after = a1_local_raw(jet, conj);
    worst_gauge =
        std::max(worst_gauge, std::abs(before - after) / std::abs(before));
  }
  const bool pass = worst_triple <= 1e-8 && worst_gauge <= 1e-9;
  return {pass, fmt("raw = pipeline = covariant %.2e (tol 1e-08, 100 jets); "
                    "gauge conjugation drift %.2e (tol 1e-09, 20 frames)",
                    worst_triple, worst_gauge)};
}

std::pair<bool, std::string> check_curvature_law() {
  std::mt19937 rng(1007);
  const double c = 1.7;
  const int n = 2;
  double worst = 0.0;
  for (int d : {2, 3, 4}) {
    const PointJet jet = random_jet(rng, d);
    InvariantCoefficients inv;
    inv.u = c * MatrixC::Identity(n, n);
    inv.du.assign(d, MatrixC::Zero(n, n));
    inv.ddu.assign(d, std::vector<MatrixC>(d, MatrixC::Zero(n, n)));
    inv.A.assign(d, MatrixC());
    inv.dA.assign(d, std::vector<MatrixC>(d));
    for (int r = 0; r < d; ++r) inv.A[r] = random_complex(rng, n, 0.4);
    for (int r = 0; r < d; ++r)
      for (int m = 0; m < d; ++m) inv.dA[r][m] = random_complex(rng, n, 0.3);
    inv.p.assign(d, MatrixC::Zero(n, n));
    inv.dp.assign(d, std::vector<MatrixC>(d, MatrixC::Zero(n, n)));
    inv.q = MatrixC::Zero(n, n);

    const OperatorCoefficients op = change_variables(jet, inv);
    const Complex pipe = a1_local_pipeline(jet, op);
    const double expected =
        gaussian_normalization(metric_lower(jet.g_inv), d) * (n / 6.0) *
        scalar_curvature(jet) * std::pow(c, 1.0 - 0.5 * d);
    worst = std::max(worst, std::abs(pipe - expected) / std::abs(expected));
  }
  return {worst <= 1e-7,
          fmt("a1 vs g_d (R/6) N c^{1-d/2}: max rel %.2e (tol 1e-07, "
              "d=2,3,4, scalar symbol c=%.1f)",
              worst, c)};
}

std::pair<bool, std::string> check_torus_constant() {
  const double start = now();
  TorusModel model;
  model.d = 4;
  model.length = 1.0;
  model.cutoff = 24;
  ConstantCoefficients cc;
  cc.u = MatrixC(2, 2);
  cc.u << Complex(1.4, 0.0), Complex(0.3, 0.2), Complex(0.3, -0.2),
      Complex(2.1, 0.0);
  cc.w = MatrixC(2, 2);
  cc.w << Complex(0.5, 0.0), Complex(-0.1, 0.4), Complex(-0.1, -0.4),
      Complex(-0.2, 0.0);
  cc.v.assign(4, MatrixC(2, 2));
  cc.v[0] << Complex(0.0, 0.1), Complex(0.2, 0.1), Complex(-0.2, 0.1),
      Complex(0.0, -0.3);
  cc.v[1] << Complex(0.0, -0.2), Complex(0.15, -0.25), Complex(-0.15, -0.25),
      Complex(0.0, 0.1);
  cc.v[2] << Complex(0.0, 0.05), Complex(-0.1, 0.3), Complex(0.1, 0.3),
      Complex(0.0, 0.2);
  cc.v[3] << Complex(0.0, -0.15), Complex(0.25, 0.05), Complex(-0.25, 0.05),
      Complex(0.0, 0.05);
  model.coefficients = cc;

  const double t0 = suggested_start_time(model, 1e-8);
  const auto samples =
      heat_trace_constant(model, geometric_times(t0, 8.0, 14));
  const AsymptoticFit fit = fit_asymptotics(samples, 4, 3);

  const double a0_target = torus_a0_integral(model);
  const double a1_target = torus_a1_integral(model).real();
  TorusModel without_v = model;
  std::get<ConstantCoefficients>(without_v.coefficients)
      .v.assign(4, MatrixC::Zero(2, 2));
  const double a1_without_v = torus_a1_integral(without_v).real();

  const double rel0 =
      std::abs(fit.coefficients[0] - a0_target) / std::abs(a0_target);
  const double rel1 =
      std::abs(fit.coefficients[1] - a1_target) / std::abs(a1_target);
  const double rel1_without_v =
      std::abs(fit.coefficients[1] - a1_without_v) / std::abs(a1_without_v);
  const double elapsed = now() - start;

  // The fit must land on the full density and visibly off the density with
  // the v u^{-1} v term removed, certifying that term's presence.
  const bool pass = rel0 <= 5e-3 && rel1 <= 1e-2 &&
                    rel1_without_v > 1e-2 && elapsed < 300.0;
  return {pass, fmt("d=4, N=2, cutoff 24: a0 rel %.2e (tol 5e-03), a1 rel "
                    "%.2e (tol 1e-02); dropping the v u^{-1} v term misses "
                    "by %.1e; %.1f s (limit 300 s)",
                    rel0, rel1, rel1_without_v, elapsed)};
}

std::pair<bool, std::string> check_torus_varying() {
  const double start = now();
  TorusModel model;
  model.d = 2;
  model.length = 2.0 * std::numbers::pi;
  model.cutoff = 16;
  VaryingCoefficients vc;
  MatrixC pauli1(2, 2), pauli3(2, 2);
  pauli1 << Complex(0, 0), Complex(1, 0), Complex(1, 0), Complex(0, 0);
  pauli3 << Complex(1, 0), Complex(0, 0), Complex(0, 0), Complex(-1, 0);
  vc.u.c0 = 2.0 * MatrixC::Identity(2, 2);
  vc.u.modes.push_back({{1, 0}, 0.15 * pauli1});
  vc.u.modes.push_back({{0, 1}, 0.2 * pauli3});
  vc.w.c0 = 0.3 * MatrixC::Identity(2, 2);
  vc.w.modes.push_back({{1, 1}, 0.1 * pauli1});
  model.coefficients = vc;

  const int dim = (2 * model.cutoff + 1) * (2 * model.cutoff + 1) * 2;
  const double t0 = suggested_start_time(model, 1e-8);
  const auto samples = heat_trace_varying(model, geometric_times(t0, 8.0, 14));
  const AsymptoticFit fit = fit_asymptotics(samples, 2, 3);

  const double a1_target = torus_a1_integral(model).real();
  const double rel1 =
      std::abs(fit.coefficients[1] - a1_target) / std::abs(a1_target);
  const double elapsed = now() - start;
  const bool pass = rel1 <= 2e-2 && dim <= 12000 && elapsed < 600.0;
  return {pass, fmt("d=2 varying u(x), Galerkin dim %d (<=12000): a1 fit "
                    "%.6g vs integrated density %.6g, rel %.2e (tol 2e-02); "
                    "%.1f s (limit 600 s)",
                    dim, fit.coefficients[1], a1_target, rel1, elapsed)};
}

std::pair<bool, std::string> check_vandermonde() {
  std::mt19937 rng(1010);
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  auto draw_distinct = [&](int count) {
    std::vector<Complex> a;
    while (static_cast<int>(a.size()) < count) {
      const Complex candidate(box(rng), box(rng));
      bool ok = true;
      for (const Complex& prev : a) ok = ok && std::abs(candidate - prev) > 0.1;
      if (ok) a.push_back(candidate);
    }
    return a;
  };

  double worst_sum = 0.0, worst_resolvent = 0.0;
  for (int r = 1; r <= 6; ++r) {
    for (int sample = 0; sample < 50; ++sample) {
      const std::vector<Complex> a = draw_distinct(r + 1);
      std::vector<Complex> residue(r + 1, Complex(1.0, 0.0));
      for (int n = 0; n <= r; ++n)
        for (int m = 0; m <= r; ++m)
          if (m != n) residue[n] /= a[n] - a[m];

      // i) sum_n a_n^s residue_n = 0 for s < r, scaled by the term sizes.
      for (int s = 0; s < r; ++s) {
        Complex sum = 0.0;
        double magnitude = 0.0;
        for (int n = 0; n <= r; ++n) {
          const Complex term = std::pow(a[n], s) * residue[n];
          sum += term;
          magnitude += std::abs(term);
        }
        worst_sum = std::max(worst_sum, std::abs(sum) / magnitude);
      }

      // ii) the resolvent product equals its residue expansion.
      Complex z;
      for (;;) {
        z = Complex(box(rng), box(rng));
        bool ok = true;
        for (const Complex& pole : a) ok = ok && std::abs(z - pole) > 0.1;
        if (ok) break;
      }
      Complex product(1.0, 0.0), expansion(0.0, 0.0);
      for (int n = 0; n <= r; ++n) {
        product /= z - a[n];
        expansion += residue[n] / (z - a[n]);
      }
      worst_resolvent = std::max(
          worst_resolvent, std::abs(product - expansion) / std::abs(product));
    }
  }
  const bool pass = worst_sum <= 1e-10 && worst_resolvent <= 1e-10;
  return {pass, fmt("power sums %.2e, resolvent expansion %.2e (tol 1e-10, "
                    "r<=6, 50 tuples each)",
                    worst_sum, worst_resolvent)};
}

}  // namespace

int main() {
  gate(1, "simplex closed forms vs quadrature", check_closed_forms);
  gate(2, "arity recursion, symmetry, coincident values", check_recursion);
  gate(3, "weighted insertion vs factorized and traced routes",
       check_operator_application);
  gate(4, "order-1 symbol rewriting regression", check_symbol_regression);
  gate(5, "leading coefficient vs fibre quadrature", check_leading_coefficient);
  gate(6, "subleading triple identity and gauge invariance",
       check_triple_identity);
  gate(7, "curvature term normalization R/6", check_curvature_law);
  gate(8, "torus end-to-end, constant coefficients", check_torus_constant);
  gate(9, "torus end-to-end, varying coefficients", check_torus_varying);
  gate(10, "partial-fraction identities", check_vandermonde);

  std::printf("acceptance: %d/10 passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
