#include "heattrace/spectral_validation.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace heattrace {

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw DomainError(message);
}

bool nearly_hermitian(const MatrixC& m, double tol = 1e-10) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <=
         tol * (1.0 + m.cwiseAbs().maxCoeff());
}

double min_eigenvalue(const MatrixC& hermitian) {
  Eigen::SelfAdjointEigenSolver<MatrixC> es(hermitian,
                                            Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double operator_norm_hermitian(const MatrixC& hermitian) {
  Eigen::SelfAdjointEigenSolver<MatrixC> es(hermitian,
                                            Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void check_times(std::span<const double> times) {
  require(!times.empty(), "heat trace: at least one time is required");
  for (double t : times)
    require(t > 0.0 && std::isfinite(t), "heat trace: times must be positive");
}

void check_model_frame(const TorusModel& model) {
  require(model.d >= 1, "torus model: dimension must be at least 1");
  require(model.length > 0.0 && std::isfinite(model.length),
          "torus model: side length must be positive");
  require(model.cutoff >= 1, "torus model: cutoff must be at least 1");
}

void check_constant(const ConstantCoefficients& cc, int d) {
  const int n = static_cast<int>(cc.u.rows());
  require(n >= 1 && cc.u.cols() == n,
          "torus model: constant u must be square");
  require(nearly_hermitian(cc.u), "torus model: constant u must be Hermitian");
  require(min_eigenvalue(cc.u) > 0.0,
          "torus model: constant u must be positive definite");
  require(static_cast<int>(cc.v.size()) == d,
          "torus model: v must have one entry per dimension");
  for (const MatrixC& vm : cc.v) {
    require(vm.rows() == n && vm.cols() == n,
            "torus model: v entries must match the fibre dimension");
    require((vm + vm.adjoint()).cwiseAbs().maxCoeff() <=
                1e-10 * (1.0 + vm.cwiseAbs().maxCoeff()),
            "torus model: v entries must be skew-Hermitian");
  }
  require(cc.w.rows() == n && cc.w.cols() == n,
          "torus model: w must match the fibre dimension");
  require(nearly_hermitian(cc.w), "torus model: constant w must be Hermitian");
}

void check_field(const TrigMatrixField& f, int d, int n, const char* name) {
  std::ostringstream tag;
  require(f.c0.rows() == n && f.c0.cols() == n,
          "torus model: field constant part has the wrong shape");
  require(nearly_hermitian(f.c0),
          "torus model: field constant part must be Hermitian");
  for (const auto& mode : f.modes) {
    require(static_cast<int>(mode.k.size()) == d,
            "torus model: field frequency has the wrong dimension");
    bool zero = true;
    for (int c : mode.k) zero = zero && c == 0;
    require(!zero,
            "torus model: zero frequency belongs in the constant part");
    require(mode.c.rows() == n && mode.c.cols() == n,
            "torus model: field mode has the wrong shape");
  }
  (void)name;
}

struct TailParameters {
  double a = 0.0;               // coercivity of the principal part
  std::vector<double> b;        // per-axis first-order norms
  double c = 0.0;               // zeroth-order norm
  int fibre = 0;                // N
};

// sum_{n in Z} exp(-t a kappa(n)^2 + t b |kappa(n)|) and its two-sided tail
// beyond |n| = K, with kappa(n) = 2 pi n / L.
double lattice_sum_1d(double t, double a, double b, double length, int from) {
  const double step = 2.0 * std::numbers::pi / length;
  double sum = from == 0 ? 1.0 : 0.0;
  double tally = 0.0;
  for (int n = std::max(from, 1); n < 100000000; ++n) {
    const double kappa = step * n;
    const double term = 2.0 * std::exp(-t * a * kappa * kappa + t * b * kappa);
    tally = sum + term;
    if (tally == sum && t * a * kappa * kappa > t * b * kappa) break;
    sum = tally;
  }
  return sum;
}

double tail_bound(const TailParameters& tp, double t, double length,
                  int cutoff, int d) {
  // Outside the box, some axis exceeds the cutoff: union bound over axes,
  // each a product of factorized one-dimensional sums.
  double total = 0.0;
  for (int m = 0; m < d; ++m) {
    double part = lattice_sum_1d(t, tp.a, tp.b[m], length, cutoff + 1);
    for (int j = 0; j < d; ++j) {
      if (j == m) continue;
      part *= lattice_sum_1d(t, tp.a, tp.b[j], length, 0);
    }
    total += part;
  }
  return tp.fibre * std::exp(t * tp.c) * total;
}

TailParameters constant_tail_parameters(const ConstantCoefficients& cc,
                                        int d) {
  TailParameters tp;
  tp.fibre = static_cast<int>(cc.u.rows());
  tp.a = min_eigenvalue(cc.u);
  tp.b.resize(d);
  for (int m = 0; m < d; ++m) {
    // v^m is skew-Hermitian, so i v^m is Hermitian with the same norm.
    tp.b[m] = operator_norm_hermitian(Complex(0.0, 1.0) * cc.v[m]);
  }
  tp.c = operator_norm_hermitian(cc.w);
  return tp;
}

// Largest frequency component over the modes of a field (0 when constant).
int mode_radius(const TrigMatrixField& field) {
  int radius = 0;
  for (const auto& mode : field.modes)
    for (int component : mode.k)
      radius = std::max(radius, std::abs(component));
  return radius;
}

// The Galerkin restriction both drops exterior modes and perturbs the
// retained ones near the box boundary: a coefficient mode of frequency k
// couples lattice sites up to |k| steps apart, so eigenvalues within one
// coupling radius of the boundary are unreliable. The reported estimate
// treats every shell within that radius (plus one step for higher-order
// leakage) as lost, i.e. it starts the exterior sum at a shrunken cutoff.
int varying_tail_cutoff(const VaryingCoefficients& vc, int cutoff) {
  const int radius = std::max(mode_radius(vc.u), mode_radius(vc.w));
  const int guard = radius == 0 ? 0 : radius + 1;
  return std::max(cutoff - guard, 0);
}

// Odometer over the box |k_i| <= cutoff; returns false when exhausted.
bool advance(std::vector<int>& k, int cutoff) {
  for (std::size_t i = k.size(); i-- > 0;) {
    if (k[i] < cutoff) {
      ++k[i];
      for (std::size_t j = i + 1; j < k.size(); ++j) k[j] = -cutoff;
      return true;
    }
  }
  return false;
}

struct GridScan {
  double min_u = 0.0;   // min over the grid of lambda_min(u(x))
  double max_w = 0.0;   // max over the grid of |lambda|_max(w(x))
  double mean_a0 = 0.0; // mean of tr(u(x)^{-d/2})
};

GridScan scan_varying_fields(const VaryingCoefficients& vc, int d,
                             double length) {
  const int grid = 17;
  GridScan scan;
  scan.min_u = std::numeric_limits<double>::infinity();
  std::vector<int> idx(d, 0);
  const double n_points = std::pow(static_cast<double>(grid), d);
  bool more = true;
  while (more) {
    VectorR x(d);
    for (int i = 0; i < d; ++i) x(i) = length * idx[i] / grid;
    const MatrixC u = field_value(vc.u, length, x);
    Eigen::SelfAdjointEigenSolver<MatrixC> es(u, Eigen::EigenvaluesOnly);
    scan.min_u = std::min(scan.min_u, es.eigenvalues().minCoeff());
    if (es.eigenvalues().minCoeff() > 0.0) {
      double sum = 0.0;
      for (double lambda : es.eigenvalues())
        sum += std::pow(lambda, -0.5 * d);
      scan.mean_a0 += sum / n_points;
    }
    scan.max_w = std::max(
        scan.max_w, operator_norm_hermitian(field_value(vc.w, length, x)));
    more = false;
    for (int i = d; i-- > 0;) {
      if (++idx[i] < grid) {
        more = true;
        break;
      }
      idx[i] = 0;
    }
  }
  return scan;
}

}  // namespace

MatrixC field_value(const TrigMatrixField& f, double length, const VectorR& x) {
  MatrixC out = f.c0;
  const double step = 2.0 * std::numbers::pi / length;
  for (const auto& mode : f.modes) {
    double phase = 0.0;
    for (std::size_t i = 0; i < mode.k.size(); ++i)
      phase += step * mode.k[i] * x(static_cast<int>(i));
    const Complex e = std::polar(1.0, phase);
    out += mode.c * e + mode.c.adjoint() * std::conj(e);
  }
  return out;
}

MatrixC field_derivative(const TrigMatrixField& f, double length,
                         const VectorR& x, int r) {
  MatrixC out = MatrixC::Zero(f.c0.rows(), f.c0.cols());
  const double step = 2.0 * std::numbers::pi / length;
  for (const auto& mode : f.modes) {
    double phase = 0.0;
    for (std::size_t i = 0; i < mode.k.size(); ++i)
      phase += step * mode.k[i] * x(static_cast<int>(i));
    const Complex e = std::polar(1.0, phase);
    const Complex ik(0.0, step * mode.k[static_cast<std::size_t>(r)]);
    out += mode.c * (ik * e) + mode.c.adjoint() * std::conj(ik * e);
  }
  return out;
}

MatrixC field_second_derivative(const TrigMatrixField& f, double length,
                                const VectorR& x, int r, int s) {
  MatrixC out = MatrixC::Zero(f.c0.rows(), f.c0.cols());
  const double step = 2.0 * std::numbers::pi / length;
  for (const auto& mode : f.modes) {
    double phase = 0.0;
    for (std::size_t i = 0; i < mode.k.size(); ++i)
      phase += step * mode.k[i] * x(static_cast<int>(i));
    const Complex e = std::polar(1.0, phase);
    const double kk = step * mode.k[static_cast<std::size_t>(r)] * step *
                      mode.k[static_cast<std::size_t>(s)];
    out += mode.c * (-kk * e) + mode.c.adjoint() * std::conj(-kk * e);
  }
  return out;
}

std::vector<HeatTraceSample> heat_trace_constant(
    const TorusModel& model, std::span<const double> times) {
  check_model_frame(model);
  check_times(times);
  const auto* cc = std::get_if<ConstantCoefficients>(&model.coefficients);
  require(cc != nullptr,
          "heat_trace_constant: the model must carry constant coefficients");
  check_constant(*cc, model.d);

  const int d = model.d;
  const int n = static_cast<int>(cc->u.rows());
  const int cutoff = model.cutoff;
  const double step = 2.0 * std::numbers::pi / model.length;

  std::vector<double> totals(times.size(), 0.0);
  MatrixC block(n, n);
  Eigen::SelfAdjointEigenSolver<MatrixC> solver;

  std::vector<int> k(d, -cutoff);
  std::vector<double> slice(times.size(), 0.0);
  int slice_marker = k.empty() ? 0 : k[0];
  bool more = true;
  while (more) {
    if (k[0] != slice_marker) {
      // Close the per-slice accumulator to keep the summation order stable.
      for (std::size_t i = 0; i < times.size(); ++i) {
        totals[i] += slice[i];
        slice[i] = 0.0;
      }
      slice_marker = k[0];
    }
    double q = 0.0;
    for (int m = 0; m < d; ++m) q += step * k[m] * step * k[m];
    block = q * cc->u - cc->w;
    for (int m = 0; m < d; ++m)
      block -= Complex(0.0, step * k[m]) * cc->v[m];
    if ((block - block.adjoint()).cwiseAbs().maxCoeff() >
        1e-10 * (1.0 + block.cwiseAbs().maxCoeff())) {
      throw CrossCheckError(
          "heat_trace_constant: momentum block failed the Hermiticity "
          "certificate");
    }
    if (n == 1) {
      const double lambda = block(0, 0).real();
      for (std::size_t i = 0; i < times.size(); ++i)
        slice[i] += std::exp(-times[i] * lambda);
    } else {
      solver.compute(block, Eigen::EigenvaluesOnly);
      for (std::size_t i = 0; i < times.size(); ++i) {
        double sum = 0.0;
        for (int j = n; j-- > 0;)
          sum += std::exp(-times[i] * solver.eigenvalues()(j));
        slice[i] += sum;
      }
    }
    more = advance(k, cutoff);
  }
  for (std::size_t i = 0; i < times.size(); ++i) totals[i] += slice[i];

  const TailParameters tp = constant_tail_parameters(*cc, d);
  std::vector<HeatTraceSample> samples(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    samples[i].t = times[i];
    samples[i].trace = totals[i];
    samples[i].truncation_bound =
        tail_bound(tp, times[i], model.length, cutoff, d);
    if (!(samples[i].trace > 0.0)) {
      throw CrossCheckError(
          "heat_trace_constant: nonpositive trace from Hermitian blocks");
    }
  }
  return samples;
}

HeatTraceSample heat_trace_constant(const TorusModel& model, double t) {
  const double times[1] = {t};
  return heat_trace_constant(model, std::span<const double>(times))[0];
}

std::vector<HeatTraceSample> heat_trace_varying(
    const TorusModel& model, std::span<const double> times) {
  check_model_frame(model);
  check_times(times);
  const auto* vc = std::get_if<VaryingCoefficients>(&model.coefficients);
  require(vc != nullptr,
          "heat_trace_varying: the model must carry varying coefficients");
  require(model.d == 2,
          "heat_trace_varying: only two-dimensional tori are supported");
  const int n = static_cast<int>(vc->u.c0.rows());
  require(n >= 1, "heat_trace_varying: empty fibre");
  check_field(vc->u, 2, n, "u");
  check_field(vc->w, 2, n, "w");

  const int cutoff = model.cutoff;
  const int side = 2 * cutoff + 1;
  const long dim = static_cast<long>(side) * side * n;
  require(dim <= 12000,
          "heat_trace_varying: Galerkin dimension exceeds the 12000 guard");

  const GridScan scan = scan_varying_fields(*vc, 2, model.length);
  if (!(scan.min_u > 0.0)) {
    throw CrossCheckError(
        "heat_trace_varying: u(x) failed the ellipticity certificate on the "
        "sampling grid");
  }

  const double step = 2.0 * std::numbers::pi / model.length;

  // Divergence form: block(m, n) = (kappa_m . kappa_n) u^(m - n) - w^(m - n),
  // where f^(j) are the Fourier coefficients of the fields.
  auto assemble = [&](int box) {
    const int box_side = 2 * box + 1;
    const long box_dim = static_cast<long>(box_side) * box_side * n;
    auto index = [&](int k0, int k1) {
      return ((k0 + box) * box_side + (k1 + box)) * n;
    };
    MatrixC matrix = MatrixC::Zero(box_dim, box_dim);
    auto add_modes = [&](const TrigMatrixField& field, bool principal) {
      auto place = [&](int dk0, int dk1, const MatrixC& coeff) {
        for (int k0 = -box; k0 <= box; ++k0) {
          for (int k1 = -box; k1 <= box; ++k1) {
            const int m0 = k0 + dk0, m1 = k1 + dk1;
            if (m0 < -box || m0 > box || m1 < -box || m1 > box) continue;
            const double factor =
                principal ? step * step * (m0 * k0 + m1 * k1) : -1.0;
            matrix.block(index(m0, m1), index(k0, k1), n, n) +=
                factor * coeff;
          }
        }
      };
      place(0, 0, field.c0);
      for (const auto& mode : field.modes) {
        place(mode.k[0], mode.k[1], mode.c);
        place(-mode.k[0], -mode.k[1], mode.c.adjoint());
      }
    };
    add_modes(vc->u, true);
    add_modes(vc->w, false);
    return matrix;
  };
  MatrixC big = assemble(cutoff);

  // Selfadjointness certificate on the assembled matrix.
  double defect = 0.0, magnitude = 0.0;
  for (long i = 0; i < dim; ++i) {
    for (long j = i; j < dim; ++j) {
      defect = std::max(defect, std::abs(big(i, j) - std::conj(big(j, i))));
      magnitude = std::max(magnitude, std::abs(big(i, j)));
    }
  }
  if (defect > 1e-10 * (1.0 + magnitude)) {
    throw CrossCheckError(
        "heat_trace_varying: Galerkin matrix failed the selfadjointness "
        "certificate");
  }

  Eigen::SelfAdjointEigenSolver<MatrixC> solver(big, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw DomainError("heat_trace_varying: eigensolver failed");
  const auto& lambda = solver.eigenvalues();

  // The truncation estimate pairs the rigorous Gaussian tail of the
  // genuinely discarded modes with an observed convergence increment: the
  // same operator restricted to the boundary-guarded smaller box. The
  // increment dominates the remaining error because the Galerkin spectrum
  // converges superexponentially in the cutoff.
  const int reduced = varying_tail_cutoff(*vc, cutoff);
  VectorR lambda_reduced;
  if (reduced != cutoff) {
    Eigen::SelfAdjointEigenSolver<MatrixC> coarse(assemble(reduced),
                                                  Eigen::EigenvaluesOnly);
    if (coarse.info() != Eigen::Success)
      throw DomainError("heat_trace_varying: eigensolver failed");
    lambda_reduced = coarse.eigenvalues();
  }
  const double lambda_scale =
      std::max(std::abs(lambda(0)), std::abs(lambda(lambda.size() - 1)));

  TailParameters tp;
  tp.fibre = n;
  tp.a = scan.min_u;
  tp.b.assign(2, 0.0);
  tp.c = scan.max_w;

  std::vector<HeatTraceSample> samples(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    double sum = 0.0;
    for (long j = lambda.size(); j-- > 0;) sum += std::exp(-t * lambda(j));
    double increment = 0.0;
    if (lambda_reduced.size() > 0) {
      double coarse_sum = 0.0;
      for (long j = lambda_reduced.size(); j-- > 0;)
        coarse_sum += std::exp(-t * lambda_reduced(j));
      increment = std::abs(sum - coarse_sum);
    }
    const double rounding = std::numeric_limits<double>::epsilon() * dim *
                            (1.0 + t * lambda_scale) * std::abs(sum);
    samples[i].t = t;
    samples[i].trace = sum;
    samples[i].truncation_bound =
        increment + tail_bound(tp, t, model.length, cutoff, 2) + rounding;
    if (!(samples[i].trace > 0.0)) {
      throw CrossCheckError(
          "heat_trace_varying: nonpositive trace from a Hermitian matrix");
    }
  }
  return samples;
}

HeatTraceSample heat_trace_varying(const TorusModel& model, double t) {
  const double times[1] = {t};
  return heat_trace_varying(model, std::span<const double>(times))[0];
}

double suggested_start_time(const TorusModel& model, double rel) {
  check_model_frame(model);
  require(rel > 0.0 && rel < 1.0,
          "suggested_start_time: rel must lie in (0, 1)");

  TailParameters tp;
  double a0_coefficient = 0.0;
  int tail_cutoff = model.cutoff;
  if (const auto* cc = std::get_if<ConstantCoefficients>(&model.coefficients)) {
    check_constant(*cc, model.d);
    tp = constant_tail_parameters(*cc, model.d);
    Eigen::SelfAdjointEigenSolver<MatrixC> es(cc->u, Eigen::EigenvaluesOnly);
    for (double lambda : es.eigenvalues())
      a0_coefficient += std::pow(lambda, -0.5 * model.d);
  } else {
    const auto& vc = std::get<VaryingCoefficients>(model.coefficients);
    const int n = static_cast<int>(vc.u.c0.rows());
    check_field(vc.u, model.d, n, "u");
    check_field(vc.w, model.d, n, "w");
    const GridScan scan = scan_varying_fields(vc, model.d, model.length);
    require(scan.min_u > 0.0,
            "suggested_start_time: u(x) is not elliptic on the sampling grid");
    tp.fibre = n;
    tp.a = scan.min_u;
    tp.b.assign(model.d, 0.0);
    tp.c = scan.max_w;
    a0_coefficient = scan.mean_a0;
    tail_cutoff = varying_tail_cutoff(vc, model.cutoff);
  }
  const double volume = std::pow(model.length, model.d);
  const double prefactor =
      volume * std::pow(4.0 * std::numbers::pi, -0.5 * model.d) *
      a0_coefficient;

  auto admissible = [&](double t) {
    const double estimate = prefactor * std::pow(t, -0.5 * model.d);
    return tail_bound(tp, t, model.length, tail_cutoff, model.d) <=
           rel * estimate;
  };
  double hi = 1e-8;
  while (!admissible(hi)) {
    hi *= 1.25;
    if (hi > 1e6) {
      throw DomainError(
          "suggested_start_time: no admissible window; increase the cutoff");
    }
  }
  double lo = hi / 1.25;
  if (hi <= 1e-8) return hi;
  for (int iter = 0; iter < 80; ++iter) {
    const double mid = std::sqrt(lo * hi);
    (admissible(mid) ? hi : lo) = mid;
  }
  return hi;
}

std::vector<double> geometric_times(double t0, double factor, int count) {
  require(t0 > 0.0 && std::isfinite(t0),
          "geometric_times: start time must be positive");
  require(factor > 1.0, "geometric_times: factor must exceed 1");
  require(count >= 2, "geometric_times: at least two points");
  std::vector<double> times(count);
  for (int i = 0; i < count; ++i)
    times[i] = t0 * std::pow(factor, static_cast<double>(i) / (count - 1));
  return times;
}

namespace {

AsymptoticFit fit_core(std::span<const HeatTraceSample> samples, int d,
                       int order) {
  require(d >= 1, "fit_asymptotics: dimension must be at least 1");
  require(order >= 0, "fit_asymptotics: order must be nonnegative");
  const int count = static_cast<int>(samples.size());
  require(count >= order + 2,
          "fit_asymptotics: need at least order + 2 samples");
  for (const auto& s : samples)
    require(s.t > 0.0 && std::isfinite(s.trace) && s.truncation_bound >= 0.0 &&
                std::isfinite(s.truncation_bound),
            "fit_asymptotics: samples need positive times, finite traces and "
            "nonnegative truncation bounds");

  double log_mean = 0.0;
  for (const auto& s : samples) log_mean += std::log(s.t);
  const double t_ref = std::exp(log_mean / count);

  // Each rescaled trace y = t^{d/2} trace carries a known truncation bound.
  // Weighting the fit by that bound keeps contaminated early samples from
  // biasing the subleading coefficients, and propagating it through the
  // solve yields uncertainties that cover the systematic part, not just the
  // scatter about the polynomial.
  MatrixR design(count, order + 1);
  VectorR target(count), bound_y(count);
  for (int i = 0; i < count; ++i) {
    const double tau = samples[i].t / t_ref;
    double power = 1.0;
    for (int j = 0; j <= order; ++j) {
      design(i, j) = power;
      power *= tau;
    }
    const double rescale = std::pow(samples[i].t, 0.5 * d);
    target(i) = rescale * samples[i].trace;
    bound_y(i) = rescale * samples[i].truncation_bound;
  }
  const double floor = 1e-13 * target.cwiseAbs().maxCoeff() +
                       std::numeric_limits<double>::min();
  const VectorR sigma_y = bound_y.array() + floor;

  MatrixR weighted = design;
  VectorR weighted_target(count);
  for (int i = 0; i < count; ++i) {
    weighted.row(i) /= sigma_y(i);
    weighted_target(i) = target(i) / sigma_y(i);
  }

  Eigen::BDCSVD<MatrixR> svd(weighted,
                             Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sigma = svd.singularValues();
  const double condition =
      sigma(sigma.size() - 1) > 0.0 ? sigma(0) / sigma(sigma.size() - 1)
                                    : std::numeric_limits<double>::infinity();
  if (!(condition < 1e12)) {
    char message[128];
    std::snprintf(message, sizeof(message),
                  "fit_asymptotics: design matrix condition %.3e exceeds 1e12",
                  condition);
    throw DomainError(message);
  }
  const VectorR scaled = svd.solve(weighted_target);
  const VectorR misfit = design * scaled - target;
  const double rms = std::sqrt(misfit.squaredNorm() / count);

  // Statistical part: pseudo-inverse metric of the weighted design, inflated
  // when the misfit exceeds the per-sample scales. Systematic part: worst
  // case of the truncation bounds pushed through the same solve.
  double chi_square = 0.0;
  for (int i = 0; i < count; ++i) {
    const double ratio = misfit(i) / sigma_y(i);
    chi_square += ratio * ratio;
  }
  const int dof = count - (order + 1);
  const double inflation =
      dof > 0 ? std::max(1.0, std::sqrt(chi_square / dof)) : 1.0;
  const MatrixR pseudo_inverse = svd.matrixV() *
                                 sigma.cwiseInverse().asDiagonal() *
                                 svd.matrixU().transpose();

  AsymptoticFit fit;
  fit.condition = condition;
  fit.residual = rms;
  fit.coefficients.resize(order + 1);
  fit.uncertainties.resize(order + 1);
  for (int j = 0; j <= order; ++j) {
    double metric = 0.0;
    for (int s = 0; s < sigma.size(); ++s) {
      const double vj = svd.matrixV()(j, s);
      metric += vj * vj / (sigma(s) * sigma(s));
    }
    double systematic = 0.0;
    for (int i = 0; i < count; ++i)
      systematic += std::abs(pseudo_inverse(j, i)) * bound_y(i) / sigma_y(i);
    const double scale = std::pow(t_ref, j);
    fit.coefficients[j] = scaled(j) / scale;
    fit.uncertainties[j] = (inflation * std::sqrt(metric) + systematic) / scale;
  }
  return fit;
}

}  // namespace

AsymptoticFit fit_asymptotics(std::span<const HeatTraceSample> samples, int d,
                              int order) {
  AsymptoticFit fit = fit_core(samples, d, order);
  // Nested-order refit: the shift of each coefficient when one more power of
  // t joins the model estimates the bias from truncating the expansion, the
  // dominant error on clean deterministic traces.
  if (static_cast<int>(samples.size()) >= order + 3) {
    try {
      const AsymptoticFit refined = fit_core(samples, d, order + 1);
      for (int j = 0; j <= order; ++j)
        fit.uncertainties[j] +=
            std::abs(fit.coefficients[j] - refined.coefficients[j]);
    } catch (const DomainError&) {
      // An ill-conditioned refit cannot sharpen the error estimate.
    }
  }
  return fit;
}

namespace {

PointJet flat_torus_jet(int d) {
  PointJet jet;
  jet.d = d;
  jet.g_inv = MatrixR::Identity(d, d);
  jet.dg_inv.assign(d, MatrixR::Zero(d, d));
  jet.ddg_inv.assign(d, std::vector<MatrixR>(d, MatrixR::Zero(d, d)));
  return jet;
}

OperatorCoefficients local_divergence_form(const VaryingCoefficients& vc,
                                           int d, double length,
                                           const VectorR& x) {
  OperatorCoefficients op;
  op.u = field_value(vc.u, length, x);
  op.du.resize(d);
  op.v.resize(d);
  for (int r = 0; r < d; ++r) {
    op.du[r] = field_derivative(vc.u, length, x, r);
    op.v[r] = op.du[r];
  }
  op.ddu.assign(d, std::vector<MatrixC>(d));
  op.dv.assign(d, std::vector<MatrixC>(d));
  for (int r = 0; r < d; ++r) {
    for (int s = 0; s < d; ++s) {
      op.ddu[r][s] = field_second_derivative(vc.u, length, x, r, s);
      op.dv[r][s] = op.ddu[r][s];
    }
  }
  op.w = field_value(vc.w, length, x);
  return op;
}

}  // namespace

double torus_a0_integral(const TorusModel& model, int grid_per_axis) {
  check_model_frame(model);
  require(grid_per_axis >= 1, "torus_a0_integral: grid must be positive");
  const double volume = std::pow(model.length, model.d);
  if (const auto* cc = std::get_if<ConstantCoefficients>(&model.coefficients)) {
    check_constant(*cc, model.d);
    return volume * a0_local(flat_torus_jet(model.d), cc->u);
  }
  const auto& vc = std::get<VaryingCoefficients>(model.coefficients);
  require(model.d == 2, "torus_a0_integral: varying fields require d = 2");
  const PointJet jet = flat_torus_jet(2);
  const double cell = std::pow(model.length / grid_per_axis, 2);
  double total = 0.0;
  for (int i = 0; i < grid_per_axis; ++i) {
    for (int j = 0; j < grid_per_axis; ++j) {
      VectorR x(2);
      x << model.length * i / grid_per_axis,
          model.length * j / grid_per_axis;
      total += cell * a0_local(jet, field_value(vc.u, model.length, x));
    }
  }
  return total;
}

Complex torus_a1_integral(const TorusModel& model, int grid_per_axis) {
  check_model_frame(model);
  require(grid_per_axis >= 1, "torus_a1_integral: grid must be positive");
  const double volume = std::pow(model.length, model.d);
  if (const auto* cc = std::get_if<ConstantCoefficients>(&model.coefficients)) {
    check_constant(*cc, model.d);
    OperatorCoefficients op;
    const int n = static_cast<int>(cc->u.rows());
    op.u = cc->u;
    op.du.assign(model.d, MatrixC::Zero(n, n));
    op.ddu.assign(model.d,
                  std::vector<MatrixC>(model.d, MatrixC::Zero(n, n)));
    op.v = cc->v;
    op.dv.assign(model.d, std::vector<MatrixC>(model.d, MatrixC::Zero(n, n)));
    op.w = cc->w;
    return volume * a1_local_pipeline(flat_torus_jet(model.d), op);
  }
  const auto& vc = std::get<VaryingCoefficients>(model.coefficients);
  require(model.d == 2, "torus_a1_integral: varying fields require d = 2");
  const PointJet jet = flat_torus_jet(2);
  const double cell = std::pow(model.length / grid_per_axis, 2);
  Complex total = 0.0;
  for (int i = 0; i < grid_per_axis; ++i) {
    for (int j = 0; j < grid_per_axis; ++j) {
      VectorR x(2);
      x << model.length * i / grid_per_axis,
          model.length * j / grid_per_axis;
      total += cell * a1_local_pipeline(
                          jet, local_divergence_form(vc, 2, model.length, x));
    }
  }
  return total;
}

}  // namespace heattrace
